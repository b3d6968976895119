#include "lss/error.hpp"

#include <sstream>

namespace lss {
namespace {

std::string join(const std::vector<std::string>& items) {
  std::ostringstream os;
  os << "validation failed:";
  for (const auto& item : items) os << "\n  - " << item;
  return os.str();
}

std::string blow_up_message(std::size_t step, double time, long trajectory) {
  std::ostringstream os;
  os << "numerical blow-up (|u| > 1e12 or non-finite) at step " << step << ", t = " << time;
  if (trajectory >= 0) os << ", trajectory " << trajectory;
  return os.str();
}

}  // namespace

ValidationError::ValidationError(std::vector<std::string> violations)
    : Error(join(violations)), violations_(std::move(violations)) {}

BlowUpError::BlowUpError(std::size_t step, double time, long trajectory)
    : Error(blow_up_message(step, time, trajectory)),
      step_(step),
      time_(time),
      trajectory_(trajectory) {}

}  // namespace lss
