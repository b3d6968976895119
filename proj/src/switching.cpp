#include "lss/switching.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <string>

#include <unsupported/Eigen/MatrixFunctions>

#include "lss/error.hpp"

namespace lss {

GeneratorMatrix::GeneratorMatrix(Eigen::MatrixXd rates) : rates_(std::move(rates)) {}

GeneratorMatrix GeneratorMatrix::from_rows(
    const std::vector<std::vector<double>>& rows) {
  const auto n = static_cast<Eigen::Index>(rows.size());
  Eigen::MatrixXd m(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (static_cast<Eigen::Index>(rows[i].size()) != n)
      throw GeneratorError("generator must be square: row " + std::to_string(i) +
                           " has " + std::to_string(rows[i].size()) +
                           " entries, expected " + std::to_string(n));
    for (Eigen::Index j = 0; j < n; ++j) m(i, j) = rows[i][j];
  }
  return GeneratorMatrix(std::move(m));
}

std::optional<double> GeneratorMatrix::min_positive_rate() const {
  std::optional<double> best;
  for (int i = 0; i < states(); ++i)
    for (int j = 0; j < states(); ++j)
      if (i != j && rates_(i, j) > 0.0 && (!best || rates_(i, j) < *best))
        best = rates_(i, j);
  return best;
}

bool GeneratorMatrix::irreducible() const {
  const int n = states();
  if (n == 0) return false;
  // Strong connectivity: every state reaches 0 and is reached from 0.
  auto reach_all = [&](bool transpose) {
    std::vector<char> seen(n, 0);
    std::vector<int> stack{0};
    seen[0] = 1;
    while (!stack.empty()) {
      const int i = stack.back();
      stack.pop_back();
      for (int j = 0; j < n; ++j) {
        const double r = transpose ? rates_(j, i) : rates_(i, j);
        if (j != i && r > 0.0 && !seen[j]) {
          seen[j] = 1;
          stack.push_back(j);
        }
      }
    }
    return std::all_of(seen.begin(), seen.end(), [](char c) { return c != 0; });
  };
  return reach_all(false) && reach_all(true);
}

std::vector<std::vector<double>> GeneratorMatrix::rows() const {
  std::vector<std::vector<double>> out(states(), std::vector<double>(states()));
  for (int i = 0; i < states(); ++i)
    for (int j = 0; j < states(); ++j) out[i][j] = rates_(i, j);
  return out;
}

void validate_generator(const GeneratorMatrix& generator) {
  const auto& m = generator.matrix();
  if (m.rows() == 0) throw GeneratorError("generator must have at least one state");
  if (m.rows() != m.cols()) throw GeneratorError("generator must be square");
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    double sum = 0.0;
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (!std::isfinite(m(i, j)))
        throw GeneratorError("generator entry (" + std::to_string(i) + "," +
                             std::to_string(j) + ") is not finite");
      if (i != j && m(i, j) < 0.0) {
        std::ostringstream os;
        os << "negative off-diagonal rate r_" << i << j << " = " << m(i, j);
        throw GeneratorError(os.str());
      }
      sum += m(i, j);
    }
    if (std::abs(sum) > 1e-12) {
      std::ostringstream os;
      os << "row " << i << " sums to " << sum << ", expected 0";
      throw GeneratorError(os.str());
    }
  }
}

int SwitchPath::regime_at(double t) const {
  // Last jump with time <= t.
  auto it = std::upper_bound(jumps.begin(), jumps.end(), t,
                             [](double v, const Jump& j) { return v < j.time; });
  return it == jumps.begin() ? initial_state : std::prev(it)->state;
}

namespace {

int next_state(const GeneratorMatrix& g, int from, double exit, RandomStream& rng) {
  double target = rng.uniform() * exit;
  int last_positive = from;
  for (int j = 0; j < g.states(); ++j) {
    if (j == from || g.rate(from, j) <= 0.0) continue;
    last_positive = j;
    target -= g.rate(from, j);
    if (target < 0.0) return j;
  }
  return last_positive;  // round-off guard
}

}  // namespace

SwitchPath sample_path(const GeneratorMatrix& generator, int initial_state,
                       double start, double end, RandomStream& rng) {
  validate_generator(generator);
  if (initial_state < 0 || initial_state >= generator.states())
    throw GeneratorError("initial state " + std::to_string(initial_state) +
                         " outside state space");
  if (!(start < end)) throw GeneratorError("sample_path requires start < end");

  SwitchPath path{start, end, initial_state, {}};
  int state = initial_state;
  // Holding times accumulate from zero so the draws do not depend on start.
  double elapsed = 0.0;
  const double length = end - start;
  while (true) {
    const double exit = generator.exit_rate(state);
    if (exit <= 0.0) break;  // absorbing
    elapsed += rng.exponential(exit);
    if (elapsed > length) break;
    state = next_state(generator, state, exit, rng);
    path.jumps.push_back({start + elapsed, state});
  }
  return path;
}

double default_coupling_horizon(const GeneratorMatrix& generator) {
  const auto rate = generator.min_positive_rate();
  if (!rate) return std::numeric_limits<double>::infinity();
  return 100.0 / *rate;
}

CouplingTime coupling_time(const GeneratorMatrix& generator, int first, int second,
                           RandomStream& rng, std::optional<double> horizon) {
  validate_generator(generator);
  const int n = generator.states();
  if (first < 0 || first >= n || second < 0 || second >= n)
    throw GeneratorError("coupling_time: state outside state space");
  if (first == second) return {0.0, false};

  const double limit = horizon.value_or(default_coupling_horizon(generator));
  // Two independent chains evolve as one product chain: the next event comes
  // at the sum of the exit rates and belongs to either chain in proportion.
  int a = first;
  int b = second;
  double t = 0.0;
  while (a != b) {
    const double qa = generator.exit_rate(a);
    const double qb = generator.exit_rate(b);
    const double total = qa + qb;
    if (total <= 0.0) return {limit, true};
    t += rng.exponential(total);
    if (t > limit) return {limit, true};
    if (rng.uniform() * total < qa)
      a = next_state(generator, a, qa, rng);
    else
      b = next_state(generator, b, qb, rng);
  }
  return {t, false};
}

Eigen::VectorXd stationary_distribution(const GeneratorMatrix& generator) {
  validate_generator(generator);
  if (!generator.irreducible())
    throw GeneratorError("stationary_distribution: generator is reducible, "
                         "stationary system is singular");
  const int n = generator.states();
  // Γᵀπ = 0 with the last equation replaced by Σπ = 1.
  Eigen::MatrixXd system = generator.matrix().transpose();
  system.row(n - 1).setOnes();
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n);
  rhs(n - 1) = 1.0;
  Eigen::FullPivLU<Eigen::MatrixXd> lu(system);
  if (!lu.isInvertible())
    throw GeneratorError("stationary_distribution: singular system");
  Eigen::VectorXd pi = lu.solve(rhs);
  pi /= pi.sum();
  return pi;
}

double coupling_cdf(const GeneratorMatrix& generator, int first, int second,
                    double horizon) {
  validate_generator(generator);
  const int n = generator.states();
  if (first < 0 || first >= n || second < 0 || second >= n)
    throw GeneratorError("coupling_cdf: state outside state space");
  if (first == second) return 1.0;
  if (horizon <= 0.0) return 0.0;

  // Index the off-diagonal pairs; the diagonal is absorbing and dropped.
  std::vector<int> index(n * n, -1);
  int count = 0;
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b)
      if (a != b) index[a * n + b] = count++;

  Eigen::MatrixXd q = Eigen::MatrixXd::Zero(count, count);
  for (int a = 0; a < n; ++a) {
    for (int b = 0; b < n; ++b) {
      if (a == b) continue;
      const int row = index[a * n + b];
      q(row, row) = -(generator.exit_rate(a) + generator.exit_rate(b));
      for (int c = 0; c < n; ++c) {
        if (c == a) continue;
        if (c != b) q(row, index[c * n + b]) += generator.rate(a, c);
      }
      for (int c = 0; c < n; ++c) {
        if (c == b) continue;
        if (c != a) q(row, index[a * n + c]) += generator.rate(b, c);
      }
    }
  }
  const Eigen::MatrixXd transition = (q * horizon).exp();
  const double survive = transition.row(index[first * n + second]).sum();
  return std::clamp(1.0 - survive, 0.0, 1.0);
}

}  // namespace lss
