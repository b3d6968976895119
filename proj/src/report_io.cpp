#include "lss/report_io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "lss/error.hpp"

namespace lss {
namespace {

void site_header(std::ostream& out, int radius) {
  for (int i = -radius; i <= radius; ++i) out << ",site_" << i;
  out << '\n';
}

void site_values(std::ostream& out, std::span<const double> values) {
  for (double x : values) out << ',' << format_number(x);
  out << '\n';
}

/// CSV field quoting for ids that may contain commas.
std::string quoted(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

nlohmann::json estimate_json(const Estimate& e) { return {{"value", e.value}, {"se", e.se}}; }

}  // namespace

std::string format_number(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

void write_trajectory_csv(std::ostream& out, const Trajectory& traj, int radius) {
  out << "time,regime";
  site_header(out, radius);
  for (std::size_t i = 0; i < traj.times.size(); ++i) {
    out << format_number(traj.times[i]) << ',' << traj.states[i].regime;
    site_values(out, traj.states[i].values);
  }
}

void write_ensemble_csv(std::ostream& out, std::span<const LatticeState> states, int radius) {
  out << "trajectory_index,regime";
  site_header(out, radius);
  for (std::size_t m = 0; m < states.size(); ++m) {
    out << m << ',' << states[m].regime;
    site_values(out, states[m].values);
  }
}

void write_report_csv(std::ostream& out, const ExperimentReport& report) {
  out << "point_id,statistic,value,se,bound\n";
  for (const PointStat& p : report.points)
    out << quoted(p.point_id) << ',' << p.statistic << ',' << format_number(p.value) << ','
        << format_number(p.se) << ',' << format_number(p.bound) << '\n';
}

nlohmann::json report_to_json(const ExperimentReport& report) {
  nlohmann::json points = nlohmann::json::array();
  for (const PointStat& p : report.points)
    points.push_back({{"point_id", p.point_id},
                      {"statistic", p.statistic},
                      {"value", p.value},
                      {"se", p.se},
                      {"bound", p.bound}});
  return {{"name", report.name},
          {"verdict", to_string(report.verdict)},
          {"parameters", report.parameters},
          {"summary", report.summary},
          {"points", points},
          {"notes", report.notes},
          {"wall_clock_seconds", report.wall_clock_seconds}};
}

nlohmann::json measure_summary(const EmpiricalMeasure& mu, int regimes,
                               std::span<const int> cut_levels) {
  const MomentSummary m = moments(mu, regimes);
  nlohmann::json site_mean = nlohmann::json::array();
  nlohmann::json site_second = nlohmann::json::array();
  for (const Estimate& e : m.site_mean) site_mean.push_back(estimate_json(e));
  for (const Estimate& e : m.site_second_moment) site_second.push_back(estimate_json(e));
  nlohmann::json freq = nlohmann::json::array();
  for (const Estimate& e : m.regime_frequency) freq.push_back(estimate_json(e));
  nlohmann::json tails = nlohmann::json::array();
  for (int c : cut_levels) {
    nlohmann::json row = estimate_json(tail_mass_estimate(mu, c));
    row["n0"] = c;
    tails.push_back(row);
  }
  return {{"samples", mu.size()},
          {"mean_sq_norm", estimate_json(m.mean_sq_norm)},
          {"site_mean", site_mean},
          {"site_second_moment", site_second},
          {"regime_frequency", freq},
          {"tail_mass", tails}};
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  out << text;
  if (!out) throw Error("write failed for '" + path.string() + "'");
}

}  // namespace lss
