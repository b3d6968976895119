#pragma once

#include <filesystem>
#include <ostream>
#include <span>
#include <string>

#include <json.hpp>

#include "lss/experiments.hpp"
#include "lss/integrator.hpp"
#include "lss/measures.hpp"

namespace lss {

/// Shortest round-trip text for a double ("%.17g"); inf/nan spelled out.
std::string format_number(double x);

/// Columns: time, regime, site_-n … site_n.
void write_trajectory_csv(std::ostream& out, const Trajectory& traj, int radius);
/// Columns: trajectory_index, regime, site_-n … site_n.
void write_ensemble_csv(std::ostream& out, std::span<const LatticeState> states, int radius);
/// Columns: point_id, statistic, value, se, bound.
void write_report_csv(std::ostream& out, const ExperimentReport& report);

nlohmann::json report_to_json(const ExperimentReport& report);

/// Moments and tail masses at the given cut levels.
nlohmann::json measure_summary(const EmpiricalMeasure& mu, int regimes,
                               std::span<const int> cut_levels);

/// Writes text to path, creating parent directories; throws Error on failure.
void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace lss
