#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "lss/integrator.hpp"
#include "lss/measures.hpp"
#include "lss/model.hpp"
#include "lss/switching.hpp"

namespace lss {

enum class Verdict { kPass, kFail, kInconclusive };

std::string to_string(Verdict v);

/// One row of the long-format experiment CSV.
struct PointStat {
  std::string point_id;
  std::string statistic;
  double value = 0.0;
  double se = 0.0;
  double bound = 0.0;
};

struct ExperimentReport {
  std::string name;
  nlohmann::json parameters = nlohmann::json::object();
  std::vector<PointStat> points;
  nlohmann::json summary = nlohmann::json::object();
  Verdict verdict = Verdict::kFail;
  std::vector<std::string> notes;
  double wall_clock_seconds = 0.0;
};

/// Knobs shared by the experiments that compare measures with the dl estimator.
struct DlOptions {
  std::size_t random_features = 256;
  int floor_permutations = 200;
  /// Family-wise level of the noise floor.
  double floor_level = 0.95;
  /// Lag or horizon by which the floor must be reached; defaults to 8/γ.
  std::optional<double> horizon_limit;
  /// Depth of the pullback used to approximate μ_t; defaults to reference_lag().
  std::optional<double> reference_lag;
};

struct NoiseFloor {
  double value = 0.0;
  double quantile = 0.0;
  int comparisons = 1;
  double null_median = 0.0;
};

/**
 * Noise floor of the dl estimator from two independent estimates of the same
 * measure. The pooled samples are re-split at random `permutations` times;
 * the floor is the 0.95^(1/comparisons) quantile (for level 0.95) of the
 * resulting null dl values, and never less than 1e-9.
 */
NoiseFloor calibrate_noise_floor(const EmpiricalMeasure& first,
                                 const EmpiricalMeasure& second,
                                 const TestFunctionDictionary& dict, int comparisons,
                                 int permutations, std::uint64_t seed,
                                 double level = 0.95);

/// Pullback depth L with e^(−γL)·max(‖ξ‖², 1) < 1e-6.
double reference_lag(const ConditionReport& report, std::span<const double> xi);

/// Ensemble approximating P*_{t−lag,t}δ_start; lag 0 gives the Dirac cloud.
EmpiricalMeasure pullback_measure(const ModelSpec& spec, const SimConfig& cfg,
                                  const LatticeState& start, double t, double lag,
                                  std::uint64_t tag);

ExperimentReport exp_energy_bound(const ModelSpec& spec, const SimConfig& cfg,
                                  std::span<const double> xi, int j0,
                                  std::span<const double> sample_times);

ExperimentReport exp_contraction(const ModelSpec& spec, const SimConfig& cfg,
                                 std::span<const double> xi1, std::span<const double> xi2,
                                 int j0, std::span<const double> sample_times);

struct TailOptions {
  /// If set, the largest cut level must keep the tail mass below eta.
  std::optional<double> eta;
};

ExperimentReport exp_tail(const ModelSpec& spec, const SimConfig& cfg,
                          std::span<const double> xi, int j0, std::span<const int> cut_levels,
                          std::span<const double> sample_times, const TailOptions& opts = {});

ExperimentReport exp_pullback(const ModelSpec& spec, const SimConfig& cfg, double t_fixed,
                              std::span<const double> pullback_lags,
                              std::span<const LatticeState> starts,
                              const DlOptions& opts = {});

ExperimentReport exp_forward(const ModelSpec& spec, const SimConfig& cfg, double s_fixed,
                             std::span<const double> horizons,
                             std::span<const LatticeState> starts, bool warm_start = false,
                             const DlOptions& opts = {});

ExperimentReport exp_periodic(const ModelSpec& spec, const SimConfig& cfg,
                              std::span<const double> t_grid, const LatticeState& start,
                              const DlOptions& opts = {});

ExperimentReport exp_eps_sweep(const ModelSpec& spec, const SimConfig& cfg,
                               std::span<const double> eps_list, double eps0, double t_fixed,
                               const LatticeState& start, std::span<const int> cut_levels = {},
                               const DlOptions& opts = {});

struct CouplingOptions {
  /// Target for the reported T with P{τ ≤ T} ≥ 1 − eta.
  double eta = 0.05;
  std::optional<double> horizon;
};

ExperimentReport exp_chain_coupling(const GeneratorMatrix& generator,
                                    std::span<const std::pair<int, int>> pairs,
                                    std::span<const double> t_grid, int samples,
                                    std::uint64_t seed, const CouplingOptions& opts = {});

}  // namespace lss
