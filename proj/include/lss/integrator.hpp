#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <utility>
#include <vector>

#include "lss/model.hpp"
#include "lss/rng.hpp"
#include "lss/switching.hpp"

namespace lss {

struct SimConfig {
  double dt = 1e-3;
  double s = 0.0;
  double t_end = 1.0;
  std::uint64_t seed = 42;
  int n_traj = 1;
  /// Thread count for ensembles; never changes any output bit.
  int workers = 1;
};

/// Throws ValidationError unless dt > 0, s < t_end, dt ≤ t_end − s, n_traj ≥ 1.
void check_config(const SimConfig& cfg);

/// 1e-3 · min(1, 1/(4ν + λ_max)).
double default_dt(const ModelSpec& spec);

/// Default stream tag; run_ensemble with this tag reproduces simulate() at index 0.
inline constexpr std::uint64_t kTrajectoryTag = stream_tag("trajectory");

struct Trajectory {
  std::vector<double> times;
  std::vector<LatticeState> states;
  SwitchPath path;
};

/// Called once per Euler-Maruyama sub-step with (start time, length, regime).
using StepObserver = std::function<void(double, double, int)>;

enum class PairNoise {
  kSynchronous,  // shared switching path and Wiener increments
  kIndependent,  // independent paths and increments; only the laws match
};

/**
 * Explicit Euler-Maruyama from (cfg.s, xi, j0) to cfg.t_end. Steps of length
 * cfg.dt are split at every switching time and every requested sample time,
 * so no sub-step spans a regime change. States are recorded at cfg.s, at each
 * sample time in (s, t_end], and at t_end.
 */
Trajectory simulate(const ModelSpec& spec, const SimConfig& cfg, std::span<const double> xi,
                    int j0, std::span<const double> sample_times = {},
                    const StepObserver& observer = {});

/// Same scheme driven by a given switching path and noise stream.
Trajectory simulate_on_path(const ModelSpec& spec, const SimConfig& cfg,
                            std::span<const double> xi, const SwitchPath& path,
                            RandomStream& noise, std::span<const double> sample_times = {},
                            const StepObserver& observer = {});

/// Fills dW (one entry per noise mode) with the Wiener increments over [t, t+h].
using IncrementSource = std::function<void(double t, double h, std::span<double> dW)>;

/// Same scheme with caller-supplied increments, e.g. to reuse one Brownian
/// path at several step sizes.
Trajectory simulate_with_increments(const ModelSpec& spec, const SimConfig& cfg,
                                   std::span<const double> xi, const SwitchPath& path,
                                   const IncrementSource& increments,
                                   std::span<const double> sample_times = {},
                                   const StepObserver& observer = {});

std::pair<Trajectory, Trajectory> simulate_pair_synchronous(
    const ModelSpec& spec, const SimConfig& cfg, std::span<const double> xi1,
    std::span<const double> xi2, int j0, std::span<const double> sample_times = {},
    PairNoise noise = PairNoise::kSynchronous);

/// Terminal states of cfg.n_traj trajectories in trajectory-index order.
std::vector<LatticeState> run_ensemble(const ModelSpec& spec, const SimConfig& cfg,
                                       std::span<const double> xi, int j0,
                                       std::uint64_t tag = kTrajectoryTag);

/**
 * Ensemble snapshots: result[time][trajectory]. `initial` holds either one
 * start shared by every trajectory or exactly cfg.n_traj starts.
 */
std::vector<std::vector<LatticeState>> run_ensemble_snapshots(
    const ModelSpec& spec, const SimConfig& cfg, std::span<const LatticeState> initial,
    std::span<const double> times, std::uint64_t tag);

/// Squared distances ‖u₁ − u₂‖² of synchronous pairs: result[time][pair].
std::vector<std::vector<double>> run_pair_distances(const ModelSpec& spec,
                                                    const SimConfig& cfg,
                                                    std::span<const double> xi1,
                                                    std::span<const double> xi2, int j0,
                                                    std::span<const double> times,
                                                    std::uint64_t tag);

}  // namespace lss
