#include "lss/integrator.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "lss/error.hpp"
#include "lss/parallel.hpp"

namespace lss {
namespace {

constexpr double kBlowUpNormSquared = 1e24;  // ‖u‖ > 1e12

/// Sorted, de-duplicated times in (s, t_end]; throws if any lies outside [s, t_end].
std::vector<double> normalized_samples(const SimConfig& cfg,
                                       std::span<const double> sample_times) {
  std::vector<double> out;
  out.reserve(sample_times.size() + 1);
  for (double t : sample_times) {
    if (!(t >= cfg.s && t <= cfg.t_end))
      throw ValidationError({"sample time " + std::to_string(t) + " outside [s, t_end]"});
    if (t > cfg.s) out.push_back(t);
  }
  out.push_back(cfg.t_end);
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

/**
 * Advances every vector in `bundle` from cfg.s to cfg.t_end along `path`.
 * All members share the regime path and the Wiener increments. `record(t)`
 * fires after the sub-step that lands on each entry of `samples`.
 */
template <class Noise, class Record>
void integrate(const ModelSpec& spec, const SimConfig& cfg, const SwitchPath& path,
               Noise&& noise, std::span<Vector> bundle,
               const std::vector<double>& samples, Record&& record,
               const StepObserver& observer) {
  const int sites = spec.sites();
  const int modes = spec.noise_modes;
  const bool noisy = spec.epsilon != 0.0;

  std::vector<double> breakpoints;
  breakpoints.reserve(path.jumps.size() + samples.size());
  for (const auto& jump : path.jumps)
    if (jump.time > cfg.s && jump.time < cfg.t_end) breakpoints.push_back(jump.time);
  for (double t : samples)
    if (t < cfg.t_end) breakpoints.push_back(t);
  std::sort(breakpoints.begin(), breakpoints.end());

  const double length = cfg.t_end - cfg.s;
  const auto nodes =
      std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(length / cfg.dt - 1e-9)));

  Vector drift_buf(sites);
  Vector noise_buf(sites);
  Vector weights(modes);
  std::size_t next_break = 0;
  std::size_t next_sample = 0;
  std::size_t step = 0;
  double current = cfg.s;

  for (std::size_t node = 1; node <= nodes; ++node) {
    const double node_end =
        node == nodes ? cfg.t_end : cfg.s + static_cast<double>(node) * cfg.dt;
    while (current < node_end) {
      while (next_break < breakpoints.size() && breakpoints[next_break] <= current)
        ++next_break;
      const double next = next_break < breakpoints.size() &&
                                  breakpoints[next_break] < node_end
                              ? breakpoints[next_break]
                              : node_end;
      const int regime = path.regime_at(current);
      const double h = next - current;
      if (noisy) noise(current, h, std::span<double>(weights));
      for (Vector& u : bundle) {
        drift_into(spec, current, u, regime, drift_buf);
        if (noisy) {
          noise_combination_into(spec, current, u, regime, weights, noise_buf);
          for (int p = 0; p < sites; ++p) u[p] += drift_buf[p] * h + noise_buf[p];
        } else {
          for (int p = 0; p < sites; ++p) u[p] += drift_buf[p] * h;
        }
        double norm2 = 0.0;
        for (double x : u) norm2 += x * x;
        if (!(norm2 <= kBlowUpNormSquared)) throw BlowUpError(step, next);
      }
      if (observer) observer(current, h, regime);
      ++step;
      current = next;
      while (next_sample < samples.size() && samples[next_sample] <= current) {
        record(samples[next_sample]);
        ++next_sample;
      }
    }
  }
}

void check_initial(const ModelSpec& spec, std::span<const double> xi, int j0) {
  if (static_cast<int>(xi.size()) != spec.sites())
    throw DimensionError("initial vector has " + std::to_string(xi.size()) +
                         " entries, expected " + std::to_string(spec.sites()));
  if (j0 < 0 || j0 >= spec.regimes())
    throw DimensionError("initial regime " + std::to_string(j0) + " outside [0, " +
                         std::to_string(spec.regimes()) + ")");
}

SwitchPath trajectory_path(const ModelSpec& spec, const SimConfig& cfg, int j0,
                           std::uint64_t tag, std::uint64_t index) {
  RandomStream rng(cfg.seed, tag, index, Substream::kSwitching);
  return sample_path(spec.generator, j0, cfg.s, cfg.t_end, rng);
}

/// Independent N(0, h) increments from a stream.
auto stream_increments(RandomStream& stream) {
  return [&stream](double, double h, std::span<double> dw) {
    const double root_h = std::sqrt(h);
    for (double& w : dw) w = stream.normal() * root_h;
  };
}

}  // namespace

void check_config(const SimConfig& cfg) {
  std::vector<std::string> bad;
  if (!(cfg.dt > 0.0) || !std::isfinite(cfg.dt)) bad.emplace_back("dt must be positive");
  if (!(cfg.s < cfg.t_end)) bad.emplace_back("s must be less than t_end");
  if (cfg.dt > cfg.t_end - cfg.s) bad.emplace_back("dt must not exceed t_end - s");
  if (cfg.n_traj < 1) bad.emplace_back("n_traj must be at least 1");
  if (!bad.empty()) throw ValidationError(std::move(bad));
}

double default_dt(const ModelSpec& spec) {
  return 1e-3 * std::min(1.0, 1.0 / (4.0 * spec.nu + spec.lambda_max()));
}

Trajectory simulate_with_increments(const ModelSpec& spec, const SimConfig& cfg,
                                   std::span<const double> xi, const SwitchPath& path,
                                   const IncrementSource& increments,
                                   std::span<const double> sample_times,
                                   const StepObserver& observer) {
  check_structure(spec);
  check_config(cfg);
  check_initial(spec, xi, path.initial_state);

  Trajectory out;
  out.path = path;
  Vector u(xi.begin(), xi.end());
  out.times.push_back(cfg.s);
  out.states.push_back({u, path.regime_at(cfg.s)});
  const auto samples = normalized_samples(cfg, sample_times);
  std::span<Vector> bundle(&u, 1);
  integrate(
      spec, cfg, path, increments, bundle, samples,
      [&](double t) {
        out.times.push_back(t);
        out.states.push_back({u, path.regime_at(t)});
      },
      observer);
  return out;
}

Trajectory simulate_on_path(const ModelSpec& spec, const SimConfig& cfg,
                            std::span<const double> xi, const SwitchPath& path,
                            RandomStream& noise, std::span<const double> sample_times,
                            const StepObserver& observer) {
  return simulate_with_increments(spec, cfg, xi, path, stream_increments(noise),
                                  sample_times, observer);
}

Trajectory simulate(const ModelSpec& spec, const SimConfig& cfg, std::span<const double> xi,
                    int j0, std::span<const double> sample_times,
                    const StepObserver& observer) {
  check_structure(spec);
  check_config(cfg);
  check_initial(spec, xi, j0);
  const SwitchPath path = trajectory_path(spec, cfg, j0, kTrajectoryTag, 0);
  RandomStream noise(cfg.seed, kTrajectoryTag, 0, Substream::kNoise);
  return simulate_on_path(spec, cfg, xi, path, noise, sample_times, observer);
}

std::pair<Trajectory, Trajectory> simulate_pair_synchronous(
    const ModelSpec& spec, const SimConfig& cfg, std::span<const double> xi1,
    std::span<const double> xi2, int j0, std::span<const double> sample_times,
    PairNoise noise) {
  check_structure(spec);
  check_config(cfg);
  check_initial(spec, xi1, j0);
  check_initial(spec, xi2, j0);

  if (noise == PairNoise::kIndependent) {
    const std::uint64_t tag = stream_tag("independent-pair");
    auto one = [&](std::span<const double> xi, std::uint64_t index) {
      const SwitchPath path = trajectory_path(spec, cfg, j0, tag, index);
      RandomStream stream(cfg.seed, tag, index, Substream::kNoise);
      return simulate_on_path(spec, cfg, xi, path, stream, sample_times);
    };
    return {one(xi1, 0), one(xi2, 1)};
  }

  const SwitchPath path = trajectory_path(spec, cfg, j0, kTrajectoryTag, 0);
  RandomStream stream(cfg.seed, kTrajectoryTag, 0, Substream::kNoise);
  Trajectory first;
  Trajectory second;
  first.path = second.path = path;
  std::vector<Vector> bundle{Vector(xi1.begin(), xi1.end()), Vector(xi2.begin(), xi2.end())};
  auto record = [&](double t) {
    const int regime = path.regime_at(t);
    first.times.push_back(t);
    first.states.push_back({bundle[0], regime});
    second.times.push_back(t);
    second.states.push_back({bundle[1], regime});
  };
  record(cfg.s);
  integrate(spec, cfg, path, stream_increments(stream), std::span<Vector>(bundle),
            normalized_samples(cfg, sample_times), record, {});
  return {std::move(first), std::move(second)};
}

std::vector<std::vector<LatticeState>> run_ensemble_snapshots(
    const ModelSpec& spec, const SimConfig& cfg, std::span<const LatticeState> initial,
    std::span<const double> times, std::uint64_t tag) {
  check_structure(spec);
  check_config(cfg);
  const auto count = static_cast<std::size_t>(cfg.n_traj);
  if (initial.size() != 1 && initial.size() != count)
    throw DimensionError("ensemble needs one initial state or one per trajectory");
  for (const auto& st : initial) check_initial(spec, st.values, st.regime);
  if (!std::is_sorted(times.begin(), times.end()))
    throw ValidationError({"snapshot times must be sorted"});
  for (double t : times)
    if (!(t >= cfg.s && t <= cfg.t_end))
      throw ValidationError({"snapshot time " + std::to_string(t) + " outside [s, t_end]"});

  std::vector<std::vector<LatticeState>> out(times.size(),
                                             std::vector<LatticeState>(count));
  const std::vector<double> samples(times.begin(), times.end());
  const auto integrate_samples = normalized_samples(cfg, times);

  parallel_for(count, cfg.workers, [&](std::size_t m) {
    const LatticeState& start = initial.size() == 1 ? initial[0] : initial[m];
    const SwitchPath path = trajectory_path(spec, cfg, start.regime, tag, m);
    RandomStream noise(cfg.seed, tag, m, Substream::kNoise);
    Vector u = start.values;
    std::size_t slot = 0;
    auto store = [&](double t) {
      while (slot < samples.size() && samples[slot] <= t) {
        if (samples[slot] == t) out[slot][m] = {u, path.regime_at(t)};
        ++slot;
      }
    };
    store(cfg.s);
    try {
      integrate(spec, cfg, path, stream_increments(noise), std::span<Vector>(&u, 1),
                integrate_samples, store,
                {});
    } catch (const BlowUpError& e) {
      throw BlowUpError(e.step(), e.time(), static_cast<long>(m));
    }
  });
  return out;
}

std::vector<LatticeState> run_ensemble(const ModelSpec& spec, const SimConfig& cfg,
                                       std::span<const double> xi, int j0,
                                       std::uint64_t tag) {
  check_structure(spec);
  check_initial(spec, xi, j0);
  const LatticeState start{Vector(xi.begin(), xi.end()), j0};
  const double end = cfg.t_end;
  auto snaps = run_ensemble_snapshots(spec, cfg, std::span(&start, 1),
                                      std::span(&end, 1), tag);
  return std::move(snaps.front());
}

std::vector<std::vector<double>> run_pair_distances(const ModelSpec& spec,
                                                    const SimConfig& cfg,
                                                    std::span<const double> xi1,
                                                    std::span<const double> xi2, int j0,
                                                    std::span<const double> times,
                                                    std::uint64_t tag) {
  check_structure(spec);
  check_config(cfg);
  check_initial(spec, xi1, j0);
  check_initial(spec, xi2, j0);
  if (!std::is_sorted(times.begin(), times.end()))
    throw ValidationError({"sample times must be sorted"});
  for (double t : times)
    if (!(t >= cfg.s && t <= cfg.t_end))
      throw ValidationError({"sample time " + std::to_string(t) + " outside [s, t_end]"});

  const auto count = static_cast<std::size_t>(cfg.n_traj);
  std::vector<std::vector<double>> out(times.size(), std::vector<double>(count));
  const std::vector<double> samples(times.begin(), times.end());
  const auto integrate_samples = normalized_samples(cfg, times);

  parallel_for(count, cfg.workers, [&](std::size_t m) {
    const SwitchPath path = trajectory_path(spec, cfg, j0, tag, m);
    RandomStream noise(cfg.seed, tag, m, Substream::kNoise);
    std::vector<Vector> bundle{Vector(xi1.begin(), xi1.end()),
                               Vector(xi2.begin(), xi2.end())};
    std::size_t slot = 0;
    auto store = [&](double t) {
      while (slot < samples.size() && samples[slot] <= t) {
        if (samples[slot] == t) {
          double d2 = 0.0;
          for (std::size_t p = 0; p < bundle[0].size(); ++p) {
            const double d = bundle[0][p] - bundle[1][p];
            d2 += d * d;
          }
          out[slot][m] = d2;
        }
        ++slot;
      }
    };
    store(cfg.s);
    try {
      integrate(spec, cfg, path, stream_increments(noise), std::span<Vector>(bundle), integrate_samples, store,
                {});
    } catch (const BlowUpError& e) {
      throw BlowUpError(e.step(), e.time(), static_cast<long>(m));
    }
  });
  return out;
}

}  // namespace lss
