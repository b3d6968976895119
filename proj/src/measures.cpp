#include "lss/measures.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "lss/error.hpp"

namespace lss {
namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

double norm(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

constexpr double kCertificateSlack = 1e-12;

}  // namespace

EmpiricalMeasure EmpiricalMeasure::from_states(std::span<const LatticeState> states) {
  if (states.empty()) throw DimensionError("empirical measure needs at least one sample");
  EmpiricalMeasure mu(static_cast<int>(states.front().values.size()));
  for (const auto& s : states) mu.add(s.values, s.regime);
  return mu;
}

void EmpiricalMeasure::add(std::span<const double> x, int regime) {
  if (static_cast<int>(x.size()) != dim_)
    throw DimensionError("sample has " + std::to_string(x.size()) +
                         " coordinates, measure has " + std::to_string(dim_));
  data_.insert(data_.end(), x.begin(), x.end());
  regimes_.push_back(regime);
}

std::vector<LatticeState> EmpiricalMeasure::states() const {
  std::vector<LatticeState> out(size());
  for (std::size_t m = 0; m < size(); ++m) {
    const auto p = point(m);
    out[m] = {Vector(p.begin(), p.end()), regimes_[m]};
  }
  return out;
}

// ---------------------------------------------------------------------------

double TestFunction::operator()(std::span<const double> x, int regime) const {
  return std::visit(
      Overloaded{
          [&](const CosineFeature& f) {
            const double phase =
                f.phase_by_regime.empty()
                    ? 0.0
                    : f.phase_by_regime[static_cast<std::size_t>(regime) %
                                        f.phase_by_regime.size()];
            return f.amplitude * std::cos(dot(f.frequency, x) + phase);
          },
          [&](const ClippedProjection& f) {
            return f.amplitude * std::clamp(dot(f.direction, x) - f.offset, -f.clip, f.clip);
          },
          [&](const ClippedNorm& f) { return f.amplitude * std::min(norm(x), f.clip); },
          [&](const ClippedSquaredNorm& f) {
            double s = 0.0;
            for (double v : x) s += v * v;
            return f.amplitude * std::min(s, f.clip * f.clip);
          },
          [&](const RegimeIndicator& f) {
            const bool in =
                std::find(f.members.begin(), f.members.end(), regime) != f.members.end();
            return f.amplitude * ((in ? 1.0 : 0.0) - 0.5);
          }},
      params_);
}

double TestFunction::sup_bound() const {
  return std::visit(
      Overloaded{[](const CosineFeature& f) { return std::abs(f.amplitude); },
                 [](const ClippedProjection& f) { return std::abs(f.amplitude) * f.clip; },
                 [](const ClippedNorm& f) { return std::abs(f.amplitude) * f.clip; },
                 [](const ClippedSquaredNorm& f) {
                   return std::abs(f.amplitude) * f.clip * f.clip;
                 },
                 [](const RegimeIndicator& f) { return 0.5 * std::abs(f.amplitude); }},
      params_);
}

double TestFunction::lipschitz_bound() const {
  return std::visit(
      Overloaded{
          [](const CosineFeature& f) {
            // Spatial part |a|‖w‖; a regime change moves the phase, costing at
            // most |a|·2|sin(Δb/2)| ≤ 2|a| per unit of the discrete distance.
            double jump = 0.0;
            for (double bi : f.phase_by_regime)
              for (double bj : f.phase_by_regime)
                jump = std::max(jump, 2.0 * std::abs(std::sin(0.5 * (bi - bj))));
            return std::abs(f.amplitude) * std::max(norm(f.frequency), jump);
          },
          [](const ClippedProjection& f) { return std::abs(f.amplitude) * norm(f.direction); },
          [](const ClippedNorm& f) { return std::abs(f.amplitude); },
          [](const ClippedSquaredNorm& f) { return 2.0 * std::abs(f.amplitude) * f.clip; },
          [](const RegimeIndicator& f) { return std::abs(f.amplitude); }},
      params_);
}

void TestFunctionDictionary::add(TestFunction fn) {
  const double total = fn.sup_bound() + fn.lipschitz_bound();
  if (!(total <= 1.0 + kCertificateSlack))
    throw ValidationError({"test function violates ‖φ‖_∞ + Lip(φ) ≤ 1 (bound " +
                           std::to_string(total) + ")"});
  if (const auto* f = std::get_if<CosineFeature>(&fn.params())) {
    if (!(std::abs(f->amplitude) * (3.0 + norm(f->frequency)) <= 1.0 + kCertificateSlack))
      throw ValidationError({"cosine feature violates |a|(3 + ‖w‖) ≤ 1"});
  }
  functions_.push_back(std::move(fn));
}

TestFunctionDictionary TestFunctionDictionary::prefix(std::size_t count) const {
  TestFunctionDictionary out;
  out.functions_.assign(functions_.begin(),
                        functions_.begin() + static_cast<long>(std::min(count, size())));
  return out;
}

TestFunctionDictionary TestFunctionDictionary::standard(int dim, int regimes,
                                                        std::uint64_t seed,
                                                        std::size_t random_features) {
  TestFunctionDictionary dict;
  RandomStream rng(seed, stream_tag("dictionary"), 0);
  auto random_unit = [&] {
    std::vector<double> v(dim);
    double n = 0.0;
    while (n == 0.0) {
      for (double& x : v) x = rng.normal();
      n = norm(v);
    }
    for (double& x : v) x /= n;
    return v;
  };

  constexpr double kScales[] = {0.25, 0.5, 1.0};
  for (std::size_t m = 0; m < random_features; ++m) {
    const double scale = kScales[m % 3];
    std::vector<double> w = random_unit();
    for (double& x : w) x *= scale;
    std::vector<double> phases(std::max(regimes, 1));
    for (double& b : phases) b = 2.0 * std::numbers::pi * rng.uniform();
    dict.add(CosineFeature{1.0 / (3.0 + scale), std::move(w), std::move(phases)});
  }

  for (int p = 0; p < dim; ++p) {
    for (double c : {0.5, 1.0, 2.0}) {
      std::vector<double> e(dim, 0.0);
      e[p] = 1.0;
      dict.add(ClippedProjection{1.0 / (1.0 + c), std::move(e), 0.0, c});
    }
  }
  for (int m = 0; m < 32; ++m) dict.add(ClippedProjection{0.5, random_unit(), 0.0, 1.0});
  for (double c : {0.5, 1.0, 2.0, 4.0}) dict.add(ClippedNorm{1.0 / (1.0 + c), c});
  for (double c : {0.5, 1.0, 2.0}) dict.add(ClippedSquaredNorm{1.0 / (c * c + 2.0 * c), c});
  if (regimes > 1)
    for (int j = 0; j < regimes; ++j) dict.add(RegimeIndicator{2.0 / 3.0, {j}});
  return dict;
}

// ---------------------------------------------------------------------------

DictionaryMeans evaluate_dictionary(const EmpiricalMeasure& mu,
                                    const TestFunctionDictionary& dict) {
  if (mu.size() == 0) throw DimensionError("empty measure");
  const std::size_t count = mu.size();
  DictionaryMeans out{std::vector<double>(dict.size()), std::vector<double>(dict.size())};
  std::vector<double> values(count);
  for (std::size_t f = 0; f < dict.size(); ++f) {
    for (std::size_t m = 0; m < count; ++m) values[m] = dict[f](mu.point(m), mu.regime(m));
    const Estimate e = mean_estimate(values);
    out.mean[f] = e.value;
    out.se[f] = e.se;
  }
  return out;
}

DlEstimate dl_from_means(const DictionaryMeans& a, const DictionaryMeans& b) {
  if (a.mean.size() != b.mean.size())
    throw DimensionError("dictionary means come from different dictionaries");
  DlEstimate best;
  for (std::size_t f = 0; f < a.mean.size(); ++f) {
    const double diff = std::abs(a.mean[f] - b.mean[f]);
    if (diff > best.value) {
      best.value = diff;
      best.argmax = f;
      best.se = std::sqrt(a.se[f] * a.se[f] + b.se[f] * b.se[f]);
    }
  }
  return best;
}

DlEstimate dl_estimate(const EmpiricalMeasure& mu1, const EmpiricalMeasure& mu2,
                       const TestFunctionDictionary& dict) {
  if (mu1.dim() != mu2.dim())
    throw DimensionError("measures live on lattices of different size (" +
                         std::to_string(mu1.dim()) + " vs " + std::to_string(mu2.dim()) +
                         ")");
  return dl_from_means(evaluate_dictionary(mu1, dict), evaluate_dictionary(mu2, dict));
}

double dl_lower_bound(const EmpiricalMeasure& mu1, const EmpiricalMeasure& mu2,
                      const TestFunctionDictionary& dict) {
  return dl_estimate(mu1, mu2, dict).value;
}

EmpiricalMeasure estimate_measure(const ModelSpec& spec, const SimConfig& cfg,
                                  std::span<const double> xi, int j0, double t,
                                  std::uint64_t tag) {
  if (cfg.t_end != t)
    throw ValidationError({"estimate_measure: cfg.t_end must equal the target time"});
  return EmpiricalMeasure::from_states(run_ensemble(spec, cfg, xi, j0, tag));
}

// ---------------------------------------------------------------------------

double cutoff(double s) {
  const double a = std::abs(s);
  if (a <= 1.0) return 0.0;
  if (a >= 2.0) return 1.0;
  auto psi = [](double x) { return x > 0.0 ? std::exp(-1.0 / x) : 0.0; };
  const double up = psi(a - 1.0);
  return up / (up + psi(2.0 - a));
}

namespace {

Estimate weighted_second_moment(const EmpiricalMeasure& mu, const std::vector<double>& w) {
  std::vector<double> per_sample(mu.size());
  for (std::size_t m = 0; m < mu.size(); ++m) {
    const auto x = mu.point(m);
    double s = 0.0;
    for (std::size_t p = 0; p < x.size(); ++p) s += w[p] * x[p] * x[p];
    per_sample[m] = s;
  }
  return mean_estimate(per_sample);
}

int radius_of(const EmpiricalMeasure& mu) {
  if (mu.dim() % 2 == 0)
    throw DimensionError("lattice measure must have an odd number (2n+1) of sites");
  return (mu.dim() - 1) / 2;
}

}  // namespace

Estimate tail_mass_estimate(const EmpiricalMeasure& mu, int n0) {
  const int n = radius_of(mu);
  if (n0 < 0 || n0 > n)
    throw DimensionError("tail cut " + std::to_string(n0) + " outside [0, " +
                         std::to_string(n) + "]");
  std::vector<double> w(mu.dim());
  for (int p = 0; p < mu.dim(); ++p) w[p] = std::abs(p - n) >= n0 ? 1.0 : 0.0;
  return weighted_second_moment(mu, w);
}

double tail_mass(const EmpiricalMeasure& mu, int n0) {
  return tail_mass_estimate(mu, n0).value;
}

Estimate smooth_tail_mass(const EmpiricalMeasure& mu, int n0) {
  const int n = radius_of(mu);
  if (n0 < 1) throw DimensionError("smooth tail cut must be at least 1");
  std::vector<double> w(mu.dim());
  for (int p = 0; p < mu.dim(); ++p) {
    const double theta = cutoff(static_cast<double>(p - n) / n0);
    w[p] = theta * theta;
  }
  return weighted_second_moment(mu, w);
}

MomentSummary moments(const EmpiricalMeasure& mu, int regimes) {
  if (mu.size() == 0) throw DimensionError("moments of an empty measure");
  const std::size_t count = mu.size();
  MomentSummary out;
  std::vector<double> buf(count);

  for (std::size_t m = 0; m < count; ++m) {
    double s = 0.0;
    for (double x : mu.point(m)) s += x * x;
    buf[m] = s;
  }
  out.mean_sq_norm = mean_estimate(buf);

  for (int p = 0; p < mu.dim(); ++p) {
    for (std::size_t m = 0; m < count; ++m) buf[m] = mu.point(m)[p];
    out.site_mean.push_back(mean_estimate(buf));
    for (std::size_t m = 0; m < count; ++m) buf[m] *= buf[m];
    out.site_second_moment.push_back(mean_estimate(buf));
  }
  for (int j = 0; j < regimes; ++j) {
    for (std::size_t m = 0; m < count; ++m) buf[m] = mu.regime(m) == j ? 1.0 : 0.0;
    out.regime_frequency.push_back(mean_estimate(buf));
  }
  return out;
}

}  // namespace lss
