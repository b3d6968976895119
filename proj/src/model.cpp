#include "lss/model.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "lss/error.hpp"

namespace lss {
namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

double max_abs(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

double time_cosine(const std::optional<double>& period, double t) {
  return period ? std::cos(2.0 * std::numbers::pi * t / *period) : 1.0;
}

double time_sine(const std::optional<double>& period, double t) {
  return period ? std::sin(2.0 * std::numbers::pi * t / *period) : 1.0;
}

bool divides(const std::optional<double>& own, double period) {
  if (!own) return true;
  const double ratio = period / *own;
  const double nearest = std::round(ratio);
  return nearest >= 1.0 && std::abs(ratio - nearest) <= 1e-9 * std::max(1.0, ratio);
}

// Σ_{i∈ℤ} ρ^(2|i|)
double geometric_lattice_sum(double rho) { return (1.0 + rho * rho) / (1.0 - rho * rho); }

// Σ_{k≥0} q^(2k)
double geometric_mode_sum(double q) { return 1.0 / (1.0 - q * q); }

void dimension_check(std::size_t got, int expected, const char* what) {
  if (got != static_cast<std::size_t>(expected)) {
    std::ostringstream os;
    os << what << ": length " << got << ", expected " << expected;
    throw DimensionError(os.str());
  }
}

}  // namespace

double SiteModeMatrix::norm_squared() const {
  double s = 0.0;
  for (double x : data_) s += x * x;
  return s;
}

// ---------------------------------------------------------------------------

std::string NonlinearityFamily::tag() const {
  return std::visit(Overloaded{[](const ZeroDrift&) { return std::string("zero"); },
                               [](const TanhDrift&) { return std::string("tanh"); }},
                    params_);
}

double NonlinearityFamily::value(double t, int regime, int site, double s) const {
  return std::visit(
      Overloaded{[](const ZeroDrift&) { return 0.0; },
                 [&](const TanhDrift& p) {
                   return p.amplitude[regime] * std::pow(p.decay, std::abs(site)) *
                              time_cosine(p.period, t) +
                          p.slope[regime] * std::tanh(s);
                 }},
      params_);
}

double NonlinearityFamily::lipschitz() const {
  return std::visit(Overloaded{[](const ZeroDrift&) { return 0.0; },
                               [](const TanhDrift& p) { return max_abs(p.slope); }},
                    params_);
}

double NonlinearityFamily::beta0() const { return lipschitz(); }

double NonlinearityFamily::alpha(int site) const {
  return std::visit(Overloaded{[](const ZeroDrift&) { return 0.0; },
                               [&](const TanhDrift& p) {
                                 return max_abs(p.amplitude) *
                                        std::pow(p.decay, std::abs(site));
                               }},
                    params_);
}

double NonlinearityFamily::alpha_norm_squared_infinite() const {
  return std::visit(Overloaded{[](const ZeroDrift&) { return 0.0; },
                               [](const TanhDrift& p) {
                                 const double c = max_abs(p.amplitude);
                                 return c * c * geometric_lattice_sum(p.decay);
                               }},
                    params_);
}

bool NonlinearityFamily::periodic_with(double period) const {
  return std::visit(Overloaded{[](const ZeroDrift&) { return true; },
                               [&](const TanhDrift& p) {
                                 return max_abs(p.amplitude) == 0.0 ||
                                        divides(p.period, period);
                               }},
                    params_);
}

std::optional<int> NonlinearityFamily::regimes() const {
  return std::visit(
      Overloaded{[](const ZeroDrift&) -> std::optional<int> { return std::nullopt; },
                 [](const TanhDrift& p) -> std::optional<int> {
                   return static_cast<int>(p.amplitude.size());
                 }},
      params_);
}

// ---------------------------------------------------------------------------

std::string DiffusionFamily::tag() const {
  return std::visit(Overloaded{[](const ZeroDiffusion&) { return std::string("zero"); },
                               [](const SineDiffusion&) { return std::string("sine"); }},
                    params_);
}

double DiffusionFamily::value(double t, int regime, int site, int mode, double s) const {
  return std::visit(
      Overloaded{[](const ZeroDiffusion&) { return 0.0; },
                 [&](const SineDiffusion& p) {
                   const double q = std::pow(p.mode_ratio, mode);
                   return p.site_amplitude[regime] * std::pow(p.decay, std::abs(site)) *
                              p.eta0 * q * time_sine(p.period, t) +
                          p.state_amplitude[regime] * p.kappa0 * q * std::sin(s);
                 }},
      params_);
}

double DiffusionFamily::lipschitz(int mode) const {
  return std::visit(Overloaded{[](const ZeroDiffusion&) { return 0.0; },
                               [&](const SineDiffusion& p) {
                                 return max_abs(p.state_amplitude) * p.kappa0 *
                                        std::pow(p.mode_ratio, mode);
                               }},
                    params_);
}

double DiffusionFamily::beta(int mode) const { return lipschitz(mode); }

double DiffusionFamily::delta(int site, int mode) const {
  return std::visit(Overloaded{[](const ZeroDiffusion&) { return 0.0; },
                               [&](const SineDiffusion& p) {
                                 return max_abs(p.site_amplitude) *
                                        std::pow(p.decay, std::abs(site)) * p.eta0 *
                                        std::pow(p.mode_ratio, mode);
                               }},
                    params_);
}

double DiffusionFamily::lipschitz_norm_squared_infinite() const {
  return std::visit(Overloaded{[](const ZeroDiffusion&) { return 0.0; },
                               [](const SineDiffusion& p) {
                                 const double e = max_abs(p.state_amplitude) * p.kappa0;
                                 return e * e * geometric_mode_sum(p.mode_ratio);
                               }},
                    params_);
}

double DiffusionFamily::beta_norm_squared_infinite() const {
  return lipschitz_norm_squared_infinite();
}

double DiffusionFamily::delta_norm_squared_infinite() const {
  return std::visit(Overloaded{[](const ZeroDiffusion&) { return 0.0; },
                               [](const SineDiffusion& p) {
                                 const double d = max_abs(p.site_amplitude) * p.eta0;
                                 return d * d * geometric_lattice_sum(p.decay) *
                                        geometric_mode_sum(p.mode_ratio);
                               }},
                    params_);
}

bool DiffusionFamily::periodic_with(double period) const {
  return std::visit(Overloaded{[](const ZeroDiffusion&) { return true; },
                               [&](const SineDiffusion& p) {
                                 return max_abs(p.site_amplitude) == 0.0 ||
                                        divides(p.period, period);
                               }},
                    params_);
}

std::optional<int> DiffusionFamily::regimes() const {
  return std::visit(
      Overloaded{[](const ZeroDiffusion&) -> std::optional<int> { return std::nullopt; },
                 [](const SineDiffusion& p) -> std::optional<int> {
                   return static_cast<int>(p.site_amplitude.size());
                 }},
      params_);
}

// ---------------------------------------------------------------------------

double ModelSpec::lambda_min() const {
  return *std::min_element(lambda_by_regime.begin(), lambda_by_regime.end());
}

double ModelSpec::lambda_max() const {
  return *std::max_element(lambda_by_regime.begin(), lambda_by_regime.end());
}

ModelSpec ModelSpec::with_epsilon(double eps) const {
  ModelSpec copy = *this;
  copy.epsilon = eps;
  return copy;
}

void check_structure(const ModelSpec& spec) {
  std::vector<std::string> bad;
  auto fail = [&](std::string msg) { bad.push_back(std::move(msg)); };

  if (!(spec.nu > 0.0) || !std::isfinite(spec.nu)) fail("nu must be positive and finite");
  if (spec.lambda_by_regime.empty()) fail("lambda must list at least one regime");
  for (std::size_t j = 0; j < spec.lambda_by_regime.size(); ++j)
    if (!(spec.lambda_by_regime[j] > 0.0) || !std::isfinite(spec.lambda_by_regime[j]))
      fail("lambda[" + std::to_string(j) + "] must be positive and finite");
  if (!(spec.epsilon >= 0.0 && spec.epsilon <= 1.0)) fail("epsilon must lie in [0, 1]");
  if (spec.trunc_radius < 0) fail("trunc_radius must be nonnegative");
  if (spec.noise_modes < 1) fail("noise_modes must be at least 1");

  const int n_regimes = spec.regimes();
  const int sites = spec.sites();
  if (static_cast<int>(spec.g_by_regime.size()) != n_regimes)
    fail("g must have one vector per regime");
  for (std::size_t j = 0; j < spec.g_by_regime.size(); ++j) {
    if (static_cast<int>(spec.g_by_regime[j].size()) != sites)
      fail("g[" + std::to_string(j) + "] must have 2n+1 = " + std::to_string(sites) +
           " entries");
    for (double x : spec.g_by_regime[j])
      if (!std::isfinite(x)) fail("g[" + std::to_string(j) + "] has a non-finite entry");
  }
  if (static_cast<int>(spec.h_by_regime.size()) != n_regimes)
    fail("h must have one matrix per regime");
  for (std::size_t j = 0; j < spec.h_by_regime.size(); ++j)
    if (spec.h_by_regime[j].sites() != sites ||
        spec.h_by_regime[j].modes() != spec.noise_modes)
      fail("h[" + std::to_string(j) + "] must be " + std::to_string(sites) + " x " +
           std::to_string(spec.noise_modes));

  if (spec.generator.states() != n_regimes) {
    fail("generator must be " + std::to_string(n_regimes) + " x " +
         std::to_string(n_regimes));
  } else {
    try {
      validate_generator(spec.generator);
    } catch (const GeneratorError& e) {
      fail(std::string("generator: ") + e.what());
    }
  }

  if (auto r = spec.f_family.regimes(); r && *r != n_regimes)
    fail("f_family parameters must be given for each of the " +
         std::to_string(n_regimes) + " regimes");
  if (const auto* p = std::get_if<TanhDrift>(&spec.f_family.params())) {
    if (p->slope.size() != p->amplitude.size())
      fail("f_family: amplitude and slope lengths differ");
    if (!(p->decay > 0.0 && p->decay < 1.0)) fail("f_family: decay must lie in (0, 1)");
    if (p->period && !(*p->period > 0.0)) fail("f_family: period must be positive");
  }
  if (auto r = spec.sigma_family.regimes(); r && *r != n_regimes)
    fail("sigma_family parameters must be given for each of the " +
         std::to_string(n_regimes) + " regimes");
  if (const auto* p = std::get_if<SineDiffusion>(&spec.sigma_family.params())) {
    if (p->state_amplitude.size() != p->site_amplitude.size())
      fail("sigma_family: site_amplitude and state_amplitude lengths differ");
    if (!(p->decay > 0.0 && p->decay < 1.0)) fail("sigma_family: decay must lie in (0, 1)");
    if (!(p->mode_ratio > 0.0 && p->mode_ratio < 1.0))
      fail("sigma_family: mode_ratio must lie in (0, 1)");
    if (p->kappa0 < 0.0 || p->eta0 < 0.0)
      fail("sigma_family: kappa0 and eta0 must be nonnegative");
    if (p->period && !(*p->period > 0.0)) fail("sigma_family: period must be positive");
  }

  if (spec.period) {
    if (!(*spec.period > 0.0)) {
      fail("period must be positive");
    } else {
      if (!spec.f_family.periodic_with(*spec.period))
        fail("f_family is not periodic with the declared period");
      if (!spec.sigma_family.periodic_with(*spec.period))
        fail("sigma_family is not periodic with the declared period");
    }
  }

  if (!bad.empty()) throw ValidationError(std::move(bad));
}

// ---------------------------------------------------------------------------

Vector apply_A(std::span<const double> u) {
  const std::size_t n = u.size();
  Vector out(n);
  for (std::size_t p = 0; p < n; ++p) {
    const double left = p > 0 ? u[p - 1] : 0.0;
    const double right = p + 1 < n ? u[p + 1] : 0.0;
    out[p] = -left + 2.0 * u[p] - right;
  }
  return out;
}

Vector apply_B(std::span<const double> u) {
  const std::size_t n = u.size();
  Vector out(n);
  for (std::size_t p = 0; p < n; ++p) {
    const double right = p + 1 < n ? u[p + 1] : 0.0;
    out[p] = right - u[p];
  }
  return out;
}

void drift_into(const ModelSpec& spec, double t, std::span<const double> u, int regime,
                std::span<double> out) {
  const int sites = spec.sites();
  dimension_check(u.size(), sites, "drift: state");
  dimension_check(out.size(), sites, "drift: output");
  if (regime < 0 || regime >= spec.regimes())
    throw DimensionError("drift: regime " + std::to_string(regime) + " out of range");
  const double nu = spec.nu;
  const double lambda = spec.lambda_by_regime[regime];
  const Vector& g = spec.g_by_regime[regime];
  for (int p = 0; p < sites; ++p) {
    const double left = p > 0 ? u[p - 1] : 0.0;
    const double right = p + 1 < sites ? u[p + 1] : 0.0;
    out[p] = -nu * (-left + 2.0 * u[p] - right) - lambda * u[p] + g[p];
  }
  if (const auto* f = std::get_if<TanhDrift>(&spec.f_family.params())) {
    const double c = f->amplitude[regime] * time_cosine(f->period, t);
    const double b = f->slope[regime];
    const int n = spec.trunc_radius;
    double weight = 1.0;
    for (int m = 0; m <= n; ++m) {
      out[n + m] += c * weight + b * std::tanh(u[n + m]);
      if (m > 0) out[n - m] += c * weight + b * std::tanh(u[n - m]);
      weight *= f->decay;
    }
  }
}

void diffusion_into(const ModelSpec& spec, double t, std::span<const double> u,
                    int regime, int mode, std::span<double> out) {
  const int sites = spec.sites();
  dimension_check(u.size(), sites, "diffusion: state");
  dimension_check(out.size(), sites, "diffusion: output");
  if (regime < 0 || regime >= spec.regimes())
    throw DimensionError("diffusion: regime " + std::to_string(regime) + " out of range");
  if (mode < 0 || mode >= spec.noise_modes)
    throw DimensionError("diffusion: mode index " + std::to_string(mode) +
                         " outside [0, " + std::to_string(spec.noise_modes) + ")");
  const SiteModeMatrix& h = spec.h_by_regime[regime];
  const Lattice lat = spec.lattice();
  for (int p = 0; p < sites; ++p)
    out[p] = spec.epsilon *
             (h(p, mode) + spec.sigma_family.value(t, regime, lat.site(p), mode, u[p]));
}

void noise_combination_into(const ModelSpec& spec, double t, std::span<const double> u,
                            int regime, std::span<const double> z,
                            std::span<double> out) {
  const int sites = spec.sites();
  const int modes = spec.noise_modes;
  dimension_check(u.size(), sites, "noise: state");
  dimension_check(out.size(), sites, "noise: output");
  if (regime < 0 || regime >= spec.regimes())
    throw DimensionError("noise: regime " + std::to_string(regime) + " out of range");
  dimension_check(z.size(), modes, "noise: mode weights");
  const SiteModeMatrix& h = spec.h_by_regime[regime];
  for (int p = 0; p < sites; ++p) {
    double acc = 0.0;
    for (int k = 0; k < modes; ++k) acc += h(p, k) * z[k];
    out[p] = acc;
  }
  if (const auto* s = std::get_if<SineDiffusion>(&spec.sigma_family.params())) {
    // Σ_k σ_{i,k} z_k factors into a site part times Σ_k η_k z_k plus a
    // state part times Σ_k κ_k z_k, since η_k and κ_k share the ratio q.
    double zq = 0.0;
    double q = 1.0;
    for (int k = 0; k < modes; ++k) {
      zq += q * z[k];
      q *= s->mode_ratio;
    }
    const double site_coef =
        s->site_amplitude[regime] * s->eta0 * time_sine(s->period, t) * zq;
    const double state_coef = s->state_amplitude[regime] * s->kappa0 * zq;
    const int n = spec.trunc_radius;
    double weight = 1.0;
    for (int m = 0; m <= n; ++m) {
      out[n + m] += site_coef * weight + state_coef * std::sin(u[n + m]);
      if (m > 0) out[n - m] += site_coef * weight + state_coef * std::sin(u[n - m]);
      weight *= s->decay;
    }
  }
  for (int p = 0; p < sites; ++p) out[p] *= spec.epsilon;
}

Vector drift(const ModelSpec& spec, double t, const LatticeState& state) {
  Vector out(spec.sites());
  drift_into(spec, t, state.values, state.regime, out);
  return out;
}

Vector diffusion_column(const ModelSpec& spec, double t, const LatticeState& state,
                        int mode) {
  Vector out(spec.sites());
  diffusion_into(spec, t, state.values, state.regime, mode, out);
  return out;
}

// ---------------------------------------------------------------------------

double ConditionReport::energy_bound(double initial_mean_square, double elapsed) const {
  return initial_mean_square * std::exp(-varpi1 * elapsed) + varpi2 / varpi1;
}

double ConditionReport::contraction_bound(double initial_distance_squared,
                                          double elapsed) const {
  return initial_distance_squared * std::exp(-gamma * elapsed);
}

ConditionReport validate(const ModelSpec& spec) {
  check_structure(spec);
  const Lattice lat = spec.lattice();
  const int modes = spec.noise_modes;

  ConditionReport r;
  r.lambda_min = spec.lambda_min();
  r.lipschitz_f = spec.f_family.lipschitz();
  r.beta0 = spec.f_family.beta0();

  double g2 = 0.0;
  for (const Vector& g : spec.g_by_regime) {
    double s = 0.0;
    for (double x : g) s += x * x;
    g2 = std::max(g2, s);
  }
  double h2 = 0.0;
  for (const SiteModeMatrix& h : spec.h_by_regime) h2 = std::max(h2, h.norm_squared());

  double alpha2 = 0.0;
  double delta2 = 0.0;
  for (int p = 0; p < lat.sites(); ++p) {
    const double a = spec.f_family.alpha(lat.site(p));
    alpha2 += a * a;
    for (int k = 0; k < modes; ++k) {
      const double d = spec.sigma_family.delta(lat.site(p), k);
      delta2 += d * d;
    }
  }
  double beta2 = 0.0;
  double lip2 = 0.0;
  for (int k = 0; k < modes; ++k) {
    beta2 += spec.sigma_family.beta(k) * spec.sigma_family.beta(k);
    lip2 += spec.sigma_family.lipschitz(k) * spec.sigma_family.lipschitz(k);
  }

  r.norm_g = std::sqrt(g2);
  r.norm_h = std::sqrt(h2);
  r.norm_alpha = std::sqrt(alpha2);
  r.norm_beta = std::sqrt(beta2);
  r.norm_delta = std::sqrt(delta2);
  r.norm_L = std::sqrt(lip2);
  r.norm_alpha_infinite = std::sqrt(spec.f_family.alpha_norm_squared_infinite());
  r.norm_beta_infinite = std::sqrt(spec.sigma_family.beta_norm_squared_infinite());
  r.norm_delta_infinite = std::sqrt(spec.sigma_family.delta_norm_squared_infinite());
  r.norm_L_infinite = std::sqrt(spec.sigma_family.lipschitz_norm_squared_infinite());

  const double lam = r.lambda_min;
  const double b0 = r.beta0;
  r.varpi1 = 2.0 * lam - 2.0 - 2.0 * b0 * b0 - 4.0 * beta2;
  r.varpi2 = 2.0 * (alpha2 + g2 + h2 + 2.0 * delta2);
  r.gamma = 1.75 * lam - lip2 - (4.0 / lam) * r.lipschitz_f * r.lipschitz_f;
  r.mu_holds = lam > 1.0 + b0 * b0 + 2.0 * beta2;
  r.uc1_holds = lip2 + 4.0 / lam * r.lipschitz_f * r.lipschitz_f < 1.75 * lam;
  return r;
}

}  // namespace lss
