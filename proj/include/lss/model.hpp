#pragma once

#include <optional>
#include <span>
#include <string>
#include <type_traits>
#include <variant>
#include <vector>

#include "lss/switching.hpp"

namespace lss {

using Vector = std::vector<double>;

/// Maps a lattice site i ∈ [−n, n] to its storage offset and back.
struct Lattice {
  int radius = 0;

  int sites() const { return 2 * radius + 1; }
  int offset(int site) const { return site + radius; }
  int site(int offset) const { return offset - radius; }
};

/// Sites × modes table, row-major by site.
class SiteModeMatrix {
 public:
  SiteModeMatrix() = default;
  SiteModeMatrix(int sites, int modes, double fill = 0.0)
      : sites_(sites), modes_(modes), data_(static_cast<std::size_t>(sites) * modes, fill) {}

  int sites() const { return sites_; }
  int modes() const { return modes_; }
  double& operator()(int offset, int mode) { return data_[offset * modes_ + mode]; }
  double operator()(int offset, int mode) const { return data_[offset * modes_ + mode]; }
  /// Σ_i Σ_k entry².
  double norm_squared() const;

 private:
  int sites_ = 0;
  int modes_ = 0;
  std::vector<double> data_;
};

// ---------------------------------------------------------------------------
// Drift families f_i(t, j, s)

struct ZeroDrift {};

/// f_i(t,j,s) = c_j ρ^|i| cos(2πt/ϖ) + b_j tanh(s); the cosine factor is 1
/// when no period is given.
struct TanhDrift {
  std::vector<double> amplitude;  // c_j
  std::vector<double> slope;      // b_j
  double decay = 0.5;             // ρ ∈ (0, 1)
  std::optional<double> period;
};

class NonlinearityFamily {
 public:
  using Params = std::variant<ZeroDrift, TanhDrift>;

  NonlinearityFamily() = default;
  NonlinearityFamily(Params params) : params_(std::move(params)) {}  // NOLINT
  template <class P>
    requires std::is_constructible_v<Params, P>
  NonlinearityFamily(P params) : params_(std::move(params)) {}  // NOLINT

  const Params& params() const { return params_; }
  std::string tag() const;

  double value(double t, int regime, int site, double s) const;

  /// Global Lipschitz constant L_f in s.
  double lipschitz() const;
  /// Linear growth rate β₀.
  double beta0() const;
  /// Growth offset α_i.
  double alpha(int site) const;
  /// Σ_{i∈ℤ} α_i² on the infinite lattice.
  double alpha_norm_squared_infinite() const;

  /// True when f(t + period, ·, ·) = f(t, ·, ·).
  bool periodic_with(double period) const;
  /// Number of regimes the parameters are given for, or nullopt if any.
  std::optional<int> regimes() const;

 private:
  Params params_ = ZeroDrift{};
};

// ---------------------------------------------------------------------------
// Diffusion families σ_{i,k}(t, j, s)

struct ZeroDiffusion {};

/// σ_{i,k}(t,j,s) = d_j ρ^|i| η_k sin(2πt/ϖ) + e_j κ_k sin(s), with
/// κ_k = κ₀ q^(k−1) and η_k = η₀ q^(k−1) (k counted from 1). The sine
/// factor in t is 1 when no period is given.
struct SineDiffusion {
  std::vector<double> site_amplitude;   // d_j
  std::vector<double> state_amplitude;  // e_j
  double decay = 0.5;                   // ρ
  double kappa0 = 1.0;
  double eta0 = 1.0;
  double mode_ratio = 0.5;              // q ∈ (0, 1)
  std::optional<double> period;
};

class DiffusionFamily {
 public:
  using Params = std::variant<ZeroDiffusion, SineDiffusion>;

  DiffusionFamily() = default;
  DiffusionFamily(Params params) : params_(std::move(params)) {}  // NOLINT
  template <class P>
    requires std::is_constructible_v<Params, P>
  DiffusionFamily(P params) : params_(std::move(params)) {}  // NOLINT

  const Params& params() const { return params_; }
  std::string tag() const;

  /// mode is zero-based.
  double value(double t, int regime, int site, int mode, double s) const;

  double lipschitz(int mode) const;  // L_k
  double beta(int mode) const;       // β_k
  double delta(int site, int mode) const;  // δ_{i,k}

  /// Σ_{k≥1} L_k² and Σ_{k≥1} β_k² over all modes (not just the simulated ones).
  double lipschitz_norm_squared_infinite() const;
  double beta_norm_squared_infinite() const;
  /// Σ_{i∈ℤ} Σ_{k≥1} δ_{i,k}².
  double delta_norm_squared_infinite() const;

  bool periodic_with(double period) const;
  std::optional<int> regimes() const;

 private:
  Params params_ = ZeroDiffusion{};
};

// ---------------------------------------------------------------------------

struct ModelSpec {
  double nu = 1.0;
  std::vector<double> lambda_by_regime;
  std::vector<Vector> g_by_regime;
  std::vector<SiteModeMatrix> h_by_regime;
  NonlinearityFamily f_family;
  DiffusionFamily sigma_family;
  double epsilon = 1.0;
  std::optional<double> period;
  int trunc_radius = 0;
  int noise_modes = 1;
  GeneratorMatrix generator;

  int regimes() const { return static_cast<int>(lambda_by_regime.size()); }
  int sites() const { return 2 * trunc_radius + 1; }
  Lattice lattice() const { return {trunc_radius}; }
  double lambda_min() const;
  double lambda_max() const;

  /// Copy with ε replaced; every other coefficient is shared.
  ModelSpec with_epsilon(double eps) const;
};

/// Throws ValidationError listing every violated structural invariant.
void check_structure(const ModelSpec& spec);

struct LatticeState {
  Vector values;
  int regime = 0;
};

struct ConditionReport {
  double lambda_min = 0.0;
  double lipschitz_f = 0.0;  // L_f
  double beta0 = 0.0;
  double norm_g = 0.0;
  double norm_h = 0.0;
  double norm_alpha = 0.0;
  double norm_beta = 0.0;
  double norm_delta = 0.0;
  double norm_L = 0.0;
  double varpi1 = 0.0;
  double varpi2 = 0.0;
  double gamma = 0.0;
  bool mu_holds = false;
  bool uc1_holds = false;

  /// Infinite-lattice / all-mode values of the same norms, from the family's
  /// closed form (equal to the truncated values for the zero families).
  double norm_alpha_infinite = 0.0;
  double norm_beta_infinite = 0.0;
  double norm_delta_infinite = 0.0;
  double norm_L_infinite = 0.0;

  /// E‖ξ‖² e^(−ϖ₁(t−s)) + ϖ₂/ϖ₁.
  double energy_bound(double initial_mean_square, double elapsed) const;
  /// ‖ξ₁−ξ₂‖² e^(−γ(t−s)).
  double contraction_bound(double initial_distance_squared, double elapsed) const;
};

/// Lattice operators with zero padding u_{±(n+1)} = 0.
Vector apply_A(std::span<const double> u);
Vector apply_B(std::span<const double> u);

/// −νAu − λ(j)u + f(t,j,u) + g(j).
Vector drift(const ModelSpec& spec, double t, const LatticeState& state);
/// ε(h_k(j) + σ_k(t,j,u)); mode is zero-based.
Vector diffusion_column(const ModelSpec& spec, double t, const LatticeState& state,
                        int mode);

/// Allocation-free forms used by the integrator; out has spec.sites() entries.
void drift_into(const ModelSpec& spec, double t, std::span<const double> u, int regime,
                std::span<double> out);
void diffusion_into(const ModelSpec& spec, double t, std::span<const double> u,
                    int regime, int mode, std::span<double> out);
/// Σ_k ε(h_k(j) + σ_k(t,j,u))·z_k, i.e. the noise term of one step for the
/// mode weights z (length noise_modes).
void noise_combination_into(const ModelSpec& spec, double t, std::span<const double> u,
                            int regime, std::span<const double> z,
                            std::span<double> out);

ConditionReport validate(const ModelSpec& spec);

}  // namespace lss
