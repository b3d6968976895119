#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <type_traits>
#include <variant>
#include <vector>

#include "lss/integrator.hpp"
#include "lss/model.hpp"
#include "lss/stats.hpp"

namespace lss {

/// Uniformly weighted sample cloud on (lattice state × regime).
class EmpiricalMeasure {
 public:
  explicit EmpiricalMeasure(int dim) : dim_(dim) {}
  static EmpiricalMeasure from_states(std::span<const LatticeState> states);

  void add(std::span<const double> x, int regime);

  std::size_t size() const { return regimes_.size(); }
  int dim() const { return dim_; }
  std::span<const double> point(std::size_t m) const {
    return {data_.data() + m * static_cast<std::size_t>(dim_), static_cast<std::size_t>(dim_)};
  }
  int regime(std::size_t m) const { return regimes_[m]; }
  std::vector<LatticeState> states() const;

 private:
  int dim_;
  std::vector<double> data_;
  std::vector<int> regimes_;
};

// ---------------------------------------------------------------------------
// Bounded-Lipschitz test functions under d((x,i),(y,j)) = ‖x−y‖ + 1_{i≠j}.

/// a·cos(⟨w,x⟩ + b_j).
struct CosineFeature {
  double amplitude = 0.0;
  std::vector<double> frequency;
  std::vector<double> phase_by_regime;
};

/// a·clamp(⟨v,x⟩ − offset, −c, c).
struct ClippedProjection {
  double amplitude = 0.0;
  std::vector<double> direction;
  double offset = 0.0;
  double clip = 1.0;
};

/// a·min(‖x‖, c).
struct ClippedNorm {
  double amplitude = 0.0;
  double clip = 1.0;
};

/// a·min(‖x‖², c²).
struct ClippedSquaredNorm {
  double amplitude = 0.0;
  double clip = 1.0;
};

/// a·(1_{j∈members} − 1/2).
struct RegimeIndicator {
  double amplitude = 0.0;
  std::vector<int> members;
};

class TestFunction {
 public:
  using Params = std::variant<CosineFeature, ClippedProjection, ClippedNorm,
                              ClippedSquaredNorm, RegimeIndicator>;

  TestFunction(Params params) : params_(std::move(params)) {}  // NOLINT
  template <class P>
    requires std::is_constructible_v<Params, P>
  TestFunction(P params) : params_(std::move(params)) {}  // NOLINT

  double operator()(std::span<const double> x, int regime) const;
  /// Closed-form bounds on ‖φ‖_∞ and Lip(φ).
  double sup_bound() const;
  double lipschitz_bound() const;
  const Params& params() const { return params_; }

 private:
  Params params_;
};

class TestFunctionDictionary {
 public:
  /// Throws ValidationError unless sup_bound + lipschitz_bound ≤ 1 (and, for
  /// cosine features, |a|(3 + ‖w‖) ≤ 1).
  void add(TestFunction fn);

  std::size_t size() const { return functions_.size(); }
  const TestFunction& operator[](std::size_t i) const { return functions_[i]; }
  /// First `count` members, so dictionaries built this way are nested.
  TestFunctionDictionary prefix(std::size_t count) const;

  /**
   * Default dictionary: `random_features` cosine features with ‖w‖ cycling
   * through {1/4, 1/2, 1}, then clipped coordinates, clipped random
   * projections, clipped norms and squared norms, and regime indicators.
   */
  static TestFunctionDictionary standard(int dim, int regimes, std::uint64_t seed,
                                         std::size_t random_features = 256);

 private:
  std::vector<TestFunction> functions_;
};

/// Means and standard errors of every dictionary member under one measure.
struct DictionaryMeans {
  std::vector<double> mean;
  std::vector<double> se;
};

DictionaryMeans evaluate_dictionary(const EmpiricalMeasure& mu,
                                    const TestFunctionDictionary& dict);

struct DlEstimate {
  double value = 0.0;
  std::size_t argmax = 0;
  /// Standard error of the maximizing difference, treating the clouds as independent.
  double se = 0.0;
};

DlEstimate dl_from_means(const DictionaryMeans& a, const DictionaryMeans& b);
DlEstimate dl_estimate(const EmpiricalMeasure& mu1, const EmpiricalMeasure& mu2,
                       const TestFunctionDictionary& dict);
/// sup over the dictionary of |(φ, μ₁) − (φ, μ₂)|; never exceeds the true d_L*.
double dl_lower_bound(const EmpiricalMeasure& mu1, const EmpiricalMeasure& mu2,
                      const TestFunctionDictionary& dict);

/// Ensemble at time t (cfg.t_end must equal t) approximating P*_{s,t}δ_(ξ,j0).
EmpiricalMeasure estimate_measure(const ModelSpec& spec, const SimConfig& cfg,
                                  std::span<const double> xi, int j0, double t,
                                  std::uint64_t tag = kTrajectoryTag);

/// Smooth cutoff: 0 for |s| ≤ 1, 1 for |s| ≥ 2, C^∞ in between.
double cutoff(double s);

/// Σ_{|i|≥n0} E|u_i|² over the samples.
Estimate tail_mass_estimate(const EmpiricalMeasure& mu, int n0);
double tail_mass(const EmpiricalMeasure& mu, int n0);
/// E‖θ_{n0} u‖² with (θ_{n0}u)_i = θ(i/n0)u_i; n0 ≥ 1.
Estimate smooth_tail_mass(const EmpiricalMeasure& mu, int n0);

struct MomentSummary {
  Estimate mean_sq_norm;
  std::vector<Estimate> site_mean;
  std::vector<Estimate> site_second_moment;
  std::vector<Estimate> regime_frequency;
};

MomentSummary moments(const EmpiricalMeasure& mu, int regimes);

}  // namespace lss
