#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <numbers>
#include <random>

#include "lss/error.hpp"
#include "lss/model.hpp"
#include "test_support.hpp"

namespace lss {
namespace {

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

TEST(LatticeOperators, WorkedExample) {
  const Vector u{1.0, 2.0, 3.0};
  EXPECT_EQ(apply_A(u), (Vector{0.0, 0.0, 4.0}));
  const Vector bu = apply_B(u);
  EXPECT_EQ(bu, (Vector{1.0, 1.0, -3.0}));
  // (Au,u) = ‖Bu‖² + u_{−n}² under zero padding.
  EXPECT_DOUBLE_EQ(dot(apply_A(u), u), 12.0);
  EXPECT_DOUBLE_EQ(dot(bu, bu) + u[0] * u[0], 12.0);
}

TEST(LatticeOperators, SymmetricAndPositiveSemidefinite) {
  std::mt19937_64 gen(7);
  std::normal_distribution<double> normal;
  for (int trial = 0; trial < 200; ++trial) {
    const int sites = 1 + trial % 17;
    Vector u(sites), v(sites);
    for (int p = 0; p < sites; ++p) {
      u[p] = normal(gen);
      v[p] = normal(gen);
    }
    const double uav = dot(apply_A(u), v);
    const double auv = dot(u, apply_A(v));
    EXPECT_NEAR(uav, auv, 1e-12 * std::max(1.0, std::abs(uav)));
    EXPECT_GE(dot(apply_A(u), u), 0.0);
    const Vector bu = apply_B(u);
    EXPECT_NEAR(dot(apply_A(u), u), dot(bu, bu) + u[0] * u[0], 1e-10);
  }
}

TEST(Drift, MatchesDirectEvaluation) {
  const ModelSpec spec = testing::standard_spec();
  const LatticeState state{{0.3, -1.2, 0.7, 2.0, -0.1}, 1};
  const double t = 0.37;
  const Vector got = drift(spec, t, state);
  const Vector au = apply_A(state.values);
  for (int p = 0; p < spec.sites(); ++p) {
    const int i = p - spec.trunc_radius;
    const double f = 2.0 * std::pow(0.5, std::abs(i)) * std::cos(2.0 * std::numbers::pi * t / 2.0) +
                     0.8 * std::tanh(state.values[p]);
    const double g = 0.5 * std::pow(0.5, std::abs(i));
    const double want = -au[p] - 5.0 * state.values[p] + f + g;
    EXPECT_NEAR(got[p], want, 1e-14);
  }
}

TEST(Drift, RejectsBadRegimeAndSize) {
  const ModelSpec spec = testing::standard_spec();
  EXPECT_THROW(drift(spec, 0.0, {Vector(5, 0.0), 2}), DimensionError);
  EXPECT_THROW(drift(spec, 0.0, {Vector(4, 0.0), 0}), DimensionError);
}

TEST(Diffusion, ZeroEpsilonGivesZero) {
  const ModelSpec spec = testing::standard_spec().with_epsilon(0.0);
  const LatticeState state{{0.3, -1.2, 0.7, 2.0, -0.1}, 0};
  for (int k = 0; k < spec.noise_modes; ++k)
    for (double x : diffusion_column(spec, 1.3, state, k)) EXPECT_EQ(x, 0.0);
}

TEST(Diffusion, AdditiveNoiseIsExactlyH) {
  ModelSpec spec = testing::standard_spec();
  spec.sigma_family = ZeroDiffusion{};
  const LatticeState state{{0.3, -1.2, 0.7, 2.0, -0.1}, 1};
  for (int k = 0; k < spec.noise_modes; ++k) {
    const Vector col = diffusion_column(spec, 0.4, state, k);
    for (int p = 0; p < spec.sites(); ++p) EXPECT_EQ(col[p], spec.h_by_regime[1](p, k));
  }
}

TEST(Diffusion, SineFamilyScalarOracle) {
  ModelSpec spec = testing::linear_spec(0, 1.0, 2.0, 0.25);
  spec.noise_modes = 2;
  SiteModeMatrix h(1, 2);
  h(0, 0) = 0.25;
  h(0, 1) = -0.5;
  spec.h_by_regime = {h};
  spec.period = 3.0;
  spec.sigma_family = SineDiffusion{{0.7}, {0.4}, 0.5, 0.9, 1.1, 0.25, 3.0};
  const double t = 0.8, u = 1.7;
  for (int k = 0; k < 2; ++k) {
    const double sigma = 0.7 * 1.1 * std::pow(0.25, k) * std::sin(2.0 * std::numbers::pi * t / 3.0) +
                         0.4 * 0.9 * std::pow(0.25, k) * std::sin(u);
    const double want = h(0, k) + sigma;
    EXPECT_NEAR(diffusion_column(spec, t, {{u}, 0}, k)[0], want, 1e-15);
    EXPECT_NEAR(diffusion_column(spec.with_epsilon(0.5), t, {{u}, 0}, k)[0], 0.5 * want, 1e-15);
  }
  EXPECT_THROW(diffusion_column(spec, t, {{u}, 0}, 2), DimensionError);
}

TEST(Diffusion, NoiseCombinationMatchesColumns) {
  const ModelSpec spec = testing::standard_spec();
  const LatticeState state{{0.3, -1.2, 0.7, 2.0, -0.1}, 1};
  const Vector z{0.3, -1.1, 2.5};
  Vector got(spec.sites());
  noise_combination_into(spec, 0.9, state.values, state.regime, z, got);
  for (int p = 0; p < spec.sites(); ++p) {
    double want = 0.0;
    for (int k = 0; k < spec.noise_modes; ++k)
      want += diffusion_column(spec, 0.9, state, k)[p] * z[k];
    EXPECT_NEAR(got[p], want, 1e-13);
  }
}

TEST(Validate, MeanSquareExample) {
  // λ_min = 4, β₀ = 1, ‖β‖² = 1/2.
  ModelSpec spec = testing::linear_spec(0, 1.0, 4.0);
  spec.f_family = TanhDrift{{0.0}, {1.0}, 0.5, std::nullopt};
  spec.sigma_family = SineDiffusion{{0.0}, {1.0}, 0.5, std::sqrt(0.5), 1.0, 0.5, std::nullopt};
  const ConditionReport r = validate(spec);
  EXPECT_DOUBLE_EQ(r.lambda_min, 4.0);
  EXPECT_DOUBLE_EQ(r.beta0, 1.0);
  EXPECT_NEAR(r.norm_beta * r.norm_beta, 0.5, 1e-15);
  EXPECT_TRUE(r.mu_holds);
  EXPECT_NEAR(r.varpi1, 2.0, 1e-12);
}

TEST(Validate, ContractionExample) {
  // λ_min = 4, ‖L‖² = 1, L_f = 1 → γ = 7 − 1 − 1.
  ModelSpec spec = testing::linear_spec(0, 1.0, 4.0);
  spec.f_family = TanhDrift{{0.0}, {1.0}, 0.5, std::nullopt};
  spec.sigma_family = SineDiffusion{{0.0}, {1.0}, 0.5, 1.0, 1.0, 0.5, std::nullopt};
  const ConditionReport r = validate(spec);
  EXPECT_TRUE(r.uc1_holds);
  EXPECT_DOUBLE_EQ(r.gamma, 5.0);
}

TEST(Validate, ForcingExample) {
  // ‖α‖ = 0, ‖g‖ = 1, ‖h‖ = 1, ‖δ‖ = 0 → ϖ₂ = 4.
  ModelSpec spec = testing::linear_spec(0, 1.0, 3.0, 1.0);
  spec.g_by_regime = {{1.0}};
  EXPECT_DOUBLE_EQ(validate(spec).varpi2, 4.0);
}

TEST(Validate, InfiniteLatticeNorms) {
  const ConditionReport r = validate(testing::standard_spec());
  const double rho2 = 0.25, q2 = 0.25;
  EXPECT_NEAR(r.norm_alpha_infinite * r.norm_alpha_infinite, 9.0 * (1 + rho2) / (1 - rho2),
              1e-12);
  EXPECT_NEAR(r.norm_L_infinite * r.norm_L_infinite, 0.25 * 0.36 / (1 - q2), 1e-12);
  EXPECT_NEAR(r.norm_delta_infinite * r.norm_delta_infinite,
              0.25 * (1 + rho2) / (1 - rho2) / (1 - q2), 1e-12);
  EXPECT_LE(r.norm_alpha, r.norm_alpha_infinite);
  EXPECT_LE(r.norm_delta, r.norm_delta_infinite);
}

TEST(Validate, DeterministicBitForBit) {
  const ModelSpec spec = testing::standard_spec();
  const ConditionReport a = validate(spec), b = validate(spec);
  EXPECT_EQ(std::memcmp(&a.varpi1, &b.varpi1, sizeof(double)), 0);
  EXPECT_EQ(a.varpi2, b.varpi2);
  EXPECT_EQ(a.gamma, b.gamma);
  EXPECT_EQ(a.norm_delta, b.norm_delta);
}

TEST(Validate, ListsEveryViolation) {
  ModelSpec spec = testing::standard_spec();
  spec.nu = -1.0;
  spec.epsilon = 2.0;
  spec.g_by_regime.pop_back();
  try {
    validate(spec);
    FAIL() << "expected ValidationError";
  } catch (const ValidationError& e) {
    EXPECT_GE(e.violations().size(), 3u);
  }
}

TEST(Validate, RejectsNonPeriodicFamily) {
  ModelSpec spec = testing::standard_spec();
  spec.f_family = TanhDrift{{3.0, 2.0}, {0.5, 0.8}, 0.5, 1.5};
  EXPECT_THROW(validate(spec), ValidationError);
}

// Randomized probing of the family constants.
class FamilyProbe : public ::testing::Test {
 protected:
  std::mt19937_64 gen{2024};
  std::uniform_real_distribution<double> time{-10.0, 10.0};
  std::uniform_real_distribution<double> state{-20.0, 20.0};
};

TEST_F(FamilyProbe, DriftLipschitzAndGrowth) {
  const ModelSpec spec = testing::standard_spec();
  const auto& f = spec.f_family;
  for (int n = 0; n < 10000; ++n) {
    const double t = time(gen), s1 = state(gen), s2 = state(gen);
    const int j = static_cast<int>(gen() % 2);
    const int i = static_cast<int>(gen() % 9) - 4;
    const double diff = std::abs(f.value(t, j, i, s1) - f.value(t, j, i, s2));
    EXPECT_LE(diff, f.lipschitz() * std::abs(s1 - s2) * (1 + 1e-12));
    EXPECT_LE(std::abs(f.value(t, j, i, s1)), f.alpha(i) + f.beta0() * std::abs(s1) + 1e-12);
  }
}

TEST_F(FamilyProbe, DiffusionLipschitzAndGrowth) {
  const ModelSpec spec = testing::standard_spec();
  const auto& sg = spec.sigma_family;
  for (int n = 0; n < 10000; ++n) {
    const double t = time(gen), s1 = state(gen), s2 = state(gen);
    const int j = static_cast<int>(gen() % 2);
    const int i = static_cast<int>(gen() % 9) - 4;
    const int k = static_cast<int>(gen() % 6);
    const double diff = std::abs(sg.value(t, j, i, k, s1) - sg.value(t, j, i, k, s2));
    EXPECT_LE(diff, sg.lipschitz(k) * std::abs(s1 - s2) * (1 + 1e-12) + 1e-15);
    EXPECT_LE(std::abs(sg.value(t, j, i, k, s1)),
              sg.delta(i, k) + sg.beta(k) * std::abs(s1) + 1e-12);
  }
}

TEST_F(FamilyProbe, PeriodicInTime) {
  const ModelSpec spec = testing::standard_spec(2.0);
  for (int n = 0; n < 2000; ++n) {
    const double t = time(gen), s = state(gen);
    const int j = static_cast<int>(gen() % 2);
    const int i = static_cast<int>(gen() % 5) - 2;
    const int k = static_cast<int>(gen() % 3);
    EXPECT_NEAR(spec.f_family.value(t + 2.0, j, i, s), spec.f_family.value(t, j, i, s), 1e-12);
    EXPECT_NEAR(spec.sigma_family.value(t + 2.0, j, i, k, s),
                spec.sigma_family.value(t, j, i, k, s), 1e-12);
  }
}

}  // namespace
}  // namespace lss
