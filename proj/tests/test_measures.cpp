#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include <Eigen/Dense>
#include <unsupported/Eigen/KroneckerProduct>

#include "lss/error.hpp"
#include "lss/measures.hpp"
#include "test_support.hpp"

namespace lss {
namespace {

EmpiricalMeasure dirac(const Vector& x, int regime, int copies = 1) {
  EmpiricalMeasure mu(static_cast<int>(x.size()));
  for (int c = 0; c < copies; ++c) mu.add(x, regime);
  return mu;
}

EmpiricalMeasure gaussian_cloud(int dim, int count, double shift, std::uint64_t seed,
                                int regimes = 2) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> normal(shift, 1.0);
  EmpiricalMeasure mu(dim);
  Vector x(dim);
  for (int m = 0; m < count; ++m) {
    for (double& v : x) v = normal(gen);
    mu.add(x, static_cast<int>(gen() % regimes));
  }
  return mu;
}

TEST(Dictionary, EveryMemberIsCertified) {
  const auto dict = TestFunctionDictionary::standard(5, 2, 1);
  EXPECT_GE(dict.size(), 256u);
  for (std::size_t i = 0; i < dict.size(); ++i)
    EXPECT_LE(dict[i].sup_bound() + dict[i].lipschitz_bound(), 1.0 + 1e-12);
}

TEST(Dictionary, RejectsUncertifiedFunctions) {
  TestFunctionDictionary dict;
  EXPECT_THROW(dict.add(CosineFeature{1.0, {1.0, 0.0}, {0.0}}), ValidationError);
  EXPECT_THROW(dict.add(ClippedNorm{0.6, 1.0}), ValidationError);
  EXPECT_NO_THROW(dict.add(ClippedNorm{0.5, 1.0}));
}

TEST(Dictionary, BoundsHoldOnRandomProbes) {
  // |φ| ≤ sup bound and |φ(x,i) − φ(y,j)| ≤ Lip·d((x,i),(y,j)).
  const auto dict = TestFunctionDictionary::standard(3, 3, 8, 64);
  std::mt19937_64 gen(3);
  std::normal_distribution<double> normal(0.0, 2.0);
  for (int trial = 0; trial < 300; ++trial) {
    Vector x(3), y(3);
    for (int p = 0; p < 3; ++p) {
      x[p] = normal(gen);
      y[p] = normal(gen);
    }
    const int i = static_cast<int>(gen() % 3), j = static_cast<int>(gen() % 3);
    double d = (i != j) ? 1.0 : 0.0;
    double dist2 = 0.0;
    for (int p = 0; p < 3; ++p) dist2 += (x[p] - y[p]) * (x[p] - y[p]);
    d += std::sqrt(dist2);
    for (std::size_t f = 0; f < dict.size(); ++f) {
      EXPECT_LE(std::abs(dict[f](x, i)), dict[f].sup_bound() + 1e-12);
      EXPECT_LE(std::abs(dict[f](x, i) - dict[f](y, j)), dict[f].lipschitz_bound() * d + 1e-12);
    }
  }
}

TEST(Dl, TwoDiracsNeverExceedTheExactDistance) {
  // For δ_(x,j) vs δ_(y,j) at distance d, d_L* = 2d/(2+d).
  const auto dict = TestFunctionDictionary::standard(1, 1, 2);
  for (double d : {0.1, 0.5, 1.0, 2.0, 4.0, 10.0}) {
    const double exact = 2.0 * d / (2.0 + d);
    const double dl = dl_lower_bound(dirac({-d / 2}, 0), dirac({d / 2}, 0), dict);
    EXPECT_LE(dl, exact + 1e-12) << d;
    EXPECT_GE(dl, 0.5 * exact) << d;
  }
}

TEST(Dl, RegimeOnlyDifferenceIsTwoThirds) {
  const auto dict = TestFunctionDictionary::standard(3, 2, 2);
  const Vector x{0.1, -0.4, 0.3};
  const double dl = dl_lower_bound(dirac(x, 0), dirac(x, 1), dict);
  EXPECT_LE(dl, 2.0 / 3.0 + 1e-12);
  EXPECT_NEAR(dl, 2.0 / 3.0, 1e-12);
}

TEST(Dl, PseudometricProperties) {
  const auto dict = TestFunctionDictionary::standard(4, 2, 5, 64);
  const auto a = gaussian_cloud(4, 300, 0.0, 1);
  const auto b = gaussian_cloud(4, 300, 0.5, 2);
  const auto c = gaussian_cloud(4, 300, -0.3, 3);
  EXPECT_EQ(dl_lower_bound(a, a, dict), 0.0);
  EXPECT_DOUBLE_EQ(dl_lower_bound(a, b, dict), dl_lower_bound(b, a, dict));
  EXPECT_LE(dl_lower_bound(a, c, dict),
            dl_lower_bound(a, b, dict) + dl_lower_bound(b, c, dict) + 1e-12);
}

TEST(Dl, NondecreasingInDictionarySize) {
  const auto full = TestFunctionDictionary::standard(4, 2, 5);
  const auto a = gaussian_cloud(4, 200, 0.0, 4);
  const auto b = gaussian_cloud(4, 200, 0.2, 5);
  double prev = 0.0;
  for (std::size_t n : {8u, 32u, 128u, 256u}) {
    const double v = dl_lower_bound(a, b, full.prefix(n));
    EXPECT_GE(v, prev);
    prev = v;
  }
  EXPECT_GE(dl_lower_bound(a, b, full), prev);
}

TEST(Dl, EstimateCarriesArgmaxAndSe) {
  const auto dict = TestFunctionDictionary::standard(2, 1, 5, 32);
  const auto a = gaussian_cloud(2, 500, 0.0, 6, 1);
  const auto b = gaussian_cloud(2, 500, 1.0, 7, 1);
  const DlEstimate e = dl_estimate(a, b, dict);
  EXPECT_DOUBLE_EQ(e.value, dl_lower_bound(a, b, dict));
  EXPECT_LT(e.argmax, dict.size());
  EXPECT_GT(e.se, 0.0);
}

TEST(Tail, ExamplesAndCutoff) {
  const auto mu = dirac({0.0, 0.0, 3.0, 0.0, 0.0}, 0);
  EXPECT_EQ(tail_mass(mu, 1), 0.0);
  EXPECT_EQ(tail_mass(mu, 0), 9.0);
  const auto nu = dirac({1.0, 2.0, 3.0, 4.0, 5.0}, 0);
  EXPECT_EQ(tail_mass(nu, 2), 1.0 + 25.0);
  EXPECT_THROW(tail_mass(nu, 3), DimensionError);

  EXPECT_EQ(cutoff(0.5), 0.0);
  EXPECT_EQ(cutoff(-1.0), 0.0);
  EXPECT_EQ(cutoff(2.0), 1.0);
  EXPECT_EQ(cutoff(-7.0), 1.0);
  double prev = 0.0;
  for (double s = 1.0; s <= 2.0; s += 0.01) {
    EXPECT_GE(cutoff(s), prev);
    prev = cutoff(s);
  }
  // θ(i/n0)² lies between the indicators of |i| ≥ 2n0 and |i| ≥ n0.
  const auto wide = gaussian_cloud(9, 100, 0.0, 8, 1);
  const double smooth = smooth_tail_mass(wide, 2).value;
  EXPECT_LE(smooth, tail_mass(wide, 2) + 1e-12);
  EXPECT_GE(smooth, tail_mass(wide, 4) - 1e-12);
}

TEST(Tail, StationaryLyapunovOracle) {
  // Linear lattice, noise on site 0 only: the stationary covariance C solves
  // MC + CMᵀ + hhᵀ = 0 with M = −νA − λI.
  const int radius = 3, sites = 2 * radius + 1;
  const ModelSpec spec = testing::linear_spec(radius, 1.0, 1.0, 1.0);
  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(sites, sites);
  for (int p = 0; p < sites; ++p) {
    M(p, p) = -2.0 - 1.0;
    if (p > 0) M(p, p - 1) = 1.0;
    if (p + 1 < sites) M(p, p + 1) = 1.0;
  }
  const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(sites, sites);
  const Eigen::MatrixXd K = Eigen::kroneckerProduct(I, M) + Eigen::kroneckerProduct(M, I);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(sites * sites);
  rhs(radius * sites + radius) = -1.0;
  const Eigen::VectorXd vecC = K.partialPivLu().solve(rhs);
  auto oracle_tail = [&](int n0) {
    double s = 0.0;
    for (int p = 0; p < sites; ++p)
      if (std::abs(p - radius) >= n0) s += vecC(p * sites + p);
    return s;
  };
  for (int n0 = 1; n0 <= radius; ++n0) {
    EXPECT_LT(oracle_tail(n0), oracle_tail(n0 - 1));
    EXPECT_LT(oracle_tail(n0) / oracle_tail(n0 - 1), 0.5);
  }

  SimConfig cfg;
  cfg.dt = 2e-3;
  cfg.t_end = 8.0;
  cfg.n_traj = 6000;
  cfg.seed = 9;
  cfg.workers = 4;
  const EmpiricalMeasure mu =
      estimate_measure(spec, cfg, Vector(sites, 0.0), 0, cfg.t_end);
  for (int n0 = 0; n0 <= 2; ++n0) {
    const Estimate e = tail_mass_estimate(mu, n0);
    EXPECT_NEAR(e.value, oracle_tail(n0), 3.0 * e.se + 5.0 * cfg.dt * oracle_tail(n0)) << n0;
  }
}

TEST(Moments, ConsistentSummaries) {
  const auto mu = gaussian_cloud(3, 400, 0.5, 10, 3);
  const MomentSummary m = moments(mu, 3);
  double second = 0.0, freq = 0.0;
  for (const auto& e : m.site_second_moment) second += e.value;
  for (const auto& e : m.regime_frequency) freq += e.value;
  EXPECT_NEAR(second, m.mean_sq_norm.value, 1e-12);
  EXPECT_NEAR(freq, 1.0, 1e-12);
}

TEST(EstimateMeasure, DeterministicSystemGivesIdenticalSamples) {
  ModelSpec spec = testing::linear_spec(1, 1.0, 2.0, 1.0, 0.0);
  spec.g_by_regime = {{0.5, 1.0, 0.5}};
  SimConfig cfg;
  cfg.dt = 0.01;
  cfg.t_end = 1.0;
  cfg.n_traj = 20;
  const auto mu = estimate_measure(spec, cfg, Vector{1.0, 0.0, -1.0}, 0, 1.0);
  for (std::size_t m = 1; m < mu.size(); ++m)
    for (int p = 0; p < 3; ++p) EXPECT_EQ(mu.point(m)[p], mu.point(0)[p]);
  EXPECT_THROW(estimate_measure(spec, cfg, Vector{1.0, 0.0, -1.0}, 0, 0.5), ValidationError);
}

TEST(EstimateMeasure, QuadruplingSamplesHalvesTheStandardError) {
  const ModelSpec spec = testing::linear_spec(0, 1.0, 1.0, 1.0);
  SimConfig cfg;
  cfg.dt = 0.01;
  cfg.t_end = 2.0;
  cfg.n_traj = 2000;
  const double se1 = moments(estimate_measure(spec, cfg, Vector{0.0}, 0, 2.0), 1).mean_sq_norm.se;
  cfg.n_traj = 8000;
  const double se4 = moments(estimate_measure(spec, cfg, Vector{0.0}, 0, 2.0), 1).mean_sq_norm.se;
  EXPECT_NEAR(se1 / se4, 2.0, 0.2);
}

}  // namespace
}  // namespace lss
