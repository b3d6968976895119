#include <gtest/gtest.h>

#include <cmath>
#include <utility>
#include <vector>

#include "lss/error.hpp"
#include "lss/experiments.hpp"
#include "test_support.hpp"

namespace lss {
namespace {

SimConfig small_config(double t_end, int m, double dt = 0.01) {
  SimConfig cfg;
  cfg.dt = dt;
  cfg.t_end = t_end;
  cfg.n_traj = m;
  cfg.seed = 5;
  cfg.workers = 2;
  return cfg;
}

TEST(Energy, ScalarLinearPasses) {
  // dU = −4U dt + dW; E U² stays below 1/8 from a zero start.
  const ModelSpec spec = testing::linear_spec(0, 1.0, 2.0, 1.0);
  const std::vector<double> times{1.0, 2.0, 4.0};
  const auto rep = exp_energy_bound(spec, small_config(4.0, 2000), Vector{0.0}, 0, times);
  EXPECT_EQ(rep.verdict, Verdict::kPass);
  EXPECT_EQ(rep.points.size(), times.size());
  for (const auto& p : rep.points) EXPECT_LE(p.value, p.bound + 3.0 * p.se);
}

TEST(Energy, RefusesWithoutMeanSquareCondition) {
  ModelSpec spec = testing::standard_spec();
  spec.lambda_by_regime = {1.5, 2.0};
  const std::vector<double> times{1.0};
  EXPECT_THROW(exp_energy_bound(spec, small_config(1.0, 10), Vector(spec.sites(), 0.0), 0,
                                times),
               RefusalError);
}

TEST(Contraction, EqualStartsTriviallyPass) {
  const ModelSpec spec = testing::standard_spec();
  const Vector xi(spec.sites(), 0.3);
  const std::vector<double> times{0.5, 1.0};
  const auto rep = exp_contraction(spec, small_config(1.0, 50), xi, xi, 0, times);
  EXPECT_EQ(rep.verdict, Verdict::kPass);
  for (const auto& p : rep.points) EXPECT_EQ(p.value, 0.0);
}

TEST(Tail, TinyEtaFails) {
  const ModelSpec spec = testing::standard_spec();
  const std::vector<int> cuts{0, 1, 2};
  const std::vector<double> times{1.0};
  TailOptions opts;
  opts.eta = 1e-12;
  const auto rep =
      exp_tail(spec, small_config(1.0, 200), Vector(spec.sites(), 0.0), 0, cuts, times, opts);
  EXPECT_EQ(rep.verdict, Verdict::kFail);
  EXPECT_FALSE(rep.summary["below_eta"].get<bool>());
}

TEST(Periodic, RefusesAperiodicModel) {
  const ModelSpec spec = testing::linear_spec(0, 1.0, 2.0, 1.0);
  const std::vector<double> grid{0.0};
  EXPECT_THROW(exp_periodic(spec, small_config(1.0, 10), grid, {Vector{0.0}, 0}), RefusalError);
}

TEST(Coupling, MatchesTwoStateOracle) {
  const auto g = GeneratorMatrix::from_rows({{-1, 1}, {1, -1}});
  const std::vector<std::pair<int, int>> pairs{{0, 1}};
  const std::vector<double> grid{0.5, 1.0, 2.0};
  const auto rep = exp_chain_coupling(g, pairs, grid, 10000, 7);
  EXPECT_EQ(rep.verdict, Verdict::kPass);
  ASSERT_EQ(rep.points.size(), 3u);
  EXPECT_NEAR(rep.points[1].bound, 1.0 - std::exp(-2.0), 1e-12);
  // P{τ ≤ T} = 1 − e^{−2T} ≥ 0.95 at T = ln(20)/2.
  EXPECT_NEAR(rep.summary["pairs"][0]["oracle_T_for_eta"].get<double>(), std::log(20.0) / 2.0,
              1e-9);
}

TEST(Coupling, RefusesReducibleGenerator) {
  const auto g = GeneratorMatrix::from_rows({{0, 0}, {1, -1}});
  const std::vector<std::pair<int, int>> pairs{{0, 1}};
  const std::vector<double> grid{1.0};
  EXPECT_THROW(exp_chain_coupling(g, pairs, grid, 10, 1), RefusalError);
}

TEST(NoiseFloor, NeverBelowMinimumAndCoversNullDistances) {
  const ModelSpec spec = testing::standard_spec();
  SimConfig cfg = small_config(1.0, 400);
  const LatticeState start{Vector(spec.sites(), 0.0), 0};
  const auto a = pullback_measure(spec, cfg, start, 1.0, 1.0, stream_tag("a"));
  const auto b = pullback_measure(spec, cfg, start, 1.0, 1.0, stream_tag("b"));
  const auto dict = TestFunctionDictionary::standard(spec.sites(), 2, 1, 64);
  const NoiseFloor floor = calibrate_noise_floor(a, b, dict, 1, 100, 3);
  EXPECT_GE(floor.value, 1e-9);
  EXPECT_GE(floor.value, floor.null_median);
  const NoiseFloor same = calibrate_noise_floor(a, a, dict, 1, 20, 3);
  EXPECT_GE(same.value, 1e-9);
}

TEST(Pullback, ZeroLagIsTheDiracCloud) {
  const ModelSpec spec = testing::standard_spec();
  const LatticeState start{Vector(spec.sites(), 0.7), 1};
  const auto mu = pullback_measure(spec, small_config(1.0, 5), start, 3.0, 0.0, stream_tag("x"));
  ASSERT_EQ(mu.size(), 5u);
  for (std::size_t m = 0; m < mu.size(); ++m) {
    EXPECT_EQ(mu.regime(m), 1);
    for (double v : mu.point(m)) EXPECT_EQ(v, 0.7);
  }
}

TEST(ReferenceLag, DrivesInitialMassBelowOneInAMillion) {
  const ConditionReport cond = validate(testing::standard_spec());
  const Vector xi(5, 2.0);
  const double lag = reference_lag(cond, xi);
  EXPECT_NEAR(std::exp(-cond.gamma * lag) * 20.0, 1e-6, 1e-12);
  EXPECT_NEAR(reference_lag(cond, Vector(5, 0.0)) * cond.gamma, std::log(1e6), 1e-9);
}

}  // namespace
}  // namespace lss
