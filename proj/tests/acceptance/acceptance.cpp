// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fails.
// Runs at M = 10^4, dt = 0.005 on configs/standard.json unless noted.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <sstream>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "lss/cli.hpp"
#include "lss/config.hpp"
#include "lss/experiments.hpp"
#include "lss/measures.hpp"
#include "lss/switching.hpp"
#include "test_support.hpp"

namespace {

using namespace lss;
namespace fs = std::filesystem;

constexpr int kSamples = 10000;
constexpr double kDt = 0.005;
const std::string kConfigDir = LSS_CONFIG_DIR;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string num(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", x);
  return buf;
}

int workers() { return static_cast<int>(std::max(1u, std::thread::hardware_concurrency())); }

SimConfig config(double s, double t_end) {
  SimConfig cfg;
  cfg.dt = kDt;
  cfg.s = s;
  cfg.t_end = t_end;
  cfg.n_traj = kSamples;
  cfg.seed = 42;
  cfg.workers = workers();
  return cfg;
}

ModelSpec standard() { return load_model(kConfigDir + "/standard.json"); }

std::vector<double> even_times(double s, double t, int count) {
  std::vector<double> out;
  for (int i = 1; i <= count; ++i) out.push_back(s + (t - s) * i / count);
  return out;
}

std::vector<LatticeState> default_starts(const ModelSpec& spec) {
  return {{Vector(spec.sites(), 0.5), 0},
          {Vector(spec.sites(), -0.5), spec.regimes() - 1},
          {Vector(spec.sites(), 0.0), 1}};
}

double settle(const ModelSpec& spec) { return 8.0 / validate(spec).gamma; }

Estimate ensemble_mean_square(const ModelSpec& spec, double t, double dt = kDt) {
  SimConfig cfg = config(0.0, t);
  cfg.dt = dt;
  const auto mu = estimate_measure(spec, cfg, Vector(spec.sites(), 0.0), 0, t);
  return moments(mu, spec.regimes()).mean_sq_norm;
}

Outcome energy() {
  const ModelSpec spec = standard();
  const auto rep = exp_energy_bound(spec, config(0.0, 10.0), Vector(spec.sites(), 0.0), 0,
                                    even_times(0.0, 10.0, 20));
  // Control: dU = −3U dt + dW has stationary variance 1/6.
  const Estimate ou = ensemble_mean_square(testing::linear_spec(0, 1.0, 1.0, 1.0), 10.0);
  const bool control = std::abs(ou.value - 1.0 / 6.0) <= 3.0 * ou.se + 5.0 * kDt / 6.0;
  return {rep.verdict == Verdict::kPass && control,
          "verdict=" + to_string(rep.verdict) + " max_ratio=" +
              num(rep.summary.value("max_estimate_to_bound_ratio", 0.0)) + " ou_variance=" + num(ou.value) +
              " (oracle 0.1667)"};
}

Outcome contraction() {
  const ModelSpec spec = standard();
  const auto rep = exp_contraction(spec, config(0.0, 5.0), Vector(spec.sites(), 0.5),
                                   Vector(spec.sites(), -0.5), 0, even_times(0.0, 5.0, 10));
  // Linear single site: the difference decays as e^{−(2ν+λ)t}, so E|Δ|² has rate 2(2ν+λ) = 8.
  const ModelSpec lin = testing::linear_spec(0, 1.0, 2.0, 1.0);
  const auto lrep =
      exp_contraction(lin, config(0.0, 1.0), Vector{1.0}, Vector{-1.0}, 0, even_times(0.0, 1.0, 5));
  const double exponent = lrep.summary["fitted_exponent"].get<double>();
  const bool rate = std::abs(exponent - 8.0) <= 0.05 * 8.0;
  return {rep.verdict == Verdict::kPass && rate,
          "verdict=" + to_string(rep.verdict) + " fitted_exponent=" +
              num(rep.summary["fitted_exponent"].is_number()
                      ? rep.summary["fitted_exponent"].get<double>()
                      : NAN) +
              " linear_exponent=" + num(exponent) + " (oracle 8)"};
}

Outcome tail() {
  const ModelSpec spec = standard();
  std::vector<int> cuts;
  for (int c = 0; c <= spec.trunc_radius; ++c) cuts.push_back(c);
  const auto rep = exp_tail(spec, config(0.0, 10.0), Vector(spec.sites(), 0.0), 0, cuts,
                            even_times(0.0, 10.0, 5));
  return {rep.verdict == Verdict::kPass, "verdict=" + to_string(rep.verdict)};
}

Outcome pullback() {
  const ModelSpec spec = standard();
  std::vector<double> lags;
  for (int k = 0; k <= 6; ++k) lags.push_back(settle(spec) * k / 4.0);
  const auto rep = exp_pullback(spec, config(0.0, 1.0), 0.0, lags, default_starts(spec));
  return {rep.verdict == Verdict::kPass, "verdict=" + to_string(rep.verdict)};
}

Outcome forward() {
  const ModelSpec spec = standard();
  std::vector<double> horizons;
  for (int k = 1; k <= 6; ++k) horizons.push_back(settle(spec) * k / 4.0);
  const auto rep = exp_forward(spec, config(0.0, 1.0), 0.0, horizons, default_starts(spec));
  return {rep.verdict == Verdict::kPass, "verdict=" + to_string(rep.verdict)};
}

Outcome periodic() {
  const ModelSpec spec = standard();
  std::vector<double> grid;
  for (int k = 0; k < 4; ++k) grid.push_back(*spec.period * k / 4.0);
  const auto rep =
      exp_periodic(spec, config(0.0, 1.0), grid, {Vector(spec.sites(), 0.0), 0});
  const bool control = rep.summary.value("negative_control_separated", false);

  // Forced single site: du = (−3u + cos ωt)dt + dW has periodic mean
  // m(t) = (3 cos ωt + ω sin ωt)/(9 + ω²).
  ModelSpec ou = testing::linear_spec(0, 1.0, 1.0, 1.0);
  ou.period = 2.0;
  ou.f_family = TanhDrift{{1.0}, {0.0}, 0.5, 2.0};
  const double w = std::numbers::pi;
  bool mean_ok = true;
  double worst = 0.0;
  for (int k = 0; k < 4; ++k) {
    const double t = 10.0 + 0.5 * k;
    const auto mu = estimate_measure(ou, config(0.0, t), Vector{0.0}, 0, t);
    const Estimate m = moments(mu, 1).site_mean[0];
    const double oracle = (3.0 * std::cos(w * t) + w * std::sin(w * t)) / (9.0 + w * w);
    const double z = std::abs(m.value - oracle) / m.se;
    worst = std::max(worst, z);
    if (std::abs(m.value - oracle) > 3.0 * m.se + 5.0 * kDt * std::abs(oracle)) mean_ok = false;
  }
  return {rep.verdict == Verdict::kPass && control && mean_ok,
          "verdict=" + to_string(rep.verdict) +
              " negative_control_separated=" + (control ? "true" : "false") +
              " periodic_mean_worst_z=" + num(worst)};
}

Outcome eps_limit() {
  const ModelSpec spec = standard();
  std::vector<double> eps;
  for (int n = 0; n < 5; ++n) eps.push_back(std::ldexp(1.0, -n));
  const auto rep = exp_eps_sweep(spec, config(1.0, 2.0), eps, 0.0, 1.0,
                                 {Vector(spec.sites(), 0.0), 0});
  // Single site: the stationary variance is ε²/6.
  bool scaling = true;
  double worst = 0.0;
  for (double e : eps) {
    const ModelSpec ou = testing::linear_spec(0, 1.0, 1.0, 1.0, e);
    const Estimate v = ensemble_mean_square(ou, 5.0);
    const double oracle = e * e / 6.0;
    worst = std::max(worst, std::abs(v.value - oracle) / v.se);
    if (std::abs(v.value - oracle) > 3.0 * v.se + 5.0 * kDt * oracle) scaling = false;
  }
  return {rep.verdict == Verdict::kPass && scaling,
          "verdict=" + to_string(rep.verdict) + " ou_variance_worst_z=" + num(worst)};
}

Outcome chain_coupling() {
  const std::vector<double> grid{0.5, 1.0, 2.0};
  const std::vector<std::pair<int, int>> two{{0, 1}};
  const auto g2 = GeneratorMatrix::from_rows({{-1, 1}, {1, -1}});
  const auto rep2 = exp_chain_coupling(g2, two, grid, kSamples, 42);
  bool oracle = true;
  for (std::size_t i = 0; i < grid.size(); ++i)
    oracle = oracle && std::abs(rep2.points[i].bound - (1.0 - std::exp(-2.0 * grid[i]))) < 1e-12;
  const auto g3 = GeneratorMatrix::from_rows({{-1, 1, 0}, {0, -1.5, 1.5}, {2, 0, -2}});
  const std::vector<std::pair<int, int>> three{{0, 1}, {0, 2}, {1, 2}};
  const auto rep3 = exp_chain_coupling(g3, three, grid, kSamples, 42);
  return {rep2.verdict == Verdict::kPass && rep3.verdict == Verdict::kPass && oracle,
          "two_state=" + to_string(rep2.verdict) + " p(T=1)=" + num(rep2.points[1].value) +
              " (oracle 0.8647) three_state=" + to_string(rep3.verdict)};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

int cli(std::vector<std::string> args) {
  args.insert(args.begin(), "lss");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  return run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
}

Outcome determinism() {
  const fs::path dir = fs::temp_directory_path() / "lss_acceptance_determinism";
  fs::remove_all(dir);
  const std::string cfg = kConfigDir + "/standard.json";
  bool same = true;
  for (const char* w : {"1", "3"}) {
    const std::string out = (dir / w).string();
    same = same && cli({"simulate", "--config", cfg, "--m", "500", "--dt", "0.01", "--t", "2",
                        "--seed", "11", "--workers", w, "--out", out}) == kExitOk;
    same = same && cli({"energy", "--config", cfg, "--m", "500", "--dt", "0.01", "--t", "2",
                        "--seed", "11", "--workers", w, "--out", out}) == kExitOk;
  }
  for (const char* f : {"trajectory.csv", "ensemble.csv", "energy.csv"}) {
    const std::string a = slurp(dir / "1" / f);
    same = same && !a.empty() && a == slurp(dir / "3" / f);
  }
  fs::remove_all(dir);
  return {same, "ensemble, trajectory and report CSVs byte-identical for --workers 1 and 3"};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"energy_bound", energy},
      {"pair_contraction", contraction},
      {"tail_estimate", tail},
      {"pullback_convergence", pullback},
      {"forward_convergence", forward},
      {"periodicity", periodic},
      {"noise_intensity_limit", eps_limit},
      {"chain_coupling", chain_coupling},
      {"determinism", determinism},
  };
  int failures = 0;
  for (const auto& [name, run] : criteria) {
    const auto started = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = run();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    std::printf("%s %s: %s [%.1fs]\n", o.pass ? "PASS" : "FAIL", name.c_str(), o.detail.c_str(),
                secs);
    std::fflush(stdout);
    failures += o.pass ? 0 : 1;
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failures,
              criteria.size());
  return failures == 0 ? 0 : 1;
}
