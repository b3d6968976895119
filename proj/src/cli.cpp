#include "lss/cli.hpp"

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "lss/config.hpp"
#include "lss/error.hpp"
#include "lss/experiments.hpp"
#include "lss/report_io.hpp"

namespace lss {
namespace {

namespace fs = std::filesystem;

constexpr std::uint64_t kDefaultSeed = 42;
constexpr int kDefaultEnsemble = 10000;

struct Options {
  std::string config;
  std::string out = ".";
  std::optional<std::uint64_t> seed;
  int workers = 0;
  std::optional<int> m;
  std::optional<double> dt;
  double s = 0.0;
  std::optional<double> t;
  double xi = 1.0;
  std::vector<double> xi_values;
  double xi2 = -1.0;
  int j0 = 0;
  std::vector<double> samples;
  std::vector<double> lags;
  std::vector<double> horizons;
  std::vector<double> grid;
  std::vector<double> eps_list;
  double eps0 = 0.0;
  std::vector<int> cut_levels;
  std::vector<std::string> starts;
  std::vector<std::string> pairs;
  std::vector<double> T_grid;
  std::optional<double> eta;
  bool warm = false;
  int floor_permutations = 200;
  std::size_t features = 256;
  std::optional<double> reference_lag;
  std::optional<double> horizon_limit;
};

std::uint64_t resolve_seed(const Options& o) {
  if (o.seed) return *o.seed;
  if (const char* env = std::getenv("LSS_SEED"); env && *env) {
    try {
      std::size_t used = 0;
      const auto v = std::stoull(env, &used, 10);
      if (used == std::string(env).size()) return v;
    } catch (const std::exception&) {
    }
    throw ConfigError(std::string("LSS_SEED is not an unsigned integer: '") + env + "'");
  }
  return kDefaultSeed;
}

int resolve_workers(const Options& o) {
  if (o.workers > 0) return o.workers;
  return std::max(1u, std::thread::hardware_concurrency());
}

Vector start_vector(const ModelSpec& spec, const std::vector<double>& values, double fill) {
  if (values.empty()) return Vector(spec.sites(), fill);
  if (static_cast<int>(values.size()) != spec.sites())
    throw ConfigError("--xi-values needs " + std::to_string(spec.sites()) + " entries, got " +
                      std::to_string(values.size()));
  return values;
}

/// "fill:regime" → constant start vector in the given regime.
std::vector<LatticeState> parse_starts(const ModelSpec& spec, const Options& o) {
  std::vector<std::string> items = o.starts;
  if (items.empty()) {
    const int last = spec.regimes() - 1;
    items = {"0.5:0", "-0.5:" + std::to_string(last), "0:" + std::to_string(last > 0 ? 1 : 0)};
  }
  std::vector<LatticeState> out;
  for (const std::string& item : items) {
    const auto colon = item.find(':');
    if (colon == std::string::npos)
      throw ConfigError("--starts entry '" + item + "' must look like fill:regime");
    try {
      out.push_back({Vector(spec.sites(), std::stod(item.substr(0, colon))),
                     std::stoi(item.substr(colon + 1))});
    } catch (const std::exception&) {
      throw ConfigError("--starts entry '" + item + "' must look like fill:regime");
    }
  }
  return out;
}

std::vector<std::pair<int, int>> parse_pairs(const Options& o) {
  std::vector<std::string> items = o.pairs.empty() ? std::vector<std::string>{"0:1"} : o.pairs;
  std::vector<std::pair<int, int>> out;
  for (const std::string& item : items) {
    const auto colon = item.find(':');
    try {
      if (colon == std::string::npos) throw std::invalid_argument(item);
      out.emplace_back(std::stoi(item.substr(0, colon)), std::stoi(item.substr(colon + 1)));
    } catch (const std::exception&) {
      throw ConfigError("--pairs entry '" + item + "' must look like i:j");
    }
  }
  return out;
}

std::vector<double> even_times(double s, double t, int count) {
  std::vector<double> out;
  for (int i = 1; i <= count; ++i) out.push_back(s + (t - s) * i / count);
  return out;
}

SimConfig sim_config(const ModelSpec& spec, const Options& o, double t_end, int default_m) {
  SimConfig cfg;
  cfg.s = o.s;
  cfg.t_end = t_end;
  cfg.dt = o.dt.value_or(default_dt(spec));
  cfg.seed = resolve_seed(o);
  cfg.n_traj = o.m.value_or(default_m);
  cfg.workers = resolve_workers(o);
  check_config(cfg);
  return cfg;
}

DlOptions dl_options(const Options& o) {
  DlOptions d;
  d.random_features = o.features;
  d.floor_permutations = o.floor_permutations;
  d.reference_lag = o.reference_lag;
  d.horizon_limit = o.horizon_limit;
  return d;
}

/// The generator alone, so coupling runs need no full model document.
GeneratorMatrix load_generator(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(path + ": malformed JSON: " + e.what());
  }
  if (!doc.is_object() || !doc.contains("generator"))
    throw ConfigError(path + ": field 'generator': missing");
  try {
    return GeneratorMatrix::from_rows(doc["generator"].get<std::vector<std::vector<double>>>());
  } catch (const nlohmann::json::exception&) {
    throw ConfigError(path + ": field 'generator': expected a list of numeric rows");
  }
}

class Emitter {
 public:
  Emitter(const Options& o, std::ostream& out) : dir_(o.out), out_(out) {}

  void write(const std::string& name, const std::string& text) {
    const fs::path path = dir_ / name;
    write_text_file(path, text);
    out_ << path.string() << '\n';
  }

 private:
  fs::path dir_;
  std::ostream& out_;
};

int emit_report(const ExperimentReport& rep, Emitter& emit, std::ostream& err) {
  std::ostringstream csv;
  write_report_csv(csv, rep);
  emit.write(rep.name + ".csv", csv.str());
  emit.write(rep.name + ".report.json", report_to_json(rep).dump(2) + "\n");
  err << rep.name << ": verdict=" << to_string(rep.verdict) << '\n';
  return rep.verdict == Verdict::kFail ? kExitFail : kExitOk;
}

/// Twelve significant digits, so 1.9999999999999996 reads as 2 on the console.
std::string display_number(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12g", x);
  return buf;
}

int cmd_validate(const Options& o, std::ostream& out, Emitter& emit) {
  const ModelSpec spec = load_model(o.config);
  const ConditionReport r = validate(spec);
  const std::vector<std::pair<std::string, double>> numbers = {
      {"lambda_min", r.lambda_min},
      {"lipschitz_f", r.lipschitz_f},
      {"beta0", r.beta0},
      {"norm_g", r.norm_g},
      {"norm_h", r.norm_h},
      {"norm_alpha", r.norm_alpha},
      {"norm_beta", r.norm_beta},
      {"norm_delta", r.norm_delta},
      {"norm_L", r.norm_L},
      {"norm_alpha_infinite", r.norm_alpha_infinite},
      {"norm_beta_infinite", r.norm_beta_infinite},
      {"norm_delta_infinite", r.norm_delta_infinite},
      {"norm_L_infinite", r.norm_L_infinite},
      {"varpi1", r.varpi1},
      {"varpi2", r.varpi2},
      {"gamma", r.gamma}};
  nlohmann::json doc = {{"mu_holds", r.mu_holds}, {"uc1_holds", r.uc1_holds}};
  out << "mu_holds=" << (r.mu_holds ? "true" : "false") << '\n';
  out << "uc1_holds=" << (r.uc1_holds ? "true" : "false") << '\n';
  for (const auto& [key, value] : numbers) {
    out << key << '=' << display_number(value) << '\n';
    doc[key] = value;
  }
  doc["model"] = model_to_json(spec);
  emit.write("validate.json", doc.dump(2) + "\n");
  return kExitOk;
}

int cmd_simulate(const Options& o, Emitter& emit) {
  const ModelSpec spec = load_model(o.config);
  const SimConfig cfg = sim_config(spec, o, o.t.value_or(1.0), 1);
  const Vector xi = start_vector(spec, o.xi_values, o.xi);
  const Trajectory traj = simulate(spec, cfg, xi, o.j0, o.samples);
  std::ostringstream csv;
  write_trajectory_csv(csv, traj, spec.trunc_radius);
  emit.write("trajectory.csv", csv.str());
  if (cfg.n_traj > 1) {
    const auto states = run_ensemble(spec, cfg, xi, o.j0);
    std::ostringstream ens;
    write_ensemble_csv(ens, states, spec.trunc_radius);
    emit.write("ensemble.csv", ens.str());
    std::vector<int> cuts = o.cut_levels;
    if (cuts.empty())
      for (int c = 0; c <= spec.trunc_radius; ++c) cuts.push_back(c);
    emit.write("ensemble.summary.json",
               measure_summary(EmpiricalMeasure::from_states(states), spec.regimes(), cuts)
                       .dump(2) +
                   "\n");
  }
  return kExitOk;
}

int run_subcommand(const std::string& name, const Options& o, std::ostream& out,
                   std::ostream& err) {
  Emitter emit(o, out);
  if (name == "validate") return cmd_validate(o, out, emit);
  if (name == "simulate") return cmd_simulate(o, emit);
  if (name == "coupling") {
    const GeneratorMatrix g = load_generator(o.config);
    const auto pairs = parse_pairs(o);
    const std::vector<double> grid =
        o.T_grid.empty() ? std::vector<double>{0.5, 1.0, 2.0} : o.T_grid;
    CouplingOptions opts;
    if (o.eta) opts.eta = *o.eta;
    return emit_report(exp_chain_coupling(g, pairs, grid, o.m.value_or(kDefaultEnsemble),
                                          resolve_seed(o), opts),
                       emit, err);
  }

  const ModelSpec spec = load_model(o.config);
  if (name == "energy") {
    const SimConfig cfg = sim_config(spec, o, o.t.value_or(o.s + 10.0), kDefaultEnsemble);
    const auto times = o.samples.empty() ? even_times(cfg.s, cfg.t_end, 20) : o.samples;
    return emit_report(exp_energy_bound(spec, cfg, start_vector(spec, o.xi_values, o.xi),
                                        o.j0, times),
                       emit, err);
  }
  if (name == "contraction") {
    const SimConfig cfg = sim_config(spec, o, o.t.value_or(o.s + 5.0), kDefaultEnsemble);
    const auto times = o.samples.empty() ? even_times(cfg.s, cfg.t_end, 10) : o.samples;
    return emit_report(exp_contraction(spec, cfg, start_vector(spec, o.xi_values, o.xi),
                                       Vector(spec.sites(), o.xi2), o.j0, times),
                       emit, err);
  }
  if (name == "tail") {
    const SimConfig cfg = sim_config(spec, o, o.t.value_or(o.s + 10.0), kDefaultEnsemble);
    const auto times = o.samples.empty() ? even_times(cfg.s, cfg.t_end, 5) : o.samples;
    std::vector<int> cuts = o.cut_levels;
    if (cuts.empty())
      for (int c = 0; c <= spec.trunc_radius; ++c) cuts.push_back(c);
    return emit_report(exp_tail(spec, cfg, start_vector(spec, o.xi_values, o.xi), o.j0, cuts,
                                times, TailOptions{o.eta}),
                       emit, err);
  }

  // The remaining experiments need γ for their default grids.
  const ConditionReport cond = validate(spec);
  const double settle = cond.gamma > 0.0 ? 8.0 / cond.gamma : 1.0;
  const DlOptions dl = dl_options(o);
  if (name == "pullback") {
    const double t_fixed = o.t.value_or(0.0);
    SimConfig cfg = sim_config(spec, o, t_fixed + 1.0, kDefaultEnsemble);
    std::vector<double> lags = o.lags;
    if (lags.empty())
      for (int k = 0; k <= 6; ++k) lags.push_back(settle * k / 4.0);
    return emit_report(exp_pullback(spec, cfg, t_fixed, lags, parse_starts(spec, o), dl), emit,
                       err);
  }
  if (name == "forward") {
    SimConfig cfg = sim_config(spec, o, o.s + 1.0, kDefaultEnsemble);
    std::vector<double> horizons = o.horizons;
    if (horizons.empty())
      for (int k = 1; k <= 6; ++k) horizons.push_back(settle * k / 4.0);
    return emit_report(
        exp_forward(spec, cfg, o.s, horizons, parse_starts(spec, o), o.warm, dl), emit, err);
  }
  if (name == "periodic") {
    SimConfig cfg = sim_config(spec, o, o.s + 1.0, kDefaultEnsemble);
    std::vector<double> grid = o.grid;
    if (grid.empty() && spec.period)
      for (int k = 0; k < 4; ++k) grid.push_back(*spec.period * k / 4.0);
    const LatticeState start{start_vector(spec, o.xi_values, o.xi), o.j0};
    return emit_report(exp_periodic(spec, cfg, grid, start, dl), emit, err);
  }
  if (name == "eps-sweep") {
    const double t_fixed = o.t.value_or(0.0);
    SimConfig cfg = sim_config(spec, o, t_fixed + 1.0, kDefaultEnsemble);
    std::vector<double> eps = o.eps_list;
    if (eps.empty())
      for (int n = 0; n < 5; ++n) eps.push_back(spec.epsilon * std::ldexp(1.0, -n));
    const LatticeState start{start_vector(spec, o.xi_values, o.xi), o.j0};
    return emit_report(
        exp_eps_sweep(spec, cfg, eps, o.eps0, t_fixed, start, o.cut_levels, dl), emit, err);
  }
  throw ConfigError("unknown subcommand '" + name + "'");
}

void add_common(CLI::App* sub, Options& o, bool needs_model = true) {
  sub->add_option("--config", o.config, needs_model ? "model document (JSON)"
                                                    : "document with a 'generator' key")
      ->required()
      ->check(CLI::ExistingFile);
  sub->add_option("--out", o.out, "output directory")->capture_default_str();
  sub->add_option("--seed", o.seed, "master seed (default 42, or LSS_SEED)");
  sub->add_option("--workers", o.workers, "worker threads (default: all cores)")
      ->check(CLI::NonNegativeNumber);
  sub->add_option("--m", o.m, "ensemble size")->check(CLI::PositiveNumber);
}

void add_sim(CLI::App* sub, Options& o) {
  sub->add_option("--dt", o.dt, "Euler-Maruyama step")->check(CLI::PositiveNumber);
  sub->add_option("--s", o.s, "start time");
  sub->add_option("--t", o.t, "end time (or fixed time for pullback and eps-sweep)");
  sub->add_option("--xi", o.xi, "constant initial value at every site");
  sub->add_option("--xi-values", o.xi_values, "explicit initial vector")->delimiter(',');
  sub->add_option("--j0", o.j0, "initial regime");
}

void add_dl(CLI::App* sub, Options& o) {
  sub->add_option("--floor-permutations", o.floor_permutations)->check(CLI::PositiveNumber);
  sub->add_option("--features", o.features, "random cosine features in the dictionary");
  sub->add_option("--reference-lag", o.reference_lag, "depth of the pullback standing in for mu_t");
  sub->add_option("--horizon-limit", o.horizon_limit, "lag by which the floor must be reached");
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Monte Carlo checks for stochastic lattice systems with Markovian switching",
               "lss"};
  app.require_subcommand(1);
  Options o;

  auto* validate_cmd = app.add_subcommand("validate", "print the condition report");
  add_common(validate_cmd, o);

  auto* simulate_cmd = app.add_subcommand("simulate", "one trajectory, plus an ensemble if --m > 1");
  add_common(simulate_cmd, o);
  add_sim(simulate_cmd, o);
  simulate_cmd->add_option("--samples", o.samples, "recording times")->delimiter(',');
  simulate_cmd->add_option("--cut-levels", o.cut_levels)->delimiter(',');

  auto* energy_cmd = app.add_subcommand("energy", "mean-square bound");
  add_common(energy_cmd, o);
  add_sim(energy_cmd, o);
  energy_cmd->add_option("--samples", o.samples)->delimiter(',');

  auto* contraction_cmd = app.add_subcommand("contraction", "synchronous-pair contraction");
  add_common(contraction_cmd, o);
  add_sim(contraction_cmd, o);
  contraction_cmd->add_option("--xi2", o.xi2, "constant second initial value");
  contraction_cmd->add_option("--samples", o.samples)->delimiter(',');

  auto* tail_cmd = app.add_subcommand("tail", "tail mass profile");
  add_common(tail_cmd, o);
  add_sim(tail_cmd, o);
  tail_cmd->add_option("--samples", o.samples)->delimiter(',');
  tail_cmd->add_option("--cut-levels", o.cut_levels)->delimiter(',');
  tail_cmd->add_option("--eta", o.eta, "bound for the largest cut level");

  auto* pullback_cmd = app.add_subcommand("pullback", "pullback convergence in distribution");
  add_common(pullback_cmd, o);
  add_sim(pullback_cmd, o);
  add_dl(pullback_cmd, o);
  pullback_cmd->add_option("--lags", o.lags)->delimiter(',');
  pullback_cmd->add_option("--starts", o.starts, "fill:regime entries")->delimiter(',');

  auto* forward_cmd = app.add_subcommand("forward", "forward convergence in distribution");
  add_common(forward_cmd, o);
  add_sim(forward_cmd, o);
  add_dl(forward_cmd, o);
  forward_cmd->add_option("--horizons", o.horizons)->delimiter(',');
  forward_cmd->add_option("--starts", o.starts, "fill:regime entries")->delimiter(',');
  forward_cmd->add_flag("--warm", o.warm, "also run a start drawn from the reference");

  auto* periodic_cmd = app.add_subcommand("periodic", "periodicity of the evolution system");
  add_common(periodic_cmd, o);
  add_sim(periodic_cmd, o);
  add_dl(periodic_cmd, o);
  periodic_cmd->add_option("--grid", o.grid)->delimiter(',');

  auto* eps_cmd = app.add_subcommand("eps-sweep", "limit as the noise intensity varies");
  add_common(eps_cmd, o);
  add_sim(eps_cmd, o);
  add_dl(eps_cmd, o);
  eps_cmd->add_option("--eps-list", o.eps_list)->delimiter(',');
  eps_cmd->add_option("--eps0", o.eps0);
  eps_cmd->add_option("--cut-levels", o.cut_levels)->delimiter(',');

  auto* coupling_cmd = app.add_subcommand("coupling", "coupling time of the switching chain");
  add_common(coupling_cmd, o, false);
  coupling_cmd->add_option("--pairs", o.pairs, "i:j entries")->delimiter(',');
  coupling_cmd->add_option("--T-grid", o.T_grid)->delimiter(',');
  coupling_cmd->add_option("--eta", o.eta);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  const std::string name = app.get_subcommands().front()->get_name();
  try {
    return run_subcommand(name, o, out, err);
  } catch (const RefusalError& e) {
    err << "refused: " << e.what() << '\n';
    return kExitRefused;
  } catch (const BlowUpError& e) {
    err << "error: " << e.what() << " (try a smaller --dt)\n";
    return kExitUsage;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }
}

}  // namespace lss
