#include "lss/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "lss/error.hpp"

namespace lss {
namespace {

using nlohmann::json;

const std::vector<std::string> kKnownKeys = {
    "nu",    "lambda", "g",           "h",           "f_family", "sigma_family",
    "epsilon", "period", "trunc_radius", "noise_modes", "generator"};

[[noreturn]] void field_error(const std::string& field, const std::string& what) {
  throw ConfigError("field '" + field + "': " + what);
}

const json& require(const json& obj, const std::string& key, const std::string& path) {
  const auto it = obj.find(key);
  if (it == obj.end()) field_error(path + key, "missing");
  return *it;
}

double as_number(const json& v, const std::string& field) {
  if (!v.is_number()) field_error(field, "expected a number, got " + std::string(v.type_name()));
  return v.get<double>();
}

int as_int(const json& v, const std::string& field) {
  if (!v.is_number_integer())
    field_error(field, "expected an integer, got " + std::string(v.type_name()));
  return v.get<int>();
}

std::vector<double> as_numbers(const json& v, const std::string& field) {
  if (!v.is_array()) field_error(field, "expected an array of numbers");
  std::vector<double> out;
  for (std::size_t i = 0; i < v.size(); ++i)
    out.push_back(as_number(v[i], field + "[" + std::to_string(i) + "]"));
  return out;
}

std::optional<double> optional_number(const json& obj, const std::string& key,
                                      const std::string& path) {
  const auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return std::nullopt;
  return as_number(*it, path + key);
}

double number_or(const json& obj, const std::string& key, double fallback,
                 const std::string& path) {
  return optional_number(obj, key, path).value_or(fallback);
}

std::vector<Vector> parse_g(const json& v, int radius) {
  std::vector<Vector> out;
  if (v.is_object()) {
    const auto amp = as_numbers(require(v, "amplitude", "g."), "g.amplitude");
    const double decay = as_number(require(v, "decay", "g."), "g.decay");
    for (double a : amp) {
      Vector row;
      for (int i = -radius; i <= radius; ++i) row.push_back(a * std::pow(decay, std::abs(i)));
      out.push_back(std::move(row));
    }
  } else if (v.is_array()) {
    for (std::size_t j = 0; j < v.size(); ++j)
      out.push_back(as_numbers(v[j], "g[" + std::to_string(j) + "]"));
  } else {
    field_error("g", "expected an array per regime or {amplitude, decay}");
  }
  return out;
}

std::vector<SiteModeMatrix> parse_h(const json& v, int radius, int modes) {
  std::vector<SiteModeMatrix> out;
  const int sites = 2 * radius + 1;
  if (v.is_object()) {
    const auto amp = as_numbers(require(v, "amplitude", "h."), "h.amplitude");
    const double decay = as_number(require(v, "decay", "h."), "h.decay");
    const double ratio = number_or(v, "mode_ratio", 0.5, "h.");
    for (double a : amp) {
      SiteModeMatrix m(sites, modes);
      for (int p = 0; p < sites; ++p)
        for (int k = 0; k < modes; ++k)
          m(p, k) = a * std::pow(decay, std::abs(p - radius)) * std::pow(ratio, k);
      out.push_back(std::move(m));
    }
  } else if (v.is_array()) {
    for (std::size_t j = 0; j < v.size(); ++j) {
      const std::string field = "h[" + std::to_string(j) + "]";
      const json& table = v[j];
      if (!table.is_array()) field_error(field, "expected a [site][mode] table");
      SiteModeMatrix m(static_cast<int>(table.size()),
                       table.empty() ? 0 : static_cast<int>(table[0].size()));
      for (std::size_t p = 0; p < table.size(); ++p) {
        const auto row = as_numbers(table[p], field + "[" + std::to_string(p) + "]");
        if (static_cast<int>(row.size()) != m.modes())
          field_error(field, "rows have different lengths");
        for (int k = 0; k < m.modes(); ++k) m(static_cast<int>(p), k) = row[k];
      }
      out.push_back(std::move(m));
    }
  } else {
    field_error("h", "expected a [regime][site][mode] table or {amplitude, decay, mode_ratio}");
  }
  return out;
}

NonlinearityFamily parse_f(const json& v, std::optional<double> period) {
  if (!v.is_object()) field_error("f_family", "expected an object with a 'type'");
  const json& type = require(v, "type", "f_family.");
  if (!type.is_string()) field_error("f_family.type", "expected a string");
  const std::string name = type.get<std::string>();
  if (name == "zero") return NonlinearityFamily(ZeroDrift{});
  if (name == "tanh") {
    TanhDrift f;
    f.amplitude = as_numbers(require(v, "amplitude", "f_family."), "f_family.amplitude");
    f.slope = as_numbers(require(v, "slope", "f_family."), "f_family.slope");
    f.decay = number_or(v, "decay", 0.5, "f_family.");
    f.period = v.contains("period") ? optional_number(v, "period", "f_family.") : period;
    return NonlinearityFamily(f);
  }
  field_error("f_family.type", "unknown family '" + name + "' (expected tanh or zero)");
}

DiffusionFamily parse_sigma(const json& v, std::optional<double> period) {
  if (!v.is_object()) field_error("sigma_family", "expected an object with a 'type'");
  const json& type = require(v, "type", "sigma_family.");
  if (!type.is_string()) field_error("sigma_family.type", "expected a string");
  const std::string name = type.get<std::string>();
  if (name == "zero") return DiffusionFamily(ZeroDiffusion{});
  if (name == "sine") {
    SineDiffusion s;
    s.site_amplitude =
        as_numbers(require(v, "site_amplitude", "sigma_family."), "sigma_family.site_amplitude");
    s.state_amplitude = as_numbers(require(v, "state_amplitude", "sigma_family."),
                                   "sigma_family.state_amplitude");
    s.decay = number_or(v, "decay", 0.5, "sigma_family.");
    s.kappa0 = number_or(v, "kappa0", 1.0, "sigma_family.");
    s.eta0 = number_or(v, "eta0", 1.0, "sigma_family.");
    s.mode_ratio = number_or(v, "mode_ratio", 0.5, "sigma_family.");
    s.period = v.contains("period") ? optional_number(v, "period", "sigma_family.") : period;
    return DiffusionFamily(s);
  }
  field_error("sigma_family.type", "unknown family '" + name + "' (expected sine or zero)");
}

json optional_json(const std::optional<double>& x) {
  return x ? json(*x) : json(nullptr);
}

}  // namespace

ModelSpec model_from_json(const json& doc) {
  if (!doc.is_object()) throw ConfigError("model document must be a JSON object");
  for (const auto& [key, value] : doc.items()) {
    (void)value;
    if (std::find(kKnownKeys.begin(), kKnownKeys.end(), key) == kKnownKeys.end())
      field_error(key, "unknown key");
  }
  ModelSpec spec;
  spec.nu = as_number(require(doc, "nu", ""), "nu");
  spec.lambda_by_regime = as_numbers(require(doc, "lambda", ""), "lambda");
  spec.epsilon = number_or(doc, "epsilon", 1.0, "");
  spec.period = optional_number(doc, "period", "");
  spec.trunc_radius = as_int(require(doc, "trunc_radius", ""), "trunc_radius");
  spec.noise_modes = doc.contains("noise_modes") ? as_int(doc["noise_modes"], "noise_modes") : 1;
  if (spec.trunc_radius < 0) field_error("trunc_radius", "must be nonnegative");
  if (spec.noise_modes < 1) field_error("noise_modes", "must be at least 1");

  spec.g_by_regime = parse_g(require(doc, "g", ""), spec.trunc_radius);
  spec.h_by_regime = parse_h(require(doc, "h", ""), spec.trunc_radius, spec.noise_modes);
  spec.f_family = doc.contains("f_family") ? parse_f(doc["f_family"], spec.period)
                                           : NonlinearityFamily{};
  spec.sigma_family = doc.contains("sigma_family")
                          ? parse_sigma(doc["sigma_family"], spec.period)
                          : DiffusionFamily{};

  const json& gen = require(doc, "generator", "");
  if (!gen.is_array()) field_error("generator", "expected a row-major list of lists");
  std::vector<std::vector<double>> rows;
  for (std::size_t r = 0; r < gen.size(); ++r)
    rows.push_back(as_numbers(gen[r], "generator[" + std::to_string(r) + "]"));
  try {
    spec.generator = GeneratorMatrix::from_rows(rows);
  } catch (const Error& e) {
    field_error("generator", e.what());
  }

  check_structure(spec);
  return spec;
}

ModelSpec model_from_string(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    // nlohmann reports "at line L, column C" in the message.
    throw ConfigError(std::string("malformed JSON: ") + e.what());
  }
  return model_from_json(doc);
}

ModelSpec load_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path.string() + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  try {
    return model_from_string(buf.str());
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

json model_to_json(const ModelSpec& spec) {
  json doc;
  doc["nu"] = spec.nu;
  doc["lambda"] = spec.lambda_by_regime;
  doc["g"] = spec.g_by_regime;
  json h = json::array();
  for (const SiteModeMatrix& m : spec.h_by_regime) {
    json table = json::array();
    for (int p = 0; p < m.sites(); ++p) {
      json row = json::array();
      for (int k = 0; k < m.modes(); ++k) row.push_back(m(p, k));
      table.push_back(row);
    }
    h.push_back(table);
  }
  doc["h"] = h;

  if (const auto* f = std::get_if<TanhDrift>(&spec.f_family.params())) {
    doc["f_family"] = {{"type", "tanh"},
                       {"amplitude", f->amplitude},
                       {"slope", f->slope},
                       {"decay", f->decay},
                       {"period", optional_json(f->period)}};
  } else {
    doc["f_family"] = {{"type", "zero"}};
  }
  if (const auto* s = std::get_if<SineDiffusion>(&spec.sigma_family.params())) {
    doc["sigma_family"] = {{"type", "sine"},
                           {"site_amplitude", s->site_amplitude},
                           {"state_amplitude", s->state_amplitude},
                           {"decay", s->decay},
                           {"kappa0", s->kappa0},
                           {"eta0", s->eta0},
                           {"mode_ratio", s->mode_ratio},
                           {"period", optional_json(s->period)}};
  } else {
    doc["sigma_family"] = {{"type", "zero"}};
  }
  doc["epsilon"] = spec.epsilon;
  doc["period"] = optional_json(spec.period);
  doc["trunc_radius"] = spec.trunc_radius;
  doc["noise_modes"] = spec.noise_modes;
  doc["generator"] = spec.generator.rows();
  return doc;
}

}  // namespace lss
