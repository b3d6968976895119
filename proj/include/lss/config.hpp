#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

#include "lss/model.hpp"

namespace lss {

/**
 * Builds a ModelSpec from its JSON document. Malformed documents throw
 * ConfigError naming the line (syntax errors) or the field (shape errors);
 * structurally inconsistent specs throw ValidationError from check_structure.
 *
 * g accepts an explicit per-regime list of site values or the shorthand
 * {"amplitude": [a_j], "decay": ρ} meaning g_i(j) = a_j ρ^|i|. h accepts a
 * per-regime [site][mode] table or {"amplitude": [a_j], "decay": ρ,
 * "mode_ratio": q} meaning h_{i,k}(j) = a_j ρ^|i| q^k with k zero-based.
 * A family without its own "period" inherits the top-level one.
 */
ModelSpec model_from_json(const nlohmann::json& doc);
ModelSpec model_from_string(const std::string& text);
ModelSpec load_model(const std::filesystem::path& path);

/// Explicit form (g and h tabulated); model_from_json(model_to_json(s)) == s.
nlohmann::json model_to_json(const ModelSpec& spec);

}  // namespace lss
