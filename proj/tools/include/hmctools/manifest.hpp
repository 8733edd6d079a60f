#pragma once

#include <string>

#include <json.hpp>

namespace hmc::tools {

using Json = nlohmann::json;

/// {"path": ..., "fnv1a64": ...} for an existing input file.
Json input_entry(const std::string& path);

/// Pretty-printed JSON with sorted keys and a trailing newline; carries no
/// timestamps, so reruns with the same inputs produce identical bytes.
void write_manifest(const std::string& path, const Json& doc);

}  // namespace hmc::tools
