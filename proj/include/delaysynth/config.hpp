#pragma once

#include <filesystem>
#include <string_view>

#include "json.hpp"

namespace delaysynth {

/// Parses a TOML-style key/value file into a JSON object.
///
/// Supported: `# comments`, `[section]` headers (one level, dots allowed in
/// the name to nest), `key = value` with double-quoted strings (\" \\ \n \t
/// escapes), integers (optionally with `_` separators), floats, true/false,
/// and single-line arrays of those. Keys before the first header land at the
/// top level. Duplicate keys are a FormatError that names the line.
nlohmann::json parse_config(std::string_view text);
nlohmann::json load_config(const std::filesystem::path& path);

}  // namespace delaysynth
