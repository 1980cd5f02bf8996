#pragma once

#include <stdexcept>
#include <string>

#include "bubblesim/scenario.hpp"

namespace bubblesim {

/// Parse or validation failure; the message carries line/field diagnostics.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Parses the flat-section `key = value` scenario format:
///
///   [scenario]
///   kind = "optimist"
///   D0 = 2.0
///   v = 0.2
///
/// Strings are quoted, numbers unquoted, vectors comma-separated. Unset keys
/// take the library defaults (T = 1, rho = 0.05, n_steps = 2000,
/// n_paths = 100000). Throws ConfigError with a line diagnostic on parse
/// failure and with the offending field name on constraint violations.
ScenarioConfig parse_scenario_config(const std::string& path);

/// Same grammar, from an in-memory string (used by tests).
ScenarioConfig parse_scenario_config_text(const std::string& text,
                                          const std::string& origin = "<memory>");

}  // namespace bubblesim
