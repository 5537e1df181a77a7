#pragma once

#include <string>
#include <utility>
#include <vector>

#include "collar/evolution.hpp"
#include "collar/grid.hpp"

namespace collar {

// Resolved run settings. Every field maps to one dotted key in the plain-text
// config and to a long CLI flag of the same name.
struct RunConfig {
    GridSpec grid;
    EvolveConfig evolve;

    std::string initial_kind = "flat"; // flat | perturbed | file
    double initial_eps = 0.0;
    std::string initial_profile = "tt"; // traceless tangential x3 bump
    std::string initial_file;

    std::string family_kind = "constant"; // constant | diag-exponential | file
    double family_lambda = 0.0;
    std::string family_file;

    std::string output_dir = ".";
    int output_every = 1;
    bool output_snapshots = false;

    int energy_order = 0; // r for energy_k / energy_total / c_bd
    long seed = 0;        // randomized profiles only

    void validate() const; // throws config_error naming the offending key
};

// Parse `key=value` lines; '#' starts a comment, blank lines ignored.
RunConfig parse_config_text(const std::string& text);
RunConfig parse_config_file(const std::string& path);
// Apply one dotted assignment on top of an existing config.
void apply_config_entry(RunConfig& cfg, const std::string& key, const std::string& value);
// Full resolved config, one key per line; parses back to an equal config.
std::string serialize_config(const RunConfig& cfg);

// Names of every config key, for CLI flag registration.
std::vector<std::string> config_keys();

} // namespace collar
