#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace frac {

/// Run configuration: the documented key-value schema plus flag overrides.
/// Every tolerance is strictly positive; the seed lands in every output.
struct RunConfig {
    std::string subcommand;

    std::vector<double> s_values = {0.5};
    int grid_n = 129;          // base grid nodes
    int z_levels = 48;         // extension mesh levels
    int trials = 20;
    std::uint64_t seed = 1;
    int threads = 0;           // 0 = library default / FRAC_THREADS

    std::string coeffs = "constant";  // "constant", "random", or a CSV path
    double coeff_value = 1.0;
    double lambda = 1.0;
    double Lambda = 2.0;

    std::string input;   // input CSV (apply/solve)
    std::string out = "out";  // output stem; .csv/.json appended

    std::string method = "pde";       // extend: quad | pde
    std::string mode = "extension";   // harnack: extension | ls
    std::string estimate = "K";       // geometry: K | theta | Kd | qs
    int barrier_case = 1;
    double gamma = 0.25;
    double radius = 0.05;       // experiment scale R
    double opening = 1.0;       // paraboloid opening a
    std::size_t samples = 100000;

    double quad_tol = 1e-6;
    double tol_root = 1e-12;
    double tol_touch = 1e-9;
};

struct ConfigError {
    std::string key;
    std::string message;
};

struct ParsedConfig {
    RunConfig config;
    std::vector<ConfigError> errors;
    bool ok() const { return errors.empty(); }
};

/// Parses "key = value" lines ('#' comments). Unknown keys, duplicates and
/// out-of-range values are aggregated, not thrown one at a time.
ParsedConfig parse_config(const std::string& text);

/// Applies one override (same key names as the file) onto a config.
void apply_override(RunConfig& cfg, const std::string& key, const std::string& value,
                    std::vector<ConfigError>& errors);

/// Range validation shared by file parsing and flag overrides.
void validate_config(const RunConfig& cfg, std::vector<ConfigError>& errors);

}  // namespace frac
