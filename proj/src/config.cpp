#include "frac/config.hpp"

#include <algorithm>
#include <set>
#include <sstream>

namespace frac {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

bool to_double(const std::string& v, double& out) {
    try {
        std::size_t pos = 0;
        out = std::stod(v, &pos);
        return pos == v.size();
    } catch (...) {
        return false;
    }
}

bool to_int(const std::string& v, long long& out) {
    try {
        std::size_t pos = 0;
        out = std::stoll(v, &pos);
        return pos == v.size();
    } catch (...) {
        return false;
    }
}

}  // namespace

void apply_override(RunConfig& cfg, const std::string& key, const std::string& value,
                    std::vector<ConfigError>& errors) {
    auto bad = [&](const std::string& msg) { errors.push_back({key, msg}); };
    double d = 0.0;
    long long i = 0;

    if (key == "s") {
        cfg.s_values.clear();
        std::stringstream ss(value);
        std::string cell;
        while (std::getline(ss, cell, ',')) {
            if (!to_double(trim(cell), d)) {
                bad("not a number: " + cell);
                return;
            }
            cfg.s_values.push_back(d);
        }
        if (cfg.s_values.empty()) bad("empty list");
    } else if (key == "grid_n") {
        if (!to_int(value, i) || i < 10) bad("need an integer >= 10");
        else cfg.grid_n = static_cast<int>(i);
    } else if (key == "z_levels") {
        if (!to_int(value, i) || i < 8) bad("need an integer >= 8");
        else cfg.z_levels = static_cast<int>(i);
    } else if (key == "trials") {
        if (!to_int(value, i) || i < 1) bad("need an integer >= 1");
        else cfg.trials = static_cast<int>(i);
    } else if (key == "seed") {
        if (!to_int(value, i) || i < 0) bad("need a nonnegative integer");
        else cfg.seed = static_cast<std::uint64_t>(i);
    } else if (key == "threads") {
        if (!to_int(value, i) || i < 0) bad("need a nonnegative integer");
        else cfg.threads = static_cast<int>(i);
    } else if (key == "samples") {
        if (!to_int(value, i) || i < 1) bad("need an integer >= 1");
        else cfg.samples = static_cast<std::size_t>(i);
    } else if (key == "barrier_case") {
        if (!to_int(value, i) || i < 1 || i > 4) bad("case must be 1..4");
        else cfg.barrier_case = static_cast<int>(i);
    } else if (key == "coeffs") {
        cfg.coeffs = value;
    } else if (key == "coeff_value") {
        if (!to_double(value, d) || d <= 0.0) bad("need a positive number");
        else cfg.coeff_value = d;
    } else if (key == "lambda") {
        if (!to_double(value, d) || d <= 0.0) bad("need a positive number");
        else cfg.lambda = d;
    } else if (key == "Lambda") {
        if (!to_double(value, d) || d <= 0.0) bad("need a positive number");
        else cfg.Lambda = d;
    } else if (key == "input") {
        cfg.input = value;
    } else if (key == "out") {
        cfg.out = value;
    } else if (key == "method") {
        if (value != "quad" && value != "pde") bad("method must be quad or pde");
        else cfg.method = value;
    } else if (key == "mode") {
        if (value != "extension" && value != "ls") bad("mode must be extension or ls");
        else cfg.mode = value;
    } else if (key == "estimate") {
        if (value != "K" && value != "theta" && value != "Kd" && value != "qs")
            bad("estimate must be K, theta, Kd or qs");
        else cfg.estimate = value;
    } else if (key == "gamma") {
        if (!to_double(value, d) || d <= 0.0 || d >= 1.0) bad("gamma in (0,1)");
        else cfg.gamma = d;
    } else if (key == "radius") {
        if (!to_double(value, d) || d <= 0.0) bad("need a positive number");
        else cfg.radius = d;
    } else if (key == "opening") {
        if (!to_double(value, d) || d == 0.0) bad("need a nonzero number");
        else cfg.opening = d;
    } else if (key == "quad_tol") {
        if (!to_double(value, d) || d <= 0.0) bad("tolerance must be positive");
        else cfg.quad_tol = d;
    } else if (key == "tol_root") {
        if (!to_double(value, d) || d <= 0.0) bad("tolerance must be positive");
        else cfg.tol_root = d;
    } else if (key == "tol_touch") {
        if (!to_double(value, d) || d <= 0.0) bad("tolerance must be positive");
        else cfg.tol_touch = d;
    } else {
        bad("unknown key");
    }
}

void validate_config(const RunConfig& cfg, std::vector<ConfigError>& errors) {
    for (double s : cfg.s_values)
        if (!(s > 0.0) || !(s < 1.0))
            errors.push_back({"s", "fractional order must satisfy 0 < s < 1"});
    if (cfg.lambda > cfg.Lambda)
        errors.push_back({"lambda", "lambda must not exceed Lambda"});
}

ParsedConfig parse_config(const std::string& text) {
    ParsedConfig out;
    std::set<std::string> seen;
    std::stringstream ss(text);
    std::string line;
    int lineno = 0;
    while (std::getline(ss, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            out.errors.push_back({"line " + std::to_string(lineno), "expected key = value"});
            continue;
        }
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (!seen.insert(key).second) {
            out.errors.push_back({key, "duplicate key"});
            continue;
        }
        apply_override(out.config, key, value, out.errors);
    }
    validate_config(out.config, out.errors);
    return out;
}

}  // namespace frac
