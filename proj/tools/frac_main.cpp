#include <CLI11.hpp>
#include <fstream>
#include <iostream>
#include <sstream>

#include "frac/parallel.hpp"
#include "frac/runner.hpp"

namespace {

struct FlagBag {
    std::string config_path;
    std::vector<std::pair<std::string, std::string>> overrides;
};

void add_common(CLI::App* sub, FlagBag* bag) {
    sub->add_option("--config", bag->config_path, "key = value configuration file");
    auto grab = [bag](const std::string& key) {
        return [bag, key](const std::string& v) { bag->overrides.emplace_back(key, v); };
    };
    sub->add_option_function<std::string>("--s", grab("s"), "fractional order(s), comma separated");
    sub->add_option_function<std::string>("--grid-n", grab("grid_n"), "base grid nodes");
    sub->add_option_function<std::string>("--z-levels", grab("z_levels"), "extension z levels");
    sub->add_option_function<std::string>("--trials", grab("trials"), "trial count");
    sub->add_option_function<std::string>("--seed", grab("seed"), "RNG seed");
    sub->add_option_function<std::string>("--threads", grab("threads"), "worker threads");
    sub->add_option_function<std::string>("--samples", grab("samples"), "sampling count");
    sub->add_option_function<std::string>("--coeffs", grab("coeffs"),
                                          "constant | random | coefficients CSV path");
    sub->add_option_function<std::string>("--coeff-value", grab("coeff_value"),
                                          "constant coefficient value");
    sub->add_option_function<std::string>("--lambda", grab("lambda"), "ellipticity lower bound");
    sub->add_option_function<std::string>("--Lambda", grab("Lambda"), "ellipticity upper bound");
    sub->add_option_function<std::string>("--input", grab("input"), "input CSV");
    sub->add_option_function<std::string>("--out", grab("out"), "output stem");
    sub->add_option_function<std::string>("--method", grab("method"), "extend: quad | pde");
    sub->add_option_function<std::string>("--mode", grab("mode"), "harnack: extension | ls");
    sub->add_option_function<std::string>("--estimate", grab("estimate"),
                                          "geometry: K | theta | Kd | qs");
    sub->add_option_function<std::string>("--case", grab("barrier_case"), "barrier case 1..4");
    sub->add_option_function<std::string>("--gamma", grab("gamma"), "ring shrink factor");
    sub->add_option_function<std::string>("--radius", grab("radius"), "experiment scale R");
    sub->add_option_function<std::string>("--opening", grab("opening"), "paraboloid opening a");
    sub->add_option_function<std::string>("--quad-tol", grab("quad_tol"), "quadrature tolerance");
}

}  // namespace

int main(int argc, char** argv) {
    frac::par::init_threads_from_env();

    CLI::App app{"fractional powers of nondivergence-form elliptic operators: "
                 "solvers, Monge-Ampere geometry, and Harnack experiments"};
    app.require_subcommand(1);
    FlagBag bag;
    const char* names[] = {"apply",   "solve",   "extend", "geometry", "paraboloid",
                           "barrier", "harnack", "holder", "cover"};
    const char* descs[] = {"apply the fractional operator to a grid function",
                           "solve the fractional Poisson problem",
                           "solve the degenerate extension problem",
                           "estimate structural geometry constants",
                           "run contact-set measure experiments",
                           "build and verify ring barriers",
                           "measure empirical Harnack constants",
                           "fit oscillation-decay exponents",
                           "cube covers and nested-family decay"};
    for (int i = 0; i < 9; ++i) add_common(app.add_subcommand(names[i], descs[i]), &bag);

    CLI11_PARSE(app, argc, argv);

    frac::RunConfig cfg;
    std::vector<frac::ConfigError> errors;
    if (!bag.config_path.empty()) {
        std::ifstream in(bag.config_path);
        if (!in.good()) {
            std::cerr << "error: cannot read config file " << bag.config_path << "\n";
            return 2;
        }
        std::stringstream ss;
        ss << in.rdbuf();
        frac::ParsedConfig parsed = frac::parse_config(ss.str());
        cfg = parsed.config;
        errors = parsed.errors;
    }
    for (const auto& [key, value] : bag.overrides)
        frac::apply_override(cfg, key, value, errors);
    frac::validate_config(cfg, errors);
    if (!errors.empty()) {
        for (const auto& e : errors) std::cerr << "config error: " << e.key << ": " << e.message << "\n";
        return 2;
    }
    cfg.subcommand = app.get_subcommands().front()->get_name();

    try {
        frac::ExperimentReport rep = frac::run(cfg);
        std::cout << rep.root["summary"].dump(2) << "\n";
    } catch (const std::invalid_argument& e) {
        std::cerr << "validation error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 3;
    }
    return 0;
}
