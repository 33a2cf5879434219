#include "frac/report.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "frac/common.hpp"

namespace frac {

json config_to_json(const RunConfig& cfg) {
    json j;
    j["subcommand"] = cfg.subcommand;
    j["s"] = cfg.s_values;
    j["grid_n"] = cfg.grid_n;
    j["z_levels"] = cfg.z_levels;
    j["trials"] = cfg.trials;
    j["seed"] = cfg.seed;
    j["coeffs"] = cfg.coeffs;
    j["coeff_value"] = cfg.coeff_value;
    j["lambda"] = cfg.lambda;
    j["Lambda"] = cfg.Lambda;
    j["method"] = cfg.method;
    j["mode"] = cfg.mode;
    j["estimate"] = cfg.estimate;
    j["barrier_case"] = cfg.barrier_case;
    j["gamma"] = cfg.gamma;
    j["radius"] = cfg.radius;
    j["opening"] = cfg.opening;
    j["samples"] = cfg.samples;
    j["quad_tol"] = cfg.quad_tol;
    j["tol_root"] = cfg.tol_root;
    j["tol_touch"] = cfg.tol_touch;
    return j;
}

ExperimentReport ExperimentReport::make(const std::string& command, const RunConfig& cfg,
                                        int threads) {
    ExperimentReport rep;
    rep.root["schema"] = "frac-report/1";
    rep.root["command"] = command;
    rep.root["config"] = config_to_json(cfg);
    rep.root["seed"] = cfg.seed;
    rep.root["threads"] = threads;
    rep.root["trials"] = json::array();
    rep.root["summary"] = json::object();
    rep.root["timing"] = json::object();
    return rep;
}

void ExperimentReport::set_timing(double seconds) {
    root["timing"]["seconds"] = seconds;
}

void write_text_atomic(const std::string& path, const std::string& text) {
    namespace fs = std::filesystem;
    const fs::path target(path);
    if (target.has_parent_path()) fs::create_directories(target.parent_path());
    fs::path tmp = target;
    tmp += ".tmp";
    {
        std::ofstream out(tmp);
        require(out.good(), "cannot open " + tmp.string());
        out << text;
    }
    fs::rename(tmp, target);
}

std::string trials_to_csv(const ExperimentReport& report) {
    std::ostringstream out;
    out.precision(17);
    const auto& trials = report.root.at("trials");
    if (trials.empty()) return "";
    const auto& first = trials.front();
    bool head = true;
    for (auto it = first.begin(); it != first.end(); ++it) {
        if (!head) out << ",";
        out << it.key();
        head = false;
    }
    out << "\n";
    for (const auto& row : trials) {
        bool first_col = true;
        for (auto it = row.begin(); it != row.end(); ++it) {
            if (!first_col) out << ",";
            if (it->is_number_float())
                out << it->get<double>();
            else
                out << it->dump();
            first_col = false;
        }
        out << "\n";
    }
    return out.str();
}

}  // namespace frac
