#pragma once

#include <json.hpp>
#include <string>

#include "frac/config.hpp"

namespace frac {

using json = nlohmann::ordered_json;

/// Structured experiment record. Deterministic given (config, seed, thread
/// count): key order is fixed and timing lives in a single removable block.
struct ExperimentReport {
    json root;

    static ExperimentReport make(const std::string& command, const RunConfig& cfg, int threads);
    void add_trial(const json& row) { root["trials"].push_back(row); }
    void set_summary(const json& summary) { root["summary"] = summary; }
    void set_timing(double seconds);

    std::string to_json_text() const { return root.dump(2) + "\n"; }
};

/// Atomic write: temp file in the target directory, then rename. Parent
/// directories are created if missing.
void write_text_atomic(const std::string& path, const std::string& text);

/// CSV emission of the trial rows (columns from the first row's keys).
std::string trials_to_csv(const ExperimentReport& report);

json config_to_json(const RunConfig& cfg);

}  // namespace frac
