#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "frac/runner.hpp"

using namespace frac;

TEST_CASE("config parsing") {
    SUBCASE("minimal config fills defaults") {
        ParsedConfig p = parse_config("s = 0.5\ntrials = 3\n");
        CHECK(p.ok());
        CHECK(p.config.s_values == std::vector<double>{0.5});
        CHECK(p.config.trials == 3);
        CHECK(p.config.grid_n == 129);  // untouched default
    }
    SUBCASE("comments and blank lines are ignored") {
        ParsedConfig p = parse_config("# header\n\n  s = 0.25, 0.75  # sweep\n");
        CHECK(p.ok());
        CHECK(p.config.s_values.size() == 2);
    }
    SUBCASE("endpoint s is rejected") {
        ParsedConfig p = parse_config("s = 1.0\n");
        CHECK_FALSE(p.ok());
        CHECK(p.errors[0].key == "s");
    }
    SUBCASE("duplicate keys are named") {
        ParsedConfig p = parse_config("seed = 1\nseed = 2\n");
        CHECK_FALSE(p.ok());
        CHECK(p.errors[0].key == "seed");
        CHECK(p.errors[0].message == "duplicate key");
    }
    SUBCASE("unknown keys aggregate") {
        ParsedConfig p = parse_config("nope = 1\nalso_nope = 2\ns = 2.0\n");
        CHECK(p.errors.size() == 3);
    }
    SUBCASE("negative tolerances are rejected") {
        ParsedConfig p = parse_config("quad_tol = -1e-6\n");
        CHECK_FALSE(p.ok());
    }
}

TEST_CASE("runner determinism: same seed, byte-identical modulo timing") {
    namespace fs = std::filesystem;
    RunConfig cfg;
    cfg.subcommand = "geometry";
    cfg.estimate = "K";
    cfg.s_values = {0.5};
    cfg.samples = 20000;
    cfg.seed = 42;
    cfg.out = (fs::temp_directory_path() / "frac_golden_a").string();
    ExperimentReport r1 = run(cfg);
    cfg.out = (fs::temp_directory_path() / "frac_golden_b").string();
    ExperimentReport r2 = run(cfg);
    json a = r1.root, b = r2.root;
    a.erase("timing");
    b.erase("timing");
    // the config echo differs only in the output stem
    a["config"].erase("out");
    b["config"].erase("out");
    CHECK(a.dump() == b.dump());
}

TEST_CASE("outputs land atomically, directories are created") {
    namespace fs = std::filesystem;
    const fs::path dir = fs::temp_directory_path() / "frac_cli_test_dir" / "nested";
    fs::remove_all(dir.parent_path());
    RunConfig cfg;
    cfg.subcommand = "geometry";
    cfg.estimate = "qs";
    cfg.samples = 10;
    cfg.out = (dir / "report").string();
    run(cfg);
    CHECK(fs::exists(dir / "report.json"));
    CHECK(fs::exists(dir / "report.csv"));
    // no stray temp file
    CHECK_FALSE(fs::exists(dir / "report.json.tmp"));

    // CSV carries the documented columns
    std::ifstream in(dir / "report.csv");
    std::string header;
    std::getline(in, header);
    CHECK(header == "s,constant_name,estimate,N,seed");
    fs::remove_all(dir.parent_path());
}

TEST_CASE("geometry subcommand reports K ~ 2 at s = 1/2") {
    namespace fs = std::filesystem;
    RunConfig cfg;
    cfg.subcommand = "geometry";
    cfg.estimate = "K";
    cfg.s_values = {0.5};
    cfg.samples = 50000;
    cfg.out = (fs::temp_directory_path() / "frac_geomK").string();
    ExperimentReport rep = run(cfg);
    const double est = rep.root["trials"][0]["estimate"].get<double>();
    CHECK(est == doctest::Approx(2.0).epsilon(0.03));
}

TEST_CASE("unknown subcommand is a validation error") {
    RunConfig cfg;
    cfg.subcommand = "florp";
    CHECK_THROWS_AS(run(cfg), std::invalid_argument);
}
