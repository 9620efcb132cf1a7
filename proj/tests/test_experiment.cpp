#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "tsn/errors.hpp"
#include "tsn/experiment.hpp"

using namespace tsn;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

// Small but complete study: two clusters, three strategies, two seeds.
const char* kTinyConfig = R"(
name = tiny
[synthetic]
length = 240
seed = 9
cluster = 4, 0.02, 5, 1, 8, 0.05, 0.005, 1
cluster = 4, -0.02, 25, 2, 8, 0.05, 0.005, 1
[split]
out_fraction = 0.2
fractions = 0.5, 0.25, 0.25
seed = 3
[windows]
setting = 24, 8
[train]
epochs = 2
batch = 8
steps_per_epoch = 2
fit_samples = 64
lr = 0.005
seeds = 1, 2
cell = none, data
cell = revin, normalized
cell = cmin, normalized
[shift]
cap = 40
seed = 5
)";

fs::path fresh_dir(const std::string& name) {
    fs::path dir = fs::temp_directory_path() / name;
    fs::remove_all(dir);
    return dir;
}

}  // namespace

TEST_CASE("a minimal config fills every default") {
    ExperimentConfig cfg = parse_experiment_text(
        "[synthetic]\ncluster = 4, 0.01, 10, 1, 20, 0.05, 0, 2\n");
    CHECK(cfg.schema == 1);
    CHECK(cfg.name == "dataset");
    CHECK(cfg.use_synthetic);
    CHECK(cfg.synth.length == 2000);
    CHECK(cfg.synth.seed == 42);
    REQUIRE(cfg.synth.clusters.size() == 1);
    CHECK(cfg.synth.clusters[0].count == 4);
    CHECK(cfg.synth.clusters[0].base.trend == 0.01);
    CHECK(cfg.synth.clusters[0].base.offset == 10.0);
    CHECK(cfg.synth.clusters[0].base.amplitude == 1.0);
    CHECK(cfg.synth.clusters[0].base.period == 20.0);
    CHECK(cfg.synth.clusters[0].base.sigma_noise == 0.05);
    CHECK(cfg.synth.clusters[0].jitter_offset == 2.0);
    CHECK(cfg.out_fraction == 0.2);
    CHECK(cfg.fractions == std::array<double, 3>{0.6, 0.2, 0.2});
    CHECK(cfg.split_seed == 1);
    CHECK(cfg.drop_threshold == 0.5);
    REQUIRE(cfg.settings.size() == 1);
    CHECK(cfg.settings[0].lookback == 100);
    CHECK(cfg.settings[0].horizon == 20);
    CHECK(cfg.model_kind == ModelKind::linear);
    CHECK(cfg.epochs == 200);
    CHECK(cfg.batch == 64);
    CHECK(cfg.steps_per_epoch == 10);
    CHECK(cfg.fit_samples == 2048);
    CHECK(cfg.lr == 1e-3);
    CHECK(cfg.epsilon == 1e-6);
    CHECK(cfg.seeds == std::vector<std::uint64_t>{1});
    REQUIRE(cfg.cells.size() == 1);
    CHECK(cfg.cells[0].strategy == NormKind::none);
    CHECK(cfg.cells[0].bp_space == BpSpace::data);
    CHECK(cfg.cells[0].key() == "none:data");
    CHECK(cfg.shift.sample_cap == 2000);
    CHECK(cfg.shift.seed == 7);
}

TEST_CASE("the full config grammar parses with comments and repeats") {
    ExperimentConfig cfg = parse_experiment_text(kTinyConfig);
    CHECK(cfg.name == "tiny");
    REQUIRE(cfg.synth.clusters.size() == 2);
    CHECK(cfg.synth.clusters[1].base.offset == 25.0);
    CHECK(cfg.fractions == std::array<double, 3>{0.5, 0.25, 0.25});
    REQUIRE(cfg.settings.size() == 1);
    CHECK(cfg.settings[0].lookback == 24);
    CHECK(cfg.seeds == std::vector<std::uint64_t>{1, 2});
    REQUIRE(cfg.cells.size() == 3);
    CHECK(cfg.cells[0].key() == "none:data");
    CHECK(cfg.cells[1].key() == "revin:normalized");
    CHECK(cfg.cells[2].key() == "cmin:normalized");
    CHECK(cfg.shift.sample_cap == 40);

    // Comments, blank lines and last-wins scalars.
    ExperimentConfig cfg2 = parse_experiment_text(
        "name = first   # inline comment\n"
        "name = second  ; other comment style\n"
        "\n"
        "[synthetic]\n"
        "cluster = 2, 0, 1, 1, 10, 0.1, 0, 0\n"
        "[train]\n"
        "epochs = 5\n"
        "epochs = 6\n");
    CHECK(cfg2.name == "second");
    CHECK(cfg2.epochs == 6);
}

TEST_CASE("config errors are specific") {
    const char* cluster_line = "[synthetic]\ncluster = 2, 0, 1, 1, 10, 0.1, 0, 0\n";

    CHECK_THROWS_AS(parse_experiment_text("schema = 2\n" + std::string(cluster_line)),
                    ConfigInvalid);
    CHECK_THROWS_AS(parse_experiment_text("[synthetic]\n"), ConfigInvalid);
    CHECK_THROWS_AS(parse_experiment_text("[data]\nkind = csv\n"), ConfigInvalid);
    CHECK_THROWS_AS(parse_experiment_text("[data]\nkind = parquet\n"), ConfigInvalid);
    CHECK_THROWS_AS(parse_experiment_text("[synthetic]\ncluster = 2, 0, 1\n"), ConfigInvalid);
    CHECK_THROWS_AS(
        parse_experiment_text(std::string(cluster_line) + "[split]\nfractions = 0.5, 0.5\n"),
        ConfigInvalid);
    CHECK_THROWS_AS(
        parse_experiment_text(std::string(cluster_line) + "[windows]\nsetting = 24\n"),
        ConfigInvalid);
    CHECK_THROWS_AS(
        parse_experiment_text(std::string(cluster_line) + "[windows]\nsetting = 1, 8\n"),
        ConfigInvalid);
    CHECK_THROWS_AS(
        parse_experiment_text(std::string(cluster_line) + "[train]\nmodel = transformer\n"),
        ConfigInvalid);
    CHECK_THROWS_AS(
        parse_experiment_text(std::string(cluster_line) + "[train]\nepochs = ten\n"),
        ConfigInvalid);
    CHECK_THROWS_AS(
        parse_experiment_text(std::string(cluster_line) + "[train]\nseeds =\n"),
        ConfigInvalid);
    CHECK_THROWS_AS(
        parse_experiment_text(std::string(cluster_line) + "[train]\ncell = wat, data\n"),
        ConfigError);
    CHECK_THROWS_AS(
        parse_experiment_text(std::string(cluster_line) + "[train]\ncell = revin, sideways\n"),
        ConfigError);
    CHECK_THROWS_AS(parse_experiment_text("[data\nkind = synthetic\n"), ConfigInvalid);
    CHECK_THROWS_AS(parse_experiment_text("just words\n"), ConfigInvalid);
    CHECK_THROWS_AS(parse_experiment_text("= 5\n"), ConfigInvalid);
}

TEST_CASE("configs load from disk and missing files are reported") {
    fs::path path = fs::temp_directory_path() / "tsn_cfg_test.cfg";
    {
        std::ofstream out(path);
        out << kTinyConfig;
    }
    ExperimentConfig cfg = parse_experiment_file(path.string());
    CHECK(cfg.name == "tiny");
    fs::remove(path);
    CHECK_THROWS_AS(parse_experiment_file(path.string()), ConfigInvalid);
}

TEST_CASE("prepare_data materializes synthetic users and honors exclusions") {
    ExperimentConfig cfg = parse_experiment_text(kTinyConfig);
    PreparedData prep = prepare_data(cfg);
    REQUIRE(prep.data.num_users() == 8);
    CHECK(prep.data.num_steps() == 240);
    CHECK(prep.labels.at("u0") == "c0");
    CHECK(prep.labels.at("u7") == "c1");

    cfg.exclude_users = {"u0", "u5"};
    PreparedData fewer = prepare_data(cfg);
    REQUIRE(fewer.data.num_users() == 6);
    for (const std::string& id : fewer.data.user_ids) {
        CHECK(id != "u0");
        CHECK(id != "u5");
    }

    cfg.exclude_users = prep.data.user_ids;
    CHECK_THROWS_AS(prepare_data(cfg), TooFewUsers);
}

TEST_CASE("strategy_for wires the learnable affine only for the reversible scheme") {
    for (NormKind kind : {NormKind::none, NormKind::standard, NormKind::minmax,
                          NormKind::relative, NormKind::per_user_standard,
                          NormKind::instance, NormKind::revin, NormKind::cmin}) {
        CellSpec cell{kind, BpSpace::data};
        NormStrategy s = strategy_for(cell, 1e-4);
        CHECK(s.kind == kind);
        CHECK(s.epsilon == 1e-4);
        CHECK(s.learnable_affine == (kind == NormKind::revin));
    }
}

TEST_CASE("a tiny study runs end to end, resumes, and aggregates stably") {
    ExperimentConfig cfg = parse_experiment_text(kTinyConfig);
    fs::path dir = fresh_dir("tsn_exp_e2e");

    run_experiment(cfg, dir.string(), 2);

    // One record and history per (setting, cell, seed).
    std::vector<std::string> keys;
    for (const char* cell : {"none_data", "revin_normalized", "cmin_normalized"}) {
        for (const char* seed : {"1", "2"}) {
            keys.push_back("tiny_L24H8_" + std::string(cell) + "_s" + seed);
        }
    }
    for (const std::string& key : keys) {
        CHECK(fs::exists(dir / "runs" / (key + ".json")));
        CHECK(fs::exists(dir / "runs" / (key + "_history.csv")));
    }
    CHECK(fs::exists(dir / "removals.csv"));
    CHECK(fs::exists(dir / "user_stats.csv"));
    CHECK(fs::exists(dir / "shift_24-8" / "shift_report.json"));
    REQUIRE(fs::exists(dir / "results.json"));

    // Record shape.
    json rec = json::parse(read_file(dir / "runs" / (keys.front() + ".json")));
    CHECK(rec.at("schema") == 1);
    CHECK(rec.at("config_hash").get<std::string>().size() == 16);
    CHECK(rec.at("setting") == "24-8");
    CHECK(rec.at("cell") == "none:data");
    CHECK(rec.at("metrics").size() == 5);
    CHECK(rec.at("history").size() == cfg.epochs);
    CHECK(rec.at("example").at("x").size() == 24);
    CHECK(rec.at("example").at("yhat").size() == 8);

    // Aggregate shape and arithmetic.
    json results = json::parse(read_file(dir / "results.json"));
    CHECK(results.at("settings") == json::array({"24-8"}));
    CHECK(results.at("columns") ==
          json::array({"none:data", "revin:normalized", "cmin:normalized"}));
    CHECK(results.at("seeds") == json::array({1, 2}));
    for (const std::string& column :
         {std::string("none:data"), std::string("revin:normalized"),
          std::string("cmin:normalized")}) {
        const json& agg = results.at("cells").at("24-8|" + column);
        for (const char* split : {"Valid1", "Valid2", "Valid3", "Test1", "Test2"}) {
            const json& m = agg.at(split).at("mse");
            auto values = m.at("values").get<std::vector<double>>();
            REQUIRE(values.size() == 2);
            double mean = (values[0] + values[1]) / 2.0;
            CHECK(m.at("mean").get<double>() == doctest::Approx(mean).epsilon(1e-15));
            double sd = std::sqrt((values[0] - mean) * (values[0] - mean) +
                                  (values[1] - mean) * (values[1] - mean));
            CHECK(m.at("std").get<double>() == doctest::Approx(sd).epsilon(1e-12));
        }
        CHECK(agg.at("runs").size() == 2);
    }

    // Re-running the identical study reuses every record and reproduces
    // results.json byte for byte.
    std::string before = read_file(dir / "results.json");
    auto record_time = fs::last_write_time(dir / "runs" / (keys.front() + ".json"));
    run_experiment(cfg, dir.string(), 2);
    CHECK(read_file(dir / "results.json") == before);
    CHECK(fs::last_write_time(dir / "runs" / (keys.front() + ".json")) == record_time);

    // A changed training config invalidates the stored hash and reruns.
    ExperimentConfig longer = cfg;
    longer.epochs = 3;
    run_experiment(longer, dir.string(), 2);
    json rec2 = json::parse(read_file(dir / "runs" / (keys.front() + ".json")));
    CHECK(rec2.at("config_hash") != rec.at("config_hash"));
    CHECK(rec2.at("history").size() == 3);

    fs::remove_all(dir);
}

TEST_CASE("scheduling does not leak into the outputs") {
    ExperimentConfig cfg = parse_experiment_text(kTinyConfig);
    fs::path serial = fresh_dir("tsn_exp_serial");
    fs::path parallel = fresh_dir("tsn_exp_parallel");

    run_experiment(cfg, serial.string(), 1);
    run_experiment(cfg, parallel.string(), 4);
    CHECK(read_file(serial / "results.json") == read_file(parallel / "results.json"));

    ExperimentConfig cfg2 = parse_experiment_text(kTinyConfig);
    CHECK_THROWS_AS(aggregate_results(cfg2, fresh_dir("tsn_exp_empty").string()),
                    MissingResults);

    fs::remove_all(serial);
    fs::remove_all(parallel);
}
