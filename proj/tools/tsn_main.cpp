// Command line front end: dataset generation, splitting, single runs, the
// full experiment grid, shift diagnostics and report rendering.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "tsn/csv_io.hpp"
#include "tsn/errors.hpp"
#include "tsn/experiment.hpp"
#include "tsn/prepare.hpp"
#include "tsn/report.hpp"
#include "tsn/shift.hpp"
#include "tsn/training.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace tsn;

namespace {

struct CommonArgs {
    std::string config_path;
    std::string out_dir = "out";
};

// Single-run selection; unset fields fall back to the config's first entry.
struct RunSelect {
    std::size_t lookback = 0;
    std::size_t horizon = 0;
    std::string strategy;
    std::string bp = "data";
    std::uint64_t seed = 0;
    bool seed_set = false;
};

WindowSpec pick_window(const ExperimentConfig& cfg, const RunSelect& sel) {
    WindowSpec w = cfg.settings.front();
    if (sel.lookback) w.lookback = sel.lookback;
    if (sel.horizon) w.horizon = sel.horizon;
    w.validate();
    return w;
}

CellSpec pick_cell(const ExperimentConfig& cfg, const RunSelect& sel) {
    CellSpec cell = cfg.cells.front();
    if (!sel.strategy.empty()) {
        cell.strategy = norm_kind_from_name(sel.strategy);
        cell.bp_space = sel.bp == "normalized" ? BpSpace::normalized : BpSpace::data;
    }
    return cell;
}

json metrics_to_json(const MetricTable& metrics) {
    json j = json::object();
    for (const auto& [split, m] : metrics)
        j[split_name(split)] = {{"mse", m.mse}, {"nmse", m.nmse}, {"windows", m.windows}};
    return j;
}

int cmd_generate(const CommonArgs& args) {
    ExperimentConfig cfg = parse_experiment_file(args.config_path);
    PreparedData prep = prepare_data(cfg);
    fs::create_directories(args.out_dir);
    write_dataset_csv(prep.data, (fs::path(args.out_dir) / "dataset.csv").string());
    if (!prep.labels.empty())
        write_labels_csv(prep.labels, (fs::path(args.out_dir) / "labels.csv").string());
    std::printf("wrote %zu users x %zu steps to %s\n", prep.data.num_users(),
                prep.data.num_steps(), args.out_dir.c_str());
    return 0;
}

int cmd_split(const CommonArgs& args) {
    ExperimentConfig cfg = parse_experiment_file(args.config_path);
    PreparedData prep = prepare_data(cfg);
    WindowSpec w = cfg.settings.front();
    CleanedDataset cleaned = clean_dataset(prep.data, w, cfg.drop_threshold);
    SplitAssignment split =
        six_way_split(cleaned.data, cfg.out_fraction, cfg.fractions, w, cfg.split_seed);
    fs::create_directories(args.out_dir);
    write_removal_report(cleaned.report, (fs::path(args.out_dir) / "removals.csv").string());

    json j;
    j["schema"] = 1;
    json in_ids = json::array(), out_ids = json::array();
    for (std::size_t u : split.users_in) in_ids.push_back(cleaned.data.user_ids[u]);
    for (std::size_t u : split.users_out) out_ids.push_back(cleaned.data.user_ids[u]);
    j["users_in"] = in_ids;
    j["users_out"] = out_ids;
    j["periods"] = {{"train", {split.t_train.begin, split.t_train.end}},
                    {"valid", {split.t_valid.begin, split.t_valid.end}},
                    {"test", {split.t_test.begin, split.t_test.end}}};
    std::ofstream out(fs::path(args.out_dir) / "split.json", std::ios::binary);
    out << j.dump(2) << '\n';
    std::printf("split: %zu seen users, %zu held-out, periods %zu/%zu/%zu steps\n",
                split.users_in.size(), split.users_out.size(), split.t_train.length(),
                split.t_valid.length(), split.t_test.length());
    return 0;
}

int cmd_train(const CommonArgs& args, const RunSelect& sel) {
    ExperimentConfig cfg = parse_experiment_file(args.config_path);
    PreparedData prep = prepare_data(cfg);
    WindowSpec w = pick_window(cfg, sel);
    CellSpec cell = pick_cell(cfg, sel);
    std::uint64_t seed = sel.seed_set ? sel.seed : cfg.seeds.front();

    CleanedDataset cleaned = clean_dataset(prep.data, w, cfg.drop_threshold);
    SplitAssignment split =
        six_way_split(cleaned.data, cfg.out_fraction, cfg.fractions, w, cfg.split_seed);

    TrainConfig tc;
    tc.window = w;
    tc.strategy = strategy_for(cell, cfg.epsilon);
    tc.bp_space = cell.bp_space;
    tc.model_kind = cfg.model_kind;
    tc.ma_kernel = cfg.ma_kernel;
    tc.epochs = cfg.epochs;
    tc.batch_size = cfg.batch;
    tc.steps_per_epoch = cfg.steps_per_epoch;
    tc.valid_every = cfg.valid_every;
    tc.fit_samples = cfg.fit_samples;
    tc.adam.lr = cfg.lr;
    tc.seed = seed;

    TrainInputs inputs{&cleaned, &split, &prep.labels};
    TrainResult result = train(tc, inputs);

    fs::create_directories(args.out_dir);
    std::string stem = cfg.name + "_L" + std::to_string(w.lookback) + "H" +
                       std::to_string(w.horizon) + "_" + norm_kind_name(cell.strategy) + "_" +
                       bp_space_name(cell.bp_space) + "_s" + std::to_string(seed);
    json rec;
    rec["schema"] = 1;
    rec["dataset"] = cfg.name;
    rec["window"] = {{"lookback", w.lookback}, {"horizon", w.horizon}};
    rec["cell"] = cell.key();
    rec["seed"] = seed;
    rec["metrics"] = metrics_to_json(result.metrics);
    rec["strategy"] = json::parse(result.strategy.to_json());
    rec["model"] = json::parse(result.model.to_json());
    std::ofstream out(fs::path(args.out_dir) / (stem + ".json"), std::ios::binary);
    out << rec.dump(2) << '\n';
    write_history_csv(result.history,
                      (fs::path(args.out_dir) / (stem + "_history.csv")).string());

    std::cout << metrics_to_json(result.metrics).dump(2) << '\n';
    return 0;
}

int cmd_eval(const CommonArgs& args, const std::string& run_path) {
    ExperimentConfig cfg = parse_experiment_file(args.config_path);
    std::ifstream in(run_path);
    if (!in) throw MissingResults("cannot open run record " + run_path);
    json rec = json::parse(in);

    WindowSpec w;
    if (rec.contains("window")) {
        w.lookback = rec["window"].at("lookback").get<std::size_t>();
        w.horizon = rec["window"].at("horizon").get<std::size_t>();
    } else {
        w.lookback = rec.at("config").at("window").at("lookback").get<std::size_t>();
        w.horizon = rec.at("config").at("window").at("horizon").get<std::size_t>();
    }
    w.validate();

    PreparedData prep = prepare_data(cfg);
    CleanedDataset cleaned = clean_dataset(prep.data, w, cfg.drop_threshold);
    SplitAssignment split =
        six_way_split(cleaned.data, cfg.out_fraction, cfg.fractions, w, cfg.split_seed);

    NormStrategy strategy = NormStrategy::from_json(rec.at("strategy").dump());
    LinearForecaster model = LinearForecaster::from_json(rec.at("model").dump());

    TrainInputs inputs{&cleaned, &split, &prep.labels};
    MetricTable metrics =
        evaluate(model, strategy, inputs, w,
                 {Split::Valid1, Split::Valid2, Split::Valid3, Split::Test1, Split::Test2});
    std::cout << metrics_to_json(metrics).dump(2) << '\n';
    return 0;
}

int cmd_shift(const CommonArgs& args, const RunSelect& sel, bool export_features) {
    ExperimentConfig cfg = parse_experiment_file(args.config_path);
    PreparedData prep = prepare_data(cfg);
    WindowSpec w = pick_window(cfg, sel);
    CleanedDataset cleaned = clean_dataset(prep.data, w, cfg.drop_threshold);
    SplitAssignment split =
        six_way_split(cleaned.data, cfg.out_fraction, cfg.fractions, w, cfg.split_seed);
    ShiftConfig sc = cfg.shift;
    sc.export_features = export_features;
    ShiftReport rep = shift_report(cleaned, split, w, sc, cfg.name);
    fs::create_directories(args.out_dir);
    write_shift_report(rep, args.out_dir);
    std::printf("shift report for %zu-%zu written to %s\n", w.lookback, w.horizon,
                args.out_dir.c_str());
    return 0;
}

int cmd_run(const CommonArgs& args, std::size_t jobs, bool with_report) {
    ExperimentConfig cfg = parse_experiment_file(args.config_path);
    run_experiment(cfg, args.out_dir, jobs);
    if (with_report) emit_report(args.out_dir);
    std::printf("experiment complete; results in %s\n", args.out_dir.c_str());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"univariate forecasting with switchable normalization"};
    app.require_subcommand(1);

    CommonArgs args;
    RunSelect sel;
    std::string run_path;
    std::size_t jobs = 1;
    bool export_features = false;
    bool no_report = false;

    auto add_common = [&](CLI::App* cmd, bool needs_out) {
        cmd->add_option("--config", args.config_path, "experiment config file")->required();
        if (needs_out) cmd->add_option("--out", args.out_dir, "output directory");
    };
    auto add_select = [&](CLI::App* cmd) {
        cmd->add_option("--lookback", sel.lookback, "look-back length override");
        cmd->add_option("--horizon", sel.horizon, "horizon length override");
        cmd->add_option("--strategy", sel.strategy, "normalization strategy override");
        cmd->add_option("--bp", sel.bp, "objective space override (data|normalized)");
        cmd->add_option("--seed", sel.seed, "training seed override")
            ->each([&](const std::string&) { sel.seed_set = true; });
    };

    CLI::App* generate = app.add_subcommand("generate", "materialize the dataset as CSV");
    add_common(generate, true);

    CLI::App* split = app.add_subcommand("split", "clean the data and write the six-way split");
    add_common(split, true);

    CLI::App* train = app.add_subcommand("train", "train a single strategy cell");
    add_common(train, true);
    add_select(train);

    CLI::App* eval_cmd = app.add_subcommand("eval", "re-evaluate a saved run record");
    add_common(eval_cmd, false);
    eval_cmd->add_option("--run", run_path, "run record JSON")->required();

    CLI::App* shift = app.add_subcommand("shift-report", "energy distance shift diagnostic");
    add_common(shift, true);
    add_select(shift);
    shift->add_flag("--features", export_features, "also dump the feature matrices as CSV");

    CLI::App* run = app.add_subcommand("run", "run the full experiment grid");
    add_common(run, true);
    run->add_option("--jobs", jobs, "worker threads");
    run->add_flag("--no-report", no_report, "skip report rendering");

    CLI::App* report = app.add_subcommand("report", "render report.md from an output directory");
    report->add_option("--out", args.out_dir, "experiment output directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);
        app.exit(e);
        return 2;
    }

    try {
        if (generate->parsed()) return cmd_generate(args);
        if (split->parsed()) return cmd_split(args);
        if (train->parsed()) return cmd_train(args, sel);
        if (eval_cmd->parsed()) return cmd_eval(args, run_path);
        if (shift->parsed()) return cmd_shift(args, sel, export_features);
        if (run->parsed()) return cmd_run(args, jobs, !no_report);
        if (report->parsed()) {
            emit_report(args.out_dir);
            std::printf("report written to %s\n", args.out_dir.c_str());
            return 0;
        }
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const DataError& e) {
        std::fprintf(stderr, "data error: %s\n", e.what());
        return 3;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
