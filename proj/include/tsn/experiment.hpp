#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "tsn/shift.hpp"
#include "tsn/synthetic.hpp"
#include "tsn/training.hpp"

namespace tsn {

// One strategy / objective-space combination of the experiment grid.
struct CellSpec {
    NormKind strategy = NormKind::none;
    BpSpace bp_space = BpSpace::data;

    std::string key() const;
};

/**
 * Declarative description of a full study: data source, split geometry,
 * window settings, training grid and shift diagnostic, parsed from the
 * key-value config format described in the README.
 */
struct ExperimentConfig {
    int schema = 1;
    std::string name = "dataset";

    // [data]
    bool use_synthetic = true;
    std::string csv_path;
    std::string labels_path;
    std::vector<std::string> exclude_users;

    // [synthetic]
    SyntheticSpec synth;

    // [split] / [clean]
    double out_fraction = 0.2;
    std::array<double, 3> fractions{0.6, 0.2, 0.2};
    std::uint64_t split_seed = 1;
    double drop_threshold = 0.5;

    // [windows]
    std::vector<WindowSpec> settings;

    // [train]
    ModelKind model_kind = ModelKind::linear;
    std::size_t ma_kernel = 25;
    std::size_t epochs = 200;
    std::size_t batch = 64;
    std::size_t steps_per_epoch = 10;
    std::size_t valid_every = 0;
    std::size_t fit_samples = 2048;
    double lr = 1e-3;
    double epsilon = 1e-6;
    std::vector<std::uint64_t> seeds{1};
    std::vector<CellSpec> cells;

    // [shift]
    ShiftConfig shift;
};

ExperimentConfig parse_experiment_text(const std::string& text);
ExperimentConfig parse_experiment_file(const std::string& path);

// Dataset plus labels materialized from the config's data source.
struct PreparedData {
    TimeSeriesDataset data;
    std::map<std::string, std::string> labels;
};

PreparedData prepare_data(const ExperimentConfig& config);

// Builds the strategy template a cell trains with.
NormStrategy strategy_for(const CellSpec& cell, double epsilon);

/**
 * Runs the whole grid (settings x cells x seeds), one run record per task
 * under <out_dir>/runs, then aggregates seed means and deviations into
 * <out_dir>/results.json.  Completed run records whose stored config hash
 * still matches are reused, so interrupted invocations resume.  Tasks run
 * on `jobs` worker threads; outputs are byte-stable regardless of
 * scheduling.
 */
void run_experiment(const ExperimentConfig& config, const std::string& out_dir,
                    std::size_t jobs);

// Rebuilds results.json from the run records present in out_dir.
void aggregate_results(const ExperimentConfig& config, const std::string& out_dir);

}  // namespace tsn
