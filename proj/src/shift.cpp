#include "tsn/shift.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "tsn/rng.hpp"
#include "tsn/stats.hpp"

namespace tsn {

const char* feature_space_name(FeatureSpace s) {
    switch (s) {
        case FeatureSpace::inputs: return "inputs";
        case FeatureSpace::windows: return "windows";
        case FeatureSpace::statistics: return "statistics";
        case FeatureSpace::modulations: return "modulations";
    }
    return "?";
}

const char* shift_norm_name(ShiftNorm n) {
    switch (n) {
        case ShiftNorm::none: return "none";
        case ShiftNorm::standard: return "standard";
        case ShiftNorm::instance: return "instance";
    }
    return "?";
}

namespace {

// (shift, scale) of the affine map v -> (v - shift) / scale for one pair.
std::pair<double, double> norm_map(ShiftNorm norm, const WindowPair& w,
                                   const GlobalStats* global) {
    switch (norm) {
        case ShiftNorm::none:
            return {0.0, 1.0};
        case ShiftNorm::standard:
            if (!global) throw MissingContext("feature_map: standard needs global stats");
            if (global->sigma <= 0.0) throw ZeroScale("feature_map: global sigma is zero");
            return {global->mu, global->sigma};
        case ShiftNorm::instance: {
            InstanceStats s = instance_stats(w.x);
            if (s.sigma <= 0.0) {
                throw ZeroScale("feature_map: constant look-back under instance map");
            }
            return {s.mu, s.sigma};
        }
    }
    throw ConfigInvalid("feature_map: unknown normalization");
}

}  // namespace

std::vector<std::vector<double>> feature_map(const std::vector<WindowPair>& pairs,
                                             FeatureSpace space, ShiftNorm norm,
                                             const GlobalStats* global) {
    std::vector<std::vector<double>> out;
    out.reserve(pairs.size());
    std::vector<double> xn;
    std::vector<double> yn;
    for (const auto& w : pairs) {
        auto [shift, scale] = norm_map(norm, w, global);
        xn.resize(w.x.size());
        for (std::size_t i = 0; i < w.x.size(); ++i) xn[i] = (w.x[i] - shift) / scale;
        yn.resize(w.y.size());
        for (std::size_t i = 0; i < w.y.size(); ++i) yn[i] = (w.y[i] - shift) / scale;

        switch (space) {
            case FeatureSpace::inputs:
                out.push_back(xn);
                break;
            case FeatureSpace::windows: {
                std::vector<double> v;
                v.reserve(xn.size() + yn.size());
                v.insert(v.end(), xn.begin(), xn.end());
                v.insert(v.end(), yn.begin(), yn.end());
                out.push_back(std::move(v));
                break;
            }
            case FeatureSpace::statistics: {
                InstanceStats s = instance_stats(xn);
                out.push_back({s.mu, s.sigma});
                break;
            }
            case FeatureSpace::modulations: {
                Modulations m = modulations(xn, yn, 0.0);
                out.push_back({m.delta, m.lambda});
                break;
            }
        }
    }
    return out;
}

namespace {

struct SplitSamples {
    std::vector<WindowPair> train;
    std::vector<WindowPair> test1;
    std::vector<WindowPair> valid2;
    GlobalStats global;
};

SplitSamples draw_samples(const CleanedDataset& data, const SplitAssignment& split,
                          const WindowSpec& spec, const ShiftConfig& config) {
    SplitSamples s;
    s.train = sample_windows(data, split, Split::Train, spec, config.sample_cap,
                             derive_seed(config.seed, 0x7A));
    s.test1 = sample_windows(data, split, Split::Test1, spec, config.sample_cap,
                             derive_seed(config.seed, 0x7B));
    s.valid2 = sample_windows(data, split, Split::Valid2, spec, config.sample_cap,
                              derive_seed(config.seed, 0x7C));
    s.global = fit_global_stats(s.train, 0.0);
    return s;
}

std::vector<FeatureSpace> spaces_for(const WindowSpec& spec) {
    std::vector<FeatureSpace> spaces = {FeatureSpace::inputs, FeatureSpace::windows,
                                        FeatureSpace::statistics};
    if (spec.horizon >= 2) {
        spaces.push_back(FeatureSpace::modulations);
    } else {
        warn("shift report: horizon < 2, skipping the modulations space");
    }
    return spaces;
}

constexpr ShiftNorm kNorms[] = {ShiftNorm::none, ShiftNorm::standard, ShiftNorm::instance};

}  // namespace

ShiftReport shift_report(const CleanedDataset& data, const SplitAssignment& split,
                         const WindowSpec& spec, const ShiftConfig& config,
                         const std::string& dataset_name) {
    spec.validate();
    if (config.sample_cap < 2) {
        throw ConfigInvalid("shift report: sample cap must be at least 2");
    }
    SplitSamples samples = draw_samples(data, split, spec, config);

    ShiftReport report;
    report.dataset = dataset_name;
    for (FeatureSpace space : spaces_for(spec)) {
        for (ShiftNorm norm : kNorms) {
            auto train_f = feature_map(samples.train, space, norm, &samples.global);
            auto test1_f = feature_map(samples.test1, space, norm, &samples.global);
            auto valid2_f = feature_map(samples.valid2, space, norm, &samples.global);
            report.cells.push_back({space, norm, "temporal", energy_distance(train_f, test1_f),
                                    train_f.size(), test1_f.size()});
            report.cells.push_back({space, norm, "spatial", energy_distance(train_f, valid2_f),
                                    train_f.size(), valid2_f.size()});
        }
    }
    return report;
}

void write_shift_report(const ShiftReport& report, const std::string& out_dir) {
    std::filesystem::create_directories(out_dir);

    nlohmann::json j;
    j["schema"] = 1;
    j["dataset"] = report.dataset;
    for (const auto& cell : report.cells) {
        nlohmann::json& slot =
            j["cells"][feature_space_name(cell.space)][shift_norm_name(cell.norm)][cell.shift];
        slot["d2_vstat"] = cell.d2.vstat;
        slot["d2_ustat"] = cell.d2.ustat;
        slot["d"] = std::sqrt(std::max(0.0, cell.d2.vstat));
        slot["n_left"] = cell.n_left;
        slot["n_right"] = cell.n_right;
    }
    std::ofstream json_out(out_dir + "/shift_report.json");
    if (!json_out) throw DataUnreadable("cannot write shift_report.json in " + out_dir);
    json_out << j.dump(2) << '\n';

    // One CSV per feature space, columns normalization x shift, display
    // values clamped at zero.
    for (FeatureSpace space : {FeatureSpace::inputs, FeatureSpace::windows,
                               FeatureSpace::statistics, FeatureSpace::modulations}) {
        std::map<std::string, double> row;
        for (const auto& cell : report.cells) {
            if (cell.space != space) continue;
            row[std::string(shift_norm_name(cell.norm)) + "_" + cell.shift] =
                std::max(0.0, cell.d2.vstat);
        }
        if (row.empty()) continue;
        std::string path =
            out_dir + "/shift_" + std::string(feature_space_name(space)) + ".csv";
        std::ofstream out(path);
        if (!out) throw DataUnreadable("cannot write " + path);
        out.precision(17);
        out << "dataset";
        for (ShiftNorm norm : kNorms) {
            for (const char* shift : {"temporal", "spatial"}) {
                out << ',' << shift_norm_name(norm) << '_' << shift;
            }
        }
        out << '\n' << report.dataset;
        for (ShiftNorm norm : kNorms) {
            for (const char* shift : {"temporal", "spatial"}) {
                out << ',' << row.at(std::string(shift_norm_name(norm)) + "_" + shift);
            }
        }
        out << '\n';
    }
}

void export_shift_features(const CleanedDataset& data, const SplitAssignment& split,
                           const WindowSpec& spec, const ShiftConfig& config,
                           const std::string& out_dir) {
    std::filesystem::create_directories(out_dir);
    SplitSamples samples = draw_samples(data, split, spec, config);
    struct Named {
        const char* name;
        const std::vector<WindowPair>* pairs;
    };
    const Named splits[] = {{"train", &samples.train},
                            {"test1", &samples.test1},
                            {"valid2", &samples.valid2}};
    for (FeatureSpace space : spaces_for(spec)) {
        for (ShiftNorm norm : kNorms) {
            for (const auto& [split_name, pairs] : splits) {
                auto features = feature_map(*pairs, space, norm, &samples.global);
                std::string path = out_dir + "/features_" + feature_space_name(space) + "_" +
                                   shift_norm_name(norm) + "_" + split_name + ".csv";
                std::ofstream out(path);
                if (!out) throw DataUnreadable("cannot write " + path);
                out.precision(17);
                for (const auto& point : features) {
                    for (std::size_t k = 0; k < point.size(); ++k) {
                        if (k) out << ',';
                        out << point[k];
                    }
                    out << '\n';
                }
            }
        }
    }
}

}  // namespace tsn
