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
#include "tsn/prepare.hpp"
#include "tsn/rng.hpp"
#include "tsn/shift.hpp"
#include "tsn/stats.hpp"

using namespace tsn;

namespace {

// Panel with a common upward drift so the raw train/test distributions are
// visibly different along the time axis.
TimeSeriesDataset make_drift_panel(std::size_t users, std::size_t steps, double drift,
                                   std::uint64_t seed) {
    TimeSeriesDataset data;
    Rng rng(seed);
    for (std::size_t u = 0; u < users; ++u) {
        data.user_ids.push_back("u" + std::to_string(u));
        std::vector<double> row(steps);
        std::vector<std::uint8_t> m(steps, 1);
        for (std::size_t t = 0; t < steps; ++t) {
            row[t] = drift * static_cast<double>(t) + 0.3 * static_cast<double>(u) +
                     std::sin(0.41 * static_cast<double>(t) + 0.7 * static_cast<double>(u)) +
                     0.05 * rng.next_gaussian();
        }
        data.values.push_back(std::move(row));
        data.mask.push_back(std::move(m));
    }
    return data;
}

struct Setup {
    CleanedDataset cleaned;
    SplitAssignment split;
};

Setup make_setup(const WindowSpec& spec, double drift, std::uint64_t seed) {
    Setup s;
    s.cleaned = clean_dataset(make_drift_panel(8, 120, drift, seed), spec, 0.5);
    s.split = six_way_split(s.cleaned.data, 0.25, {0.5, 0.25, 0.25}, spec, seed);
    return s;
}

std::vector<WindowPair> sample_some(const Setup& s, const WindowSpec& spec, std::size_t n,
                                    std::uint64_t seed) {
    return sample_windows(s.cleaned, s.split, Split::Train, spec, n, seed);
}

const ShiftCell& find_cell(const ShiftReport& r, FeatureSpace space, ShiftNorm norm,
                           const std::string& shift) {
    for (const auto& c : r.cells) {
        if (c.space == space && c.norm == norm && c.shift == shift) return c;
    }
    REQUIRE(false);
    return r.cells.front();
}

}  // namespace

TEST_CASE("feature spaces have the advertised dimensions") {
    WindowSpec spec{6, 3};
    Setup s = make_setup(spec, 0.0, 3);
    auto pairs = sample_some(s, spec, 40, 1);

    auto inputs = feature_map(pairs, FeatureSpace::inputs, ShiftNorm::none, nullptr);
    auto windows = feature_map(pairs, FeatureSpace::windows, ShiftNorm::none, nullptr);
    auto statistics = feature_map(pairs, FeatureSpace::statistics, ShiftNorm::none, nullptr);
    auto mods = feature_map(pairs, FeatureSpace::modulations, ShiftNorm::none, nullptr);

    REQUIRE(inputs.size() == pairs.size());
    REQUIRE(windows.size() == pairs.size());
    CHECK(inputs.front().size() == 6);
    CHECK(windows.front().size() == 9);
    CHECK(statistics.front().size() == 2);
    CHECK(mods.front().size() == 2);

    // The raw feature content: inputs is the look-back, windows appends the
    // horizon, statistics is the look-back's (mean, std), modulations the
    // pair's (delta, lambda).
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        CHECK(inputs[i] == pairs[i].x);
        for (std::size_t k = 0; k < 3; ++k) CHECK(windows[i][6 + k] == pairs[i].y[k]);
        InstanceStats st = instance_stats(pairs[i].x);
        CHECK(statistics[i][0] == st.mu);
        CHECK(statistics[i][1] == st.sigma);
        Modulations m = modulations(pairs[i].x, pairs[i].y, 0.0);
        CHECK(mods[i][0] == m.delta);
        CHECK(mods[i][1] == m.lambda);
    }
}

TEST_CASE("instance map collapses every statistics point onto (0, 1)") {
    WindowSpec spec{8, 4};
    Setup s = make_setup(spec, 0.05, 5);
    auto pairs = sample_some(s, spec, 200, 2);

    auto points = feature_map(pairs, FeatureSpace::statistics, ShiftNorm::instance, nullptr);
    for (const auto& p : points) {
        CHECK(std::abs(p[0]) <= 1e-12);
        CHECK(std::abs(p[1] - 1.0) <= 1e-10);
    }
}

TEST_CASE("modulation features are invariant under all three normalizations") {
    WindowSpec spec{8, 4};
    Setup s = make_setup(spec, 0.05, 7);
    auto pairs = sample_some(s, spec, 150, 3);
    GlobalStats global = fit_global_stats(pairs, 0.0);

    auto none = feature_map(pairs, FeatureSpace::modulations, ShiftNorm::none, nullptr);
    auto standard = feature_map(pairs, FeatureSpace::modulations, ShiftNorm::standard, &global);
    auto instance = feature_map(pairs, FeatureSpace::modulations, ShiftNorm::instance, nullptr);

    for (std::size_t i = 0; i < pairs.size(); ++i) {
        for (std::size_t k = 0; k < 2; ++k) {
            CHECK(std::abs(none[i][k] - standard[i][k]) <= 1e-10);
            CHECK(std::abs(none[i][k] - instance[i][k]) <= 1e-10);
        }
    }
}

TEST_CASE("modulation features are invariant under joint affine rescaling of the data") {
    WindowSpec spec{8, 4};
    Setup s = make_setup(spec, 0.0, 11);
    auto pairs = sample_some(s, spec, 80, 4);

    std::vector<WindowPair> scaled = pairs;
    for (auto& w : scaled) {
        for (double& v : w.x) v = 40.0 * v - 7.0;
        for (double& v : w.y) v = 40.0 * v - 7.0;
    }
    auto base = feature_map(pairs, FeatureSpace::modulations, ShiftNorm::none, nullptr);
    auto moved = feature_map(scaled, FeatureSpace::modulations, ShiftNorm::none, nullptr);
    for (std::size_t i = 0; i < base.size(); ++i) {
        CHECK(base[i][0] == doctest::Approx(moved[i][0]).epsilon(1e-9));
        CHECK(base[i][1] == doctest::Approx(moved[i][1]).epsilon(1e-9));
    }
}

TEST_CASE("feature_map validates its inputs") {
    WindowSpec spec{6, 3};
    Setup s = make_setup(spec, 0.0, 13);
    auto pairs = sample_some(s, spec, 10, 5);

    CHECK_THROWS_AS(feature_map(pairs, FeatureSpace::inputs, ShiftNorm::standard, nullptr),
                    MissingContext);

    std::vector<WindowPair> flat(1);
    flat[0].x.assign(6, 3.5);
    flat[0].y.assign(3, 3.5);
    CHECK_THROWS_AS(feature_map(flat, FeatureSpace::inputs, ShiftNorm::instance, nullptr),
                    ZeroScale);

    GlobalStats zero{1.0, 0.0, true};
    CHECK_THROWS_AS(feature_map(pairs, FeatureSpace::inputs, ShiftNorm::standard, &zero),
                    ZeroScale);
}

TEST_CASE("shift report covers every space, normalization and shift axis") {
    WindowSpec spec{6, 3};
    Setup s = make_setup(spec, 0.01, 17);
    ShiftConfig config;
    config.sample_cap = 60;

    ShiftReport r = shift_report(s.cleaned, s.split, spec, config, "panel");
    CHECK(r.dataset == "panel");
    CHECK(r.cells.size() == 4 * 3 * 2);
    for (const auto& c : r.cells) {
        CHECK((c.shift == "temporal" || c.shift == "spatial"));
        CHECK(c.n_left == 60);
        CHECK(c.n_right == 60);
        CHECK(std::isfinite(c.d2.vstat));
        CHECK(std::isfinite(c.d2.ustat));
        CHECK(c.d2.vstat >= 0.0);
    }

    // A one-step horizon has no meaningful modulation scale, so that space
    // drops out.
    WindowSpec short_spec{6, 1};
    Setup s1 = make_setup(short_spec, 0.01, 17);
    ShiftReport r1 = shift_report(s1.cleaned, s1.split, short_spec, config, "panel");
    CHECK(r1.cells.size() == 3 * 3 * 2);
    for (const auto& c : r1.cells) CHECK(c.space != FeatureSpace::modulations);
}

TEST_CASE("shift report is deterministic in its seed") {
    WindowSpec spec{6, 3};
    Setup s = make_setup(spec, 0.02, 19);
    ShiftConfig config;
    config.sample_cap = 50;

    ShiftReport a = shift_report(s.cleaned, s.split, spec, config, "panel");
    ShiftReport b = shift_report(s.cleaned, s.split, spec, config, "panel");
    REQUIRE(a.cells.size() == b.cells.size());
    bool any_nonzero = false;
    for (std::size_t i = 0; i < a.cells.size(); ++i) {
        CHECK(a.cells[i].d2.vstat == b.cells[i].d2.vstat);
        CHECK(a.cells[i].d2.ustat == b.cells[i].d2.ustat);
        if (a.cells[i].d2.vstat != 0.0) any_nonzero = true;
    }
    CHECK(any_nonzero);

    config.seed = 8;
    ShiftReport c = shift_report(s.cleaned, s.split, spec, config, "panel");
    bool differs = false;
    for (std::size_t i = 0; i < a.cells.size(); ++i) {
        if (a.cells[i].d2.vstat != c.cells[i].d2.vstat) differs = true;
    }
    CHECK(differs);
}

TEST_CASE("instance map flattens the statistics-space shift that drift creates") {
    WindowSpec spec{8, 4};
    Setup s = make_setup(spec, 0.05, 23);
    ShiftConfig config;
    config.sample_cap = 300;

    ShiftReport r = shift_report(s.cleaned, s.split, spec, config, "drift");

    const ShiftCell& raw = find_cell(r, FeatureSpace::statistics, ShiftNorm::none, "temporal");
    const ShiftCell& inst =
        find_cell(r, FeatureSpace::statistics, ShiftNorm::instance, "temporal");
    CHECK(raw.d2.vstat > 1e-2);  // the drift moves window means a lot
    CHECK(inst.d2.vstat <= 1e-6);
    const ShiftCell& inst_sp =
        find_cell(r, FeatureSpace::statistics, ShiftNorm::instance, "spatial");
    CHECK(inst_sp.d2.vstat <= 1e-6);

    // Modulation clouds see the identical points regardless of the map, so
    // the measured distances agree across normalizations.
    for (const char* shift : {"temporal", "spatial"}) {
        double dn = find_cell(r, FeatureSpace::modulations, ShiftNorm::none, shift).d2.vstat;
        double ds =
            find_cell(r, FeatureSpace::modulations, ShiftNorm::standard, shift).d2.vstat;
        double di =
            find_cell(r, FeatureSpace::modulations, ShiftNorm::instance, shift).d2.vstat;
        CHECK(std::abs(dn - ds) <= 1e-10);
        CHECK(std::abs(dn - di) <= 1e-10);
    }
}

TEST_CASE("shift report rejects a sample cap below two") {
    WindowSpec spec{6, 3};
    Setup s = make_setup(spec, 0.0, 29);
    ShiftConfig config;
    config.sample_cap = 1;
    CHECK_THROWS_AS(shift_report(s.cleaned, s.split, spec, config, "panel"), ConfigInvalid);
}

TEST_CASE("report files carry the raw statistics and clamped display values") {
    WindowSpec spec{6, 3};
    Setup s = make_setup(spec, 0.01, 31);
    ShiftConfig config;
    config.sample_cap = 40;

    ShiftReport r = shift_report(s.cleaned, s.split, spec, config, "panel");
    auto dir = std::filesystem::temp_directory_path() / "tsn_shift_report_test";
    std::filesystem::remove_all(dir);
    write_shift_report(r, dir.string());

    std::ifstream in(dir / "shift_report.json");
    REQUIRE(in.good());
    nlohmann::json j = nlohmann::json::parse(in);
    CHECK(j.at("dataset") == "panel");
    for (const auto& c : r.cells) {
        const nlohmann::json& slot =
            j.at("cells").at(feature_space_name(c.space)).at(shift_norm_name(c.norm)).at(c.shift);
        CHECK(slot.at("d2_vstat").get<double>() == c.d2.vstat);
        CHECK(slot.at("d2_ustat").get<double>() == c.d2.ustat);
        CHECK(slot.at("d").get<double>() ==
              doctest::Approx(std::sqrt(std::max(0.0, c.d2.vstat))));
        CHECK(slot.at("n_left").get<std::size_t>() == c.n_left);
    }

    for (const char* space : {"inputs", "windows", "statistics", "modulations"}) {
        std::ifstream csv(dir / ("shift_" + std::string(space) + ".csv"));
        REQUIRE(csv.good());
        std::string header;
        std::string row;
        REQUIRE(std::getline(csv, header));
        REQUIRE(std::getline(csv, row));
        CHECK(header ==
              "dataset,none_temporal,none_spatial,standard_temporal,standard_spatial,"
              "instance_temporal,instance_spatial");
        std::stringstream ss(row);
        std::string tok;
        std::getline(ss, tok, ',');
        CHECK(tok == "panel");
        while (std::getline(ss, tok, ',')) CHECK(std::stod(tok) >= 0.0);
    }
    std::filesystem::remove_all(dir);
}

TEST_CASE("feature export writes one matrix per space, map and split") {
    WindowSpec spec{6, 3};
    Setup s = make_setup(spec, 0.0, 37);
    ShiftConfig config;
    config.sample_cap = 25;

    auto dir = std::filesystem::temp_directory_path() / "tsn_shift_features_test";
    std::filesystem::remove_all(dir);
    export_shift_features(s.cleaned, s.split, spec, config, dir.string());

    std::size_t files = 0;
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
        ++files;
        std::ifstream in(entry.path());
        std::size_t rows = 0;
        std::string line;
        while (std::getline(in, line)) ++rows;
        CHECK(rows == 25);
    }
    CHECK(files == 4 * 3 * 3);
    std::filesystem::remove_all(dir);
}
