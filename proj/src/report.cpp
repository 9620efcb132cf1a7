#include "tsn/report.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <vector>

#include <json.hpp>

#include "tsn/errors.hpp"
#include "tsn/svg.hpp"

namespace tsn {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

json load_json(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw MissingResults("missing " + path.string());
    return json::parse(in);
}

std::string fmt_sig(double v, int digits) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*g", digits, v);
    return buf;
}

struct TableSpec {
    const char* split;
    const char* metric;
    const char* heading;
};

constexpr TableSpec kTables[] = {
    {"Test2", "mse", "Held-out users, test dates (Test2), MSE"},
    {"Test1", "mse", "Seen users, test dates (Test1), MSE"},
    {"Test2", "nmse", "Held-out users, test dates (Test2), normalized MSE"},
    {"Test1", "nmse", "Seen users, test dates (Test1), normalized MSE"},
};

// Means and deviations for one (split, metric) over the settings x columns grid.
struct Grid {
    std::vector<std::string> settings;
    std::vector<std::string> columns;
    std::vector<std::vector<double>> mean;  // [setting][column]
    std::vector<std::vector<double>> sd;
};

Grid collect_grid(const json& results, const std::string& split, const std::string& metric) {
    Grid g;
    for (const auto& s : results.at("settings")) g.settings.push_back(s.get<std::string>());
    for (const auto& c : results.at("columns")) g.columns.push_back(c.get<std::string>());
    const json& cells = results.at("cells");
    for (const std::string& setting : g.settings) {
        std::vector<double> mrow, srow;
        for (const std::string& col : g.columns) {
            const json& cell = cells.at(setting + "|" + col);
            const json& m = cell.at(split).at(metric);
            mrow.push_back(m.at("mean").get<double>());
            srow.push_back(m.at("std").get<double>());
        }
        g.mean.push_back(mrow);
        g.sd.push_back(srow);
    }
    return g;
}

// Mean over rows of the relative improvement against the first column.
std::vector<double> improvements(const Grid& g) {
    std::vector<double> imp(g.columns.size(), 0.0);
    if (g.settings.empty()) return imp;
    for (std::size_t c = 0; c < g.columns.size(); ++c) {
        double acc = 0;
        for (std::size_t r = 0; r < g.settings.size(); ++r) {
            double base = g.mean[r][0];
            acc += base != 0 ? (base - g.mean[r][c]) / base : 0.0;
        }
        imp[c] = acc / static_cast<double>(g.settings.size());
    }
    return imp;
}

void emit_markdown_table(std::ostream& out, const std::string& dataset, const Grid& g) {
    out << "| dataset | L-H |";
    for (const std::string& c : g.columns) out << ' ' << c << " |";
    out << "\n|---|---|";
    for (std::size_t c = 0; c < g.columns.size(); ++c) out << "---|";
    out << '\n';
    for (std::size_t r = 0; r < g.settings.size(); ++r) {
        // bold the row best (lowest mean)
        std::size_t best = 0;
        for (std::size_t c = 1; c < g.columns.size(); ++c)
            if (g.mean[r][c] < g.mean[r][best]) best = c;
        out << "| " << dataset << " | " << g.settings[r] << " |";
        for (std::size_t c = 0; c < g.columns.size(); ++c) {
            std::string cell = fmt_sig(g.mean[r][c], 4) + " ± " + fmt_sig(g.sd[r][c], 2);
            if (c == best) cell = "**" + cell + "**";
            out << ' ' << cell << " |";
        }
        out << '\n';
    }
    std::vector<double> imp = improvements(g);
    out << "| improvement |  |";
    for (std::size_t c = 0; c < g.columns.size(); ++c) {
        if (c == 0) {
            out << " baseline |";
        } else {
            char buf[32];
            std::snprintf(buf, sizeof buf, "%.2f%%", imp[c] * 100.0);
            out << ' ' << buf << " |";
        }
    }
    out << "\n\n";
}

void emit_csv_tables(const fs::path& dir, const std::string& split, const std::string& metric,
                     const Grid& g) {
    auto write = [&](const char* kind, const std::vector<std::vector<double>>& vals) {
        std::ostringstream csv;
        csv.precision(17);
        csv << "setting";
        for (const std::string& c : g.columns) csv << ',' << c;
        csv << '\n';
        for (std::size_t r = 0; r < g.settings.size(); ++r) {
            csv << g.settings[r];
            for (std::size_t c = 0; c < g.columns.size(); ++c) csv << ',' << vals[r][c];
            csv << '\n';
        }
        std::ofstream out(dir / (split + "_" + metric + "_" + kind + ".csv"), std::ios::binary);
        out << csv.str();
    };
    write("mean", g.mean);
    write("std", g.sd);
}

void emit_example_plots(const json& results, const fs::path& out_dir) {
    const json& seeds = results.at("seeds");
    if (seeds.empty()) return;
    std::string dataset = results.at("dataset").get<std::string>();
    for (const auto& setting : results.at("settings")) {
        for (const auto& col : results.at("columns")) {
            std::string s = setting.get<std::string>();
            std::string c = col.get<std::string>();
            std::string strategy = c.substr(0, c.find(':'));
            std::string bp = c.substr(c.find(':') + 1);
            std::size_t dash = s.find('-');
            std::string key = dataset + "_L" + s.substr(0, dash) + "H" + s.substr(dash + 1) +
                              "_" + strategy + "_" + bp + "_s" +
                              std::to_string(seeds[0].get<std::uint64_t>());
            fs::path run_path = out_dir / "runs" / (key + ".json");
            if (!fs::exists(run_path)) continue;
            json rec = load_json(run_path);
            if (!rec.contains("example") || rec["example"].is_null()) continue;
            const json& ex = rec["example"];
            std::vector<double> x = ex.at("x").get<std::vector<double>>();
            std::vector<double> y = ex.at("y").get<std::vector<double>>();
            std::vector<double> yhat = ex.at("yhat").get<std::vector<double>>();

            SvgSeries hist{"history", "#555555", {}, {}, false};
            for (std::size_t i = 0; i < x.size(); ++i) {
                hist.xs.push_back(static_cast<double>(i));
                hist.ys.push_back(x[i]);
            }
            SvgSeries truth{"actual", "#1f77b4", {}, {}, false};
            SvgSeries pred{"forecast", "#d62728", {}, {}, false};
            for (std::size_t i = 0; i < y.size(); ++i) {
                double t = static_cast<double>(x.size() + i);
                truth.xs.push_back(t);
                truth.ys.push_back(y[i]);
                pred.xs.push_back(t);
                pred.ys.push_back(yhat[i]);
            }
            std::string svg = render_chart("example forecast, " + s + ", " + c, "step", "value",
                                           {hist, truth, pred});
            write_svg((out_dir / "plots" / ("example_" + s + "_" + strategy + "_" + bp + ".svg"))
                          .string(),
                      svg);
        }
    }
}

void emit_user_scatter(const fs::path& out_dir) {
    fs::path path = out_dir / "user_stats.csv";
    std::ifstream in(path);
    if (!in) return;
    std::string line;
    std::getline(in, line);  // header
    SvgSeries seen{"seen users", "#1f77b4", {}, {}, true};
    SvgSeries held{"held-out users", "#d62728", {}, {}, true};
    while (std::getline(in, line)) {
        std::istringstream row(line);
        std::string user, group, mu, sigma;
        if (!std::getline(row, user, ',') || !std::getline(row, group, ',') ||
            !std::getline(row, mu, ',') || !std::getline(row, sigma, ','))
            continue;
        SvgSeries& target = group == "held_out" ? held : seen;
        target.xs.push_back(std::stod(mu));
        target.ys.push_back(std::stod(sigma));
    }
    std::string svg =
        render_chart("per-user train statistics", "mean", "std dev", {seen, held});
    write_svg((out_dir / "plots" / "user_stats.svg").string(), svg);
}

void emit_shift_section(std::ostream& out, const fs::path& out_dir) {
    bool first = true;
    for (const auto& entry : fs::directory_iterator(out_dir)) {
        if (!entry.is_directory()) continue;
        std::string name = entry.path().filename().string();
        if (name.rfind("shift_", 0) != 0) continue;
        fs::path report_path = entry.path() / "shift_report.json";
        if (!fs::exists(report_path)) continue;
        if (first) {
            out << "## Distribution shift\n\n"
                << "Energy distance d between sample sets, per feature space and "
                   "normalization.  `temporal` compares train dates with test dates for seen "
                   "users; `spatial` compares seen users with held-out users on train dates.\n\n";
            first = false;
        }
        json rep = load_json(report_path);
        out << "### Setting " << name.substr(6) << "\n\n";
        const json& cells = rep.at("cells");
        for (const char* shift : {"temporal", "spatial"}) {
            out << "| " << shift << " | none | standard | instance |\n|---|---|---|---|\n";
            for (const char* space : {"inputs", "windows", "statistics", "modulations"}) {
                out << "| " << space << " |";
                for (const char* norm : {"none", "standard", "instance"}) {
                    if (cells.contains(space) && cells[space].contains(norm) &&
                        cells[space][norm].contains(shift)) {
                        double d = cells[space][norm][shift].at("d").get<double>();
                        out << ' ' << fmt_sig(d, 4) << " |";
                    } else {
                        out << " n/a |";
                    }
                }
                out << '\n';
            }
            out << '\n';
        }
    }
}

}  // namespace

void emit_report(const std::string& out_dir) {
    fs::path dir(out_dir);
    json results = load_json(dir / "results.json");
    fs::create_directories(dir / "tables");
    fs::create_directories(dir / "plots");

    std::string dataset = results.at("dataset").get<std::string>();
    std::ostringstream md;
    md << "# Forecast report: " << dataset << "\n\n";
    md << "Cells are mean ± std dev over " << results.at("seeds").size()
       << " seed(s); the row best is bold.  The improvement row averages the relative "
          "error reduction against the first column over all settings.\n\n";

    for (const TableSpec& spec : kTables) {
        Grid g = collect_grid(results, spec.split, spec.metric);
        md << "## " << spec.heading << "\n\n";
        emit_markdown_table(md, dataset, g);
        emit_csv_tables(dir / "tables", spec.split, spec.metric, g);
    }

    emit_shift_section(md, dir);

    emit_example_plots(results, dir);
    emit_user_scatter(dir);
    md << "## Plots\n\nSee `plots/` for example forecast overlays and the per-user "
          "statistics scatter.\n";

    std::ofstream out(dir / "report.md", std::ios::binary);
    if (!out) throw DataUnreadable("cannot write report.md");
    out << md.str();
}

}  // namespace tsn
