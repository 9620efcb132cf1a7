#include "tsn/experiment.hpp"

#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "tsn/csv_io.hpp"
#include "tsn/errors.hpp"
#include "tsn/prepare.hpp"

namespace tsn {

namespace fs = std::filesystem;
using nlohmann::json;

std::string CellSpec::key() const {
    return std::string(norm_kind_name(strategy)) + ":" + bp_space_name(bp_space);
}

// ---------------------------------------------------------------------------
// config parsing

namespace {

struct RawConfig {
    // section -> key -> every value that key was assigned, in file order
    std::map<std::string, std::map<std::string, std::vector<std::string>>> entries;
};

std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

RawConfig lex_config(const std::string& text) {
    RawConfig raw;
    std::string section;
    std::istringstream in(text);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::size_t hash = line.find_first_of("#;");
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw ConfigInvalid("config line " + std::to_string(lineno) +
                                    ": unterminated section header");
            section = trim(line.substr(1, line.size() - 2));
            continue;
        }
        std::size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigInvalid("config line " + std::to_string(lineno) +
                                ": expected key = value");
        std::string key = trim(line.substr(0, eq));
        std::string value = trim(line.substr(eq + 1));
        if (key.empty())
            throw ConfigInvalid("config line " + std::to_string(lineno) + ": empty key");
        raw.entries[section][key].push_back(value);
    }
    return raw;
}

std::vector<std::string> split_list(const std::string& value) {
    std::vector<std::string> out;
    std::string item;
    std::istringstream in(value);
    while (std::getline(in, item, ',')) out.push_back(trim(item));
    if (!out.empty() && out.back().empty()) out.pop_back();
    return out;
}

double parse_double(const std::string& s, const std::string& what) {
    try {
        std::size_t pos = 0;
        double v = std::stod(s, &pos);
        if (pos != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw ConfigInvalid("expected a number for " + what + ", got '" + s + "'");
    }
}

std::uint64_t parse_u64(const std::string& s, const std::string& what) {
    std::uint64_t v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size())
        throw ConfigInvalid("expected a non-negative integer for " + what + ", got '" + s + "'");
    return v;
}

// Pulls a single-valued key; repeated assignments keep the last one.
class Section {
  public:
    Section(const RawConfig& raw, std::string name) : name_(std::move(name)) {
        auto it = raw.entries.find(name_);
        if (it != raw.entries.end()) keys_ = &it->second;
    }

    bool has(const std::string& key) const { return keys_ && keys_->count(key); }

    std::string get(const std::string& key, const std::string& fallback) const {
        if (!has(key)) return fallback;
        return keys_->at(key).back();
    }

    double get_double(const std::string& key, double fallback) const {
        if (!has(key)) return fallback;
        return parse_double(keys_->at(key).back(), "[" + name_ + "] " + key);
    }

    std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) const {
        if (!has(key)) return fallback;
        return parse_u64(keys_->at(key).back(), "[" + name_ + "] " + key);
    }

    std::vector<std::string> all(const std::string& key) const {
        if (!has(key)) return {};
        return keys_->at(key);
    }

    const std::string& name() const { return name_; }

  private:
    std::string name_;
    const std::map<std::string, std::vector<std::string>>* keys_ = nullptr;
};

}  // namespace

ExperimentConfig parse_experiment_text(const std::string& text) {
    RawConfig raw = lex_config(text);
    ExperimentConfig cfg;

    Section top(raw, "");
    cfg.schema = static_cast<int>(top.get_u64("schema", 1));
    if (cfg.schema != 1)
        throw ConfigInvalid("unsupported config schema " + std::to_string(cfg.schema));
    cfg.name = top.get("name", "dataset");

    Section data(raw, "data");
    std::string kind = data.get("kind", "synthetic");
    if (kind == "synthetic") {
        cfg.use_synthetic = true;
    } else if (kind == "csv") {
        cfg.use_synthetic = false;
        cfg.csv_path = data.get("path", "");
        if (cfg.csv_path.empty()) throw ConfigInvalid("[data] kind=csv requires path");
        cfg.labels_path = data.get("labels", "");
    } else {
        throw ConfigInvalid("unknown data kind '" + kind + "' (synthetic|csv)");
    }
    if (data.has("exclude_users")) cfg.exclude_users = split_list(data.get("exclude_users", ""));

    Section synth(raw, "synthetic");
    cfg.synth.length = synth.get_u64("length", 2000);
    cfg.synth.seed = synth.get_u64("seed", 42);
    for (const std::string& spec : synth.all("cluster")) {
        std::vector<std::string> f = split_list(spec);
        if (f.size() != 8)
            throw ConfigInvalid(
                "cluster needs 8 fields: count, trend, offset, amplitude, period, noise, "
                "jitter_trend, jitter_offset; got '" + spec + "'");
        SyntheticCluster c;
        c.count = parse_u64(f[0], "cluster count");
        c.base.trend = parse_double(f[1], "cluster trend");
        c.base.offset = parse_double(f[2], "cluster offset");
        c.base.amplitude = parse_double(f[3], "cluster amplitude");
        c.base.period = parse_double(f[4], "cluster period");
        c.base.sigma_noise = parse_double(f[5], "cluster noise");
        c.jitter_trend = parse_double(f[6], "cluster jitter_trend");
        c.jitter_offset = parse_double(f[7], "cluster jitter_offset");
        cfg.synth.clusters.push_back(c);
    }
    if (cfg.use_synthetic && cfg.synth.clusters.empty())
        throw ConfigInvalid("synthetic data needs at least one [synthetic] cluster line");

    Section split(raw, "split");
    cfg.out_fraction = split.get_double("out_fraction", 0.2);
    if (split.has("fractions")) {
        std::vector<std::string> f = split_list(split.get("fractions", ""));
        if (f.size() != 3) throw ConfigInvalid("fractions needs 3 comma-separated values");
        for (std::size_t i = 0; i < 3; ++i)
            cfg.fractions[i] = parse_double(f[i], "split fraction");
    }
    cfg.split_seed = split.get_u64("seed", 1);

    Section clean(raw, "clean");
    cfg.drop_threshold = clean.get_double("drop_threshold", 0.5);

    Section windows(raw, "windows");
    for (const std::string& spec : windows.all("setting")) {
        std::vector<std::string> f = split_list(spec);
        if (f.size() != 2) throw ConfigInvalid("setting needs 'lookback, horizon'");
        WindowSpec w;
        w.lookback = parse_u64(f[0], "lookback");
        w.horizon = parse_u64(f[1], "horizon");
        w.validate();
        cfg.settings.push_back(w);
    }
    if (cfg.settings.empty()) cfg.settings.push_back(WindowSpec{100, 20});

    Section train(raw, "train");
    std::string model = train.get("model", "linear");
    if (model == "linear") {
        cfg.model_kind = ModelKind::linear;
    } else if (model == "dlinear") {
        cfg.model_kind = ModelKind::dlinear;
    } else {
        throw ConfigInvalid("unknown model '" + model + "' (linear|dlinear)");
    }
    cfg.ma_kernel = train.get_u64("ma_kernel", 25);
    cfg.epochs = train.get_u64("epochs", 200);
    cfg.batch = train.get_u64("batch", 64);
    cfg.steps_per_epoch = train.get_u64("steps_per_epoch", 10);
    cfg.valid_every = train.get_u64("valid_every", 0);
    cfg.fit_samples = train.get_u64("fit_samples", 2048);
    cfg.lr = train.get_double("lr", 1e-3);
    cfg.epsilon = train.get_double("epsilon", 1e-6);
    if (train.has("seeds")) {
        cfg.seeds.clear();
        for (const std::string& s : split_list(train.get("seeds", "")))
            cfg.seeds.push_back(parse_u64(s, "train seed"));
        if (cfg.seeds.empty()) throw ConfigInvalid("seeds must list at least one seed");
    }
    for (const std::string& spec : train.all("cell")) {
        std::vector<std::string> f = split_list(spec);
        if (f.size() != 2) throw ConfigInvalid("cell needs 'strategy, space'");
        CellSpec cell;
        cell.strategy = norm_kind_from_name(f[0]);
        cell.bp_space = bp_space_from_name(f[1]);
        cfg.cells.push_back(cell);
    }
    if (cfg.cells.empty()) cfg.cells.push_back(CellSpec{});

    Section shift(raw, "shift");
    cfg.shift.sample_cap = shift.get_u64("cap", 2000);
    cfg.shift.seed = shift.get_u64("seed", 7);

    return cfg;
}

ExperimentConfig parse_experiment_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigInvalid("cannot open config file " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_experiment_text(buf.str());
}

// ---------------------------------------------------------------------------
// data materialization

PreparedData prepare_data(const ExperimentConfig& config) {
    PreparedData prep;
    if (config.use_synthetic) {
        SyntheticDataset synth = generate_dataset(config.synth);
        prep.data = std::move(synth.data);
        prep.labels = std::move(synth.labels);
    } else {
        prep.data = load_dataset_csv(config.csv_path);
        if (!config.labels_path.empty()) prep.labels = load_labels_csv(config.labels_path);
    }
    if (!config.exclude_users.empty()) {
        TimeSeriesDataset kept;
        kept.frequency = prep.data.frequency;
        for (std::size_t u = 0; u < prep.data.num_users(); ++u) {
            const std::string& id = prep.data.user_ids[u];
            bool drop = false;
            for (const std::string& ex : config.exclude_users)
                if (ex == id) drop = true;
            if (drop) continue;
            kept.user_ids.push_back(id);
            kept.values.push_back(prep.data.values[u]);
            kept.mask.push_back(prep.data.mask[u]);
        }
        if (kept.user_ids.empty()) throw TooFewUsers("every user was excluded");
        prep.data = std::move(kept);
    }
    prep.data.validate();
    return prep;
}

NormStrategy strategy_for(const CellSpec& cell, double epsilon) {
    NormStrategy s;
    s.kind = cell.strategy;
    s.epsilon = epsilon;
    // the reversible strategy carries its learnable affine head by default
    s.learnable_affine = (cell.strategy == NormKind::revin);
    return s;
}

// ---------------------------------------------------------------------------
// run grid

namespace {

struct Task {
    std::size_t setting_index;
    WindowSpec window;
    CellSpec cell;
    std::uint64_t seed;
    std::string key;  // file stem under runs/
};

std::string setting_name(const WindowSpec& w) {
    return std::to_string(w.lookback) + "-" + std::to_string(w.horizon);
}

std::string task_key(const std::string& dataset, const Task& t) {
    return dataset + "_L" + std::to_string(t.window.lookback) + "H" +
           std::to_string(t.window.horizon) + "_" + norm_kind_name(t.cell.strategy) + "_" +
           bp_space_name(t.cell.bp_space) + "_s" + std::to_string(t.seed);
}

// Canonical description of everything that can change a run's numbers.
json task_config_json(const ExperimentConfig& cfg, const Task& t) {
    json j;
    j["dataset"] = cfg.name;
    if (cfg.use_synthetic) {
        json clusters = json::array();
        for (const SyntheticCluster& c : cfg.synth.clusters) {
            clusters.push_back({{"count", c.count},
                                {"trend", c.base.trend},
                                {"offset", c.base.offset},
                                {"amplitude", c.base.amplitude},
                                {"period", c.base.period},
                                {"noise", c.base.sigma_noise},
                                {"jitter_trend", c.jitter_trend},
                                {"jitter_offset", c.jitter_offset}});
        }
        j["synthetic"] = {{"length", cfg.synth.length}, {"seed", cfg.synth.seed},
                          {"clusters", clusters}};
    } else {
        j["csv"] = cfg.csv_path;
        j["labels"] = cfg.labels_path;
    }
    j["exclude"] = cfg.exclude_users;
    j["split"] = {{"out_fraction", cfg.out_fraction},
                  {"fractions", {cfg.fractions[0], cfg.fractions[1], cfg.fractions[2]}},
                  {"seed", cfg.split_seed},
                  {"drop_threshold", cfg.drop_threshold}};
    j["window"] = {{"lookback", t.window.lookback}, {"horizon", t.window.horizon}};
    j["train"] = {{"model", cfg.model_kind == ModelKind::linear ? "linear" : "dlinear"},
                  {"ma_kernel", cfg.ma_kernel},
                  {"epochs", cfg.epochs},
                  {"batch", cfg.batch},
                  {"steps_per_epoch", cfg.steps_per_epoch},
                  {"valid_every", cfg.valid_every},
                  {"fit_samples", cfg.fit_samples},
                  {"lr", cfg.lr},
                  {"epsilon", cfg.epsilon}};
    j["cell"] = {{"strategy", norm_kind_name(t.cell.strategy)},
                 {"bp_space", bp_space_name(t.cell.bp_space)}};
    j["seed"] = t.seed;
    return j;
}

// FNV-1a over the canonical config dump; cheap and stable across platforms.
std::string config_hash(const json& j) {
    std::string dump = j.dump();
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char ch : dump) {
        h ^= ch;
        h *= 0x100000001b3ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return std::string(buf);
}

json metrics_json(const MetricTable& metrics) {
    json j = json::object();
    for (const auto& [split, m] : metrics) {
        j[split_name(split)] = {{"mse", m.mse}, {"nmse", m.nmse}, {"windows", m.windows}};
    }
    return j;
}

void write_text_atomic(const fs::path& path, const std::string& text) {
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary);
        if (!out) throw DataUnreadable("cannot write " + path.string());
        out << text;
    }
    fs::rename(tmp, path);
}

struct SettingData {
    CleanedDataset cleaned;
    SplitAssignment split;
};

// Example prediction for the overlay plot: first evaluation window of Test1.
json example_json(const LinearForecaster& model, const NormStrategy& strategy,
                  const SettingData& sd, const PreparedData& prep, const WindowSpec& spec) {
    std::vector<WindowPair> windows =
        enumerate_eval_windows(sd.cleaned, sd.split, Split::Test1, spec);
    if (windows.empty()) return json();
    const WindowPair& w = windows.front();
    WindowContext ctx = make_context(w, sd.cleaned.data, &prep.labels);
    std::vector<double> v = normalize(w.x, strategy, ctx);
    std::vector<double> p = forward(model, v);
    std::vector<double> yhat = denormalize(p, strategy, ctx);
    json j;
    j["user"] = w.user;
    j["start"] = w.start;
    j["x"] = w.x;
    j["y"] = w.y;
    j["yhat"] = yhat;
    return j;
}

}  // namespace

void run_experiment(const ExperimentConfig& config, const std::string& out_dir,
                    std::size_t jobs) {
    if (jobs == 0) jobs = 1;
    fs::create_directories(fs::path(out_dir) / "runs");

    PreparedData prep = prepare_data(config);

    // Per-setting cleaning and the shared six-way split.
    std::vector<SettingData> settings(config.settings.size());
    for (std::size_t i = 0; i < config.settings.size(); ++i) {
        const WindowSpec& w = config.settings[i];
        settings[i].cleaned = clean_dataset(prep.data, w, config.drop_threshold);
        settings[i].split = six_way_split(settings[i].cleaned.data, config.out_fraction,
                                          config.fractions, w, config.split_seed);
        if (i == 0) {
            write_removal_report(settings[i].cleaned.report,
                                 (fs::path(out_dir) / "removals.csv").string());
        }
    }

    std::vector<Task> tasks;
    for (std::size_t si = 0; si < config.settings.size(); ++si)
        for (const CellSpec& cell : config.cells)
            for (std::uint64_t seed : config.seeds) {
                Task t{si, config.settings[si], cell, seed, ""};
                t.key = task_key(config.name, t);
                tasks.push_back(t);
            }

    std::atomic<std::size_t> next{0};
    std::mutex log_mutex;
    std::vector<std::string> failures;

    auto worker = [&]() {
        while (true) {
            std::size_t i = next.fetch_add(1);
            if (i >= tasks.size()) return;
            const Task& t = tasks[i];
            fs::path run_path = fs::path(out_dir) / "runs" / (t.key + ".json");
            json task_cfg = task_config_json(config, t);
            std::string hash = config_hash(task_cfg);

            if (fs::exists(run_path)) {
                try {
                    std::ifstream in(run_path);
                    json prev = json::parse(in);
                    if (prev.value("config_hash", "") == hash) {
                        std::lock_guard<std::mutex> lock(log_mutex);
                        std::fprintf(stderr, "[skip] %s (up to date)\n", t.key.c_str());
                        continue;
                    }
                } catch (const std::exception&) {
                    // unreadable record, redo the run
                }
            }

            try {
                TrainConfig tc;
                tc.window = t.window;
                tc.strategy = strategy_for(t.cell, config.epsilon);
                tc.bp_space = t.cell.bp_space;
                tc.model_kind = config.model_kind;
                tc.ma_kernel = config.ma_kernel;
                tc.epochs = config.epochs;
                tc.batch_size = config.batch;
                tc.steps_per_epoch = config.steps_per_epoch;
                tc.valid_every = config.valid_every;
                tc.fit_samples = config.fit_samples;
                tc.adam.lr = config.lr;
                tc.seed = t.seed;

                const SettingData& sd = settings[t.setting_index];
                TrainInputs inputs{&sd.cleaned, &sd.split, &prep.labels};
                TrainResult result = train(tc, inputs);

                json rec;
                rec["schema"] = 1;
                rec["config_hash"] = hash;
                rec["config"] = task_cfg;
                rec["dataset"] = config.name;
                rec["setting"] = setting_name(t.window);
                rec["cell"] = t.cell.key();
                rec["seed"] = t.seed;
                rec["metrics"] = metrics_json(result.metrics);
                rec["strategy"] = json::parse(result.strategy.to_json());
                rec["model"] = json::parse(result.model.to_json());
                rec["example"] = example_json(result.model, result.strategy, sd, prep, t.window);
                json hist = json::array();
                for (const HistoryRow& row : result.history) {
                    json h = {{"epoch", row.epoch}, {"loss", row.train_loss}};
                    if (row.val_mse) {
                        h["val_mse"] = *row.val_mse;
                        h["val_nmse"] = *row.val_nmse;
                    }
                    hist.push_back(h);
                }
                rec["history"] = hist;
                write_text_atomic(run_path, rec.dump(2) + "\n");
                write_history_csv(result.history,
                                  (fs::path(out_dir) / "runs" / (t.key + "_history.csv")).string());

                std::lock_guard<std::mutex> lock(log_mutex);
                double test2 = result.metrics.count(Split::Test2)
                                   ? result.metrics.at(Split::Test2).mse
                                   : std::nan("");
                std::fprintf(stderr, "[done] %s test2_mse=%.6g\n", t.key.c_str(), test2);
            } catch (const std::exception& e) {
                std::lock_guard<std::mutex> lock(log_mutex);
                failures.push_back(t.key + ": " + e.what());
                std::fprintf(stderr, "[fail] %s: %s\n", t.key.c_str(), e.what());
            }
        }
    };

    std::vector<std::thread> pool;
    std::size_t n_threads = std::min(jobs, tasks.size() ? tasks.size() : std::size_t{1});
    pool.reserve(n_threads);
    for (std::size_t i = 0; i < n_threads; ++i) pool.emplace_back(worker);
    for (std::thread& th : pool) th.join();

    if (!failures.empty())
        throw DataError("experiment had " + std::to_string(failures.size()) +
                        " failed runs, first: " + failures.front());

    // Per-user train-period statistics for the scatter diagnostic.
    {
        const SettingData& sd = settings.front();
        std::ostringstream csv;
        csv << "user,group,mu,sigma\n";
        csv.precision(17);
        const PeriodRange train = sd.split.period_of(Split::Train);
        for (std::size_t u = 0; u < sd.cleaned.data.num_users(); ++u) {
            const std::string& id = sd.cleaned.data.user_ids[u];
            std::vector<double> vals(sd.cleaned.data.values[u].begin() + train.begin,
                                     sd.cleaned.data.values[u].begin() + train.end);
            InstanceStats st = instance_stats(vals);
            bool out = false;
            for (std::size_t o : sd.split.users_out)
                if (o == u) out = true;
            csv << id << ',' << (out ? "held_out" : "seen") << ',' << st.mu << ',' << st.sigma
                << '\n';
        }
        write_text_atomic(fs::path(out_dir) / "user_stats.csv", csv.str());
    }

    // Shift diagnostic on each setting.
    for (std::size_t i = 0; i < config.settings.size(); ++i) {
        ShiftReport rep = shift_report(settings[i].cleaned, settings[i].split,
                                       config.settings[i], config.shift, config.name);
        fs::path dir = fs::path(out_dir) / ("shift_" + setting_name(config.settings[i]));
        fs::create_directories(dir);
        write_shift_report(rep, dir.string());
    }

    aggregate_results(config, out_dir);
}

void aggregate_results(const ExperimentConfig& config, const std::string& out_dir) {
    json out;
    out["schema"] = 1;
    out["dataset"] = config.name;

    json settings = json::array();
    for (const WindowSpec& w : config.settings) settings.push_back(setting_name(w));
    out["settings"] = settings;

    json columns = json::array();
    for (const CellSpec& c : config.cells) columns.push_back(c.key());
    out["columns"] = columns;

    json seeds = json::array();
    for (std::uint64_t s : config.seeds) seeds.push_back(s);
    out["seeds"] = seeds;

    json cells = json::object();
    for (const WindowSpec& w : config.settings) {
        for (const CellSpec& cell : config.cells) {
            // per-seed metric vectors in seed order
            std::map<std::string, std::map<std::string, std::vector<double>>> series;
            json runs = json::array();
            for (std::uint64_t seed : config.seeds) {
                Task t{0, w, cell, seed, ""};
                t.key = task_key(config.name, t);
                fs::path run_path = fs::path(out_dir) / "runs" / (t.key + ".json");
                std::ifstream in(run_path);
                if (!in) throw MissingResults("missing run record " + run_path.string());
                json rec = json::parse(in);
                runs.push_back(t.key);
                for (auto& [split, m] : rec.at("metrics").items()) {
                    series[split]["mse"].push_back(m.at("mse").get<double>());
                    series[split]["nmse"].push_back(m.at("nmse").get<double>());
                }
            }
            json agg = json::object();
            for (const auto& [split, metrics] : series) {
                json ms = json::object();
                for (const auto& [metric, vals] : metrics) {
                    double mean = 0;
                    for (double v : vals) mean += v;
                    mean /= static_cast<double>(vals.size());
                    double sd = 0;
                    if (vals.size() > 1) {
                        double acc = 0;
                        for (double v : vals) acc += (v - mean) * (v - mean);
                        sd = std::sqrt(acc / static_cast<double>(vals.size() - 1));
                    }
                    ms[metric] = {{"mean", mean}, {"std", sd}, {"values", vals}};
                }
                agg[split] = ms;
            }
            agg["runs"] = runs;
            cells[setting_name(w) + "|" + cell.key()] = agg;
        }
    }
    out["cells"] = cells;

    write_text_atomic(fs::path(out_dir) / "results.json", out.dump(2) + "\n");
}

}  // namespace tsn
