#include "tsn/csv_io.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <sstream>
#include <tuple>

namespace tsn {

namespace {

std::string trim(const std::string& s) {
    std::size_t b = 0;
    std::size_t e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    std::stringstream ss(line);
    while (std::getline(ss, cell, ',')) cells.push_back(trim(cell));
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    return cells;
}

bool parse_double(const std::string& s, double& out) {
    if (s.empty()) return false;
    const char* begin = s.data();
    const char* end = begin + s.size();
    auto [ptr, ec] = std::from_chars(begin, end, out);
    return ec == std::errc{} && ptr == end;
}

std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

TimeSeriesDataset load_long(std::ifstream& in) {
    // (time, user, value) triples; the time grid is the sorted set of
    // distinct keys, numeric when every key parses as a number.
    std::vector<std::tuple<std::string, std::string, std::string>> rows;
    std::string line;
    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        auto cells = split_csv_line(line);
        if (cells.size() != 3) throw DataUnreadable("long CSV row must have 3 cells: " + line);
        rows.emplace_back(cells[0], cells[1], cells[2]);
    }
    if (rows.empty()) throw DataUnreadable("long CSV holds no data rows");

    std::vector<std::string> times;
    std::vector<std::string> users;
    for (const auto& [t, u, v] : rows) {
        times.push_back(t);
        users.push_back(u);
    }
    std::sort(users.begin(), users.end());
    users.erase(std::unique(users.begin(), users.end()), users.end());

    bool numeric_times = true;
    for (const auto& t : times) {
        double d = 0.0;
        if (!parse_double(t, d)) {
            numeric_times = false;
            break;
        }
    }
    std::sort(times.begin(), times.end(), [&](const std::string& a, const std::string& b) {
        if (numeric_times) {
            double da = 0.0;
            double db = 0.0;
            parse_double(a, da);
            parse_double(b, db);
            return da < db;
        }
        return a < b;  // ISO-8601 timestamps order lexicographically
    });
    times.erase(std::unique(times.begin(), times.end()), times.end());

    std::map<std::string, std::size_t> time_index;
    std::map<std::string, std::size_t> user_index;
    for (std::size_t i = 0; i < times.size(); ++i) time_index[times[i]] = i;
    for (std::size_t i = 0; i < users.size(); ++i) user_index[users[i]] = i;

    TimeSeriesDataset data;
    data.user_ids = users;
    data.values.assign(users.size(), std::vector<double>(times.size(), 0.0));
    data.mask.assign(users.size(), std::vector<std::uint8_t>(times.size(), 0));
    for (const auto& [t, u, v] : rows) {
        double value = 0.0;
        if (!parse_double(v, value)) continue;  // missing
        std::size_t ui = user_index[u];
        std::size_t ti = time_index[t];
        data.values[ui][ti] = value;
        data.mask[ui][ti] = 1;
    }
    return data;
}

TimeSeriesDataset load_wide(std::ifstream& in, const std::vector<std::string>& header) {
    TimeSeriesDataset data;
    data.user_ids.assign(header.begin() + 1, header.end());
    if (data.user_ids.empty()) throw DataUnreadable("wide CSV header has no user columns");
    data.values.assign(data.user_ids.size(), {});
    data.mask.assign(data.user_ids.size(), {});

    std::string line;
    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        auto cells = split_csv_line(line);
        if (cells.size() != header.size()) {
            throw DataUnreadable("wide CSV row has " + std::to_string(cells.size()) +
                                 " cells, expected " + std::to_string(header.size()));
        }
        for (std::size_t u = 0; u < data.user_ids.size(); ++u) {
            double value = 0.0;
            bool present = parse_double(cells[u + 1], value);
            data.values[u].push_back(present ? value : 0.0);
            data.mask[u].push_back(present ? 1 : 0);
        }
    }
    if (data.num_steps() == 0) throw DataUnreadable("wide CSV holds no data rows");
    return data;
}

}  // namespace

TimeSeriesDataset load_dataset_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataUnreadable("cannot open dataset CSV: " + path);
    std::string header_line;
    if (!std::getline(in, header_line)) throw DataUnreadable("dataset CSV is empty: " + path);
    auto header = split_csv_line(header_line);
    if (header.size() < 2) throw DataUnreadable("dataset CSV header too narrow: " + path);

    TimeSeriesDataset data;
    if (header.size() == 3 && lower(header[1]) == "user" && lower(header[2]) == "value") {
        data = load_long(in);
    } else {
        data = load_wide(in, header);
    }
    data.validate();
    return data;
}

void write_dataset_csv(const TimeSeriesDataset& data, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw DataUnreadable("cannot write dataset CSV: " + path);
    out << "time";
    for (const auto& id : data.user_ids) out << ',' << id;
    out << '\n';
    out.precision(17);
    for (std::size_t t = 0; t < data.num_steps(); ++t) {
        out << t;
        for (std::size_t u = 0; u < data.num_users(); ++u) {
            out << ',';
            if (data.mask[u][t]) out << data.values[u][t];
        }
        out << '\n';
    }
}

std::map<std::string, std::string> load_labels_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataUnreadable("cannot open labels CSV: " + path);
    std::map<std::string, std::string> labels;
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        auto cells = split_csv_line(line);
        if (first && lower(cells[0]) == "user") {
            first = false;
            continue;
        }
        first = false;
        if (cells.size() != 2) throw DataUnreadable("labels CSV row must be user,cluster");
        labels[cells[0]] = cells[1];
    }
    return labels;
}

void write_labels_csv(const std::map<std::string, std::string>& labels,
                      const std::string& path) {
    std::ofstream out(path);
    if (!out) throw DataUnreadable("cannot write labels CSV: " + path);
    out << "user,cluster\n";
    for (const auto& [user, cluster] : labels) out << user << ',' << cluster << '\n';
}

void write_removal_report(const std::vector<RemovalRow>& report, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw DataUnreadable("cannot write removal report: " + path);
    out << "user,start,end,reason\n";
    for (const auto& r : report) {
        out << r.user << ',' << r.start << ',' << r.end << ',' << r.reason << '\n';
    }
}

}  // namespace tsn
