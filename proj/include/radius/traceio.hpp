#pragma once

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "radius/coordinator.hpp"
#include "radius/error.hpp"
#include "radius/simnet.hpp"

namespace radius::traceio {

namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// Number formatting / parsing

// Shortest text that reads back to the same double.
inline std::string exact(double v) {
    char buf[40];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

// Fixed 9 significant digits for metrics files.
inline std::string fixed9(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return buf;
}

inline std::string fixed9(const std::optional<double>& v) { return v ? fixed9(*v) : std::string(); }

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

inline std::vector<std::string_view> split(std::string_view s, char sep) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    for (;;) {
        const std::size_t pos = s.find(sep, start);
        if (pos == std::string_view::npos) {
            out.push_back(s.substr(start));
            return out;
        }
        out.push_back(s.substr(start, pos - start));
        start = pos + 1;
    }
}

template <typename T>
std::optional<T> parse_number(std::string_view s) {
    s = trim(s);
    if (!s.empty() && s.front() == '+') s.remove_prefix(1);
    T v{};
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size() || s.empty()) return std::nullopt;
    return v;
}

inline std::optional<bool> parse_bool(std::string_view s) {
    s = trim(s);
    if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
    if (s == "false" || s == "0" || s == "no" || s == "off") return false;
    return std::nullopt;
}

// ---------------------------------------------------------------------------
// CSV plumbing

inline std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void write_file(const fs::path& path, const std::string& content) {
    if (path.has_parent_path()) {
        std::error_code ec;
        fs::create_directories(path.parent_path(), ec);
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    out << content;
    out.flush();
    if (!out) throw IoError("write failed for " + path.string());
}

struct CsvTable {
    std::vector<std::vector<std::string>> rows;  // excluding the header
    std::vector<std::size_t> line_numbers;
};

// Parses CSV text with an exact expected header. A file that does not end
// in a newline is treated as truncated.
inline CsvTable parse_csv(std::string_view text, const std::vector<std::string>& header, const std::string& source) {
    if (text.empty()) throw ParseError(source, 0, "empty file (missing header)");
    if (text.back() != '\n') throw ParseError(source, 0, "truncated file (no trailing newline)");
    CsvTable table;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos < text.size()) {
        const std::size_t nl = text.find('\n', pos);
        std::string_view line = text.substr(pos, nl - pos);
        pos = nl + 1;
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        const auto fields = split(line, ',');
        if (line_no == 1) {
            for (std::size_t i = 0; i < std::max(fields.size(), header.size()); ++i) {
                const std::string_view found = i < fields.size() ? trim(fields[i]) : std::string_view("<missing>");
                const std::string_view want = i < header.size() ? std::string_view(header[i]) : std::string_view("<none>");
                if (found != want) {
                    throw ParseError(source, 1, "header column " + std::to_string(i + 1) + ": expected '" +
                                                    std::string(want) + "', found '" + std::string(found) + "'");
                }
            }
            continue;
        }
        if (line.empty()) throw ParseError(source, line_no, "blank line");
        if (fields.size() != header.size()) {
            throw ParseError(source, line_no,
                             "expected " + std::to_string(header.size()) + " fields, found " +
                                 std::to_string(fields.size()));
        }
        std::vector<std::string> row;
        row.reserve(fields.size());
        for (auto f : fields) row.emplace_back(trim(f));
        table.rows.push_back(std::move(row));
        table.line_numbers.push_back(line_no);
    }
    return table;
}

inline std::string csv_line(const std::vector<std::string>& fields) {
    std::string out;
    for (std::size_t i = 0; i < fields.size(); ++i) {
        if (i) out += ',';
        out += fields[i];
    }
    out += '\n';
    return out;
}

// ---------------------------------------------------------------------------
// Traces

inline const std::vector<std::string>& trace_header() {
    static const std::vector<std::string> h{"time_s", "link_id", "rssi_dbm", "delivered", "true_state"};
    return h;
}

inline std::string format_trace(std::vector<simnet::TraceRow> rows) {
    std::stable_sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) {
        return a.link != b.link ? a.link < b.link : a.time < b.time;
    });
    std::string out = csv_line(trace_header());
    for (const auto& r : rows) {
        out += exact(r.time);
        out += ',';
        out += std::to_string(r.link);
        out += ',';
        out += exact(r.rssi);
        out += r.delivered ? ",1," : ",0,";
        out += to_string(r.true_state);
        out += '\n';
    }
    return out;
}

inline std::vector<simnet::TraceRow> parse_trace(std::string_view text, const std::string& source = "<trace>") {
    const CsvTable t = parse_csv(text, trace_header(), source);
    std::vector<simnet::TraceRow> rows;
    rows.reserve(t.rows.size());
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
        const auto& f = t.rows[i];
        const std::size_t ln = t.line_numbers[i];
        simnet::TraceRow r;
        const auto time = parse_number<double>(f[0]);
        const auto link = parse_number<LinkId>(f[1]);
        const auto rssi = parse_number<double>(f[2]);
        if (!time || !std::isfinite(*time)) throw ParseError(source, ln, "bad time_s '" + f[0] + "'");
        if (!link) throw ParseError(source, ln, "bad link_id '" + f[1] + "'");
        if (!rssi || !std::isfinite(*rssi)) throw ParseError(source, ln, "bad rssi_dbm '" + f[2] + "'");
        if (f[3] != "0" && f[3] != "1") throw ParseError(source, ln, "bad delivered '" + f[3] + "'");
        if (f[4] != "good" && f[4] != "weak") throw ParseError(source, ln, "bad true_state '" + f[4] + "'");
        r.time = *time;
        r.link = *link;
        r.rssi = *rssi;
        r.delivered = f[3] == "1";
        r.true_state = f[4] == "good" ? LinkState::good : LinkState::weak;
        if (!rows.empty()) {
            const auto& prev = rows.back();
            if (r.link < prev.link || (r.link == prev.link && r.time <= prev.time)) {
                throw ParseError(source, ln, "rows must be sorted by (link_id, time_s) with increasing times");
            }
        }
        rows.push_back(r);
    }
    return rows;
}

inline void write_trace(const std::vector<simnet::TraceRow>& rows, const fs::path& path) {
    write_file(path, format_trace(rows));
}

inline std::vector<simnet::TraceRow> read_trace(const fs::path& path) {
    return parse_trace(read_file(path), path.string());
}

// ---------------------------------------------------------------------------
// Key/value text: `key = value` lines, `#` comments, `[section]` headers.

struct KeyValueLine {
    std::size_t line = 0;
    std::string section;  // empty outside any [section]
    std::string key;
    std::string value;
};

inline std::vector<KeyValueLine> parse_key_values(std::string_view text, const std::string& source) {
    std::vector<KeyValueLine> out;
    std::string section;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        std::size_t nl = text.find('\n', pos);
        if (nl == std::string_view::npos) nl = text.size();
        std::string_view line = text.substr(pos, nl - pos);
        pos = nl + 1;
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') throw ParseError(source, line_no, "unterminated section header");
            section = std::string(trim(line.substr(1, line.size() - 2)));
            if (section.empty()) throw ParseError(source, line_no, "empty section name");
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string_view::npos) throw ParseError(source, line_no, "expected 'key = value'");
        KeyValueLine kv{line_no, section, std::string(trim(line.substr(0, eq))), std::string(trim(line.substr(eq + 1)))};
        if (kv.key.empty()) throw ParseError(source, line_no, "missing key");
        if (kv.value.empty()) throw ParseError(source, line_no, "missing value for '" + kv.key + "'");
        out.push_back(std::move(kv));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Run configuration

namespace detail_cfg {

template <typename T>
T number_or_throw(const std::string& key, const std::string& value) {
    const auto v = parse_number<T>(value);
    if (!v) throw ValidationError(key, "cannot parse '" + value + "'");
    if constexpr (std::is_floating_point_v<T>) {
        if (!std::isfinite(*v)) throw ValidationError(key, "must be finite");
    }
    return *v;
}

}  // namespace detail_cfg

inline const std::vector<std::string>& config_keys() {
    static const std::vector<std::string> keys{"initial_p_good", "p_max",   "n_s",          "e_mu",
                                               "z",              "window_l", "l_update",    "training_update",
                                               "delta",          "mu_w",     "pdr_min",     "pdr_window",
                                               "n_alarm"};
    return keys;
}

inline bool is_config_key(std::string_view key) {
    const auto& keys = config_keys();
    return std::find(keys.begin(), keys.end(), key) != keys.end();
}

// Sets one parameter by name. Does not validate cross-field invariants.
inline void set_config_value(simnet::RunConfig& cfg, const std::string& key, const std::string& value) {
    using detail_cfg::number_or_throw;
    auto& a = cfg.agent;
    auto& c = cfg.coordinator;
    if (key == "initial_p_good") a.initial_p_good = number_or_throw<double>(key, value);
    else if (key == "p_max") a.p_max = number_or_throw<double>(key, value);
    else if (key == "n_s") a.training.n_s = number_or_throw<std::size_t>(key, value);
    else if (key == "e_mu") a.training.e_mu = number_or_throw<double>(key, value);
    else if (key == "z") a.training.z = number_or_throw<double>(key, value);
    else if (key == "window_l") a.window_l = number_or_throw<std::size_t>(key, value);
    else if (key == "l_update") a.l_update = number_or_throw<std::size_t>(key, value);
    else if (key == "delta") a.delta = number_or_throw<double>(key, value);
    else if (key == "mu_w") a.mu_w = number_or_throw<double>(key, value);
    else if (key == "pdr_min") c.pdr_min = number_or_throw<double>(key, value);
    else if (key == "pdr_window") c.pdr_window = number_or_throw<std::size_t>(key, value);
    else if (key == "n_alarm") c.n_alarm = number_or_throw<std::size_t>(key, value);
    else if (key == "training_update") {
        const auto b = parse_bool(value);
        if (!b) throw ValidationError(key, "expected true/false, got '" + value + "'");
        a.training_update = *b;
    } else {
        throw ValidationError(key, "unknown configuration key");
    }
}

// Missing keys keep their defaults (the deployment settings: P(H_g) 0.8 up
// to 0.99, N_s 250, E_mu 1 dBm, l 3, l_update 50, N_alarm 5, delta 0.003).
inline simnet::RunConfig parse_config(std::string_view text, const std::string& source = "<config>") {
    simnet::RunConfig cfg;
    std::map<std::string, std::size_t> seen;
    for (const auto& kv : parse_key_values(text, source)) {
        if (!kv.section.empty()) throw ParseError(source, kv.line, "sections are not used in config files");
        if (!is_config_key(kv.key)) throw ParseError(source, kv.line, "unknown key '" + kv.key + "'");
        if (seen.count(kv.key)) throw ParseError(source, kv.line, "duplicate key '" + kv.key + "'");
        seen[kv.key] = kv.line;
        set_config_value(cfg, kv.key, kv.value);
    }
    cfg.validate();
    return cfg;
}

inline simnet::RunConfig read_config(const fs::path& path) { return parse_config(read_file(path), path.string()); }

inline std::string format_config(const simnet::RunConfig& cfg) {
    const auto& a = cfg.agent;
    const auto& c = cfg.coordinator;
    std::string out;
    auto put = [&](const char* k, const std::string& v) { out += std::string(k) + " = " + v + "\n"; };
    put("initial_p_good", exact(a.initial_p_good));
    put("p_max", exact(a.p_max));
    put("n_s", std::to_string(a.training.n_s));
    put("e_mu", exact(a.training.e_mu));
    put("z", exact(a.training.z));
    put("window_l", std::to_string(a.window_l));
    put("l_update", std::to_string(a.l_update));
    put("training_update", a.training_update ? "true" : "false");
    put("delta", exact(a.delta));
    put("mu_w", exact(a.mu_w));
    put("pdr_min", exact(c.pdr_min));
    put("pdr_window", std::to_string(c.pdr_window));
    put("n_alarm", std::to_string(c.n_alarm));
    return out;
}

// ---------------------------------------------------------------------------
// Scenarios
//
//   [defaults]            # applied to every link defined after it
//   send_rate = 5
//   [link 3]
//   from = 11
//   to = 9
//   mu_g = -72
//   sigma = 2.5
//   segment = 600, 0             # duration_s, offset_db
//   segment = 240, 0, -20        # ... ramping to end_offset_db
//   segment = 120, -3, -3, 1.5   # ... with sigma scaled by 1.5

inline simnet::Segment parse_segment(const std::string& value, const std::string& source, std::size_t line) {
    const auto parts = split(value, ',');
    if (parts.size() < 2 || parts.size() > 4) {
        throw ParseError(source, line, "segment expects 'duration, offset[, end_offset[, sigma_scale]]'");
    }
    std::vector<double> nums;
    for (auto p : parts) {
        const auto v = parse_number<double>(p);
        if (!v || !std::isfinite(*v)) throw ParseError(source, line, "bad segment value '" + std::string(trim(p)) + "'");
        nums.push_back(*v);
    }
    simnet::Segment s;
    s.duration = nums[0];
    s.offset = nums[1];
    s.end_offset = nums.size() > 2 ? nums[2] : nums[1];
    s.sigma_scale = nums.size() > 3 ? nums[3] : 1.0;
    return s;
}

inline simnet::ScenarioSet parse_scenario(std::string_view text, const std::string& source = "<scenario>") {
    simnet::ScenarioSet set;
    simnet::LinkScenario defaults;
    enum class Where { none, defaults, link } where = Where::none;
    std::string current_section;
    std::vector<bool> own_segments;  // link has replaced the inherited segment list

    for (const auto& kv : parse_key_values(text, source)) {
        if (kv.section != current_section) {
            current_section = kv.section;
            if (kv.section == "defaults") {
                where = Where::defaults;
            } else if (kv.section.rfind("link", 0) == 0) {
                const auto id = parse_number<LinkId>(kv.section.substr(4));
                if (!id) throw ParseError(source, kv.line, "bad link section '[" + kv.section + "]'");
                simnet::LinkScenario l = defaults;
                l.link = *id;
                set.push_back(l);
                own_segments.push_back(false);
                where = Where::link;
            } else {
                throw ParseError(source, kv.line, "unknown section '[" + kv.section + "]'");
            }
        }
        if (where == Where::none) throw ParseError(source, kv.line, "key outside of a section");
        simnet::LinkScenario& target = where == Where::defaults ? defaults : set.back();
        auto num = [&]() {
            const auto v = parse_number<double>(kv.value);
            if (!v || !std::isfinite(*v)) throw ParseError(source, kv.line, "bad value for '" + kv.key + "'");
            return *v;
        };
        auto node = [&]() {
            const auto v = parse_number<std::uint32_t>(kv.value);
            if (!v) throw ParseError(source, kv.line, "bad node id for '" + kv.key + "'");
            return *v;
        };
        if (kv.key == "mu_g") target.channel.mu_g = num();
        else if (kv.key == "mu_w") target.channel.mu_w = num();
        else if (kv.key == "sigma") target.channel.sigma = num();
        else if (kv.key == "pdr_midpoint") target.channel.pdr_midpoint = num();
        else if (kv.key == "pdr_slope") target.channel.pdr_slope = num();
        else if (kv.key == "send_rate") target.send_rate = num();
        else if (kv.key == "from" && where == Where::link) target.from_node = node();
        else if (kv.key == "to" && where == Where::link) target.to_node = node();
        else if (kv.key == "segment") {
            if (where == Where::link && !own_segments.back()) {
                target.segments.clear();
                own_segments.back() = true;
            }
            target.segments.push_back(parse_segment(kv.value, source, kv.line));
        }
        else throw ParseError(source, kv.line, "unknown key '" + kv.key + "' in [" + kv.section + "]");
    }
    if (set.empty()) throw ParseError(source, 0, "no [link N] sections");
    simnet::validate(set);
    return set;
}

inline simnet::ScenarioSet read_scenario(const fs::path& path) {
    return parse_scenario(read_file(path), path.string());
}

// ---------------------------------------------------------------------------
// Metrics

inline const std::vector<std::string>& metrics_header() {
    static const std::vector<std::string> h{"link_id", "decisions", "fp",  "fn",        "tp",
                                            "tn",      "fpr",       "fnr", "error_sum", "error_weighted"};
    return h;
}

inline std::vector<std::string> metrics_fields(const coordinator::MetricsRecord& m) {
    const auto& c = m.confusion;
    return {m.link,
            std::to_string(m.decisions),
            std::to_string(c.fp),
            std::to_string(c.fn),
            std::to_string(c.tp),
            std::to_string(c.tn),
            fixed9(m.fpr),
            fixed9(m.fnr),
            fixed9(m.error_sum),
            fixed9(m.error_weighted)};
}

inline std::string format_metrics(const coordinator::MetricsReport& report) {
    std::string out = csv_line(metrics_header());
    for (const auto& r : report.links) out += csv_line(metrics_fields(r));
    if (report.average) out += csv_line(metrics_fields(*report.average));
    return out;
}

inline void write_metrics(const coordinator::MetricsReport& report, const fs::path& path) {
    write_file(path, format_metrics(report));
}

inline coordinator::MetricsReport parse_metrics(std::string_view text, const std::string& source = "<metrics>") {
    const CsvTable t = parse_csv(text, metrics_header(), source);
    coordinator::MetricsReport report;
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
        const auto& f = t.rows[i];
        const std::size_t ln = t.line_numbers[i];
        auto count = [&](std::size_t k) {
            const auto v = parse_number<std::size_t>(f[k]);
            if (!v) throw ParseError(source, ln, "bad " + metrics_header()[k] + " '" + f[k] + "'");
            return *v;
        };
        auto rate = [&](std::size_t k) -> std::optional<double> {
            if (f[k].empty()) return std::nullopt;
            const auto v = parse_number<double>(f[k]);
            if (!v) throw ParseError(source, ln, "bad " + metrics_header()[k] + " '" + f[k] + "'");
            return *v;
        };
        coordinator::MetricsRecord m;
        m.link = f[0];
        m.decisions = count(1);
        m.confusion = {count(4), count(2), count(5), count(3)};
        m.fpr = rate(6);
        m.fnr = rate(7);
        m.error_sum = rate(8);
        m.error_weighted = rate(9);
        if (m.link == "average") {
            report.average = m;
        } else {
            report.links.push_back(m);
        }
    }
    return report;
}

inline coordinator::MetricsReport read_metrics(const fs::path& path) {
    return parse_metrics(read_file(path), path.string());
}

// ---------------------------------------------------------------------------
// Decisions, alarms, refinements

inline std::string format_decisions(const std::vector<agent::Decision>& ds) {
    std::string out = csv_line({"time_s", "link_id", "smoothed_dbm", "score", "anomalous", "threshold_dbm", "p_good"});
    for (const auto& d : ds) {
        out += csv_line({exact(d.time), std::to_string(d.link), exact(d.smoothed), exact(d.score),
                         d.anomalous ? "1" : "0", exact(d.threshold), exact(d.p_good)});
    }
    return out;
}

inline std::string format_alarms(const std::vector<coordinator::ClassifiedAlarm>& as) {
    std::string out = csv_line({"time_s", "link_id", "score", "payload", "class", "pdr", "classified_at_s"});
    for (const auto& a : as) {
        out += csv_line({exact(a.alarm.time), std::to_string(a.alarm.link), exact(a.alarm.score),
                         std::to_string(a.alarm.payload()), coordinator::to_string(a.cls), exact(a.pdr),
                         exact(a.classified_at)});
    }
    return out;
}

inline std::string format_refinements(const std::vector<simnet::RefinementEvent>& rs) {
    std::string out =
        csv_line({"time_s", "link_id", "p_good_before", "p_good_after", "threshold_before", "threshold_after"});
    for (const auto& r : rs) {
        out += csv_line({exact(r.time), std::to_string(r.link), exact(r.change.p_before), exact(r.change.p_after),
                         exact(r.change.threshold_before), exact(r.change.threshold_after)});
    }
    return out;
}

inline std::string format_link_summaries(const std::vector<simnet::LinkSummary>& ls) {
    std::string out = csv_line({"link_id", "n_ts", "detect_start_s", "mean_dbm", "std_db", "threshold_dbm", "p_good",
                                "commits", "refinements", "unlabeled"});
    for (const auto& s : ls) {
        const bool det = s.phase == agent::Phase::detecting;
        out += csv_line({std::to_string(s.link), std::to_string(s.n_ts),
                         s.detect_start ? exact(*s.detect_start) : std::string(), fixed9(s.mean), fixed9(s.stddev),
                         det ? fixed9(s.threshold) : std::string(), fixed9(s.p_good), std::to_string(s.commits),
                         std::to_string(s.refinements), std::to_string(s.unlabeled)});
    }
    return out;
}

}  // namespace radius::traceio
