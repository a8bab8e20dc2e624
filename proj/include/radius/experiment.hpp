#pragma once

#include <cmath>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "radius/agent.hpp"
#include "radius/coordinator.hpp"
#include "radius/error.hpp"
#include "radius/simnet.hpp"
#include "radius/thresholds.hpp"
#include "radius/traceio.hpp"

namespace radius::experiment {

enum class Technique { bayes, chebyshev, percentile };

inline const char* to_string(Technique t) noexcept {
    switch (t) {
        case Technique::bayes: return "bayes";
        case Technique::chebyshev: return "chebyshev";
        case Technique::percentile: return "percentile";
    }
    return "?";
}

inline Technique parse_technique(std::string_view name) {
    if (name == "bayes") return Technique::bayes;
    if (name == "chebyshev") return Technique::chebyshev;
    if (name == "percentile") return Technique::percentile;
    throw ValidationError("techniques", "unknown technique '" + std::string(name) + "'");
}

// n points evenly spaced in log-odds between lo and hi, so both ends of the
// probability range are resolved alike.
inline std::vector<double> logit_grid(std::size_t n = 50, double lo = 1e-5, double hi = 1.0 - 1e-5) {
    detail::require(n >= 2, "grid", "needs at least two points");
    detail::require(lo > 0.0 && hi < 1.0 && lo < hi, "grid", "bounds must satisfy 0 < lo < hi < 1");
    const double a = std::log(lo / (1.0 - lo));
    const double b = std::log(hi / (1.0 - hi));
    std::vector<double> g(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double x = a + (b - a) * static_cast<double>(i) / static_cast<double>(n - 1);
        g[i] = 1.0 / (1.0 + std::exp(-x));
    }
    g.front() = lo;
    g.back() = hi;
    return g;
}

inline std::vector<double> linear_grid(double lo, double hi, std::size_t n) {
    detail::require(n >= 2, "grid", "needs at least two points");
    std::vector<double> g(n);
    for (std::size_t i = 0; i < n; ++i) g[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
    return g;
}

// Threshold of a technique from a training profile. `parameter` is P(H_g)
// for bayes, P_target for chebyshev and the percentile as a fraction for
// percentile.
inline double technique_threshold(Technique t, double mean, double std, double parameter, double mu_w) {
    switch (t) {
        case Technique::bayes:
            return thresholds::bayes_threshold({mean, mu_w, std}, {parameter, parameter});
        case Technique::chebyshev:
            return thresholds::chebyshev_threshold(mean, std, parameter);
        case Technique::percentile:
            return thresholds::percentile_threshold(mean, std, 100.0 * parameter);
    }
    return 0.0;
}

// Training profile and the labeled, smoothed detection stream of one link.
struct LinkStream {
    LinkId link = 0;
    double mean = 0.0;
    double stddev = 0.0;
    std::size_t n_ts = 0;
    std::vector<double> smoothed;
    std::vector<std::optional<LinkState>> labels;  // nullopt: PDR window not yet full
};

// Splits each link's trace into the training set (as the agent would size
// it) and the remainder, smoothed with window_l and labeled by PDR. Links
// that never complete training are omitted.
inline std::vector<LinkStream> link_streams(std::span<const simnet::TraceRow> trace, const simnet::RunConfig& cfg) {
    cfg.validate();
    std::map<LinkId, std::vector<const simnet::TraceRow*>> by_link;
    for (const auto& r : trace) by_link[r.link].push_back(&r);

    std::vector<LinkStream> out;
    for (auto& [id, rows] : by_link) {
        std::stable_sort(rows.begin(), rows.end(), [](auto* a, auto* b) { return a->time < b->time; });
        agent::LinkAgent trainer(id, cfg.agent);
        coordinator::LinkLedger ledger(cfg.coordinator.pdr_window);
        stats::SlidingWindow window(cfg.agent.window_l);
        LinkStream s;
        s.link = id;
        for (const auto* r : rows) {
            coordinator::record_delivery(ledger, r->delivered);
            if (!r->delivered) continue;
            if (!trainer.detecting()) {
                trainer.observe_training(r->rssi);
                continue;
            }
            if (const auto v = window.push(r->rssi)) {
                s.smoothed.push_back(*v);
                const auto pdr = ledger.pdr();
                s.labels.push_back(pdr ? std::optional(coordinator::label(*pdr, cfg.coordinator)) : std::nullopt);
            }
        }
        if (!trainer.detecting()) continue;
        s.mean = trainer.state().stats.mean();
        s.stddev = trainer.state().stats.stddev();
        s.n_ts = trainer.state().n_ts;
        out.push_back(std::move(s));
    }
    return out;
}

inline coordinator::Confusion confusion_at(const LinkStream& s, double threshold) {
    coordinator::Confusion c;
    for (std::size_t i = 0; i < s.smoothed.size(); ++i) {
        if (!s.labels[i]) continue;
        const bool anomalous = s.smoothed[i] < threshold;
        const bool good = *s.labels[i] == LinkState::good;
        if (anomalous) {
            ++(good ? c.fp : c.tp);
        } else {
            ++(good ? c.tn : c.fn);
        }
    }
    return c;
}

struct ComparePoint {
    Technique technique = Technique::bayes;
    double parameter = 0.0;
    LinkId link = 0;
    double threshold = 0.0;
    coordinator::MetricsRecord metrics;
};

// Static-threshold comparison: every technique is fitted on the same
// training profile and scored on the same smoothed, labeled stream.
inline std::vector<ComparePoint> compare(std::span<const LinkStream> streams, std::span<const Technique> techniques,
                                         std::span<const double> grid, double mu_w) {
    detail::require(!techniques.empty(), "techniques", "at least one technique required");
    std::vector<ComparePoint> out;
    for (Technique t : techniques) {
        for (const auto& s : streams) {
            for (double p : grid) {
                ComparePoint pt;
                pt.technique = t;
                pt.parameter = p;
                pt.link = s.link;
                pt.threshold = technique_threshold(t, s.mean, s.stddev, p, mu_w);
                pt.metrics = coordinator::metrics_of(std::to_string(s.link), confusion_at(s, pt.threshold));
                out.push_back(pt);
            }
        }
    }
    return out;
}

inline std::vector<ComparePoint> compare(std::span<const simnet::TraceRow> trace, const simnet::RunConfig& cfg,
                                         std::span<const Technique> techniques, std::span<const double> grid) {
    const auto streams = link_streams(trace, cfg);
    return compare(streams, techniques, grid, cfg.agent.mu_w);
}

inline std::string format_compare(const std::vector<ComparePoint>& pts) {
    using traceio::csv_line;
    using traceio::fixed9;
    std::string out = csv_line({"technique", "parameter", "link_id", "threshold_dbm", "decisions", "fp", "fn", "tp",
                                "tn", "fpr", "fnr", "error_sum", "error_weighted"});
    for (const auto& p : pts) {
        const auto& m = p.metrics;
        out += csv_line({to_string(p.technique), fixed9(p.parameter), std::to_string(p.link), fixed9(p.threshold),
                         std::to_string(m.decisions), std::to_string(m.confusion.fp), std::to_string(m.confusion.fn),
                         std::to_string(m.confusion.tp), std::to_string(m.confusion.tn), fixed9(m.fpr), fixed9(m.fnr),
                         fixed9(m.error_sum), fixed9(m.error_weighted)});
    }
    return out;
}

// `key=v1,v2,...` over a known configuration key.
struct SweepAxis {
    std::string key;
    std::vector<std::string> values;
};

inline SweepAxis parse_sweep(std::string_view text) {
    const auto eq = text.find('=');
    if (eq == std::string_view::npos) throw ValidationError("sweep", "expected key=v1,v2,...");
    SweepAxis axis;
    axis.key = std::string(traceio::trim(text.substr(0, eq)));
    if (!traceio::is_config_key(axis.key)) throw ValidationError("sweep", "unknown config key '" + axis.key + "'");
    for (auto v : traceio::split(text.substr(eq + 1), ',')) {
        v = traceio::trim(v);
        if (v.empty()) throw ValidationError("sweep", "empty value in list");
        axis.values.emplace_back(v);
    }
    return axis;
}

struct SweepPoint {
    std::string value;
    simnet::RunResult result;
};

// One full detection run per axis value over the same trace.
inline std::vector<SweepPoint> sweep(std::span<const simnet::TraceRow> trace, const simnet::RunConfig& base,
                                     const SweepAxis& axis) {
    std::vector<simnet::RunConfig> cfgs;
    for (const auto& v : axis.values) {
        simnet::RunConfig cfg = base;
        traceio::set_config_value(cfg, axis.key, v);
        cfg.validate();
        cfgs.push_back(cfg);
    }
    std::vector<SweepPoint> out;
    for (std::size_t i = 0; i < cfgs.size(); ++i) out.push_back({axis.values[i], simnet::process(trace, cfgs[i])});
    return out;
}

inline std::string format_sweep(const std::string& key, const std::vector<SweepPoint>& pts) {
    using traceio::csv_line;
    using traceio::fixed9;
    std::string out = csv_line({"key", "value", "link_id", "decisions", "fp", "fn", "tp", "tn", "fpr", "fnr",
                                "error_sum", "error_weighted", "n_ts", "commits", "refinements"});
    for (const auto& p : pts) {
        std::map<std::string, const simnet::LinkSummary*> by_link;
        for (const auto& s : p.result.links) by_link[std::to_string(s.link)] = &s;
        auto emit = [&](const coordinator::MetricsRecord& m, const simnet::LinkSummary* s) {
            std::vector<std::string> f{key, p.value};
            for (auto& x : traceio::metrics_fields(m)) f.push_back(std::move(x));
            f.push_back(s ? std::to_string(s->n_ts) : std::string());
            f.push_back(s ? std::to_string(s->commits) : std::string());
            f.push_back(s ? std::to_string(s->refinements) : std::string());
            out += csv_line(f);
        };
        for (const auto& m : p.result.metrics.links) {
            const auto it = by_link.find(m.link);
            emit(m, it == by_link.end() ? nullptr : it->second);
        }
        if (p.result.metrics.average) emit(*p.result.metrics.average, nullptr);
    }
    return out;
}

}  // namespace radius::experiment
