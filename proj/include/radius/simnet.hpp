#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "radius/agent.hpp"
#include "radius/coordinator.hpp"
#include "radius/error.hpp"
#include "radius/types.hpp"

namespace radius::simnet {

// Seeded source with host-independent output: mt19937_64 is fully specified
// by the standard, and the normal draw is done here rather than through
// std::normal_distribution, whose algorithm is left to the implementation.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    static std::uint64_t mix(std::uint64_t x) noexcept {
        x += 0x9e3779b97f4a7c15ULL;
        x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
        x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
        return x ^ (x >> 31);
    }

    // Independent stream per (seed, link).
    static Rng for_link(std::uint64_t seed, LinkId link) { return Rng(mix(seed ^ mix(link + 1ULL))); }

    // Uniform on [0, 1) with 53 random bits.
    double uniform() noexcept { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    // Marsaglia polar method.
    double normal() noexcept {
        if (spare_) {
            const double z = *spare_;
            spare_.reset();
            return z;
        }
        double u, v, s;
        do {
            u = 2.0 * uniform() - 1.0;
            v = 2.0 * uniform() - 1.0;
            s = u * u + v * v;
        } while (s >= 1.0 || s == 0.0);
        const double f = std::sqrt(-2.0 * std::log(s) / s);
        spare_ = v * f;
        return u * f;
    }

private:
    std::mt19937_64 engine_;
    std::optional<double> spare_;
};

struct ChannelModel {
    double mu_g = -70.0;          // dBm, nominal good-link mean
    double mu_w = -88.0;          // dBm, grey-zone border used for true-state labels
    double sigma = 2.0;           // dB
    double pdr_midpoint = -88.0;  // dBm, 50% delivery point
    double pdr_slope = 1.5;       // per dB

    void validate() const {
        detail::require(std::isfinite(mu_g) && std::isfinite(mu_w) && mu_g > mu_w, "mu_g",
                        "good-link mean must exceed mu_w");
        detail::require(std::isfinite(sigma) && sigma > 0.0, "sigma", "must be > 0");
        detail::require(std::isfinite(pdr_midpoint), "pdr_midpoint", "must be finite");
        detail::require(std::isfinite(pdr_slope) && pdr_slope > 0.0, "pdr_slope", "must be > 0");
    }
};

// A stretch of the link's timeline. The signal mean is mu_g + offset,
// ramping linearly from `offset` to `end_offset`; sigma_scale widens the
// noise (movement, multipath).
struct Segment {
    double duration = 0.0;  // seconds
    double offset = 0.0;    // dB
    double end_offset = 0.0;
    double sigma_scale = 1.0;

    static Segment hold(double duration, double offset, double sigma_scale = 1.0) {
        return {duration, offset, offset, sigma_scale};
    }
    static Segment ramp(double duration, double from, double to, double sigma_scale = 1.0) {
        return {duration, from, to, sigma_scale};
    }
};

struct LinkScenario {
    LinkId link = 0;
    std::optional<std::uint32_t> from_node;
    std::optional<std::uint32_t> to_node;
    ChannelModel channel;
    double send_rate = 5.0;  // Hz
    std::vector<Segment> segments;

    double duration() const noexcept {
        double d = 0.0;
        for (const auto& s : segments) d += s.duration;
        return d;
    }

    void validate() const {
        channel.validate();
        detail::require(std::isfinite(send_rate) && send_rate > 0.0, "send_rate", "must be > 0");
        detail::require(!segments.empty(), "segment", "link " + std::to_string(link) + " has no segments");
        for (const auto& s : segments) {
            detail::require(std::isfinite(s.duration) && s.duration > 0.0, "segment", "durations must be > 0");
            detail::require(std::isfinite(s.offset) && std::isfinite(s.end_offset), "segment", "offsets must be finite");
            detail::require(std::isfinite(s.sigma_scale) && s.sigma_scale > 0.0, "segment", "sigma scale must be > 0");
        }
    }

    struct Point {
        double offset;
        double sigma_scale;
    };

    // Signal shape at time t (seconds from the start of the scenario).
    Point at(double t) const noexcept {
        double start = 0.0;
        for (const auto& s : segments) {
            if (t < start + s.duration) {
                const double frac = (t - start) / s.duration;
                return {s.offset + (s.end_offset - s.offset) * frac, s.sigma_scale};
            }
            start += s.duration;
        }
        const auto& last = segments.back();
        return {last.end_offset, last.sigma_scale};
    }
};

using ScenarioSet = std::vector<LinkScenario>;

inline void validate(const ScenarioSet& set) {
    std::set<LinkId> seen;
    for (const auto& l : set) {
        l.validate();
        detail::require(seen.insert(l.link).second, "link", "duplicate link id " + std::to_string(l.link));
    }
}

struct TraceRow {
    double time = 0.0;
    LinkId link = 0;
    double rssi = 0.0;
    bool delivered = false;
    LinkState true_state = LinkState::good;

    friend bool operator==(const TraceRow&, const TraceRow&) = default;
};

inline double sample_rssi(const ChannelModel& model, double mean_offset, Rng& rng, double sigma_scale = 1.0) {
    return model.mu_g + mean_offset + model.sigma * sigma_scale * rng.normal();
}

inline double delivery_probability(const ChannelModel& model, double rssi) noexcept {
    return 1.0 / (1.0 + std::exp(-model.pdr_slope * (rssi - model.pdr_midpoint)));
}

inline bool deliver(const ChannelModel& model, double rssi, Rng& rng) {
    return rng.uniform() < delivery_probability(model, rssi);
}

// One row per scheduled packet of every link, sorted by (link, time).
inline std::vector<TraceRow> generate_trace(const ScenarioSet& set, std::uint64_t seed) {
    validate(set);
    std::vector<const LinkScenario*> order;
    for (const auto& l : set) order.push_back(&l);
    std::sort(order.begin(), order.end(), [](auto* a, auto* b) { return a->link < b->link; });

    std::vector<TraceRow> rows;
    for (const LinkScenario* l : order) {
        Rng rng = Rng::for_link(seed, l->link);
        const double total = l->duration();
        for (std::uint64_t k = 0;; ++k) {
            const double t = static_cast<double>(k) / l->send_rate;
            if (t >= total) break;
            const auto p = l->at(t);
            TraceRow row;
            row.time = t;
            row.link = l->link;
            row.rssi = sample_rssi(l->channel, p.offset, rng, p.sigma_scale);
            row.delivered = deliver(l->channel, row.rssi, rng);
            row.true_state = l->channel.mu_g + p.offset <= l->channel.mu_w ? LinkState::weak : LinkState::good;
            rows.push_back(row);
        }
    }
    return rows;
}

struct RunConfig {
    agent::AgentConfig agent;
    coordinator::CoordinatorConfig coordinator;

    void validate() const {
        agent.validate();
        coordinator.validate();
    }
};

struct RefinementEvent {
    double time = 0.0;
    LinkId link = 0;
    agent::Refinement change;
};

struct LinkSummary {
    LinkId link = 0;
    agent::Phase phase = agent::Phase::bootstrap;
    std::size_t n_ts = 0;
    std::optional<double> detect_start;  // time of the packet that completed training
    double mean = 0.0;
    double stddev = 0.0;
    double threshold = 0.0;
    double p_good = 0.0;
    std::size_t commits = 0;
    std::size_t refinements = 0;
    std::size_t unlabeled = 0;
};

struct RunResult {
    std::vector<agent::Decision> decisions;  // by (link, time)
    std::vector<coordinator::ClassifiedAlarm> alarms;
    std::vector<RefinementEvent> refinements;
    std::vector<LinkSummary> links;
    coordinator::MetricsReport metrics;
};

// Drives agents and the coordinator over a trace in time order. Per packet:
// the delivery is recorded, a delivered packet's RSSI reaches its agent, the
// resulting decision is labeled, an alarm is classified, and a refinement
// command (if due) is applied before the next packet.
inline RunResult process(std::span<const TraceRow> trace, const RunConfig& cfg) {
    cfg.validate();
    std::vector<std::size_t> order(trace.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (trace[a].time != trace[b].time) return trace[a].time < trace[b].time;
        return trace[a].link < trace[b].link;
    });

    coordinator::Coordinator coord(cfg.coordinator);
    std::map<LinkId, agent::LinkAgent> agents;
    std::map<LinkId, LinkSummary> summaries;
    RunResult out;

    auto agent_for = [&](LinkId id) -> agent::LinkAgent& {
        auto it = agents.find(id);
        if (it == agents.end()) {
            it = agents.emplace(id, agent::LinkAgent(id, cfg.agent)).first;
            summaries[id].link = id;
        }
        return it->second;
    };

    auto handle_alarm = [&](const coordinator::ClassifiedAlarm& ca, agent::LinkAgent& ag, double now) {
        out.alarms.push_back(ca);
        if (ca.cls == coordinator::AlarmClass::false_alarm && coord.refinement_due(ca.alarm.link)) {
            out.refinements.push_back({now, ca.alarm.link, ag.apply_refinement()});
            ++summaries[ca.alarm.link].refinements;
        }
    };

    for (std::size_t idx : order) {
        const TraceRow& row = trace[idx];
        agent::LinkAgent& ag = agent_for(row.link);
        for (const auto& ca : coord.on_delivery(row.link, row.delivered, row.time)) handle_alarm(ca, ag, row.time);
        if (!row.delivered) continue;

        const bool was_detecting = ag.detecting();
        const agent::Observation obs = ag.observe(row.rssi, row.time);
        if (!was_detecting && ag.detecting()) summaries[row.link].detect_start = row.time;
        if (obs.group_committed) ++summaries[row.link].commits;
        if (obs.decision) {
            coord.on_decision(*obs.decision);
            out.decisions.push_back(*obs.decision);
        }
        if (obs.alarm) {
            if (auto ca = coord.on_alarm(*obs.alarm)) handle_alarm(*ca, ag, row.time);
        }
    }

    for (auto& [id, ag] : agents) {
        LinkSummary& s = summaries[id];
        const auto& st = ag.state();
        s.phase = st.phase;
        s.n_ts = st.n_ts;
        s.mean = st.stats.mean();
        s.stddev = st.stats.stddev();
        s.threshold = st.threshold;
        s.p_good = st.p_good;
        s.unlabeled = coord.ledgers().at(id).unlabeled;
        out.links.push_back(s);
    }
    std::stable_sort(out.decisions.begin(), out.decisions.end(),
                     [](const auto& a, const auto& b) { return a.link < b.link; });
    std::stable_sort(out.alarms.begin(), out.alarms.end(),
                     [](const auto& a, const auto& b) { return a.alarm.link < b.alarm.link; });
    std::stable_sort(out.refinements.begin(), out.refinements.end(),
                     [](const auto& a, const auto& b) { return a.link < b.link; });
    out.metrics = coord.report();
    return out;
}

struct SimulationResult {
    std::vector<TraceRow> trace;
    RunResult run;
};

inline SimulationResult run(const ScenarioSet& set, const RunConfig& cfg, std::uint64_t seed) {
    cfg.validate();
    SimulationResult r;
    r.trace = generate_trace(set, seed);
    r.run = process(r.trace, cfg);
    return r;
}

}  // namespace radius::simnet
