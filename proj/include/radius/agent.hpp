#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <vector>

#include "radius/error.hpp"
#include "radius/stats.hpp"
#include "radius/thresholds.hpp"
#include "radius/types.hpp"

namespace radius::agent {

struct AgentConfig {
    stats::TrainingSizeConfig training{};
    std::size_t window_l = 3;
    std::size_t l_update = 50;
    bool training_update = true;  // fold accepted groups back into the profile
    double initial_p_good = 0.8;
    double p_max = 0.99;
    double delta = 0.003;
    double mu_w = -88.0;

    void validate() const {
        training.validate();
        detail::require(window_l >= 1, "window_l", "must be >= 1");
        detail::require(l_update >= 1, "l_update", "must be >= 1");
        detail::require(initial_p_good > 0.0 && initial_p_good < 1.0, "initial_p_good", "must lie in (0, 1)");
        detail::require(p_max > 0.0 && p_max < 1.0, "p_max", "must lie in (0, 1)");
        detail::require(initial_p_good <= p_max, "initial_p_good", "must not exceed p_max");
        detail::require(delta > 0.0 && delta < 1.0, "delta", "must lie in (0, 1)");
        detail::require(std::isfinite(mu_w) && mu_w < 0.0, "mu_w", "must be a finite negative dBm value");
    }
};

enum class Phase : std::uint8_t { bootstrap, training, detecting };

struct Decision {
    double time = 0.0;
    LinkId link = 0;
    double smoothed = 0.0;   // dBm
    double score = 0.0;      // smoothed / threshold
    bool anomalous = false;  // smoothed < threshold
    double threshold = 0.0;  // threshold the decision was taken against
    double p_good = 0.0;
};

struct Alarm {
    double time = 0.0;
    LinkId link = 0;
    double score = 0.0;

    // Wire form piggybacked on application packets: score in 1/10000 units,
    // saturating. Two bytes is all the coordinator needs.
    std::uint16_t payload() const noexcept {
        const double scaled = std::round(score * 10000.0);
        return static_cast<std::uint16_t>(std::clamp(scaled, 0.0, 65535.0));
    }
};

struct Observation {
    std::optional<Decision> decision;
    std::optional<Alarm> alarm;
    bool group_committed = false;  // an averaged group was folded into stats
};

struct Refinement {
    double p_before = 0.0;
    double p_after = 0.0;
    double threshold_before = 0.0;
    double threshold_after = 0.0;
};

struct AgentLinkState {
    Phase phase = Phase::bootstrap;
    stats::RunningStats stats;
    std::size_t n_ts = 0;  // resolved once the bootstrap samples are in
    stats::SlidingWindow window{1};
    std::vector<double> pending_group;
    std::vector<double> pending_scores;
    double threshold = std::numeric_limits<double>::quiet_NaN();
    double p_good = 0.0;
};

// Per-link detection agent: bootstrap -> training -> detecting.
class LinkAgent {
public:
    LinkAgent(LinkId link, AgentConfig cfg) : link_(link), cfg_(cfg) {
        cfg_.validate();
        state_.window = stats::SlidingWindow(cfg_.window_l);
        state_.p_good = cfg_.initial_p_good;
        state_.pending_group.reserve(cfg_.l_update);
        state_.pending_scores.reserve(cfg_.l_update);
    }

    LinkId link() const noexcept { return link_; }
    const AgentConfig& config() const noexcept { return cfg_; }
    const AgentLinkState& state() const noexcept { return state_; }
    Phase phase() const noexcept { return state_.phase; }
    bool detecting() const noexcept { return state_.phase == Phase::detecting; }

    // Routes a received packet's RSSI to whichever phase is active.
    Observation observe(double rssi, double time) {
        if (!detecting()) {
            observe_training(rssi);
            return {};
        }
        return observe_detect(rssi, time);
    }

    void observe_training(double rssi) {
        detail::require(!detecting(), "phase", "training sample offered in detection phase");
        state_.stats.push(rssi);
        const std::size_t n = state_.stats.count();
        if (state_.phase == Phase::bootstrap && n == cfg_.training.n_s) {
            state_.n_ts = stats::min_training_size(state_.stats.stddev(), cfg_.training);
            state_.phase = Phase::training;
        }
        if (state_.phase == Phase::training && n >= state_.n_ts) {
            const double t = threshold_for(state_.stats, state_.p_good);
            detail::require(std::isfinite(t) && t < 0.0, "threshold",
                            "training profile does not yield a negative threshold above mu_w");
            state_.threshold = t;
            state_.phase = Phase::detecting;
        }
    }

    Observation observe_detect(double rssi, double time) {
        detail::require(detecting(), "phase", "detection sample offered before training finished");
        detail::require(std::isfinite(rssi), "rssi", "non-finite sample");
        Observation out;
        const std::optional<double> smoothed = state_.window.push(rssi);
        if (!smoothed) return out;

        Decision d;
        d.time = time;
        d.link = link_;
        d.smoothed = *smoothed;
        d.threshold = state_.threshold;
        d.score = *smoothed / state_.threshold;
        d.anomalous = *smoothed < state_.threshold;
        d.p_good = state_.p_good;
        if (d.anomalous) out.alarm = Alarm{time, link_, d.score};
        out.decision = d;

        state_.pending_group.push_back(rssi);
        state_.pending_scores.push_back(d.score);
        if (state_.pending_group.size() == cfg_.l_update) out.group_committed = group_commit();
        return out;
    }

    // Folds the pending group into the profile when its mean anomaly score
    // is below one. Buffers are cleared either way. Returns true on fold.
    bool group_commit() {
        detail::require(state_.pending_group.size() == cfg_.l_update, "pending_group", "group not full");
        bool folded = false;
        if (cfg_.training_update) {
            double score_sum = 0.0;
            for (double s : state_.pending_scores) score_sum += s;
            const double mean_score = score_sum / static_cast<double>(state_.pending_scores.size());
            if (mean_score < 1.0) {
                const stats::RunningStats candidate =
                    stats::merged(state_.stats, stats::RunningStats::of(state_.pending_group));
                // A drifted profile that no longer sits above mu_w cannot
                // produce a usable cut; keep the old one.
                if (candidate.mean() > cfg_.mu_w) {
                    const double t = threshold_for(candidate, state_.p_good);
                    if (std::isfinite(t) && t < 0.0) {
                        state_.stats = candidate;
                        state_.threshold = t;
                        folded = true;
                    }
                }
            }
        }
        state_.pending_group.clear();
        state_.pending_scores.clear();
        return folded;
    }

    Refinement apply_refinement() {
        detail::require(detecting(), "phase", "refinement before detection phase");
        Refinement r;
        r.p_before = state_.p_good;
        r.threshold_before = state_.threshold;
        state_.p_good = std::min(state_.p_good + cfg_.delta, cfg_.p_max);
        state_.threshold = threshold_for(state_.stats, state_.p_good);
        r.p_after = state_.p_good;
        r.threshold_after = state_.threshold;
        return r;
    }

    // The one place thresholds are derived; every stored threshold equals
    // this evaluated on the current counters and prior.
    double threshold_for(const stats::RunningStats& s, double p_good) const {
        const thresholds::LinkProfile profile{s.mean(), cfg_.mu_w, s.stddev()};
        return thresholds::bayes_threshold(profile, {p_good, cfg_.p_max});
    }

private:
    LinkId link_;
    AgentConfig cfg_;
    AgentLinkState state_;
};

}  // namespace radius::agent
