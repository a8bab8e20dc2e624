#pragma once

#include <cmath>
#include <cstddef>
#include <deque>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "radius/agent.hpp"
#include "radius/error.hpp"
#include "radius/types.hpp"

namespace radius::coordinator {

struct CoordinatorConfig {
    double pdr_min = 0.8;
    std::size_t pdr_window = 10;
    std::size_t n_alarm = 5;

    void validate() const {
        detail::require(pdr_min > 0.0 && pdr_min < 1.0, "pdr_min", "must lie in (0, 1)");
        detail::require(pdr_window >= 1, "pdr_window", "must be >= 1");
        detail::require(n_alarm >= 1, "n_alarm", "must be >= 1");
    }
};

enum class AlarmClass : std::uint8_t { true_alarm, false_alarm };

inline const char* to_string(AlarmClass c) noexcept { return c == AlarmClass::true_alarm ? "true" : "false"; }

struct Confusion {
    std::size_t tp = 0;  // anomalous, link weak
    std::size_t fp = 0;  // anomalous, link good
    std::size_t tn = 0;  // normal, link good
    std::size_t fn = 0;  // normal, link weak

    std::size_t total() const noexcept { return tp + fp + tn + fn; }

    Confusion& operator+=(const Confusion& o) noexcept {
        tp += o.tp;
        fp += o.fp;
        tn += o.tn;
        fn += o.fn;
        return *this;
    }
};

struct ClassifiedAlarm {
    agent::Alarm alarm;
    AlarmClass cls = AlarmClass::false_alarm;
    double pdr = 0.0;
    double classified_at = 0.0;  // differs from alarm.time only for deferred alarms
};

struct LinkLedger {
    explicit LinkLedger(std::size_t window = 10) : pdr_window(window) {}

    std::size_t pdr_window;
    std::deque<bool> delivery_window;
    std::size_t delivered_in_window = 0;
    std::size_t consecutive_false = 0;
    Confusion confusion;
    std::size_t unlabeled = 0;          // decisions seen before the PDR window filled
    std::vector<agent::Alarm> deferred; // alarms waiting for a full PDR window

    bool window_full() const noexcept { return delivery_window.size() == pdr_window; }

    std::optional<double> pdr() const noexcept {
        if (!window_full()) return std::nullopt;
        return static_cast<double>(delivered_in_window) / static_cast<double>(pdr_window);
    }
};

// Good iff PDR >= pdr_min (inclusive boundary).
inline LinkState label(double pdr, const CoordinatorConfig& cfg) noexcept {
    return pdr >= cfg.pdr_min ? LinkState::good : LinkState::weak;
}

inline void record_delivery(LinkLedger& ledger, bool delivered) {
    ledger.delivery_window.push_back(delivered);
    if (delivered) ++ledger.delivered_in_window;
    if (ledger.delivery_window.size() > ledger.pdr_window) {
        if (ledger.delivery_window.front()) --ledger.delivered_in_window;
        ledger.delivery_window.pop_front();
    }
}

// False alarm iff the link's PDR is still at or above pdr_min. With an
// unfilled window the alarm is queued and nullopt returned.
inline std::optional<AlarmClass> classify_alarm(LinkLedger& ledger, const agent::Alarm& alarm,
                                                const CoordinatorConfig& cfg) {
    const std::optional<double> pdr = ledger.pdr();
    if (!pdr) {
        ledger.deferred.push_back(alarm);
        return std::nullopt;
    }
    if (label(*pdr, cfg) == LinkState::good) {
        ++ledger.consecutive_false;
        return AlarmClass::false_alarm;
    }
    ledger.consecutive_false = 0;
    return AlarmClass::true_alarm;
}

// Classifies queued alarms once the window has filled.
inline std::vector<ClassifiedAlarm> drain_deferred(LinkLedger& ledger, const CoordinatorConfig& cfg, double now) {
    std::vector<ClassifiedAlarm> out;
    if (!ledger.window_full() || ledger.deferred.empty()) return out;
    std::vector<agent::Alarm> queued;
    queued.swap(ledger.deferred);
    for (const auto& a : queued) {
        const auto cls = classify_alarm(ledger, a, cfg);
        out.push_back({a, *cls, *ledger.pdr(), now});
    }
    return out;
}

// Fires once the consecutive false-alarm count reaches n_alarm, then
// restarts the count.
inline bool maybe_refine(LinkLedger& ledger, const CoordinatorConfig& cfg) noexcept {
    if (ledger.consecutive_false < cfg.n_alarm) return false;
    ledger.consecutive_false = 0;
    return true;
}

// Returns false when the decision could not be labeled.
inline bool record_decision(LinkLedger& ledger, const agent::Decision& d, const CoordinatorConfig& cfg) {
    const std::optional<double> pdr = ledger.pdr();
    if (!pdr) {
        ++ledger.unlabeled;
        return false;
    }
    const bool good = label(*pdr, cfg) == LinkState::good;
    if (d.anomalous) {
        ++(good ? ledger.confusion.fp : ledger.confusion.tp);
    } else {
        ++(good ? ledger.confusion.tn : ledger.confusion.fn);
    }
    return true;
}

struct MetricsRecord {
    std::string link;  // link id, or "average" for the network row
    std::size_t decisions = 0;
    Confusion confusion;
    std::optional<double> fpr;             // FP / (FP + TN)
    std::optional<double> fnr;             // FN / (FN + TP)
    std::optional<double> error_sum;       // fpr + fnr, needs both classes
    std::optional<double> error_weighted;  // (FP + FN) / decisions
};

inline MetricsRecord metrics_of(std::string link, const Confusion& c) {
    MetricsRecord m;
    m.link = std::move(link);
    m.confusion = c;
    m.decisions = c.total();
    const std::size_t good = c.fp + c.tn;
    const std::size_t weak = c.fn + c.tp;
    if (good) m.fpr = static_cast<double>(c.fp) / static_cast<double>(good);
    if (weak) m.fnr = static_cast<double>(c.fn) / static_cast<double>(weak);
    if (m.fpr && m.fnr) m.error_sum = *m.fpr + *m.fnr;
    if (m.decisions) m.error_weighted = static_cast<double>(c.fp + c.fn) / static_cast<double>(m.decisions);
    return m;
}

struct MetricsReport {
    std::vector<MetricsRecord> links;
    std::optional<MetricsRecord> average;
};

// Per-link records plus a network row. The network row sums the confusion
// counts and averages each rate over the links where it is defined.
inline MetricsReport metrics_report(const std::map<LinkId, Confusion>& per_link) {
    MetricsReport report;
    if (per_link.empty()) return report;
    Confusion total;
    for (const auto& [id, c] : per_link) {
        report.links.push_back(metrics_of(std::to_string(id), c));
        total += c;
    }
    MetricsRecord avg;
    avg.link = "average";
    avg.confusion = total;
    avg.decisions = total.total();
    auto mean_of = [&](auto member) -> std::optional<double> {
        double sum = 0.0;
        std::size_t n = 0;
        for (const auto& r : report.links) {
            if (const auto& v = r.*member) {
                sum += *v;
                ++n;
            }
        }
        if (!n) return std::nullopt;
        return sum / static_cast<double>(n);
    };
    avg.fpr = mean_of(&MetricsRecord::fpr);
    avg.fnr = mean_of(&MetricsRecord::fnr);
    avg.error_sum = mean_of(&MetricsRecord::error_sum);
    avg.error_weighted = mean_of(&MetricsRecord::error_weighted);
    report.average = avg;
    return report;
}

// The coordinator role over all links: one ledger per link, one message at
// a time.
class Coordinator {
public:
    explicit Coordinator(CoordinatorConfig cfg) : cfg_(cfg) { cfg_.validate(); }

    const CoordinatorConfig& config() const noexcept { return cfg_; }

    LinkLedger& ledger(LinkId link) {
        auto it = ledgers_.find(link);
        if (it == ledgers_.end()) it = ledgers_.emplace(link, LinkLedger(cfg_.pdr_window)).first;
        return it->second;
    }

    const std::map<LinkId, LinkLedger>& ledgers() const noexcept { return ledgers_; }

    // Records a sent packet's fate; returns any alarms that became
    // classifiable because the PDR window just filled.
    std::vector<ClassifiedAlarm> on_delivery(LinkId link, bool delivered, double now) {
        LinkLedger& l = ledger(link);
        record_delivery(l, delivered);
        return drain_deferred(l, cfg_, now);
    }

    bool on_decision(const agent::Decision& d) { return record_decision(ledger(d.link), d, cfg_); }

    std::optional<ClassifiedAlarm> on_alarm(const agent::Alarm& a) {
        LinkLedger& l = ledger(a.link);
        const auto cls = classify_alarm(l, a, cfg_);
        if (!cls) return std::nullopt;
        return ClassifiedAlarm{a, *cls, *l.pdr(), a.time};
    }

    bool refinement_due(LinkId link) { return maybe_refine(ledger(link), cfg_); }

    MetricsReport report() const {
        std::map<LinkId, Confusion> per_link;
        for (const auto& [id, l] : ledgers_) per_link.emplace(id, l.confusion);
        return metrics_report(per_link);
    }

private:
    CoordinatorConfig cfg_;
    std::map<LinkId, LinkLedger> ledgers_;
};

}  // namespace radius::coordinator
