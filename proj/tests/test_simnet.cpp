#include <catch_amalgamated.hpp>

#include <cmath>
#include <map>
#include <set>

#include "oracles.hpp"
#include "radius/simnet.hpp"
#include "radius/traceio.hpp"

using Catch::Approx;
using namespace radius;
using namespace radius::simnet;

namespace {

LinkScenario link(LinkId id, std::vector<Segment> segs, double mu_g = -70.0, double sigma = 2.0) {
    LinkScenario l;
    l.link = id;
    l.channel.mu_g = mu_g;
    l.channel.sigma = sigma;
    l.segments = std::move(segs);
    return l;
}

}  // namespace

TEST_CASE("sample_rssi", "[simnet]") {
    SECTION("degenerate channel") {
        ChannelModel m;
        m.sigma = 0.0;
        Rng rng(1);
        for (int i = 0; i < 100; ++i) REQUIRE(sample_rssi(m, -3.5, rng) == -73.5);
    }
    SECTION("sample mean within three standard errors") {
        const ChannelModel m;
        Rng rng(2);
        std::vector<double> xs(100000);
        for (auto& x : xs) x = sample_rssi(m, 0.0, rng);
        const auto mo = oracle::two_pass(xs);
        REQUIRE(std::abs(mo.mean - m.mu_g) <= 3.0 * m.sigma / std::sqrt(1e5));
        REQUIRE(mo.stddev == Approx(m.sigma).epsilon(0.01));
    }
    SECTION("mean shift") {
        const ChannelModel m;
        Rng rng(3);
        double sum = 0.0;
        for (int i = 0; i < 100000; ++i) sum += sample_rssi(m, -18.0, rng);
        REQUIRE(sum / 1e5 == Approx(-88.0).margin(0.03));
    }
    SECTION("normal draws are standard") {
        Rng rng(4);
        std::vector<double> z(200000);
        for (auto& v : z) v = rng.normal();
        const auto mo = oracle::two_pass(z);
        REQUIRE(std::abs(mo.mean) < 0.01);
        REQUIRE(mo.stddev == Approx(1.0).epsilon(0.01));
        const auto below = std::count_if(z.begin(), z.end(), [](double v) { return v < -1.0; });
        REQUIRE(static_cast<double>(below) / 2e5 == Approx(0.158655).margin(0.003));
    }
}

TEST_CASE("Delivery model", "[simnet]") {
    const ChannelModel m;
    REQUIRE(delivery_probability(m, -88.0) == 0.5);
    REQUIRE(delivery_probability(m, -60.0) > 0.999);
    REQUIRE(delivery_probability(m, -116.0) < 0.001);
    REQUIRE(delivery_probability(m, -60.0) == Approx(1.0 - delivery_probability(m, -116.0)).epsilon(1e-12));
    Rng rng(5);
    int ok = 0;
    for (int i = 0; i < 100000; ++i) ok += deliver(m, -88.0, rng);
    REQUIRE(ok / 1e5 == Approx(0.5).margin(0.005));
}

TEST_CASE("Scenario timeline", "[simnet]") {
    const auto l = link(1, {Segment::hold(10, 0), Segment::ramp(10, 0, -10, 2.0), Segment::hold(5, -10)});
    REQUIRE(l.duration() == 25.0);
    REQUIRE(l.at(0).offset == 0.0);
    REQUIRE(l.at(15).offset == Approx(-5.0));
    REQUIRE(l.at(15).sigma_scale == 2.0);
    REQUIRE(l.at(22).offset == -10.0);
    REQUIRE(l.at(100).offset == -10.0);

    REQUIRE_THROWS_AS(link(1, {}).validate(), ValidationError);
    REQUIRE_THROWS_AS(link(1, {Segment::hold(0, 0)}).validate(), ValidationError);
    REQUIRE_THROWS_AS(link(1, {Segment::hold(5, 0)}, -90.0).validate(), ValidationError);
    REQUIRE_THROWS_AS(validate(ScenarioSet{link(1, {Segment::hold(5, 0)}), link(1, {Segment::hold(5, 0)})}),
                      ValidationError);
}

TEST_CASE("Trace generation", "[simnet]") {
    const ScenarioSet set{link(2, {Segment::hold(60, 0), Segment::hold(60, -20)}), link(1, {Segment::hold(30, 0)})};
    const auto trace = generate_trace(set, 11);
    // 5 Hz: 600 rows for link 2, 150 for link 1, sorted by link.
    REQUIRE(trace.size() == 750);
    REQUIRE(trace.front().link == 1);
    std::map<LinkId, double> last;
    for (const auto& r : trace) {
        if (last.count(r.link)) REQUIRE(r.time > last[r.link]);
        last[r.link] = r.time;
        if (r.link == 2) REQUIRE((r.true_state == LinkState::weak) == (r.time >= 60.0));
        else REQUIRE(r.true_state == LinkState::good);
    }
    REQUIRE(generate_trace(set, 11) == trace);
    REQUIRE(generate_trace(set, 12) != trace);
    // Link streams are independent of which other links exist.
    const auto solo = generate_trace({set[1]}, 11);
    REQUIRE(std::equal(solo.begin(), solo.end(), trace.begin()));
}

TEST_CASE("End to end: good-only link", "[simnet]") {
    const ScenarioSet set{link(1, {Segment::hold(600, 0)})};
    const auto r = run(set, {}, 7);
    REQUIRE(r.run.metrics.links.size() == 1);
    const auto& m = r.run.metrics.links[0];
    REQUIRE(m.decisions > 2000);
    REQUIRE_FALSE(m.fnr);
    REQUIRE(m.fpr);
    REQUIRE(*m.fpr < 0.05);
    REQUIRE(r.run.links[0].phase == agent::Phase::detecting);
}

TEST_CASE("End to end: hard switch raises alarms promptly", "[simnet]") {
    const double switch_at = 120.0;
    for (std::uint64_t seed : {1, 2, 3, 4, 5}) {
        const ScenarioSet set{link(1, {Segment::hold(switch_at, 0), Segment::hold(60, -18)})};
        const RunConfig cfg;
        const auto r = run(set, cfg, seed);
        std::optional<double> first;
        for (const auto& a : r.run.alarms) {
            if (a.alarm.time >= switch_at) {
                first = a.alarm.time;
                break;
            }
        }
        REQUIRE(first);
        const double budget = static_cast<double>(cfg.agent.window_l + cfg.coordinator.pdr_window) / 5.0;
        REQUIRE(*first - switch_at <= budget);
    }
}

TEST_CASE("Pipeline invariants", "[simnet][property]") {
    const ScenarioSet set{
        link(1, {Segment::hold(120, 0), Segment::ramp(120, 0, -22), Segment::hold(60, -22), Segment::hold(120, 0)}),
        link(2, {Segment::hold(100, 0), Segment::hold(200, -6, 2.0), Segment::hold(100, 0)}, -75.0, 3.0),
        link(3, {Segment::hold(400, 0)}, -66.0, 1.5)};
    RunConfig cfg;
    cfg.agent.training.n_s = 100;
    const auto r = run(set, cfg, 99);

    std::map<LinkId, std::set<double>> delivered_at;
    std::map<LinkId, std::size_t> delivered_count;
    for (const auto& row : r.trace) {
        if (row.delivered) {
            delivered_at[row.link].insert(row.time);
            ++delivered_count[row.link];
        }
    }
    // Decisions only at delivered packets, at most one per packet.
    std::map<LinkId, std::size_t> decisions;
    for (const auto& d : r.run.decisions) {
        REQUIRE(delivered_at[d.link].count(d.time) == 1);
        ++decisions[d.link];
    }
    for (const auto& s : r.run.links) {
        REQUIRE(decisions[s.link] + s.n_ts + cfg.agent.window_l - 1 == delivered_count[s.link]);
    }
    // Every anomalous decision became exactly one classified alarm.
    std::size_t anomalous = 0;
    for (const auto& d : r.run.decisions) anomalous += d.anomalous;
    REQUIRE(r.run.alarms.size() == anomalous);
    // Confusion conservation.
    for (const auto& m : r.run.metrics.links) {
        const auto id = static_cast<LinkId>(std::stoul(m.link));
        const auto& s = *std::find_if(r.run.links.begin(), r.run.links.end(), [&](auto& x) { return x.link == id; });
        REQUIRE(m.confusion.total() + s.unlabeled == decisions[id]);
    }
    // Refinements strictly follow n_alarm consecutive false alarms.
    for (const auto& ev : r.run.refinements) {
        std::size_t run_len = 0;
        for (const auto& a : r.run.alarms) {
            if (a.alarm.link != ev.link || a.classified_at > ev.time) continue;
            run_len = a.cls == coordinator::AlarmClass::false_alarm ? run_len + 1 : 0;
        }
        REQUIRE(run_len >= cfg.coordinator.n_alarm);
    }
}

TEST_CASE("Determinism", "[simnet]") {
    const ScenarioSet set{link(1, {Segment::hold(200, 0), Segment::ramp(100, 0, -20)}),
                          link(4, {Segment::hold(300, 0, 1.5)}, -72.0, 2.5)};
    RunConfig cfg;
    cfg.agent.training.n_s = 60;
    const auto a = run(set, cfg, 2026);
    const auto b = run(set, cfg, 2026);
    REQUIRE(traceio::format_trace(a.trace) == traceio::format_trace(b.trace));
    REQUIRE(traceio::format_metrics(a.run.metrics) == traceio::format_metrics(b.run.metrics));
    REQUIRE(traceio::format_decisions(a.run.decisions) == traceio::format_decisions(b.run.decisions));
    // Replaying the trace reproduces the run.
    const auto replay = process(a.trace, cfg);
    REQUIRE(traceio::format_decisions(replay.decisions) == traceio::format_decisions(a.run.decisions));
}

TEST_CASE("Invalid configuration aborts before simulation", "[simnet]") {
    RunConfig cfg;
    cfg.agent.delta = 0.0;
    REQUIRE_THROWS_AS(run({link(1, {Segment::hold(10, 0)})}, cfg, 1), ValidationError);
}
