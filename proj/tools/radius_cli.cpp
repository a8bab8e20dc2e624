// Experiment driver: simulate / replay / compare / sweep / report.
//
// Exit codes: 0 success, 1 runtime failure, 2 usage or validation error.

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "radius/radius.hpp"

namespace fs = std::filesystem;
using namespace radius;

namespace {

constexpr int kOk = 0;
constexpr int kRuntime = 1;
constexpr int kUsage = 2;

// Input problems (missing/malformed files, bad parameters) are usage errors.
struct InputError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Options {
    std::string scenario;
    std::string config;
    std::string trace;
    std::optional<std::uint64_t> seed;
    std::string out;
    std::string sweep;
    std::string techniques = "bayes,chebyshev,percentile";
    std::size_t grid_points = 50;
};

template <typename F>
auto load(const std::string& what, const std::string& path, F&& reader) {
    if (!fs::exists(path)) throw InputError(what + " file not found: " + path);
    try {
        return reader(fs::path(path));
    } catch (const IoError& e) {
        throw InputError(e.what());
    }
}

simnet::RunConfig load_config(const Options& o) {
    if (o.config.empty()) return {};
    return load("config", o.config, [](const fs::path& p) { return traceio::read_config(p); });
}

simnet::ScenarioSet load_scenario(const Options& o) {
    return load("scenario", o.scenario, [](const fs::path& p) { return traceio::read_scenario(p); });
}

std::vector<simnet::TraceRow> load_trace(const Options& o) {
    return load("trace", o.trace, [](const fs::path& p) { return traceio::read_trace(p); });
}

// Trace from --trace, or simulated from --scenario and --seed.
std::vector<simnet::TraceRow> input_trace(const Options& o) {
    if (!o.trace.empty()) {
        if (!o.scenario.empty()) throw InputError("pass either --trace or --scenario, not both");
        return load_trace(o);
    }
    if (o.scenario.empty()) throw InputError("--scenario (with --seed) or --trace is required");
    if (!o.seed) throw InputError("--seed is required with --scenario");
    return simnet::generate_trace(load_scenario(o), *o.seed);
}

void write_run(const fs::path& out, const simnet::RunResult& r) {
    traceio::write_file(out / "decisions.csv", traceio::format_decisions(r.decisions));
    traceio::write_file(out / "alarms.csv", traceio::format_alarms(r.alarms));
    traceio::write_file(out / "refinements.csv", traceio::format_refinements(r.refinements));
    traceio::write_file(out / "links.csv", traceio::format_link_summaries(r.links));
    traceio::write_metrics(r.metrics, out / "metrics.csv");
}

void print_summary(const coordinator::MetricsReport& m) {
    if (m.average && m.average->error_weighted) {
        std::printf("links: %zu  decisions: %zu  network weighted error: %s\n", m.links.size(), m.average->decisions,
                    traceio::fixed9(m.average->error_weighted).c_str());
    } else {
        std::printf("links: %zu  no labeled decisions\n", m.links.size());
    }
}

int cmd_simulate(const Options& o) {
    if (!o.seed) throw InputError("--seed is required");
    const auto scenario = load_scenario(o);
    const auto cfg = load_config(o);
    const auto sim = simnet::run(scenario, cfg, *o.seed);
    const fs::path out(o.out);
    traceio::write_trace(sim.trace, out / "trace.csv");
    write_run(out, sim.run);
    print_summary(sim.run.metrics);
    return kOk;
}

int cmd_replay(const Options& o) {
    if (o.trace.empty()) throw InputError("--trace is required");
    const auto trace = load_trace(o);
    const auto cfg = load_config(o);
    const auto run = simnet::process(trace, cfg);
    write_run(fs::path(o.out), run);
    print_summary(run.metrics);
    return kOk;
}

int cmd_compare(const Options& o) {
    std::vector<experiment::Technique> techniques;
    for (auto name : traceio::split(o.techniques, ',')) {
        name = traceio::trim(name);
        if (!name.empty()) techniques.push_back(experiment::parse_technique(name));
    }
    if (techniques.empty()) throw InputError("--techniques must name at least one technique");
    const auto cfg = load_config(o);
    const auto trace = input_trace(o);
    const auto grid = experiment::logit_grid(o.grid_points);
    const auto points = experiment::compare(trace, cfg, techniques, grid);
    traceio::write_file(fs::path(o.out) / "compare.csv", experiment::format_compare(points));
    std::printf("compare: %zu points\n", points.size());
    return kOk;
}

int cmd_sweep(const Options& o) {
    if (o.sweep.empty()) throw InputError("--sweep key=v1,v2,... is required");
    const auto axis = experiment::parse_sweep(o.sweep);
    const auto cfg = load_config(o);
    const auto trace = input_trace(o);
    const auto points = experiment::sweep(trace, cfg, axis);
    traceio::write_file(fs::path(o.out) / "sweep.csv", experiment::format_sweep(axis.key, points));
    for (const auto& p : points) {
        const auto& avg = p.result.metrics.average;
        std::printf("%s=%s  weighted error %s\n", axis.key.c_str(), p.value.c_str(),
                    avg ? traceio::fixed9(avg->error_weighted).c_str() : "");
    }
    return kOk;
}

int cmd_report(const Options& o) {
    const fs::path dir(o.out);
    const auto m = load("metrics", (dir / "metrics.csv").string(), [](const fs::path& p) {
        return traceio::read_metrics(p);
    });
    auto show = [](const std::optional<double>& v) {
        if (!v) return std::string("-");
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.2f%%", 100.0 * *v);
        return std::string(buf);
    };
    std::printf("%-8s %10s %9s %9s %9s %9s\n", "link", "decisions", "FPR", "FNR", "FPR+FNR", "error");
    auto row = [&](const coordinator::MetricsRecord& r) {
        std::printf("%-8s %10zu %9s %9s %9s %9s\n", r.link.c_str(), r.decisions, show(r.fpr).c_str(),
                    show(r.fnr).c_str(), show(r.error_sum).c_str(), show(r.error_weighted).c_str());
    };
    for (const auto& r : m.links) row(r);
    if (m.average) row(*m.average);
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Link-quality anomaly detection: simulation and evaluation driver"};
    app.require_subcommand(1);
    Options o;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", o.config, "Detection parameters (key = value); defaults if omitted");
        sub->add_option("--out", o.out, "Output directory")->required();
    };

    auto* simulate = app.add_subcommand("simulate", "Simulate a scenario and run detection end to end");
    simulate->add_option("--scenario", o.scenario, "Scenario file")->required();
    simulate->add_option("--seed", o.seed, "RNG seed")->required();
    add_common(simulate);

    auto* replay = app.add_subcommand("replay", "Run detection over a recorded trace");
    replay->add_option("--trace", o.trace, "Trace CSV")->required();
    add_common(replay);

    auto* compare = app.add_subcommand("compare", "Threshold technique comparison over a parameter grid");
    compare->add_option("--scenario", o.scenario, "Scenario file");
    compare->add_option("--trace", o.trace, "Trace CSV (instead of --scenario)");
    compare->add_option("--seed", o.seed, "RNG seed (with --scenario)");
    compare->add_option("--techniques", o.techniques, "Comma list of bayes,chebyshev,percentile");
    compare->add_option("--grid-points", o.grid_points, "Grid size over [1e-5, 1-1e-5]")->check(CLI::Range(2, 100000));
    add_common(compare);

    auto* sweep = app.add_subcommand("sweep", "Repeat detection for each value of one parameter");
    sweep->add_option("--scenario", o.scenario, "Scenario file");
    sweep->add_option("--trace", o.trace, "Trace CSV (instead of --scenario)");
    sweep->add_option("--seed", o.seed, "RNG seed (with --scenario)");
    sweep->add_option("--sweep", o.sweep, "key=v1,v2,...")->required();
    add_common(sweep);

    auto* report = app.add_subcommand("report", "Print the metrics of an output directory");
    report->add_option("--out", o.out, "Directory holding metrics.csv")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kUsage;
    }

    try {
        if (*simulate) return cmd_simulate(o);
        if (*replay) return cmd_replay(o);
        if (*compare) return cmd_compare(o);
        if (*sweep) return cmd_sweep(o);
        if (*report) return cmd_report(o);
    } catch (const InputError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kUsage;
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kUsage;
    } catch (const ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kRuntime;
    }
    return kUsage;
}
