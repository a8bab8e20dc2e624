#include <catch_amalgamated.hpp>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

using Catch::Matchers::ContainsSubstring;
namespace fs = std::filesystem;

namespace {

struct Result {
    int code = -1;
    std::string out;
    std::string err;
};

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

const fs::path& scratch() {
    static const fs::path dir = [] {
        auto d = fs::temp_directory_path() / "radius_cli_test";
        fs::remove_all(d);
        fs::create_directories(d);
        return d;
    }();
    return dir;
}

Result cli(const std::string& args) {
    const auto out = scratch() / "stdout.txt";
    const auto err = scratch() / "stderr.txt";
    const std::string cmd =
        std::string("\"") + RADIUS_CLI + "\" " + args + " >\"" + out.string() + "\" 2>\"" + err.string() + "\"";
    const int status = std::system(cmd.c_str());
    Result r;
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.out = slurp(out);
    r.err = slurp(err);
    return r;
}

fs::path small_scenario() {
    const auto p = scratch() / "small.ini";
    std::ofstream(p) << "[defaults]\nsend_rate = 5\n"
                        "[link 1]\nmu_g = -72\nsigma = 2\nsegment = 120, 0\nsegment = 60, 0, -20\nsegment = 60, 0\n"
                        "[link 2]\nmu_g = -76\nsigma = 3\nsegment = 240, 0\n";
    return p;
}

std::string q(const fs::path& p) { return "\"" + p.string() + "\""; }

bool same_tree(const fs::path& a, const fs::path& b) {
    std::size_t n = 0;
    for (const auto& e : fs::directory_iterator(a)) {
        const auto other = b / e.path().filename();
        if (!fs::exists(other) || slurp(e.path()) != slurp(other)) return false;
        ++n;
    }
    return n == static_cast<std::size_t>(std::distance(fs::directory_iterator(b), fs::directory_iterator{}));
}

}  // namespace

TEST_CASE("simulate writes the full output set", "[cli]") {
    const auto out = scratch() / "sim";
    const auto r = cli("simulate --scenario " + q(small_scenario()) + " --seed 7 --out " + q(out));
    REQUIRE(r.code == 0);
    for (const char* f : {"trace.csv", "decisions.csv", "alarms.csv", "refinements.csv", "links.csv", "metrics.csv"}) {
        REQUIRE(fs::exists(out / f));
    }
    REQUIRE_THAT(slurp(out / "metrics.csv"), ContainsSubstring("\naverage,"));

    const auto rep = cli("report --out " + q(out));
    REQUIRE(rep.code == 0);
    REQUIRE_THAT(rep.out, ContainsSubstring("average"));
}

TEST_CASE("simulate is deterministic", "[cli]") {
    const auto a = scratch() / "det_a";
    const auto b = scratch() / "det_b";
    REQUIRE(cli("simulate --scenario " + q(small_scenario()) + " --seed 11 --out " + q(a)).code == 0);
    REQUIRE(cli("simulate --scenario " + q(small_scenario()) + " --seed 11 --out " + q(b)).code == 0);
    REQUIRE(same_tree(a, b));
    const auto c = scratch() / "det_c";
    REQUIRE(cli("simulate --scenario " + q(small_scenario()) + " --seed 12 --out " + q(c)).code == 0);
    REQUIRE(slurp(a / "trace.csv") != slurp(c / "trace.csv"));
}

TEST_CASE("replay reproduces simulate", "[cli]") {
    const auto sim = scratch() / "rp_sim";
    const auto rep = scratch() / "rp_rep";
    const auto cfg = fs::path(RADIUS_CONFIG_DIR) / "table1.ini";
    REQUIRE(cli("simulate --scenario " + q(small_scenario()) + " --seed 3 --config " + q(cfg) + " --out " + q(sim))
                .code == 0);
    REQUIRE(cli("replay --trace " + q(sim / "trace.csv") + " --config " + q(cfg) + " --out " + q(rep)).code == 0);
    for (const char* f : {"decisions.csv", "alarms.csv", "refinements.csv", "links.csv", "metrics.csv"}) {
        INFO(f);
        REQUIRE(slurp(sim / f) == slurp(rep / f));
    }
}

TEST_CASE("replay of an empty trace", "[cli]") {
    const auto trace = scratch() / "empty.csv";
    std::ofstream(trace) << "time_s,link_id,rssi_dbm,delivered,true_state\n";
    const auto out = scratch() / "empty_out";
    const auto r = cli("replay --trace " + q(trace) + " --out " + q(out));
    REQUIRE(r.code == 0);
    REQUIRE(slurp(out / "metrics.csv") == "link_id,decisions,fp,fn,tp,tn,fpr,fnr,error_sum,error_weighted\n");
}

TEST_CASE("compare and sweep outputs", "[cli]") {
    const auto out = scratch() / "cmp";
    REQUIRE(cli("compare --scenario " + q(small_scenario()) + " --seed 5 --grid-points 7 --out " + q(out)).code == 0);
    const auto csv = slurp(out / "compare.csv");
    REQUIRE(std::count(csv.begin(), csv.end(), '\n') == 1 + 3 * 2 * 7);

    const auto sw = scratch() / "sw";
    const auto r = cli("sweep --scenario " + q(small_scenario()) + " --seed 5 --sweep window_l=1,3,5 --out " + q(sw));
    REQUIRE(r.code == 0);
    REQUIRE_THAT(slurp(sw / "sweep.csv"), ContainsSubstring("window_l,5,average,"));
}

TEST_CASE("usage and validation errors exit with 2", "[cli]") {
    const auto out = scratch() / "err";
    auto r = cli("simulate --scenario /nonexistent/scenario.ini --seed 1 --out " + q(out));
    REQUIRE(r.code == 2);
    REQUIRE_THAT(r.err, ContainsSubstring("/nonexistent/scenario.ini"));

    r = cli("simulate --scenario " + q(small_scenario()) + " --out " + q(out));
    REQUIRE(r.code == 2);

    r = cli("compare --scenario " + q(small_scenario()) + " --seed 1 --techniques bayes,kde --out " + q(out));
    REQUIRE(r.code == 2);
    REQUIRE_THAT(r.err, ContainsSubstring("kde"));

    r = cli("sweep --scenario " + q(small_scenario()) + " --seed 1 --sweep windows=1,2 --out " + q(out));
    REQUIRE(r.code == 2);

    const auto bad_cfg = scratch() / "bad.ini";
    std::ofstream(bad_cfg) << "delta = 0\n";
    r = cli("simulate --scenario " + q(small_scenario()) + " --seed 1 --config " + q(bad_cfg) + " --out " + q(out));
    REQUIRE(r.code == 2);
    REQUIRE_THAT(r.err, ContainsSubstring("delta"));

    const auto bad_trace = scratch() / "bad.csv";
    std::ofstream(bad_trace) << "time,link_id,rssi_dbm,delivered,true_state\n";
    r = cli("replay --trace " + q(bad_trace) + " --out " + q(out));
    REQUIRE(r.code == 2);
    REQUIRE_THAT(r.err, ContainsSubstring("time_s"));

    REQUIRE(cli("frobnicate").code == 2);
    REQUIRE(cli("").code == 2);
    REQUIRE(cli("--help").code == 0);
}
