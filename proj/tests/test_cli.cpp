#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sys/wait.h>
#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "gridfreq/cli.hpp"
#include "gridfreq/error.hpp"
#include "support.hpp"

using namespace gridfreq;
using namespace testing;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& tag) {
    const auto dir = fs::temp_directory_path() / ("gridfreq_cli_" + std::to_string(::getpid()) + "_" + tag);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::stringstream text;
    text << in.rdbuf();
    return text.str();
}

int run_tool(const std::string& args) {
    const std::string command = std::string(GRIDFREQ_CLI_PATH) + " " + args + " > /dev/null 2>&1";
    const int status = std::system(command.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

RunOptions quick(const fs::path& out, double horizon) {
    RunOptions opts;
    opts.out_dir = out;
    opts.horizon = horizon;
    return opts;
}

const CheckResult& check_named(const RunReport& r, const std::string& name) {
    for (const auto& c : r.checks) {
        if (c.name == name) return c;
    }
    FAIL("missing check " << name);
    return r.checks.front();
}

}  // namespace

TEST_CASE("csv layout") {
    const auto c = load_case("two_bus_analytic");
    const auto cols = csv_columns(*c.net, true);
    const std::size_t n = 2, l = 1;
    CHECK(cols.size() == 1 + 4 * n + 3 * l + 1);
    CHECK(cols.front() == "t");
    CHECK(cols.back() == "g");
    CHECK(std::find(cols.begin(), cols.end(), "P_1_2") != cols.end());
    CHECK(csv_columns(*c.net, false).size() == 1 + 4 * n + l + 1);

    const auto big = load_case("ieee39_approx");
    CHECK(csv_columns(*big.net, true).size() == 1 + 4 * 39 + 3 * 46 + 1);
}

TEST_CASE("run writes an RFC-4180 table and metrics") {
    const auto dir = scratch("run");
    const auto c = load_case("two_bus_analytic");
    RunOptions opts = quick(dir, 2.0);
    opts.svg = true;
    const auto report = cmd_run(c, opts);
    const std::string csv = slurp(dir / "two_bus_analytic.csv");
    const auto first_break = csv.find("\r\n");
    REQUIRE(first_break != std::string::npos);
    const std::string header = csv.substr(0, first_break);
    CHECK(header.find("P_1_2") != std::string::npos);
    CHECK(std::count(header.begin(), header.end(), ',') + 1 == 13);
    // rows at t = 0, 0.01, ..., 2
    CHECK(static_cast<std::size_t>(std::count(csv.begin(), csv.end(), '\n')) == 1 + 201);
    CHECK(csv.find('\n', 0) == first_break + 1);

    const auto metrics = nlohmann::json::parse(slurp(dir / "two_bus_analytic_metrics.json"));
    CHECK(metrics["command"] == "run");
    CHECK(metrics["metrics"].contains("kkt_total"));
    CHECK(fs::exists(dir / "two_bus_analytic_omega.svg"));
    CHECK(slurp(dir / "two_bus_analytic_d.svg").find("<polyline") != std::string::npos);
    CHECK(report.files.size() == 6);
    fs::remove_all(dir);
}

TEST_CASE("identical invocations produce identical files") {
    const auto a = scratch("det_a");
    const auto b = scratch("det_b");
    const auto c = load_case("triangle");
    RunOptions opts = quick(a, 3.0);
    opts.k2 = 0.1;
    cmd_run(c, opts);
    opts.out_dir = b;
    cmd_run(c, opts);
    CHECK(slurp(a / "triangle.csv") == slurp(b / "triangle.csv"));
    CHECK(slurp(a / "triangle_metrics.json") == slurp(b / "triangle_metrics.json"));
    fs::remove_all(a);
    fs::remove_all(b);
}

TEST_CASE("number formatting is locale independent and round-trips") {
    CHECK(format_number(0.1) == "0.1");
    CHECK(format_number(-2.5) == "-2.5");
    CHECK(format_number(1e-20) == "1e-20");
    const double third = 1.0 / 3.0;
    CHECK(std::stod(format_number(third)) == third);
}

TEST_CASE("validation of overrides") {
    const auto c = load_case("two_bus_analytic");
    RunOptions opts;
    opts.h = -0.1;
    try {
        selected_scenario(c, opts);
        FAIL("expected a validation error");
    } catch (const Error& e) {
        CHECK(std::string(e.what()).find("h must be positive") != std::string::npos);
        CHECK(exit_code_for(e) == kExitValidation);
    }
    opts = {};
    opts.kappa = 1.5;
    CHECK_THROWS_AS(apply_overrides(c, opts), Error);
    opts = {};
    opts.seed = 3;
    CHECK_THROWS_AS(apply_overrides(c, opts), Error);  // the two-bus case has no seeded loads
}

TEST_CASE("exit code contract") {
    CHECK(exit_code_for(Error(ErrorCode::SchemaError, "")) == 2);
    CHECK(exit_code_for(Error(ErrorCode::DisconnectedGraph, "")) == 2);
    CHECK(exit_code_for(Error(ErrorCode::NonFiniteState, "")) == 3);
    CHECK(exit_code_for(Error(ErrorCode::NotConverged, "")) == 4);
    CHECK(exit_code_for(Error(ErrorCode::BadEquilibrium, "")) == 4);
}

TEST_CASE("verify on the analytic two-bus case") {
    const auto dir = scratch("verify");
    const auto report = cmd_verify(load_case("two_bus_analytic"), quick(dir, 20000.0));
    CHECK(report.all_pass());
    CHECK(check_named(report, "kkt").value < 1e-5);
    CHECK(fs::exists(dir / "two_bus_analytic_verify.json"));
    fs::remove_all(dir);
}

TEST_CASE("verify reports the binding line of the four-bus case") {
    RunOptions opts;
    opts.write_files = false;
    const auto report = cmd_verify(load_case("four_bus_line_limited"), opts);
    CHECK(report.all_pass());
    CHECK(report.metrics["active_line_limits"].get<int>() >= 1);
    const auto& kkt = report.metrics["kkt_breakdown"];
    CHECK(kkt["comp_slack_minus"].get<double>() < 1e-5);
    CHECK(kkt["comp_slack_plus"].get<double>() < 1e-5);
}

TEST_CASE("compare on smooth and kinked costs") {
    RunOptions opts;
    opts.write_files = false;
    {
        const auto r = cmd_compare(load_case("two_bus_analytic"), opts);
        const auto& runs = r.metrics["controllers"];
        for (const auto& [bus, count] : runs[0]["chatter"].items()) {
            const double ours = count.get<double>();
            const double theirs = runs[1]["chatter"][bus].get<double>();
            CHECK(theirs < 2.0 * std::max(ours, 1.0));
        }
    }
    {
        const auto r = cmd_compare(load_case("two_bus_l1"), opts);
        const auto& runs = r.metrics["controllers"];
        CHECK(runs[1]["chatter"]["bus_1"].get<int>() > runs[0]["chatter"]["bus_1"].get<int>());
    }
}

TEST_CASE("the same controller listed twice gives identical reports") {
    const auto dir = scratch("twice");
    const auto r = cmd_compare(load_case("two_bus_l1"), quick(dir, 5.0), {ControlLaw::Dppd, ControlLaw::Dppd});
    const auto& runs = r.metrics["controllers"];
    CHECK(runs[0].dump() == runs[1].dump());
    CHECK(r.metrics["cost_gap"].get<double>() == 0.0);
    CHECK(slurp(dir / "two_bus_l1_dppd.csv") == slurp(dir / "two_bus_l1_dppd_2.csv"));
    fs::remove_all(dir);
}

TEST_CASE("39-bus trip scenario returns toward nominal") {
    RunOptions opts;
    opts.write_files = false;
    opts.scenario = "step37_39";
    const auto r = cmd_run(load_case("ieee39_approx"), opts);
    CHECK(r.metrics["final_omega_inf"].get<double>() < 1e-3);
    CHECK(r.metrics["max_omega_inf"].get<double>() > 10.0 * r.metrics["final_omega_inf"].get<double>());
}

TEST_CASE("command-line tool exit codes and output directory") {
    const auto dir = scratch("tool");
    CHECK(run_tool("run two_bus_analytic --h -0.1 --out " + dir.string()) == 2);
    CHECK(run_tool("run two_bus_analytic --mode sideways") == 2);
    CHECK(run_tool("frobnicate") == 2);

    // a damping of zero is rejected when the case is loaded
    auto doc = nlohmann::json::parse(slurp(fs::path(GRIDFREQ_CASE_DIR) / "two_bus_analytic.json"));
    doc["buses"][0]["D"] = 0.0;
    const auto broken = dir / "broken.json";
    std::ofstream(broken) << doc.dump();
    CHECK(run_tool("run " + broken.string() + " --out " + dir.string()) == 2);

    const auto env_dir = dir / "from_env";
    CHECK(run_tool("run two_bus_analytic --T 1 --out " + (dir / "ignored").string() + " ") == 0);
    const std::string with_env = "env GRIDFREQ_OUT=" + env_dir.string() + " " + std::string(GRIDFREQ_CLI_PATH) +
                                 " run two_bus_analytic --T 1 --out " + (dir / "ignored2").string() + " > /dev/null";
    CHECK(WEXITSTATUS(std::system(with_env.c_str())) == 0);
    CHECK(fs::exists(env_dir / "two_bus_analytic.csv"));
    CHECK_FALSE(fs::exists(dir / "ignored2"));
    fs::remove_all(dir);
}
