// gridfreq run|verify|compare <case-or-path> [options]
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <iostream>
#include <mutex>
#include <thread>

#include <CLI11.hpp>

#include "gridfreq/cli.hpp"
#include "gridfreq/error.hpp"

namespace {

using gridfreq::RunReport;

void print_report(const RunReport& r) {
    std::cout << r.command << " " << r.case_name;
    if (!r.scenario.empty()) std::cout << " [" << r.scenario << "]";
    std::printf("  (%.2f s wall)\n", r.wall_seconds);
    const auto& m = r.metrics;
    for (const char* key : {"kkt_total", "final_omega_inf", "max_omega_inf", "final_cost", "va_max_increase",
                            "vb_max_increase", "rate_bound_t0", "rate_bound_final", "lemma2_angle_residual",
                            "lemma2_flow_residual", "max_box_violation", "active_line_limits", "cost_gap"}) {
        if (m.contains(key)) std::cout << "  " << key << " = " << m[key].dump() << "\n";
    }
    if (m.contains("controllers")) {
        for (const auto& run : m["controllers"]) {
            std::cout << "  " << run["controller"].get<std::string>() << ": cost " << run["final_cost"].dump()
                      << ", time_to_band " << run["time_to_band"].dump() << ", chatter " << run["chatter"].dump()
                      << "\n";
        }
    }
    for (const auto& c : r.checks) {
        std::printf("  %-16s %s  value %-12.4g threshold %g\n", c.name.c_str(), c.pass ? "PASS" : "FAIL", c.value,
                    c.threshold);
    }
    for (const auto& f : r.files) std::cout << "  wrote " << f.string() << "\n";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Load-side frequency regulation with a proximal primal-dual controller"};
    app.require_subcommand(1, 1);

    std::string case_ref;
    std::string scenario;
    double h = 0, horizon = 0, kappa = 0, k1 = 0, k2 = 0;
    std::string mode;
    bool thermal = true;
    std::uint64_t seed = 0;
    bool svg = false;
    std::string out_dir = "out";
    unsigned jobs = 1;

    std::vector<CLI::App*> commands;
    for (const char* name : {"run", "verify", "compare"}) {
        auto* sub = app.add_subcommand(name);
        sub->set_help_flag("--help", "print help");  // -h would clash with --h
        sub->add_option("case", case_ref, "bundled case name or path to a case file (verify also accepts \"all\")")
            ->required();
        sub->add_option("--scenario", scenario, "named scenario of the case");
        sub->add_option("--h", h, "integration step [s]");
        sub->add_option("--T", horizon, "horizon [s]");
        sub->add_option("--kappa", kappa, "prox parameter in (0, 1)");
        sub->add_option("--mode", mode, "closed_loop or pure_opt")
            ->check(CLI::IsMember({"closed_loop", "pure_opt"}));
        sub->add_option("--thermal-limits", thermal, "enforce line limits (true/false)");
        sub->add_option("--k1", k1, "damping scale");
        sub->add_option("--k2", k2, "frequency measurement noise amplitude");
        sub->add_option("--seed", seed, "redraw seeded load coefficients");
        sub->add_flag("--svg", svg, "write SVG plots");
        sub->add_option("--out", out_dir, "output directory (GRIDFREQ_OUT overrides)");
        sub->add_option("--jobs", jobs, "parallel cases for verify all")->check(CLI::PositiveNumber);
        commands.push_back(sub);
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? gridfreq::kExitOk : gridfreq::kExitValidation;
    }

    // options are re-read from whichever subcommand ran
    CLI::App* used = nullptr;
    for (auto* sub : commands) {
        if (sub->parsed()) used = sub;
    }
    auto given = [&](const char* flag) { return used->count(flag) > 0; };

    gridfreq::RunOptions opts;
    opts.scenario = scenario;
    if (given("--h")) opts.h = h;
    if (given("--T")) opts.horizon = horizon;
    if (given("--kappa")) opts.kappa = kappa;
    if (given("--mode")) opts.mode = mode == "pure_opt" ? gridfreq::Mode::PureOpt : gridfreq::Mode::ClosedLoop;
    if (given("--thermal-limits")) opts.thermal_limits = thermal;
    if (given("--k1")) opts.k1 = k1;
    if (given("--k2")) opts.k2 = k2;
    if (given("--seed")) opts.seed = seed;
    opts.svg = svg;
    opts.out_dir = out_dir;
    if (const char* env = std::getenv("GRIDFREQ_OUT"); env != nullptr && *env != '\0') opts.out_dir = env;

    const std::string command = used->get_name();
    try {
        std::vector<std::string> cases{case_ref};
        if (command == "verify" && case_ref == "all") cases = gridfreq::bundled_case_names();

        std::vector<RunReport> reports(cases.size());
        std::vector<std::exception_ptr> failures(cases.size());
        auto work = [&](std::size_t k) {
            try {
                const auto c = gridfreq::load_case(cases[k]);
                if (command == "run") reports[k] = gridfreq::cmd_run(c, opts);
                else if (command == "verify") reports[k] = gridfreq::cmd_verify(c, opts);
                else reports[k] = gridfreq::cmd_compare(c, opts);
            } catch (...) {
                failures[k] = std::current_exception();
            }
        };
        if (jobs <= 1 || cases.size() <= 1) {
            for (std::size_t k = 0; k < cases.size(); ++k) work(k);
        } else {
            std::mutex next_lock;
            std::size_t next = 0;
            std::vector<std::thread> pool;
            for (unsigned j = 0; j < std::min<std::size_t>(jobs, cases.size()); ++j) {
                pool.emplace_back([&] {
                    for (;;) {
                        std::size_t k;
                        {
                            std::lock_guard<std::mutex> g(next_lock);
                            if (next >= cases.size()) return;
                            k = next++;
                        }
                        work(k);
                    }
                });
            }
            for (auto& th : pool) th.join();
        }

        int code = gridfreq::kExitOk;
        for (std::size_t k = 0; k < cases.size(); ++k) {
            if (failures[k]) std::rethrow_exception(failures[k]);
            print_report(reports[k]);
            if (!reports[k].all_pass()) code = gridfreq::kExitVerification;
        }
        return code;
    } catch (const gridfreq::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return gridfreq::exit_code_for(e);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return gridfreq::kExitValidation;
    }
}
