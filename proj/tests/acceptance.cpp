// Acceptance run: one PASS/FAIL line per criterion.
//   acceptance [--only 1,2] [--skip 9]
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "gridfreq/cli.hpp"
#include "gridfreq/error.hpp"
#include "gridfreq/oracle.hpp"
#include "gridfreq/scenarios.hpp"
#include "gridfreq/simulation.hpp"

using namespace gridfreq;

namespace {

const std::vector<std::string> kSmallCases = {"two_bus_analytic", "two_bus_l1", "triangle", "four_bus_line_limited",
                                              "generator_ring"};

struct Outcome {
    bool pass = false;
    double value = 0.0;
    double threshold = 0.0;
    std::string note;
};

double seconds_since(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

ReferenceOptimum read_fixture(const std::string& name) {
    std::ifstream in(std::string(GRIDFREQ_FIXTURE_DIR) + "/" + name + "_oracle.json");
    if (!in) throw Error(ErrorCode::ValidationError, "missing oracle fixture for " + name);
    std::stringstream text;
    text << in.rdbuf();
    return oracle_from_json(text.str());
}

const CheckResult& check_named(const RunReport& r, const std::string& name) {
    for (const auto& c : r.checks) {
        if (c.name == name) return c;
    }
    throw Error(ErrorCode::ValidationError, "verify report has no check " + name);
}

// verify reports, computed once per (case, thermal limits)
class VerifyCache {
public:
    const RunReport& get(const std::string& name, bool limits) {
        const auto key = std::make_pair(name, limits);
        auto it = reports_.find(key);
        if (it != reports_.end()) return it->second;
        RunOptions opts;
        opts.write_files = false;
        opts.thermal_limits = limits;
        return reports_.emplace(key, cmd_verify(load_case(name), opts)).first->second;
    }

private:
    std::map<std::pair<std::string, bool>, RunReport> reports_;
};

// worst value of one verify check over every case and the given limit settings
Outcome worst_check(VerifyCache& cache, const std::string& check, std::vector<bool> limit_settings) {
    Outcome out;
    out.pass = true;
    for (const auto& name : bundled_case_names()) {
        for (bool limits : limit_settings) {
            const auto& c = check_named(cache.get(name, limits), check);
            out.threshold = c.threshold;
            if (!c.pass) {
                out.pass = false;
                out.note += " " + name + (limits ? "" : "(no limits)");
            }
            out.value = std::max(out.value, c.value);
        }
    }
    return out;
}

Outcome oracle_agreement() {
    Outcome out;
    out.pass = true;
    out.threshold = 1e-4;
    double worst_omega = 0.0;
    double worst_wall = 0.0;
    for (const char* name : {"two_bus_analytic", "two_bus_l1"}) {
        const auto c = load_case(name);
        const auto fixture = read_fixture(name);
        SimulationSetup setup = make_setup(c, c.scenario);
        setup.horizon = 60.0;
        const auto start = std::chrono::steady_clock::now();
        const auto traj = simulate(setup);
        const double wall = seconds_since(start);
        const auto& fin = traj.final();
        const Vector d = traj.layout.bus_block(fin.x, traj.layout.d());
        const double d_err = (d - fixture.d_star).lpNorm<Eigen::Infinity>();
        const double w = fin.omega.lpNorm<Eigen::Infinity>();
        out.value = std::max(out.value, d_err);
        worst_omega = std::max(worst_omega, w);
        worst_wall = std::max(worst_wall, wall);
        if (!(d_err < 1e-4 && w < 1e-5 && wall < 5.0)) out.pass = false;
    }
    char buf[160];
    std::snprintf(buf, sizeof buf, " omega %.3g / 1e-05, wall %.2f s / 5 s", worst_omega, worst_wall);
    out.note = buf;
    return out;
}

Outcome box_invariance() {
    Outcome out;
    out.threshold = 1e-6;
    std::mt19937_64 rng(20261017);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    auto draw = [&](double lo, double hi) { return lo + (hi - lo) * unit(rng); };
    auto random_bus_vector = [&](std::size_t n, double spread) {
        Vector v(static_cast<Eigen::Index>(n));
        for (auto& x : v) x = draw(-spread, spread);
        return v;
    };

    const int per_case = 200;
    int runs = 0;
    for (const auto& name : kSmallCases) {
        const auto c = load_case(name);
        const std::size_t n = c.net->n_buses();
        for (int k = 0; k < per_case; ++k) {
            Scenario s = c.scenario;
            SimulationSetup setup = make_setup(c, s);
            setup.config.mode = k % 2 == 0 ? Mode::ClosedLoop : Mode::PureOpt;
            setup.h = 1e-3;
            setup.horizon = 2.0;
            setup.sample_every = 0.1;
            setup.initial = InitialState{};
            Vector d = Vector::Zero(static_cast<Eigen::Index>(n));
            for (std::size_t i = 0; i < n; ++i) {
                const auto& bus = c.cost.buses[i];
                if (bus.controllable) d[static_cast<Eigen::Index>(i)] = draw(bus.d_min, bus.d_max);
            }
            setup.initial.d = d;
            setup.initial.theta = random_bus_vector(n, 0.5);
            setup.initial.omega = random_bus_vector(n, 0.2);
            setup.initial.eta = random_bus_vector(n, 1.0);
            setup.initial.theta_hat = random_bus_vector(n, 0.5);
            setup.initial.mu = random_bus_vector(n, 1.0);
            setup.initial.line_flow = random_bus_vector(c.net->n_lines(), 0.5);
            const auto traj = simulate(setup);
            out.value = std::max(out.value, traj.max_box_violation);
            ++runs;
        }
    }
    out.pass = out.value < out.threshold;
    out.note = " over " + std::to_string(runs) + " runs";
    return out;
}

Outcome restoration_at_scale() {
    const auto c = load_case("ieee39_approx");
    RunOptions opts;
    opts.write_files = false;
    const auto controlled = cmd_run(c, opts);
    const auto open = cmd_compare(c, opts, {ControlLaw::None});
    const double ours = controlled.metrics["final_omega_inf"].get<double>();
    const double none = open.metrics["controllers"][0]["final_omega_inf"].get<double>();
    Outcome out;
    out.value = ours;
    out.threshold = 1e-3;
    out.pass = ours < 1e-3 && none > 5.0 * ours && controlled.wall_seconds < 60.0;
    char buf[160];
    std::snprintf(buf, sizeof buf, " uncontrolled %.3g (> 5x), wall %.1f s / 60 s", none, controlled.wall_seconds);
    out.note = buf;
    return out;
}

Outcome time_varying_containment() {
    RunOptions opts;
    opts.write_files = false;
    opts.scenario = "sinusoid";
    const auto r = cmd_compare(load_case("ieee39_approx"), opts, {ControlLaw::Dppd, ControlLaw::None});
    Outcome out;
    out.value = r.metrics["controllers"][0]["max_omega_inf"].get<double>();
    out.threshold = r.metrics["controllers"][1]["max_omega_inf"].get<double>();
    out.pass = out.value < out.threshold;
    return out;
}

Outcome chatter_comparison() {
    const std::string name = "two_bus_l1";
    const auto c = load_case(name);
    const auto fixture = read_fixture(name);
    // the bus whose optimum sits on its l1 kink
    std::optional<std::size_t> kink;
    for (std::size_t i = 0; i < c.cost.size(); ++i) {
        const auto& bus = c.cost.buses[i];
        if (bus.controllable && bus.b > 0.0 && std::abs(fixture.d_star[static_cast<Eigen::Index>(i)] + bus.c) < 1e-9) {
            kink = i;
        }
    }
    Outcome out;
    if (!kink) {
        out.note = " no bus at a kink";
        return out;
    }
    RunOptions opts;
    opts.write_files = false;
    const auto r = cmd_compare(c, opts);
    const std::string key = "bus_" + std::to_string(*kink + 1);
    const double ours = r.metrics["controllers"][0]["chatter"][key].get<double>();
    const double theirs = r.metrics["controllers"][1]["chatter"][key].get<double>();
    out.value = theirs;
    out.threshold = 10.0 * std::max(ours, 1.0);
    out.pass = theirs >= out.threshold;
    char buf[96];
    std::snprintf(buf, sizeof buf, " (%s, dppd %g)", key.c_str(), ours);
    out.note = buf;
    return out;
}

Outcome swing_mimicry() {
    const auto c = load_case("generator_ring");
    SimulationSetup closed = make_setup(c, c.scenario);
    closed.config.mode = Mode::ClosedLoop;
    closed.initial = InitialState{};
    closed.horizon = 10.0;
    closed.sample_every = 0.01;
    SimulationSetup pure = closed;
    pure.config.mode = Mode::PureOpt;
    pure.config.rho.physical_network_rates = true;

    const auto a = simulate(closed);
    const auto b = simulate(pure);
    double omega_gap = 0.0;
    double flow_gap = 0.0;
    const std::size_t count = std::min(a.samples.size(), b.samples.size());
    for (std::size_t k = 0; k < count; ++k) {
        const auto& sa = a.samples[k];
        const auto& sb = b.samples[k];
        omega_gap = std::max(omega_gap, (sa.omega - sb.omega).lpNorm<Eigen::Infinity>());
        const Vector pa = a.layout.line_block(sa.x, a.layout.flow());
        const Vector pb = b.layout.line_block(sb.x, b.layout.flow());
        flow_gap = std::max(flow_gap, (pa - pb).lpNorm<Eigen::Infinity>());
    }
    Outcome out;
    out.value = std::max(omega_gap, flow_gap);
    out.threshold = 1e-6;
    out.pass = out.value < out.threshold && count == a.samples.size() && count == b.samples.size();
    char buf[128];
    std::snprintf(buf, sizeof buf, " (omega %.3g, P %.3g)", omega_gap, flow_gap);
    out.note = buf;
    return out;
}

std::set<int> parse_list(const std::string& text) {
    std::set<int> out;
    std::stringstream in(text);
    std::string item;
    while (std::getline(in, item, ',')) {
        if (!item.empty()) out.insert(std::stoi(item));
    }
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"acceptance criteria"};
    std::string only_text, skip_text;
    app.add_option("--only", only_text, "comma-separated criteria to run");
    app.add_option("--skip", skip_text, "comma-separated criteria to leave out");
    CLI11_PARSE(app, argc, argv);
    const auto only = parse_list(only_text);
    const auto skip = parse_list(skip_text);

    VerifyCache cache;
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
        {"oracle_agreement", oracle_agreement},
        {"kkt_self_consistency", [&] { return worst_check(cache, "kkt", {true}); }},
        {"box_invariance", box_invariance},
        {"lyapunov_monotone",
         [&] {
             auto va = worst_check(cache, "va_monotone", {true, false});
             auto vb = worst_check(cache, "vb_monotone", {true, false});
             char buf[96];
             std::snprintf(buf, sizeof buf, " (V_a %.3g / %g)", va.value, va.threshold);
             vb.pass = vb.pass && va.pass;
             vb.note = buf + va.note + vb.note;
             return vb;
         }},
        {"rate_bound", [&] { return worst_check(cache, "rate_bound", {true, false}); }},
        {"restoration_at_scale", restoration_at_scale},
        {"time_varying_containment", time_varying_containment},
        {"chatter_comparison", chatter_comparison},
        {"swing_mimicry", swing_mimicry},
        {"equilibrium_residuals", [&] { return worst_check(cache, "lemma2", {true}); }},
    };

    bool all = true;
    for (std::size_t k = 0; k < criteria.size(); ++k) {
        const int id = static_cast<int>(k + 1);
        if (!only.empty() && !only.count(id)) continue;
        if (skip.count(id)) continue;
        const auto& [name, run] = criteria[k];
        Outcome out;
        const auto start = std::chrono::steady_clock::now();
        try {
            out = run();
        } catch (const std::exception& e) {
            out.note = std::string(" error: ") + e.what();
        }
        all = all && out.pass;
        std::printf("[%d] %s: %s %.6g / %.6g%s  [%.1f s]\n", id, name.c_str(), out.pass ? "PASS" : "FAIL", out.value,
                    out.threshold, out.note.c_str(), seconds_since(start));
        std::fflush(stdout);
    }
    return all ? 0 : 1;
}
