#include "gridfreq/cli.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <ostream>
#include <sstream>

#include "gridfreq/diagnostics.hpp"
#include "gridfreq/error.hpp"

namespace gridfreq {

using ojson = nlohmann::ordered_json;

namespace {

double seconds_since(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

ojson number_or_null(std::optional<double> v) {
    if (!v || !std::isfinite(*v)) return nullptr;
    return *v;
}

std::string line_label(const Line& line) { return std::to_string(line.from + 1) + "_" + std::to_string(line.to + 1); }

std::string mode_name(Mode mode) { return mode == Mode::PureOpt ? "pure_opt" : "closed_loop"; }

std::string law_name(ControlLaw law) {
    switch (law) {
        case ControlLaw::Dppd: return "dppd";
        case ControlLaw::Baseline: return "baseline";
        case ControlLaw::None: return "none";
    }
    return "none";
}

std::string file_stem(const Case& c, const std::string& scenario) {
    return scenario.empty() ? c.name : c.name + "_" + scenario;
}

ojson config_echo(const Case& c, const Scenario& s, const DppdConfig& cfg, ControlLaw law) {
    const auto& r = cfg.rho;
    ojson rho = {{"eta", r.eta},          {"d", r.d},
                 {"theta_hat", r.theta_hat}, {"P", r.flow},
                 {"lambda", r.lambda},    {"mu", r.mu},
                 {"nu_minus", r.nu_minus}, {"nu_plus", r.nu_plus},
                 {"physical", r.physical_network_rates}};
    ojson echo = {{"law", law_name(law)},
                  {"mode", mode_name(cfg.mode)},
                  {"kappa", cfg.kappa},
                  {"thermal_limits", cfg.thermal_limits},
                  {"rho", rho},
                  {"h", s.h},
                  {"T", s.horizon},
                  {"sample_every", s.sample_every},
                  {"k1", s.uncertainty.damping_scale},
                  {"k1_side", s.uncertainty.damping_side == DampingSide::Plant ? "plant" : "controller"},
                  {"k2", s.uncertainty.freq_noise},
                  {"cost_scale", c.cost.scale}};
    if (c.seed) echo["seed"] = *c.seed;
    else echo["seed"] = nullptr;
    return echo;
}

ojson kkt_json(const KktResidual& k) {
    return {{"stationarity_d", k.stationarity_d},     {"freq_lambda", k.freq_lambda},
            {"theta_stationarity", k.theta_stationarity}, {"lambda_consensus", k.lambda_consensus},
            {"balance_p", k.balance_p},               {"balance_theta", k.balance_theta},
            {"comp_slack_minus", k.comp_slack_minus}, {"comp_slack_plus", k.comp_slack_plus},
            {"total", k.total}};
}

std::optional<RateReport> rate_until(const Trajectory& traj, double horizon) {
    std::vector<double> t, g;
    for (const auto& s : traj.samples) {
        if (s.t > horizon + 1e-9) break;
        t.push_back(s.t);
        g.push_back(s.g);
    }
    try {
        return rate_report(t, g);
    } catch (const Error&) {
        return std::nullopt;
    }
}

std::vector<double> va_series(const Case& c, const Trajectory& traj) {
    std::vector<double> out;
    out.reserve(traj.samples.size());
    for (const auto& s : traj.samples) out.push_back(lyapunov_va(c.cost, traj.layout.bus_block(s.x, traj.layout.d())));
    return out;
}

// V_b around the final sample of a converged pure-optimization run.
std::optional<double> vb_increase(const Case& c, const DppdConfig& cfg, const Trajectory& traj) {
    if (traj.mode != Mode::PureOpt) return std::nullopt;
    const auto eq = point_from_sample(traj, traj.final());
    LyapunovOptions lo;
    lo.thermal_limits = traj.thermal_limits;
    std::vector<double> vb;
    vb.reserve(traj.samples.size());
    try {
        for (const auto& s : traj.samples) {
            vb.push_back(lyapunov_vb(*c.net, c.cost, cfg, point_from_sample(traj, s), eq, s.p_in, lo).total);
        }
    } catch (const Error& e) {
        if (e.code() == ErrorCode::BadEquilibrium) return std::nullopt;
        throw;
    }
    return max_increase(vb, 1.0);
}

std::size_t active_lines(const Trajectory& traj) {
    if (!traj.thermal_limits) return 0;
    const auto& L = traj.layout;
    const Vector& x = traj.final().x;
    std::size_t count = 0;
    for (std::size_t k = 0; k < L.l; ++k) {
        const auto i = static_cast<Eigen::Index>(k);
        if (x[L.nu_minus() + i] > 1e-6 || x[L.nu_plus() + i] > 1e-6) ++count;
    }
    return count;
}

std::optional<double> time_to_band(const Trajectory& traj, double band) {
    const auto& samples = traj.samples;
    for (std::size_t k = samples.size(); k-- > 0;) {
        if (samples[k].omega.lpNorm<Eigen::Infinity>() >= band) {
            if (k + 1 == samples.size()) return std::nullopt;
            return samples[k + 1].t;
        }
    }
    return samples.empty() ? std::nullopt : std::optional<double>(samples.front().t);
}

ojson chatter_json(const Case& c, const Trajectory& traj) {
    ojson out = ojson::object();
    for (std::size_t i = 0; i < c.cost.size(); ++i) {
        if (c.cost.controllable(i)) out["bus_" + std::to_string(i + 1)] = chatter_metric(traj, i);
    }
    return out;
}

double omega_peak(const Trajectory& traj) {
    double peak = 0.0;
    for (const auto& s : traj.samples) peak = std::max(peak, s.omega.lpNorm<Eigen::Infinity>());
    return peak;
}

ojson trajectory_metrics(const Case& c, const DppdConfig& cfg, const Trajectory& traj) {
    const auto& fin = traj.final();
    const auto point = point_from_sample(traj, fin);
    KktOptions ko;
    ko.thermal_limits = traj.thermal_limits;
    const auto kkt = kkt_residual(*c.net, c.cost, point, fin.p_in, ko);
    const auto rate = rate_until(traj, kRateHorizon);

    ojson m;
    m["t_final"] = fin.t;
    m["g_final"] = fin.g;
    m["kkt_total"] = kkt.total;
    m["kkt_breakdown"] = kkt_json(kkt);
    m["va_max_increase"] = max_increase(va_series(c, traj));
    m["vb_max_increase"] = number_or_null(fin.g < 1e-8 ? vb_increase(c, cfg, traj) : std::nullopt);
    m["rate_bound_t0"] = rate ? ojson(rate->bound_t0) : ojson(nullptr);
    m["rate_bound_final"] = rate ? ojson(rate->bound_final) : ojson(nullptr);
    m["rate_max_ratio"] = rate ? ojson(rate->max_ratio) : ojson(nullptr);
    if (traj.mode == Mode::ClosedLoop && fin.g < 1e-5) {
        const auto l2 = lemma2_check(*c.net, traj);
        m["lemma2_angle_residual"] = l2.angle_residual;
        m["lemma2_flow_residual"] = l2.flow_residual;
        m["lemma2_shift_spread"] = l2.shift_spread;
    } else {
        m["lemma2_angle_residual"] = nullptr;
        m["lemma2_flow_residual"] = nullptr;
        m["lemma2_shift_spread"] = nullptr;
    }
    m["chatter"] = chatter_json(c, traj);
    m["final_omega_inf"] = fin.omega.lpNorm<Eigen::Infinity>();
    m["max_omega_inf"] = omega_peak(traj);
    m["max_box_violation"] = traj.max_box_violation;
    m["final_cost"] = number_or_null(eval_total_cost(c.cost, point.d));
    m["active_line_limits"] = active_lines(traj);
    const Vector d = point.d;
    m["d_final"] = std::vector<double>(d.data(), d.data() + d.size());
    return m;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCode::ValidationError, "cannot write " + path.string());
    out << text;
}

std::vector<std::filesystem::path> write_run_files(const Case& c, const Trajectory& traj, const RunOptions& opts,
                                                   const std::string& stem) {
    std::vector<std::filesystem::path> files;
    std::filesystem::create_directories(opts.out_dir);
    const auto csv_path = opts.out_dir / (stem + ".csv");
    {
        std::ofstream out(csv_path, std::ios::binary);
        if (!out) throw Error(ErrorCode::ValidationError, "cannot write " + csv_path.string());
        write_trajectory_csv(out, *c.net, traj);
    }
    files.push_back(csv_path);
    if (!opts.svg) return files;

    const auto& L = traj.layout;
    std::vector<double> t;
    for (const auto& s : traj.samples) t.push_back(s.t);
    auto collect = [&](std::size_t count, auto value) {
        std::vector<std::vector<double>> rows(count);
        for (const auto& s : traj.samples) {
            for (std::size_t i = 0; i < count; ++i) rows[i].push_back(value(s, static_cast<Eigen::Index>(i)));
        }
        return rows;
    };
    std::vector<std::string> bus_labels, line_labels;
    for (std::size_t i = 0; i < L.n; ++i) bus_labels.push_back(std::to_string(i + 1));
    for (const auto& line : c.net->lines()) line_labels.push_back(line_label(line));

    const double hz = c.nominal_hz;
    const bool to_hz = c.per_unit_frequency;
    const auto omega = collect(L.n, [&](const Sample& s, Eigen::Index i) {
        return to_hz ? hz + hz * s.omega[i] : s.omega[i];
    });
    const auto d = collect(L.n, [&](const Sample& s, Eigen::Index i) { return s.x[L.d() + i]; });
    const auto flow = collect(L.l, [&](const Sample& s, Eigen::Index i) { return s.x[L.flow() + i]; });
    const auto mu = collect(L.n, [&](const Sample& s, Eigen::Index i) { return s.x[L.mu() + i]; });

    const std::vector<std::tuple<std::string, std::string, const std::vector<std::vector<double>>*,
                                 const std::vector<std::string>*>>
        plots{{"omega", to_hz ? "frequency [Hz]" : "omega [p.u.]", &omega, &bus_labels},
              {"d", "load adjustment d [p.u.]", &d, &bus_labels},
              {"P", "line flow P [p.u.]", &flow, &line_labels},
              {"mu", "mu", &mu, &bus_labels}};
    for (const auto& [name, label, rows, labels] : plots) {
        const auto path = opts.out_dir / (stem + "_" + name + ".svg");
        write_text(path, render_svg(c.name + " " + name, label, t, *rows, *labels));
        files.push_back(path);
    }
    return files;
}

std::string escape_xml(const std::string& s) {
    std::string out;
    for (char ch : s) {
        switch (ch) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out += ch;
        }
    }
    return out;
}

std::string fixed(double v, int digits) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, digits);
    return std::string(buf, res.ptr);
}

}  // namespace

bool RunReport::all_pass() const {
    return std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.pass; });
}

ojson RunReport::to_json() const {
    ojson doc;
    doc["command"] = command;
    doc["case"] = case_name;
    doc["scenario"] = scenario.empty() ? ojson(nullptr) : ojson(scenario);
    doc["config"] = config;
    doc["metrics"] = metrics;
    ojson list = ojson::array();
    for (const auto& c : checks) {
        list.push_back({{"name", c.name}, {"pass", c.pass}, {"value", number_or_null(c.value)},
                        {"threshold", c.threshold}});
    }
    doc["checks"] = list;
    doc["pass"] = all_pass();
    return doc;
}

Case apply_overrides(const Case& c, const RunOptions& opts) {
    Case out = c;
    if (opts.seed) {
        if (!c.seed) throw Error(ErrorCode::ValidationError, "--seed needs a case with seeded load coefficients");
        auto buses = c.cost.buses;
        for (const auto& draw : ieee39_load_draws(*opts.seed)) {
            const std::size_t i = draw.bus - 1;
            if (i >= buses.size() || !buses[i].controllable) {
                throw Error(ErrorCode::ValidationError,
                            "seeded coefficients target bus " + std::to_string(draw.bus) + ", which has no controllable load");
            }
            buses[i].a = draw.a;
            buses[i].b = draw.b;
        }
        const CostModel raw = make_cost_model(std::move(buses), c.auto_scaled ? 1.0 : c.cost.scale);
        out.cost = c.auto_scaled ? scale_for_strong_convexity(raw) : raw;
        out.seed = *opts.seed;
    }
    if (opts.kappa) out.controller.kappa = *opts.kappa;
    if (opts.mode) out.controller.mode = *opts.mode;
    if (opts.thermal_limits) out.controller.thermal_limits = *opts.thermal_limits;
    out.controller.validate();
    return out;
}

Scenario selected_scenario(const Case& c, const RunOptions& opts) {
    Scenario s = c.scenario_named(opts.scenario);
    if (opts.h) {
        if (!(*opts.h > 0.0)) throw Error(ErrorCode::ValidationError, "h must be positive");
        s.h = *opts.h;
        s.sample_every = std::max(s.sample_every, s.h);
    }
    if (opts.horizon) {
        if (!(*opts.horizon > 0.0)) throw Error(ErrorCode::ValidationError, "horizon T must be positive");
        s.horizon = *opts.horizon;
    }
    if (opts.k1) {
        if (!(*opts.k1 > 0.0)) throw Error(ErrorCode::ValidationError, "k1 must be > 0");
        s.uncertainty.damping_scale = *opts.k1;
    }
    if (opts.k2) {
        if (!(*opts.k2 >= 0.0)) throw Error(ErrorCode::ValidationError, "k2 must be >= 0");
        s.uncertainty.freq_noise = *opts.k2;
    }
    return s;
}

double last_disturbance_time(const InjectionProfile& profile) {
    double last = 0.0;
    for (const auto& ev : profile.events()) {
        if (const auto* step = std::get_if<StepEvent>(&ev)) last = std::max(last, step->time);
        else last = std::max(last, std::get<SinusoidEvent>(ev).end);
    }
    return last;
}

RunReport cmd_run(const Case& c, const RunOptions& opts) {
    const Case cc = apply_overrides(c, opts);
    const Scenario s = selected_scenario(cc, opts);
    const SimulationSetup setup = make_setup(cc, s);

    RunReport report;
    report.command = "run";
    report.case_name = cc.name;
    report.scenario = opts.scenario;
    report.config = config_echo(cc, s, setup.config, setup.law);

    const auto start = std::chrono::steady_clock::now();
    const Trajectory traj = simulate(setup);
    report.wall_seconds = seconds_since(start);
    report.metrics = trajectory_metrics(cc, setup.config, traj);

    if (opts.write_files) {
        const std::string stem = file_stem(cc, opts.scenario);
        report.files = write_run_files(cc, traj, opts, stem);
        const auto json_path = opts.out_dir / (stem + "_metrics.json");
        write_text(json_path, report.to_json().dump(2) + "\n");
        report.files.push_back(json_path);
    }
    return report;
}

RunReport cmd_verify(const Case& c, const RunOptions& opts) {
    const Case cc = apply_overrides(c, opts);
    const Scenario s = selected_scenario(cc, opts);

    // optimization flow for the final injection, from rest
    SimulationSetup pure = make_setup(cc, s);
    pure.config.rho = Stepsizes{};
    pure.config.kappa = opts.kappa.value_or(0.5);
    pure.config.mode = Mode::PureOpt;
    pure.injection = InjectionProfile(s.injection.at(s.horizon));
    pure.uncertainty = Uncertainty{};
    pure.initial = InitialState{};
    pure.h = opts.h.value_or(1e-3);
    pure.horizon = opts.horizon.value_or(20000.0);
    pure.sample_every = std::max(0.1, pure.h);
    pure.stop_tolerance = 1e-8;
    pure.stop_min_time = 1.0;

    SimulationSetup closed = make_setup(cc, s);
    closed.config.mode = Mode::ClosedLoop;
    closed.horizon = opts.horizon.value_or(20000.0);
    closed.sample_every = std::max(0.1, closed.h);
    closed.stop_tolerance = 1e-7;
    closed.stop_min_time = last_disturbance_time(s.injection) + 1.0;

    RunReport report;
    report.command = "verify";
    report.case_name = cc.name;
    report.scenario = opts.scenario;
    report.config = {{"pure_opt", config_echo(cc, s, pure.config, ControlLaw::Dppd)},
                     {"closed_loop", config_echo(cc, s, closed.config, ControlLaw::Dppd)}};
    report.config["pure_opt"]["h"] = pure.h;

    const auto start = std::chrono::steady_clock::now();
    const Trajectory pure_traj = simulate(pure);
    const Trajectory closed_traj = simulate(closed);
    report.wall_seconds = seconds_since(start);

    const auto& fin = pure_traj.final();
    const auto point = point_from_sample(pure_traj, fin);
    KktOptions ko;
    ko.thermal_limits = pure.config.thermal_limits;
    const auto kkt = kkt_residual(*cc.net, cc.cost, point, fin.p_in, ko);
    const double va_inc = std::max(max_increase(va_series(cc, pure_traj)), max_increase(va_series(cc, closed_traj)));
    const auto vb_inc = vb_increase(cc, pure.config, pure_traj);
    const auto rate = rate_until(pure_traj, kRateHorizon);

    std::optional<Lemma2Residual> l2;
    try {
        l2 = lemma2_check(*cc.net, closed_traj);
    } catch (const Error& e) {
        if (e.code() != ErrorCode::NotConverged) throw;
    }
    const double box = std::max(pure_traj.max_box_violation, closed_traj.max_box_violation);
    const double inf = std::numeric_limits<double>::infinity();

    ojson& m = report.metrics;
    m["pure_opt_t_final"] = fin.t;
    m["pure_opt_g_final"] = fin.g;
    m["closed_loop_t_final"] = closed_traj.final().t;
    m["closed_loop_g_final"] = closed_traj.final().g;
    m["kkt_total"] = kkt.total;
    m["kkt_breakdown"] = kkt_json(kkt);
    m["va_max_increase"] = va_inc;
    m["vb_max_increase"] = number_or_null(vb_inc);
    m["rate_bound_t0"] = rate ? ojson(rate->bound_t0) : ojson(nullptr);
    m["rate_bound_final"] = rate ? ojson(rate->bound_final) : ojson(nullptr);
    m["rate_max_ratio"] = rate ? ojson(rate->max_ratio) : ojson(nullptr);
    m["lemma2_angle_residual"] = l2 ? ojson(l2->angle_residual) : ojson(nullptr);
    m["lemma2_flow_residual"] = l2 ? ojson(l2->flow_residual) : ojson(nullptr);
    m["lemma2_shift_spread"] = l2 ? ojson(l2->shift_spread) : ojson(nullptr);
    m["chatter"] = chatter_json(cc, closed_traj);
    m["max_box_violation"] = box;
    m["active_line_limits"] = active_lines(pure_traj);
    m["final_cost"] = number_or_null(eval_total_cost(cc.cost, point.d));
    m["d_star"] = std::vector<double>(point.d.data(), point.d.data() + point.d.size());

    auto& checks = report.checks;
    checks.push_back({"kkt", kkt.total < kKktTolerance, kkt.total, kKktTolerance});
    checks.push_back({"va_monotone", va_inc <= kVaSlack, va_inc, kVaSlack});
    checks.push_back({"vb_monotone", vb_inc && *vb_inc <= kVbRelativeSlack, vb_inc.value_or(inf), kVbRelativeSlack});
    checks.push_back({"rate_bound", rate && rate->pass, rate ? rate->max_ratio : inf, 2.0});
    const double l2_worst = l2 ? std::max({l2->angle_residual, l2->flow_residual, l2->shift_spread}) : inf;
    checks.push_back({"lemma2", l2_worst < kLemma2Tolerance, l2_worst, kLemma2Tolerance});
    checks.push_back({"box_invariance", box < kBoxTolerance, box, kBoxTolerance});

    if (opts.write_files) {
        std::filesystem::create_directories(opts.out_dir);
        const auto path = opts.out_dir / (file_stem(cc, opts.scenario) + "_verify.json");
        write_text(path, report.to_json().dump(2) + "\n");
        report.files.push_back(path);
    }
    return report;
}

RunReport cmd_compare(const Case& c, const RunOptions& opts, const std::vector<ControlLaw>& controllers) {
    const Case cc = apply_overrides(c, opts);
    const Scenario s = selected_scenario(cc, opts);

    RunReport report;
    report.command = "compare";
    report.case_name = cc.name;
    report.scenario = opts.scenario;
    const std::string stem = file_stem(cc, opts.scenario);

    ojson runs = ojson::array();
    std::vector<double> costs;
    std::vector<std::string> used;
    const auto start = std::chrono::steady_clock::now();
    for (const auto law : controllers) {
        SimulationSetup setup = make_setup(cc, s);
        setup.law = law;
        if (report.config.is_null()) report.config = config_echo(cc, s, setup.config, law);
        const Trajectory traj = simulate(setup);
        const Vector d = traj.layout.bus_block(traj.final().x, traj.layout.d());
        const double cost = eval_total_cost(cc.cost, d);
        costs.push_back(cost);
        ojson run;
        run["controller"] = law_name(law);
        run["final_cost"] = number_or_null(cost);
        run["chatter"] = chatter_json(cc, traj);
        run["time_to_band"] = number_or_null(time_to_band(traj, kFrequencyBand));
        run["final_omega_inf"] = traj.final().omega.lpNorm<Eigen::Infinity>();
        run["max_omega_inf"] = omega_peak(traj);
        run["max_box_violation"] = traj.max_box_violation;
        run["d_final"] = std::vector<double>(d.data(), d.data() + d.size());
        runs.push_back(run);

        if (opts.write_files) {
            std::string name = law_name(law);
            const auto repeats = static_cast<std::size_t>(std::count(used.begin(), used.end(), name));
            used.push_back(name);
            if (repeats > 0) name += "_" + std::to_string(repeats + 1);
            auto files = write_run_files(cc, traj, opts, stem + "_" + name);
            report.files.insert(report.files.end(), files.begin(), files.end());
        }
    }
    report.wall_seconds = seconds_since(start);
    report.config.erase("law");
    report.metrics["controllers"] = runs;
    report.metrics["cost_gap"] = costs.size() >= 2 ? number_or_null(costs[1] - costs[0]) : ojson(nullptr);

    if (opts.write_files) {
        const auto path = opts.out_dir / (stem + "_compare.json");
        write_text(path, report.to_json().dump(2) + "\n");
        report.files.push_back(path);
    }
    return report;
}

std::string format_number(double value) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, value);
    return std::string(buf, res.ptr);
}

std::vector<std::string> csv_columns(const PowerNetwork& net, bool thermal_limits) {
    std::vector<std::string> cols{"t"};
    const auto n = net.n_buses();
    auto per_bus = [&](const std::string& prefix) {
        for (std::size_t i = 0; i < n; ++i) cols.push_back(prefix + std::to_string(i + 1));
    };
    auto per_line = [&](const std::string& prefix) {
        for (const auto& line : net.lines()) cols.push_back(prefix + line_label(line));
    };
    per_bus("omega_");
    per_bus("d_");
    per_line("P_");
    per_bus("theta_");
    per_bus("mu_");
    if (thermal_limits) {
        per_line("nu_minus_");
        per_line("nu_plus_");
    }
    cols.push_back("g");
    return cols;
}

void write_trajectory_csv(std::ostream& out, const PowerNetwork& net, const Trajectory& traj) {
    const auto cols = csv_columns(net, traj.thermal_limits);
    for (std::size_t k = 0; k < cols.size(); ++k) out << (k ? "," : "") << cols[k];
    out << "\r\n";
    const auto& L = traj.layout;
    const auto n = static_cast<Eigen::Index>(L.n);
    const auto l = static_cast<Eigen::Index>(L.l);
    std::string row;
    for (const auto& s : traj.samples) {
        row = format_number(s.t);
        auto put = [&row](double v) {
            row += ',';
            row += format_number(v);
        };
        for (Eigen::Index i = 0; i < n; ++i) put(s.omega[i]);
        for (Eigen::Index i = 0; i < n; ++i) put(s.x[L.d() + i]);
        for (Eigen::Index i = 0; i < l; ++i) put(s.x[L.flow() + i]);
        for (Eigen::Index i = 0; i < n; ++i) put(s.x[L.theta() + i]);
        for (Eigen::Index i = 0; i < n; ++i) put(s.x[L.mu() + i]);
        if (traj.thermal_limits) {
            for (Eigen::Index i = 0; i < l; ++i) put(s.x[L.nu_minus() + i]);
            for (Eigen::Index i = 0; i < l; ++i) put(s.x[L.nu_plus() + i]);
        }
        put(s.g);
        out << row << "\r\n";
    }
}

std::string render_svg(const std::string& title, const std::string& y_label, const std::vector<double>& t,
                       const std::vector<std::vector<double>>& series, const std::vector<std::string>& labels) {
    constexpr double width = 900, height = 420, left = 80, right = 150, top = 40, bottom = 50;
    const double plot_w = width - left - right;
    const double plot_h = height - top - bottom;
    double t_lo = t.empty() ? 0.0 : t.front();
    double t_hi = t.empty() ? 1.0 : t.back();
    if (!(t_hi > t_lo)) t_hi = t_lo + 1.0;
    double y_lo = std::numeric_limits<double>::infinity();
    double y_hi = -y_lo;
    for (const auto& row : series) {
        for (double v : row) {
            if (!std::isfinite(v)) continue;
            y_lo = std::min(y_lo, v);
            y_hi = std::max(y_hi, v);
        }
    }
    if (!std::isfinite(y_lo)) y_lo = 0.0, y_hi = 1.0;
    if (!(y_hi > y_lo)) {
        const double pad = std::max(1e-12, std::abs(y_lo) * 1e-6);
        y_lo -= pad;
        y_hi += pad;
    }
    auto px = [&](double v) { return left + (v - t_lo) / (t_hi - t_lo) * plot_w; };
    auto py = [&](double v) { return top + (y_hi - v) / (y_hi - y_lo) * plot_h; };

    static const char* palette[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
                                    "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};
    const std::size_t stride = std::max<std::size_t>(1, t.size() / 2000);

    std::ostringstream svg;
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
        << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    svg << "<text x=\"" << left << "\" y=\"24\" font-size=\"15\">" << escape_xml(title) << "</text>\n";
    svg << "<rect x=\"" << left << "\" y=\"" << top << "\" width=\"" << plot_w << "\" height=\"" << plot_h
        << "\" fill=\"none\" stroke=\"black\"/>\n";
    svg << "<text x=\"" << left << "\" y=\"" << top + plot_h + 18 << "\">" << fixed(t_lo, 6) << "</text>\n";
    svg << "<text x=\"" << left + plot_w << "\" y=\"" << top + plot_h + 18 << "\" text-anchor=\"end\">"
        << fixed(t_hi, 6) << "</text>\n";
    svg << "<text x=\"" << left + plot_w / 2 << "\" y=\"" << height - 12 << "\" text-anchor=\"middle\">t [s]</text>\n";
    svg << "<text x=\"" << left - 6 << "\" y=\"" << top + 4 << "\" text-anchor=\"end\">" << fixed(y_hi, 8)
        << "</text>\n";
    svg << "<text x=\"" << left - 6 << "\" y=\"" << top + plot_h << "\" text-anchor=\"end\">" << fixed(y_lo, 8)
        << "</text>\n";
    svg << "<text transform=\"translate(16," << top + plot_h / 2 << ") rotate(-90)\" text-anchor=\"middle\">"
        << escape_xml(y_label) << "</text>\n";

    for (std::size_t k = 0; k < series.size(); ++k) {
        const char* color = palette[k % 10];
        svg << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1\" points=\"";
        const auto& row = series[k];
        for (std::size_t j = 0; j < row.size() && j < t.size(); j += stride) {
            if (!std::isfinite(row[j])) continue;
            svg << fixed(px(t[j]), 6) << ',' << fixed(py(row[j]), 6) << ' ';
        }
        svg << "\"/>\n";
        if (k < 20 && k < labels.size()) {
            const double y = top + 14.0 * static_cast<double>(k) + 8.0;
            svg << "<line x1=\"" << left + plot_w + 10 << "\" y1=\"" << y << "\" x2=\"" << left + plot_w + 30
                << "\" y2=\"" << y << "\" stroke=\"" << color << "\"/>";
            svg << "<text x=\"" << left + plot_w + 34 << "\" y=\"" << y + 4 << "\">" << escape_xml(labels[k])
                << "</text>\n";
        }
    }
    svg << "</svg>\n";
    return svg.str();
}

int exit_code_for(const Error& e) {
    switch (e.category()) {
        case ErrorCategory::Validation: return kExitValidation;
        case ErrorCategory::Numeric: return kExitNumeric;
        case ErrorCategory::Verification: return kExitVerification;
    }
    return kExitValidation;
}

}  // namespace gridfreq
