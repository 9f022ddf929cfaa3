#include <optional>
#include <string>
#include <vector>

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "gridfreq/cli.hpp"
#include "gridfreq/costs.hpp"
#include "gridfreq/error.hpp"
#include "gridfreq/oracle.hpp"
#include "gridfreq/scenarios.hpp"
#include "gridfreq/simulation.hpp"

namespace py = pybind11;
using namespace gridfreq;

namespace {

py::object to_python(const RunReport& report) {
    return py::module_::import("json").attr("loads")(report.to_json().dump());
}

Mode parse_mode(const std::string& text) {
    if (text == "closed_loop") return Mode::ClosedLoop;
    if (text == "pure_opt") return Mode::PureOpt;
    throw Error(ErrorCode::ValidationError, "mode must be closed_loop or pure_opt, got " + text);
}

ControlLaw parse_law(const std::string& text) {
    if (text == "dppd") return ControlLaw::Dppd;
    if (text == "baseline") return ControlLaw::Baseline;
    if (text == "none") return ControlLaw::None;
    throw Error(ErrorCode::ValidationError, "controller must be dppd, baseline or none, got " + text);
}

RunOptions options(const std::string& scenario, std::optional<double> horizon, std::optional<double> h,
                   std::optional<std::string> mode, std::optional<bool> thermal_limits) {
    RunOptions opts;
    opts.write_files = false;
    opts.scenario = scenario;
    opts.horizon = horizon;
    opts.h = h;
    if (mode) opts.mode = parse_mode(*mode);
    opts.thermal_limits = thermal_limits;
    return opts;
}

// sample-by-column matrices of one trajectory
py::dict trajectory_arrays(const Trajectory& traj) {
    const auto& L = traj.layout;
    const auto rows = static_cast<Eigen::Index>(traj.samples.size());
    Eigen::VectorXd t(rows), g(rows);
    Eigen::MatrixXd omega(rows, static_cast<Eigen::Index>(L.n));
    Eigen::MatrixXd d(rows, static_cast<Eigen::Index>(L.n));
    Eigen::MatrixXd flow(rows, static_cast<Eigen::Index>(L.l));
    for (Eigen::Index k = 0; k < rows; ++k) {
        const auto& s = traj.samples[static_cast<std::size_t>(k)];
        t[k] = s.t;
        g[k] = s.g;
        omega.row(k) = s.omega.transpose();
        d.row(k) = L.bus_block(s.x, L.d()).transpose();
        flow.row(k) = L.line_block(s.x, L.flow()).transpose();
    }
    py::dict out;
    out["t"] = t;
    out["omega"] = omega;
    out["d"] = d;
    out["P"] = flow;
    out["g"] = g;
    out["max_box_violation"] = traj.max_box_violation;
    return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Frequency regulation with proximal primal-dual load control";
    py::register_exception<Error>(m, "GridfreqError", PyExc_ValueError);

    m.def("bundled_cases", &bundled_case_names);

    m.def(
        "run",
        [](const std::string& name, const std::string& scenario, std::optional<double> T, std::optional<double> h,
           std::optional<std::string> mode, std::optional<bool> thermal_limits) {
            return to_python(cmd_run(load_case(name), options(scenario, T, h, mode, thermal_limits)));
        },
        py::arg("case"), py::arg("scenario") = "", py::arg("T") = py::none(), py::arg("h") = py::none(),
        py::arg("mode") = py::none(), py::arg("thermal_limits") = py::none());

    m.def(
        "verify",
        [](const std::string& name, std::optional<bool> thermal_limits) {
            return to_python(cmd_verify(load_case(name), options("", std::nullopt, std::nullopt, std::nullopt,
                                                                 thermal_limits)));
        },
        py::arg("case"), py::arg("thermal_limits") = py::none());

    m.def(
        "compare",
        [](const std::string& name, const std::string& scenario, std::optional<double> T,
           const std::vector<std::string>& controllers) {
            std::vector<ControlLaw> laws;
            for (const auto& c : controllers) laws.push_back(parse_law(c));
            return to_python(cmd_compare(load_case(name), options(scenario, T, std::nullopt, std::nullopt, std::nullopt),
                                         laws));
        },
        py::arg("case"), py::arg("scenario") = "", py::arg("T") = py::none(),
        py::arg("controllers") = std::vector<std::string>{"dppd", "baseline"});

    m.def(
        "simulate",
        [](const std::string& name, const std::string& scenario, std::optional<double> T, const std::string& mode,
           const std::string& controller) {
            const Case c = load_case(name);
            Scenario s = c.scenario_named(scenario);
            if (T) s.horizon = *T;
            SimulationSetup setup = make_setup(c, s);
            setup.config.mode = parse_mode(mode);
            setup.law = parse_law(controller);
            Trajectory traj;
            {
                py::gil_scoped_release release;
                traj = simulate(setup);
            }
            return trajectory_arrays(traj);
        },
        py::arg("case"), py::arg("scenario") = "", py::arg("T") = py::none(), py::arg("mode") = "closed_loop",
        py::arg("controller") = "dppd");

    m.def(
        "two_bus_optimum",
        [](const std::string& name) {
            const Case c = load_case(name);
            const auto opt = two_bus_analytic_optimum(*c.net, c.cost, c.scenario.injection.at(c.scenario.horizon));
            return Eigen::VectorXd(opt.d_star);
        },
        py::arg("case"));

    m.def("soft_threshold", &soft_threshold, py::arg("z"), py::arg("tau"));
}
