#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "gridfreq/scenarios.hpp"
#include "gridfreq/simulation.hpp"

namespace gridfreq {

/// Command-line overrides; unset fields keep the case's values.
struct RunOptions {
    std::string scenario;  // empty = default scenario
    std::optional<double> h;
    std::optional<double> horizon;
    std::optional<double> kappa;
    std::optional<Mode> mode;
    std::optional<bool> thermal_limits;
    std::optional<double> k1;
    std::optional<double> k2;
    std::optional<std::uint64_t> seed;
    bool svg = false;
    std::filesystem::path out_dir = "out";
    bool write_files = true;
};

struct CheckResult {
    std::string name;
    bool pass = false;
    double value = 0.0;
    double threshold = 0.0;
};

struct RunReport {
    std::string command;
    std::string case_name;
    std::string scenario;
    nlohmann::ordered_json config;
    nlohmann::ordered_json metrics;
    std::vector<CheckResult> checks;
    double wall_seconds = 0.0;  // printed, never written to the JSON files
    std::vector<std::filesystem::path> files;

    bool all_pass() const;
    /// Deterministic document: command, case, scenario, config, metrics, checks.
    nlohmann::ordered_json to_json() const;
};

// Thresholds of the verify checks.
inline constexpr double kKktTolerance = 1e-5;
inline constexpr double kVaSlack = 1e-8;
inline constexpr double kVbRelativeSlack = 1e-7;
inline constexpr double kLemma2Tolerance = 1e-4;
inline constexpr double kBoxTolerance = 1e-6;
inline constexpr double kRateHorizon = 120.0;
inline constexpr double kFrequencyBand = 1e-3;

/// Case with the seed, kappa, mode and thermal-limit overrides applied.
/// A seed redraws the load coefficients of a seeded 39-bus style case.
Case apply_overrides(const Case& c, const RunOptions& opts);

/// Scenario selected by the options, with h, T, k1 and k2 applied.
Scenario selected_scenario(const Case& c, const RunOptions& opts);

/// Time after which the injection stays constant (last step or end of the
/// last sinusoid window).
double last_disturbance_time(const InjectionProfile& profile);

/// Integrates the case; writes <case>[_<scenario>].csv, _metrics.json and
/// with `svg` the omega/d/P/mu plots.
RunReport cmd_run(const Case& c, const RunOptions& opts);

/// Pure-optimization run (analysis stepsizes, kappa 0.5 unless overridden,
/// constant injection) to convergence plus a closed-loop run to steady
/// state, then KKT, Lyapunov, rate, equilibrium-angle and box checks.
RunReport cmd_verify(const Case& c, const RunOptions& opts);

/// Runs each controller on the same scenario and reports cost, chatter and
/// time-to-band.
RunReport cmd_compare(const Case& c, const RunOptions& opts,
                      const std::vector<ControlLaw>& controllers = {ControlLaw::Dppd, ControlLaw::Baseline});

/// Shortest round-trip decimal, independent of the locale.
std::string format_number(double value);

/// CSV header labels (1-based bus and line numbering).
std::vector<std::string> csv_columns(const PowerNetwork& net, bool thermal_limits);

/// RFC-4180 trajectory table, one row per sample.
void write_trajectory_csv(std::ostream& out, const PowerNetwork& net, const Trajectory& traj);

/// Minimal SVG polyline chart; one series per row of `series`.
std::string render_svg(const std::string& title, const std::string& y_label, const std::vector<double>& t,
                       const std::vector<std::vector<double>>& series, const std::vector<std::string>& labels);

/// 0 on success, 2 validation, 3 numeric blow-up, 4 verification failure.
int exit_code_for(const Error& e);
inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 2;
inline constexpr int kExitNumeric = 3;
inline constexpr int kExitVerification = 4;

}  // namespace gridfreq
