#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "gridfreq/controller.hpp"
#include "gridfreq/costs.hpp"
#include "gridfreq/network.hpp"
#include "gridfreq/simulation.hpp"

namespace gridfreq {

/// Flat starts every state at zero (unless given); steady starts the plant
/// and controller at rest for the base injection (before any step event).
enum class StartMode { Flat, Steady };

/// Injection profile, horizon and disturbances of one experiment.
struct Scenario {
    std::string name;
    InjectionProfile injection;
    double horizon = 60.0;
    double sample_every = 0.01;
    double h = 1e-3;
    Uncertainty uncertainty;
    /// Per-bus initial values; `omega` is given for every bus and reduced to
    /// the generator buses for closed-loop runs.
    InitialState initial;
    StartMode start = StartMode::Flat;
};

/// Strictly feasible point stored with a case: interior loads and angles
/// whose flows keep strict slack to every line limit.
struct SlaterPoint {
    Vector d;
    Vector theta;
};

struct Case {
    std::string name;
    std::string description;
    std::shared_ptr<const PowerNetwork> net;
    CostModel cost;  // after strong-convexity scaling
    bool auto_scaled = false;
    Vector base_injection;
    Scenario scenario;                          // default scenario
    std::map<std::string, Scenario> scenarios;  // named alternatives
    DppdConfig controller;
    bool baseline = false;
    std::optional<SlaterPoint> slater;
    std::optional<std::uint64_t> seed;
    double nominal_hz = 60.0;
    bool per_unit_frequency = true;

    /// Default scenario for an empty name, otherwise a named one.
    const Scenario& scenario_named(const std::string& name) const;
};

/// Piecewise-constant profile from step events. Throws UnsortedEvents.
InjectionProfile step_change_profile(const Vector& base, const std::vector<StepEvent>& events);

/// Loss of the units at buses 37 and 39 (1-based) at t = 5 s and their
/// reconnection at t = 65 s.
std::vector<StepEvent> generator_trip_37_39(const Vector& base);

struct TimeWindow {
    double start = 5.0;
    double end = 65.0;
};

/// Multiplies the base injection of `buses` by 1 + amplitude sin(2 pi t / period)
/// inside the window. Throws EmptyBusSet.
InjectionProfile sinusoidal_profile(const Vector& base, const std::vector<std::size_t>& buses,
                                    TimeWindow window = {}, double amplitude = 0.4, double period = 6.0);

/// omega + k2 sin(2 pi t) on controllable buses; others unchanged.
Vector apply_measurement_noise(const Vector& omega, double t, double k2, const CostModel& cost);

/// Quadratic and l1 coefficients of the 39-bus controllable loads (1-based
/// buses 12..20) drawn from `seed`: a in [0.5, 2.5], b in [1, 1.5] on buses
/// 12..17 and a in [2.5, 3], b in [1.5, 2] on buses 18..20.
struct LoadDraw {
    std::size_t bus = 0;  // 1-based
    double a = 0.0;
    double b = 0.0;
};
std::vector<LoadDraw> ieee39_load_draws(std::uint64_t seed);

/// Parses a case document. Throws SchemaError (with a JSON-pointer path) on
/// malformed input and ValidationError/network errors on invalid values.
Case parse_case(const std::string& json_text, const std::string& fallback_name = "case");

/// Loads a case from a path, or by bundled name from `search_dirs`, then
/// the GRIDFREQ_CASES directory, then the source-tree cases directory.
Case load_case(const std::string& path_or_name, const std::vector<std::filesystem::path>& search_dirs = {});

/// Names of the bundled cases found in the default search directories.
std::vector<std::string> bundled_case_names();

/// Simulation setup for `scenario` of `c`, using the case's controller
/// configuration. The case must outlive the setup.
SimulationSetup make_setup(const Case& c, const Scenario& scenario);

}  // namespace gridfreq
