#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "gridfreq/controller.hpp"
#include "gridfreq/costs.hpp"
#include "gridfreq/dynamics.hpp"
#include "gridfreq/network.hpp"

namespace gridfreq {

enum class ControlLaw { Dppd, Baseline, None };

enum class DampingSide {
    Controller,  // controller assumes k1 D, plant keeps D
    Plant,       // plant runs with k1 D, controller keeps the nominal D
};

struct Uncertainty {
    double damping_scale = 1.0;  // k1
    DampingSide damping_side = DampingSide::Controller;
    double freq_noise = 0.0;  // k2, added as k2 sin(2 pi t) on controllable buses
};

/// Flat integration vector:
///   theta(n) | omega(m) | P(l) | eta(n) | d(n) | theta_hat(n) | mu(n) | nu-(l) | nu+(l)
/// where m = #generators in closed loop and m = n (the multiplier lambda)
/// in pure-optimization mode.
struct StateLayout {
    std::size_t n = 0;
    std::size_t l = 0;
    std::size_t m = 0;

    StateLayout() = default;
    StateLayout(const PowerNetwork& net, Mode mode);

    Eigen::Index size() const { return static_cast<Eigen::Index>(5 * n + m + 3 * l); }
    Eigen::Index theta() const { return 0; }
    Eigen::Index omega() const { return static_cast<Eigen::Index>(n); }
    Eigen::Index flow() const { return static_cast<Eigen::Index>(n + m); }
    Eigen::Index eta() const { return static_cast<Eigen::Index>(n + m + l); }
    Eigen::Index d() const { return eta() + static_cast<Eigen::Index>(n); }
    Eigen::Index theta_hat() const { return d() + static_cast<Eigen::Index>(n); }
    Eigen::Index mu() const { return theta_hat() + static_cast<Eigen::Index>(n); }
    Eigen::Index nu_minus() const { return mu() + static_cast<Eigen::Index>(n); }
    Eigen::Index nu_plus() const { return nu_minus() + static_cast<Eigen::Index>(l); }

    auto bus_block(const Vector& x, Eigen::Index offset) const {
        return x.segment(offset, static_cast<Eigen::Index>(n));
    }
    auto line_block(const Vector& x, Eigen::Index offset) const {
        return x.segment(offset, static_cast<Eigen::Index>(l));
    }
};

/// Initial values overriding the all-zero start. Empty vectors keep zeros.
struct InitialState {
    Vector theta;
    Vector omega;  // every bus, or only the generator buses for closed-loop runs
    Vector line_flow;
    Vector eta;
    Vector d;  // projected onto the load box before use
    Vector theta_hat;
    Vector mu;
};

struct SimulationSetup {
    const PowerNetwork* net = nullptr;
    CostModel cost;
    InjectionProfile injection;
    DppdConfig config;
    ControlLaw law = ControlLaw::Dppd;
    Uncertainty uncertainty;
    InitialState initial;
    double h = 1e-3;
    double horizon = 60.0;
    double sample_every = 0.01;
    /// When > 0, stop at the first sample with t >= stop_min_time whose g(t) falls below it.
    double stop_tolerance = 0.0;
    double stop_min_time = 1.0;
};

struct Sample {
    double t = 0.0;
    Vector x;           // flat state
    Vector rate;        // flat derivative at t
    Vector omega;       // frequency at every bus (plant) or lambda (pure opt)
    Vector omega_rate;  // its time derivative
    Vector p_in;
    double g = 0.0;     // sum of derivative norms
};

struct Trajectory {
    StateLayout layout;
    Mode mode = Mode::ClosedLoop;
    bool thermal_limits = true;
    std::vector<Sample> samples;
    double max_box_violation = 0.0;  // over every integration step, not only samples
    bool stopped_early = false;

    const Sample& final() const { return samples.back(); }
};

/// Dynamics of the full closed-loop or pure-optimization system.
class System {
public:
    explicit System(const SimulationSetup& setup);

    const StateLayout& layout() const noexcept { return layout_; }
    Vector initial_state() const;
    Vector rhs(double t, const Vector& x) const;

    /// Frequency (plant) or lambda (pure opt) at every bus.
    Vector bus_omega(double t, const Vector& x) const;
    Vector bus_omega_rate(double t, const Vector& x, const Vector& rate) const;
    Sample sample(double t, const Vector& x, const Vector& rate) const;
    ControllerState controller_state(const Vector& x) const;
    double box_violation(const Vector& x) const;

private:
    Vector measured_omega(double t, const Vector& omega) const;

    const SimulationSetup& setup_;
    const PowerNetwork& net_;
    StateLayout layout_;
    Vector plant_damping_;
    ControllerModel model_;
};

Trajectory simulate(const SimulationSetup& setup);

/// g(t): ||d'|| + ||eta'|| + ||theta_hat'|| + ||P'|| + ||mu'|| + ||omega'||, plus the
/// nu terms when thermal limits are enabled.
double derivative_norm_sum(const StateLayout& layout, const Vector& rate, const Vector& omega_rate,
                           bool thermal_limits);

}  // namespace gridfreq
