#pragma once

#include <utility>

#include "gridfreq/costs.hpp"
#include "gridfreq/network.hpp"

namespace gridfreq {

enum class Mode { ClosedLoop, PureOpt };

/// Per-family stepsizes rho. Defaults are the analysis values: 1 for the
/// eta, d, theta_hat and P flows, 1/2 for the multiplier flows.
struct Stepsizes {
    double eta = 1.0;
    double d = 1.0;
    double theta_hat = 1.0;
    double flow = 1.0;
    double lambda = 0.5;
    double mu = 0.5;
    double nu_minus = 0.5;
    double nu_plus = 0.5;
    /// Use rho_P = B_ij per line and rho_lambda = 1/M_i on generator buses,
    /// which makes the pure-optimization flow mimic the swing dynamics.
    bool physical_network_rates = false;
};

struct DppdConfig {
    double kappa = 0.5;
    Stepsizes rho;
    Mode mode = Mode::ClosedLoop;
    bool thermal_limits = true;

    /// Throws ValidationError unless kappa is in (0, 1) and every rho > 0.
    void validate() const;
};

/// Controller state. `lambda` and `line_flow` are only present (non-empty)
/// in pure-optimization mode, where the controller integrates them itself.
struct ControllerState {
    Vector eta;
    Vector d;
    Vector theta_hat;
    Vector mu;
    Vector nu_minus;
    Vector nu_plus;
    Vector lambda;
    Vector line_flow;

    static ControllerState zeros(const PowerNetwork& net, Mode mode);
};

/// What the controller knows about the system. `damping` is the D the
/// controller assumes, which may differ from the plant's.
struct ControllerModel {
    const PowerNetwork& net;
    const CostModel& cost;
    Vector damping;

    ControllerModel(const PowerNetwork& network, const CostModel& costs);
    ControllerModel(const PowerNetwork& network, const CostModel& costs, Vector assumed_damping);
};

struct Imbalances {
    Vector u1;  // P_in - d - D w - C P
    Vector u2;  // P_in - d - C B C^T theta_hat
};

Imbalances local_imbalances(const ControllerModel& model, const Vector& d, const Vector& theta_hat,
                            const Vector& omega, const Vector& line_flow, const Vector& p_in);

/// Proximal primal-dual controller driven by measured frequency and line
/// flows; lambda is identified with the measured frequency. The returned
/// derivative leaves lambda/line_flow empty since the plant realizes them.
/// `balance_omega`, when given, is the frequency used inside the power
/// imbalance u1 (the feedback term still uses `omega`).
ControllerState dppd_rhs_closed_loop(const ControllerModel& model, const ControllerState& state,
                                     const Vector& omega, const Vector& line_flow, const Vector& p_in,
                                     const DppdConfig& cfg, const Vector* balance_omega = nullptr);

/// The full primal-dual flow including the lambda and P dynamics.
ControllerState dppd_rhs_pure_opt(const ControllerModel& model, const ControllerState& state,
                                  const Vector& p_in, const DppdConfig& cfg);

/// Projected subgradient stand-in: no eta tracker, the l1 part enters d
/// through a subgradient selection b sign(d + c) with sign(0) = 0.
ControllerState subgradient_baseline_rhs(const ControllerModel& model, const ControllerState& state,
                                         const Vector& omega, const Vector& line_flow,
                                         const Vector& p_in, const DppdConfig& cfg,
                                         const Vector* balance_omega = nullptr);

/// Positive parts max(0, nu- + Pmin - B C^T theta_hat) and
/// max(0, nu+ + B C^T theta_hat - Pmax).
std::pair<Vector, Vector> flow_limit_projections(const PowerNetwork& net, const Vector& theta_hat,
                                                 const Vector& nu_minus, const Vector& nu_plus);

}  // namespace gridfreq
