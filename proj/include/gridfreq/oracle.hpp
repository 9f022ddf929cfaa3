#pragma once

#include <optional>
#include <string>

#include "gridfreq/controller.hpp"
#include "gridfreq/costs.hpp"
#include "gridfreq/diagnostics.hpp"
#include "gridfreq/network.hpp"

namespace gridfreq {

enum class OracleMethod { Analytic, Grid };

struct ReferenceOptimum {
    Vector d_star;
    Vector omega_star;  // always zero
    double cost_star = 0.0;
    std::optional<Vector> lambda_star;
    std::optional<Vector> mu_star;
    OracleMethod method = OracleMethod::Analytic;
    double resolution = 0.0;  // grid spacing; 0 for the analytic solution
};

/// Exact optimum of a two-bus case with both loads controllable and a
/// non-binding line, by scalar reduction over the balance line
/// d1 + d2 = P1 + P2 and exact enumeration of the l1 and box breakpoints.
/// Throws NotTwoBus, Infeasible or BindingLimit.
ReferenceOptimum two_bus_analytic_optimum(const PowerNetwork& net, const CostModel& cost, const Vector& p_in);

/// Exhaustive search over the balanced slice of the load grid (the last
/// controllable bus absorbs the balance) for at most three controllable
/// buses. With `thermal_limits`, candidates whose DC flows leave the limits
/// are discarded. Ties resolve to the lexicographically smallest d.
/// Throws TooLarge or Infeasible.
ReferenceOptimum grid_search_optimum(const PowerNetwork& net, const CostModel& cost, const Vector& p_in,
                                     double resolution, bool thermal_limits = true);

/// Primal-dual point at the optimum `d_star`: zero frequency, angles from
/// the DC power flow, and (mu, nu) fitted by least squares to the
/// stationarity conditions. Loads within `active_tol` of a kink or bound
/// leave their multiplier free, and so do lines within `active_tol` of a
/// limit.
PrimalDualPoint recover_multipliers(const PowerNetwork& net, const CostModel& cost, const Vector& p_in,
                                    const Vector& d_star, bool thermal_limits, double active_tol);

/// Optimum when every line limit is ignored: one clearing price mu* with
/// sum d_i(mu*) = sum p_i, found by bisection. lambda_star is zero.
/// Throws Infeasible.
ReferenceOptimum copperplate_optimum(const CostModel& cost, const Vector& p_in);

/// Controller state at rest for a constant injection `p_in` with zero
/// frequency: copperplate optimum, DC angles for theta_hat (line_flow holds
/// their flows), uniform mu and the eta that keeps the l1 prox at d*.
/// With `thermal_limits`, throws BindingLimit when a DC flow reaches a line limit.
ControllerState equilibrium_start(const PowerNetwork& net, const CostModel& cost, const Vector& p_in, double kappa,
                                  bool thermal_limits = true);

/// {"case", "d_star", "cost", "method", "resolution"}.
std::string oracle_to_json(const std::string& case_name, const ReferenceOptimum& opt);
/// Reads the fields written by oracle_to_json; returns the case name through `case_name`.
ReferenceOptimum oracle_from_json(const std::string& text, std::string* case_name = nullptr);

}  // namespace gridfreq
