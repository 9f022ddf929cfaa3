#pragma once

#include <cstddef>
#include <vector>

#include "gridfreq/controller.hpp"
#include "gridfreq/costs.hpp"
#include "gridfreq/network.hpp"
#include "gridfreq/simulation.hpp"

namespace gridfreq {

/// A full primal-dual point of the reformulated load-control problem.
/// `eta` is only used by the Lyapunov functions.
struct PrimalDualPoint {
    Vector eta;
    Vector d;
    Vector theta_hat;
    Vector omega;
    Vector line_flow;
    Vector lambda;
    Vector mu;
    Vector nu_minus;
    Vector nu_plus;
};

/// Extracts the primal-dual point of a trajectory sample. In closed loop the
/// multiplier lambda is the plant frequency.
PrimalDualPoint point_from_sample(const Trajectory& traj, const Sample& sample);

struct KktResidual {
    double stationarity_d = 0.0;
    double freq_lambda = 0.0;
    double theta_stationarity = 0.0;
    double lambda_consensus = 0.0;
    double balance_p = 0.0;
    double balance_theta = 0.0;
    double comp_slack_minus = 0.0;
    double comp_slack_plus = 0.0;
    double total = 0.0;
};

struct KktOptions {
    bool thermal_limits = true;
    /// Distance below which d counts as sitting on a box bound or l1 kink.
    double active_tol = 1e-8;
};

/// Residuals of the optimality system, each a Euclidean norm over buses or
/// lines; `total` is their maximum. `damping` is the true per-bus D.
KktResidual kkt_residual(const PowerNetwork& net, const CostModel& cost, const PrimalDualPoint& point,
                         const Vector& p_in, const KktOptions& options = {});

/// 1/2 ||P_box(d) - d||^2.
double lyapunov_va(const CostModel& cost, const Vector& d);

struct LyapunovTerms {
    double v1 = 0.0;
    double v2 = 0.0;
    double v3 = 0.0;
    double v4 = 0.0;
    double total = 0.0;
};

enum class LimitTerms { AsPrinted, Bregman };

struct LyapunovOptions {
    bool thermal_limits = false;
    /// Maximum KKT residual accepted for the reference equilibrium.
    double equilibrium_tol = 1e-5;
    /// With thermal limits: AsPrinted weights the omega/mu linear terms of
    /// V1 by 2 and drops the damping-weighted omega term of V3; Bregman
    /// takes V1 as the exact Bregman gap of the extended Psi and keeps V3.
    LimitTerms limit_terms = LimitTerms::Bregman;
};

/// Lyapunov candidate of the pure-optimization flow around `equilibrium`
/// (V1 + V2 + V3 + V4; the primed variant with nu terms when thermal
/// limits are enabled). Throws BadEquilibrium if the equilibrium fails the
/// KKT check.
LyapunovTerms lyapunov_vb(const PowerNetwork& net, const CostModel& cost, const DppdConfig& cfg,
                          const PrimalDualPoint& state, const PrimalDualPoint& equilibrium,
                          const Vector& p_in, const LyapunovOptions& options = {});

struct RateReport {
    std::vector<double> t;
    std::vector<double> g;
    std::vector<double> envelope;  // running minimum of g
    std::vector<double> bound;     // envelope * sqrt(t)
    double t0 = 1.0;
    double bound_t0 = 0.0;
    double bound_final = 0.0;
    double max_ratio = 0.0;  // max over t >= t0 of bound(t) / bound(t0)
    bool pass = false;
};

/// Envelope of g and its sqrt(t)-scaled bound; passes when
/// bound(t) <= 2 bound(t0) for all t >= t0.
RateReport rate_report(const std::vector<double>& t, const std::vector<double>& g, double t0 = 1.0);
RateReport rate_report(const Trajectory& traj, double t0 = 1.0);

struct Lemma2Residual {
    double angle_residual = 0.0;  // ||C^T theta - C^T theta_hat||_inf
    double flow_residual = 0.0;   // ||B C^T theta - P||_inf
    double omega_inf = 0.0;       // ||omega||_inf
    double shift_spread = 0.0;    // min_eps ||theta - theta_hat - eps 1||_inf
    double shift = 0.0;           // the minimizing eps
};

Lemma2Residual lemma2_check(const PowerNetwork& net, const Vector& theta, const Vector& theta_hat,
                            const Vector& line_flow, const Vector& omega);
/// Uses the final sample; throws NotConverged when its g exceeds `converged_tol`.
Lemma2Residual lemma2_check(const PowerNetwork& net, const Trajectory& traj, double converged_tol = 1e-5);

/// Sign changes of `values` over the final quarter of the time span,
/// ignoring entries with magnitude below `ignore_below`.
std::size_t chatter_metric(const std::vector<double>& t, const std::vector<double>& values,
                           double ignore_below = 1e-9);
/// Same, for the load rate d'_bus of a trajectory.
std::size_t chatter_metric(const Trajectory& traj, std::size_t bus, double ignore_below = 1e-9);

/// Largest increase between consecutive samples of `values`, each divided
/// by (1 + relative_to * values[k]).
double max_increase(const std::vector<double>& values, double relative_to = 0.0);

}  // namespace gridfreq
