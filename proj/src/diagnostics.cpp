#include "gridfreq/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "gridfreq/error.hpp"

namespace gridfreq {

PrimalDualPoint point_from_sample(const Trajectory& traj, const Sample& sample) {
    const auto& L = traj.layout;
    const auto& x = sample.x;
    PrimalDualPoint p;
    p.eta = L.bus_block(x, L.eta());
    p.d = L.bus_block(x, L.d());
    p.theta_hat = L.bus_block(x, L.theta_hat());
    p.omega = sample.omega;
    p.line_flow = L.line_block(x, L.flow());
    p.lambda = sample.omega;
    p.mu = L.bus_block(x, L.mu());
    p.nu_minus = L.line_block(x, L.nu_minus());
    p.nu_plus = L.line_block(x, L.nu_plus());
    return p;
}

namespace {

void check_point(const PowerNetwork& net, const PrimalDualPoint& p, const Vector& p_in) {
    const auto n = net.n_buses();
    const auto l = net.n_lines();
    require_size(static_cast<std::size_t>(p.d.size()), n, "d");
    require_size(static_cast<std::size_t>(p.theta_hat.size()), n, "theta_hat");
    require_size(static_cast<std::size_t>(p.omega.size()), n, "omega");
    require_size(static_cast<std::size_t>(p.lambda.size()), n, "lambda");
    require_size(static_cast<std::size_t>(p.mu.size()), n, "mu");
    require_size(static_cast<std::size_t>(p.line_flow.size()), l, "line flow");
    require_size(static_cast<std::size_t>(p.nu_minus.size()), l, "nu_minus");
    require_size(static_cast<std::size_t>(p.nu_plus.size()), l, "nu_plus");
    require_size(static_cast<std::size_t>(p_in.size()), n, "injection");
}

// max(0, primal violation) + max(0, -nu) + |nu * slack| per line.
double slackness(const Vector& nu, const Vector& slack) {
    Vector r(nu.size());
    for (Eigen::Index k = 0; k < nu.size(); ++k) {
        r[k] = std::max(0.0, -slack[k]) + std::max(0.0, -nu[k]) + std::abs(nu[k] * slack[k]);
    }
    return r.norm();
}

}  // namespace

KktResidual kkt_residual(const PowerNetwork& net, const CostModel& cost, const PrimalDualPoint& p,
                         const Vector& p_in, const KktOptions& options) {
    check_point(net, p, p_in);
    require_size(cost.size(), net.n_buses(), "cost model");
    const auto n = static_cast<Eigen::Index>(net.n_buses());

    KktResidual r;
    Vector stat = Vector::Zero(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto bus = static_cast<std::size_t>(i);
        const double d = p.d[i];
        if (!cost.controllable(bus)) {
            stat[i] = std::abs(d);
            continue;
        }
        const auto& c = cost.buses[bus];
        const double inside = std::clamp(d, c.d_min, c.d_max);
        const Interval sub = subdifferential(cost, bus, inside, options.active_tol);
        stat[i] = sub.distance(p.lambda[i] + p.mu[i]) + std::abs(d - inside);
    }
    r.stationarity_d = stat.norm();
    r.freq_lambda = (p.omega - p.lambda).norm();

    Vector theta_stat = laplacian_times(net, p.mu);
    if (options.thermal_limits) {
        theta_stat += incidence_times(net, net.susceptance().cwiseProduct(p.nu_minus - p.nu_plus));
    }
    r.theta_stationarity = theta_stat.norm();
    r.lambda_consensus = incidence_transpose_times(net, p.lambda).norm();
    r.balance_p = (p_in - p.d - net.damping().cwiseProduct(p.omega) - incidence_times(net, p.line_flow)).norm();
    r.balance_theta = (p_in - p.d - laplacian_times(net, p.theta_hat)).norm();

    if (options.thermal_limits) {
        const Vector flow = line_flows_from_angles(net, p.theta_hat);
        r.comp_slack_minus = slackness(p.nu_minus, flow - net.flow_min());
        r.comp_slack_plus = slackness(p.nu_plus, net.flow_max() - flow);
    }
    r.total = std::max({r.stationarity_d, r.freq_lambda, r.theta_stationarity, r.lambda_consensus, r.balance_p,
                        r.balance_theta, r.comp_slack_minus, r.comp_slack_plus});
    return r;
}

double lyapunov_va(const CostModel& cost, const Vector& d) {
    require_size(static_cast<std::size_t>(d.size()), cost.size(), "d");
    double sum = 0.0;
    for (std::size_t i = 0; i < cost.size(); ++i) {
        if (!cost.controllable(i)) continue;
        const double x = d[static_cast<Eigen::Index>(i)];
        const double gap = prox_box(cost, i, x) - x;
        sum += gap * gap;
    }
    return 0.5 * sum;
}

namespace {

struct PsiParts {
    double value = 0.0;
    Vector grad_d;
};

PsiParts psi(const PowerNetwork& net, const CostModel& cost, const PrimalDualPoint& p, const Vector& p_in,
             bool limits) {
    const Vector u1 = p_in - p.d - net.damping().cwiseProduct(p.lambda) - incidence_times(net, p.line_flow);
    const Vector u2 = p_in - p.d - laplacian_times(net, p.theta_hat);
    const Vector freq_part = p.lambda + u1;
    const Vector price_part = p.mu + u2;
    PsiParts out;
    out.value = eval_smooth_cost(cost, p.d) + 0.5 * freq_part.squaredNorm() + 0.5 * price_part.squaredNorm();
    if (limits) {
        const Vector flow = line_flows_from_angles(net, p.theta_hat);
        out.value += 0.5 * (p.nu_minus + net.flow_min() - flow).cwiseMax(0.0).squaredNorm();
        out.value += 0.5 * (p.nu_plus + flow - net.flow_max()).cwiseMax(0.0).squaredNorm();
    }
    out.grad_d = grad_f0(cost, p.d) - freq_part - price_part;
    for (std::size_t i = 0; i < cost.size(); ++i) {
        if (!cost.controllable(i)) out.grad_d[static_cast<Eigen::Index>(i)] = 0.0;
    }
    return out;
}

}  // namespace

LyapunovTerms lyapunov_vb(const PowerNetwork& net, const CostModel& cost, const DppdConfig& cfg,
                          const PrimalDualPoint& state, const PrimalDualPoint& eq, const Vector& p_in,
                          const LyapunovOptions& options) {
    check_point(net, state, p_in);
    check_point(net, eq, p_in);
    require_size(static_cast<std::size_t>(state.eta.size()), net.n_buses(), "eta");
    require_size(static_cast<std::size_t>(eq.eta.size()), net.n_buses(), "eta");

    const bool limits = options.thermal_limits;
    KktOptions kkt_opts;
    kkt_opts.thermal_limits = limits;
    const double residual = kkt_residual(net, cost, eq, p_in, kkt_opts).total;
    if (!(residual <= options.equilibrium_tol)) {
        throw Error(ErrorCode::BadEquilibrium,
                    "equilibrium KKT residual " + std::to_string(residual) + " exceeds tolerance");
    }

    const Vector dd = state.d - eq.d;
    const Vector deta = state.eta - eq.eta;
    const Vector dtheta = state.theta_hat - eq.theta_hat;
    const Vector dflow = state.line_flow - eq.line_flow;
    const Vector domega = state.lambda - eq.lambda;
    const Vector dmu = state.mu - eq.mu;
    const Vector dnu_minus = state.nu_minus - eq.nu_minus;
    const Vector dnu_plus = state.nu_plus - eq.nu_plus;
    const Vector& damping = net.damping();
    const Vector& w_star = eq.lambda;

    const PsiParts psi_now = psi(net, cost, state, p_in, limits);
    const PsiParts psi_star = psi(net, cost, eq, p_in, limits);
    const bool printed = limits && options.limit_terms == LimitTerms::AsPrinted;
    const double w = printed ? 2.0 : 1.0;

    LyapunovTerms v;
    v.v1 = psi_now.value - psi_star.value - psi_star.grad_d.dot(dd) -
           w * (w_star.dot(domega) - w_star.dot(damping.cwiseProduct(domega))) - w * eq.mu.dot(dmu) +
           w * w_star.dot(incidence_times(net, dflow)) + w * eq.mu.dot(laplacian_times(net, dtheta));
    if (limits) {
        v.v1 -= eq.nu_minus.dot(dnu_minus) + eq.nu_plus.dot(dnu_plus);
        if (!printed) {
            const Vector nu_gap = net.susceptance().cwiseProduct(eq.nu_minus - eq.nu_plus);
            v.v1 += nu_gap.dot(incidence_transpose_times(net, dtheta));
        }
    }

    v.v2 = 0.5 * (dd.squaredNorm() - 2.0 * cfg.kappa * dd.dot(deta) + cfg.kappa * deta.squaredNorm());

    v.v3 = 0.5 * dmu.squaredNorm() + 0.5 * domega.squaredNorm();
    if (!printed) v.v3 += 1.5 * domega.dot(damping.cwiseProduct(domega));
    if (limits) v.v3 += 0.5 * (dnu_minus.squaredNorm() + dnu_plus.squaredNorm());

    v.v4 = 0.5 * (dtheta.squaredNorm() + dflow.squaredNorm());
    v.total = v.v1 + v.v2 + v.v3 + v.v4;
    return v;
}

RateReport rate_report(const std::vector<double>& t, const std::vector<double>& g, double t0) {
    if (t.empty() || t.size() != g.size()) {
        throw Error(ErrorCode::EmptyTrajectory, "rate report needs a non-empty trajectory");
    }
    RateReport r;
    r.t = t;
    r.g = g;
    r.t0 = t0;
    r.envelope.resize(g.size());
    r.bound.resize(g.size());
    double running = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < g.size(); ++k) {
        running = std::min(running, g[k]);
        r.envelope[k] = running;
        r.bound[k] = running * std::sqrt(std::max(t[k], 0.0));
    }
    std::size_t start = 0;
    while (start < t.size() && t[start] < t0 - 1e-12) ++start;
    if (start == t.size()) throw Error(ErrorCode::EmptyTrajectory, "trajectory ends before t0");

    r.bound_t0 = r.bound[start];
    r.bound_final = r.bound.back();
    double worst = 0.0;
    for (std::size_t k = start; k < t.size(); ++k) worst = std::max(worst, r.bound[k]);
    r.max_ratio = r.bound_t0 > 0.0 ? worst / r.bound_t0 : (worst > 0.0 ? std::numeric_limits<double>::infinity() : 0.0);
    r.pass = worst <= 2.0 * r.bound_t0;
    return r;
}

RateReport rate_report(const Trajectory& traj, double t0) {
    std::vector<double> t;
    std::vector<double> g;
    t.reserve(traj.samples.size());
    g.reserve(traj.samples.size());
    for (const auto& s : traj.samples) {
        t.push_back(s.t);
        g.push_back(s.g);
    }
    return rate_report(t, g, t0);
}

Lemma2Residual lemma2_check(const PowerNetwork& net, const Vector& theta, const Vector& theta_hat,
                            const Vector& line_flow, const Vector& omega) {
    require_size(static_cast<std::size_t>(theta.size()), net.n_buses(), "theta");
    require_size(static_cast<std::size_t>(theta_hat.size()), net.n_buses(), "theta_hat");
    require_size(static_cast<std::size_t>(omega.size()), net.n_buses(), "omega");
    require_size(static_cast<std::size_t>(line_flow.size()), net.n_lines(), "line flow");
    Lemma2Residual r;
    r.angle_residual = incidence_transpose_times(net, theta - theta_hat).lpNorm<Eigen::Infinity>();
    r.flow_residual = (line_flows_from_angles(net, theta) - line_flow).lpNorm<Eigen::Infinity>();
    r.omega_inf = omega.lpNorm<Eigen::Infinity>();
    const Vector diff = theta - theta_hat;
    r.shift = 0.5 * (diff.maxCoeff() + diff.minCoeff());
    r.shift_spread = 0.5 * (diff.maxCoeff() - diff.minCoeff());
    return r;
}

Lemma2Residual lemma2_check(const PowerNetwork& net, const Trajectory& traj, double converged_tol) {
    if (traj.samples.empty()) throw Error(ErrorCode::EmptyTrajectory, "trajectory has no samples");
    const auto& last = traj.final();
    if (!(last.g <= converged_tol)) {
        throw Error(ErrorCode::NotConverged, "trajectory has not converged (g = " + std::to_string(last.g) + ")");
    }
    const auto& L = traj.layout;
    return lemma2_check(net, L.bus_block(last.x, L.theta()), L.bus_block(last.x, L.theta_hat()),
                        L.line_block(last.x, L.flow()), last.omega);
}

std::size_t chatter_metric(const std::vector<double>& t, const std::vector<double>& values, double ignore_below) {
    if (t.empty() || t.size() != values.size()) {
        throw Error(ErrorCode::EmptyTrajectory, "chatter metric needs a non-empty series");
    }
    const double start = t.front() + 0.75 * (t.back() - t.front());
    std::size_t changes = 0;
    int last_sign = 0;
    for (std::size_t k = 0; k < t.size(); ++k) {
        if (t[k] < start) continue;
        if (std::abs(values[k]) < ignore_below) continue;
        const int sign = values[k] > 0.0 ? 1 : -1;
        if (last_sign != 0 && sign != last_sign) ++changes;
        last_sign = sign;
    }
    return changes;
}

std::size_t chatter_metric(const Trajectory& traj, std::size_t bus, double ignore_below) {
    const auto& L = traj.layout;
    if (bus >= L.n) throw Error(ErrorCode::ValidationError, "bus index out of range");
    std::vector<double> t;
    std::vector<double> rate;
    for (const auto& s : traj.samples) {
        t.push_back(s.t);
        rate.push_back(s.rate[L.d() + static_cast<Eigen::Index>(bus)]);
    }
    return chatter_metric(t, rate, ignore_below);
}

double max_increase(const std::vector<double>& values, double relative_to) {
    double worst = 0.0;
    for (std::size_t k = 1; k < values.size(); ++k) {
        const double scale = 1.0 + relative_to * std::abs(values[k - 1]);
        worst = std::max(worst, (values[k] - values[k - 1]) / scale);
    }
    return worst;
}

}  // namespace gridfreq
