#include "gridfreq/controller.hpp"

#include <cmath>

#include "gridfreq/error.hpp"

namespace gridfreq {

void DppdConfig::validate() const {
    if (!(kappa > 0.0 && kappa < 1.0)) throw Error(ErrorCode::ValidationError, "kappa must lie in (0, 1)");
    for (double r : {rho.eta, rho.d, rho.theta_hat, rho.flow, rho.lambda, rho.mu, rho.nu_minus, rho.nu_plus}) {
        if (!(r > 0.0) || !std::isfinite(r)) throw Error(ErrorCode::ValidationError, "stepsizes rho must be > 0");
    }
}

ControllerState ControllerState::zeros(const PowerNetwork& net, Mode mode) {
    const auto n = static_cast<Eigen::Index>(net.n_buses());
    const auto l = static_cast<Eigen::Index>(net.n_lines());
    ControllerState s{Vector::Zero(n), Vector::Zero(n), Vector::Zero(n), Vector::Zero(n),
                      Vector::Zero(l), Vector::Zero(l), Vector(), Vector()};
    if (mode == Mode::PureOpt) {
        s.lambda = Vector::Zero(n);
        s.line_flow = Vector::Zero(l);
    }
    return s;
}

ControllerModel::ControllerModel(const PowerNetwork& network, const CostModel& costs)
    : ControllerModel(network, costs, network.damping()) {}

ControllerModel::ControllerModel(const PowerNetwork& network, const CostModel& costs, Vector assumed_damping)
    : net(network), cost(costs), damping(std::move(assumed_damping)) {
    require_size(cost.size(), net.n_buses(), "cost model");
    require_size(static_cast<std::size_t>(damping.size()), net.n_buses(), "assumed damping");
}

Imbalances local_imbalances(const ControllerModel& model, const Vector& d, const Vector& theta_hat,
                            const Vector& omega, const Vector& line_flow, const Vector& p_in) {
    const auto n = model.net.n_buses();
    require_size(static_cast<std::size_t>(d.size()), n, "load vector d");
    require_size(static_cast<std::size_t>(omega.size()), n, "frequency vector");
    require_size(static_cast<std::size_t>(p_in.size()), n, "injection vector");
    Imbalances u;
    u.u1 = p_in - d - model.damping.cwiseProduct(omega) - incidence_times(model.net, line_flow);
    u.u2 = p_in - d - laplacian_times(model.net, theta_hat);
    return u;
}

std::pair<Vector, Vector> flow_limit_projections(const PowerNetwork& net, const Vector& theta_hat,
                                                 const Vector& nu_minus, const Vector& nu_plus) {
    const Vector flow = line_flows_from_angles(net, theta_hat);
    Vector lower = (nu_minus + net.flow_min() - flow).cwiseMax(0.0);
    Vector upper = (nu_plus + flow - net.flow_max()).cwiseMax(0.0);
    return {std::move(lower), std::move(upper)};
}

namespace {

void check_state(const PowerNetwork& net, const ControllerState& s) {
    const auto n = net.n_buses();
    const auto l = net.n_lines();
    require_size(static_cast<std::size_t>(s.eta.size()), n, "eta");
    require_size(static_cast<std::size_t>(s.d.size()), n, "d");
    require_size(static_cast<std::size_t>(s.theta_hat.size()), n, "theta_hat");
    require_size(static_cast<std::size_t>(s.mu.size()), n, "mu");
    require_size(static_cast<std::size_t>(s.nu_minus.size()), l, "nu_minus");
    require_size(static_cast<std::size_t>(s.nu_plus.size()), l, "nu_plus");
}

void check_finite(const ControllerState& rate) {
    for (const Vector* v : {&rate.eta, &rate.d, &rate.theta_hat, &rate.mu, &rate.nu_minus, &rate.nu_plus,
                            &rate.lambda, &rate.line_flow}) {
        if (!v->allFinite()) throw Error(ErrorCode::NonFiniteState, "controller derivative is not finite");
    }
}

// Shared by every control law: theta_hat, mu and nu flows.
void multiplier_flows(const ControllerModel& model, const ControllerState& s, const Vector& u2,
                      const DppdConfig& cfg, ControllerState& rate) {
    const auto& net = model.net;
    Vector drive = laplacian_times(net, s.mu + u2);
    if (cfg.thermal_limits) {
        auto [lower, upper] = flow_limit_projections(net, s.theta_hat, s.nu_minus, s.nu_plus);
        drive += incidence_times(net, net.susceptance().cwiseProduct(lower - upper));
        rate.nu_minus = cfg.rho.nu_minus * (lower - s.nu_minus);
        rate.nu_plus = cfg.rho.nu_plus * (upper - s.nu_plus);
    } else {
        rate.nu_minus = Vector::Zero(s.nu_minus.size());
        rate.nu_plus = Vector::Zero(s.nu_plus.size());
    }
    rate.theta_hat = cfg.rho.theta_hat * drive;
    rate.mu = cfg.rho.mu * u2;
}

// eta and d flows of the proximal controller; `lambda` is the frequency
// multiplier (measured frequency in closed loop).
void proximal_load_flows(const ControllerModel& model, const ControllerState& s, const Vector& lambda,
                         const Imbalances& u, const DppdConfig& cfg, ControllerState& rate) {
    const auto& cost = model.cost;
    const Vector grad = grad_f0(cost, s.d);
    const auto n = static_cast<Eigen::Index>(s.d.size());
    rate.eta = Vector::Zero(n);
    rate.d = Vector::Zero(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto bus = static_cast<std::size_t>(i);
        if (!cost.controllable(bus)) continue;
        const double tracked = prox_l1_shifted(cost, bus, s.d[i] - cfg.kappa * s.eta[i]);
        rate.eta[i] = cfg.rho.eta * (tracked - s.d[i]);
        const double arg = s.d[i] - grad[i] + cfg.kappa * s.eta[i] + lambda[i] + u.u1[i] + s.mu[i] + u.u2[i];
        rate.d[i] = cfg.rho.d * (prox_box(cost, bus, arg) - s.d[i]);
    }
}

}  // namespace

ControllerState dppd_rhs_closed_loop(const ControllerModel& model, const ControllerState& state,
                                     const Vector& omega, const Vector& line_flow, const Vector& p_in,
                                     const DppdConfig& cfg, const Vector* balance_omega) {
    check_state(model.net, state);
    const Vector& in_balance = balance_omega != nullptr ? *balance_omega : omega;
    const auto u = local_imbalances(model, state.d, state.theta_hat, in_balance, line_flow, p_in);
    ControllerState rate;
    proximal_load_flows(model, state, omega, u, cfg, rate);
    multiplier_flows(model, state, u.u2, cfg, rate);
    check_finite(rate);
    return rate;
}

ControllerState dppd_rhs_pure_opt(const ControllerModel& model, const ControllerState& state,
                                  const Vector& p_in, const DppdConfig& cfg) {
    check_state(model.net, state);
    const auto& net = model.net;
    require_size(static_cast<std::size_t>(state.lambda.size()), net.n_buses(), "lambda");
    require_size(static_cast<std::size_t>(state.line_flow.size()), net.n_lines(), "line flow");

    const auto u = local_imbalances(model, state.d, state.theta_hat, state.lambda, state.line_flow, p_in);
    ControllerState rate;
    proximal_load_flows(model, state, state.lambda, u, cfg, rate);
    multiplier_flows(model, state, u.u2, cfg, rate);

    const Vector push = incidence_transpose_times(net, state.lambda + u.u1);
    rate.lambda = cfg.rho.lambda * u.u1;
    if (cfg.rho.physical_network_rates) {
        rate.line_flow = net.susceptance().cwiseProduct(push);
        for (auto bus : net.generator_buses()) {
            const auto i = static_cast<Eigen::Index>(bus);
            rate.lambda[i] = u.u1[i] / net.buses()[bus].inertia;
        }
    } else {
        rate.line_flow = cfg.rho.flow * push;
    }
    check_finite(rate);
    return rate;
}

ControllerState subgradient_baseline_rhs(const ControllerModel& model, const ControllerState& state,
                                         const Vector& omega, const Vector& line_flow, const Vector& p_in,
                                         const DppdConfig& cfg, const Vector* balance_omega) {
    check_state(model.net, state);
    const auto& cost = model.cost;
    const Vector& in_balance = balance_omega != nullptr ? *balance_omega : omega;
    const auto u = local_imbalances(model, state.d, state.theta_hat, in_balance, line_flow, p_in);
    const Vector grad = grad_f0(cost, state.d);

    ControllerState rate;
    const auto n = static_cast<Eigen::Index>(state.d.size());
    rate.eta = Vector::Zero(n);
    rate.d = Vector::Zero(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto bus = static_cast<std::size_t>(i);
        if (!cost.controllable(bus)) continue;
        const auto& c = cost.buses[bus];
        const double shifted = state.d[i] + c.c;
        const double sign = shifted > 0.0 ? 1.0 : (shifted < 0.0 ? -1.0 : 0.0);
        const double subgrad = cost.scale * c.b * sign;
        const double arg = state.d[i] - grad[i] - subgrad + omega[i] + u.u1[i] + state.mu[i] + u.u2[i];
        rate.d[i] = cfg.rho.d * (prox_box(cost, bus, arg) - state.d[i]);
    }
    multiplier_flows(model, state, u.u2, cfg, rate);
    check_finite(rate);
    return rate;
}

}  // namespace gridfreq
