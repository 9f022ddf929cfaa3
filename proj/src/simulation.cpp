#include "gridfreq/simulation.hpp"

#include <algorithm>
#include <cmath>

#include "gridfreq/error.hpp"
#include "gridfreq/scenarios.hpp"

namespace gridfreq {

StateLayout::StateLayout(const PowerNetwork& net, Mode mode)
    : n(net.n_buses()),
      l(net.n_lines()),
      m(mode == Mode::PureOpt ? net.n_buses() : net.generator_buses().size()) {}

namespace {

const PowerNetwork& require_net(const SimulationSetup& setup) {
    if (setup.net == nullptr) throw Error(ErrorCode::ValidationError, "simulation setup has no network");
    return *setup.net;
}

Vector plant_damping_for(const SimulationSetup& setup) {
    const auto& u = setup.uncertainty;
    Vector damping = setup.net->damping();
    if (u.damping_side == DampingSide::Plant) damping *= u.damping_scale;
    return damping;
}

Vector controller_damping_for(const SimulationSetup& setup) {
    const auto& u = setup.uncertainty;
    Vector damping = setup.net->damping();
    if (u.damping_side == DampingSide::Controller && setup.config.mode == Mode::ClosedLoop) {
        damping *= u.damping_scale;
    }
    return damping;
}

void copy_if_set(Vector& dst, const Vector& src, const char* what) {
    if (src.size() == 0) return;
    require_size(static_cast<std::size_t>(src.size()), static_cast<std::size_t>(dst.size()), what);
    dst = src;
}

}  // namespace

System::System(const SimulationSetup& setup)
    : setup_(setup),
      net_(require_net(setup)),
      layout_(net_, setup.config.mode),
      plant_damping_(plant_damping_for(setup)),
      model_(net_, setup.cost, controller_damping_for(setup)) {
    setup.config.validate();
    require_size(setup.injection.size(), net_.n_buses(), "injection profile");
    if (!(setup.uncertainty.damping_scale > 0.0)) {
        throw Error(ErrorCode::ValidationError, "damping scale k1 must be > 0");
    }
    if (setup.uncertainty.freq_noise < 0.0) {
        throw Error(ErrorCode::ValidationError, "noise amplitude k2 must be >= 0");
    }
    if (setup.config.mode == Mode::PureOpt && setup.law != ControlLaw::Dppd) {
        throw Error(ErrorCode::ValidationError, "pure-optimization mode only runs the DPPD flow");
    }
}

Vector System::initial_state() const {
    const auto& L = layout_;
    Vector x = Vector::Zero(L.size());
    const auto& init = setup_.initial;

    Vector block = Vector::Zero(static_cast<Eigen::Index>(L.n));
    auto set_bus = [&](Eigen::Index offset, const Vector& src, const char* what) {
        block.setZero();
        copy_if_set(block, src, what);
        x.segment(offset, static_cast<Eigen::Index>(L.n)) = block;
    };
    set_bus(L.theta(), init.theta, "initial theta");
    set_bus(L.eta(), init.eta, "initial eta");
    set_bus(L.theta_hat(), init.theta_hat, "initial theta_hat");
    set_bus(L.mu(), init.mu, "initial mu");

    Vector d = Vector::Zero(static_cast<Eigen::Index>(L.n));
    copy_if_set(d, init.d, "initial d");
    for (std::size_t i = 0; i < L.n; ++i) {
        const auto k = static_cast<Eigen::Index>(i);
        d[k] = setup_.cost.controllable(i) ? prox_box(setup_.cost, i, d[k]) : 0.0;
    }
    x.segment(L.d(), static_cast<Eigen::Index>(L.n)) = d;

    Vector omega = Vector::Zero(static_cast<Eigen::Index>(L.m));
    if (init.omega.size() == static_cast<Eigen::Index>(L.n) && L.m != L.n) {
        const auto& gens = net_.generator_buses();
        for (std::size_t k = 0; k < gens.size(); ++k) {
            omega[static_cast<Eigen::Index>(k)] = init.omega[static_cast<Eigen::Index>(gens[k])];
        }
    } else {
        copy_if_set(omega, init.omega, "initial omega");
    }
    x.segment(L.omega(), static_cast<Eigen::Index>(L.m)) = omega;

    Vector flow = Vector::Zero(static_cast<Eigen::Index>(L.l));
    copy_if_set(flow, init.line_flow, "initial line flow");
    x.segment(L.flow(), static_cast<Eigen::Index>(L.l)) = flow;
    return x;
}

ControllerState System::controller_state(const Vector& x) const {
    const auto& L = layout_;
    ControllerState s{L.bus_block(x, L.eta()),         L.bus_block(x, L.d()),
                      L.bus_block(x, L.theta_hat()),   L.bus_block(x, L.mu()),
                      L.line_block(x, L.nu_minus()),   L.line_block(x, L.nu_plus()),
                      Vector(),                        Vector()};
    if (setup_.config.mode == Mode::PureOpt) {
        s.lambda = L.bus_block(x, L.omega());
        s.line_flow = L.line_block(x, L.flow());
    }
    return s;
}

Vector System::measured_omega(double t, const Vector& omega) const {
    return apply_measurement_noise(omega, t, setup_.uncertainty.freq_noise, setup_.cost);
}

Vector System::bus_omega(double t, const Vector& x) const {
    const auto& L = layout_;
    if (setup_.config.mode == Mode::PureOpt) return L.bus_block(x, L.omega());
    PlantState plant{L.bus_block(x, L.theta()), x.segment(L.omega(), static_cast<Eigen::Index>(L.m)),
                     L.line_block(x, L.flow())};
    return bus_frequencies(net_, plant_damping_, plant, L.bus_block(x, L.d()), setup_.injection.at(t));
}

Vector System::bus_omega_rate(double t, const Vector& x, const Vector& rate) const {
    (void)x;
    const auto& L = layout_;
    if (setup_.config.mode == Mode::PureOpt) return L.bus_block(rate, L.omega());
    Vector out(static_cast<Eigen::Index>(L.n));
    const auto& gens = net_.generator_buses();
    for (std::size_t k = 0; k < gens.size(); ++k) {
        out[static_cast<Eigen::Index>(gens[k])] = rate[L.omega() + static_cast<Eigen::Index>(k)];
    }
    const Vector p_rate = setup_.injection.rate(t);
    const Vector outflow_rate = incidence_times(net_, L.line_block(rate, L.flow()));
    const Vector d_rate = L.bus_block(rate, L.d());
    for (auto bus : net_.load_buses()) {
        const auto i = static_cast<Eigen::Index>(bus);
        out[i] = (p_rate[i] - d_rate[i] - outflow_rate[i]) / plant_damping_[i];
    }
    return out;
}

Vector System::rhs(double t, const Vector& x) const {
    const auto& L = layout_;
    const Vector p_in = setup_.injection.at(t);
    Vector rate = Vector::Zero(L.size());
    const ControllerState ctrl = controller_state(x);

    ControllerState crate;
    if (setup_.config.mode == Mode::PureOpt) {
        crate = dppd_rhs_pure_opt(model_, ctrl, p_in, setup_.config);
        rate.segment(L.theta(), static_cast<Eigen::Index>(L.n)) = ctrl.lambda;
        rate.segment(L.omega(), static_cast<Eigen::Index>(L.n)) = crate.lambda;
        rate.segment(L.flow(), static_cast<Eigen::Index>(L.l)) = crate.line_flow;
    } else {
        PlantState plant{L.bus_block(x, L.theta()), x.segment(L.omega(), static_cast<Eigen::Index>(L.m)),
                         L.line_block(x, L.flow())};
        const Vector omega = bus_frequencies(net_, plant_damping_, plant, ctrl.d, p_in);
        const PlantState prate = plant_rhs(net_, plant_damping_, plant, ctrl.d, p_in);
        rate.segment(L.theta(), static_cast<Eigen::Index>(L.n)) = prate.theta;
        rate.segment(L.omega(), static_cast<Eigen::Index>(L.m)) = prate.omega_gen;
        rate.segment(L.flow(), static_cast<Eigen::Index>(L.l)) = prate.line_flow;

        // noise corrupts the frequency feedback; u1 is a local power balance
        const Vector measured = measured_omega(t, omega);
        switch (setup_.law) {
            case ControlLaw::Dppd:
                crate = dppd_rhs_closed_loop(model_, ctrl, measured, plant.line_flow, p_in, setup_.config, &omega);
                break;
            case ControlLaw::Baseline:
                crate = subgradient_baseline_rhs(model_, ctrl, measured, plant.line_flow, p_in, setup_.config, &omega);
                break;
            case ControlLaw::None:
                return rate;
        }
    }
    rate.segment(L.eta(), static_cast<Eigen::Index>(L.n)) = crate.eta;
    rate.segment(L.d(), static_cast<Eigen::Index>(L.n)) = crate.d;
    rate.segment(L.theta_hat(), static_cast<Eigen::Index>(L.n)) = crate.theta_hat;
    rate.segment(L.mu(), static_cast<Eigen::Index>(L.n)) = crate.mu;
    rate.segment(L.nu_minus(), static_cast<Eigen::Index>(L.l)) = crate.nu_minus;
    rate.segment(L.nu_plus(), static_cast<Eigen::Index>(L.l)) = crate.nu_plus;
    return rate;
}

double System::box_violation(const Vector& x) const {
    double worst = 0.0;
    for (std::size_t i = 0; i < layout_.n; ++i) {
        if (!setup_.cost.controllable(i)) continue;
        const double d = x[layout_.d() + static_cast<Eigen::Index>(i)];
        worst = std::max(worst, std::abs(d - prox_box(setup_.cost, i, d)));
    }
    return worst;
}

Sample System::sample(double t, const Vector& x, const Vector& rate) const {
    Sample s;
    s.t = t;
    s.x = x;
    s.rate = rate;
    s.omega = bus_omega(t, x);
    s.omega_rate = bus_omega_rate(t, x, rate);
    s.p_in = setup_.injection.at(t);
    s.g = derivative_norm_sum(layout_, rate, s.omega_rate, setup_.config.thermal_limits);
    return s;
}

double derivative_norm_sum(const StateLayout& L, const Vector& rate, const Vector& omega_rate,
                           bool thermal_limits) {
    double g = L.bus_block(rate, L.d()).norm() + L.bus_block(rate, L.eta()).norm() +
               L.bus_block(rate, L.theta_hat()).norm() + L.line_block(rate, L.flow()).norm() +
               L.bus_block(rate, L.mu()).norm() + omega_rate.norm();
    if (thermal_limits) {
        g += L.line_block(rate, L.nu_minus()).norm() + L.line_block(rate, L.nu_plus()).norm();
    }
    return g;
}

Trajectory simulate(const SimulationSetup& setup) {
    if (!(setup.h > 0.0)) throw Error(ErrorCode::ValidationError, "h must be positive");
    if (!(setup.horizon > 0.0)) throw Error(ErrorCode::ValidationError, "horizon T must be positive");
    if (!(setup.sample_every >= setup.h)) {
        throw Error(ErrorCode::ValidationError, "sample_every must be at least the step h");
    }
    const System system(setup);
    Trajectory traj;
    traj.layout = system.layout();
    traj.mode = setup.config.mode;
    traj.thermal_limits = setup.config.thermal_limits;

    const auto steps = static_cast<long long>(std::llround(setup.horizon / setup.h));
    const auto stride = std::max<long long>(1, std::llround(setup.sample_every / setup.h));
    auto rhs = [&system](double t, const Vector& x) { return system.rhs(t, x); };

    Vector x = system.initial_state();
    traj.max_box_violation = system.box_violation(x);
    Vector slope;
    for (long long k = 0; k < steps; ++k) {
        const double t = static_cast<double>(k) * setup.h;
        Vector next = rk4_step(rhs, x, t, setup.h, &slope);
        if (k % stride == 0) {
            traj.samples.push_back(system.sample(t, x, slope));
            if (setup.stop_tolerance > 0.0 && t >= setup.stop_min_time &&
                traj.samples.back().g < setup.stop_tolerance) {
                traj.stopped_early = true;
                return traj;
            }
        }
        x = std::move(next);
        traj.max_box_violation = std::max(traj.max_box_violation, system.box_violation(x));
    }
    const double t_end = static_cast<double>(steps) * setup.h;
    traj.samples.push_back(system.sample(t_end, x, system.rhs(t_end, x)));
    return traj;
}

}  // namespace gridfreq
