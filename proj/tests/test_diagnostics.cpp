#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include "gridfreq/diagnostics.hpp"
#include "gridfreq/error.hpp"
#include "gridfreq/oracle.hpp"
#include "gridfreq/scenarios.hpp"
#include "support.hpp"

using namespace gridfreq;
using namespace testing;

namespace {

PrimalDualPoint lone_bus_point(double d, double lambda, double mu) {
    PrimalDualPoint p;
    p.eta = vec({0.0});
    p.d = vec({d});
    p.theta_hat = vec({0.0});
    p.omega = vec({lambda});
    p.line_flow = Vector(0);
    p.lambda = vec({lambda});
    p.mu = vec({mu});
    p.nu_minus = Vector(0);
    p.nu_plus = Vector(0);
    return p;
}

// rest point without limits: copperplate optimum, zero frequency
PrimalDualPoint rest_point(const Case& c, const Vector& p_in, bool limits) {
    const auto s = equilibrium_start(*c.net, c.cost, p_in, 0.5, limits);
    PrimalDualPoint p;
    p.eta = s.eta;
    p.d = s.d;
    p.theta_hat = s.theta_hat;
    p.omega = Vector::Zero(s.d.size());
    p.lambda = p.omega;
    p.line_flow = s.line_flow;
    p.mu = s.mu;
    p.nu_minus = s.nu_minus;
    p.nu_plus = s.nu_plus;
    return p;
}

// loads without control stay pinned at zero, as in every run
PrimalDualPoint perturbed(std::mt19937_64& rng, const CostModel& cost, const PrimalDualPoint& eq, double spread) {
    PrimalDualPoint p = eq;
    auto jitter = [&](Vector& v) { v += random_vector(rng, v.size(), -spread, spread); };
    jitter(p.eta);
    jitter(p.d);
    for (std::size_t i = 0; i < cost.size(); ++i) {
        if (!cost.controllable(i)) p.d[static_cast<Eigen::Index>(i)] = 0.0;
    }
    jitter(p.theta_hat);
    jitter(p.lambda);
    p.omega = p.lambda;
    jitter(p.line_flow);
    jitter(p.mu);
    p.nu_minus = (p.nu_minus + random_vector(rng, p.nu_minus.size(), 0.0, spread)).eval();
    p.nu_plus = (p.nu_plus + random_vector(rng, p.nu_plus.size(), 0.0, spread)).eval();
    return p;
}

// V_b without limits written out with dense matrices
double vb_dense(const PowerNetwork& net, const CostModel& cost, double kappa, const PrimalDualPoint& x,
                const PrimalDualPoint& s, const Vector& p_in) {
    const Matrix& C = net.incidence();
    const Matrix L = C * net.susceptance().asDiagonal() * C.transpose();
    const Matrix D = net.damping().asDiagonal();
    const auto n = C.rows();
    const Matrix I = Matrix::Identity(n, n);

    auto f0 = [&](const Vector& d) {
        double sum = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) {
            const auto& b = cost.buses[static_cast<std::size_t>(i)];
            sum += cost.scale * (b.a * d[i] * d[i] + b.e * d[i]);
        }
        return sum;
    };
    auto psi = [&](const PrimalDualPoint& p) {
        const Vector w = p.lambda + (p_in - p.d - D * p.lambda - C * p.line_flow);
        const Vector m = p.mu + (p_in - p.d - L * p.theta_hat);
        return f0(p.d) + 0.5 * w.dot(w) + 0.5 * m.dot(m);
    };
    Vector grad_f0_star(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto& b = cost.buses[static_cast<std::size_t>(i)];
        grad_f0_star[i] = cost.scale * (2.0 * b.a * s.d[i] + b.e);
    }
    const Vector w_star = s.lambda + (p_in - s.d - D * s.lambda - C * s.line_flow);
    const Vector m_star = s.mu + (p_in - s.d - L * s.theta_hat);
    const Vector grad_d_star = grad_f0_star - w_star - m_star;

    const Vector dd = x.d - s.d, deta = x.eta - s.eta, dth = x.theta_hat - s.theta_hat;
    const Vector dp = x.line_flow - s.line_flow, dw = x.lambda - s.lambda, dm = x.mu - s.mu;

    const double v1 = psi(x) - psi(s) - grad_d_star.dot(dd) - s.lambda.dot((I - D) * dw) - s.mu.dot(dm) +
                      s.lambda.dot(C * dp) + s.mu.dot(L * dth);
    const double v2 = 0.5 * (dd.dot(dd) - 2.0 * kappa * dd.dot(deta) + kappa * deta.dot(deta));
    const double v3 = 0.5 * dm.dot(dm) + 0.5 * dw.dot(dw) + 1.5 * dw.dot(D * dw);
    const double v4 = 0.5 * (dth.dot(dth) + dp.dot(dp));
    return v1 + v2 + v3 + v4;
}

}  // namespace

TEST_CASE("kkt residual of the isolated bus") {
    const auto lone = build_network({load(1.0)}, {});
    const auto cost = make_cost_model({quad(1.0, 1.0, 0.0)});
    KktOptions opts;
    opts.thermal_limits = false;
    CHECK(kkt_residual(lone, cost, lone_bus_point(1.0, 0.0, 3.0), vec({1.0}), opts).total == 0.0);

    PrimalDualPoint off = lone_bus_point(1.0, 0.0, 3.0);
    off.omega = vec({0.25});
    const auto r = kkt_residual(lone, cost, off, vec({1.0}), opts);
    CHECK(r.freq_lambda == doctest::Approx(0.25));
    CHECK(r.total >= r.freq_lambda);

    // wrong price: distance to the single subgradient 3
    CHECK(kkt_residual(lone, cost, lone_bus_point(1.0, 0.0, 2.5), vec({1.0}), opts).stationarity_d ==
          doctest::Approx(0.5));
}

TEST_CASE("kkt residual at the two-bus oracle point") {
    for (const char* name : {"two_bus_analytic", "two_bus_l1"}) {
        const auto c = load_case(name);
        const Vector p = c.scenario.injection.at(c.scenario.horizon);
        const auto opt = two_bus_analytic_optimum(*c.net, c.cost, p);
        const auto point = recover_multipliers(*c.net, c.cost, p, opt.d_star, true, 1e-9);
        CHECK_MESSAGE(kkt_residual(*c.net, c.cost, point, p).total < 1e-8, name);

        // shifting theta_hat by a constant changes nothing
        PrimalDualPoint shifted = point;
        shifted.theta_hat.array() += 3.0;
        CHECK(std::abs(kkt_residual(*c.net, c.cost, shifted, p).total - kkt_residual(*c.net, c.cost, point, p).total) <
              1e-12);
    }
}

TEST_CASE("box distance candidate") {
    const auto cost = make_cost_model({quad(1.0), quad(1.0, 0, 0, -0.5, 2.0)});
    CHECK(lyapunov_va(cost, vec({0.2, 1.9})) == 0.0);
    CHECK(lyapunov_va(make_cost_model({quad(1.0)}), vec({2.0})) == doctest::Approx(0.125).epsilon(1e-15));

    std::mt19937_64 rng(2);
    for (int trial = 0; trial < 100; ++trial) {
        const Vector d = random_vector(rng, 2, -4.0, 4.0);
        double expect = 0.0;
        const double lo[2] = {-1.5, -0.5}, hi[2] = {1.5, 2.0};
        for (int i = 0; i < 2; ++i) {
            double gap = 0.0;
            if (d[i] > hi[i]) gap = d[i] - hi[i];
            if (d[i] < lo[i]) gap = lo[i] - d[i];
            expect += 0.5 * gap * gap;
        }
        CHECK(lyapunov_va(cost, d) == doctest::Approx(expect).epsilon(1e-14));
    }
}

TEST_CASE("V_b terms") {
    const auto lone = build_network({load(1.0)}, {});
    const auto cost = make_cost_model({quad(1.0, 1.0, 0.0)});
    DppdConfig cfg;
    const PrimalDualPoint eq = lone_bus_point(1.0, 0.0, 3.0);
    LyapunovOptions opts;

    CHECK(std::abs(lyapunov_vb(lone, cost, cfg, eq, eq, vec({1.0}), opts).total) < 1e-15);

    PrimalDualPoint x = eq;
    x.d = vec({2.0});
    x.eta = vec({1.0});
    CHECK(lyapunov_vb(lone, cost, cfg, x, eq, vec({1.0}), opts).v2 == doctest::Approx(0.25).epsilon(1e-15));

    // a point that is not an equilibrium is rejected
    try {
        lyapunov_vb(lone, cost, cfg, x, lone_bus_point(0.5, 0.0, 3.0), vec({1.0}), opts);
        FAIL("expected BadEquilibrium");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::BadEquilibrium);
    }
}

TEST_CASE("V_b matches a dense re-implementation") {
    std::mt19937_64 rng(17);
    for (const char* name : {"two_bus_analytic", "triangle", "generator_ring", "ieee39_approx"}) {
        const auto c = load_case(name);
        const Vector p = c.scenario.injection.base();
        const PrimalDualPoint eq = rest_point(c, p, false);
        DppdConfig cfg;
        LyapunovOptions opts;
        for (int trial = 0; trial < 20; ++trial) {
            const PrimalDualPoint x = perturbed(rng, c.cost, eq, 0.3);
            const double ours = lyapunov_vb(*c.net, c.cost, cfg, x, eq, p, opts).total;
            const double dense = vb_dense(*c.net, c.cost, cfg.kappa, x, eq, p);
            CHECK_MESSAGE(std::abs(ours - dense) <= 1e-10 * std::max(1.0, std::abs(dense)), name);
        }
    }
}

TEST_CASE("V_b is nonnegative around every bundled equilibrium") {
    std::mt19937_64 rng(23);
    for (const auto& name : bundled_case_names()) {
        const auto c = load_case(name);
        const Vector p = c.scenario.injection.base();
        DppdConfig cfg;
        const PrimalDualPoint eq = rest_point(c, p, false);
        LyapunovOptions plain;
        double lowest = 0.0;
        for (int trial = 0; trial < 1000; ++trial) {
            const PrimalDualPoint x = perturbed(rng, c.cost, eq, trial % 2 == 0 ? 0.05 : 1.0);
            lowest = std::min(lowest, lyapunov_vb(*c.net, c.cost, cfg, x, eq, p, plain).total);
        }
        CHECK_MESSAGE(lowest >= -1e-12, name);

        // primed variant where no limit binds at the rest point
        try {
            const PrimalDualPoint limited = rest_point(c, p, true);
            LyapunovOptions primed;
            primed.thermal_limits = true;
            double lowest_primed = 0.0;
            for (int trial = 0; trial < 1000; ++trial) {
                const PrimalDualPoint x = perturbed(rng, c.cost, limited, 0.5);
                lowest_primed = std::min(lowest_primed, lyapunov_vb(*c.net, c.cost, cfg, x, limited, p, primed).total);
            }
            CHECK_MESSAGE(lowest_primed >= -1e-12, name);
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::BindingLimit);
        }
    }
}

TEST_CASE("rate report") {
    std::vector<double> t, zero, inv_sqrt, bumpy;
    for (int k = 0; k <= 1200; ++k) {
        const double s = 0.1 * k;
        t.push_back(s);
        zero.push_back(0.0);
        inv_sqrt.push_back(s > 0 ? 1.0 / std::sqrt(s) : 10.0);
        bumpy.push_back((k % 7 == 0 ? 3.0 : 1.0) / (1.0 + s));
    }
    const auto rest = rate_report(t, zero);
    CHECK(rest.pass);
    CHECK(rest.bound_final == 0.0);

    const auto exact = rate_report(t, inv_sqrt);
    CHECK(exact.pass);
    CHECK(exact.bound_t0 == doctest::Approx(1.0));
    CHECK(exact.bound_final == doctest::Approx(1.0));

    const auto r = rate_report(t, bumpy);
    for (std::size_t k = 1; k < r.envelope.size(); ++k) CHECK(r.envelope[k] <= r.envelope[k - 1]);

    // slower than 1/sqrt(t) fails
    std::vector<double> slow;
    for (double s : t) slow.push_back(1.0 / (1.0 + std::log1p(s)));
    CHECK_FALSE(rate_report(t, slow).pass);

    CHECK_THROWS_AS(rate_report(std::vector<double>{}, std::vector<double>{}), Error);
}

TEST_CASE("rate report of a two-bus pure optimization run") {
    const auto c = load_case("two_bus_analytic");
    SimulationSetup setup = make_setup(c, c.scenario);
    setup.config.mode = Mode::PureOpt;
    setup.config.rho = Stepsizes{};
    setup.horizon = 120.0;
    setup.sample_every = 0.1;
    CHECK(rate_report(simulate(setup)).pass);
}

TEST_CASE("equilibrium angle and flow residuals") {
    const auto net = triangle();
    const Vector theta = vec({0.3, -0.1, 0.05});
    const Vector flow = line_flows_from_angles(net, theta);
    const Vector w = Vector::Zero(3);

    const auto same = lemma2_check(net, theta, (theta.array() + 5.0).matrix(), flow, w);
    CHECK(same.angle_residual < 1e-14);
    CHECK(same.flow_residual == 0.0);
    CHECK(same.shift == doctest::Approx(-5.0));
    CHECK(same.shift_spread < 1e-14);

    Vector bent = theta;
    bent[1] += 1e-3;
    const auto off = lemma2_check(net, theta, bent, flow, w);
    CHECK(off.angle_residual > 0.0);
    CHECK(off.shift_spread == doctest::Approx(5e-4));
}

TEST_CASE("equilibrium residuals refuse unconverged trajectories") {
    const auto c = load_case("triangle");
    SimulationSetup setup = make_setup(c, c.scenario);
    setup.horizon = 0.5;
    const auto traj = simulate(setup);
    try {
        lemma2_check(*c.net, traj);
        FAIL("expected NotConverged");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::NotConverged);
    }
}

TEST_CASE("chatter metric") {
    std::vector<double> t, constant, wave;
    const double horizon = 16.0 * M_PI;
    for (int k = 0; k <= 16000; ++k) {
        const double s = horizon * k / 16000.0;
        t.push_back(s);
        constant.push_back(0.7);
        wave.push_back(std::sin(s + 0.3));
    }
    CHECK(chatter_metric(t, constant) == 0);
    CHECK(chatter_metric(t, wave) == 4);  // the last quarter spans 4 pi

    // values below the floor are ignored
    std::vector<double> tiny(t.size());
    for (std::size_t k = 0; k < t.size(); ++k) tiny[k] = 1e-12 * wave[k];
    CHECK(chatter_metric(t, tiny) == 0);
}

TEST_CASE("largest increase between samples") {
    CHECK(max_increase({3.0, 2.0, 2.5, 1.0}) == doctest::Approx(0.5));
    CHECK(max_increase({3.0, 2.0, 1.0}) == 0.0);
    CHECK(max_increase({1.0, 3.0}, 1.0) == doctest::Approx(1.0));
}
