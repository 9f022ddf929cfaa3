#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "gridfreq/dynamics.hpp"
#include "gridfreq/error.hpp"
#include "gridfreq/scenarios.hpp"
#include "gridfreq/simulation.hpp"
#include "support.hpp"

using namespace gridfreq;
using namespace testing;

namespace {

// flat packing theta | omega_gen | P for a plant-only integration
Vector pack(const PlantState& s) {
    Vector x(s.theta.size() + s.omega_gen.size() + s.line_flow.size());
    x << s.theta, s.omega_gen, s.line_flow;
    return x;
}

PlantState unpack(const PowerNetwork& net, const Vector& x) {
    const auto n = static_cast<Eigen::Index>(net.n_buses());
    const auto m = static_cast<Eigen::Index>(net.generator_buses().size());
    const auto l = static_cast<Eigen::Index>(net.n_lines());
    return {x.head(n), x.segment(n, m), x.tail(l)};
}

}  // namespace

TEST_CASE("load bus frequency from the local balance") {
    const auto lone = build_network({load(1.0)}, {});
    CHECK(load_bus_frequency(lone, vec({0.1}), Vector(0), vec({0.2}))[0] == doctest::Approx(0.1));
    CHECK(load_bus_frequency(lone, vec({0.2}), Vector(0), vec({0.2}))[0] == 0.0);

    // bus 1 is a load with D = 2; line (2 -> 1) carries 0.5 in, line (1 -> 3) carries 0.2 out
    const auto star = build_network({load(2.0), gen(), gen()}, {line(1, 0, 1.0), line(0, 2, 1.0)});
    const Vector omega =
        load_bus_frequency(star, vec({-0.3, 0.0, 0.0}), vec({0.5, 0.2}), vec({0.0, 0.0, 0.0}));
    REQUIRE(omega.size() == 1);
    CHECK(omega[0] == doctest::Approx(0.3).epsilon(1e-15));
}

TEST_CASE("single generator bus accelerates with the imbalance") {
    const auto lone = build_network({gen(8.0, 1.0)}, {});
    PlantState s = PlantState::zeros(lone);
    const PlantState rate = plant_rhs(lone, s, vec({0.0}), vec({0.5}));
    CHECK(rate.omega_gen[0] == doctest::Approx(0.0625).epsilon(1e-15));
    CHECK(rate.theta[0] == 0.0);
}

TEST_CASE("two-bus derivative by hand") {
    // gen M = 2, D = 1; load D = 1; B = 10
    const auto net = two_bus(10.0);
    const PlantState s{vec({0.1, 0.05}), vec({0.2}), vec({0.3})};
    const Vector d = vec({0.1, -0.2});
    const Vector p_in = vec({1.0, -0.4});
    const PlantState rate = plant_rhs(net, s, d, p_in);
    // load frequency (-0.4 + 0.2 + 0.3) / 1 = 0.1
    CHECK(rate.theta[0] == doctest::Approx(0.2).epsilon(1e-15));
    CHECK(rate.theta[1] == doctest::Approx(0.1).epsilon(1e-15));
    // (1 - 0.1 - 0.2 - 0.3) / 2
    CHECK(rate.omega_gen[0] == doctest::Approx(0.2).epsilon(1e-15));
    // 10 (0.2 - 0.1)
    CHECK(rate.line_flow[0] == doctest::Approx(1.0).epsilon(1e-14));

    const Vector omega = bus_frequencies(net, net.damping(), s, d, p_in);
    CHECK((rate.line_flow - line_flows_from_angles(net, omega)).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("equilibrium is stationary") {
    const auto net = two_bus(10.0);
    const PlantState s{vec({0.03, 0.0}), vec({0.0}), vec({0.3})};
    const PlantState rate = plant_rhs(net, s, vec({0.0, 0.0}), vec({0.3, -0.3}));
    CHECK(pack(rate).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("rk4 basics") {
    auto zero = [](double, const Vector& x) { return Vector(Vector::Zero(x.size())); };
    const Vector x0 = vec({1.0, -2.0});
    CHECK(rk4_step(zero, x0, 0.0, 0.1) == x0);

    auto decay = [](double, const Vector& x) { return Vector(-x); };
    CHECK(std::abs(rk4_step(decay, vec({1.0}), 0.0, 0.1)[0] - std::exp(-0.1)) < 1e-7);

    CHECK_THROWS_AS(rk4_step(decay, vec({1.0}), 0.0, -0.1), Error);
    auto blow = [](double, const Vector& x) { return Vector(Vector::Constant(x.size(), NAN)); };
    try {
        rk4_step(blow, vec({1.0}), 0.0, 0.1);
        FAIL("expected NonFiniteState");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::NonFiniteState);
    }
}

TEST_CASE("rk4 converges at fourth order on the two-bus plant") {
    const auto net = two_bus(10.0);
    const Vector d = vec({0.1, -0.2});
    const Vector p_in = vec({1.0, -0.4});
    auto rhs = [&](double, const Vector& x) { return pack(plant_rhs(net, unpack(net, x), d, p_in)); };
    auto solve = [&](double h) {
        Vector x = pack(PlantState::zeros(net));
        const int steps = static_cast<int>(std::lround(2.0 / h));
        for (int k = 0; k < steps; ++k) x = rk4_step(rhs, x, k * h, h);
        return x;
    };
    const Vector coarse = solve(0.04), mid = solve(0.02), fine = solve(0.01);
    const double ratio = (coarse - mid).norm() / (mid - fine).norm();
    CHECK(ratio > 13.0);
    CHECK(ratio < 19.0);
}

TEST_CASE("closed-loop runs are invariant to an angle offset") {
    const auto c = load_case("triangle");
    SimulationSetup base = make_setup(c, c.scenario);
    base.horizon = 3.0;
    base.sample_every = 0.5;
    SimulationSetup shifted = base;
    shifted.initial.theta = Vector::Constant(3, 2.5);

    const auto a = simulate(base);
    const auto b = simulate(shifted);
    const auto& L = a.layout;
    for (std::size_t k = 0; k < a.samples.size(); ++k) {
        CHECK((a.samples[k].omega - b.samples[k].omega).cwiseAbs().maxCoeff() < 1e-12);
        CHECK((L.bus_block(a.samples[k].x, L.d()) - L.bus_block(b.samples[k].x, L.d())).cwiseAbs().maxCoeff() < 1e-12);
    }
}

TEST_CASE("global balance closes at steady state") {
    for (const char* name : {"two_bus_analytic", "triangle", "generator_ring"}) {
        const auto c = load_case(name);
        SimulationSetup setup = make_setup(c, c.scenario);
        setup.horizon = 200.0;
        setup.sample_every = 1.0;
        setup.stop_tolerance = 1e-8;
        const auto traj = simulate(setup);
        const auto& last = traj.final();
        const Vector d = traj.layout.bus_block(last.x, traj.layout.d());
        const double residual = (last.p_in - d - c.net->damping().cwiseProduct(last.omega)).sum();
        CHECK_MESSAGE(std::abs(residual) < 1e-6, name);
    }
}
