#pragma once

#include <cmath>
#include <string>

#include "gridfreq/error.hpp"
#include "gridfreq/network.hpp"

namespace gridfreq {

/// Physical state of the linearized swing model. Load-bus frequencies are
/// not stored; they follow from the algebraic balance at each load bus.
struct PlantState {
    Vector theta;      // all buses [rad]
    Vector omega_gen;  // generator buses, in generator_buses() order
    Vector line_flow;  // per line

    static PlantState zeros(const PowerNetwork& net);
};

/// Frequency at each load bus (load_buses() order) from the power balance
///   0 = P_in - D w - d + inflow - outflow.
/// `damping` is the per-bus D actually present in the plant.
Vector load_bus_frequency(const PowerNetwork& net, const Vector& damping, const Vector& d,
                          const Vector& line_flow, const Vector& p_in);
Vector load_bus_frequency(const PowerNetwork& net, const Vector& d, const Vector& line_flow,
                          const Vector& p_in);

/// Frequency at every bus: generator buses from the state, load buses algebraic.
Vector bus_frequencies(const PowerNetwork& net, const Vector& damping, const PlantState& state,
                       const Vector& d, const Vector& p_in);

PlantState plant_rhs(const PowerNetwork& net, const Vector& damping, const PlantState& state,
                     const Vector& d, const Vector& p_in);
PlantState plant_rhs(const PowerNetwork& net, const PlantState& state, const Vector& d,
                     const Vector& p_in);

inline void require_finite(const Vector& x, double t) {
    if (!x.allFinite()) {
        throw Error(ErrorCode::NonFiniteState, "state became non-finite near t = " + std::to_string(t));
    }
}

/// One classical fourth-order Runge-Kutta step of x' = rhs(t, x).
/// The slope at the start of the step is written to `slope0` so callers can
/// log derivatives without an extra evaluation.
template <class Rhs>
Vector rk4_step(Rhs&& rhs, const Vector& x, double t, double h, Vector* slope0 = nullptr) {
    if (!(h > 0.0)) throw Error(ErrorCode::ValidationError, "h must be positive");
    const Vector k1 = rhs(t, x);
    const Vector k2 = rhs(t + 0.5 * h, Vector(x + 0.5 * h * k1));
    const Vector k3 = rhs(t + 0.5 * h, Vector(x + 0.5 * h * k2));
    const Vector k4 = rhs(t + h, Vector(x + h * k3));
    Vector next = x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    require_finite(next, t + h);
    if (slope0 != nullptr) *slope0 = k1;
    return next;
}

}  // namespace gridfreq
