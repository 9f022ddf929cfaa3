#pragma once

#include <random>
#include <string>
#include <vector>

#include "gridfreq/costs.hpp"
#include "gridfreq/network.hpp"

namespace testing {

using gridfreq::BusKind;
using gridfreq::BusSpec;
using gridfreq::Line;
using gridfreq::Vector;

inline BusSpec gen(double inertia = 2.0, double damping = 1.0) { return {BusKind::Generator, inertia, damping}; }
inline BusSpec load(double damping = 1.0) { return {BusKind::Load, 0.0, damping}; }

inline Line line(std::size_t from, std::size_t to, double b, double lo = -5.0, double hi = 5.0) {
    return {from, to, b, lo, hi};
}

inline gridfreq::PowerNetwork two_bus(double b = 10.0) {
    return gridfreq::build_network({gen(), load()}, {line(0, 1, b)});
}

// lines (1,2), (2,3), (1,3), unit susceptance
inline gridfreq::PowerNetwork triangle(BusSpec a = gen(), BusSpec b = load(), BusSpec c = load()) {
    return gridfreq::build_network({a, b, c}, {line(0, 1, 1.0), line(1, 2, 1.0), line(0, 2, 1.0)});
}

inline gridfreq::BusCost quad(double a, double b = 0.0, double c = 0.0, double lo = -1.5, double hi = 1.5,
                              double e = 0.0) {
    gridfreq::BusCost cost;
    cost.controllable = true;
    cost.a = a;
    cost.e = e;
    cost.b = b;
    cost.c = c;
    cost.d_min = lo;
    cost.d_max = hi;
    return cost;
}

inline Vector vec(std::initializer_list<double> values) {
    Vector v(static_cast<Eigen::Index>(values.size()));
    Eigen::Index k = 0;
    for (double x : values) v[k++] = x;
    return v;
}

inline Vector random_vector(std::mt19937_64& rng, Eigen::Index size, double lo, double hi) {
    std::uniform_real_distribution<double> dist(lo, hi);
    Vector v(size);
    for (Eigen::Index k = 0; k < size; ++k) v[k] = dist(rng);
    return v;
}

inline std::string fixture_path(const std::string& name) {
    return std::string(GRIDFREQ_FIXTURE_DIR) + "/" + name + "_oracle.json";
}

}  // namespace testing
