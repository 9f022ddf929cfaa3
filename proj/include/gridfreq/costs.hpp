#pragma once

#include <cstddef>
#include <vector>

#include "gridfreq/network.hpp"

namespace gridfreq {

/// Cost of adjusting the controllable load at one bus:
///   f(d) = k (a d^2 + e d)  +  indicator(d in [d_min, d_max])  +  k b |d + c|
/// Buses without a controllable load are pinned at d = 0.
struct BusCost {
    bool controllable = false;
    double a = 0.0;
    double e = 0.0;
    double b = 0.0;
    double c = 0.0;
    double d_min = 0.0;
    double d_max = 0.0;
};

struct CostModel {
    std::vector<BusCost> buses;
    double scale = 1.0;  // k >= 1, multiplies the smooth and l1 parts

    std::size_t size() const noexcept { return buses.size(); }
    bool controllable(std::size_t i) const { return buses[i].controllable; }
};

struct Interval {
    double lo = 0.0;
    double hi = 0.0;

    double distance(double x) const {
        if (x < lo) return lo - x;
        if (x > hi) return x - hi;
        return 0.0;
    }
};

/// Validates coefficients (a, b >= 0, d_min < d_max for controllable buses).
CostModel make_cost_model(std::vector<BusCost> buses, double scale = 1.0);

/// 2 k min_i a_i over controllable buses.
double strong_convexity(const CostModel& cost);

/// Picks the smallest power-of-two k with 2 k min_i a_i > 1.
/// Throws ZeroCurvature if some controllable bus has a = 0.
CostModel scale_for_strong_convexity(const CostModel& cost);

/// k (2 a_i d_i + e_i) per bus; zero on uncontrollable buses.
Vector grad_f0(const CostModel& cost, const Vector& d);

/// sign(z) max(|z| - tau, 0); returns 0 at the tie |z| = tau.
double soft_threshold(double z, double tau);

double prox_box(const CostModel& cost, std::size_t bus, double y);

/// argmin_x k b |x + c| + (x - y)^2 / 2.
double prox_l1_shifted(const CostModel& cost, std::size_t bus, double y);

/// Sum of k (a d^2 + e d) over controllable buses.
double eval_smooth_cost(const CostModel& cost, const Vector& d);

/// Total cost, or +infinity when some d_i lies outside its box.
double eval_total_cost(const CostModel& cost, const Vector& d);

/// Subdifferential of f_i at d as an interval (possibly unbounded).
/// Points within `active_tol` of a box bound or of the l1 kink are treated
/// as lying on it. Uncontrollable buses return the whole real line.
Interval subdifferential(const CostModel& cost, std::size_t bus, double d, double active_tol = 1e-8);

}  // namespace gridfreq
