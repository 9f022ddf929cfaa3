#include "gridfreq/costs.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "gridfreq/error.hpp"

namespace gridfreq {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

CostModel make_cost_model(std::vector<BusCost> buses, double scale) {
    if (!(scale >= 1.0)) throw Error(ErrorCode::ValidationError, "cost scale k must be >= 1");
    for (std::size_t i = 0; i < buses.size(); ++i) {
        auto& bus = buses[i];
        if (!bus.controllable) {
            bus = BusCost{};
            continue;
        }
        const auto label = "bus " + std::to_string(i + 1);
        if (!(bus.a >= 0.0) || !(bus.b >= 0.0)) {
            throw Error(ErrorCode::NonpositiveParameter, label + " cost needs a >= 0 and b >= 0");
        }
        if (!(bus.d_min < bus.d_max)) {
            throw Error(ErrorCode::ValidationError, label + " cost needs dmin < dmax");
        }
    }
    return CostModel{std::move(buses), scale};
}

double strong_convexity(const CostModel& cost) {
    double min_a = kInf;
    for (const auto& bus : cost.buses) {
        if (bus.controllable) min_a = std::min(min_a, bus.a);
    }
    return min_a == kInf ? kInf : 2.0 * cost.scale * min_a;
}

CostModel scale_for_strong_convexity(const CostModel& cost) {
    double min_a = kInf;
    for (std::size_t i = 0; i < cost.size(); ++i) {
        if (!cost.buses[i].controllable) continue;
        if (cost.buses[i].a <= 0.0) {
            throw Error(ErrorCode::ZeroCurvature,
                        "bus " + std::to_string(i + 1) + " has a = 0; no scaling makes f0 strongly convex");
        }
        min_a = std::min(min_a, cost.buses[i].a);
    }
    CostModel scaled = cost;
    scaled.scale = 1.0;
    if (min_a == kInf) return scaled;
    while (!(2.0 * scaled.scale * min_a > 1.0)) scaled.scale *= 2.0;
    return scaled;
}

Vector grad_f0(const CostModel& cost, const Vector& d) {
    require_size(static_cast<std::size_t>(d.size()), cost.size(), "load vector");
    Vector g = Vector::Zero(d.size());
    for (std::size_t i = 0; i < cost.size(); ++i) {
        const auto& bus = cost.buses[i];
        if (!bus.controllable) continue;
        const auto k = static_cast<Eigen::Index>(i);
        g[k] = cost.scale * (2.0 * bus.a * d[k] + bus.e);
    }
    return g;
}

double soft_threshold(double z, double tau) {
    if (z > tau) return z - tau;
    if (z < -tau) return z + tau;
    return 0.0;
}

double prox_box(const CostModel& cost, std::size_t bus, double y) {
    const auto& c = cost.buses[bus];
    return std::clamp(y, c.d_min, c.d_max);
}

double prox_l1_shifted(const CostModel& cost, std::size_t bus, double y) {
    const auto& c = cost.buses[bus];
    return soft_threshold(y + c.c, cost.scale * c.b) - c.c;
}

double eval_smooth_cost(const CostModel& cost, const Vector& d) {
    require_size(static_cast<std::size_t>(d.size()), cost.size(), "load vector");
    double total = 0.0;
    for (std::size_t i = 0; i < cost.size(); ++i) {
        const auto& bus = cost.buses[i];
        if (!bus.controllable) continue;
        const double x = d[static_cast<Eigen::Index>(i)];
        total += cost.scale * (bus.a * x * x + bus.e * x);
    }
    return total;
}

double eval_total_cost(const CostModel& cost, const Vector& d) {
    require_size(static_cast<std::size_t>(d.size()), cost.size(), "load vector");
    double total = 0.0;
    for (std::size_t i = 0; i < cost.size(); ++i) {
        const auto& bus = cost.buses[i];
        const double x = d[static_cast<Eigen::Index>(i)];
        if (x < bus.d_min || x > bus.d_max) return kInf;
        if (!bus.controllable) continue;
        total += cost.scale * (bus.a * x * x + bus.e * x + bus.b * std::abs(x + bus.c));
    }
    return total;
}

Interval subdifferential(const CostModel& cost, std::size_t bus, double d, double active_tol) {
    const auto& c = cost.buses[bus];
    if (!c.controllable) return {-kInf, kInf};

    const double grad = cost.scale * (2.0 * c.a * d + c.e);
    const double weight = cost.scale * c.b;
    Interval out{grad, grad};

    const double shifted = d + c.c;
    if (std::abs(shifted) <= active_tol) {
        out.lo -= weight;
        out.hi += weight;
    } else if (shifted > 0.0) {
        out.lo += weight;
        out.hi += weight;
    } else {
        out.lo -= weight;
        out.hi -= weight;
    }

    if (d <= c.d_min + active_tol) out.lo = -kInf;
    if (d >= c.d_max - active_tol) out.hi = kInf;
    return out;
}

}  // namespace gridfreq
