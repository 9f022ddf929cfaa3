#include "gridfreq/network.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <queue>
#include <set>
#include <string>
#include <utility>

#include <Eigen/Dense>

#include "gridfreq/error.hpp"

namespace gridfreq {

namespace {

std::string bus_label(std::size_t bus) { return "bus " + std::to_string(bus + 1); }

std::string line_label(const Line& line) {
    return "line " + std::to_string(line.from + 1) + "->" + std::to_string(line.to + 1);
}

bool connected(std::size_t n, const std::vector<Line>& lines) {
    if (n == 0) return false;
    std::vector<std::vector<std::size_t>> adjacency(n);
    for (const auto& line : lines) {
        adjacency[line.from].push_back(line.to);
        adjacency[line.to].push_back(line.from);
    }
    std::vector<bool> seen(n, false);
    std::queue<std::size_t> frontier;
    frontier.push(0);
    seen[0] = true;
    std::size_t reached = 1;
    while (!frontier.empty()) {
        const auto bus = frontier.front();
        frontier.pop();
        for (auto next : adjacency[bus]) {
            if (!seen[next]) {
                seen[next] = true;
                ++reached;
                frontier.push(next);
            }
        }
    }
    return reached == n;
}

}  // namespace

PowerNetwork build_network(std::vector<BusSpec> buses, std::vector<Line> lines) {
    const auto n = buses.size();
    if (n == 0) throw Error(ErrorCode::ValidationError, "network has no buses");

    for (std::size_t i = 0; i < n; ++i) {
        const auto& bus = buses[i];
        if (!(bus.damping > 0.0) || !std::isfinite(bus.damping)) {
            throw Error(ErrorCode::NonpositiveParameter, bus_label(i) + " damping D must be > 0");
        }
        if (bus.kind == BusKind::Generator && (!(bus.inertia > 0.0) || !std::isfinite(bus.inertia))) {
            throw Error(ErrorCode::NonpositiveParameter, bus_label(i) + " inertia M must be > 0");
        }
    }

    std::set<std::pair<std::size_t, std::size_t>> seen_pairs;
    for (const auto& line : lines) {
        if (line.from >= n || line.to >= n) {
            throw Error(ErrorCode::ValidationError, line_label(line) + " references an unknown bus");
        }
        if (line.from == line.to) {
            throw Error(ErrorCode::ValidationError, line_label(line) + " is a self loop");
        }
        if (!(line.susceptance > 0.0) || !std::isfinite(line.susceptance)) {
            throw Error(ErrorCode::NonpositiveParameter, line_label(line) + " susceptance B must be > 0");
        }
        if (!(line.flow_min < line.flow_max)) {
            throw Error(ErrorCode::BadThermalLimits, line_label(line) + " needs Pmin < Pmax");
        }
        const auto key = std::minmax(line.from, line.to);
        if (!seen_pairs.insert(key).second) {
            throw Error(ErrorCode::DuplicateLine, line_label(line) + " duplicates an existing line");
        }
    }

    if (!connected(n, lines)) {
        throw Error(ErrorCode::DisconnectedGraph, "network graph is not connected");
    }

    PowerNetwork net;
    const auto l = lines.size();
    net.damping_.resize(static_cast<Eigen::Index>(n));
    net.generator_slot_.assign(n, PowerNetwork::npos);
    for (std::size_t i = 0; i < n; ++i) {
        net.damping_[static_cast<Eigen::Index>(i)] = buses[i].damping;
        if (buses[i].kind == BusKind::Generator) {
            net.generator_slot_[i] = net.generators_.size();
            net.generators_.push_back(i);
        } else {
            buses[i].inertia = 0.0;
            net.loads_.push_back(i);
        }
    }

    net.susceptance_.resize(static_cast<Eigen::Index>(l));
    net.flow_min_.resize(static_cast<Eigen::Index>(l));
    net.flow_max_.resize(static_cast<Eigen::Index>(l));
    net.incidence_ = Matrix::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(l));
    for (std::size_t e = 0; e < l; ++e) {
        const auto idx = static_cast<Eigen::Index>(e);
        net.susceptance_[idx] = lines[e].susceptance;
        net.flow_min_[idx] = lines[e].flow_min;
        net.flow_max_[idx] = lines[e].flow_max;
        net.incidence_(static_cast<Eigen::Index>(lines[e].from), idx) = 1.0;
        net.incidence_(static_cast<Eigen::Index>(lines[e].to), idx) = -1.0;
    }

    net.buses_ = std::move(buses);
    net.lines_ = std::move(lines);
    return net;
}

Matrix weighted_laplacian(const PowerNetwork& net) {
    const auto& c = net.incidence();
    return c * net.susceptance().asDiagonal() * c.transpose();
}

Vector line_flows_from_angles(const PowerNetwork& net, const Vector& angles) {
    require_size(static_cast<std::size_t>(angles.size()), net.n_buses(), "angle vector");
    return net.susceptance().cwiseProduct(incidence_transpose_times(net, angles));
}

Vector incidence_times(const PowerNetwork& net, const Vector& line_values) {
    require_size(static_cast<std::size_t>(line_values.size()), net.n_lines(), "line vector");
    Vector out = Vector::Zero(static_cast<Eigen::Index>(net.n_buses()));
    const auto& lines = net.lines();
    for (std::size_t e = 0; e < lines.size(); ++e) {
        const double v = line_values[static_cast<Eigen::Index>(e)];
        out[static_cast<Eigen::Index>(lines[e].from)] += v;
        out[static_cast<Eigen::Index>(lines[e].to)] -= v;
    }
    return out;
}

Vector incidence_transpose_times(const PowerNetwork& net, const Vector& bus_values) {
    require_size(static_cast<std::size_t>(bus_values.size()), net.n_buses(), "bus vector");
    const auto& lines = net.lines();
    Vector out(static_cast<Eigen::Index>(lines.size()));
    for (std::size_t e = 0; e < lines.size(); ++e) {
        out[static_cast<Eigen::Index>(e)] = bus_values[static_cast<Eigen::Index>(lines[e].from)] -
                                            bus_values[static_cast<Eigen::Index>(lines[e].to)];
    }
    return out;
}

Vector laplacian_times(const PowerNetwork& net, const Vector& bus_values) {
    return incidence_times(net, line_flows_from_angles(net, bus_values));
}

// ---------------------------------------------------------------------------

InjectionProfile::InjectionProfile(Vector base, std::vector<InjectionEvent> events)
    : base_(std::move(base)), events_(std::move(events)) {
    for (const auto& event : events_) {
        if (const auto* step = std::get_if<StepEvent>(&event)) {
            if (step->bus >= size()) throw Error(ErrorCode::ValidationError, "step event bus out of range");
        } else {
            const auto& wave = std::get<SinusoidEvent>(event);
            for (auto bus : wave.buses) {
                if (bus >= size()) throw Error(ErrorCode::ValidationError, "sinusoid bus out of range");
            }
            if (!(wave.period > 0.0)) throw Error(ErrorCode::ValidationError, "sinusoid period must be > 0");
        }
    }
}

namespace {

struct ValueAndRate {
    Vector value;
    Vector rate;
};

ValueAndRate evaluate(const Vector& base, const std::vector<InjectionEvent>& events, double t) {
    ValueAndRate out{base, Vector::Zero(base.size())};
    for (const auto& event : events) {
        if (const auto* step = std::get_if<StepEvent>(&event)) {
            if (t >= step->time) {
                const auto i = static_cast<Eigen::Index>(step->bus);
                out.value[i] = step->value;
                out.rate[i] = 0.0;
            }
            continue;
        }
        const auto& wave = std::get<SinusoidEvent>(event);
        if (t < wave.start || t >= wave.end) continue;
        const double omega = 2.0 * std::numbers::pi / wave.period;
        const double factor = 1.0 + wave.amplitude * std::sin(omega * t);
        const double factor_rate = wave.amplitude * omega * std::cos(omega * t);
        for (auto bus : wave.buses) {
            const auto i = static_cast<Eigen::Index>(bus);
            out.rate[i] = out.rate[i] * factor + out.value[i] * factor_rate;
            out.value[i] *= factor;
        }
    }
    return out;
}

}  // namespace

Vector InjectionProfile::at(double t) const { return evaluate(base_, events_, t).value; }

Vector InjectionProfile::rate(double t) const { return evaluate(base_, events_, t).rate; }

Vector dc_angles(const PowerNetwork& net, const Vector& injection) {
    require_size(static_cast<std::size_t>(injection.size()), net.n_buses(), "injection");
    const auto n = static_cast<Eigen::Index>(net.n_buses());
    Vector theta = Vector::Zero(n);
    if (n == 1) return theta;
    const Matrix lap = weighted_laplacian(net);
    const Eigen::LDLT<Matrix> solver(lap.topLeftCorner(n - 1, n - 1));
    theta.head(n - 1) = solver.solve(injection.head(n - 1));
    theta.array() -= theta.mean();
    return theta;
}

}  // namespace gridfreq
