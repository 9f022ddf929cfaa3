#pragma once

#include <cstddef>
#include <span>
#include <variant>
#include <vector>

#include <Eigen/Dense>

namespace gridfreq {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

enum class BusKind { Generator, Load };

struct BusSpec {
    BusKind kind = BusKind::Load;
    double inertia = 0.0;  // M_i, only meaningful for generator buses
    double damping = 0.0;  // D_i
};

/// A directed line; the (from, to) order fixes the sign of its flow.
struct Line {
    std::size_t from = 0;  // 0-based bus index
    std::size_t to = 0;
    double susceptance = 0.0;
    double flow_min = 0.0;
    double flow_max = 0.0;
};

/// Immutable, validated power network graph.
///
/// Bus indices are 0-based. Buses are either generator buses, whose
/// frequency is a differential state, or load buses, whose frequency is
/// determined algebraically by the local power balance.
class PowerNetwork {
public:
    std::size_t n_buses() const noexcept { return buses_.size(); }
    std::size_t n_lines() const noexcept { return lines_.size(); }

    const std::vector<BusSpec>& buses() const noexcept { return buses_; }
    const std::vector<Line>& lines() const noexcept { return lines_; }
    const std::vector<std::size_t>& generator_buses() const noexcept { return generators_; }
    const std::vector<std::size_t>& load_buses() const noexcept { return loads_; }

    bool is_generator(std::size_t bus) const { return buses_[bus].kind == BusKind::Generator; }
    /// Position of a generator bus within generator_buses(), or npos for load buses.
    std::size_t generator_slot(std::size_t bus) const { return generator_slot_[bus]; }

    const Vector& damping() const noexcept { return damping_; }
    const Vector& susceptance() const noexcept { return susceptance_; }
    const Vector& flow_min() const noexcept { return flow_min_; }
    const Vector& flow_max() const noexcept { return flow_max_; }
    /// n x l incidence matrix C, +1 at the source bus and -1 at the sink bus of each line.
    const Matrix& incidence() const noexcept { return incidence_; }

    static constexpr std::size_t npos = static_cast<std::size_t>(-1);

private:
    friend PowerNetwork build_network(std::vector<BusSpec> buses, std::vector<Line> lines);
    PowerNetwork() = default;

    std::vector<BusSpec> buses_;
    std::vector<Line> lines_;
    std::vector<std::size_t> generators_;
    std::vector<std::size_t> loads_;
    std::vector<std::size_t> generator_slot_;
    Vector damping_;
    Vector susceptance_;
    Vector flow_min_;
    Vector flow_max_;
    Matrix incidence_;
};

/// Validates the raw description and builds the network.
/// Throws Error with DisconnectedGraph, NonpositiveParameter, BadThermalLimits,
/// DuplicateLine or ValidationError (bad bus index, self loop).
PowerNetwork build_network(std::vector<BusSpec> buses, std::vector<Line> lines);

/// C diag(B) C^T.
Matrix weighted_laplacian(const PowerNetwork& net);

/// Per-line DC flow B_ij (theta_i - theta_j), in line order.
Vector line_flows_from_angles(const PowerNetwork& net, const Vector& angles);

/// DC angles solving C B C^T theta = p with theta summing to zero.
Vector dc_angles(const PowerNetwork& net, const Vector& injection);

// Sparse-by-construction products used in the integration hot path. They
// agree with the dense incidence()/weighted_laplacian() products.

/// C x for a line vector x: net outflow per bus.
Vector incidence_times(const PowerNetwork& net, const Vector& line_values);
/// C^T y for a bus vector y: per-line difference y_from - y_to.
Vector incidence_transpose_times(const PowerNetwork& net, const Vector& bus_values);
/// C B C^T x.
Vector laplacian_times(const PowerNetwork& net, const Vector& bus_values);

// ---------------------------------------------------------------------------
// Injection profiles

/// Sets the injection of one bus from `time` onwards.
struct StepEvent {
    double time = 0.0;
    std::size_t bus = 0;
    double value = 0.0;
};

/// Multiplies the injection of `buses` by (1 + amplitude sin(2 pi t / period))
/// for t in [start, end).
struct SinusoidEvent {
    std::vector<std::size_t> buses;
    double amplitude = 0.0;
    double period = 1.0;
    double start = 0.0;
    double end = 0.0;
};

using InjectionEvent = std::variant<StepEvent, SinusoidEvent>;

/// Uncontrollable power injection P^in(t); modifiers apply in list order.
class InjectionProfile {
public:
    InjectionProfile() = default;
    explicit InjectionProfile(Vector base, std::vector<InjectionEvent> events = {});

    const Vector& base() const noexcept { return base_; }
    const std::vector<InjectionEvent>& events() const noexcept { return events_; }
    std::size_t size() const noexcept { return static_cast<std::size_t>(base_.size()); }

    Vector at(double t) const;
    /// Time derivative of at(t), zero away from sinusoid windows.
    Vector rate(double t) const;

private:
    Vector base_;
    std::vector<InjectionEvent> events_;
};

}  // namespace gridfreq
