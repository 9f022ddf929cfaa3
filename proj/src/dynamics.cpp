#include "gridfreq/dynamics.hpp"

namespace gridfreq {

PlantState PlantState::zeros(const PowerNetwork& net) {
    return PlantState{Vector::Zero(static_cast<Eigen::Index>(net.n_buses())),
                      Vector::Zero(static_cast<Eigen::Index>(net.generator_buses().size())),
                      Vector::Zero(static_cast<Eigen::Index>(net.n_lines()))};
}

Vector load_bus_frequency(const PowerNetwork& net, const Vector& damping, const Vector& d,
                          const Vector& line_flow, const Vector& p_in) {
    const auto n = net.n_buses();
    require_size(static_cast<std::size_t>(d.size()), n, "load vector d");
    require_size(static_cast<std::size_t>(p_in.size()), n, "injection vector");
    require_size(static_cast<std::size_t>(damping.size()), n, "damping vector");
    const Vector outflow = incidence_times(net, line_flow);
    const auto& loads = net.load_buses();
    Vector omega(static_cast<Eigen::Index>(loads.size()));
    for (std::size_t k = 0; k < loads.size(); ++k) {
        const auto i = static_cast<Eigen::Index>(loads[k]);
        omega[static_cast<Eigen::Index>(k)] = (p_in[i] - d[i] - outflow[i]) / damping[i];
    }
    return omega;
}

Vector load_bus_frequency(const PowerNetwork& net, const Vector& d, const Vector& line_flow,
                          const Vector& p_in) {
    return load_bus_frequency(net, net.damping(), d, line_flow, p_in);
}

Vector bus_frequencies(const PowerNetwork& net, const Vector& damping, const PlantState& state,
                       const Vector& d, const Vector& p_in) {
    require_size(static_cast<std::size_t>(state.omega_gen.size()), net.generator_buses().size(),
                 "generator frequency vector");
    Vector omega(static_cast<Eigen::Index>(net.n_buses()));
    const auto& gens = net.generator_buses();
    for (std::size_t k = 0; k < gens.size(); ++k) {
        omega[static_cast<Eigen::Index>(gens[k])] = state.omega_gen[static_cast<Eigen::Index>(k)];
    }
    const Vector load_omega = load_bus_frequency(net, damping, d, state.line_flow, p_in);
    const auto& loads = net.load_buses();
    for (std::size_t k = 0; k < loads.size(); ++k) {
        omega[static_cast<Eigen::Index>(loads[k])] = load_omega[static_cast<Eigen::Index>(k)];
    }
    return omega;
}

PlantState plant_rhs(const PowerNetwork& net, const Vector& damping, const PlantState& state,
                     const Vector& d, const Vector& p_in) {
    require_size(static_cast<std::size_t>(state.theta.size()), net.n_buses(), "angle vector");
    require_size(static_cast<std::size_t>(state.line_flow.size()), net.n_lines(), "line flow vector");
    const Vector omega = bus_frequencies(net, damping, state, d, p_in);
    const Vector outflow = incidence_times(net, state.line_flow);

    PlantState rate;
    rate.theta = omega;
    rate.line_flow = net.susceptance().cwiseProduct(incidence_transpose_times(net, omega));
    const auto& gens = net.generator_buses();
    rate.omega_gen.resize(static_cast<Eigen::Index>(gens.size()));
    for (std::size_t k = 0; k < gens.size(); ++k) {
        const auto i = static_cast<Eigen::Index>(gens[k]);
        rate.omega_gen[static_cast<Eigen::Index>(k)] =
            (p_in[i] - damping[i] * omega[i] - d[i] - outflow[i]) / net.buses()[gens[k]].inertia;
    }
    return rate;
}

PlantState plant_rhs(const PowerNetwork& net, const PlantState& state, const Vector& d, const Vector& p_in) {
    return plant_rhs(net, net.damping(), state, d, p_in);
}

}  // namespace gridfreq
