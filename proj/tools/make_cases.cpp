// Regenerates the bundled case files. Coefficient draws and Slater points
// are computed here and written out as literals.
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "gridfreq/network.hpp"
#include "gridfreq/oracle.hpp"
#include "gridfreq/scenarios.hpp"

using gridfreq::Vector;
using ojson = nlohmann::ordered_json;

namespace {

struct BusRow {
    bool gen;
    double M;
    double D;
    double pin;
};

struct LineRow {
    int from;
    int to;
    double B;
    double pmin;
    double pmax;
};

struct CostRow {
    int bus;
    double a;
    double b;
    double c;
    double dmin;
    double dmax;
};

ojson vec_json(const Vector& v) {
    ojson arr = ojson::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v[i]);
    return arr;
}

ojson network_json(const std::vector<BusRow>& buses, const std::vector<LineRow>& lines) {
    ojson out;
    ojson b = ojson::array();
    for (std::size_t i = 0; i < buses.size(); ++i) {
        ojson row;
        row["id"] = i + 1;
        row["type"] = buses[i].gen ? "gen" : "load";
        if (buses[i].gen) row["M"] = buses[i].M;
        row["D"] = buses[i].D;
        row["Pin"] = buses[i].pin;
        b.push_back(row);
    }
    ojson l = ojson::array();
    for (const auto& line : lines) {
        l.push_back({{"from", line.from}, {"to", line.to}, {"B", line.B}, {"Pmin", line.pmin}, {"Pmax", line.pmax}});
    }
    out["buses"] = b;
    out["lines"] = l;
    return out;
}

ojson costs_json(const std::vector<CostRow>& costs) {
    ojson arr = ojson::array();
    for (const auto& c : costs) {
        arr.push_back({{"bus", c.bus}, {"a", c.a}, {"b", c.b}, {"c", c.c}, {"dmin", c.dmin}, {"dmax", c.dmax}});
    }
    return arr;
}

// Interior loads spread the imbalance evenly over the controllable buses
// unless explicit loads are given.
ojson slater_json(const std::vector<BusRow>& buses, const std::vector<LineRow>& lines,
                  const std::vector<CostRow>& costs, const std::vector<double>& loads) {
    std::vector<gridfreq::BusSpec> specs;
    Vector pin(static_cast<Eigen::Index>(buses.size()));
    for (std::size_t i = 0; i < buses.size(); ++i) {
        specs.push_back({buses[i].gen ? gridfreq::BusKind::Generator : gridfreq::BusKind::Load, buses[i].M, buses[i].D});
        pin[static_cast<Eigen::Index>(i)] = buses[i].pin;
    }
    std::vector<gridfreq::Line> ls;
    for (const auto& l : lines) {
        ls.push_back({static_cast<std::size_t>(l.from - 1), static_cast<std::size_t>(l.to - 1), l.B, l.pmin, l.pmax});
    }
    const auto net = gridfreq::build_network(specs, ls);
    Vector d = Vector::Zero(pin.size());
    for (const auto& c : costs) d[c.bus - 1] = pin.sum() / static_cast<double>(costs.size());
    for (std::size_t i = 0; i < loads.size(); ++i) d[static_cast<Eigen::Index>(i)] = loads[i];
    const Vector theta = gridfreq::dc_angles(net, pin - d);
    return {{"d", vec_json(d)}, {"theta", vec_json(theta)}};
}

void write(const std::filesystem::path& dir, const std::string& name, const ojson& doc) {
    std::ofstream out(dir / (name + ".json"));
    out << doc.dump(2) << "\n";
    std::cout << "wrote " << (dir / (name + ".json")).string() << "\n";
}

ojson base_case(const std::string& name, const std::string& description, const std::vector<BusRow>& buses,
                const std::vector<LineRow>& lines, const std::vector<CostRow>& costs,
                const std::vector<double>& slater_loads = {}) {
    ojson doc;
    doc["name"] = name;
    doc["description"] = description;
    const ojson net = network_json(buses, lines);
    doc["buses"] = net["buses"];
    doc["lines"] = net["lines"];
    doc["costs"] = costs_json(costs);
    doc["cost_scale"] = "auto";
    doc["slater"] = slater_json(buses, lines, costs, slater_loads);
    return doc;
}

// Closed-loop stepsizes for the two-bus cases: faster price and l1 tracker
// flows than the analysis values.
ojson fast_prices() { return {{"rho", {{"eta", 2.0}, {"mu", 2.0}}}}; }

void two_bus_cases(const std::filesystem::path& dir) {
    const std::vector<BusRow> buses{{true, 2.0, 1.0, 1.0}, {false, 0.0, 1.0, -0.2}};
    const std::vector<LineRow> lines{{1, 2, 1.0, -2.0, 2.0}};
    auto doc = base_case("two_bus_analytic", "Generator and load bus, quadratic costs a = (1, 2), net injection 0.8.",
                         buses, lines, {{1, 1.0, 0.0, 0.0, -1.5, 1.5}, {2, 2.0, 0.0, 0.0, -1.5, 1.5}});
    doc["controller"] = fast_prices();
    doc["scenario"] = {{"T", 60.0}, {"h", 1e-3}, {"sample_every", 0.01}};
    write(dir, "two_bus_analytic", doc);

    const std::vector<BusRow> l1_buses{{true, 2.0, 1.0, 0.3}, {false, 0.0, 1.0, -0.2}};
    auto l1 = base_case("two_bus_l1", "Two buses with an l1 kink at d1 = 0 that absorbs a net injection of 0.1.",
                        l1_buses, lines, {{1, 1.0, 1.0, 0.0, -1.5, 1.5}, {2, 1.0, 0.0, 0.0, -1.5, 1.5}});
    l1["controller"] = fast_prices();
    l1["scenario"] = {{"T", 60.0}, {"h", 1e-3}, {"sample_every", 0.01}};
    write(dir, "two_bus_l1", l1);
}

void triangle_case(const std::filesystem::path& dir) {
    const std::vector<BusRow> buses{{true, 3.0, 1.0, 0.6}, {false, 0.0, 1.0, -0.1}, {false, 0.0, 1.5, -0.2}};
    const std::vector<LineRow> lines{{1, 2, 1.5, -1.0, 1.0}, {2, 3, 1.0, -1.0, 1.0}, {1, 3, 2.0, -1.0, 1.0}};
    auto doc = base_case("triangle", "Three-bus ring with mixed quadratic and l1 costs.", buses, lines,
                         {{1, 1.5, 0.5, 0.1, -1.0, 1.0}, {2, 1.0, 0.2, -0.05, -1.0, 1.0}, {3, 2.0, 0.8, 0.3, -1.0, 1.0}});
    doc["scenario"] = {{"T", 60.0}, {"h", 1e-3}, {"sample_every", 0.01}};
    write(dir, "triangle", doc);
}

void four_bus_case(const std::filesystem::path& dir) {
    const std::vector<BusRow> buses{
        {true, 2.0, 1.0, 0.2}, {true, 2.0, 1.0, 0.0}, {false, 0.0, 1.0, 0.0}, {false, 0.0, 1.0, -0.1}};
    const std::vector<LineRow> lines{
        {1, 2, 1.0, -1.0, 1.0}, {2, 3, 1.0, -1.0, 1.0}, {3, 4, 1.0, -1.0, 1.0}, {1, 4, 1.0, -0.05, 0.05}};
    const std::vector<CostRow> costs{
        {2, 2.0, 0.5, 0.0, -1.5, 1.5}, {3, 2.0, 0.5, 0.0, -1.5, 1.5}, {4, 0.6, 0.5, 0.4, -1.5, 1.5}};
    auto doc = base_case("four_bus_line_limited",
                         "Four-bus ring; the cheap load at bus 4 makes the 0.05 limit on line 1-4 bind.", buses, lines,
                         costs, {0.0, 0.25, 0.05, -0.2});
    doc["scenario"] = {{"T", 60.0}, {"h", 1e-3}, {"sample_every", 0.01}};
    write(dir, "four_bus_line_limited", doc);
}

void generator_ring_case(const std::filesystem::path& dir) {
    const std::vector<BusRow> buses{{true, 4.0, 1.0, 0.3}, {true, 2.0, 1.5, -0.1}, {true, 3.0, 0.8, -0.05}};
    const std::vector<LineRow> lines{{1, 2, 2.0, -1.0, 1.0}, {2, 3, 1.5, -1.0, 1.0}, {1, 3, 1.0, -1.0, 1.0}};
    auto doc = base_case("generator_ring", "Three generator buses; the optimizer flow can mimic the swing dynamics.",
                         buses, lines,
                         {{1, 1.0, 0.0, 0.0, -1.0, 1.0}, {2, 1.5, 0.3, 0.1, -1.0, 1.0}, {3, 2.0, 0.0, 0.0, -1.0, 1.0}});
    doc["scenario"] = {{"T", 60.0}, {"h", 1e-3}, {"sample_every", 0.01}};
    write(dir, "generator_ring", doc);
}

// Branch data: from, to, reactance on a 100 MVA base.
struct Branch {
    int from;
    int to;
    double x;
};

void ieee39_case(const std::filesystem::path& dir, std::uint64_t seed) {
    const std::vector<Branch> branches{
        {1, 2, .0411},  {1, 39, .025},  {2, 3, .0151},  {2, 25, .0086}, {2, 30, .0181}, {3, 4, .0213},
        {3, 18, .0133}, {4, 5, .0128},  {4, 14, .0129}, {5, 6, .0026},  {5, 8, .0112},  {6, 7, .0092},
        {6, 11, .0082}, {6, 31, .025},  {7, 8, .0046},  {8, 9, .0363},  {9, 39, .025},  {10, 11, .0043},
        {10, 13, .0043}, {10, 32, .02}, {12, 11, .0435}, {12, 13, .0435}, {13, 14, .0101}, {14, 15, .0217},
        {15, 16, .0094}, {16, 17, .0089}, {16, 19, .0195}, {16, 21, .0135}, {16, 24, .0059}, {17, 18, .0082},
        {17, 27, .0173}, {19, 20, .0138}, {19, 33, .0142}, {20, 34, .018}, {21, 22, .014}, {22, 23, .0096},
        {22, 35, .0143}, {23, 24, .035}, {23, 36, .0272}, {25, 26, .0323}, {25, 37, .0232}, {26, 27, .0147},
        {26, 28, .0474}, {26, 29, .0625}, {28, 29, .0151}, {29, 38, .0156}};
    // Loads and generation in MW; the unit at bus 31 balances the system and
    // bus 39 is modeled without its aggregated load.
    const double base_mva = 5000.0;
    std::vector<double> load_mw(40, 0.0);
    const std::vector<std::pair<int, double>> loads{
        {3, 322.0},  {4, 500.0},  {7, 233.8}, {8, 522.0},  {12, 8.5},   {15, 320.0}, {16, 329.0},
        {18, 158.0}, {20, 628.0}, {21, 274.0}, {23, 247.5}, {24, 308.6}, {25, 224.0}, {26, 139.0},
        {27, 281.0}, {28, 206.0}, {29, 283.5}, {31, 9.2}};
    for (const auto& [bus, mw] : loads) load_mw[bus] = mw;
    std::vector<double> gen_mw(40, 0.0);
    const std::vector<std::pair<int, double>> gens{{30, 250.0}, {32, 650.0}, {33, 632.0}, {34, 508.0}, {35, 650.0},
                                                   {36, 560.0}, {37, 540.0}, {38, 830.0}, {39, 1000.0}};
    double total_load = 0.0;
    double other_gen = 0.0;
    for (double v : load_mw) total_load += v;
    for (const auto& [bus, mw] : gens) {
        gen_mw[bus] = mw;
        other_gen += mw;
    }
    gen_mw[31] = total_load - other_gen;

    std::vector<BusRow> buses;
    for (int i = 1; i <= 39; ++i) {
        const bool gen = i >= 30;
        buses.push_back({gen, gen ? 8.0 : 0.0, 1.0, (gen_mw[i] - load_mw[i]) / base_mva});
    }
    std::vector<LineRow> lines;
    for (const auto& br : branches) lines.push_back({br.from, br.to, 0.02 / br.x, -1.0, 1.0});

    std::vector<CostRow> costs;
    for (const auto& draw : gridfreq::ieee39_load_draws(seed)) {
        costs.push_back({static_cast<int>(draw.bus), draw.a, draw.b, 0.15 * static_cast<double>(draw.bus), -1.5, 1.5});
    }

    auto doc = base_case("ieee39_approx",
                         "Approximate 39-bus system: standard topology and loading on a 5000 MVA base, "
                         "generators at buses 30-39, controllable loads at buses 12-20.",
                         buses, lines, costs);
    doc["base_mva"] = base_mva;
    doc["seed"] = seed;
    doc["frequency"] = {{"nominal_hz", 60.0}, {"per_unit", true}};
    doc["scenario"] = {{"description", "Units at buses 37 and 39 trip at 5 s."},
                       {"T", 60.0}, {"h", 5e-4}, {"sample_every", 0.01}, {"trip_37_39", true}};
    ojson named;
    named["step37_39"] = {{"description", "Units at buses 37 and 39 trip at 5 s and reconnect at 65 s."},
                          // as long after the reconnection as the default run is after the trip
                          {"T", 130.0}, {"h", 5e-4}, {"sample_every", 0.01}, {"trip_37_39", true}};
    named["sinusoid"] = {
        {"description", "Bus 39 starts 0.05 short; buses 37 and 39 oscillate on [5, 65) s."},
        {"T", 80.0}, {"h", 5e-4}, {"sample_every", 0.01},
        {"steps", ojson::array({{{"time", 0.0}, {"bus", 39}, {"value", buses[38].pin - 0.05}}})},
        {"sinusoid", {{"buses", {37, 39}}, {"amplitude", 0.4}, {"period", 6.0}, {"start", 5.0}, {"end", 65.0}}}};
    for (double k1 : {0.15, 0.5, 2.0, 10.0}) {
        char label[32];
        std::snprintf(label, sizeof label, "damping_k1_%g", k1);
        named[label] = {{"T", 60.0}, {"h", 5e-4}, {"sample_every", 0.01}, {"trip_37_39", true},
                        {"uncertainty", {{"k1", k1}, {"k1_side", "controller"}}}};
    }
    for (double k2 : {0.15, 0.5}) {
        char label[32];
        std::snprintf(label, sizeof label, "noise_k2_%g", k2);
        named[label] = {{"T", 60.0}, {"h", 5e-4}, {"sample_every", 0.01}, {"trip_37_39", true},
                        {"uncertainty", {{"k2", k2}}}};
    }
    // Faster price and virtual-angle flows; the angle flow is stiff on this
    // network (largest Laplacian eigenvalue ~20), hence the smaller step.
    doc["controller"] = {{"rho", {{"mu", 2.0}, {"theta_hat", 4.0}}}};
    // the system sits at its pre-disturbance operating point at t = 0
    doc["scenario"]["start"] = "steady";
    for (auto& item : named.items()) item.value()["start"] = "steady";
    doc["scenarios"] = named;
    write(dir, "ieee39_approx", doc);
}

}  // namespace

int main(int argc, char** argv) {
    const std::filesystem::path dir = argc > 1 ? argv[1] : "cases";
    std::filesystem::create_directories(dir);
    two_bus_cases(dir);
    triangle_case(dir);
    four_bus_case(dir);
    generator_ring_case(dir);
    ieee39_case(dir, 20240517);
    return 0;
}
