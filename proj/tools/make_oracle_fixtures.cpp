// Freezes reference optima of the small bundled cases into tests/fixtures.
// usage: gridfreq_make_fixtures <fixture-dir>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "gridfreq/oracle.hpp"
#include "gridfreq/scenarios.hpp"

int main(int argc, char** argv) {
    if (argc != 2) {
        std::cerr << "usage: " << argv[0] << " <fixture-dir>\n";
        return 2;
    }
    const std::filesystem::path dir = argv[1];
    std::filesystem::create_directories(dir);

    struct Job {
        const char* name;
        bool analytic;
        double resolution;
    };
    const Job jobs[] = {{"two_bus_analytic", true, 0.0},
                        {"two_bus_l1", true, 0.0},
                        {"triangle", false, 1e-3},
                        {"four_bus_line_limited", false, 1e-3},
                        {"generator_ring", false, 1e-3}};
    try {
        for (const auto& job : jobs) {
            const auto c = gridfreq::load_case(job.name);
            const auto& s = c.scenario;
            const gridfreq::Vector p = s.injection.at(s.horizon);
            const auto opt = job.analytic ? gridfreq::two_bus_analytic_optimum(*c.net, c.cost, p)
                                          : gridfreq::grid_search_optimum(*c.net, c.cost, p, job.resolution,
                                                                          c.controller.thermal_limits);
            const auto path = dir / (std::string(job.name) + "_oracle.json");
            std::ofstream(path) << gridfreq::oracle_to_json(job.name, opt);
            std::cout << "wrote " << path.string() << "\n";
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
