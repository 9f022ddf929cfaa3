#include "gridfreq/scenarios.hpp"

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <numbers>
#include <random>
#include <set>
#include <sstream>

#include <json.hpp>

#include "gridfreq/error.hpp"
#include "gridfreq/oracle.hpp"

#ifndef GRIDFREQ_CASE_DIR
#define GRIDFREQ_CASE_DIR ""
#endif

namespace gridfreq {

using nlohmann::json;

const Scenario& Case::scenario_named(const std::string& wanted) const {
    if (wanted.empty() || wanted == scenario.name) return scenario;
    const auto it = scenarios.find(wanted);
    if (it == scenarios.end()) {
        throw Error(ErrorCode::ValidationError, "case '" + name + "' has no scenario '" + wanted + "'");
    }
    return it->second;
}

InjectionProfile step_change_profile(const Vector& base, const std::vector<StepEvent>& events) {
    std::vector<InjectionEvent> list;
    list.reserve(events.size());
    for (std::size_t k = 0; k < events.size(); ++k) {
        if (k > 0 && events[k].time < events[k - 1].time) {
            throw Error(ErrorCode::UnsortedEvents, "step events must be sorted by time");
        }
        list.emplace_back(events[k]);
    }
    return InjectionProfile(base, std::move(list));
}

std::vector<StepEvent> generator_trip_37_39(const Vector& base) {
    if (base.size() < 39) throw Error(ErrorCode::DimensionMismatch, "the trip preset needs at least 39 buses");
    return {{5.0, 36, 0.0}, {5.0, 38, 0.0}, {65.0, 36, base[36]}, {65.0, 38, base[38]}};
}

InjectionProfile sinusoidal_profile(const Vector& base, const std::vector<std::size_t>& buses, TimeWindow window,
                                    double amplitude, double period) {
    if (buses.empty()) throw Error(ErrorCode::EmptyBusSet, "sinusoidal profile needs at least one bus");
    if (!(window.end > window.start)) throw Error(ErrorCode::ValidationError, "sinusoid window is empty");
    SinusoidEvent wave{buses, amplitude, period, window.start, window.end};
    return InjectionProfile(base, {wave});
}

Vector apply_measurement_noise(const Vector& omega, double t, double k2, const CostModel& cost) {
    if (k2 == 0.0) return omega;
    require_size(static_cast<std::size_t>(omega.size()), cost.size(), "frequency vector");
    Vector measured = omega;
    const double noise = k2 * std::sin(2.0 * std::numbers::pi * t);
    for (std::size_t i = 0; i < cost.size(); ++i) {
        if (cost.controllable(i)) measured[static_cast<Eigen::Index>(i)] += noise;
    }
    return measured;
}

std::vector<LoadDraw> ieee39_load_draws(std::uint64_t seed) {
    std::mt19937_64 gen(seed);
    // 53-bit uniform in [0, 1), independent of the standard library's distributions.
    auto uniform = [&gen](double lo, double hi) {
        const double u = static_cast<double>(gen() >> 11) * 0x1.0p-53;
        return lo + (hi - lo) * u;
    };
    std::vector<LoadDraw> out;
    for (std::size_t bus = 12; bus <= 20; ++bus) {
        LoadDraw draw;
        draw.bus = bus;
        if (bus <= 17) {
            draw.a = uniform(0.5, 2.5);
            draw.b = uniform(1.0, 1.5);
        } else {
            draw.a = uniform(2.5, 3.0);
            draw.b = uniform(1.5, 2.0);
        }
        out.push_back(draw);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Strict JSON reading

namespace {

std::string escape_token(const std::string& key) {
    std::string out;
    for (char ch : key) {
        if (ch == '~') out += "~0";
        else if (ch == '/') out += "~1";
        else out += ch;
    }
    return out;
}

[[noreturn]] void schema_error(const std::string& pointer, const std::string& what) {
    throw Error(ErrorCode::SchemaError, (pointer.empty() ? std::string("/") : pointer) + ": " + what);
}

class Node {
public:
    Node(const json& value, std::string pointer) : value_(value), pointer_(std::move(pointer)) {}

    const std::string& pointer() const { return pointer_; }
    const json& raw() const { return value_; }

    void expect_object(std::initializer_list<const char*> allowed) const {
        if (!value_.is_object()) schema_error(pointer_, "expected an object");
        std::set<std::string> ok(allowed.begin(), allowed.end());
        for (const auto& [key, _] : value_.items()) {
            if (!ok.count(key)) schema_error(child_pointer(key), "unknown key");
        }
    }

    bool has(const char* key) const { return value_.contains(key); }

    Node at(const char* key) const {
        if (!value_.contains(key)) schema_error(child_pointer(key), "missing required key");
        return Node(value_.at(key), child_pointer(key));
    }

    Node at(std::size_t index) const { return Node(value_.at(index), pointer_ + "/" + std::to_string(index)); }

    std::size_t array_size() const {
        if (!value_.is_array()) schema_error(pointer_, "expected an array");
        return value_.size();
    }

    double number() const {
        if (!value_.is_number()) schema_error(pointer_, "expected a number");
        const double v = value_.get<double>();
        if (!std::isfinite(v)) schema_error(pointer_, "expected a finite number");
        return v;
    }

    long long integer() const {
        if (!value_.is_number_integer()) schema_error(pointer_, "expected an integer");
        return value_.get<long long>();
    }

    bool boolean() const {
        if (!value_.is_boolean()) schema_error(pointer_, "expected a boolean");
        return value_.get<bool>();
    }

    std::string string() const {
        if (!value_.is_string()) schema_error(pointer_, "expected a string");
        return value_.get<std::string>();
    }

    double number_or(const char* key, double fallback) const { return has(key) ? at(key).number() : fallback; }
    bool boolean_or(const char* key, bool fallback) const { return has(key) ? at(key).boolean() : fallback; }

    std::size_t bus_index(std::size_t n) const {
        const long long id = integer();
        if (id < 1 || static_cast<std::size_t>(id) > n) {
            schema_error(pointer_, "bus id " + std::to_string(id) + " out of range 1.." + std::to_string(n));
        }
        return static_cast<std::size_t>(id - 1);
    }

    Vector bus_vector(std::size_t n) const {
        const auto size = array_size();
        if (size != n) schema_error(pointer_, "expected " + std::to_string(n) + " entries");
        Vector v(static_cast<Eigen::Index>(n));
        for (std::size_t i = 0; i < n; ++i) v[static_cast<Eigen::Index>(i)] = at(i).number();
        return v;
    }

private:
    std::string child_pointer(const std::string& key) const { return pointer_ + "/" + escape_token(key); }

    const json& value_;
    std::string pointer_;
};

std::vector<BusSpec> read_buses(const Node& node, Vector& injection) {
    const auto n = node.array_size();
    if (n == 0) schema_error(node.pointer(), "at least one bus is required");
    std::vector<BusSpec> buses(n);
    injection = Vector::Zero(static_cast<Eigen::Index>(n));
    for (std::size_t k = 0; k < n; ++k) {
        const Node bus = node.at(k);
        bus.expect_object({"id", "type", "M", "D", "Pin", "name"});
        const Node id = bus.at("id");
        if (id.integer() != static_cast<long long>(k + 1)) {
            schema_error(id.pointer(), "bus ids must run 1..n in order");
        }
        const std::string type = bus.at("type").string();
        if (type == "gen") {
            buses[k].kind = BusKind::Generator;
            buses[k].inertia = bus.at("M").number();
        } else if (type == "load") {
            buses[k].kind = BusKind::Load;
            if (bus.has("M")) schema_error(bus.pointer() + "/M", "load buses carry no inertia");
        } else {
            schema_error(bus.pointer() + "/type", "expected \"gen\" or \"load\"");
        }
        buses[k].damping = bus.at("D").number();
        injection[static_cast<Eigen::Index>(k)] = bus.at("Pin").number();
    }
    return buses;
}

std::vector<Line> read_lines(const Node& node, std::size_t n) {
    std::vector<Line> lines;
    const auto l = node.array_size();
    for (std::size_t k = 0; k < l; ++k) {
        const Node line = node.at(k);
        line.expect_object({"from", "to", "B", "Pmin", "Pmax"});
        Line entry;
        entry.from = line.at("from").bus_index(n);
        entry.to = line.at("to").bus_index(n);
        entry.susceptance = line.at("B").number();
        entry.flow_min = line.at("Pmin").number();
        entry.flow_max = line.at("Pmax").number();
        lines.push_back(entry);
    }
    return lines;
}

std::vector<BusCost> read_costs(const Node& node, std::size_t n) {
    std::vector<BusCost> costs(n);
    const auto count = node.array_size();
    for (std::size_t k = 0; k < count; ++k) {
        const Node entry = node.at(k);
        entry.expect_object({"bus", "a", "e", "b", "c", "dmin", "dmax"});
        const auto bus = entry.at("bus").bus_index(n);
        if (costs[bus].controllable) schema_error(entry.pointer() + "/bus", "duplicate cost entry");
        BusCost& c = costs[bus];
        c.controllable = true;
        c.a = entry.at("a").number();
        c.e = entry.number_or("e", 0.0);
        c.b = entry.at("b").number();
        c.c = entry.at("c").number();
        c.d_min = entry.at("dmin").number();
        c.d_max = entry.at("dmax").number();
    }
    return costs;
}

std::vector<std::size_t> read_bus_list(const Node& node, std::size_t n) {
    std::vector<std::size_t> buses;
    const auto count = node.array_size();
    for (std::size_t k = 0; k < count; ++k) buses.push_back(node.at(k).bus_index(n));
    return buses;
}

Scenario read_scenario(const Node& node, const std::string& name, const Vector& base, std::size_t n) {
    node.expect_object({"description", "T", "h", "sample_every", "steps", "trip_37_39", "sinusoid", "uncertainty",
                        "initial", "start"});
    Scenario s;
    s.name = name;
    s.horizon = node.number_or("T", 60.0);
    s.h = node.number_or("h", 1e-3);
    s.sample_every = node.number_or("sample_every", 0.01);
    if (!(s.h > 0.0)) throw Error(ErrorCode::ValidationError, "h must be positive");
    if (!(s.horizon > 0.0)) throw Error(ErrorCode::ValidationError, "horizon T must be positive");
    if (!(s.sample_every >= s.h)) throw Error(ErrorCode::ValidationError, "sample_every must be at least h");

    std::vector<StepEvent> steps;
    if (node.has("steps")) {
        const Node list = node.at("steps");
        const auto count = list.array_size();
        for (std::size_t k = 0; k < count; ++k) {
            const Node step = list.at(k);
            step.expect_object({"time", "bus", "value"});
            steps.push_back({step.at("time").number(), step.at("bus").bus_index(n), step.at("value").number()});
        }
    }
    if (node.boolean_or("trip_37_39", false)) {
        if (!steps.empty()) schema_error(node.pointer() + "/trip_37_39", "cannot be combined with explicit steps");
        steps = generator_trip_37_39(base);
    }
    std::vector<InjectionEvent> events = step_change_profile(base, steps).events();

    if (node.has("sinusoid")) {
        const Node wave = node.at("sinusoid");
        wave.expect_object({"buses", "amplitude", "period", "start", "end"});
        TimeWindow window{wave.number_or("start", 5.0), wave.number_or("end", 65.0)};
        const auto buses = read_bus_list(wave.at("buses"), n);
        const auto profile = sinusoidal_profile(base, buses, window, wave.number_or("amplitude", 0.4),
                                                wave.number_or("period", 6.0));
        events.insert(events.end(), profile.events().begin(), profile.events().end());
    }
    s.injection = InjectionProfile(base, std::move(events));

    if (node.has("uncertainty")) {
        const Node u = node.at("uncertainty");
        u.expect_object({"k1", "k1_side", "k2"});
        s.uncertainty.damping_scale = u.number_or("k1", 1.0);
        s.uncertainty.freq_noise = u.number_or("k2", 0.0);
        if (u.has("k1_side")) {
            const std::string side = u.at("k1_side").string();
            if (side == "controller") s.uncertainty.damping_side = DampingSide::Controller;
            else if (side == "plant") s.uncertainty.damping_side = DampingSide::Plant;
            else schema_error(u.pointer() + "/k1_side", "expected \"controller\" or \"plant\"");
        }
        if (!(s.uncertainty.damping_scale > 0.0)) throw Error(ErrorCode::ValidationError, "k1 must be > 0");
        if (s.uncertainty.freq_noise < 0.0) throw Error(ErrorCode::ValidationError, "k2 must be >= 0");
    }
    if (node.has("start")) {
        const std::string start = node.at("start").string();
        if (start == "flat") s.start = StartMode::Flat;
        else if (start == "steady") s.start = StartMode::Steady;
        else schema_error(node.pointer() + "/start", "expected \"flat\" or \"steady\"");
    }
    if (node.has("initial")) {
        const Node init = node.at("initial");
        init.expect_object({"theta", "omega", "eta", "d", "theta_hat", "mu"});
        if (init.has("theta")) s.initial.theta = init.at("theta").bus_vector(n);
        if (init.has("omega")) s.initial.omega = init.at("omega").bus_vector(n);
        if (init.has("eta")) s.initial.eta = init.at("eta").bus_vector(n);
        if (init.has("d")) s.initial.d = init.at("d").bus_vector(n);
        if (init.has("theta_hat")) s.initial.theta_hat = init.at("theta_hat").bus_vector(n);
        if (init.has("mu")) s.initial.mu = init.at("mu").bus_vector(n);
    }
    return s;
}

void read_controller(const Node& node, DppdConfig& cfg, bool& baseline) {
    node.expect_object({"kappa", "mode", "thermal_limits", "rho", "baseline"});
    cfg.kappa = node.number_or("kappa", cfg.kappa);
    if (node.has("mode")) {
        const std::string mode = node.at("mode").string();
        if (mode == "closed_loop") cfg.mode = Mode::ClosedLoop;
        else if (mode == "pure_opt") cfg.mode = Mode::PureOpt;
        else schema_error(node.pointer() + "/mode", "expected \"closed_loop\" or \"pure_opt\"");
    }
    cfg.thermal_limits = node.boolean_or("thermal_limits", cfg.thermal_limits);
    baseline = node.boolean_or("baseline", baseline);
    if (node.has("rho")) {
        const Node rho = node.at("rho");
        rho.expect_object({"eta", "d", "theta_hat", "P", "lambda", "mu", "nu_minus", "nu_plus", "physical"});
        auto& r = cfg.rho;
        r.eta = rho.number_or("eta", r.eta);
        r.d = rho.number_or("d", r.d);
        r.theta_hat = rho.number_or("theta_hat", r.theta_hat);
        r.flow = rho.number_or("P", r.flow);
        r.lambda = rho.number_or("lambda", r.lambda);
        r.mu = rho.number_or("mu", r.mu);
        r.nu_minus = rho.number_or("nu_minus", r.nu_minus);
        r.nu_plus = rho.number_or("nu_plus", r.nu_plus);
        r.physical_network_rates = rho.boolean_or("physical", r.physical_network_rates);
    }
    cfg.validate();
}

void check_slater(const Case& c, const SlaterPoint& p) {
    const auto& net = *c.net;
    const double tol = 1e-8 * (1.0 + c.base_injection.lpNorm<Eigen::Infinity>());
    for (std::size_t i = 0; i < net.n_buses(); ++i) {
        const double d = p.d[static_cast<Eigen::Index>(i)];
        const auto& bc = c.cost.buses[i];
        if (bc.controllable ? !(d > bc.d_min && d < bc.d_max) : d != 0.0) {
            throw Error(ErrorCode::ValidationError,
                        "Slater point load at bus " + std::to_string(i + 1) + " is not interior");
        }
    }
    const Vector mismatch = c.base_injection - p.d - laplacian_times(net, p.theta);
    if (mismatch.lpNorm<Eigen::Infinity>() > tol) {
        throw Error(ErrorCode::ValidationError, "Slater point angles do not balance the network");
    }
    const Vector flow = line_flows_from_angles(net, p.theta);
    for (std::size_t k = 0; k < net.n_lines(); ++k) {
        const auto j = static_cast<Eigen::Index>(k);
        if (!(flow[j] > net.flow_min()[j] && flow[j] < net.flow_max()[j])) {
            throw Error(ErrorCode::ValidationError,
                        "Slater point flow on line " + std::to_string(k + 1) + " lacks strict slack");
        }
    }
}

}  // namespace

Case parse_case(const std::string& json_text, const std::string& fallback_name) {
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw Error(ErrorCode::SchemaError, std::string("/: invalid JSON: ") + e.what());
    }
    const Node root(doc, "");
    root.expect_object({"name", "description", "notes", "base_mva", "seed", "frequency", "buses", "lines", "costs",
                        "cost_scale", "scenario", "scenarios", "controller", "slater"});

    Case c;
    c.name = root.has("name") ? root.at("name").string() : fallback_name;
    if (root.has("description")) c.description = root.at("description").string();
    if (root.has("seed")) {
        const long long seed = root.at("seed").integer();
        if (seed < 0) schema_error("/seed", "expected a non-negative integer");
        c.seed = static_cast<std::uint64_t>(seed);
    }
    if (root.has("frequency")) {
        const Node f = root.at("frequency");
        f.expect_object({"nominal_hz", "per_unit"});
        c.nominal_hz = f.number_or("nominal_hz", 60.0);
        c.per_unit_frequency = f.boolean_or("per_unit", true);
    }

    const auto buses = read_buses(root.at("buses"), c.base_injection);
    const auto n = buses.size();
    const auto lines = read_lines(root.at("lines"), n);
    c.net = std::make_shared<const PowerNetwork>(build_network(buses, lines));

    const auto costs = read_costs(root.at("costs"), n);
    double scale = 0.0;
    if (root.has("cost_scale")) {
        const Node s = root.at("cost_scale");
        if (s.raw().is_string()) {
            if (s.string() != "auto") schema_error("/cost_scale", "expected a number or \"auto\"");
        } else {
            scale = s.number();
        }
    }
    if (scale > 0.0) {
        c.cost = make_cost_model(costs, scale);
    } else {
        const CostModel raw = make_cost_model(costs, 1.0);
        c.cost = scale_for_strong_convexity(raw);
        c.auto_scaled = true;
    }

    if (root.has("controller")) read_controller(root.at("controller"), c.controller, c.baseline);

    c.scenario = root.has("scenario") ? read_scenario(root.at("scenario"), "default", c.base_injection, n)
                                      : read_scenario(Node(json::object(), "/scenario"), "default", c.base_injection, n);
    if (root.has("scenarios")) {
        const Node named = root.at("scenarios");
        if (!named.raw().is_object()) schema_error("/scenarios", "expected an object");
        for (const auto& [key, _] : named.raw().items()) {
            c.scenarios.emplace(key, read_scenario(named.at(key.c_str()), key, c.base_injection, n));
        }
    }

    if (root.has("slater")) {
        const Node s = root.at("slater");
        s.expect_object({"d", "theta"});
        SlaterPoint p{s.at("d").bus_vector(n), s.at("theta").bus_vector(n)};
        check_slater(c, p);
        c.slater = std::move(p);
    }
    return c;
}

namespace {

std::vector<std::filesystem::path> default_dirs() {
    std::vector<std::filesystem::path> dirs;
    if (const char* env = std::getenv("GRIDFREQ_CASES"); env != nullptr && *env != '\0') dirs.emplace_back(env);
    if (std::string(GRIDFREQ_CASE_DIR).size() > 0) dirs.emplace_back(GRIDFREQ_CASE_DIR);
    return dirs;
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::ValidationError, "cannot open case file " + path.string());
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

}  // namespace

Case load_case(const std::string& path_or_name, const std::vector<std::filesystem::path>& search_dirs) {
    namespace fs = std::filesystem;
    const fs::path direct(path_or_name);
    if (fs::is_regular_file(direct)) return parse_case(read_file(direct), direct.stem().string());

    if (path_or_name.find('/') == std::string::npos && direct.extension().empty()) {
        std::vector<fs::path> dirs = search_dirs;
        for (auto& d : default_dirs()) dirs.push_back(d);
        for (const auto& dir : dirs) {
            const fs::path candidate = dir / (path_or_name + ".json");
            if (fs::is_regular_file(candidate)) return parse_case(read_file(candidate), path_or_name);
        }
    }
    throw Error(ErrorCode::ValidationError, "no case file or bundled case named '" + path_or_name + "'");
}

std::vector<std::string> bundled_case_names() {
    namespace fs = std::filesystem;
    std::set<std::string> names;
    for (const auto& dir : default_dirs()) {
        std::error_code ec;
        for (const auto& entry : fs::directory_iterator(dir, ec)) {
            if (entry.is_regular_file() && entry.path().extension() == ".json") {
                names.insert(entry.path().stem().string());
            }
        }
    }
    return {names.begin(), names.end()};
}

SimulationSetup make_setup(const Case& c, const Scenario& scenario) {
    SimulationSetup setup;
    setup.net = c.net.get();
    setup.cost = c.cost;
    setup.injection = scenario.injection;
    setup.config = c.controller;
    setup.law = ControlLaw::Dppd;
    setup.uncertainty = scenario.uncertainty;
    if (scenario.start == StartMode::Steady) {
        // explicit initial values still take precedence
        const auto rest = equilibrium_start(*c.net, c.cost, scenario.injection.base(), c.controller.kappa);
        auto fill = [](Vector& dst, const Vector& src) {
            if (dst.size() == 0) dst = src;
        };
        InitialState init = scenario.initial;
        fill(init.theta, rest.theta_hat);
        fill(init.theta_hat, rest.theta_hat);
        fill(init.line_flow, rest.line_flow);
        fill(init.eta, rest.eta);
        fill(init.d, rest.d);
        fill(init.mu, rest.mu);
        setup.initial = init;
    } else {
        setup.initial = scenario.initial;
    }
    setup.h = scenario.h;
    setup.horizon = scenario.horizon;
    setup.sample_every = scenario.sample_every;
    return setup;
}

}  // namespace gridfreq
