#include "gridfreq/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <thread>

#include <Eigen/Dense>
#include <json.hpp>

#include "gridfreq/error.hpp"

namespace gridfreq {

namespace {

double sign_of(double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }

}  // namespace

ReferenceOptimum two_bus_analytic_optimum(const PowerNetwork& net, const CostModel& cost, const Vector& p_in) {
    if (net.n_buses() != 2 || net.n_lines() != 1 || !cost.controllable(0) || !cost.controllable(1)) {
        throw Error(ErrorCode::NotTwoBus, "analytic oracle needs two controllable buses joined by one line");
    }
    require_size(static_cast<std::size_t>(p_in.size()), 2, "injection");
    const auto& f1 = cost.buses[0];
    const auto& f2 = cost.buses[1];
    const double k = cost.scale;
    const double total = p_in.sum();

    const double lo = std::max(f1.d_min, total - f2.d_max);
    const double hi = std::min(f1.d_max, total - f2.d_min);
    if (lo > hi) throw Error(ErrorCode::Infeasible, "no balanced load pair fits both boxes");

    // phi(x) = f1(x) + f2(total - x); its derivative is affine between breakpoints.
    std::vector<double> points{lo};
    for (double bp : {f1.b > 0.0 ? -f1.c : lo, f2.b > 0.0 ? total + f2.c : lo}) {
        if (bp > lo && bp < hi) points.push_back(bp);
    }
    std::sort(points.begin(), points.end());
    points.push_back(hi);

    const double slope = 2.0 * k * (f1.a + f2.a);
    double x = hi;
    for (std::size_t j = 0; j + 1 < points.size(); ++j) {
        const double left = points[j];
        const double right = points[j + 1];
        const double mid = 0.5 * (left + right);
        const double s1 = sign_of(mid + f1.c);
        const double s2 = sign_of(total - mid + f2.c);
        const double intercept =
            k * (f1.e + f1.b * s1) - k * (2.0 * f2.a * total + f2.e + f2.b * s2);
        auto deriv = [&](double at) { return slope * at + intercept; };
        if (deriv(left) >= 0.0) {
            x = left;
            break;
        }
        if (deriv(right) > 0.0) {
            x = std::clamp(-intercept / slope, left, right);
            break;
        }
    }

    ReferenceOptimum opt;
    opt.method = OracleMethod::Analytic;
    opt.d_star = Vector(2);
    opt.d_star << x, total - x;
    opt.omega_star = Vector::Zero(2);
    opt.cost_star = eval_total_cost(cost, opt.d_star);

    const auto& line = net.lines()[0];
    const double flow = p_in[static_cast<Eigen::Index>(line.from)] - opt.d_star[static_cast<Eigen::Index>(line.from)];
    if (flow < line.flow_min || flow > line.flow_max) {
        throw Error(ErrorCode::BindingLimit, "the line limit binds at the unconstrained optimum");
    }

    const Interval g1 = subdifferential(cost, 0, opt.d_star[0], 1e-12);
    const Interval g2 = subdifferential(cost, 1, opt.d_star[1], 1e-12);
    const double common_lo = std::max(g1.lo, g2.lo);
    const double common_hi = std::min(g1.hi, g2.hi);
    double price = 0.0;
    if (std::isfinite(common_lo) && std::isfinite(common_hi)) price = 0.5 * (common_lo + common_hi);
    else if (std::isfinite(common_lo)) price = common_lo;
    else if (std::isfinite(common_hi)) price = common_hi;
    opt.lambda_star = Vector::Zero(2);
    opt.mu_star = Vector::Constant(2, price);
    return opt;
}

namespace {

struct GridBest {
    double cost = std::numeric_limits<double>::infinity();
    Vector d;
};

std::vector<double> axis_values(const BusCost& c, double resolution) {
    std::vector<double> values;
    const auto steps = static_cast<long long>(std::floor((c.d_max - c.d_min) / resolution + 1e-9));
    for (long long s = 0; s <= steps; ++s) values.push_back(c.d_min + static_cast<double>(s) * resolution);
    if (c.d_max - values.back() > 1e-12) values.push_back(c.d_max);
    return values;
}

}  // namespace

ReferenceOptimum grid_search_optimum(const PowerNetwork& net, const CostModel& cost, const Vector& p_in,
                                     double resolution, bool thermal_limits) {
    require_size(static_cast<std::size_t>(p_in.size()), net.n_buses(), "injection");
    require_size(cost.size(), net.n_buses(), "cost model");
    if (!(resolution > 0.0)) throw Error(ErrorCode::ValidationError, "resolution must be positive");
    std::vector<std::size_t> ctrl;
    for (std::size_t i = 0; i < cost.size(); ++i) {
        if (cost.controllable(i)) ctrl.push_back(i);
    }
    if (ctrl.size() > 3) throw Error(ErrorCode::TooLarge, "grid search supports at most three controllable buses");

    const auto n = static_cast<Eigen::Index>(net.n_buses());
    const double total = p_in.sum();
    // Flows are linear in the net injection p_in - d.
    Matrix flow_map(static_cast<Eigen::Index>(net.n_lines()), n);
    for (Eigen::Index j = 0; j < n; ++j) {
        Vector unit = Vector::Zero(n);
        unit[j] = 1.0;
        unit.array() -= 1.0 / static_cast<double>(n);
        flow_map.col(j) = line_flows_from_angles(net, dc_angles(net, unit));
    }
    const Vector base_flow = flow_map * p_in;
    const double tol = 1e-12;

    auto evaluate = [&](const Vector& d, GridBest& best) {
        if (thermal_limits) {
            const Vector flow = base_flow - flow_map * d;
            for (Eigen::Index k = 0; k < flow.size(); ++k) {
                if (flow[k] < net.flow_min()[k] - tol || flow[k] > net.flow_max()[k] + tol) return;
            }
        }
        const double value = eval_total_cost(cost, d);
        if (value < best.cost) {
            best.cost = value;
            best.d = d;
        }
    };
    auto absorb = [&](Vector& d, double assigned) {
        if (ctrl.empty()) return std::abs(total) <= tol;
        const auto last = ctrl.back();
        const double rest = total - assigned;
        const auto& c = cost.buses[last];
        if (rest < c.d_min - tol || rest > c.d_max + tol) return false;
        d[static_cast<Eigen::Index>(last)] = std::clamp(rest, c.d_min, c.d_max);
        return true;
    };

    GridBest best;
    if (ctrl.size() <= 1) {
        Vector d = Vector::Zero(n);
        if (absorb(d, 0.0)) evaluate(d, best);
    } else {
        const auto first_axis = axis_values(cost.buses[ctrl[0]], resolution);
        const std::vector<double> second_axis =
            ctrl.size() == 3 ? axis_values(cost.buses[ctrl[1]], resolution) : std::vector<double>{0.0};
        const std::size_t workers =
            std::clamp<std::size_t>(std::thread::hardware_concurrency(), 1, std::min<std::size_t>(8, first_axis.size()));
        std::vector<GridBest> partial(workers);
        std::vector<std::thread> pool;
        const std::size_t chunk = (first_axis.size() + workers - 1) / workers;
        for (std::size_t w = 0; w < workers; ++w) {
            pool.emplace_back([&, w] {
                Vector d = Vector::Zero(n);
                const std::size_t begin = w * chunk;
                const std::size_t end = std::min(first_axis.size(), begin + chunk);
                for (std::size_t a = begin; a < end; ++a) {
                    d[static_cast<Eigen::Index>(ctrl[0])] = first_axis[a];
                    for (double second : second_axis) {
                        double assigned = first_axis[a];
                        if (ctrl.size() == 3) {
                            d[static_cast<Eigen::Index>(ctrl[1])] = second;
                            assigned += second;
                        }
                        if (absorb(d, assigned)) evaluate(d, partial[w]);
                    }
                }
            });
        }
        for (auto& t : pool) t.join();
        for (const auto& p : partial) {
            if (p.cost < best.cost) best = p;
        }
    }
    if (!std::isfinite(best.cost)) throw Error(ErrorCode::Infeasible, "no grid point is feasible");

    ReferenceOptimum opt;
    opt.method = OracleMethod::Grid;
    opt.resolution = resolution;
    opt.d_star = best.d;
    opt.omega_star = Vector::Zero(n);
    opt.cost_star = best.cost;
    return opt;
}

PrimalDualPoint recover_multipliers(const PowerNetwork& net, const CostModel& cost, const Vector& p_in,
                                    const Vector& d_star, bool thermal_limits, double active_tol) {
    const auto n = static_cast<Eigen::Index>(net.n_buses());
    const auto l = static_cast<Eigen::Index>(net.n_lines());
    PrimalDualPoint p;
    p.d = d_star;
    p.eta = Vector::Zero(n);
    p.omega = Vector::Zero(n);
    p.lambda = Vector::Zero(n);
    p.theta_hat = dc_angles(net, p_in - d_star);
    p.line_flow = line_flows_from_angles(net, p.theta_hat);
    p.nu_minus = Vector::Zero(l);
    p.nu_plus = Vector::Zero(l);

    // Unknowns: mu (n), then one non-negative multiplier per active line.
    std::vector<Eigen::Index> active_lines;
    std::vector<double> line_side;
    if (thermal_limits) {
        for (Eigen::Index k = 0; k < l; ++k) {
            if (p.line_flow[k] >= net.flow_max()[k] - active_tol) {
                active_lines.push_back(k);
                line_side.push_back(1.0);
            } else if (p.line_flow[k] <= net.flow_min()[k] + active_tol) {
                active_lines.push_back(k);
                line_side.push_back(-1.0);
            }
        }
    }
    std::vector<Interval> sub(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto bus = static_cast<std::size_t>(i);
        sub[bus] = subdifferential(cost, bus, d_star[i], active_tol);
    }

    const Matrix lap = weighted_laplacian(net);
    const Matrix& inc = net.incidence();
    const auto m = static_cast<Eigen::Index>(active_lines.size());
    std::vector<double> pinned(static_cast<std::size_t>(n), std::numeric_limits<double>::quiet_NaN());
    std::vector<bool> line_dropped(static_cast<std::size_t>(m), false);
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto& s = sub[static_cast<std::size_t>(i)];
        if (s.lo == s.hi) pinned[static_cast<std::size_t>(i)] = s.lo;
    }

    Vector solution = Vector::Zero(n + m);
    for (int pass = 0; pass < 4 * (n + m) + 4; ++pass) {
        std::vector<Eigen::VectorXd> rows;
        std::vector<double> rhs;
        const double heavy = 1e3;
        // Angle stationarity: L mu + C B (nu- - nu+) = 0.
        for (Eigen::Index i = 0; i < n; ++i) {
            Eigen::VectorXd row = Eigen::VectorXd::Zero(n + m);
            row.head(n) = heavy * lap.row(i).transpose();
            for (Eigen::Index a = 0; a < m; ++a) {
                const auto k = active_lines[static_cast<std::size_t>(a)];
                row[n + a] = -heavy * line_side[static_cast<std::size_t>(a)] * inc(i, k) * net.susceptance()[k];
            }
            rows.push_back(row);
            rhs.push_back(0.0);
        }
        for (Eigen::Index i = 0; i < n; ++i) {
            const double target = pinned[static_cast<std::size_t>(i)];
            if (std::isnan(target)) continue;
            Eigen::VectorXd row = Eigen::VectorXd::Zero(n + m);
            row[i] = 1.0;
            rows.push_back(row);
            rhs.push_back(target);
        }
        for (Eigen::Index a = 0; a < m; ++a) {
            if (!line_dropped[static_cast<std::size_t>(a)]) continue;
            Eigen::VectorXd row = Eigen::VectorXd::Zero(n + m);
            row[n + a] = heavy;
            rows.push_back(row);
            rhs.push_back(0.0);
        }
        Matrix A(static_cast<Eigen::Index>(rows.size()), n + m);
        Vector b(static_cast<Eigen::Index>(rows.size()));
        for (std::size_t r = 0; r < rows.size(); ++r) {
            A.row(static_cast<Eigen::Index>(r)) = rows[r].transpose();
            b[static_cast<Eigen::Index>(r)] = rhs[r];
        }
        solution = A.completeOrthogonalDecomposition().solve(b);

        bool changed = false;
        for (Eigen::Index i = 0; i < n && !changed; ++i) {
            const auto bus = static_cast<std::size_t>(i);
            if (!std::isnan(pinned[bus])) continue;
            const auto& s = sub[bus];
            if (solution[i] < s.lo) pinned[bus] = s.lo, changed = true;
            else if (solution[i] > s.hi) pinned[bus] = s.hi, changed = true;
        }
        for (Eigen::Index a = 0; a < m && !changed; ++a) {
            if (!line_dropped[static_cast<std::size_t>(a)] && solution[n + a] < 0.0) {
                line_dropped[static_cast<std::size_t>(a)] = true;
                changed = true;
            }
        }
        if (!changed) break;
    }

    p.mu = solution.head(n);
    for (Eigen::Index a = 0; a < m; ++a) {
        const auto k = active_lines[static_cast<std::size_t>(a)];
        const double value = std::max(0.0, solution[n + a]);
        if (line_side[static_cast<std::size_t>(a)] > 0.0) p.nu_plus[k] = value;
        else p.nu_minus[k] = value;
    }
    return p;
}

namespace {

// Minimiser of f_i(x) - price x over the box.
double load_response(const CostModel& cost, std::size_t bus, double price) {
    const auto& f = cost.buses[bus];
    const double k = cost.scale;
    double x;
    if (f.a > 0.0) {
        const double free_min = (price - k * f.e) / (2.0 * k * f.a);
        x = -f.c + soft_threshold(free_min + f.c, f.b / (2.0 * f.a));
    } else {
        const double slope = price - k * f.e;
        x = slope > k * f.b ? f.d_max : (slope < -k * f.b ? f.d_min : -f.c);
    }
    return std::clamp(x, f.d_min, f.d_max);
}

double total_response(const CostModel& cost, double price) {
    double s = 0.0;
    for (std::size_t i = 0; i < cost.size(); ++i) {
        if (cost.controllable(i)) s += load_response(cost, i, price);
    }
    return s;
}

}  // namespace

ReferenceOptimum copperplate_optimum(const CostModel& cost, const Vector& p_in) {
    require_size(static_cast<std::size_t>(p_in.size()), cost.size(), "injection");
    const double target = p_in.sum();
    double lo = -1.0, hi = 1.0;
    for (int i = 0; i < 200 && total_response(cost, lo) > target; ++i) lo *= 2.0;
    for (int i = 0; i < 200 && total_response(cost, hi) < target; ++i) hi *= 2.0;
    if (total_response(cost, lo) > target || total_response(cost, hi) < target) {
        throw Error(ErrorCode::Infeasible, "total load range cannot meet the net injection");
    }
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (total_response(cost, mid) < target) lo = mid;
        else hi = mid;
    }
    const double price = 0.5 * (lo + hi);
    ReferenceOptimum opt;
    const auto n = static_cast<Eigen::Index>(cost.size());
    opt.d_star = Vector::Zero(n);
    for (std::size_t i = 0; i < cost.size(); ++i) {
        if (cost.controllable(i)) opt.d_star[static_cast<Eigen::Index>(i)] = load_response(cost, i, price);
    }
    opt.omega_star = Vector::Zero(n);
    opt.cost_star = eval_total_cost(cost, opt.d_star);
    opt.lambda_star = Vector::Zero(n);
    opt.mu_star = Vector::Constant(n, price);
    return opt;
}

ControllerState equilibrium_start(const PowerNetwork& net, const CostModel& cost, const Vector& p_in, double kappa,
                                  bool thermal_limits) {
    const auto opt = copperplate_optimum(cost, p_in);
    const Vector theta = dc_angles(net, p_in - opt.d_star);
    const Vector flow = line_flows_from_angles(net, theta);
    for (std::size_t k = 0; thermal_limits && k < net.n_lines(); ++k) {
        const auto& line = net.lines()[k];
        const double f = flow[static_cast<Eigen::Index>(k)];
        if (f <= line.flow_min || f >= line.flow_max) {
            throw Error(ErrorCode::BindingLimit, "line " + std::to_string(k + 1) + " is at its limit in the steady state");
        }
    }
    const auto n = static_cast<Eigen::Index>(net.n_buses());
    ControllerState s;
    s.d = opt.d_star;
    s.theta_hat = theta;
    s.mu = *opt.mu_star;
    s.eta = Vector::Zero(n);
    const Vector grad = grad_f0(cost, s.d);
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto bus = static_cast<std::size_t>(i);
        if (!cost.controllable(bus)) continue;
        const auto& f = cost.buses[bus];
        const double kb = cost.scale * f.b;
        const double shifted = s.d[i] + f.c;
        Interval l1{-kb, kb};
        if (shifted > 1e-12) l1 = {kb, kb};
        else if (shifted < -1e-12) l1 = {-kb, -kb};
        // the l1 subgradient the eta flow has to carry
        const double part = std::clamp(s.mu[i] - grad[i], l1.lo, l1.hi);
        s.eta[i] = -part / kappa;
    }
    s.nu_minus = Vector::Zero(static_cast<Eigen::Index>(net.n_lines()));
    s.nu_plus = s.nu_minus;
    s.lambda = Vector::Zero(n);
    s.line_flow = flow;
    return s;
}

std::string oracle_to_json(const std::string& case_name, const ReferenceOptimum& opt) {
    nlohmann::ordered_json doc;
    doc["case"] = case_name;
    doc["d_star"] = std::vector<double>(opt.d_star.data(), opt.d_star.data() + opt.d_star.size());
    doc["cost"] = opt.cost_star;
    doc["method"] = opt.method == OracleMethod::Analytic ? "analytic" : "grid";
    doc["resolution"] = opt.resolution;
    return doc.dump(2) + "\n";
}

ReferenceOptimum oracle_from_json(const std::string& text, std::string* case_name) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
        ReferenceOptimum opt;
        const auto d = doc.at("d_star").get<std::vector<double>>();
        opt.d_star = Eigen::Map<const Vector>(d.data(), static_cast<Eigen::Index>(d.size()));
        opt.omega_star = Vector::Zero(opt.d_star.size());
        opt.cost_star = doc.at("cost").get<double>();
        const auto method = doc.at("method").get<std::string>();
        if (method != "analytic" && method != "grid") throw Error(ErrorCode::SchemaError, "/method: unknown oracle method");
        opt.method = method == "analytic" ? OracleMethod::Analytic : OracleMethod::Grid;
        opt.resolution = doc.at("resolution").get<double>();
        if (case_name != nullptr) *case_name = doc.at("case").get<std::string>();
        return opt;
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::SchemaError, std::string("/: malformed oracle fixture: ") + e.what());
    }
}

}  // namespace gridfreq
