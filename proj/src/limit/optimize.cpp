#include "limit/optimize.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

#include "core/errors.hpp"

namespace mfmdp {

namespace {

std::vector<int> controllable_states(const ModelSpec& model) {
    std::vector<int> out;
    for (int i = 0; i < model.num_states(); ++i)
        if (model.actions.per_state[i].size() > 1) out.push_back(i);
    return out;
}

ActionDistribution dirac_first(std::size_t k) { return ActionDistribution::dirac(0, k); }

ControlVector low_control(const ModelSpec& model) {
    ControlVector cv;
    for (int i = 0; i < model.num_states(); ++i)
        cv.push_back(dirac_first(model.actions.per_state[i].size()));
    return cv;
}

ControlVector high_control(const ModelSpec& model) {
    ControlVector cv;
    for (int i = 0; i < model.num_states(); ++i) {
        const std::size_t k = model.actions.per_state[i].size();
        cv.push_back(k > 1 ? ActionDistribution::dirac(k - 1, k) : dirac_first(k));
    }
    return cv;
}

ControlVector mixed_control(const ModelSpec& model, double w) {
    ControlVector cv;
    for (int i = 0; i < model.num_states(); ++i) {
        const std::size_t k = model.actions.per_state[i].size();
        if (k > 1) {
            ActionDistribution d;
            d.weights.assign(k, 0.0);
            d.weights.front() = 1.0 - w;
            d.weights.back() += w;
            cv.push_back(std::move(d));
        } else {
            cv.push_back(dirac_first(k));
        }
    }
    return cv;
}

RelaxedControlPath path_from_phases(const std::vector<double>& knots,
                                    const std::vector<ControlVector>& phases, double T) {
    // knots and phases aligned; degenerate phases (length below tiny) dropped.
    const double tiny = 1e-9 * std::max(1.0, T);
    RelaxedControlPath path;
    for (std::size_t k = 0; k < knots.size(); ++k) {
        const double hi = (k + 1 < knots.size()) ? knots[k + 1] : T;
        if (hi - knots[k] <= tiny) continue;
        if (path.breakpoints.empty()) {
            path.breakpoints.push_back(0.0);
        } else {
            path.breakpoints.push_back(knots[k]);
        }
        path.segments.push_back(phases[k]);
    }
    if (path.segments.empty()) {
        path.breakpoints.push_back(0.0);
        path.segments.push_back(phases.back());
    }
    return path;
}

struct GoldenOutcome {
    double x;
    double value;
    int evals = 0;
};

template <class F>
GoldenOutcome golden_max(F&& f, double lo, double hi, int max_iter = 80) {
    const double invphi = (std::sqrt(5.0) - 1.0) / 2.0;
    double a = lo, b = hi;
    double c = b - invphi * (b - a);
    double d = a + invphi * (b - a);
    double fc = f(c), fd = f(d);
    int evals = 2;
    const double tol = 1e-10 * std::max(1.0, hi - lo);
    for (int it = 0; it < max_iter && (b - a) > tol; ++it) {
        if (fc > fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - invphi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + invphi * (b - a);
            fd = f(d);
        }
        ++evals;
    }
    if (fc > fd) return {c, fc, evals};
    return {d, fd, evals};
}

bool unimodal(const std::vector<double>& v) {
    double scale = 1.0;
    for (double x : v) scale = std::max(scale, std::abs(x));
    const double noise = 1e-12 * scale;
    int peaks = 0;
    for (std::size_t i = 0; i < v.size(); ++i) {
        const bool left_ok = (i == 0) || v[i] > v[i - 1] + noise;
        const bool right_ok = (i + 1 == v.size()) || v[i] > v[i + 1] + noise;
        if (left_ok && right_ok) ++peaks;
    }
    return peaks <= 1;
}

// Euclidean projection onto the probability simplex.
void project_simplex(std::vector<double>& w) {
    std::vector<double> u = w;
    std::sort(u.begin(), u.end(), std::greater<double>());
    double cum = 0.0, tau = 0.0;
    int rho = 0;
    for (std::size_t j = 0; j < u.size(); ++j) {
        cum += u[j];
        const double t = (1.0 - cum) / static_cast<double>(j + 1);
        if (u[j] + t > 0.0) {
            rho = static_cast<int>(j + 1);
            tau = t;
        }
    }
    if (rho == 0) {
        std::fill(w.begin(), w.end(), 1.0 / static_cast<double>(w.size()));
        return;
    }
    for (double& x : w) x = std::max(0.0, x + tau);
}

}  // namespace

SwitchingFamily switching_family(const ModelSpec& model, const std::string& name) {
    const double T = planning_horizon(model);
    if (controllable_states(model).empty())
        throw InvalidParameter("model has no state with more than one action");
    SwitchingFamily fam;
    fam.name = name;
    if (name == "one_switch") {
        fam.bounds = {{0.0, T}};
        const ControlVector low = low_control(model);
        const ControlVector high = high_control(model);
        fam.build = [low, high, T](std::span<const double> p) {
            const double t1 = std::clamp(p[0], 0.0, T);
            return path_from_phases({0.0, t1}, {low, high}, T);
        };
    } else if (name == "three_phase") {
        fam.bounds = {{0.0, T}, {0.0, 1.0}, {0.0, T}};
        const ModelSpec* m = &model;
        const ControlVector low = low_control(model);
        fam.build = [m, low, T](std::span<const double> p) {
            const double t1 = std::clamp(p[0], 0.0, T);
            const double w = std::clamp(p[1], 0.0, 1.0);
            const double t2 = std::clamp(std::max(p[2], t1), 0.0, T);
            return path_from_phases({0.0, t1, t2}, {low, mixed_control(*m, w), low}, T);
        };
    } else {
        throw InvalidParameter("unknown switching family: " + name);
    }
    return fam;
}

OptimizeResult optimize_switching(const ModelSpec& model, const SwitchingFamily& family,
                                  const SwitchingOptions& options) {
    if (family.bounds.empty() || !family.build)
        throw InvalidParameter("switching family has no parameters");
    const int dim = static_cast<int>(family.bounds.size());
    int evals = 0;
    auto eval = [&](std::span<const double> p) {
        const RelaxedControlPath path = family.build(p);
        const TimeGrid grid = default_grid(model, path, options.target_step);
        ++evals;
        return objective_F(model, model.initial, path, grid);
    };

    int coarse = options.coarse_points;
    if (coarse <= 0) coarse = dim == 1 ? 65 : (dim == 2 ? 17 : 13);
    if (coarse < 2) coarse = 2;

    // Coarse product-grid scan.
    std::vector<double> best(dim);
    double best_value = -std::numeric_limits<double>::infinity();
    std::vector<int> idx(dim, 0);
    std::vector<double> point(dim);
    bool more = true;
    while (more) {
        for (int d = 0; d < dim; ++d) {
            const auto [lo, hi] = family.bounds[d];
            point[d] = lo + (hi - lo) * static_cast<double>(idx[d]) / static_cast<double>(coarse - 1);
        }
        const double v = eval(point);
        if (v > best_value) {
            best_value = v;
            best = point;
        }
        more = false;
        for (int d = 0; d < dim; ++d) {
            if (++idx[d] < coarse) {
                more = true;
                break;
            }
            idx[d] = 0;
        }
    }
    const double coarse_value = best_value;

    bool bracket_failure = false;
    const int rounds = dim == 1 ? 1 : options.refine_rounds;
    for (int round = 0; round < rounds; ++round) {
        for (int d = 0; d < dim; ++d) {
            const auto [lo, hi] = family.bounds[d];
            auto line = [&](double x) {
                std::vector<double> q = best;
                q[d] = x;
                return eval(q);
            };
            std::vector<double> xs(options.scan_points), vs(options.scan_points);
            for (int k = 0; k < options.scan_points; ++k) {
                xs[k] = lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(options.scan_points - 1);
                vs[k] = line(xs[k]);
            }
            const std::size_t m = static_cast<std::size_t>(
                std::max_element(vs.begin(), vs.end()) - vs.begin());
            double cand_x = xs[m], cand_v = vs[m];
            if (unimodal(vs)) {
                const double blo = xs[m == 0 ? 0 : m - 1];
                const double bhi = xs[std::min(m + 1, xs.size() - 1)];
                if (bhi > blo) {
                    const GoldenOutcome g = golden_max(line, blo, bhi);
                    if (g.value > cand_v) {
                        cand_x = g.x;
                        cand_v = g.value;
                    }
                }
            } else {
                bracket_failure = true;
                for (int k = 0; k < options.dense_points; ++k) {
                    const double x = lo + (hi - lo) * static_cast<double>(k) /
                                              static_cast<double>(options.dense_points - 1);
                    const double v = line(x);
                    if (v > cand_v) {
                        cand_v = v;
                        cand_x = x;
                    }
                }
            }
            if (cand_v > best_value) {
                best_value = cand_v;
                best[d] = cand_x;
            }
        }
    }

    OptimizeResult result;
    result.parameters = best;
    result.control = family.build(best);
    const TimeGrid grid = default_grid(model, result.control, options.target_step);
    result.trajectory = integrate_limit(model, model.initial, result.control, grid);
    result.value = objective_F(model, result.control, grid, result.trajectory);
    result.diagnostics["evaluations"] = static_cast<double>(evals);
    result.diagnostics["coarse_value"] = coarse_value;
    result.diagnostics["bracket_failure"] = bracket_failure ? 1.0 : 0.0;
    return result;
}

OptimizeResult optimize_direct(const ModelSpec& model, const DirectOptions& options,
                               const RelaxedControlPath* init) {
    const double T = planning_horizon(model);
    const std::vector<int> ctrl = controllable_states(model);
    if (ctrl.empty()) throw InvalidParameter("model has no state with more than one action");
    const int M = options.segments;
    if (M < 1) throw InvalidParameter("need at least one control segment");

    std::vector<double> breakpoints(M);
    for (int s = 0; s < M; ++s) breakpoints[s] = T * static_cast<double>(s) / static_cast<double>(M);
    std::vector<double> interior(breakpoints.begin() + 1, breakpoints.end());
    const double step = options.target_step > 0.0 ? options.target_step : T / 2000.0;
    const TimeGrid grid = TimeGrid::build(T, step, interior);

    // Decision variables: one weight vector per (segment, controllable state).
    const int C = static_cast<int>(ctrl.size());
    std::vector<std::vector<double>> w(static_cast<std::size_t>(M) * C);
    for (int s = 0; s < M; ++s)
        for (int c = 0; c < C; ++c) {
            const std::size_t k = model.actions.per_state[ctrl[c]].size();
            auto& dist = w[static_cast<std::size_t>(s) * C + c];
            if (init) {
                const ControlVector& cv = init->at((static_cast<double>(s) + 0.5) * T / M);
                if (cv[ctrl[c]].weights.size() != k)
                    throw InvalidParameter("initial control has the wrong action-grid size");
                dist = cv[ctrl[c]].weights;
                project_simplex(dist);
            } else {
                dist.assign(k, 1.0 / static_cast<double>(k));
            }
        }

    const ControlVector base = low_control(model);
    auto make_path = [&](const std::vector<std::vector<double>>& weights) {
        RelaxedControlPath path;
        path.breakpoints = breakpoints;
        path.segments.assign(M, base);
        for (int s = 0; s < M; ++s)
            for (int c = 0; c < C; ++c)
                path.segments[s][ctrl[c]].weights = weights[static_cast<std::size_t>(s) * C + c];
        return path;
    };
    int evals = 0;
    auto objective = [&](const std::vector<std::vector<double>>& weights) {
        ++evals;
        return objective_F(model, model.initial, make_path(weights), grid);
    };

    double value = objective(w);
    double step_size = options.initial_step;
    int iterations = 0, small_improvements = 0;
    bool converged = false;
    double grad_sup = 0.0;

    std::vector<std::vector<double>> grad(w.size());
    for (; iterations < options.max_iterations; ++iterations) {
        // Finite differences along normalized perturbations (w + eps e_a)/(1 + eps);
        // the common shift this introduces is absorbed by the simplex projection.
        grad_sup = 0.0;
        for (std::size_t v = 0; v < w.size(); ++v) {
            grad[v].assign(w[v].size(), 0.0);
            for (std::size_t a = 0; a < w[v].size(); ++a) {
                std::vector<std::vector<double>> pert = w;
                for (std::size_t b = 0; b < pert[v].size(); ++b)
                    pert[v][b] = (w[v][b] + (a == b ? options.fd_eps : 0.0)) / (1.0 + options.fd_eps);
                grad[v][a] = (objective(pert) - value) / options.fd_eps;
                grad_sup = std::max(grad_sup, std::abs(grad[v][a]));
            }
        }
        if (grad_sup == 0.0) {
            converged = true;
            break;
        }

        bool accepted = false;
        double eta = step_size;
        for (int bt = 0; bt < options.max_backtracks; ++bt) {
            std::vector<std::vector<double>> cand = w;
            for (std::size_t v = 0; v < w.size(); ++v) {
                for (std::size_t a = 0; a < w[v].size(); ++a)
                    cand[v][a] += eta * grad[v][a];
                project_simplex(cand[v]);
            }
            const double cand_value = objective(cand);
            if (cand_value > value) {
                const double gain = cand_value - value;
                w = std::move(cand);
                value = cand_value;
                step_size = std::min(eta * 1.6, 1e3);
                accepted = true;
                small_improvements = gain < options.value_tol ? small_improvements + 1 : 0;
                break;
            }
            eta *= 0.5;
        }
        if (!accepted || small_improvements >= 2) {
            converged = true;
            ++iterations;
            break;
        }
    }

    OptimizeResult result;
    result.control = make_path(w);
    result.trajectory = integrate_limit(model, model.initial, result.control, grid);
    result.value = objective_F(model, result.control, grid, result.trajectory);
    result.diagnostics["iterations"] = static_cast<double>(iterations);
    result.diagnostics["evaluations"] = static_cast<double>(evals);
    result.diagnostics["converged"] = converged ? 1.0 : 0.0;
    result.diagnostics["max_iterations_reached"] = converged ? 0.0 : 1.0;
    result.diagnostics["final_step"] = step_size;
    result.diagnostics["grad_sup"] = grad_sup;
    return result;
}

}  // namespace mfmdp
