#include "exact/solve.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace mfmdp {

double probed_q_max(const ModelSpec& model) {
    ValidationReport rep = validate_assumptions(model);
    return std::max(model.q_max, rep.q_max_observed);
}

namespace {

struct SweepContext {
    const ModelSpec& model;
    const SimplexLattice& lattice;
    double q_max;
    double lambda_bar;

    SweepContext(const ModelSpec& m, const SimplexLattice& l)
        : model(m), lattice(l), q_max(probed_q_max(m)) {
        lambda_bar = static_cast<double>(l.agents()) * static_cast<double>(l.states() - 1) * q_max;
    }
};

// Generator-form optimality sweep: out[p] = sum_i max_a { mu(i) r + counts_i
// sum_j q (v_nb - v) }, optionally recording the per-state argmax.
void optimality_sweep(const SweepContext& ctx, std::span<const double> v, std::vector<double>& out,
                      std::vector<int>* policy) {
    const ModelSpec& model = ctx.model;
    const SimplexLattice& lat = ctx.lattice;
    const int n = lat.states();
    const std::int64_t P = lat.size();
    std::vector<double> row(static_cast<std::size_t>(n));
    std::vector<std::int64_t> nb(static_cast<std::size_t>(n) * static_cast<std::size_t>(n));

    for (std::int64_t p = 0; p < P; ++p) {
        auto counts = lat.counts(p);
        std::vector<double> mu = lat.fractions(p);
        const double vp = v[static_cast<std::size_t>(p)];
        std::fill(nb.begin(), nb.end(), -1);
        double total = 0.0;
        for (int i = 0; i < n; ++i) {
            const auto& grid = model.actions.at(i);
            int best_a = 0;
            double best = -std::numeric_limits<double>::infinity();
            if (counts[static_cast<std::size_t>(i)] == 0) {
                best = 0.0;  // no occupants: every action contributes nothing
            } else {
                const double mu_i = mu[static_cast<std::size_t>(i)];
                const double count_i = static_cast<double>(counts[static_cast<std::size_t>(i)]);
                for (int ai = 0; ai < static_cast<int>(grid.size()); ++ai) {
                    double a = grid[static_cast<std::size_t>(ai)];
                    model.intensity_row(i, a, mu, row);
                    double contrib = mu_i * model.reward(i, a, mu);
                    for (int j = 0; j < n; ++j) {
                        if (j == i) continue;
                        double q = row[static_cast<std::size_t>(j)];
                        if (q == 0.0) continue;
                        std::size_t slot = static_cast<std::size_t>(i) * static_cast<std::size_t>(n) +
                                           static_cast<std::size_t>(j);
                        if (nb[slot] < 0) nb[slot] = lat.neighbor(p, i, j);
                        contrib += count_i * q * (v[static_cast<std::size_t>(nb[slot])] - vp);
                    }
                    if (contrib > best) {
                        best = contrib;
                        best_a = ai;
                    }
                }
            }
            total += best;
            if (policy)
                (*policy)[static_cast<std::size_t>(p) * static_cast<std::size_t>(n) +
                          static_cast<std::size_t>(i)] = best_a;
        }
        out[static_cast<std::size_t>(p)] = total;
    }
}

}  // namespace

BellmanSweep bellman_operator(const ModelSpec& model, const SimplexLattice& lattice,
                              std::span<const double> v) {
    if (model.discount <= 0.0)
        throw UndiscountedInfinite("bellman operator: needs a positive discount rate");
    SweepContext ctx(model, lattice);
    const std::int64_t P = lattice.size();
    BellmanSweep sweep;
    sweep.values.assign(static_cast<std::size_t>(P), 0.0);
    sweep.policy.assign(static_cast<std::size_t>(P) * static_cast<std::size_t>(lattice.states()), 0);
    optimality_sweep(ctx, v, sweep.values, &sweep.policy);
    const double denom = model.discount + ctx.lambda_bar;
    for (std::int64_t p = 0; p < P; ++p)
        sweep.values[static_cast<std::size_t>(p)] =
            (ctx.lambda_bar * v[static_cast<std::size_t>(p)] + sweep.values[static_cast<std::size_t>(p)]) /
            denom;
    return sweep;
}

ValueTable value_iteration(const ModelSpec& model, std::int64_t agents, double tol,
                           std::int64_t lattice_cap) {
    if (model.discount <= 0.0)
        throw UndiscountedInfinite("value iteration: needs a positive discount rate");
    SimplexLattice lattice(agents, model.num_states(), lattice_cap);
    SweepContext ctx(model, lattice);
    const std::int64_t P = lattice.size();
    const double beta = model.discount;
    const double stop = tol * beta / std::max(ctx.lambda_bar, 1e-300);

    ValueTable table{lattice, {}, {}, beta, tol, ctx.lambda_bar, 0};
    table.values.assign(static_cast<std::size_t>(P), 0.0);
    table.policy.assign(static_cast<std::size_t>(P) * static_cast<std::size_t>(model.num_states()), 0);

    std::vector<double> next(static_cast<std::size_t>(P), 0.0);
    const double denom = beta + ctx.lambda_bar;
    const std::int64_t max_sweeps = 5'000'000;
    for (std::int64_t it = 1;; ++it) {
        if (it > max_sweeps)
            throw MaxIterations("value iteration: sweep budget exhausted before reaching tolerance");
        optimality_sweep(ctx, table.values, next, &table.policy);
        double diff = 0.0;
        for (std::int64_t p = 0; p < P; ++p) {
            double nv = (ctx.lambda_bar * table.values[static_cast<std::size_t>(p)] +
                         next[static_cast<std::size_t>(p)]) /
                        denom;
            diff = std::max(diff, std::abs(nv - table.values[static_cast<std::size_t>(p)]));
            next[static_cast<std::size_t>(p)] = nv;
        }
        table.values.swap(next);
        table.iterations = it;
        if (diff <= stop) break;
    }
    return table;
}

namespace {

// Shared backward RK4 driver. rhs_sweep(t, v, out) must write the generator
// part B(v) at time t; the integrated equation is dv/dt = beta v - B(v).
template <typename RhsSweep>
FiniteHorizonResult backward_rk4(const ModelSpec& model, const SimplexLattice& lattice,
                                 const TimeGrid& grid, double lambda_bar, RhsSweep&& rhs_sweep,
                                 const std::function<void(double, std::span<const double>,
                                                          std::vector<int>&)>* policy_extract) {
    const std::int64_t P = lattice.size();
    const double beta = model.discount;
    const double h_max = grid.max_step();
    if (h_max * lambda_bar > 0.5)
        throw StepTooLarge("finite-horizon solver: step times the uniformization bound exceeds 0.5");

    FiniteHorizonResult res{lattice, grid, {}, {}, {}, {}, lambda_bar};
    std::vector<double> v(static_cast<std::size_t>(P));
    for (std::int64_t p = 0; p < P; ++p) {
        std::vector<double> mu = res.lattice.fractions(p);
        v[static_cast<std::size_t>(p)] = model.horizon.is_finite ? model.terminal(mu) : 0.0;
    }
    res.vT = v;

    // Policy snapshots at most every `stride` steps, plus t = 0.
    const std::size_t n_steps = grid.steps();
    const std::size_t stride = std::max<std::size_t>(1, (n_steps + 63) / 64);

    std::vector<double> k1(static_cast<std::size_t>(P)), k2(static_cast<std::size_t>(P)),
        k3(static_cast<std::size_t>(P)), k4(static_cast<std::size_t>(P)),
        tmp(static_cast<std::size_t>(P)), b(static_cast<std::size_t>(P));
    auto f = [&](double t, const std::vector<double>& w, std::vector<double>& out) {
        rhs_sweep(t, std::span<const double>(w), b);
        for (std::int64_t p = 0; p < P; ++p)
            out[static_cast<std::size_t>(p)] =
                beta * w[static_cast<std::size_t>(p)] - b[static_cast<std::size_t>(p)];
    };

    auto record_policy = [&](double t, const std::vector<double>& w) {
        if (!policy_extract) return;
        std::vector<int> slice(static_cast<std::size_t>(P) *
                                   static_cast<std::size_t>(res.lattice.states()),
                               0);
        (*policy_extract)(t, std::span<const double>(w), slice);
        res.policy_times.push_back(t);
        res.policy_slices.push_back(std::move(slice));
    };

    record_policy(grid.horizon(), v);
    for (std::size_t step = n_steps; step > 0; --step) {
        const double t_hi = grid.nodes[step];
        const double t_lo = grid.nodes[step - 1];
        const double h = t_hi - t_lo;
        const double t_mid = 0.5 * (t_lo + t_hi);
        f(t_mid, v, k1);
        for (std::int64_t p = 0; p < P; ++p)
            tmp[static_cast<std::size_t>(p)] =
                v[static_cast<std::size_t>(p)] - 0.5 * h * k1[static_cast<std::size_t>(p)];
        f(t_mid, tmp, k2);
        for (std::int64_t p = 0; p < P; ++p)
            tmp[static_cast<std::size_t>(p)] =
                v[static_cast<std::size_t>(p)] - 0.5 * h * k2[static_cast<std::size_t>(p)];
        f(t_mid, tmp, k3);
        for (std::int64_t p = 0; p < P; ++p)
            tmp[static_cast<std::size_t>(p)] =
                v[static_cast<std::size_t>(p)] - h * k3[static_cast<std::size_t>(p)];
        f(t_mid, tmp, k4);
        for (std::int64_t p = 0; p < P; ++p)
            v[static_cast<std::size_t>(p)] -=
                h / 6.0 *
                (k1[static_cast<std::size_t>(p)] + 2.0 * k2[static_cast<std::size_t>(p)] +
                 2.0 * k3[static_cast<std::size_t>(p)] + k4[static_cast<std::size_t>(p)]);
        const std::size_t done = step - 1;
        if (done == 0 || done % stride == 0) record_policy(t_lo, v);
    }
    std::reverse(res.policy_times.begin(), res.policy_times.end());
    std::reverse(res.policy_slices.begin(), res.policy_slices.end());
    res.v0 = std::move(v);
    return res;
}

}  // namespace

FiniteHorizonResult finite_horizon_solve(const ModelSpec& model, std::int64_t agents,
                                         const TimeGrid& grid, std::int64_t lattice_cap) {
    SimplexLattice lattice(agents, model.num_states(), lattice_cap);
    SweepContext ctx(model, lattice);
    auto rhs = [&](double, std::span<const double> w, std::vector<double>& out) {
        optimality_sweep(ctx, w, out, nullptr);
    };
    std::function<void(double, std::span<const double>, std::vector<int>&)> extract =
        [&](double, std::span<const double> w, std::vector<int>& slice) {
            std::vector<double> dump(w.size());
            optimality_sweep(ctx, w, dump, &slice);
        };
    return backward_rk4(model, lattice, grid, ctx.lambda_bar, rhs, &extract);
}

FiniteHorizonResult policy_evaluation(const ModelSpec& model, std::int64_t agents,
                                      const Policy& policy, const TimeGrid& grid,
                                      std::int64_t lattice_cap) {
    if (policy.kind == Policy::Kind::JumpAdapted)
        throw InvalidParameter("policy evaluation: jump-adapted policies are evaluated as open-loop");
    SimplexLattice lattice(agents, model.num_states(), lattice_cap);
    SweepContext ctx(model, lattice);
    const std::int64_t P = lattice.size();
    const int n = lattice.states();

    const bool open_loop = policy.kind == Policy::Kind::OpenLoop;
    if (open_loop) {
        policy.path.check();
        if (!policy.path.covers(grid.horizon()))
            throw HorizonNotCovered("policy evaluation: control path ends before the grid horizon");
        for (double bp : policy.path.breakpoints) {
            if (bp <= 0.0 || bp >= grid.horizon()) continue;
            auto it = std::lower_bound(grid.nodes.begin(), grid.nodes.end(), bp);
            double nearest = it == grid.nodes.end() ? grid.nodes.back() : *it;
            if (it != grid.nodes.begin()) nearest = std::abs(*(it - 1) - bp) < std::abs(nearest - bp)
                                                        ? *(it - 1)
                                                        : nearest;
            if (std::abs(nearest - bp) > 1e-9 * std::max(1.0, grid.horizon()))
                throw InvalidParameter("policy evaluation: control breakpoints must be grid nodes");
        }
    }

    // Feedback controls depend only on the lattice point; evaluate them once.
    std::vector<ControlVector> feedback_controls;
    if (!open_loop) {
        feedback_controls.resize(static_cast<std::size_t>(P));
        for (std::int64_t p = 0; p < P; ++p) {
            std::vector<double> mu = lattice.fractions(p);
            feedback_controls[static_cast<std::size_t>(p)] = policy.feedback(mu);
        }
    }

    auto rhs = [&, n](double t, std::span<const double> w, std::vector<double>& out) {
        const ControlVector* path_control = open_loop ? &policy.path.at(t) : nullptr;
        std::vector<double> row(static_cast<std::size_t>(n));
        std::vector<std::int64_t> nb(static_cast<std::size_t>(n) * static_cast<std::size_t>(n));
        for (std::int64_t p = 0; p < P; ++p) {
            const ControlVector& alpha =
                open_loop ? *path_control : feedback_controls[static_cast<std::size_t>(p)];
            auto counts = lattice.counts(p);
            std::vector<double> mu = lattice.fractions(p);
            const double vp = w[static_cast<std::size_t>(p)];
            std::fill(nb.begin(), nb.end(), -1);
            double total = 0.0;
            for (int i = 0; i < n; ++i) {
                if (counts[static_cast<std::size_t>(i)] == 0) continue;
                const double count_i = static_cast<double>(counts[static_cast<std::size_t>(i)]);
                const double mu_i = mu[static_cast<std::size_t>(i)];
                const ActionDistribution& d = alpha[static_cast<std::size_t>(i)];
                model.relaxed_intensity_row(i, d, mu, row);
                total += mu_i * model.relaxed_reward(i, d, mu);
                for (int j = 0; j < n; ++j) {
                    if (j == i) continue;
                    double q = row[static_cast<std::size_t>(j)];
                    if (q == 0.0) continue;
                    std::size_t slot = static_cast<std::size_t>(i) * static_cast<std::size_t>(n) +
                                       static_cast<std::size_t>(j);
                    if (nb[slot] < 0) nb[slot] = lattice.neighbor(p, i, j);
                    total += count_i * q * (w[static_cast<std::size_t>(nb[slot])] - vp);
                }
            }
            out[static_cast<std::size_t>(p)] = total;
        }
    };
    return backward_rk4(model, lattice, grid, ctx.lambda_bar, rhs, nullptr);
}

}  // namespace mfmdp
