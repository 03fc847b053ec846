#include "limit/ode.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>

#include "core/errors.hpp"

namespace mfmdp {

double planning_horizon(const ModelSpec& model) {
    if (model.horizon.is_finite) return model.horizon.length;
    if (model.discount <= 0.0) throw InfiniteHorizonUntruncated("infinite horizon with beta = 0 has no finite truncation");
    return 30.0 / model.discount;
}

void require_breakpoints_on_grid(const RelaxedControlPath& control, const TimeGrid& grid) {
    const double T = grid.horizon();
    const double tol = 1e-9 * std::max(1.0, T);
    for (double b : control.breakpoints) {
        if (b <= 0.0 || b >= T) continue;
        auto it = std::lower_bound(grid.nodes.begin(), grid.nodes.end(), b - tol);
        if (it == grid.nodes.end() || std::abs(*it - b) > tol)
            throw InvalidParameter("control breakpoint " + std::to_string(b) + " is not a grid node");
    }
}

void limit_rhs_into(const ModelSpec& model, std::span<const double> mu,
                    const ControlVector& alpha, std::span<double> out,
                    std::span<double> row_scratch) {
    const int n = model.num_states();
    for (int j = 0; j < n; ++j) out[j] = 0.0;
    for (int i = 0; i < n; ++i) {
        if (mu[i] == 0.0) continue;
        model.relaxed_intensity_row(i, alpha[i], mu, row_scratch);
        for (int j = 0; j < n; ++j) out[j] += mu[i] * row_scratch[j];
    }
}

std::vector<double> limit_rhs(const ModelSpec& model, std::span<const double> mu,
                              const ControlVector& alpha) {
    const int n = model.num_states();
    std::vector<double> f(n), row(n);
    limit_rhs_into(model, mu, alpha, f, row);
    return f;
}

LimitTrajectory integrate_limit(const ModelSpec& model, std::span<const double> mu0,
                                const RelaxedControlPath& control, const TimeGrid& grid) {
    control.check();
    if (!control.covers(grid.horizon()))
        throw HorizonNotCovered("control path ends before the integration horizon");
    require_breakpoints_on_grid(control, grid);

    LimitTrajectory traj;
    traj.grid = grid;
    traj.states.reserve(grid.nodes.size());

    std::vector<double> y(mu0.begin(), mu0.end());
    traj.states.push_back(y);

    const int n = model.num_states();
    std::vector<double> k1(n), k2(n), k3(n), k4(n), tmp(n), row(n);
    for (std::size_t step = 0; step + 1 < grid.nodes.size(); ++step) {
        const double t0 = grid.nodes[step];
        const double h = grid.nodes[step + 1] - t0;
        const ControlVector& alpha = control.at(t0 + 0.5 * h);

        limit_rhs_into(model, y, alpha, k1, row);
        for (int j = 0; j < n; ++j) tmp[j] = y[j] + 0.5 * h * k1[j];
        limit_rhs_into(model, tmp, alpha, k2, row);
        for (int j = 0; j < n; ++j) tmp[j] = y[j] + 0.5 * h * k2[j];
        limit_rhs_into(model, tmp, alpha, k3, row);
        for (int j = 0; j < n; ++j) tmp[j] = y[j] + h * k3[j];
        limit_rhs_into(model, tmp, alpha, k4, row);
        for (int j = 0; j < n; ++j)
            y[j] += h / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);

        double clip = 0.0;
        for (int j = 0; j < n; ++j)
            if (y[j] < 0.0) {
                clip = std::max(clip, -y[j]);
                y[j] = 0.0;
            }
        double s = 0.0;
        for (double v : y) s += v;
        const double moved = clip + std::abs(1.0 - s);
        if (s <= 0.0 || moved > 1e-6)
            throw ProjectionTooLarge("simplex projection of " + std::to_string(moved) +
                                     " in one step at t = " + std::to_string(t0 + h));
        traj.max_projection = std::max(traj.max_projection, moved);
        for (int j = 0; j < n; ++j) y[j] /= s;
        traj.states.push_back(y);
    }
    return traj;
}

double objective_F(const ModelSpec& model, const RelaxedControlPath& control, const TimeGrid& grid,
                   const LimitTrajectory& traj) {
    const double beta = model.discount;
    double total = 0.0;
    for (std::size_t s = 0; s + 1 < grid.seg_starts.size(); ++s) {
        const std::size_t lo = grid.seg_starts[s];
        const std::size_t hi = grid.seg_starts[s + 1];
        const std::size_t m = hi - lo;
        if (m % 2 != 0)
            throw InvalidParameter("Simpson quadrature needs an even interval count per segment");
        const double h = (grid.nodes[hi] - grid.nodes[lo]) / static_cast<double>(m);
        const ControlVector& alpha = control.at(grid.nodes[lo] + 0.5 * h);
        double acc = 0.0;
        for (std::size_t k = lo; k <= hi; ++k) {
            const double w = (k == lo || k == hi) ? 1.0 : (((k - lo) % 2 == 1) ? 4.0 : 2.0);
            const double phi = std::exp(-beta * grid.nodes[k]) * system_reward(model, traj.at(k), alpha);
            acc += w * phi;
        }
        total += acc * h / 3.0;
    }
    if (model.horizon.is_finite) {
        const double T = grid.horizon();
        total += std::exp(-beta * T) * model.terminal(traj.states.back());
    }
    return total;
}

double objective_F(const ModelSpec& model, std::span<const double> mu0,
                   const RelaxedControlPath& control, const TimeGrid& grid) {
    const LimitTrajectory traj = integrate_limit(model, mu0, control, grid);
    return objective_F(model, control, grid, traj);
}

TimeGrid default_grid(const ModelSpec& model, const RelaxedControlPath& control,
                      double target_step) {
    const double T = planning_horizon(model);
    if (target_step <= 0.0) target_step = T / 2000.0;
    return TimeGrid::build(T, target_step, control.breakpoints);
}

}  // namespace mfmdp
