#include "limit/pontryagin.hpp"

#include <algorithm>
#include <cmath>

#include "core/errors.hpp"

namespace mfmdp {

namespace {

struct RepairParams {
    double lambda_wb;
    double lambda_bw;
    double cost;
    double gain;
    bool shared_cost;  // repair cost charged per repair attempt, not per broken machine
    double a_lo;
    double a_hi;
};

RepairParams repair_params(const ModelSpec& model) {
    if (model.name != "machine_replacement" || model.num_states() != 2)
        throw InvalidParameter("costate analysis is implemented for the two-state repair model only");
    auto get = [&](const std::string& key) {
        auto it = model.params.find(key);
        if (it == model.params.end())
            throw InvalidParameter("repair model parameter missing: " + key);
        return it->second;
    };
    RepairParams rp;
    rp.lambda_wb = get("lambda_wb");
    rp.lambda_bw = get("lambda_bw");
    rp.cost = get("C");
    rp.gain = get("g");
    rp.shared_cost = get("shared_repair_cost") != 0.0;
    const auto& acts = model.actions.per_state[1];
    rp.a_lo = *std::min_element(acts.begin(), acts.end());
    rp.a_hi = *std::max_element(acts.begin(), acts.end());
    return rp;
}

double mean_action(const ActionDistribution& dist, const std::vector<double>& actions) {
    double m = 0.0;
    for (std::size_t a = 0; a < actions.size(); ++a) m += dist.weights[a] * actions[a];
    return m;
}

// Hamiltonian in terms of the working fraction and the mean repair action.
double hamiltonian(const RepairParams& rp, double mu_w, double p, double abar) {
    const double base = rp.gain * mu_w - rp.lambda_wb * p * mu_w;
    if (rp.shared_cost) return base + abar * (rp.lambda_bw * p * (1.0 - mu_w) - rp.cost);
    return base + abar * (1.0 - mu_w) * (rp.lambda_bw * p - rp.cost);
}

}  // namespace

Adjoint adjoint_integrate(const ModelSpec& model, const RelaxedControlPath& control,
                          const TimeGrid& grid) {
    const RepairParams rp = repair_params(model);
    control.check();
    if (!control.covers(grid.horizon()))
        throw HorizonNotCovered("control path ends before the costate horizon");
    require_breakpoints_on_grid(control, grid);

    const LimitTrajectory forward = integrate_limit(model, model.initial, control, grid);
    const std::size_t n = grid.nodes.size();
    const auto& broken_actions = model.actions.per_state[1];

    Adjoint adj;
    adj.times = grid.nodes;
    adj.p.assign(n, 0.0);
    adj.working.assign(n, 0.0);
    adj.working[n - 1] = forward.states.back()[0];

    // Backward pair (working fraction, costate); dp/dt = -dH/dmu_w.
    auto deriv = [&](double mu_w, double p, double abar, double out[2]) {
        out[0] = rp.lambda_bw * abar * (1.0 - mu_w) - rp.lambda_wb * mu_w;
        double dp = -rp.gain + p * (rp.lambda_wb + rp.lambda_bw * abar);
        if (!rp.shared_cost) dp -= rp.cost * abar;
        out[1] = dp;
    };

    double y[2] = {adj.working[n - 1], 0.0};
    for (std::size_t k = n - 1; k > 0; --k) {
        const double h = grid.nodes[k] - grid.nodes[k - 1];
        const double t_mid = grid.nodes[k - 1] + 0.5 * h;
        const double abar = mean_action(control.at(t_mid)[1], broken_actions);
        double k1[2], k2[2], k3[2], k4[2];
        deriv(y[0], y[1], abar, k1);
        deriv(y[0] - 0.5 * h * k1[0], y[1] - 0.5 * h * k1[1], abar, k2);
        deriv(y[0] - 0.5 * h * k2[0], y[1] - 0.5 * h * k2[1], abar, k3);
        deriv(y[0] - h * k3[0], y[1] - h * k3[1], abar, k4);
        y[0] -= h / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]);
        y[1] -= h / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]);
        adj.working[k - 1] = y[0];
        adj.p[k - 1] = y[1];
    }
    return adj;
}

double PontryaginResidual::max_excluding(const std::vector<double>& switch_times,
                                         double window) const {
    double worst = 0.0;
    for (std::size_t k = 0; k < times.size(); ++k) {
        bool near = false;
        for (double s : switch_times)
            if (std::abs(times[k] - s) <= window) {
                near = true;
                break;
            }
        if (!near) worst = std::max(worst, values[k]);
    }
    return worst;
}

PontryaginResidual pontryagin_residual(const ModelSpec& model, const RelaxedControlPath& control,
                                       const LimitTrajectory& trajectory, const Adjoint& adjoint) {
    const RepairParams rp = repair_params(model);
    if (trajectory.states.size() != adjoint.times.size())
        throw InvalidParameter("trajectory and costate were computed on different grids");
    const auto& broken_actions = model.actions.per_state[1];

    PontryaginResidual res;
    res.times = adjoint.times;
    res.values.resize(res.times.size());
    for (std::size_t k = 0; k < res.times.size(); ++k) {
        const double mu_w = trajectory.states[k][0];
        const double p = adjoint.p[k];
        const double abar = mean_action(control.at(res.times[k])[1], broken_actions);
        const double best = std::max(hamiltonian(rp, mu_w, p, rp.a_lo),
                                     hamiltonian(rp, mu_w, p, rp.a_hi));
        res.values[k] = std::max(0.0, best - hamiltonian(rp, mu_w, p, abar));
        res.max_residual = std::max(res.max_residual, res.values[k]);
    }
    return res;
}

}  // namespace mfmdp
