#include "core/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace mfmdp {

void ModelSpec::intensity_row(int i, double a, std::span<const double> mu, std::span<double> row) const {
    std::fill(row.begin(), row.end(), 0.0);
    intensity(i, a, mu, row);
}

void ModelSpec::relaxed_intensity_row(int i, const ActionDistribution& d, std::span<const double> mu,
                                      std::span<double> row) const {
    const int n = num_states();
    std::fill(row.begin(), row.end(), 0.0);
    std::vector<double> tmp(static_cast<std::size_t>(n));
    const auto& grid = actions.at(i);
    for (std::size_t k = 0; k < grid.size(); ++k) {
        double w = d.weights[k];
        if (w == 0.0) continue;
        intensity_row(i, grid[k], mu, tmp);
        for (int j = 0; j < n; ++j) row[static_cast<std::size_t>(j)] += w * tmp[static_cast<std::size_t>(j)];
    }
}

double ModelSpec::relaxed_reward(int i, const ActionDistribution& d, std::span<const double> mu) const {
    const auto& grid = actions.at(i);
    double r = 0.0;
    for (std::size_t k = 0; k < grid.size(); ++k) {
        double w = d.weights[k];
        if (w == 0.0) continue;
        r += w * reward(i, grid[k], mu);
    }
    return r;
}

double system_reward(const ModelSpec& model, std::span<const double> mu, const ControlVector& control) {
    double total = 0.0;
    for (int i = 0; i < model.num_states(); ++i) {
        double m = mu[static_cast<std::size_t>(i)];
        if (m == 0.0) continue;
        total += m * model.relaxed_reward(i, control[static_cast<std::size_t>(i)], mu);
    }
    return total;
}

namespace {

void enumerate_compositions(int remaining, int slot, std::vector<int>& counts,
                            std::vector<std::vector<double>>& out, int total) {
    const int n = static_cast<int>(counts.size());
    if (slot == n - 1) {
        counts[static_cast<std::size_t>(slot)] = remaining;
        std::vector<double> mu(counts.size());
        for (std::size_t i = 0; i < counts.size(); ++i)
            mu[i] = static_cast<double>(counts[i]) / static_cast<double>(total);
        out.push_back(std::move(mu));
        return;
    }
    for (int c = 0; c <= remaining; ++c) {
        counts[static_cast<std::size_t>(slot)] = c;
        enumerate_compositions(remaining - c, slot + 1, counts, out, total);
    }
}

}  // namespace

std::vector<std::vector<double>> default_probe_grid(int n_states, int lattice_agents) {
    std::vector<std::vector<double>> probes;
    for (int i = 0; i < n_states; ++i) {
        std::vector<double> v(static_cast<std::size_t>(n_states), 0.0);
        v[static_cast<std::size_t>(i)] = 1.0;
        probes.push_back(std::move(v));
    }
    probes.emplace_back(static_cast<std::size_t>(n_states), 1.0 / static_cast<double>(n_states));
    std::vector<int> counts(static_cast<std::size_t>(n_states), 0);
    enumerate_compositions(lattice_agents, 0, counts, probes, lattice_agents);
    return probes;
}

std::string ValidationReport::summary() const {
    std::ostringstream os;
    os << "off-diagonal intensities nonnegative: " << (off_diagonal_nonnegative.pass ? "ok" : "VIOLATED");
    if (!off_diagonal_nonnegative.pass)
        os << " (worst " << off_diagonal_nonnegative.worst << " at " << off_diagonal_nonnegative.worst_where << ")";
    os << "\nrow sums zero: " << (zero_row_sums.pass ? "ok" : "VIOLATED");
    if (!zero_row_sums.pass)
        os << " (worst " << zero_row_sums.worst << " at " << zero_row_sums.worst_where << ")";
    os << "\nintensity bound: declared " << q_max_declared << ", observed " << q_max_observed
       << (q_max_consistent ? " (consistent)" : " (EXCEEDED)");
    os << "\nintensity variation per unit L1 distance: " << intensity_lipschitz_estimate;
    os << "\nreward variation per unit L1 distance: " << reward_lipschitz_estimate;
    for (const std::string& w : warnings) os << "\nwarning: " << w;
    return os.str();
}

ValidationReport validate_assumptions(const ModelSpec& model) {
    return validate_assumptions(model, default_probe_grid(model.num_states()));
}

ValidationReport validate_assumptions(const ModelSpec& model,
                                      const std::vector<std::vector<double>>& probe_grid,
                                      double tol) {
    if (probe_grid.empty()) throw InvalidParameter("validate_assumptions: empty probe grid");
    const int n = model.num_states();
    ValidationReport rep;
    rep.q_max_declared = model.q_max;

    const auto& probes = probe_grid;
    std::vector<double> row(static_cast<std::size_t>(n));

    auto describe = [&](const std::vector<double>& mu, int i, double a) {
        std::ostringstream os;
        os << "state " << model.states.labels[static_cast<std::size_t>(i)] << ", action " << a << ", measure (";
        for (int j = 0; j < n; ++j) os << (j ? ", " : "") << mu[static_cast<std::size_t>(j)];
        os << ")";
        return os.str();
    };

    for (const auto& mu : probes) {
        for (int i = 0; i < n; ++i) {
            for (double a : model.actions.at(i)) {
                model.intensity_row(i, a, mu, row);
                double row_sum = 0.0;
                for (int j = 0; j < n; ++j) {
                    double q = row[static_cast<std::size_t>(j)];
                    row_sum += q;
                    rep.q_max_observed = std::max(rep.q_max_observed, std::abs(q));
                    if (j == i) continue;
                    if (q < -tol && -q > rep.off_diagonal_nonnegative.worst) {
                        rep.off_diagonal_nonnegative.pass = false;
                        rep.off_diagonal_nonnegative.worst = -q;
                        rep.off_diagonal_nonnegative.worst_where = describe(mu, i, a);
                    }
                }
                double defect = std::isfinite(row_sum) ? std::abs(row_sum)
                                                       : std::numeric_limits<double>::infinity();
                if (defect > tol && defect > rep.zero_row_sums.worst) {
                    rep.zero_row_sums.pass = false;
                    rep.zero_row_sums.worst = defect;
                    rep.zero_row_sums.worst_where = describe(mu, i, a);
                }
            }
        }
    }
    rep.q_max_consistent = rep.q_max_declared + 1e-9 >= rep.q_max_observed;
    if (!rep.q_max_consistent)
        rep.warnings.push_back("declared intensity bound is below the largest probed intensity");

    // Finite-difference continuity probes in the measure argument, at two
    // perturbation scales. A quotient that keeps growing as the scale halves
    // points at an unbounded derivative or a jump; reported as a warning.
    auto fd_scan = [&](double eps, double& worst_q, double& worst_r) {
        std::vector<double> row_base(static_cast<std::size_t>(n)), row_pert(static_cast<std::size_t>(n));
        std::vector<double> mu_pert(static_cast<std::size_t>(n));
        for (const auto& mu : probes) {
            for (int d_from = 0; d_from < n; ++d_from) {
                if (mu[static_cast<std::size_t>(d_from)] < eps) continue;
                for (int d_to = 0; d_to < n; ++d_to) {
                    if (d_to == d_from) continue;
                    mu_pert.assign(mu.begin(), mu.end());
                    mu_pert[static_cast<std::size_t>(d_from)] -= eps;
                    mu_pert[static_cast<std::size_t>(d_to)] += eps;
                    const double dist = 2.0 * eps;
                    for (int i = 0; i < n; ++i) {
                        for (double a : model.actions.at(i)) {
                            model.intensity_row(i, a, mu, row_base);
                            model.intensity_row(i, a, mu_pert, row_pert);
                            for (int j = 0; j < n; ++j) {
                                double dq = std::abs(row_pert[static_cast<std::size_t>(j)] -
                                                     row_base[static_cast<std::size_t>(j)]);
                                worst_q = std::max(worst_q, dq / dist);
                            }
                            double dr = std::abs(model.reward(i, a, mu_pert) - model.reward(i, a, mu));
                            worst_r = std::max(worst_r, dr / dist);
                        }
                    }
                }
            }
        }
    };
    double q_coarse = 0.0, r_coarse = 0.0, q_fine = 0.0, r_fine = 0.0;
    fd_scan(1e-3, q_coarse, r_coarse);
    fd_scan(5e-4, q_fine, r_fine);
    rep.intensity_lipschitz_estimate = std::max(q_coarse, q_fine);
    rep.reward_lipschitz_estimate = std::max(r_coarse, r_fine);
    if (q_fine > 1.4 * q_coarse && q_fine > 1.0)
        rep.warnings.push_back("intensity difference quotients grow as the probe scale shrinks; "
                               "the intensity may not be Lipschitz in the measure");
    if (r_fine > 1.4 * r_coarse && r_fine > 1.0)
        rep.warnings.push_back("reward difference quotients grow as the probe scale shrinks; "
                               "the reward may not be Lipschitz in the measure");
    return rep;
}

ActionDistribution lift_policy_at(const ModelSpec& model, std::span<const int> agent_states,
                                  std::span<const int> agent_action_indices, int i) {
    if (agent_states.size() != agent_action_indices.size())
        throw InvalidParameter("lift_policy: one action index per agent required");
    const int grid_size = model.actions.count(i);
    std::int64_t occupants = 0;
    ActionDistribution d;
    d.weights.assign(static_cast<std::size_t>(grid_size), 0.0);
    for (std::size_t k = 0; k < agent_states.size(); ++k) {
        if (agent_states[k] != i) continue;
        int a = agent_action_indices[k];
        if (a < 0 || a >= grid_size)
            throw InvalidParameter("lift_policy: action index out of range for its state's grid");
        d.weights[static_cast<std::size_t>(a)] += 1.0;
        ++occupants;
    }
    if (occupants == 0) throw EmptySourceState("lift_policy: no agent occupies the requested state");
    for (double& w : d.weights) w /= static_cast<double>(occupants);
    return d;
}

ControlVector lift_policy(const ModelSpec& model, std::span<const int> agent_states,
                          std::span<const int> agent_action_indices) {
    ControlVector out;
    out.reserve(static_cast<std::size_t>(model.num_states()));
    for (int i = 0; i < model.num_states(); ++i) {
        bool occupied = false;
        for (int s : agent_states)
            if (s == i) {
                occupied = true;
                break;
            }
        if (occupied)
            out.push_back(lift_policy_at(model, agent_states, agent_action_indices, i));
        else
            out.push_back(ActionDistribution::uniform(model.actions.count(i)));
    }
    return out;
}

}  // namespace mfmdp
