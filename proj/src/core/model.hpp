#pragma once

#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "core/types.hpp"

namespace mfmdp {

// A controlled mean-field model on a finite state space.
//
// intensity(i, a, mu, row) writes the full generator row of an agent in state
// i using action a while the population is at mu: row[j] is the rate of
// jumping to j for j != i, and row[i] the diagonal entry, which a well-formed
// model sets to the negative off-diagonal sum. reward(i, a, mu) is the
// per-agent running reward; terminal(mu) the terminal reward on the
// population. q_max bounds every off-diagonal intensity over states, actions,
// and measures.
struct ModelSpec {
    std::string name;
    StateSpace states;
    ActionGrid actions;
    std::function<void(int, double, std::span<const double>, std::span<double>)> intensity;
    std::function<double(int, double, std::span<const double>)> reward;
    std::function<double(std::span<const double>)> terminal;
    double discount = 0.0;
    Horizon horizon = Horizon::finite(1.0);
    double q_max = 0.0;
    std::vector<double> initial;  // default initial distribution
    std::map<std::string, double> params;

    int num_states() const { return states.size(); }
    // Zero-fills row, then invokes the intensity callback.
    void intensity_row(int i, double a, std::span<const double> mu, std::span<double> row) const;

    // Mean intensity row under a relaxed action: sum_k w_k * q(.|i, a_k, mu).
    void relaxed_intensity_row(int i, const ActionDistribution& d, std::span<const double> mu,
                               std::span<double> row) const;
    double relaxed_reward(int i, const ActionDistribution& d, std::span<const double> mu) const;
};

// Population-level running reward sum_i mu(i) * E_{a ~ alpha_i}[r(i, a, mu)].
double system_reward(const ModelSpec& model, std::span<const double> mu, const ControlVector& control);

struct AssumptionCheck {
    bool pass = true;
    double worst = 0.0;       // largest violation magnitude seen
    std::string worst_where;  // description of the probe achieving it
};

struct ValidationReport {
    AssumptionCheck off_diagonal_nonnegative;  // hard
    AssumptionCheck zero_row_sums;             // hard
    double q_max_observed = 0.0;
    double q_max_declared = 0.0;
    bool q_max_consistent = true;
    // Finite-difference continuity diagnostics (warnings only).
    double intensity_lipschitz_estimate = 0.0;
    double reward_lipschitz_estimate = 0.0;
    std::vector<std::string> warnings;

    bool hard_pass() const { return off_diagonal_nonnegative.pass && zero_row_sums.pass; }
    std::string summary() const;
};

// Default probe grid: all vertices, the uniform measure, and the lattice of
// measures with denominator lattice_agents.
std::vector<std::vector<double>> default_probe_grid(int n_states, int lattice_agents = 8);

// Probe the model over the given measures and all grid actions. Off-diagonal
// nonnegativity and zero row sums are hard checks; continuity in mu is probed
// by finite differences and reported as a warning when estimates blow up.
ValidationReport validate_assumptions(const ModelSpec& model,
                                      const std::vector<std::vector<double>>& probe_grid,
                                      double tol = 1e-12);
ValidationReport validate_assumptions(const ModelSpec& model);

// Empirical relaxed control induced on state i by per-agent actions: each of
// the count(i) agents in state i contributes weight 1/count(i) at its action.
// Throws EmptySourceState when no agent occupies i.
ActionDistribution lift_policy_at(const ModelSpec& model, std::span<const int> agent_states,
                                  std::span<const int> agent_action_indices, int i);

// Full lifted control vector; unoccupied states get a uniform placeholder
// (their lifted kernel is arbitrary: they contribute no rate and no reward).
ControlVector lift_policy(const ModelSpec& model, std::span<const int> agent_states,
                          std::span<const int> agent_action_indices);

}  // namespace mfmdp
