#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "core/model.hpp"
#include "core/timegrid.hpp"
#include "exact/lattice.hpp"
#include "sim/simulate.hpp"

namespace mfmdp {

// Largest intensity magnitude the solver should plan for: the declared bound
// or the probed maximum over the default grid, whichever is larger.
double probed_q_max(const ModelSpec& model);

struct ValueTable {
    SimplexLattice lattice;
    std::vector<double> values;  // one per lattice point
    std::vector<int> policy;     // point-major, one action index per state; empty if not extracted
    double beta = 0.0;
    double tol = 0.0;
    double lambda_bar = 0.0;
    std::int64_t iterations = 0;

    int action_at(std::int64_t point, int state) const {
        return policy[static_cast<std::size_t>(point) * static_cast<std::size_t>(lattice.states()) +
                      static_cast<std::size_t>(state)];
    }
};

struct BellmanSweep {
    std::vector<double> values;
    std::vector<int> policy;
};

// One application of the uniformized optimality operator
//   (Tv)(mu) = [ Lbar v(mu) + sum_i max_a { mu(i) r(i,a,mu)
//                + counts_i sum_{j != i} q(j|i,a,mu) (v(mu^{i->j}) - v(mu)) } ] / (beta + Lbar)
// with Lbar = N (|S|-1) q_max. The maximum over product controls splits into
// per-state maxima because rates and rewards are affine in each state's
// action distribution; ties resolve to the lowest action index.
BellmanSweep bellman_operator(const ModelSpec& model, const SimplexLattice& lattice,
                              std::span<const double> v);

// Fixed-point iteration of the operator above, stopped once the sup-norm
// update is at most tol * beta / Lbar so the result is within tol of the
// fixed point.
ValueTable value_iteration(const ModelSpec& model, std::int64_t agents, double tol = 1e-8,
                           std::int64_t lattice_cap = 50'000'000);

struct FiniteHorizonResult {
    SimplexLattice lattice;
    TimeGrid grid;
    std::vector<double> v0;  // values at time 0
    std::vector<double> vT;  // terminal values
    std::vector<double> policy_times;
    std::vector<std::vector<int>> policy_slices;  // per recorded time, point-major action indices
    double lambda_bar = 0.0;
};

// Backward RK4 on dv/dt(mu) = beta v(mu) - max_a[...] from v(T, mu) = g(mu).
FiniteHorizonResult finite_horizon_solve(const ModelSpec& model, std::int64_t agents,
                                         const TimeGrid& grid,
                                         std::int64_t lattice_cap = 50'000'000);

// Same backward integration with the maximum replaced by the given policy's
// control, so v(0, mu) is the exact expected discounted reward under it.
FiniteHorizonResult policy_evaluation(const ModelSpec& model, std::int64_t agents,
                                      const Policy& policy, const TimeGrid& grid,
                                      std::int64_t lattice_cap = 50'000'000);

}  // namespace mfmdp
