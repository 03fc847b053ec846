#pragma once

#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "core/errors.hpp"
#include "core/rng.hpp"

namespace mfmdp {

struct StateSpace {
    std::vector<std::string> labels;

    int size() const { return static_cast<int>(labels.size()); }
};

// Finite admissible action values per state. Actions are scalar levels
// (activation fractions, rates); interval action sets are represented by
// grids, see interval_grid().
struct ActionGrid {
    std::vector<std::vector<double>> per_state;

    const std::vector<double>& at(int state) const { return per_state[static_cast<std::size_t>(state)]; }
    int count(int state) const { return static_cast<int>(at(state).size()); }
};

// Uniform grid with n points on [lo, hi]; n = 2 gives just the endpoints.
std::vector<double> interval_grid(double lo, double hi, int n = 101);

// Probability weights over one state's action grid.
struct ActionDistribution {
    std::vector<double> weights;

    static ActionDistribution dirac(int index, int grid_size);
    static ActionDistribution uniform(int grid_size);
    // Two-point mixture on a {lo, hi} grid putting mass w on the second entry.
    static ActionDistribution two_point(double w_hi);

    double sum() const;
    bool valid(double tol = 1e-12) const;
};

// One ActionDistribution per state.
using ControlVector = std::vector<ActionDistribution>;

// Occupancy counts of N agents over the state space; an exact point of the
// simplex lattice.
struct EmpiricalMeasure {
    std::vector<std::int64_t> counts;
    std::int64_t agents = 0;

    int states() const { return static_cast<int>(counts.size()); }
    double fraction(int i) const {
        return static_cast<double>(counts[static_cast<std::size_t>(i)]) / static_cast<double>(agents);
    }
    std::vector<double> fractions() const;
    bool valid() const;
};

// Move one agent from state i to state j. Pure integer bookkeeping.
EmpiricalMeasure measure_transition(const EmpiricalMeasure& mu, int from, int to);

// Largest-remainder rounding of a probability vector onto the lattice for
// n_agents agents. Deterministic; ties broken by lower state index.
EmpiricalMeasure round_measure(std::span<const double> target, std::int64_t n_agents);

// i.i.d. sampling of n_agents states from the target distribution.
EmpiricalMeasure sample_measure(std::span<const double> target, std::int64_t n_agents, RngStream& rng);

struct Horizon {
    bool is_finite = true;
    double length = 0.0;

    static Horizon finite(double T) { return Horizon{true, T}; }
    static Horizon infinite() { return Horizon{false, std::numeric_limits<double>::infinity()}; }
};

// Piecewise-constant relaxed control: segment k applies on
// [breakpoints[k], breakpoints[k+1]), the last segment up to valid_until.
struct RelaxedControlPath {
    std::vector<double> breakpoints;      // strictly increasing, starts at 0
    std::vector<ControlVector> segments;  // one per breakpoint
    double valid_until = std::numeric_limits<double>::infinity();

    const ControlVector& at(double t) const;
    int segment_index(double t) const;
    bool covers(double horizon) const { return valid_until >= horizon; }
    void check() const;  // throws InvalidParameter on structural problems

    static RelaxedControlPath constant(ControlVector control);
};

}  // namespace mfmdp
