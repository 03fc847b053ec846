#pragma once

#include <vector>

namespace mfmdp {

// Time discretization of [0, T]. Built so that every requested breakpoint is
// a node and each inter-breakpoint segment carries an even, uniform number of
// steps (even counts keep Simpson quadrature applicable per segment).
struct TimeGrid {
    std::vector<double> nodes;           // increasing, nodes.front() = 0, nodes.back() = T
    std::vector<std::size_t> seg_starts; // node index of each segment boundary, ends with nodes.size()-1

    double horizon() const { return nodes.back(); }
    std::size_t steps() const { return nodes.size() - 1; }
    double max_step() const;

    static TimeGrid uniform(double T, std::size_t n_steps);
    static TimeGrid build(double T, double target_step, const std::vector<double>& breakpoints);
};

}  // namespace mfmdp
