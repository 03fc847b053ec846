#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "core/types.hpp"

namespace mfmdp {

// Complete enumeration of the count vectors of N agents over n_states states,
// in colexicographic order (last coordinate slowest). Ranking is
// combinatorial, so neighbor lookups need no hash map.
class SimplexLattice {
public:
    SimplexLattice(std::int64_t agents, int n_states, std::int64_t cap = 50'000'000);

    std::int64_t agents() const { return agents_; }
    int states() const { return n_states_; }
    std::int64_t size() const { return size_; }

    std::span<const std::int64_t> counts(std::int64_t index) const {
        return {counts_.data() + static_cast<std::size_t>(index) * static_cast<std::size_t>(n_states_),
                static_cast<std::size_t>(n_states_)};
    }
    EmpiricalMeasure measure(std::int64_t index) const;
    std::vector<double> fractions(std::int64_t index) const;

    std::int64_t rank(std::span<const std::int64_t> counts) const;
    // Index of the configuration after moving one agent from state `from` to
    // state `to`; requires counts[from] > 0.
    std::int64_t neighbor(std::int64_t index, int from, int to) const;

private:
    std::int64_t agents_;
    int n_states_;
    std::int64_t size_;
    std::vector<std::int64_t> counts_;
    // compositions_[m][p] = number of count vectors of m agents over p states.
    std::vector<std::vector<std::int64_t>> compositions_;
};

SimplexLattice enumerate_lattice(std::int64_t agents, int n_states,
                                 std::int64_t cap = 50'000'000);

}  // namespace mfmdp
