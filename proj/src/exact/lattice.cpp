#include "exact/lattice.hpp"

#include <functional>
#include <limits>

#include "core/errors.hpp"

namespace mfmdp {

namespace {
constexpr std::int64_t kSaturate = std::numeric_limits<std::int64_t>::max() / 2;
}

SimplexLattice::SimplexLattice(std::int64_t agents, int n_states, std::int64_t cap)
    : agents_(agents), n_states_(n_states) {
    if (agents < 1 || n_states < 2)
        throw InvalidParameter("lattice: need at least one agent and two states");

    compositions_.assign(static_cast<std::size_t>(agents + 1),
                         std::vector<std::int64_t>(static_cast<std::size_t>(n_states + 1), 0));
    for (int p = 0; p <= n_states; ++p) compositions_[0][static_cast<std::size_t>(p)] = 1;
    for (std::int64_t m = 1; m <= agents; ++m) {
        for (int p = 1; p <= n_states; ++p) {
            std::int64_t a = compositions_[static_cast<std::size_t>(m - 1)][static_cast<std::size_t>(p)];
            std::int64_t b = compositions_[static_cast<std::size_t>(m)][static_cast<std::size_t>(p - 1)];
            std::int64_t sum = a > kSaturate - b ? kSaturate : a + b;
            compositions_[static_cast<std::size_t>(m)][static_cast<std::size_t>(p)] = sum;
        }
    }
    size_ = compositions_[static_cast<std::size_t>(agents)][static_cast<std::size_t>(n_states)];
    if (size_ > cap) throw LatticeTooLarge("lattice: size exceeds the configured cap");

    counts_.reserve(static_cast<std::size_t>(size_) * static_cast<std::size_t>(n_states));
    std::vector<std::int64_t> c(static_cast<std::size_t>(n_states), 0);
    std::function<void(int, std::int64_t)> gen = [&](int coord, std::int64_t remaining) {
        if (coord == 0) {
            c[0] = remaining;
            counts_.insert(counts_.end(), c.begin(), c.end());
            return;
        }
        for (std::int64_t v = 0; v <= remaining; ++v) {
            c[static_cast<std::size_t>(coord)] = v;
            gen(coord - 1, remaining - v);
        }
    };
    gen(n_states - 1, agents);
}

EmpiricalMeasure SimplexLattice::measure(std::int64_t index) const {
    EmpiricalMeasure mu;
    mu.agents = agents_;
    auto c = counts(index);
    mu.counts.assign(c.begin(), c.end());
    return mu;
}

std::vector<double> SimplexLattice::fractions(std::int64_t index) const {
    auto c = counts(index);
    std::vector<double> f(c.size());
    for (std::size_t i = 0; i < c.size(); ++i)
        f[i] = static_cast<double>(c[i]) / static_cast<double>(agents_);
    return f;
}

std::int64_t SimplexLattice::rank(std::span<const std::int64_t> counts) const {
    std::int64_t r = 0;
    std::int64_t m = agents_;
    for (int coord = n_states_ - 1; coord >= 1; --coord) {
        std::int64_t c = counts[static_cast<std::size_t>(coord)];
        for (std::int64_t d = 0; d < c; ++d)
            r += compositions_[static_cast<std::size_t>(m - d)][static_cast<std::size_t>(coord)];
        m -= c;
    }
    return r;
}

std::int64_t SimplexLattice::neighbor(std::int64_t index, int from, int to) const {
    if (from == to) throw SameState("lattice neighbor: source and destination coincide");
    auto c = counts(index);
    if (c[static_cast<std::size_t>(from)] == 0)
        throw EmptySourceState("lattice neighbor: no agent occupies the source state");
    std::vector<std::int64_t> moved(c.begin(), c.end());
    --moved[static_cast<std::size_t>(from)];
    ++moved[static_cast<std::size_t>(to)];
    return rank(moved);
}

SimplexLattice enumerate_lattice(std::int64_t agents, int n_states, std::int64_t cap) {
    return SimplexLattice(agents, n_states, cap);
}

}  // namespace mfmdp
