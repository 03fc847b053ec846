#include "core/types.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace mfmdp {

std::vector<double> interval_grid(double lo, double hi, int n) {
    if (n < 1 || hi < lo) throw InvalidParameter("interval_grid: need n >= 1 and hi >= lo");
    if (n == 1) return {lo};
    std::vector<double> g(static_cast<std::size_t>(n));
    for (int k = 0; k < n; ++k)
        g[static_cast<std::size_t>(k)] = lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(n - 1);
    g.back() = hi;
    return g;
}

ActionDistribution ActionDistribution::dirac(int index, int grid_size) {
    ActionDistribution d;
    d.weights.assign(static_cast<std::size_t>(grid_size), 0.0);
    d.weights[static_cast<std::size_t>(index)] = 1.0;
    return d;
}

ActionDistribution ActionDistribution::uniform(int grid_size) {
    ActionDistribution d;
    d.weights.assign(static_cast<std::size_t>(grid_size), 1.0 / static_cast<double>(grid_size));
    return d;
}

ActionDistribution ActionDistribution::two_point(double w_hi) {
    ActionDistribution d;
    d.weights = {1.0 - w_hi, w_hi};
    return d;
}

double ActionDistribution::sum() const {
    return std::accumulate(weights.begin(), weights.end(), 0.0);
}

bool ActionDistribution::valid(double tol) const {
    for (double w : weights)
        if (w < -tol) return false;
    return std::abs(sum() - 1.0) <= tol;
}

std::vector<double> EmpiricalMeasure::fractions() const {
    std::vector<double> f(counts.size());
    for (std::size_t i = 0; i < counts.size(); ++i)
        f[i] = static_cast<double>(counts[i]) / static_cast<double>(agents);
    return f;
}

bool EmpiricalMeasure::valid() const {
    if (agents <= 0) return false;
    std::int64_t total = 0;
    for (std::int64_t c : counts) {
        if (c < 0) return false;
        total += c;
    }
    return total == agents;
}

EmpiricalMeasure measure_transition(const EmpiricalMeasure& mu, int from, int to) {
    if (from == to) throw SameState("measure_transition: source and destination coincide");
    if (from < 0 || from >= mu.states() || to < 0 || to >= mu.states())
        throw InvalidParameter("measure_transition: state index out of range");
    if (mu.counts[static_cast<std::size_t>(from)] == 0)
        throw EmptySourceState("measure_transition: no agent occupies the source state");
    EmpiricalMeasure out = mu;
    --out.counts[static_cast<std::size_t>(from)];
    ++out.counts[static_cast<std::size_t>(to)];
    return out;
}

EmpiricalMeasure round_measure(std::span<const double> target, std::int64_t n_agents) {
    if (n_agents <= 0) throw InvalidParameter("round_measure: need at least one agent");
    double total = 0.0;
    for (double p : target) {
        if (p < 0.0) throw InvalidParameter("round_measure: negative probability");
        total += p;
    }
    if (std::abs(total - 1.0) > 1e-9) throw InvalidParameter("round_measure: probabilities must sum to 1");

    const std::size_t n = target.size();
    EmpiricalMeasure mu;
    mu.agents = n_agents;
    mu.counts.assign(n, 0);
    std::vector<double> remainder(n);
    std::int64_t assigned = 0;
    for (std::size_t i = 0; i < n; ++i) {
        double exact = target[i] * static_cast<double>(n_agents);
        double floor_part = std::floor(exact);
        mu.counts[i] = static_cast<std::int64_t>(floor_part);
        remainder[i] = exact - floor_part;
        assigned += mu.counts[i];
    }
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return remainder[a] > remainder[b]; });
    for (std::size_t k = 0; assigned < n_agents; ++k) {
        ++mu.counts[order[k % n]];
        ++assigned;
    }
    return mu;
}

EmpiricalMeasure sample_measure(std::span<const double> target, std::int64_t n_agents, RngStream& rng) {
    if (n_agents <= 0) throw InvalidParameter("sample_measure: need at least one agent");
    EmpiricalMeasure mu;
    mu.agents = n_agents;
    mu.counts.assign(target.size(), 0);
    for (std::int64_t k = 0; k < n_agents; ++k) {
        double u = rng.next_uniform();
        double acc = 0.0;
        std::size_t pick = target.size() - 1;
        for (std::size_t i = 0; i < target.size(); ++i) {
            acc += target[i];
            if (u < acc) {
                pick = i;
                break;
            }
        }
        ++mu.counts[pick];
    }
    return mu;
}

const ControlVector& RelaxedControlPath::at(double t) const {
    return segments[static_cast<std::size_t>(segment_index(t))];
}

int RelaxedControlPath::segment_index(double t) const {
    // Last breakpoint <= t; times before the first breakpoint use segment 0.
    auto it = std::upper_bound(breakpoints.begin(), breakpoints.end(), t);
    if (it == breakpoints.begin()) return 0;
    return static_cast<int>(std::distance(breakpoints.begin(), it)) - 1;
}

void RelaxedControlPath::check() const {
    if (breakpoints.empty() || segments.size() != breakpoints.size())
        throw InvalidParameter("control path: need one segment per breakpoint");
    if (breakpoints.front() != 0.0)
        throw InvalidParameter("control path: first breakpoint must be 0");
    for (std::size_t k = 1; k < breakpoints.size(); ++k)
        if (!(breakpoints[k] > breakpoints[k - 1]))
            throw InvalidParameter("control path: breakpoints must increase strictly");
    for (const ControlVector& cv : segments)
        for (const ActionDistribution& d : cv)
            if (!d.valid()) throw InvalidParameter("control path: action weights must form a distribution");
}

RelaxedControlPath RelaxedControlPath::constant(ControlVector control) {
    RelaxedControlPath p;
    p.breakpoints = {0.0};
    p.segments.push_back(std::move(control));
    return p;
}

}  // namespace mfmdp
