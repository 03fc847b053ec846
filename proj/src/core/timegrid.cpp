#include "core/timegrid.hpp"

#include <algorithm>
#include <cmath>

#include "core/errors.hpp"

namespace mfmdp {

double TimeGrid::max_step() const {
    double h = 0.0;
    for (std::size_t k = 0; k + 1 < nodes.size(); ++k) h = std::max(h, nodes[k + 1] - nodes[k]);
    return h;
}

TimeGrid TimeGrid::uniform(double T, std::size_t n_steps) {
    if (!(T > 0.0) || n_steps == 0) throw InvalidParameter("time grid: need T > 0 and at least one step");
    TimeGrid g;
    g.nodes.resize(n_steps + 1);
    for (std::size_t k = 0; k <= n_steps; ++k)
        g.nodes[k] = T * static_cast<double>(k) / static_cast<double>(n_steps);
    g.nodes.back() = T;
    g.seg_starts = {0, n_steps};
    return g;
}

TimeGrid TimeGrid::build(double T, double target_step, const std::vector<double>& breakpoints) {
    if (!(T > 0.0) || !(target_step > 0.0))
        throw InvalidParameter("time grid: need positive horizon and step");
    std::vector<double> bounds = {0.0, T};
    for (double b : breakpoints)
        if (b > 0.0 && b < T) bounds.push_back(b);
    std::sort(bounds.begin(), bounds.end());
    bounds.erase(std::unique(bounds.begin(), bounds.end()), bounds.end());
    // Drop boundaries that collide within floating tolerance.
    std::vector<double> clean = {bounds.front()};
    for (double b : bounds)
        if (b - clean.back() > 1e-12 * T) clean.push_back(b);
    if (clean.back() != T) clean.back() = T;

    TimeGrid g;
    g.nodes.push_back(0.0);
    g.seg_starts.push_back(0);
    for (std::size_t s = 0; s + 1 < clean.size(); ++s) {
        double lo = clean[s], hi = clean[s + 1];
        double len = hi - lo;
        std::size_t n = static_cast<std::size_t>(std::ceil(len / target_step));
        if (n < 2) n = 2;
        if (n % 2 == 1) ++n;
        for (std::size_t k = 1; k <= n; ++k)
            g.nodes.push_back(lo + len * static_cast<double>(k) / static_cast<double>(n));
        g.nodes.back() = hi;
        g.seg_starts.push_back(g.nodes.size() - 1);
    }
    return g;
}

}  // namespace mfmdp
