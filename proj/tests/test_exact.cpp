#include <cmath>
#include <cstdint>
#include <vector>

#include "doctest.h"

#include "core/registry.hpp"
#include "exact/lattice.hpp"
#include "exact/solve.hpp"

using namespace mfmdp;

TEST_CASE("lattice enumerates count vectors in colex order") {
    const SimplexLattice lat = enumerate_lattice(2, 3);
    CHECK(lat.agents() == 2);
    CHECK(lat.states() == 3);
    REQUIRE(lat.size() == 6);

    const std::vector<std::vector<std::int64_t>> expected{
        {2, 0, 0}, {1, 1, 0}, {0, 2, 0}, {1, 0, 1}, {0, 1, 1}, {0, 0, 2}};
    for (std::int64_t k = 0; k < 6; ++k) {
        const auto counts = lat.counts(k);
        const auto& want = expected[static_cast<std::size_t>(k)];
        REQUIRE(counts.size() == 3);
        for (int i = 0; i < 3; ++i) CHECK(counts[static_cast<std::size_t>(i)] == want[static_cast<std::size_t>(i)]);
    }

    const EmpiricalMeasure mu = lat.measure(1);
    CHECK(mu.agents == 2);
    CHECK(mu.counts == std::vector<std::int64_t>{1, 1, 0});
    CHECK(lat.fractions(1) == std::vector<double>{0.5, 0.5, 0.0});
}

TEST_CASE("rank inverts the enumeration") {
    for (const auto& [agents, states] : std::vector<std::pair<std::int64_t, int>>{{5, 3}, {3, 4}, {7, 2}}) {
        const SimplexLattice lat = enumerate_lattice(agents, states);
        for (std::int64_t k = 0; k < lat.size(); ++k) CHECK(lat.rank(lat.counts(k)) == k);
    }
}

TEST_CASE("neighbor moves a single agent") {
    const SimplexLattice lat = enumerate_lattice(3, 3);
    for (std::int64_t k = 0; k < lat.size(); ++k) {
        const auto counts = lat.counts(k);
        for (int from = 0; from < 3; ++from) {
            if (counts[static_cast<std::size_t>(from)] == 0) {
                for (int to = 0; to < 3; ++to)
                    if (to != from) CHECK_THROWS_AS(lat.neighbor(k, from, to), EmptySourceState);
                continue;
            }
            CHECK_THROWS_AS(lat.neighbor(k, from, from), SameState);
            for (int to = 0; to < 3; ++to) {
                if (to == from) continue;
                std::vector<std::int64_t> moved(counts.begin(), counts.end());
                --moved[static_cast<std::size_t>(from)];
                ++moved[static_cast<std::size_t>(to)];
                CHECK(lat.neighbor(k, from, to) == lat.rank(moved));
            }
        }
    }
}

TEST_CASE("oversized lattices are refused") {
    // 100 agents over 6 states enumerate to ~9.7e7 points.
    CHECK_THROWS_AS(enumerate_lattice(100, 6, 1000), LatticeTooLarge);
}

TEST_CASE("value iteration lands on the fixed point of its operator") {
    const ModelSpec m = registry_get("machine_replacement", {{"beta", 1.0}});
    const ValueTable vt = value_iteration(m, 3, 1e-10);
    CHECK(vt.beta == 1.0);
    CHECK(vt.tol == 1e-10);
    CHECK(vt.lambda_bar == doctest::Approx(3.0 * 1.0 * 2.0));
    CHECK(vt.iterations > 0);
    REQUIRE(vt.values.size() == 4);
    REQUIRE(vt.policy.size() == 8);

    const BellmanSweep sweep = bellman_operator(m, vt.lattice, vt.values);
    double residual = 0.0;
    for (std::size_t p = 0; p < vt.values.size(); ++p)
        residual = std::max(residual, std::abs(sweep.values[p] - vt.values[p]));
    CHECK(residual <= 1e-9);

    // With earnings capped at g = 2 and costs at C = 1, the discounted value
    // sits inside [-C, g] / beta.
    for (double v : vt.values) {
        CHECK(v <= 2.0 + 1e-9);
        CHECK(v >= -1.0 - 1e-9);
    }
    for (std::int64_t p = 0; p < vt.lattice.size(); ++p)
        for (int i = 0; i < 2; ++i) {
            CHECK(vt.action_at(p, i) >= 0);
            CHECK(vt.action_at(p, i) < m.actions.count(i));
        }

    CHECK_THROWS_AS(value_iteration(registry_get("machine_replacement"), 2), UndiscountedInfinite);
}

TEST_CASE("exact action ties resolve to the lowest index") {
    ModelSpec m = registry_get("machine_replacement", {{"beta", 0.5}}, false);
    // Duplicate the repair level so both actions are indistinguishable.
    m.actions.per_state[1] = {1.0, 1.0};
    const SimplexLattice lat = enumerate_lattice(3, 2);
    std::vector<double> v(static_cast<std::size_t>(lat.size()), 0.0);
    const BellmanSweep sweep = bellman_operator(m, lat, v);
    for (std::int64_t p = 0; p < lat.size(); ++p)
        CHECK(sweep.policy[static_cast<std::size_t>(p) * 2 + 1] == 0);
}

TEST_CASE("probed intensity bound keeps the larger of declared and observed") {
    const ModelSpec m = registry_get("machine_replacement");
    CHECK(probed_q_max(m) == doctest::Approx(2.0));

    ModelSpec understated = registry_get("machine_replacement", {}, false);
    understated.q_max = 0.5;
    CHECK(probed_q_max(understated) == doctest::Approx(2.0));

    ModelSpec padded = registry_get("machine_replacement", {}, false);
    padded.q_max = 10.0;
    CHECK(probed_q_max(padded) == doctest::Approx(10.0));
}

TEST_CASE("finite-horizon solver rejects steps beyond the stability bound") {
    const ModelSpec m = registry_get("machine_replacement");
    // N = 2 gives Lbar = 4, so steps above 0.125 violate h * Lbar <= 0.5.
    CHECK_THROWS_AS(finite_horizon_solve(m, 2, TimeGrid::uniform(4.0, 16)), StepTooLarge);
    CHECK_NOTHROW(finite_horizon_solve(m, 2, TimeGrid::uniform(4.0, 64)));
}

TEST_CASE("policy evaluation matches the single-agent closed form and is dominated") {
    const ModelSpec m = registry_get("machine_replacement");

    SUBCASE("one always-repairing agent") {
        // For a single agent the expected flow reward is 3 P(working) - 1 with
        // P(working)(t) = 2/3 + e^(-3t)/3 under full repair, integrating to
        // T + (1 - e^(-3T))/3 over [0, T].
        const Policy always = Policy::open_loop(RelaxedControlPath::constant(
            {ActionDistribution::dirac(0, 1), ActionDistribution::dirac(1, 2)}));
        const FiniteHorizonResult pe = policy_evaluation(m, 1, always, TimeGrid::uniform(4.0, 256));
        const std::vector<std::int64_t> start{1, 0};
        const double v = pe.v0[static_cast<std::size_t>(pe.lattice.rank(start))];
        CHECK(v == doctest::Approx(4.0 + (1.0 - std::exp(-12.0)) / 3.0).epsilon(1e-7));
    }

    SUBCASE("the optimal value dominates any fixed policy") {
        const TimeGrid grid = TimeGrid::uniform(4.0, 256);
        const FiniteHorizonResult fh = finite_horizon_solve(m, 4, grid);
        const Policy half = Policy::open_loop(RelaxedControlPath::constant(
            {ActionDistribution::dirac(0, 1), ActionDistribution::two_point(0.5)}));
        const FiniteHorizonResult pe = policy_evaluation(m, 4, half, grid);
        REQUIRE(fh.v0.size() == pe.v0.size());
        for (std::size_t p = 0; p < fh.v0.size(); ++p) CHECK(pe.v0[p] <= fh.v0[p] + 1e-9);
        for (double v : fh.vT) CHECK(v == 0.0);
        CHECK_FALSE(fh.policy_times.empty());
        CHECK_FALSE(fh.policy_slices.empty());
    }
}
