#include <cmath>
#include <cstdint>
#include <vector>

#include "doctest.h"

#include "core/registry.hpp"
#include "sim/simulate.hpp"

using namespace mfmdp;

namespace {

// Two states, one agent stream 0 -> 1 at the given rate, nothing else moves.
ModelSpec decay_fixture(double rate, double beta, double T) {
    ModelSpec m;
    m.name = "decay";
    m.states.labels = {"up", "down"};
    m.actions.per_state = {{0.0}, {0.0}};
    m.intensity = [rate](int i, double, std::span<const double>, std::span<double> row) {
        if (i == 0) {
            row[1] = rate;
            row[0] = -rate;
        }
    };
    m.reward = [](int i, double, std::span<const double>) { return i == 0 ? 3.0 : 0.0; };
    m.terminal = [](std::span<const double> mu) { return 5.0 * mu[0]; };
    m.discount = beta;
    m.horizon = Horizon::finite(T);
    m.q_max = rate;
    m.initial = {1.0, 0.0};
    return m;
}

Policy hold(const ControlVector& cv) { return Policy::open_loop(RelaxedControlPath::constant(cv)); }

ControlVector uncontrolled2() {
    return {ActionDistribution::dirac(0, 1), ActionDistribution::dirac(0, 1)};
}

}  // namespace

TEST_CASE("first jump time follows the exponential clock") {
    const ModelSpec m = decay_fixture(1.5, 0.0, 50.0);
    const EmpiricalMeasure mu0{{1, 0}, 1};
    const Policy policy = hold(uncontrolled2());

    const int reps = 400;
    double mean = 0.0;
    for (int rep = 0; rep < reps; ++rep) {
        const Trajectory traj = simulate(m, mu0, policy, 21, static_cast<std::uint64_t>(rep));
        REQUIRE(traj.jump_times.size() >= 2);
        CHECK(traj.jump_times[0] == 0.0);
        CHECK(traj.measures[1].counts == std::vector<std::int64_t>{0, 1});
        mean += traj.jump_times[1];
    }
    mean /= reps;
    // 4 standard errors around the exponential mean 1/1.5.
    CHECK(std::abs(mean - 1.0 / 1.5) <= 4.0 / 1.5 / std::sqrt(static_cast<double>(reps)));
}

TEST_CASE("discounted rewards integrate each segment in closed form") {
    const EmpiricalMeasure mu0{{4, 0}, 4};
    const Policy policy = hold(uncontrolled2());

    SUBCASE("discounted") {
        const ModelSpec m = decay_fixture(0.0, 0.5, 2.0);
        const Trajectory traj = simulate(m, mu0, policy, 3);
        // Flow 3 discounted at 0.5 over [0,2], then the terminal 5 discounted.
        const double expected = 3.0 * (1.0 - std::exp(-1.0)) / 0.5 + std::exp(-1.0) * 5.0;
        CHECK(discounted_reward(m, traj) == doctest::Approx(expected).epsilon(1e-12));
    }

    SUBCASE("undiscounted") {
        const ModelSpec m = decay_fixture(0.0, 0.0, 2.0);
        const Trajectory traj = simulate(m, mu0, policy, 3);
        CHECK(discounted_reward(m, traj) == doctest::Approx(3.0 * 2.0 + 5.0).epsilon(1e-12));
    }
}

TEST_CASE("paths move one agent at a time and conserve the population") {
    const ModelSpec m = registry_get("machine_replacement");
    const EmpiricalMeasure mu0{{50, 0}, 50};
    const Policy policy =
        hold({ActionDistribution::dirac(0, 1), ActionDistribution::two_point(0.7)});

    const Trajectory traj = simulate(m, mu0, policy, 99);
    REQUIRE(traj.jump_times.size() == traj.measures.size());
    CHECK(traj.controls.size() == traj.measures.size());
    CHECK(traj.horizon == 4.0);
    for (std::size_t n = 0; n < traj.measures.size(); ++n) {
        CHECK(traj.measures[n].valid());
        CHECK(traj.measures[n].agents == 50);
        if (n == 0) continue;
        CHECK(traj.jump_times[n] > traj.jump_times[n - 1]);
        CHECK(traj.jump_times[n] <= traj.horizon);
        std::int64_t l1 = 0;
        for (int i = 0; i < 2; ++i)
            l1 += std::abs(traj.measures[n].counts[static_cast<std::size_t>(i)] -
                           traj.measures[n - 1].counts[static_cast<std::size_t>(i)]);
        CHECK(l1 == 2);
    }
}

TEST_CASE("seeded runs reproduce and streams are independent") {
    const ModelSpec m = registry_get("machine_replacement");
    const EmpiricalMeasure mu0{{20, 0}, 20};
    const Policy policy =
        hold({ActionDistribution::dirac(0, 1), ActionDistribution::two_point(0.5)});

    const Trajectory a = simulate(m, mu0, policy, 17, 4);
    const Trajectory b = simulate(m, mu0, policy, 17, 4);
    CHECK(a.jump_times == b.jump_times);
    REQUIRE(a.measures.size() == b.measures.size());
    for (std::size_t n = 0; n < a.measures.size(); ++n)
        CHECK(a.measures[n].counts == b.measures[n].counts);

    const Trajectory c = simulate(m, mu0, policy, 17, 5);
    CHECK(a.jump_times != c.jump_times);

    SUBCASE("monte_carlo_value statistics and worker invariance") {
        const MonteCarloValue mc = monte_carlo_value(m, mu0, policy, 40, 17);
        REQUIRE(mc.values.size() == 40);
        double mean = 0.0;
        for (double v : mc.values) mean += v;
        mean /= 40.0;
        double ss = 0.0;
        for (double v : mc.values) ss += (v - mean) * (v - mean);
        const double se = std::sqrt(ss / 39.0) / std::sqrt(40.0);
        CHECK(mc.mean == doctest::Approx(mean).epsilon(1e-13));
        CHECK(mc.std_error == doctest::Approx(se).epsilon(1e-12));

        const MonteCarloValue mc2 = monte_carlo_value(m, mu0, policy, 40, 17, 2);
        CHECK(mc2.mean == mc.mean);
        CHECK(mc2.values == mc.values);
    }
}

TEST_CASE("a frozen population fast-forwards to the horizon") {
    // The all-in-"2" start of the cube_root model has zero total intensity.
    const ModelSpec m = registry_get("cube_root");
    const EmpiricalMeasure mu0{{0, 100}, 100};
    const Trajectory traj = simulate(m, mu0, hold(uncontrolled2()), 8);
    CHECK(traj.jump_times == std::vector<double>{0.0});
    CHECK(traj.measure_at(1.2).counts == mu0.counts);
    CHECK(traj.horizon == 1.5);
}

TEST_CASE("evaluation window and truncation bound") {
    const ModelSpec finite = registry_get("machine_replacement");
    CHECK(evaluation_window(finite) == 4.0);
    CHECK(truncation_error_bound(finite) == 0.0);

    ModelSpec open = registry_get("machine_replacement", {{"beta", 0.8}});
    open.horizon = Horizon::infinite();
    CHECK(evaluation_window(open) == doctest::Approx(30.0 / 0.8));
    // Largest probed |reward| is the earning rate g = 2.
    CHECK(truncation_error_bound(open) == doctest::Approx(std::exp(-30.0) * 2.0 / 0.8));

    ModelSpec undiscounted = registry_get("machine_replacement");
    undiscounted.horizon = Horizon::infinite();
    CHECK_THROWS_AS(evaluation_window(undiscounted), InfiniteHorizonUntruncated);
}

TEST_CASE("martingale residual vanishes on a frozen path") {
    const ModelSpec m = registry_get("cube_root");
    const EmpiricalMeasure mu0{{0, 100}, 100};
    const Trajectory traj = simulate(m, mu0, hold(uncontrolled2()), 8);
    const std::vector<double> ts{0.25, 0.5, 1.0, 1.5};
    for (int j = 0; j < 2; ++j) {
        const MartingaleResidual res = martingale_residual(m, traj, j, ts);
        CHECK(res.state == j);
        REQUIRE(res.values.size() == ts.size());
        for (double v : res.values) CHECK(v == doctest::Approx(0.0).epsilon(1e-14));
    }
}

TEST_CASE("jump-adapted application of a piecewise-constant path matches open loop") {
    const ModelSpec m = registry_get("machine_replacement");
    const EmpiricalMeasure mu0{{30, 0}, 30};
    RelaxedControlPath path;
    path.breakpoints = {0.0, 1.0, 2.0};
    path.segments = {{ActionDistribution::dirac(0, 1), ActionDistribution::dirac(0, 2)},
                     {ActionDistribution::dirac(0, 1), ActionDistribution::two_point(0.5)},
                     {ActionDistribution::dirac(0, 1), ActionDistribution::dirac(1, 2)}};

    const Trajectory open = simulate(m, mu0, Policy::open_loop(path), 31);
    const Trajectory adapted = simulate(m, mu0, Policy::jump_adapted(path), 31);
    CHECK(open.jump_times == adapted.jump_times);
    REQUIRE(open.measures.size() == adapted.measures.size());
    for (std::size_t n = 0; n < open.measures.size(); ++n)
        CHECK(open.measures[n].counts == adapted.measures[n].counts);
}

TEST_CASE("joint simulation projects to a valid measure path") {
    const ModelSpec m = registry_get("machine_replacement");
    JointPolicy repair;
    repair.kernel = [](int k, const std::vector<int>& x, double) {
        const int state = x[static_cast<std::size_t>(k)];
        return state == 1 ? ActionDistribution::dirac(1, 2) : ActionDistribution::dirac(0, 1);
    };

    RngStream rng(5, 0);
    const std::vector<int> x0{0, 0, 1};
    const Trajectory traj = simulate_joint(m, x0, repair, rng);
    CHECK(traj.horizon == 4.0);
    REQUIRE_FALSE(traj.measures.empty());
    CHECK(traj.measures.front().counts == std::vector<std::int64_t>{2, 1});
    for (std::size_t n = 0; n < traj.measures.size(); ++n) {
        CHECK(traj.measures[n].valid());
        CHECK(traj.measures[n].agents == 3);
    }
    for (std::size_t n = 1; n < traj.measures.size(); ++n) {
        CHECK(traj.jump_times[n] > traj.jump_times[n - 1]);
        CHECK(traj.jump_times[n] <= traj.horizon);
        std::int64_t moved = 0;
        for (std::size_t i = 0; i < traj.measures[n].counts.size(); ++i)
            moved += std::abs(traj.measures[n].counts[i] - traj.measures[n - 1].counts[i]);
        CHECK(moved == 2);
    }

    RngStream rng2(5, 0);
    const Trajectory same = simulate_joint(m, x0, repair, rng2);
    CHECK(traj.jump_times == same.jump_times);
    REQUIRE(traj.measures.size() == same.measures.size());
    for (std::size_t n = 0; n < traj.measures.size(); ++n)
        CHECK(traj.measures[n].counts == same.measures[n].counts);
}

TEST_CASE("system rates aggregate per-agent intensities") {
    const ModelSpec m = registry_get("machine_replacement");
    const EmpiricalMeasure mu{{3, 2}, 5};
    const ControlVector cv{ActionDistribution::dirac(0, 1), ActionDistribution::two_point(0.4)};

    double r01 = 0.0, r10 = 0.0, other = 0.0;
    for (const SystemRate& sr : system_rates(m, mu, cv)) {
        if (sr.from == 0 && sr.to == 1)
            r01 += sr.rate;
        else if (sr.from == 1 && sr.to == 0)
            r10 += sr.rate;
        else
            other += std::abs(sr.rate);
    }
    CHECK(r01 == doctest::Approx(3.0));        // 3 working, each breaking at rate 1
    CHECK(r10 == doctest::Approx(2.0 * 0.4 * 2.0));  // 2 broken, mean repair effort 0.4, rate 2
    CHECK(other == 0.0);
}
