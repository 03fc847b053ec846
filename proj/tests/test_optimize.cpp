#include <cmath>
#include <vector>

#include "doctest.h"

#include "core/registry.hpp"
#include "limit/ode.hpp"
#include "limit/optimize.hpp"

using namespace mfmdp;

namespace {

// Value of repairing fully until t2 and then coasting, starting all-working:
// the working fraction is 2/3 + e^(-3t)/3 up to t2 and decays at unit rate
// afterwards, with flow reward 3x - 1 while repairing and 2x after.
double stop_repair_value(double t2, double T) {
    const double x2 = 2.0 / 3.0 + std::exp(-3.0 * t2) / 3.0;
    const double phase1 = t2 + (1.0 - std::exp(-3.0 * t2)) / 3.0;
    const double phase2 = 2.0 * x2 * (1.0 - std::exp(-(T - t2)));
    return phase1 + phase2;
}

}  // namespace

TEST_CASE("switching families build piecewise-constant controls") {
    const ModelSpec m = registry_get("machine_replacement");

    const SwitchingFamily three = switching_family(m, "three_phase");
    CHECK(three.name == "three_phase");
    REQUIRE(three.bounds.size() == 3);
    const std::vector<double> params{1.0, 0.5, 3.0};
    const RelaxedControlPath path = three.build(params);
    CHECK_NOTHROW(path.check());
    CHECK(path.breakpoints == std::vector<double>{0.0, 1.0, 3.0});
    CHECK(path.covers(4.0));
    CHECK(path.at(0.5)[1].weights == std::vector<double>{1.0, 0.0});
    CHECK(path.at(2.0)[1].weights == std::vector<double>{0.5, 0.5});
    CHECK(path.at(3.5)[1].weights == std::vector<double>{1.0, 0.0});

    const SwitchingFamily one = switching_family(m, "one_switch");
    REQUIRE(one.bounds.size() == 1);
    const std::vector<double> t1{2.0};
    const RelaxedControlPath flip = one.build(t1);
    CHECK(flip.breakpoints == std::vector<double>{0.0, 2.0});
    CHECK(flip.at(1.0)[1].weights == std::vector<double>{1.0, 0.0});
    CHECK(flip.at(3.0)[1].weights == std::vector<double>{0.0, 1.0});

    CHECK_THROWS_AS(switching_family(m, "five_phase"), InvalidParameter);
    CHECK_THROWS_AS(switching_family(registry_get("cube_root"), "one_switch"), InvalidParameter);
}

TEST_CASE("the switching optimizer recovers the stop-repair optimum") {
    const ModelSpec m = registry_get("machine_replacement");
    const double t2_star = 4.0 - std::log(4.0 / 3.0);
    const double v_star = stop_repair_value(t2_star, 4.0);

    const OptimizeResult res = optimize_switching(m, switching_family(m, "three_phase"));
    REQUIRE(res.parameters.size() == 3);
    CHECK(res.parameters[0] <= 0.01);
    CHECK(res.parameters[1] >= 0.99);
    CHECK(std::abs(res.parameters[2] - t2_star) <= 5e-3);
    CHECK(res.value == doctest::Approx(v_star).epsilon(1e-5));
    CHECK(res.value <= v_star + 1e-6);
    CHECK(res.control.covers(4.0));
    CHECK_FALSE(res.trajectory.states.empty());

    // The first-order condition pins the optimum: d(value)/d(t2) = 0 exactly
    // at t2*, so nearby values fall below it.
    CHECK(stop_repair_value(t2_star - 0.1, 4.0) < v_star);
    CHECK(stop_repair_value(t2_star + 0.1, 4.0) < v_star);
}

TEST_CASE("the shared repair cost moves the optimum to the hold-at-half plateau") {
    const ModelSpec m = registry_get("machine_replacement", {{"shared_repair_cost", 1.0}});
    const double ln2 = std::log(2.0);

    const OptimizeResult res = optimize_switching(m, switching_family(m, "three_phase"));
    REQUIRE(res.parameters.size() == 3);
    CHECK(std::abs(res.parameters[0] - ln2) <= 5e-3);
    CHECK(std::abs(res.parameters[1] - 0.5) <= 5e-3);
    CHECK(std::abs(res.parameters[2] - (4.0 - ln2)) <= 5e-3);
    // Coasting to x = 1/2, holding with half effort, then releasing earns
    // 7/2 - ln 2.
    CHECK(res.value == doctest::Approx(3.5 - ln2).epsilon(1e-5));
}

TEST_CASE("direct ascent is sandwiched by the true optimum") {
    const ModelSpec m = registry_get("machine_replacement");
    const double v_star = stop_repair_value(4.0 - std::log(4.0 / 3.0), 4.0);

    DirectOptions opts;
    opts.segments = 8;
    opts.max_iterations = 40;
    const OptimizeResult res = optimize_direct(m, opts);
    CHECK(res.value <= v_star + 1e-6);
    CHECK(res.value >= v_star - 0.05);
    CHECK(res.control.covers(4.0));

    SUBCASE("warm starts cannot do worse than their seed") {
        const RelaxedControlPath half = RelaxedControlPath::constant(
            {ActionDistribution::dirac(0, 1), ActionDistribution::two_point(0.5)});
        const double seed_value = objective_F(m, m.initial, half, default_grid(m, half));
        DirectOptions short_run;
        short_run.segments = 8;
        short_run.max_iterations = 5;
        const OptimizeResult warm = optimize_direct(m, short_run, &half);
        CHECK(warm.value >= seed_value - 1e-9);
        CHECK(warm.value <= v_star + 1e-6);
    }
}

TEST_CASE("one-switch regression on the malware model") {
    const ModelSpec m = registry_get("sir_malware");
    const OptimizeResult res = optimize_switching(m, switching_family(m, "one_switch"));
    REQUIRE(res.parameters.size() == 1);
    // Pinned from the solved model: release, then destroy from t1 on.
    CHECK(res.parameters[0] == doctest::Approx(4.2736).epsilon(5e-3));
    CHECK(res.value == doctest::Approx(0.022936).epsilon(1e-2));
}
