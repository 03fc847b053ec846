#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <vector>

#include "doctest.h"

#include "core/registry.hpp"
#include "experiments/studies.hpp"
#include "limit/ode.hpp"

using namespace mfmdp;

namespace {

RelaxedControlPath no_repair() {
    return RelaxedControlPath::constant(
        {ActionDistribution::dirac(0, 1), ActionDistribution::dirac(0, 2)});
}

// Repair model with quadratic earnings: each working machine earns 2 * mu_w,
// so the population flow reward is 2 mu_w^2. With no repair the agents decay
// independently, mu_w(t) is Binomial(N, e^(-t))/N, and
//   V^N - V^F = 2 int_0^T p(1-p)/N dt,  p(t) = e^(-t),
// giving an exact 1/N decay of the value gap.
ModelSpec quadratic_fixture() {
    ModelSpec m = registry_get("machine_replacement", {}, false);
    m.reward = [](int i, double a, std::span<const double> mu) {
        return i == 0 ? 2.0 * mu[0] : -a;
    };
    return m;
}

double quadratic_gap_constant(double T) {
    return 2.0 * ((1.0 - std::exp(-T)) - (1.0 - std::exp(-2.0 * T)) / 2.0);
}

}  // namespace

TEST_CASE("equivalence study ties the three evaluators together") {
    const ModelSpec m = registry_get("machine_replacement");
    const EquivalenceReport rep = equivalence_study(m, 2, 515, 300);
    CHECK(rep.N == 2);
    CHECK(rep.replications == 300);
    CHECK(rep.joint_states_probed == 4);
    CHECK(rep.identity_max_error <= 1e-12);
    CHECK(rep.per_state_identity.size() == 4);
    CHECK(rep.permutation_exact);
    CHECK(std::abs(rep.measure_mc_mean - rep.exact_value) <= 4.0 * rep.measure_mc_se);
    CHECK(std::abs(rep.joint_mc_mean - rep.exact_value) <= 4.0 * rep.joint_mc_se);

    CHECK_THROWS_AS(equivalence_study(m, 9, 1, 10), InvalidParameter);
}

TEST_CASE("rate study reports the exact 1/N gap of the quadratic fixture") {
    const ModelSpec m = quadratic_fixture();
    const std::vector<std::int64_t> Ns{8, 16, 32, 64, 128};
    const RateStudyResult res = rate_study(m, no_repair(), Ns, "exact", 7);

    // Limit value: 2 int_0^4 e^(-2t) dt = 1 - e^(-8).
    CHECK(res.limit_value == doctest::Approx(1.0 - std::exp(-8.0)).epsilon(1e-8));
    const double c = quadratic_gap_constant(4.0);
    REQUIRE(res.values.size() == Ns.size());
    for (std::size_t k = 0; k < Ns.size(); ++k) {
        CHECK(res.modes[k] == "exact");
        CHECK(res.std_errors[k] == 0.0);
        const double N = static_cast<double>(Ns[k]);
        CHECK(res.gaps[k] * N == doctest::Approx(c).epsilon(1e-5));
        // The N-agent fleet overshoots the limit, so the signed gap is negative.
        CHECK(res.signed_gaps[k] == doctest::Approx(-c / N).epsilon(1e-5));
        CHECK(res.sqrtn_gaps[k] == doctest::Approx(c / std::sqrt(N)).epsilon(1e-5));
    }
    CHECK(res.loglog_slope == doctest::Approx(-1.0).epsilon(1e-3));

    SUBCASE("monte-carlo mode agrees within its error bars") {
        const RateStudyResult mc = rate_study(m, no_repair(), {25, 50}, "mc", 11, 200);
        REQUIRE(mc.values.size() == 2);
        for (std::size_t k = 0; k < 2; ++k) {
            CHECK(mc.modes[k] == "mc");
            CHECK(mc.std_errors[k] > 0.0);
            const double truth = mc.limit_value + c / static_cast<double>(mc.Ns[k]);
            CHECK(std::abs(mc.values[k] - truth) <= 4.0 * mc.std_errors[k]);
        }
    }

    CHECK_THROWS_AS(rate_study(m, no_repair(), {40, 20}, "exact", 1), InvalidParameter);
}

TEST_CASE("rate study sees only integrator noise on the affine repair model") {
    const ModelSpec m = registry_get("machine_replacement");
    const RateStudyResult res = rate_study(m, no_repair(), {10, 20, 40}, "exact", 7);
    CHECK(res.limit_value == doctest::Approx(2.0 * (1.0 - std::exp(-4.0))).epsilon(1e-8));
    for (double gap : res.gaps) CHECK(gap <= 1e-6);
}

TEST_CASE("nonuniqueness demo separates the frozen and growing branches") {
    const NonuniquenessResult res = nonuniqueness_demo(100, 10001, 4242, 1.0);
    CHECK(res.N_even == 100);
    CHECK(res.N_odd == 10001);
    CHECK(res.grid_times.size() == 200);
    CHECK(res.t_cap == 1.0);
    CHECK(res.even_sup == 0.0);
    CHECK(res.odd_sup <= 0.05);

    const NonuniquenessResult again = nonuniqueness_demo(100, 10001, 4242, 1.0);
    CHECK(again.odd_sup == res.odd_sup);

    CHECK(growth_branch(0.0) == 0.0);
    CHECK(growth_branch(1.5) == doctest::Approx(1.0));
}

TEST_CASE("priority feedback keeps the population away from the sliding plateau") {
    const FeedbackDemoResult demo = feedback_nonconvergence_demo(350, 1e-4, 2026);
    CHECK(demo.N == 350);
    CHECK(demo.threshold == 1e-4);
    CHECK(demo.grid_times.size() == 200);
    REQUIRE(demo.det_states.size() == 200);
    for (const auto& row : demo.det_states) {
        double s = 0.0;
        for (double f : row) s += f;
        CHECK(s == doctest::Approx(1.0).epsilon(1e-9));
    }
    CHECK(demo.det_control.covers(20.0));
    CHECK(demo.feedback_dist > 0.05);
    CHECK(demo.open_dist < demo.feedback_dist);
}

TEST_CASE("figure bundles are deterministic and land on disk") {
    CHECK_THROWS_AS(replicate_figures("moebius", 1), UnknownExample);

    const FigureBundle a = replicate_figures("cube_root", 99);
    const FigureBundle b = replicate_figures("cube_root", 99);
    CHECK(a.example == "cube_root");
    REQUIRE(a.files.size() == 3);
    REQUIRE(b.files.size() == 3);
    for (std::size_t k = 0; k < a.files.size(); ++k) {
        CHECK(a.files[k].first == b.files[k].first);
        CHECK(a.files[k].second == b.files[k].second);
        CHECK_FALSE(a.files[k].second.empty());
    }
    CHECK(a.summary.count("branch_sup_N10000") == 1);

    const std::filesystem::path dir =
        std::filesystem::temp_directory_path() / "mfmdp_test_figures";
    std::filesystem::remove_all(dir);
    write_figures(dir, a, 99);
    CHECK(std::filesystem::exists(dir / "study.json"));
    for (const auto& [name, content] : a.files) {
        REQUIRE(std::filesystem::exists(dir / name));
        std::ifstream in(dir / name, std::ios::binary);
        std::string on_disk((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
        CHECK(on_disk == content);
    }
    std::filesystem::remove_all(dir);
}

TEST_CASE("sup_tv_distance takes the worst half-L1 gap over the grid") {
    Trajectory traj;
    traj.jump_times = {0.0, 1.0};
    traj.measures = {EmpiricalMeasure{{10, 0}, 10}, EmpiricalMeasure{{5, 5}, 10}};
    traj.controls = {{}, {}};
    traj.horizon = 2.0;

    const std::vector<double> times{0.0, 1.5};
    const std::vector<std::vector<double>> reference{{0.6, 0.4}, {0.5, 0.5}};
    // At t=0 the path sits at (1,0), TV 0.4 to the reference; at t=1.5 it
    // matches exactly.
    CHECK(sup_tv_distance(traj, times, reference) == doctest::Approx(0.4));

    const std::vector<std::vector<double>> far{{1.0, 0.0}, {1.0, 0.0}};
    CHECK(sup_tv_distance(traj, times, far) == doctest::Approx(0.5));
}
