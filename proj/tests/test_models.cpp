#include <cmath>
#include <vector>

#include "doctest.h"

#include "core/model.hpp"
#include "core/registry.hpp"

using namespace mfmdp;

namespace {

std::vector<double> row_of(const ModelSpec& m, int i, double a, const std::vector<double>& mu) {
    std::vector<double> row(static_cast<std::size_t>(m.num_states()));
    m.intensity_row(i, a, mu, row);
    return row;
}

double row_sum(const std::vector<double>& row) {
    double s = 0.0;
    for (double v : row) s += v;
    return s;
}

}  // namespace

TEST_CASE("machine_replacement rates and rewards") {
    const ModelSpec m = registry_get("machine_replacement");
    const std::vector<double> mu{0.6, 0.4};

    CHECK(row_of(m, 0, 0.0, mu) == std::vector<double>{-1.0, 1.0});
    CHECK(row_of(m, 1, 0.0, mu) == std::vector<double>{0.0, 0.0});
    CHECK(row_of(m, 1, 1.0, mu) == std::vector<double>{2.0, -2.0});

    CHECK(m.reward(0, 0.0, mu) == 2.0);
    CHECK(m.reward(1, 0.0, mu) == 0.0);
    CHECK(m.reward(1, 1.0, mu) == -1.0);
    CHECK(m.terminal(mu) == 0.0);

    SUBCASE("rescaled rates follow the parameters") {
        const ModelSpec fast = registry_get("machine_replacement", {{"lambda_wb", 3.0}, {"lambda_bw", 5.0}});
        CHECK(row_of(fast, 0, 0.0, mu) == std::vector<double>{-3.0, 3.0});
        CHECK(row_of(fast, 1, 1.0, mu) == std::vector<double>{5.0, -5.0});
        CHECK(fast.q_max == 5.0);
    }

    SUBCASE("shared repair cost divides by the broken fraction") {
        const ModelSpec shared = registry_get("machine_replacement", {{"shared_repair_cost", 1.0}});
        CHECK(shared.reward(1, 1.0, mu) == doctest::Approx(-1.0 / 0.4));
        // Population total: 0.4 agents each paying 1/0.4 means the system pays C.
        const ControlVector repair{ActionDistribution::dirac(0, 1), ActionDistribution::dirac(1, 2)};
        CHECK(system_reward(shared, mu, repair) == doctest::Approx(0.6 * 2.0 - 1.0));
        // The divisor is floored so an empty broken state cannot blow up.
        const std::vector<double> none_broken{1.0, 0.0};
        CHECK(std::isfinite(shared.reward(1, 1.0, none_broken)));
    }
}

TEST_CASE("sir_malware rates and rewards") {
    const ModelSpec m = registry_get("sir_malware");
    const std::vector<double> mu{0.5, 0.3, 0.1, 0.1};

    // Susceptible: infection at lambda_si * mu_I, recovery at lambda_sr.
    const auto s_row = row_of(m, 0, 0.0, mu);
    CHECK(s_row[1] == doctest::Approx(0.6 * 0.3));
    CHECK(s_row[2] == 0.0);
    CHECK(s_row[3] == doctest::Approx(0.2));
    CHECK(row_sum(s_row) == doctest::Approx(0.0));

    // Infected: destruction at the chosen rate a, recovery at lambda_ir.
    const auto i_row = row_of(m, 1, 1.0, mu);
    CHECK(i_row[2] == doctest::Approx(1.0));
    CHECK(i_row[3] == doctest::Approx(0.2));
    CHECK(i_row[1] == doctest::Approx(-1.2));

    // Destroyed and recovered devices never move again.
    CHECK(row_of(m, 2, 0.0, mu) == std::vector<double>(4, 0.0));
    CHECK(row_of(m, 3, 0.0, mu) == std::vector<double>(4, 0.0));

    // Running payoff is the squared infected fraction spread over the horizon,
    // identical across states; terminal payoff is the destroyed fraction.
    for (int i = 0; i < 4; ++i) CHECK(m.reward(i, 0.0, mu) == doctest::Approx(0.3 * 0.3 / 10.0));
    CHECK(m.terminal(mu) == doctest::Approx(0.1));
}

TEST_CASE("cube_root rates") {
    const ModelSpec m = registry_get("cube_root");

    // An agent in "2" jumps to "1" at rate x^(1/3) / (1 - x) where x is the
    // "1"-fraction, so the population drift of x is (1 - x) times that: x^(1/3).
    const std::vector<double> mu{0.125, 0.875};
    const auto row = row_of(m, 1, 0.0, mu);
    CHECK(row[0] == doctest::Approx(std::cbrt(0.125) / 0.875));
    CHECK(row[1] == doctest::Approx(-row[0]));
    CHECK(row_of(m, 0, 0.0, mu) == std::vector<double>(2, 0.0));

    // The rate is capped once the first component exceeds 0.99.
    const std::vector<double> high{0.999, 0.001};
    CHECK(row_of(m, 1, 0.0, high)[0] == doctest::Approx(std::cbrt(0.99) / 0.01));
    CHECK(row_of(m, 1, 0.0, high)[0] <= m.q_max);

    // The all-in-"2" start sits at a fixed point: the rate vanishes there.
    const std::vector<double> frozen{0.0, 1.0};
    CHECK(row_of(m, 1, 0.0, frozen)[0] == 0.0);
}

TEST_CASE("resource_competition rates and rewards") {
    const ModelSpec m = registry_get("resource_competition");
    std::vector<double> mu(8, 0.125);

    CHECK(row_of(m, 0, 0.0, mu)[1] == doctest::Approx(1.0));
    CHECK(row_of(m, 1, 1.0, mu)[2] == doctest::Approx(6.0));
    CHECK(row_of(m, 1, 0.0, mu)[2] == 0.0);
    CHECK(row_of(m, 2, 1.0, mu)[3] == doctest::Approx(1.5));
    CHECK(row_of(m, 4, 0.0, mu)[5] == doctest::Approx(1.0));
    CHECK(row_of(m, 5, 1.0, mu)[6] == doctest::Approx(6.0));
    CHECK(row_of(m, 6, 1.0, mu)[7] == doctest::Approx(1.5));
    CHECK(row_of(m, 3, 0.0, mu) == std::vector<double>(8, 0.0));
    CHECK(row_of(m, 7, 0.0, mu) == std::vector<double>(8, 0.0));
    for (int i = 0; i < 8; ++i) CHECK(row_sum(row_of(m, i, 1.0, mu)) == doctest::Approx(0.0));

    // Waiting costs 1 everywhere except the terminal states (free) and the
    // priority states, which cost 25 while occupied above threshold, else 5.
    CHECK(m.reward(0, 0.0, mu) == -1.0);
    CHECK(m.reward(3, 0.0, mu) == 0.0);
    CHECK(m.reward(7, 0.0, mu) == 0.0);
    CHECK(m.reward(2, 0.0, mu) == -25.0);
    std::vector<double> empty_priority(8, 0.0);
    empty_priority[0] = 1.0;
    CHECK(m.reward(2, 0.0, empty_priority) == -5.0);
    CHECK(m.reward(6, 0.0, empty_priority) == -5.0);
}

TEST_CASE("relaxed rows and rewards mix linearly in the action weights") {
    const ModelSpec m = registry_get("machine_replacement");
    const std::vector<double> mu{0.3, 0.7};
    const ActionDistribution mix = ActionDistribution::two_point(0.25);

    std::vector<double> relaxed(2);
    m.relaxed_intensity_row(1, mix, mu, relaxed);
    const auto lo = row_of(m, 1, 0.0, mu);
    const auto hi = row_of(m, 1, 1.0, mu);
    for (int j = 0; j < 2; ++j)
        CHECK(relaxed[static_cast<std::size_t>(j)] ==
              doctest::Approx(0.75 * lo[static_cast<std::size_t>(j)] + 0.25 * hi[static_cast<std::size_t>(j)]));

    CHECK(m.relaxed_reward(1, mix, mu) ==
          doctest::Approx(0.75 * m.reward(1, 0.0, mu) + 0.25 * m.reward(1, 1.0, mu)));
}

TEST_CASE("system_reward aggregates the occupied states") {
    const ModelSpec m = registry_get("machine_replacement");
    const std::vector<double> mu{0.6, 0.4};
    const ControlVector half{ActionDistribution::dirac(0, 1), ActionDistribution::two_point(0.5)};
    // 0.6 working earning 2 each, 0.4 broken paying the half-weighted repair cost.
    CHECK(system_reward(m, mu, half) == doctest::Approx(0.6 * 2.0 + 0.4 * (-0.5)));

    const std::vector<double> all_working{1.0, 0.0};
    CHECK(system_reward(m, all_working, half) == doctest::Approx(2.0));
}
