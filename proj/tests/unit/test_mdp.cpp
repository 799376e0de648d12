#include <doctest.h>

#include <random>

#include "hrm/mdp.hpp"
#include "oracles.hpp"

using namespace hrm;
using namespace hrm::mdp;

TEST_CASE("forest model shape and rewards") {
    const auto m = build_forest_mdp<double>(3, 4.0, 2.0, 0.1);
    REQUIRE(m.num_states() == 3);
    REQUIRE(m.num_actions() == 2);
    m.validate();
    CHECK(m.transitions[wait](0, 0) == doctest::Approx(0.1));
    CHECK(m.transitions[wait](0, 1) == doctest::Approx(0.9));
    CHECK(m.transitions[wait](2, 2) == doctest::Approx(0.9));
    CHECK(m.transitions[cut].col(0).sum() == 3.0);
    CHECK(m.rewards(2, wait) == 4.0);
    CHECK(m.rewards(0, wait) == 0.0);
    CHECK(m.rewards(1, cut) == 1.0);
    CHECK(m.rewards(2, cut) == 2.0);
    CHECK(m.rewards(0, cut) == 0.0);

    CHECK_THROWS_AS(build_forest_mdp<double>(1), DomainError);
    CHECK_THROWS_AS(build_forest_mdp<double>(3, 4.0, 2.0, 1.5), DomainError);
}

TEST_CASE("validate rejects non-stochastic rows") {
    auto m = build_forest_mdp<double>();
    m.transitions[0](1, 1) += 0.2;
    try {
        m.validate();
        FAIL("expected non_stochastic");
    } catch (const DomainError& e) {
        CHECK(e.code() == "non_stochastic");
    }
    CHECK_THROWS_AS(solve(m, 0.5), DomainError);
    CHECK_THROWS_AS(solve(build_forest_mdp<double>(), 1.0), DomainError);
}

TEST_CASE("scenario (0.1, 2, 2) gives Idle everywhere") {
    const auto r = recommend({0.1, 2.0, 2.0});
    REQUIRE(r.values.size() == 3);
    CHECK(r.values[0] == doctest::Approx(0.81).epsilon(0.005));
    CHECK(std::abs(r.values[1] - 1.71) <= 0.005);
    CHECK(std::abs(r.values[2] - 3.71) <= 0.005);
    for (auto a : r.actions) CHECK(a == Recommendation::idle);
}

TEST_CASE("scenario (0.9, 7, 5) shares at stage 2") {
    const auto r = recommend({0.9, 7.0, 5.0});
    CHECK(std::abs(r.values[1] - 1.05) <= 0.005);
    CHECK(r.actions[1] == Recommendation::share);
    CHECK(r.actions[0] == Recommendation::idle);
}

TEST_CASE("negative value maps to Ask") {
    ScenarioMapping mapping;
    mapping.wait_reward = -3.0;
    mapping.cut_reward = -4.0;
    const auto r = recommend({0.5, 1.0, 1.0}, mapping);
    CHECK(r.values[2] < 0.0);
    CHECK(r.actions[2] == Recommendation::ask);
}

TEST_CASE("scenario input validation") {
    CHECK_THROWS_AS(recommend({0.0, 2.0, 2.0}), DomainError);
    CHECK_THROWS_AS(recommend({1.2, 2.0, 2.0}), DomainError);
    CHECK_THROWS_AS(recommend({0.5, 0.5, 2.0}), DomainError);
    CHECK_THROWS_AS(recommend({0.5, 8.0, 2.0}), DomainError);
    CHECK_THROWS_AS(recommend({0.5, 2.0, 6.0}), DomainError);
    CHECK_NOTHROW(recommend({1.0, 7.0, 5.0}));
}

TEST_CASE("values fall as the reset probability rises") {
    for (double r1 : {1.0, 4.0, 7.0}) {
        for (double r2 : {1.0, 3.0, 5.0}) {
            Eigen::VectorXd prev;
            for (int i = 1; i <= 20; ++i) {
                const double p = 0.05 * i;
                const auto r = solve(build_forest_mdp<double>(3, r1, r2, p), 0.5);
                if (prev.size() > 0) {
                    for (int s = 0; s < 3; ++s) CHECK(r.values[s] <= prev[s] + 1e-12);
                }
                prev = r.values;
            }
        }
    }
}

TEST_CASE("random models: residual, argmax consistency and DP oracle") {
    std::mt19937_64 rng(2024);
    for (int trial = 0; trial < 30; ++trial) {
        const int S = 1 + trial % 5;
        const auto m = oracle::random_mdp(S, 2, rng);
        const double gamma = 0.3 + 0.65 * std::uniform_real_distribution<double>(0, 1)(rng);
        const auto r = solve(m, gamma);
        CHECK(r.bellman_residual < 1e-9);

        const Eigen::VectorXd dp = oracle::horizon_dp(m, gamma, 10000);
        CHECK((dp - r.values).cwiseAbs().maxCoeff() < 1e-6);

        const auto q = action_values(m, r.values, gamma);
        for (int s = 0; s < S; ++s) {
            Eigen::Index best;
            q.row(s).maxCoeff(&best);
            CHECK(q(s, r.policy[static_cast<std::size_t>(s)]) >= q(s, best) - 1e-9);
        }
        CHECK(evaluate_policy(m, r.policy, gamma).isApprox(r.values, 1e-10));
    }
}

TEST_CASE("float instantiation agrees with double") {
    const auto d = solve(build_forest_mdp<double>(4, 4.0, 2.0, 0.1), 0.9);
    const auto f = solve(build_forest_mdp<float>(4, 4.0f, 2.0f, 0.1f), 0.9f);
    for (int s = 0; s < 4; ++s) CHECK(f.values[s] == doctest::Approx(d.values[s]).epsilon(1e-4));
    CHECK(f.policy == d.policy);
}

TEST_CASE("recommendation strings") {
    CHECK(to_string(Recommendation::idle) == "Idle");
    CHECK(to_string(Recommendation::share) == "Share");
    CHECK(to_string(Recommendation::ask) == "Ask");
}
