#include "doctest.h"

#include "test_models.hpp"

#include "hsvi/errors.hpp"
#include "hsvi/evaluator.hpp"
#include "hsvi/policy_io.hpp"
#include "hsvi/rocksample.hpp"
#include "hsvi/solver.hpp"

#include <cmath>
#include <random>
#include <set>
#include <sstream>

using namespace hsvi;
using namespace hsvi::testing;

namespace {

// Always listen: -1 per step.
LowerBound listen_only() { return LowerBound({AlphaVector{{0.0, 0.0}, 0}}); }

} // namespace

TEST_CASE("constant policy returns are exact") {
    const auto m = tiger(0.9);
    EvalConfig c;
    c.episodes = 10;
    c.horizon = 20;
    const auto r = evaluate(m, listen_only(), c);
    const double want = -(1.0 - std::pow(0.9, 20)) / (1.0 - 0.9);
    for (double x : r.returns) {
        CHECK(x == doctest::Approx(want));
    }
    CHECK(r.std_error == doctest::Approx(0.0));
    CHECK(r.truncation_bound == doctest::Approx(std::pow(0.9, 20) * 100.0 / 0.1));

    c.discounted = false;
    const auto plain = evaluate(m, listen_only(), c);
    CHECK(plain.mean == doctest::Approx(-20.0));
    CHECK(plain.truncation_bound == 0.0);
}

TEST_CASE("results depend on the seed but not on the worker count") {
    const auto m = tiger(0.95);
    SolverConfig sc;
    sc.epsilon = 0.1;
    const auto policy = solve(m, sc).bounds.lower;
    EvalConfig c;
    c.episodes = 200;
    c.horizon = 60;
    c.seed = 42;
    const auto one = evaluate(m, policy, c);
    c.jobs = 4;
    const auto four = evaluate(m, policy, c);
    CHECK(one.returns == four.returns);
    CHECK(one.mean == four.mean);
    c.seed = 43;
    CHECK(evaluate(m, policy, c).returns != one.returns);
    CHECK(one.half_width == doctest::Approx(1.96 * one.std_error));
    CHECK(one.std_error_defined);
}

TEST_CASE("episode seeds differ across episodes and attempts") {
    std::set<std::uint64_t> seen;
    for (std::uint64_t e = 0; e < 100; ++e) {
        for (std::uint64_t a = 0; a < 3; ++a) {
            seen.insert(episode_seed(7, e, a));
        }
    }
    CHECK(seen.size() == 300);
    CHECK(episode_seed(7, 1, 0) == episode_seed(7, 1));
}

TEST_CASE("single episode has no standard error") {
    EvalConfig c;
    c.episodes = 1;
    c.horizon = 5;
    const auto r = evaluate(tiger(), listen_only(), c);
    CHECK_FALSE(r.std_error_defined);
    CHECK(r.std_error == 0.0);
}

TEST_CASE("episodes stop at the absorbing exit") {
    const auto m = gen_rocksample(2, 1);
    // Always move East: one step from column 0, then the exit.
    const LowerBound east({AlphaVector{std::vector<double>(static_cast<std::size_t>(m.num_states()), 0.0), kEast}});
    EvalConfig c;
    c.episodes = 5;
    c.horizon = 100;
    const auto r = evaluate(m, east, c);
    for (double x : r.returns) {
        CHECK(x == doctest::Approx(0.95 * 10.0));
    }
}

TEST_CASE("invalid settings") {
    EvalConfig c;
    c.episodes = 0;
    CHECK_THROWS_AS(evaluate(tiger(), listen_only(), c), InvalidParams);
    c = {};
    c.horizon = 0;
    CHECK_THROWS_AS(c.validate(), InvalidParams);
    c = {};
    c.jobs = 0;
    CHECK_THROWS_AS(c.validate(), InvalidParams);
    CHECK_THROWS_AS(policy_action(LowerBound(), Belief::uniform(2)), InvalidParams);
}

TEST_CASE("deterministic chain gives the hand-traced return") {
    // 0 -> 1 -> 2 (absorbing, zero reward) with rewards 1 and 2 along the way.
    PomdpBuilder b(3, 1, 1, 0.5);
    b.set_transition(0, 0, 1, 1.0);
    b.set_transition(1, 0, 2, 1.0);
    b.set_transition(2, 0, 2, 1.0);
    for (int s = 0; s < 3; ++s) {
        b.set_observation(s, 0, 0, 1.0);
    }
    b.set_reward(0, 0, 1.0);
    b.set_reward(1, 0, 2.0);
    b.set_initial_belief(Belief::point_mass(0));
    const auto m = b.build();
    EvalConfig c;
    c.episodes = 3;
    const auto r = evaluate(m, LowerBound({AlphaVector{{0.0, 0.0, 0.0}, 0}}), c);
    CHECK(r.mean == 2.0);
}

TEST_CASE("a reloaded rocksample policy simulates identically") {
    const auto m = gen_rocksample(4, 4);
    SolverConfig sc;
    sc.epsilon = 1e-3;
    sc.max_trials = 30;
    const auto lb = solve_anytime(m, sc).bounds.lower;
    std::stringstream buf;
    save_policy(make_policy(lb, m.num_states()), buf);
    const auto reloaded = to_lower_bound(load_policy(buf));
    EvalConfig c;
    c.episodes = 100;
    c.seed = 9;
    CHECK(evaluate(m, lb, c).returns == evaluate(m, reloaded, c).returns);
}

TEST_CASE("policy action maximizes the lower-bound Q within the bound width") {
    std::mt19937_64 rng(83);
    const auto m = random_model(rng);
    SolverConfig sc;
    sc.epsilon = 0.01;
    const auto bounds = solve(m, sc).bounds;
    for (int k = 0; k < 100; ++k) {
        const auto b = random_belief(rng, m.num_states());
        double best = -1e300;
        for (int a = 0; a < m.num_actions(); ++a) {
            best = std::max(best, q_value(m, bounds.lower, b, a));
        }
        const double chosen = q_value(m, bounds.lower, b, policy_action(bounds.lower, b));
        CHECK(chosen >= best - bounds.width(b) - 1e-9);
    }
}
