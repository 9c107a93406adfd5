#include "doctest.h"

#include "oracles.hpp"
#include "test_models.hpp"

#include "hsvi/errors.hpp"
#include "hsvi/solver.hpp"

#include <cmath>
#include <random>
#include <sstream>

using namespace hsvi;
using namespace hsvi::testing;

TEST_CASE("depth and update bounds") {
    CHECK(depth_bound(0.9, 0.01, 1.0) == static_cast<int>(std::ceil(std::log(0.01) / std::log(0.9))));
    CHECK(depth_bound(0.9, 2.0, 1.0) == 0);
    CHECK(update_bound(0, 2, 2) == 0.0);
    CHECK(update_bound(2, 2, 2) == doctest::Approx(2.0 * (64.0 - 1.0) / 3.0));
    CHECK(std::isinf(update_bound(300, 9, 2)));
    CHECK(excess_uncertainty(1.0, 0.5, 0.5, 1) == doctest::Approx(0.0));
}

TEST_CASE("config validation") {
    SolverConfig c;
    c.epsilon = 0.0;
    CHECK_THROWS_AS(c.validate(), InvalidParams);
    c = {};
    c.zeta = 1.0;
    CHECK_THROWS_AS(c.validate(), InvalidParams);
    c = {};
    c.max_trials = -1;
    CHECK_THROWS_AS(c.validate(), InvalidParams);
}

TEST_CASE("fixed epsilon solve reaches the target and brackets the optimum") {
    std::mt19937_64 rng(71);
    for (int trial = 0; trial < 8; ++trial) {
        const auto m = random_model(rng);
        SolverConfig config;
        config.epsilon = 0.05;
        const auto r = solve(m, config);
        CHECK(r.terminated_by == Termination::epsilon_reached);
        const auto iv = r.bounds.interval(m.initial_belief());
        CHECK(iv.width() <= 0.05);
        const auto o = oracle_value(m, 5e-3);
        REQUIRE(o.converged);
        CHECK(o.value >= iv.lower - o.error_bound - 1e-9);
        CHECK(o.value <= iv.upper + o.error_bound + 1e-9);
        CHECK(r.max_depth <= r.t_max);
        CHECK(static_cast<double>(r.updates) <= r.u_max);
    }
}

TEST_CASE("trace is monotone and ends at the final width") {
    const auto m = tiger(0.9);
    SolverConfig config;
    config.epsilon = 0.01;
    const auto r = solve(m, config);
    REQUIRE(r.trace.size() >= 2);
    for (std::size_t i = 1; i < r.trace.size(); ++i) {
        CHECK(r.trace[i].lower_b0 >= r.trace[i - 1].lower_b0);
        CHECK(r.trace[i].upper_b0 <= r.trace[i - 1].upper_b0);
        CHECK(r.trace[i].trial == r.trace[i - 1].trial + 1);
    }
    CHECK(r.trace.back().width == doctest::Approx(r.final_width));

    std::ostringstream csv;
    write_trace_csv(r.trace, csv);
    CHECK(csv.str().rfind("trial,wall_time_s,lower_b0,upper_b0,width,num_vectors,num_points,updates,max_depth\n", 0) == 0);
}

TEST_CASE("trial cap and timeout stop the solver") {
    const auto m = tiger(0.95);
    SolverConfig config;
    config.epsilon = 1e-9;
    config.max_trials = 3;
    const auto capped = solve(m, config);
    CHECK(capped.terminated_by == Termination::trial_cap);
    CHECK(capped.trace.size() == 4);

    config.max_trials.reset();
    config.timeout = std::chrono::duration<double>(0.0);
    const auto timed = solve_anytime(m, config);
    CHECK(timed.terminated_by == Termination::timeout);
    CHECK(std::string(to_string(timed.terminated_by)) == "timeout");
}

TEST_CASE("anytime solve shrinks the gap on tiger") {
    const auto m = tiger(0.95);
    SolverConfig config;
    config.epsilon = 1e-3;
    config.timeout = std::chrono::duration<double>(60.0);
    const auto r = solve_anytime(m, config);
    CHECK(r.terminated_by == Termination::epsilon_reached);
    CHECK(r.final_width <= 1e-3);
    CHECK(r.final_width < r.initial_b0.width());
    // Listening first is optimal from the uniform belief.
    CHECK(choose_action(m, r.bounds, m.initial_belief()) == 0);
    CHECK(r.bounds.lower.best(m.initial_belief()).action == 0);
}

TEST_CASE("sampled observation rule also converges") {
    std::mt19937_64 rng(73);
    const auto m = random_model(rng);
    SolverConfig config;
    config.epsilon = 0.05;
    config.observation_rule = ObservationRule::sample;
    config.sample_seed = 5;
    config.max_trials = 100000;
    const auto r = solve(m, config);
    CHECK(r.terminated_by == Termination::epsilon_reached);
}

TEST_CASE("observation choice skips finished children") {
    const auto m = tiger(0.95);
    auto bounds = init_bounds(m);
    const auto b = m.initial_belief();
    // A huge epsilon finishes everything.
    CHECK_FALSE(choose_observation(m, bounds, b, 0, 1e9, 0).has_value());
    const auto o = choose_observation(m, bounds, b, 0, 1e-3, 0);
    REQUIRE(o.has_value());
    CHECK(*o >= 0);
    CHECK(*o < 2);
}

TEST_CASE("update hook sees every local update within the depth bound") {
    std::mt19937_64 rng(79);
    const auto m = random_model(rng);
    SolverConfig config;
    config.epsilon = 0.02;
    long seen = 0;
    int deepest = 0;
    config.on_update = [&](const Belief&, int depth) {
        ++seen;
        deepest = std::max(deepest, depth);
    };
    const auto r = solve(m, config);
    CHECK(seen == r.updates);
    CHECK(deepest < r.t_max);
}

TEST_CASE("action choice is the exhaustive argmax of upper Q") {
    std::mt19937_64 rng(89);
    for (int trial = 0; trial < 50; ++trial) {
        const auto m = random_model(rng);
        auto bounds = init_bounds(m);
        for (int i = 0; i < 5; ++i) {
            local_update(m, bounds, random_belief(rng, m.num_states()));
        }
        const auto b = random_belief(rng, m.num_states());
        int arg = 0;
        for (int a = 1; a < m.num_actions(); ++a) {
            if (q_value(m, bounds.upper, b, a) > q_value(m, bounds.upper, b, arg)) {
                arg = a;
            }
        }
        const int got = choose_action(m, bounds, b);
        CHECK(q_value(m, bounds.upper, b, got) == doctest::Approx(q_value(m, bounds.upper, b, arg)).epsilon(1e-12));
    }
}

TEST_CASE("observation choice maximizes probability-weighted excess") {
    std::mt19937_64 rng(97);
    for (int trial = 0; trial < 50; ++trial) {
        const auto m = random_model(rng);
        auto bounds = init_bounds(m);
        local_update(m, bounds, m.initial_belief());
        const auto b = random_belief(rng, m.num_states());
        const int a = static_cast<int>(rng() % static_cast<unsigned>(m.num_actions()));
        const double eps = 0.05;
        std::optional<int> arg;
        double best = 0.0;
        for (int o = 0; o < m.num_observations(); ++o) {
            const double p = observation_probability(m, b, a, o);
            if (p <= kImpossibleObservation) {
                continue;
            }
            const auto child = belief_update(m, b, a, o);
            const double x = p * excess_uncertainty(bounds.width(child), eps, m.discount(), 1);
            if (x > 0.0 && (!arg || x > best)) {
                arg = o;
                best = x;
            }
        }
        const auto got = choose_observation(m, bounds, b, a, eps, 0);
        REQUIRE(got.has_value() == arg.has_value());
        if (got) {
            const double p = observation_probability(m, b, a, *got);
            const double x = p * excess_uncertainty(bounds.width(belief_update(m, b, a, *got)), eps, m.discount(), 1);
            CHECK(x == doctest::Approx(best).epsilon(1e-9));
        }
    }
}

TEST_CASE("one explore call finishes a previously unfinished node") {
    std::mt19937_64 rng(101);
    for (int trial = 0; trial < 20; ++trial) {
        const auto m = random_model(rng);
        auto bounds = init_bounds(m);
        const double eps = 0.05;
        std::vector<std::pair<Belief, int>> visited;
        SolverConfig config;
        config.on_update = [&](const Belief& b, int depth) { visited.emplace_back(b, depth); };
        auto before = bounds;
        explore(m, bounds, m.initial_belief(), eps, 0, config);
        REQUIRE_FALSE(visited.empty());
        bool finished_one = false;
        for (const auto& [b, depth] : visited) {
            const double thresh = eps * std::pow(m.discount(), -depth);
            finished_one = finished_one || (before.width(b) > thresh && bounds.width(b) <= thresh);
        }
        CHECK(finished_one);
    }
}
