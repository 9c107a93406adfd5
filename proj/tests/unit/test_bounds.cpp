#include "doctest.h"

#include "oracles.hpp"
#include "test_models.hpp"

#include "hsvi/bounds.hpp"
#include "hsvi/rocksample.hpp"

#include <random>

using namespace hsvi;
using namespace hsvi::testing;

namespace {

std::vector<Dense> dense_set(const LowerBound& lb) {
    std::vector<Dense> out;
    for (const auto& v : lb.vectors()) {
        out.push_back(v.values);
    }
    return out;
}

LowerBound random_lower(std::mt19937_64& rng, int n, int count) {
    std::uniform_real_distribution<double> value(-10.0, 10.0);
    std::uniform_int_distribution<int> action(0, 2);
    std::vector<AlphaVector> vs;
    for (int i = 0; i < count; ++i) {
        AlphaVector v;
        v.action = action(rng);
        for (int s = 0; s < n; ++s) {
            v.values.push_back(value(rng));
        }
        vs.push_back(std::move(v));
    }
    return LowerBound(std::move(vs));
}

} // namespace

TEST_CASE("initial bounds bracket finite-horizon values") {
    std::mt19937_64 rng(41);
    for (int trial = 0; trial < 20; ++trial) {
        const auto m = random_model(rng);
        const auto bounds = init_bounds(m);
        ExactValueIteration vi(m, 1e-10, dense_set(bounds.lower));
        for (int h = 0; h < 3; ++h) {
            vi.step();
        }
        for (int k = 0; k < 10; ++k) {
            const auto b = random_belief(rng, m.num_states());
            const Dense bd = b.to_dense(m.num_states());
            CHECK(bounds.lower.value(b) <= vi.value(bd) + 1e-9);
            CHECK(bounds.upper.value(b) + 1e-9 >= bounds.lower.value(b));
        }
        const auto corners = mdp_upper(m);
        for (int s = 0; s < m.num_states(); ++s) {
            CHECK(bounds.upper.corner_value(s) == doctest::Approx(corners[static_cast<std::size_t>(s)]).epsilon(1e-5));
        }
    }
}

TEST_CASE("lower backup value equals the definitional Bellman maximum") {
    std::mt19937_64 rng(43);
    for (int trial = 0; trial < 300; ++trial) {
        const auto m = random_model(rng);
        const auto lb = random_lower(rng, m.num_states(), 1 + static_cast<int>(rng() % 6));
        const auto b = random_belief(rng, m.num_states());
        const auto beta = backup_lower(m, lb, b);
        const double want = definitional_lower_bellman(m, dense_set(lb), b.to_dense(m.num_states()));
        CHECK(std::abs(beta.dot(b) - want) < 1e-9);
        CHECK(beta.action >= 0);
        CHECK(beta.action < m.num_actions());
        CHECK(q_value(m, lb, b, beta.action) == doctest::Approx(want));
    }
}

TEST_CASE("upper Bellman value is the maximum of the upper Q values") {
    std::mt19937_64 rng(47);
    for (int trial = 0; trial < 100; ++trial) {
        const auto m = random_model(rng);
        auto ub = init_upper(m);
        for (int i = 0; i < 4; ++i) {
            const auto b = random_belief(rng, m.num_states());
            ub.add(b, bellman_upper(m, ub, b).value);
        }
        const auto b = random_belief(rng, m.num_states());
        const auto h = bellman_upper(m, ub, b);
        double best = -1e300;
        int arg = -1;
        for (int a = 0; a < m.num_actions(); ++a) {
            // Q from the definition with the hull evaluated by subset enumeration.
            const Dense bd = b.to_dense(m.num_states());
            double q = dense_reward(m, bd, a);
            for (int o = 0; o < m.num_observations(); ++o) {
                Dense joint = dense_joint(m, bd, a, o);
                double p = 0.0;
                for (double x : joint) {
                    p += x;
                }
                if (p <= kImpossibleObservation) {
                    continue;
                }
                for (auto& x : joint) {
                    x /= p;
                }
                const std::vector<HullPoint> pts(ub.points().begin(), ub.points().end());
                q += m.discount() * p * caratheodory_projection(pts, Belief::from_dense(joint));
            }
            if (q > best + 1e-12) {
                best = q;
                arg = a;
            }
        }
        CHECK(std::abs(h.value - best) < 1e-8);
        CHECK(q_value(m, ub, b, h.action) == doctest::Approx(best));
        CHECK(arg >= 0);
    }
}

TEST_CASE("lower prune keeps the envelope") {
    std::mt19937_64 rng(53);
    for (int trial = 0; trial < 100; ++trial) {
        auto lb = random_lower(rng, 3, 30);
        lb.add(lb.vectors()[0]);
        const auto before = lb;
        const auto removed = prune_lower(lb);
        CHECK(removed >= 1);
        CHECK(lb.size() + removed == before.size());
        for (int k = 0; k < 1000; ++k) {
            const auto b = random_belief(rng, 3, 0.2);
            CHECK(lb.value(b) == before.value(b));
        }
        // No survivor is pointwise dominated by another.
        for (std::size_t i = 0; i < lb.size(); ++i) {
            for (std::size_t j = 0; j < lb.size(); ++j) {
                if (i == j) {
                    continue;
                }
                bool dominated = true;
                for (int s = 0; s < 3; ++s) {
                    dominated = dominated && lb.vectors()[j].values[static_cast<std::size_t>(s)] >=
                                                 lb.vectors()[i].values[static_cast<std::size_t>(s)];
                }
                CHECK_FALSE(dominated);
            }
        }
    }
}

TEST_CASE("upper prune never raises the bound and keeps it above the lower bound") {
    std::mt19937_64 rng(59);
    for (int trial = 0; trial < 30; ++trial) {
        const auto m = random_model(rng);
        auto bounds = init_bounds(m);
        for (int i = 0; i < 25; ++i) {
            local_update(m, bounds, random_belief(rng, m.num_states()));
        }
        const auto before = bounds.upper;
        std::vector<Belief> probes;
        for (int k = 0; k < 30; ++k) {
            probes.push_back(random_belief(rng, m.num_states()));
        }
        prune_upper(m, bounds.upper);
        for (const auto& b : probes) {
            CHECK(bounds.upper.value(b) <= before.value(b) + 1e-9);
            CHECK(bounds.upper.value(b) >= bounds.lower.value(b) - 1e-9);
        }
        CHECK(bounds.upper.size() <= before.size());
    }
}

TEST_CASE("local updates tighten both bounds at the updated belief") {
    std::mt19937_64 rng(61);
    for (int trial = 0; trial < 50; ++trial) {
        const auto m = random_model(rng);
        auto bounds = init_bounds(m);
        const auto b = random_belief(rng, m.num_states());
        const auto before = bounds.interval(b);
        const double hl = definitional_lower_bellman(m, dense_set(bounds.lower), b.to_dense(m.num_states()));
        const double hu = bellman_upper(m, bounds.upper, b).value;
        local_update(m, bounds, b);
        const auto after = bounds.interval(b);
        CHECK(after.lower >= before.lower - 1e-12);
        CHECK(after.upper <= before.upper + 1e-12);
        CHECK(after.lower >= hl - 1e-9);
        CHECK(after.upper <= hu + 1e-9);
    }
}

TEST_CASE("upper bound point bookkeeping") {
    UpperBound ub({5.0, 7.0});
    CHECK(ub.num_interior() == 0);
    CHECK(ub.value(Belief::uniform(2)) == doctest::Approx(6.0));
    CHECK(ub.add(Belief::uniform(2), 4.0));
    CHECK(ub.value(Belief::uniform(2)) == doctest::Approx(4.0));
    CHECK_FALSE(ub.add(Belief::uniform(2), 4.5));
    CHECK(ub.add(Belief::point_mass(1), 6.0));
    CHECK(ub.corner_value(1) == 6.0);
    CHECK_FALSE(ub.add(Belief::point_mass(1), 6.5));
    CHECK(ub.num_interior() == 1);
}

TEST_CASE("rocksample blind bound is the zero vector") {
    const auto lb = init_lower(gen_rocksample(4, 4));
    REQUIRE(lb.size() == 1);
    for (double x : lb.vectors()[0].values) {
        CHECK(x == 0.0);
    }
}

TEST_CASE("MDP values match long finite-horizon dynamic programming") {
    std::mt19937_64 rng(67);
    for (int trial = 0; trial < 10; ++trial) {
        RandomModelSpec shape;
        shape.min_states = shape.max_states = 4;
        const auto m = random_model(rng, shape);
        Dense v(4, 0.0);
        for (int h = 0; h < 1000; ++h) {
            Dense next(4, -1e300);
            for (int s = 0; s < 4; ++s) {
                for (int a = 0; a < m.num_actions(); ++a) {
                    double q = m.reward(s, a);
                    for (int s2 = 0; s2 < 4; ++s2) {
                        q += m.discount() * m.transition(s, a, s2) * v[static_cast<std::size_t>(s2)];
                    }
                    next[static_cast<std::size_t>(s)] = std::max(next[static_cast<std::size_t>(s)], q);
                }
            }
            v = next;
        }
        const auto got = mdp_values(m);
        for (std::size_t s = 0; s < 4; ++s) {
            CHECK(std::abs(got[s] - v[s]) < 1e-4);
        }
    }
}

TEST_CASE("lower value is the naive maximum over vectors") {
    std::mt19937_64 rng(71);
    for (int trial = 0; trial < 100; ++trial) {
        const auto lb = random_lower(rng, 4, 1 + trial % 9);
        const auto b = random_belief(rng, 4);
        double best = -1e300;
        for (const auto& v : lb.vectors()) {
            double x = 0.0;
            for (int s = 0; s < 4; ++s) {
                x += v.values[static_cast<std::size_t>(s)] * b[s];
            }
            best = std::max(best, x);
        }
        CHECK(lower_value(lb, b) == doctest::Approx(best).epsilon(1e-12));
        CHECK(lb.best(b).dot(b) == doctest::Approx(best).epsilon(1e-12));
    }
}

TEST_CASE("repeated updates at one belief settle") {
    // A new vector or point also moves the bounds at b's successors, so one
    // repeat can still tighten b; the sequence is monotone and converges.
    std::mt19937_64 rng(73);
    for (int trial = 0; trial < 50; ++trial) {
        const auto m = random_model(rng);
        auto bounds = init_bounds(m);
        const auto b = random_belief(rng, m.num_states());
        auto last = bounds.interval(b);
        for (int k = 0; k < 400; ++k) {
            local_update(m, bounds, b);
            const auto now = bounds.interval(b);
            CHECK(now.lower >= last.lower - 1e-12);
            CHECK(now.upper <= last.upper + 1e-9);
            last = now;
        }
        local_update(m, bounds, b);
        CHECK(std::abs(bounds.interval(b).lower - last.lower) <= 1e-9);
        CHECK(std::abs(bounds.interval(b).upper - last.upper) <= 1e-9);
    }
}

TEST_CASE("upper update is idempotent when every successor is a corner") {
    // Perfect sensor: each observation names the next state.
    std::mt19937_64 rng(79);
    for (int trial = 0; trial < 20; ++trial) {
        RandomModelSpec shape;
        shape.min_states = shape.max_states = 3;
        shape.min_observations = shape.max_observations = 2;
        const auto base = random_model(rng, shape);
        PomdpBuilder pb(3, base.num_actions(), 3, base.discount());
        for (int a = 0; a < base.num_actions(); ++a) {
            for (int s = 0; s < 3; ++s) {
                for (int s2 = 0; s2 < 3; ++s2) {
                    pb.set_transition(s, a, s2, base.transition(s, a, s2));
                }
                pb.set_observation(s, a, s, 1.0);
                pb.set_reward(s, a, base.reward(s, a));
            }
        }
        pb.set_initial_belief(Belief::uniform(3));
        const auto m = pb.build();
        auto bounds = init_bounds(m);
        const auto b = random_belief(rng, 3, 0.0);
        local_update(m, bounds, b);
        const double once = bounds.upper.value(b);
        local_update(m, bounds, b);
        CHECK(std::abs(bounds.upper.value(b) - once) <= 1e-9);
    }
}

TEST_CASE("one update at b0 narrows the gap on a two-state toy") {
    // Stay in place; state 1 pays, state 0 does not; a perfect sensor.
    PomdpBuilder pb(2, 2, 2, 0.5);
    for (int s = 0; s < 2; ++s) {
        for (int a = 0; a < 2; ++a) {
            pb.set_transition(s, a, s, 1.0);
            pb.set_observation(s, a, s, 1.0);
        }
    }
    pb.set_reward(0, 0, -1.0);
    pb.set_reward(1, 0, 1.0);
    pb.set_reward(0, 1, 0.0);
    pb.set_reward(1, 1, 0.0);
    pb.set_initial_belief(Belief::uniform(2));
    const auto m = pb.build();
    auto bounds = init_bounds(m);
    const auto b0 = m.initial_belief();
    const double before = bounds.width(b0);
    REQUIRE(before > 0.0);
    local_update(m, bounds, b0);
    CHECK(bounds.width(b0) < before);
}
