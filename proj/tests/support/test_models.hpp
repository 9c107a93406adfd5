#pragma once

// Small hand-built and random models shared by the unit and acceptance tests.

#include "hsvi/model.hpp"

#include <algorithm>
#include <random>
#include <vector>

namespace hsvi::testing {

struct RandomModelSpec {
    int min_states = 2;
    int min_actions = 2;
    int min_observations = 2;
    int max_states = 4;
    int max_actions = 3;
    int max_observations = 3;
    double discount = 0.9;
    /// Chance that an entry of a T or O row is forced to zero.
    double sparsity = 0.3;
};

inline std::vector<double> random_distribution(std::mt19937_64& rng, int n, double sparsity) {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::vector<double> p(static_cast<std::size_t>(n));
    double sum = 0.0;
    for (auto& x : p) {
        x = unit(rng) < sparsity ? 0.0 : unit(rng);
        sum += x;
    }
    if (sum == 0.0) {
        p[std::uniform_int_distribution<int>(0, n - 1)(rng)] = 1.0;
        return p;
    }
    for (auto& x : p) {
        x /= sum;
    }
    return p;
}

inline PomdpModel random_model(std::mt19937_64& rng, const RandomModelSpec& shape = {}) {
    const int ns = std::uniform_int_distribution<int>(shape.min_states, shape.max_states)(rng);
    const int na = std::uniform_int_distribution<int>(shape.min_actions, shape.max_actions)(rng);
    const int no = std::uniform_int_distribution<int>(shape.min_observations, shape.max_observations)(rng);
    std::uniform_real_distribution<double> reward(-1.0, 1.0);

    PomdpBuilder builder(ns, na, no, shape.discount);
    for (int a = 0; a < na; ++a) {
        for (int s = 0; s < ns; ++s) {
            const auto row = random_distribution(rng, ns, shape.sparsity);
            for (int sp = 0; sp < ns; ++sp) {
                builder.set_transition(s, a, sp, row[static_cast<std::size_t>(sp)]);
            }
            builder.set_reward(s, a, reward(rng));
        }
        for (int sp = 0; sp < ns; ++sp) {
            const auto row = random_distribution(rng, no, shape.sparsity);
            for (int o = 0; o < no; ++o) {
                builder.set_observation(sp, a, o, row[static_cast<std::size_t>(o)]);
            }
        }
    }
    builder.set_initial_belief(Belief::from_dense(random_distribution(rng, ns, shape.sparsity)));
    return builder.build();
}

inline Belief random_belief(std::mt19937_64& rng, int num_states, double sparsity = 0.3) {
    return Belief::from_dense(random_distribution(rng, num_states, sparsity));
}

/// Classic two-state Tiger: listen (0), open-left (1), open-right (2).
inline PomdpModel tiger(double discount = 0.95) {
    PomdpBuilder b(2, 3, 2, discount);
    for (int s = 0; s < 2; ++s) {
        b.set_transition(s, 0, s, 1.0);
        for (int a = 1; a < 3; ++a) {
            b.set_transition(s, a, 0, 0.5);
            b.set_transition(s, a, 1, 0.5);
        }
        b.set_observation(s, 0, s, 0.85);
        b.set_observation(s, 0, 1 - s, 0.15);
        for (int a = 1; a < 3; ++a) {
            b.set_observation(s, a, 0, 0.5);
            b.set_observation(s, a, 1, 0.5);
        }
        b.set_reward(s, 0, -1.0);
    }
    // Tiger behind the left door in state 0.
    b.set_reward(0, 1, -100.0);
    b.set_reward(1, 1, 10.0);
    b.set_reward(0, 2, 10.0);
    b.set_reward(1, 2, -100.0);
    b.set_initial_belief(Belief::uniform(2));
    return b.build();
}

} // namespace hsvi::testing
