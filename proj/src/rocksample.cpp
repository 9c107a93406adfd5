#include "hsvi/rocksample.hpp"

#include "hsvi/errors.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

namespace hsvi {

namespace {

// 2^k masks per cell; keep the model well inside int range.
constexpr int kMaxRocks = 20;

void check_params(const RockSampleParams& p) {
    if (p.grid_size < 1) {
        throw InvalidParams("grid size must be at least 1");
    }
    if (p.num_rocks < 1 || p.num_rocks > kMaxRocks) {
        throw InvalidParams("number of rocks must lie in [1, " + std::to_string(kMaxRocks) + "]");
    }
    if (static_cast<int>(p.rock_positions.size()) != p.num_rocks) {
        throw InvalidParams("expected " + std::to_string(p.num_rocks) + " rock positions");
    }
    auto inside = [&](Cell c) { return c.x >= 0 && c.y >= 0 && c.x < p.grid_size && c.y < p.grid_size; };
    for (std::size_t i = 0; i < p.rock_positions.size(); ++i) {
        if (!inside(p.rock_positions[i])) {
            throw InvalidParams("rock " + std::to_string(i + 1) + " lies outside the grid");
        }
        for (std::size_t j = 0; j < i; ++j) {
            if (p.rock_positions[i] == p.rock_positions[j]) {
                throw InvalidParams("rocks " + std::to_string(j + 1) + " and " + std::to_string(i + 1) +
                                    " share a cell");
            }
        }
    }
    if (!p.rover_start || !inside(*p.rover_start)) {
        throw InvalidParams("rover start lies outside the grid");
    }
    if (!(p.half_efficiency_distance > 0.0)) {
        throw InvalidParams("half-efficiency distance must be positive");
    }
    if (!(p.discount >= 0.0 && p.discount < 1.0)) {
        throw InvalidParams("discount must lie in [0, 1)");
    }
}

} // namespace

RockSampleParams default_layout(int grid_size, int num_rocks, std::uint32_t layout_seed) {
    if (grid_size < 1 || num_rocks < 1) {
        throw InvalidParams("grid size and number of rocks must be at least 1");
    }
    RockSampleParams p;
    p.grid_size = grid_size;
    p.num_rocks = num_rocks;
    p.layout_seed = layout_seed;
    p.rover_start = Cell{0, grid_size / 2};
    const long cells = static_cast<long>(grid_size) * grid_size;
    if (num_rocks > cells - 1) {
        throw InvalidParams("too many rocks for a " + std::to_string(grid_size) + "x" + std::to_string(grid_size) +
                            " grid");
    }
    // Raw engine output with modulo, so layouts do not depend on the standard
    // library's distribution implementation.
    std::mt19937 rng(layout_seed);
    while (static_cast<int>(p.rock_positions.size()) < num_rocks) {
        const long idx = static_cast<long>(rng() % static_cast<std::uint32_t>(cells));
        const Cell c{static_cast<int>(idx % grid_size), static_cast<int>(idx / grid_size)};
        if (c == *p.rover_start ||
            std::find(p.rock_positions.begin(), p.rock_positions.end(), c) != p.rock_positions.end()) {
            continue;
        }
        p.rock_positions.push_back(c);
    }
    return p;
}

double check_accuracy(double distance, double half_efficiency_distance) {
    const double eta = std::exp2(-distance / half_efficiency_distance);
    return 0.5 * (1.0 + eta);
}

int rocksample_state(int grid_size, int num_rocks, Cell cell, unsigned mask) {
    return ((cell.y * grid_size + cell.x) << num_rocks) + static_cast<int>(mask);
}

int rocksample_terminal(int grid_size, int num_rocks) { return (grid_size * grid_size) << num_rocks; }

PomdpModel gen_rocksample(const RockSampleParams& params) {
    check_params(params);
    const int n = params.grid_size;
    const int k = params.num_rocks;
    const unsigned masks = 1u << k;
    const int terminal = rocksample_terminal(n, k);
    const int num_states = terminal + 1;
    const int num_actions = kCheckFirst + k;

    PomdpBuilder b(num_states, num_actions, 2, params.discount);

    std::vector<int> rock_at(static_cast<std::size_t>(n * n), -1);
    for (int i = 0; i < k; ++i) {
        const Cell c = params.rock_positions[static_cast<std::size_t>(i)];
        rock_at[static_cast<std::size_t>(c.y * n + c.x)] = i;
    }

    for (int y = 0; y < n; ++y) {
        for (int x = 0; x < n; ++x) {
            const Cell here{x, y};
            for (unsigned mask = 0; mask < masks; ++mask) {
                const int s = rocksample_state(n, k, here, mask);
                auto move_to = [&](int a, int nx, int ny) {
                    nx = std::clamp(nx, 0, n - 1);
                    ny = std::clamp(ny, 0, n - 1);
                    b.set_transition(s, a, rocksample_state(n, k, {nx, ny}, mask), 1.0);
                };
                move_to(kNorth, x, y + 1);
                move_to(kSouth, x, y - 1);
                if (x + 1 >= n) {
                    b.set_transition(s, kEast, terminal, 1.0);
                    b.set_reward(s, kEast, params.exit_reward);
                } else {
                    move_to(kEast, x + 1, y);
                }
                move_to(kWest, x - 1, y);

                const int rock = rock_at[static_cast<std::size_t>(y * n + x)];
                if (rock >= 0 && (mask >> rock & 1u)) {
                    b.set_transition(s, kSample, rocksample_state(n, k, here, mask & ~(1u << rock)), 1.0);
                    b.set_reward(s, kSample, params.sample_good_reward);
                } else {
                    b.set_transition(s, kSample, s, 1.0);
                    b.set_reward(s, kSample, params.sample_bad_penalty);
                }

                for (int i = 0; i < k; ++i) {
                    b.set_transition(s, kCheckFirst + i, s, 1.0);
                }
            }
        }
    }
    for (int a = 0; a < num_actions; ++a) {
        b.set_transition(terminal, a, terminal, 1.0);
    }

    // Observations depend on the arrival state. Only Check_i is informative.
    for (int s2 = 0; s2 < num_states; ++s2) {
        for (int a = 0; a < num_actions; ++a) {
            b.set_observation(s2, a, kBad, 1.0);
        }
    }
    for (int y = 0; y < n; ++y) {
        for (int x = 0; x < n; ++x) {
            for (int i = 0; i < k; ++i) {
                const Cell r = params.rock_positions[static_cast<std::size_t>(i)];
                const double d = std::hypot(static_cast<double>(x - r.x), static_cast<double>(y - r.y));
                const double right = check_accuracy(d, params.half_efficiency_distance);
                for (unsigned mask = 0; mask < masks; ++mask) {
                    const int s2 = rocksample_state(n, k, {x, y}, mask);
                    const bool good = mask >> i & 1u;
                    b.set_observation(s2, kCheckFirst + i, kGood, good ? right : 1.0 - right);
                    b.set_observation(s2, kCheckFirst + i, kBad, good ? 1.0 - right : right);
                }
            }
        }
    }

    std::vector<BeliefEntry> start;
    for (unsigned mask = 0; mask < masks; ++mask) {
        start.push_back({rocksample_state(n, k, *params.rover_start, mask), 1.0});
    }
    b.set_initial_belief(Belief::normalized(std::move(start)));

    std::vector<std::string> actions{"north", "south", "east", "west", "sample"};
    for (int i = 1; i <= k; ++i) {
        actions.push_back("check" + std::to_string(i));
    }
    b.set_action_names(std::move(actions));
    b.set_observation_names({"good", "bad"});
    return b.build();
}

PomdpModel gen_rocksample(int grid_size, int num_rocks, std::uint32_t layout_seed) {
    return gen_rocksample(default_layout(grid_size, num_rocks, layout_seed));
}

} // namespace hsvi
