#pragma once

#include "hsvi/model.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace hsvi {

struct Cell {
    int x = 0;
    int y = 0;

    bool operator==(const Cell&) const = default;
};

/**
 * RockSample[n,k] parameters. x grows to the East (the exit is past x = n-1),
 * y grows to the North. Unset positions are filled by default_layout().
 */
struct RockSampleParams {
    int grid_size = 4;
    int num_rocks = 4;
    std::vector<Cell> rock_positions;
    std::optional<Cell> rover_start;
    double half_efficiency_distance = 20.0;
    double sample_good_reward = 10.0;
    double sample_bad_penalty = -10.0;
    double exit_reward = 10.0;
    double discount = 0.95;
    std::uint32_t layout_seed = 0;
};

/// Action order: North, South, East, West, Sample, Check_1 .. Check_k.
enum RockSampleAction : int { kNorth = 0, kSouth = 1, kEast = 2, kWest = 3, kSample = 4, kCheckFirst = 5 };
/// Observation order: Good, Bad.
enum RockSampleObservation : int { kGood = 0, kBad = 1 };

/// Rover start (0, n/2) and k distinct pseudo-random rock cells, never the start cell.
RockSampleParams default_layout(int grid_size, int num_rocks, std::uint32_t layout_seed = 0);

/// Pr(Check returns the true rock type) = (1 + eta) / 2 with eta = 2^(-d / d0).
double check_accuracy(double distance, double half_efficiency_distance);

/// State index of (cell, rock mask); bit i of the mask is set when rock i is good.
int rocksample_state(int grid_size, int num_rocks, Cell cell, unsigned mask);
/// Index of the absorbing terminal state (the last one).
int rocksample_terminal(int grid_size, int num_rocks);

/// Builds the model; throws InvalidParams for invalid sizes or positions.
PomdpModel gen_rocksample(const RockSampleParams& params);
PomdpModel gen_rocksample(int grid_size, int num_rocks, std::uint32_t layout_seed = 0);

} // namespace hsvi
