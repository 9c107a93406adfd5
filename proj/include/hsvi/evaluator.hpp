#pragma once

#include "hsvi/bounds.hpp"
#include "hsvi/model.hpp"

#include <cstdint>
#include <vector>

namespace hsvi {

struct EvalConfig {
    int episodes = 500;
    int horizon = 251;
    std::uint64_t seed = 0;
    /// Sum gamma^t R_t when true, plain R_t otherwise.
    bool discounted = true;
    /// Worker threads. Results do not depend on this.
    int jobs = 1;
    /// Redraws allowed per episode after an impossible observation.
    int max_resamples = 100;

    void validate() const;
};

struct EvalResult {
    double mean = 0.0;
    /// Sample standard deviation over sqrt(n); reported as 0 when n = 1.
    double std_error = 0.0;
    bool std_error_defined = false;
    /// 1.96 * std_error.
    double half_width = 0.0;
    std::vector<double> returns;
    /// Episodes that were redrawn after a degenerate belief update.
    int resampled = 0;
    /// gamma^horizon * max|R| / (1 - gamma): bound on the discounted tail cut off by the horizon.
    double truncation_bound = 0.0;
};

/// Action tag of argmax_alpha alpha . b (lowest index on ties).
int policy_action(const LowerBound& lb, const Belief& b);

/// Seed for one episode attempt, mixed from (seed, episode, attempt).
std::uint64_t episode_seed(std::uint64_t seed, std::uint64_t episode, std::uint64_t attempt = 0);

/// One run of the direct-control policy from a state drawn from b0. Stops at
/// the horizon or on reaching an absorbing zero-reward state. Throws
/// ZeroProbabilityObservation if the sampled observation has no posterior mass.
double simulate_episode(const PomdpModel& model, const LowerBound& lb, const EvalConfig& config,
                        std::uint64_t seed);

EvalResult evaluate(const PomdpModel& model, const LowerBound& lb, const EvalConfig& config);

} // namespace hsvi
