#pragma once

#include "hsvi/bounds.hpp"
#include "hsvi/model.hpp"

#include <chrono>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

namespace hsvi {

/// How explore() picks the observation branch.
enum class ObservationRule {
    excess_uncertainty,  ///< argmax_o Pr(o|b,a*) * excess(tau(b,a*,o), t+1)
    sample,              ///< draw o ~ Pr(o|b,a*) among unfinished children (test hook)
};

struct TraceRow {
    long trial = 0;
    double wall_time_s = 0.0;
    double lower_b0 = 0.0;
    double upper_b0 = 0.0;
    double width = 0.0;
    std::size_t num_vectors = 0;
    std::size_t num_points = 0;
    long updates = 0;
    int max_depth = 0;
};

using SolveTrace = std::vector<TraceRow>;

struct SolverConfig {
    double epsilon = 1e-3;
    /// Anytime shrink factor for the per-trial epsilon.
    double zeta = 0.95;
    std::optional<std::chrono::duration<double>> timeout;
    std::optional<long> max_trials;

    ObservationRule observation_rule = ObservationRule::excess_uncertainty;
    std::uint64_t sample_seed = 0;

    /// Called after the initial bounds and after every top-level trial.
    std::function<void(const BoundsPair&, const TraceRow&)> on_trial;
    /// Called for every local update with the updated belief and its depth.
    std::function<void(const Belief&, int)> on_update;

    void validate() const;
};

enum class Termination { epsilon_reached, timeout, trial_cap };

const char* to_string(Termination t);

struct SolveResult {
    BoundsPair bounds;
    SolveTrace trace;
    Termination terminated_by = Termination::epsilon_reached;
    double final_width = 0.0;
    ValueInterval initial_b0;
    long updates = 0;
    int max_depth = 0;
    /// Largest t_max over the trials, computed from the initial bound gap.
    int t_max = 0;
    /// Theoretical update bound for the fixed-epsilon driver (may be +inf).
    double u_max = 0.0;
};

/// ceil(log_gamma(epsilon / gap)), clamped at zero. `gap` is ||V_up0 - V_lo0||_inf.
int depth_bound(double gamma, double epsilon, double gap);

/// t_max * ((|A||O|)^(t_max+1) - 1) / (|A||O| - 1); +inf when not representable.
double update_bound(int t_max, int num_actions, int num_observations);

/// Sup-norm gap between the initial bounds over the simplex corners.
double initial_gap(const BoundsPair& bounds);

/// argmax_a Q^upper(b, a), lowest index on ties.
int choose_action(const PomdpModel& model, const BoundsPair& bounds, const Belief& b);

/// Excess uncertainty width - epsilon * gamma^(-depth).
double excess_uncertainty(double width, double epsilon, double gamma, int depth);

/// argmax_o Pr(o|b,a) * excess(tau(b,a,o), depth + 1) over observations with
/// positive probability; nullopt when every such child is finished.
std::optional<int> choose_observation(const PomdpModel& model, const BoundsPair& bounds, const Belief& b,
                                      int action, double epsilon, int depth);

struct ExploreStats {
    long updates = 0;
    int max_depth = 0;
};

/// One recursive explore() call from b at depth t with a fixed epsilon.
ExploreStats explore(const PomdpModel& model, BoundsPair& bounds, const Belief& b, double epsilon, int depth,
                     const SolverConfig& config = {});

/// HSVI with a fixed target epsilon.
SolveResult solve(const PomdpModel& model, const SolverConfig& config);

/// Anytime HSVI: each trial targets zeta * width(b0). Stops when width(b0)
/// falls to max(config.epsilon, 1e-9), on timeout, or at the trial cap.
SolveResult solve_anytime(const PomdpModel& model, const SolverConfig& config);

/// CSV columns: trial,wall_time_s,lower_b0,upper_b0,width,num_vectors,num_points,updates,max_depth
void write_trace_csv(const SolveTrace& trace, std::ostream& out);

} // namespace hsvi
