#include "hsvi/solver.hpp"

#include "hsvi/errors.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <ostream>
#include <random>

namespace hsvi {

namespace {

using Clock = std::chrono::steady_clock;

// Widths at or below this count as converged in anytime mode.
constexpr double kWidthFloor = 1e-9;

// Children along one action: everything the heuristics and the update need.
struct Child {
    int observation;
    double probability;
    Belief belief;
    double lower = 0.0;
    double upper = 0.0;
};

struct Branch {
    double reward = 0.0;
    std::vector<Child> children;
    double q_upper = 0.0;
};

Branch expand_action(const PomdpModel& model, const Belief& b, int action) {
    Branch branch;
    branch.reward = expected_reward(model, b, action);
    const auto predicted = predict(model, b, action);
    for (int o = 0; o < model.num_observations(); ++o) {
        const double p = observation_probability(model, predicted, action, o);
        if (p > kImpossibleObservation) {
            branch.children.push_back({o, p, belief_update(model, predicted, action, o)});
        }
    }
    return branch;
}

void refresh_upper(const PomdpModel& model, const UpperBound& ub, Branch& branch) {
    double future = 0.0;
    for (auto& c : branch.children) {
        c.upper = ub.value(c.belief);
        future += c.probability * c.upper;
    }
    branch.q_upper = branch.reward + model.discount() * future;
}

void refresh_lower(const LowerBound& lb, Branch& branch) {
    for (auto& c : branch.children) {
        c.lower = lb.value(c.belief);
    }
}

int best_upper_action(std::span<const Branch> branches) {
    int best = 0;
    for (int a = 1; a < static_cast<int>(branches.size()); ++a) {
        if (branches[static_cast<std::size_t>(a)].q_upper > branches[static_cast<std::size_t>(best)].q_upper) {
            best = a;
        }
    }
    return best;
}

// Index into children of the child with the largest weighted excess, if any
// child is unfinished.
std::optional<std::size_t> pick_by_excess(std::span<const Child> children, double epsilon, double gamma,
                                          int child_depth) {
    std::optional<std::size_t> best;
    double best_score = 0.0;
    for (std::size_t i = 0; i < children.size(); ++i) {
        const auto& c = children[i];
        const double excess = excess_uncertainty(c.upper - c.lower, epsilon, gamma, child_depth);
        if (excess <= 0.0) {
            continue;
        }
        const double score = c.probability * excess;
        if (!best || score > best_score) {
            best = i;
            best_score = score;
        }
    }
    return best;
}

class Explorer {
public:
    Explorer(const PomdpModel& model, BoundsPair& bounds, const SolverConfig& config,
             std::optional<Clock::time_point> deadline)
        : model_(model), bounds_(bounds), config_(config), deadline_(deadline), rng_(config.sample_seed) {}

    void run(const Belief& b, double lower, double upper, double epsilon, int depth, int depth_cap) {
        epsilon_ = epsilon;
        depth_cap_ = depth_cap;
        visit(b, lower, upper, depth);
    }

    long updates() const { return updates_; }
    int max_depth() const { return max_depth_; }
    bool timed_out() const { return timed_out_; }

private:
    void visit(const Belief& b, double lower, double upper, int depth) {
        max_depth_ = std::max(max_depth_, depth);
        const double gamma = model_.discount();
        if (upper - lower <= epsilon_ * std::pow(gamma, -depth)) {
            return;
        }
        if (deadline_ && Clock::now() >= *deadline_) {
            timed_out_ = true;
            return;
        }
        if (depth > depth_cap_) {
            throw DepthCapExceeded("explore reached depth " + std::to_string(depth) + " beyond the cap " +
                                   std::to_string(depth_cap_));
        }

        std::vector<Branch> branches;
        branches.reserve(static_cast<std::size_t>(model_.num_actions()));
        for (int a = 0; a < model_.num_actions(); ++a) {
            branches.push_back(expand_action(model_, b, a));
            refresh_upper(model_, bounds_.upper, branches.back());
        }
        const int action = best_upper_action(branches);
        auto& chosen = branches[static_cast<std::size_t>(action)];
        refresh_lower(bounds_.lower, chosen);

        if (auto pick = select(chosen.children, depth + 1)) {
            const auto& child = chosen.children[*pick];
            visit(child.belief, child.lower, child.upper, depth + 1);
            refresh_upper(model_, bounds_.upper, chosen);
        }

        // Q for the other actions is from before the recursion; upper values
        // only decrease, so the stale maximum is still a valid upper bound.
        double h = -std::numeric_limits<double>::infinity();
        for (const auto& br : branches) {
            h = std::max(h, br.q_upper);
        }
        bounds_.lower.add(backup_lower(model_, bounds_.lower, b));
        bounds_.upper.add(b, h);
        ++updates_;
        if (config_.on_update) {
            config_.on_update(b, depth);
        }
        if (bounds_.lower.needs_prune()) {
            prune_lower(bounds_.lower);
        }
        if (bounds_.upper.needs_prune()) {
            prune_upper(model_, bounds_.upper);
        }
    }

    std::optional<std::size_t> select(std::span<const Child> children, int child_depth) {
        const double gamma = model_.discount();
        if (config_.observation_rule == ObservationRule::excess_uncertainty) {
            return pick_by_excess(children, epsilon_, gamma, child_depth);
        }
        std::vector<double> weights;
        weights.reserve(children.size());
        bool any = false;
        for (const auto& c : children) {
            const bool open = excess_uncertainty(c.upper - c.lower, epsilon_, gamma, child_depth) > 0.0;
            weights.push_back(open ? c.probability : 0.0);
            any = any || open;
        }
        if (!any) {
            return std::nullopt;
        }
        std::discrete_distribution<std::size_t> dist(weights.begin(), weights.end());
        return dist(rng_);
    }

    const PomdpModel& model_;
    BoundsPair& bounds_;
    const SolverConfig& config_;
    std::optional<Clock::time_point> deadline_;
    std::mt19937_64 rng_;
    double epsilon_ = 0.0;
    int depth_cap_ = 0;
    long updates_ = 0;
    int max_depth_ = 0;
    bool timed_out_ = false;
};

SolveResult run_hsvi(const PomdpModel& model, const SolverConfig& config, bool anytime) {
    config.validate();
    const auto start = Clock::now();
    std::optional<Clock::time_point> deadline;
    if (config.timeout) {
        deadline = start + std::chrono::duration_cast<Clock::duration>(*config.timeout);
    }

    SolveResult result;
    result.bounds = init_bounds(model);
    const Belief& b0 = model.initial_belief();
    const double gamma = model.discount();
    const double gap = initial_gap(result.bounds);

    ValueInterval interval = result.bounds.interval(b0);
    result.initial_b0 = interval;
    if (!anytime) {
        result.t_max = depth_bound(gamma, config.epsilon, gap);
        result.u_max = update_bound(result.t_max, model.num_actions(), model.num_observations());
    }

    Explorer explorer(model, result.bounds, config, deadline);
    auto record = [&](long trial) {
        TraceRow row;
        row.trial = trial;
        row.wall_time_s = std::chrono::duration<double>(Clock::now() - start).count();
        row.lower_b0 = interval.lower;
        row.upper_b0 = interval.upper;
        row.width = interval.width();
        row.num_vectors = result.bounds.lower.size();
        row.num_points = result.bounds.upper.size();
        row.updates = explorer.updates();
        row.max_depth = explorer.max_depth();
        result.trace.push_back(row);
        if (config.on_trial) {
            config.on_trial(result.bounds, row);
        }
    };
    record(0);

    const double target = anytime ? std::max(config.epsilon, kWidthFloor) : config.epsilon;
    for (long trial = 1;; ++trial) {
        if (interval.width() <= target) {
            result.terminated_by = Termination::epsilon_reached;
            break;
        }
        if (explorer.timed_out() || (deadline && Clock::now() >= *deadline)) {
            result.terminated_by = Termination::timeout;
            break;
        }
        if (config.max_trials && trial > *config.max_trials) {
            result.terminated_by = Termination::trial_cap;
            break;
        }
        const double trial_epsilon = anytime ? config.zeta * interval.width() : config.epsilon;
        const int t_max = depth_bound(gamma, trial_epsilon, gap);
        result.t_max = std::max(result.t_max, t_max);
        explorer.run(b0, interval.lower, interval.upper, trial_epsilon, 0, t_max + 2);
        interval = result.bounds.interval(b0);
        record(trial);
    }

    result.final_width = interval.width();
    result.updates = explorer.updates();
    result.max_depth = explorer.max_depth();
    return result;
}

} // namespace

void SolverConfig::validate() const {
    if (!(epsilon > 0.0)) {
        throw InvalidParams("epsilon must be positive");
    }
    if (!(zeta > 0.0 && zeta < 1.0)) {
        throw InvalidParams("zeta must lie in (0, 1)");
    }
    if (timeout && timeout->count() < 0.0) {
        throw InvalidParams("timeout must be non-negative");
    }
    if (max_trials && *max_trials < 0) {
        throw InvalidParams("trial cap must be non-negative");
    }
}

const char* to_string(Termination t) {
    switch (t) {
    case Termination::epsilon_reached:
        return "epsilon-reached";
    case Termination::timeout:
        return "timeout";
    case Termination::trial_cap:
        return "trial-cap";
    }
    return "unknown";
}

int depth_bound(double gamma, double epsilon, double gap) {
    if (gap <= epsilon) {
        return 0;
    }
    if (gamma <= 0.0) {
        return 1;
    }
    return std::max(0, static_cast<int>(std::ceil(std::log(epsilon / gap) / std::log(gamma))));
}

double update_bound(int t_max, int num_actions, int num_observations) {
    const long double branching = static_cast<long double>(num_actions) * num_observations;
    const long double t = t_max;
    if (branching == 1.0L) {
        return static_cast<double>(t * (t + 1.0L));
    }
    const long double nodes = (std::pow(branching, t + 1.0L) - 1.0L) / (branching - 1.0L);
    const long double bound = t * nodes;
    if (!std::isfinite(bound) || bound > static_cast<long double>(std::numeric_limits<double>::max())) {
        return std::numeric_limits<double>::infinity();
    }
    return static_cast<double>(bound);
}

double initial_gap(const BoundsPair& bounds) {
    double gap = 0.0;
    for (int s = 0; s < bounds.upper.num_states(); ++s) {
        gap = std::max(gap, bounds.upper.corner_value(s) - bounds.lower.value(Belief::point_mass(s)));
    }
    return gap;
}

int choose_action(const PomdpModel& model, const BoundsPair& bounds, const Belief& b) {
    std::vector<Branch> branches;
    for (int a = 0; a < model.num_actions(); ++a) {
        branches.push_back(expand_action(model, b, a));
        refresh_upper(model, bounds.upper, branches.back());
    }
    return best_upper_action(branches);
}

double excess_uncertainty(double width, double epsilon, double gamma, int depth) {
    return width - epsilon * std::pow(gamma, -depth);
}

std::optional<int> choose_observation(const PomdpModel& model, const BoundsPair& bounds, const Belief& b,
                                      int action, double epsilon, int depth) {
    Branch branch = expand_action(model, b, action);
    refresh_upper(model, bounds.upper, branch);
    refresh_lower(bounds.lower, branch);
    auto pick = pick_by_excess(branch.children, epsilon, model.discount(), depth + 1);
    if (!pick) {
        return std::nullopt;
    }
    return branch.children[*pick].observation;
}

ExploreStats explore(const PomdpModel& model, BoundsPair& bounds, const Belief& b, double epsilon, int depth,
                     const SolverConfig& config) {
    const int cap = depth_bound(model.discount(), epsilon, initial_gap(bounds)) + 2;
    Explorer explorer(model, bounds, config, std::nullopt);
    const auto interval = bounds.interval(b);
    explorer.run(b, interval.lower, interval.upper, epsilon, depth, std::max(cap, depth + 2));
    return {explorer.updates(), explorer.max_depth()};
}

SolveResult solve(const PomdpModel& model, const SolverConfig& config) { return run_hsvi(model, config, false); }

SolveResult solve_anytime(const PomdpModel& model, const SolverConfig& config) {
    return run_hsvi(model, config, true);
}

void write_trace_csv(const SolveTrace& trace, std::ostream& out) {
    out << "trial,wall_time_s,lower_b0,upper_b0,width,num_vectors,num_points,updates,max_depth\n";
    const auto old_precision = out.precision(17);
    for (const auto& r : trace) {
        out << r.trial << ',' << r.wall_time_s << ',' << r.lower_b0 << ',' << r.upper_b0 << ',' << r.width << ','
            << r.num_vectors << ',' << r.num_points << ',' << r.updates << ',' << r.max_depth << '\n';
    }
    out.precision(old_precision);
}

} // namespace hsvi
