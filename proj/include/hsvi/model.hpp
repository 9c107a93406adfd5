#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace hsvi {

/// Probability mass below this is dropped from a belief after normalization.
inline constexpr double kBeliefMassFloor = 1e-12;

/// Tolerance on row sums of T and O, and on belief normalization.
inline constexpr double kStochasticTolerance = 1e-9;

/// Pr(o | b, a) at or below this is an impossible observation.
inline constexpr double kImpossibleObservation = 1e-300;

struct BeliefEntry {
    int state;
    double mass;

    bool operator==(const BeliefEntry&) const = default;
};

/**
 * Probability distribution over states, stored as a list of (state, mass)
 * entries sorted by state. Only states with positive mass are stored.
 */
class Belief {
public:
    Belief() = default;

    static Belief point_mass(int state);
    static Belief uniform(int num_states);

    /// Validates that the vector is a distribution (within kStochasticTolerance).
    static Belief from_dense(std::span<const double> probabilities);

    /// Sorts, merges duplicate states, normalizes and drops entries below
    /// kBeliefMassFloor. Throws ValidationError on negative or all-zero mass.
    static Belief normalized(std::vector<BeliefEntry> entries);

    std::span<const BeliefEntry> entries() const { return entries_; }
    std::size_t support_size() const { return entries_.size(); }
    bool empty() const { return entries_.empty(); }

    /// Mass at `state` (zero when outside the support).
    double operator[](int state) const;

    bool contains(int state) const;
    bool is_point_mass() const { return entries_.size() == 1; }

    double dot(std::span<const double> values) const;
    double l1_distance(const Belief& other) const;
    std::vector<double> to_dense(int num_states) const;

    bool operator==(const Belief&) const = default;

private:
    explicit Belief(std::vector<BeliefEntry> entries) : entries_(std::move(entries)) {}

    std::vector<BeliefEntry> entries_;
};

struct ValueInterval {
    double lower = 0.0;
    double upper = 0.0;

    double width() const { return upper - lower; }
};

struct Transition {
    int next_state;
    double probability;

    bool operator==(const Transition&) const = default;
};

class PomdpBuilder;

/**
 * Finite discounted POMDP <S, A, O, T, O, R, gamma, b0>.
 *
 * Transitions are stored sparsely per action (one sorted successor list per
 * state); observation and reward tables are dense. Immutable once built.
 */
class PomdpModel {
public:
    int num_states() const { return num_states_; }
    int num_actions() const { return num_actions_; }
    int num_observations() const { return num_observations_; }
    double discount() const { return discount_; }
    const Belief& initial_belief() const { return initial_belief_; }

    /// Successors of (s, a) with nonzero probability, sorted by next state.
    std::span<const Transition> transitions(int state, int action) const;
    double transition(int state, int action, int next_state) const;

    double observation(int next_state, int action, int observation) const {
        return observations_[index_so(next_state, action) + static_cast<std::size_t>(observation)];
    }
    std::span<const double> observation_row(int next_state, int action) const {
        return {observations_.data() + index_so(next_state, action),
                static_cast<std::size_t>(num_observations_)};
    }

    double reward(int state, int action) const {
        return rewards_[static_cast<std::size_t>(action) * static_cast<std::size_t>(num_states_) +
                        static_cast<std::size_t>(state)];
    }
    /// R(., a) as a contiguous vector over states.
    std::span<const double> reward_column(int action) const {
        return {rewards_.data() + static_cast<std::size_t>(action) * static_cast<std::size_t>(num_states_),
                static_cast<std::size_t>(num_states_)};
    }
    double max_abs_reward() const;

    const std::vector<std::string>& state_names() const { return state_names_; }
    const std::vector<std::string>& action_names() const { return action_names_; }
    const std::vector<std::string>& observation_names() const { return observation_names_; }

    /// Checks every invariant; throws ValidationError describing the first failure.
    void validate(double tolerance = kStochasticTolerance) const;

    bool operator==(const PomdpModel&) const = default;

private:
    friend class PomdpBuilder;
    PomdpModel() = default;

    std::size_t index_so(int next_state, int action) const {
        return (static_cast<std::size_t>(action) * static_cast<std::size_t>(num_states_) +
                static_cast<std::size_t>(next_state)) *
               static_cast<std::size_t>(num_observations_);
    }

    int num_states_ = 0;
    int num_actions_ = 0;
    int num_observations_ = 0;
    double discount_ = 0.0;

    // Per action, CSR layout over states.
    std::vector<std::vector<std::size_t>> row_start_;
    std::vector<std::vector<Transition>> successors_;

    std::vector<double> observations_;  // [a][s'][o]
    std::vector<double> rewards_;       // [a][s]
    Belief initial_belief_;

    std::vector<std::string> state_names_;
    std::vector<std::string> action_names_;
    std::vector<std::string> observation_names_;
};

/// Staging area for assembling a PomdpModel entry by entry.
class PomdpBuilder {
public:
    PomdpBuilder(int num_states, int num_actions, int num_observations, double discount);

    int num_states() const { return num_states_; }
    int num_actions() const { return num_actions_; }
    int num_observations() const { return num_observations_; }

    /// Overwrites T(s, a, s'). Zero removes the entry.
    void set_transition(int state, int action, int next_state, double probability);
    /// Replaces the whole successor row of (s, a).
    void set_transition_row(int state, int action, std::vector<Transition> row);
    void set_observation(int next_state, int action, int observation, double probability);
    void set_reward(int state, int action, double reward);
    void set_initial_belief(Belief belief);
    void set_discount(double discount) { discount_ = discount; }

    void set_state_names(std::vector<std::string> names);
    void set_action_names(std::vector<std::string> names);
    void set_observation_names(std::vector<std::string> names);

    double transition(int state, int action, int next_state) const;
    std::span<const Transition> transition_row(int state, int action) const;
    double observation(int next_state, int action, int observation) const;

    /// Validates and freezes the model.
    PomdpModel build(double tolerance = kStochasticTolerance) const;

private:
    std::size_t row_index(int state, int action) const {
        return static_cast<std::size_t>(action) * static_cast<std::size_t>(num_states_) +
               static_cast<std::size_t>(state);
    }
    void check_state(int s) const;
    void check_action(int a) const;
    void check_observation(int o) const;

    int num_states_;
    int num_actions_;
    int num_observations_;
    double discount_;
    std::vector<std::vector<Transition>> rows_;  // [a][s], sorted by next state
    std::vector<double> observations_;           // [a][s'][o]
    std::vector<double> rewards_;                // [a][s]
    Belief initial_belief_;
    std::vector<std::string> state_names_;
    std::vector<std::string> action_names_;
    std::vector<std::string> observation_names_;
};

/// Sparse predicted next-state distribution sum_s T(s, a, s') b(s).
std::vector<BeliefEntry> predict(const PomdpModel& model, const Belief& belief, int action);

/// Pr(o | b, a).
double observation_probability(const PomdpModel& model, const Belief& belief, int action, int observation);

/// Pr(o | b, a) given the predicted distribution from predict().
double observation_probability(const PomdpModel& model, std::span<const BeliefEntry> predicted, int action,
                               int observation);

/// tau(b, a, o). Throws ZeroProbabilityObservation when Pr(o | b, a) is (numerically) zero.
Belief belief_update(const PomdpModel& model, const Belief& belief, int action, int observation);

/// tau(b, a, o) from the predicted distribution.
Belief belief_update(const PomdpModel& model, std::span<const BeliefEntry> predicted, int action, int observation);

/// sum_s R(s, a) b(s).
double expected_reward(const PomdpModel& model, const Belief& belief, int action);

} // namespace hsvi
