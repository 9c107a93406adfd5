#include "hsvi/model.hpp"

#include "hsvi/errors.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace hsvi {

namespace {

std::string describe(const char* what, int a, int b) {
    std::ostringstream out;
    out << what << " (" << a << ", " << b << ")";
    return out.str();
}

} // namespace

// ---------------------------------------------------------------------------
// Belief

Belief Belief::point_mass(int state) {
    if (state < 0) {
        throw ValidationError("point mass on negative state index");
    }
    return Belief({{state, 1.0}});
}

Belief Belief::uniform(int num_states) {
    if (num_states <= 0) {
        throw ValidationError("uniform belief needs at least one state");
    }
    std::vector<BeliefEntry> entries;
    entries.reserve(static_cast<std::size_t>(num_states));
    const double mass = 1.0 / num_states;
    for (int s = 0; s < num_states; ++s) {
        entries.push_back({s, mass});
    }
    return Belief(std::move(entries));
}

Belief Belief::from_dense(std::span<const double> probabilities) {
    double total = 0.0;
    std::vector<BeliefEntry> entries;
    for (std::size_t s = 0; s < probabilities.size(); ++s) {
        const double p = probabilities[s];
        if (!std::isfinite(p) || p < 0.0) {
            throw ValidationError("belief entry " + std::to_string(s) + " is negative or not finite");
        }
        total += p;
        if (p > 0.0) {
            entries.push_back({static_cast<int>(s), p});
        }
    }
    if (std::abs(total - 1.0) > kStochasticTolerance) {
        throw ValidationError("belief sums to " + std::to_string(total) + ", expected 1");
    }
    return normalized(std::move(entries));
}

Belief Belief::normalized(std::vector<BeliefEntry> entries) {
    std::sort(entries.begin(), entries.end(),
              [](const BeliefEntry& x, const BeliefEntry& y) { return x.state < y.state; });

    std::vector<BeliefEntry> merged;
    merged.reserve(entries.size());
    double total = 0.0;
    for (const auto& e : entries) {
        if (e.state < 0 || !std::isfinite(e.mass) || e.mass < 0.0) {
            throw ValidationError("belief entry has negative state or invalid mass");
        }
        if (!merged.empty() && merged.back().state == e.state) {
            merged.back().mass += e.mass;
        } else {
            merged.push_back(e);
        }
        total += e.mass;
    }
    if (!(total > 0.0)) {
        throw ValidationError("belief has no mass");
    }

    // Normalize, drop negligible states, then renormalize the survivors.
    double kept = 0.0;
    std::size_t out = 0;
    for (const auto& e : merged) {
        const double p = e.mass / total;
        if (p >= kBeliefMassFloor) {
            merged[out++] = {e.state, p};
            kept += p;
        }
    }
    merged.resize(out);
    if (merged.empty()) {
        throw ValidationError("belief has no mass above the floor");
    }
    for (auto& e : merged) {
        e.mass /= kept;
    }
    return Belief(std::move(merged));
}

double Belief::operator[](int state) const {
    auto it = std::lower_bound(entries_.begin(), entries_.end(), state,
                               [](const BeliefEntry& e, int s) { return e.state < s; });
    return (it != entries_.end() && it->state == state) ? it->mass : 0.0;
}

bool Belief::contains(int state) const {
    auto it = std::lower_bound(entries_.begin(), entries_.end(), state,
                               [](const BeliefEntry& e, int s) { return e.state < s; });
    return it != entries_.end() && it->state == state;
}

double Belief::dot(std::span<const double> values) const {
    double sum = 0.0;
    for (const auto& e : entries_) {
        sum += e.mass * values[static_cast<std::size_t>(e.state)];
    }
    return sum;
}

double Belief::l1_distance(const Belief& other) const {
    double dist = 0.0;
    auto a = entries_.begin();
    auto b = other.entries_.begin();
    while (a != entries_.end() || b != other.entries_.end()) {
        if (b == other.entries_.end() || (a != entries_.end() && a->state < b->state)) {
            dist += a->mass;
            ++a;
        } else if (a == entries_.end() || b->state < a->state) {
            dist += b->mass;
            ++b;
        } else {
            dist += std::abs(a->mass - b->mass);
            ++a;
            ++b;
        }
    }
    return dist;
}

std::vector<double> Belief::to_dense(int num_states) const {
    std::vector<double> dense(static_cast<std::size_t>(num_states), 0.0);
    for (const auto& e : entries_) {
        if (e.state >= num_states) {
            throw ValidationError("belief state index out of range");
        }
        dense[static_cast<std::size_t>(e.state)] = e.mass;
    }
    return dense;
}

// ---------------------------------------------------------------------------
// PomdpModel

std::span<const Transition> PomdpModel::transitions(int state, int action) const {
    const auto& starts = row_start_[static_cast<std::size_t>(action)];
    const auto& succ = successors_[static_cast<std::size_t>(action)];
    const auto begin = starts[static_cast<std::size_t>(state)];
    const auto end = starts[static_cast<std::size_t>(state) + 1];
    return {succ.data() + begin, end - begin};
}

double PomdpModel::transition(int state, int action, int next_state) const {
    auto row = transitions(state, action);
    auto it = std::lower_bound(row.begin(), row.end(), next_state,
                               [](const Transition& t, int s) { return t.next_state < s; });
    return (it != row.end() && it->next_state == next_state) ? it->probability : 0.0;
}

double PomdpModel::max_abs_reward() const {
    double m = 0.0;
    for (double r : rewards_) {
        m = std::max(m, std::abs(r));
    }
    return m;
}

void PomdpModel::validate(double tolerance) const {
    if (num_states_ <= 0 || num_actions_ <= 0 || num_observations_ <= 0) {
        throw ValidationError("model needs at least one state, action and observation");
    }
    if (!(discount_ >= 0.0 && discount_ < 1.0)) {
        throw ValidationError("discount must lie in [0, 1)");
    }
    for (int a = 0; a < num_actions_; ++a) {
        for (int s = 0; s < num_states_; ++s) {
            double sum = 0.0;
            for (const auto& t : transitions(s, a)) {
                if (!(t.probability >= 0.0 && t.probability <= 1.0) || t.next_state < 0 ||
                    t.next_state >= num_states_) {
                    throw ValidationError(describe("bad transition entry at (state, action)", s, a));
                }
                sum += t.probability;
            }
            if (std::abs(sum - 1.0) > tolerance) {
                throw ValidationError(describe("transition row does not sum to 1 at (state, action)", s, a) +
                                      ", sum " + std::to_string(sum));
            }
            double osum = 0.0;
            for (double p : observation_row(s, a)) {
                if (!(p >= 0.0 && p <= 1.0)) {
                    throw ValidationError(describe("bad observation probability at (next state, action)", s, a));
                }
                osum += p;
            }
            if (std::abs(osum - 1.0) > tolerance) {
                throw ValidationError(
                    describe("observation row does not sum to 1 at (next state, action)", s, a) + ", sum " +
                    std::to_string(osum));
            }
            if (!std::isfinite(reward(s, a))) {
                throw ValidationError(describe("reward not finite at (state, action)", s, a));
            }
        }
    }
    if (initial_belief_.empty()) {
        throw ValidationError("initial belief missing");
    }
    double total = 0.0;
    for (const auto& e : initial_belief_.entries()) {
        if (e.state >= num_states_) {
            throw ValidationError("initial belief refers to a state out of range");
        }
        total += e.mass;
    }
    if (std::abs(total - 1.0) > tolerance) {
        throw ValidationError("initial belief does not sum to 1");
    }
    auto check_names = [](const std::vector<std::string>& names, int count, const char* what) {
        if (!names.empty() && static_cast<int>(names.size()) != count) {
            throw ValidationError(std::string(what) + " name count does not match");
        }
    };
    check_names(state_names_, num_states_, "state");
    check_names(action_names_, num_actions_, "action");
    check_names(observation_names_, num_observations_, "observation");
}

// ---------------------------------------------------------------------------
// PomdpBuilder

PomdpBuilder::PomdpBuilder(int num_states, int num_actions, int num_observations, double discount)
    : num_states_(num_states), num_actions_(num_actions), num_observations_(num_observations),
      discount_(discount) {
    if (num_states <= 0 || num_actions <= 0 || num_observations <= 0) {
        throw ValidationError("model needs at least one state, action and observation");
    }
    const auto rows = static_cast<std::size_t>(num_states) * static_cast<std::size_t>(num_actions);
    rows_.resize(rows);
    observations_.assign(rows * static_cast<std::size_t>(num_observations), 0.0);
    rewards_.assign(rows, 0.0);
}

void PomdpBuilder::check_state(int s) const {
    if (s < 0 || s >= num_states_) {
        throw ValidationError("state index " + std::to_string(s) + " out of range");
    }
}

void PomdpBuilder::check_action(int a) const {
    if (a < 0 || a >= num_actions_) {
        throw ValidationError("action index " + std::to_string(a) + " out of range");
    }
}

void PomdpBuilder::check_observation(int o) const {
    if (o < 0 || o >= num_observations_) {
        throw ValidationError("observation index " + std::to_string(o) + " out of range");
    }
}

void PomdpBuilder::set_transition(int state, int action, int next_state, double probability) {
    check_state(state);
    check_action(action);
    check_state(next_state);
    auto& row = rows_[row_index(state, action)];
    auto it = std::lower_bound(row.begin(), row.end(), next_state,
                               [](const Transition& t, int s) { return t.next_state < s; });
    if (it != row.end() && it->next_state == next_state) {
        if (probability == 0.0) {
            row.erase(it);
        } else {
            it->probability = probability;
        }
    } else if (probability != 0.0) {
        row.insert(it, {next_state, probability});
    }
}

void PomdpBuilder::set_transition_row(int state, int action, std::vector<Transition> row) {
    check_state(state);
    check_action(action);
    std::sort(row.begin(), row.end(),
              [](const Transition& x, const Transition& y) { return x.next_state < y.next_state; });
    std::vector<Transition> cleaned;
    cleaned.reserve(row.size());
    for (const auto& t : row) {
        check_state(t.next_state);
        if (!cleaned.empty() && cleaned.back().next_state == t.next_state) {
            cleaned.back().probability = t.probability;
        } else {
            cleaned.push_back(t);
        }
    }
    std::erase_if(cleaned, [](const Transition& t) { return t.probability == 0.0; });
    rows_[row_index(state, action)] = std::move(cleaned);
}

void PomdpBuilder::set_observation(int next_state, int action, int observation, double probability) {
    check_state(next_state);
    check_action(action);
    check_observation(observation);
    observations_[row_index(next_state, action) * static_cast<std::size_t>(num_observations_) +
                  static_cast<std::size_t>(observation)] = probability;
}

void PomdpBuilder::set_reward(int state, int action, double reward) {
    check_state(state);
    check_action(action);
    rewards_[row_index(state, action)] = reward;
}

void PomdpBuilder::set_initial_belief(Belief belief) { initial_belief_ = std::move(belief); }

void PomdpBuilder::set_state_names(std::vector<std::string> names) { state_names_ = std::move(names); }
void PomdpBuilder::set_action_names(std::vector<std::string> names) { action_names_ = std::move(names); }
void PomdpBuilder::set_observation_names(std::vector<std::string> names) {
    observation_names_ = std::move(names);
}

double PomdpBuilder::transition(int state, int action, int next_state) const {
    for (const auto& t : transition_row(state, action)) {
        if (t.next_state == next_state) {
            return t.probability;
        }
    }
    return 0.0;
}

std::span<const Transition> PomdpBuilder::transition_row(int state, int action) const {
    check_state(state);
    check_action(action);
    return rows_[row_index(state, action)];
}

double PomdpBuilder::observation(int next_state, int action, int observation) const {
    check_state(next_state);
    check_action(action);
    check_observation(observation);
    return observations_[row_index(next_state, action) * static_cast<std::size_t>(num_observations_) +
                         static_cast<std::size_t>(observation)];
}

PomdpModel PomdpBuilder::build(double tolerance) const {
    PomdpModel m;
    m.num_states_ = num_states_;
    m.num_actions_ = num_actions_;
    m.num_observations_ = num_observations_;
    m.discount_ = discount_;
    m.row_start_.resize(static_cast<std::size_t>(num_actions_));
    m.successors_.resize(static_cast<std::size_t>(num_actions_));
    for (int a = 0; a < num_actions_; ++a) {
        auto& starts = m.row_start_[static_cast<std::size_t>(a)];
        auto& succ = m.successors_[static_cast<std::size_t>(a)];
        starts.reserve(static_cast<std::size_t>(num_states_) + 1);
        starts.push_back(0);
        for (int s = 0; s < num_states_; ++s) {
            const auto& row = rows_[row_index(s, a)];
            succ.insert(succ.end(), row.begin(), row.end());
            starts.push_back(succ.size());
        }
    }
    m.observations_ = observations_;
    m.rewards_ = rewards_;
    m.initial_belief_ = initial_belief_;
    m.state_names_ = state_names_;
    m.action_names_ = action_names_;
    m.observation_names_ = observation_names_;
    m.validate(tolerance);
    return m;
}

// ---------------------------------------------------------------------------
// Belief-space kernel

std::vector<BeliefEntry> predict(const PomdpModel& model, const Belief& belief, int action) {
    std::vector<BeliefEntry> out;
    for (const auto& e : belief.entries()) {
        for (const auto& t : model.transitions(e.state, action)) {
            out.push_back({t.next_state, e.mass * t.probability});
        }
    }
    std::sort(out.begin(), out.end(), [](const BeliefEntry& x, const BeliefEntry& y) { return x.state < y.state; });
    std::size_t n = 0;
    for (std::size_t i = 0; i < out.size(); ++i) {
        if (n > 0 && out[n - 1].state == out[i].state) {
            out[n - 1].mass += out[i].mass;
        } else {
            out[n++] = out[i];
        }
    }
    out.resize(n);
    return out;
}

double observation_probability(const PomdpModel& model, std::span<const BeliefEntry> predicted, int action,
                               int observation) {
    double p = 0.0;
    for (const auto& e : predicted) {
        p += e.mass * model.observation(e.state, action, observation);
    }
    return p;
}

double observation_probability(const PomdpModel& model, const Belief& belief, int action, int observation) {
    return observation_probability(model, predict(model, belief, action), action, observation);
}

Belief belief_update(const PomdpModel& model, std::span<const BeliefEntry> predicted, int action,
                     int observation) {
    std::vector<BeliefEntry> next;
    next.reserve(predicted.size());
    double total = 0.0;
    for (const auto& e : predicted) {
        const double m = e.mass * model.observation(e.state, action, observation);
        if (m > 0.0) {
            next.push_back({e.state, m});
            total += m;
        }
    }
    if (!(total > kImpossibleObservation)) {
        throw ZeroProbabilityObservation("observation " + std::to_string(observation) +
                                         " has zero probability after action " + std::to_string(action));
    }
    return Belief::normalized(std::move(next));
}

Belief belief_update(const PomdpModel& model, const Belief& belief, int action, int observation) {
    return belief_update(model, predict(model, belief, action), action, observation);
}

double expected_reward(const PomdpModel& model, const Belief& belief, int action) {
    return belief.dot(model.reward_column(action));
}

} // namespace hsvi
