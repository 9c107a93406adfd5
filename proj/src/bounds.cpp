#include "hsvi/bounds.hpp"

#include "hsvi/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace hsvi {

namespace {

constexpr double kDedupDistance = 1e-9;
constexpr double kPruneSlack = 1e-9;

bool grown_past_threshold(std::size_t now, std::size_t at_last_prune) {
    const auto step = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::ceil(kPruneGrowth * static_cast<double>(at_last_prune))));
    return now >= at_last_prune + step;
}

bool dominates(const std::vector<double>& a, const std::vector<double>& b) {
    for (std::size_t s = 0; s < a.size(); ++s) {
        if (a[s] < b[s]) {
            return false;
        }
    }
    return true;
}

} // namespace

// ---------------------------------------------------------------------------
// LowerBound

LowerBound::LowerBound(std::vector<AlphaVector> vectors)
    : vectors_(std::move(vectors)), size_at_last_prune_(vectors_.size()) {}

std::size_t LowerBound::best_index(const Belief& b) const {
    std::size_t best = 0;
    double best_value = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < vectors_.size(); ++i) {
        const double v = vectors_[i].dot(b);
        if (v > best_value) {
            best_value = v;
            best = i;
        }
    }
    return best;
}

double LowerBound::value(const Belief& b) const {
    double best = -std::numeric_limits<double>::infinity();
    for (const auto& v : vectors_) {
        best = std::max(best, v.dot(b));
    }
    return best;
}

void LowerBound::add(AlphaVector v) { vectors_.push_back(std::move(v)); }

bool LowerBound::needs_prune() const { return grown_past_threshold(vectors_.size(), size_at_last_prune_); }

std::size_t LowerBound::prune() {
    const std::size_t n = vectors_.size();
    std::vector<char> removed(n, 0);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n && !removed[i]; ++j) {
            if (i == j || removed[j]) {
                continue;
            }
            if (dominates(vectors_[j].values, vectors_[i].values)) {
                // Identical vectors dominate each other; keep the earlier one.
                if (j < i || vectors_[j].values != vectors_[i].values) {
                    removed[i] = 1;
                }
            }
        }
    }
    std::size_t out = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (!removed[i]) {
            if (out != i) {
                vectors_[out] = std::move(vectors_[i]);
            }
            ++out;
        }
    }
    vectors_.resize(out);
    size_at_last_prune_ = vectors_.size();
    return n - out;
}

// ---------------------------------------------------------------------------
// UpperBound

UpperBound::UpperBound(std::vector<double> corner_values) : num_states_(static_cast<int>(corner_values.size())) {
    points_.reserve(corner_values.size());
    for (int s = 0; s < num_states_; ++s) {
        points_.push_back({Belief::point_mass(s), corner_values[static_cast<std::size_t>(s)]});
    }
    size_at_last_prune_ = points_.size();
}

double UpperBound::value(const Belief& b) const {
    if (b.is_point_mass()) {
        return corner_value(b.entries()[0].state);
    }
    return hull_projection(points_, b);
}

std::vector<double> UpperBound::corner_values() const {
    std::vector<double> out(static_cast<std::size_t>(num_states_));
    for (int s = 0; s < num_states_; ++s) {
        out[static_cast<std::size_t>(s)] = corner_value(s);
    }
    return out;
}

bool UpperBound::add(const Belief& b, double v) {
    if (b.is_point_mass()) {
        auto& corner = points_[static_cast<std::size_t>(b.entries()[0].state)];
        if (v < corner.value) {
            corner.value = v;
            return true;
        }
        return false;
    }
    for (std::size_t i = static_cast<std::size_t>(num_states_); i < points_.size(); ++i) {
        if (points_[i].belief.l1_distance(b) <= kDedupDistance) {
            if (v < points_[i].value) {
                points_[i] = {b, v};
                return true;
            }
            return false;
        }
    }
    points_.push_back({b, v});
    return true;
}

bool UpperBound::needs_prune() const { return grown_past_threshold(points_.size(), size_at_last_prune_); }

void UpperBound::remove_interior(std::size_t i) {
    if (i < static_cast<std::size_t>(num_states_) || i >= points_.size()) {
        throw Error("remove_interior: index is a corner or out of range");
    }
    points_.erase(points_.begin() + static_cast<std::ptrdiff_t>(i));
}

void UpperBound::lower_value(std::size_t i, double v) {
    if (v < points_[i].value) {
        points_[i].value = v;
    }
}

// ---------------------------------------------------------------------------
// Initialization

LowerBound init_lower(const PomdpModel& model) {
    const double gamma = model.discount();
    double best = -std::numeric_limits<double>::infinity();
    for (int a = 0; a < model.num_actions(); ++a) {
        const auto column = model.reward_column(a);
        const double worst = *std::min_element(column.begin(), column.end());
        best = std::max(best, worst / (1.0 - gamma));
    }
    AlphaVector alpha{std::vector<double>(static_cast<std::size_t>(model.num_states()), best), 0};
    return LowerBound({std::move(alpha)});
}

std::vector<double> mdp_values(const PomdpModel& model, double residual, long max_sweeps) {
    const double gamma = model.discount();
    double max_reward = -std::numeric_limits<double>::infinity();
    for (int a = 0; a < model.num_actions(); ++a) {
        for (double r : model.reward_column(a)) {
            max_reward = std::max(max_reward, r);
        }
    }
    // Starting above the fixed point keeps every sweep an upper bound and
    // leaves the result satisfying H V <= V.
    std::vector<double> values(static_cast<std::size_t>(model.num_states()), max_reward / (1.0 - gamma));
    for (long sweep = 0; sweep < max_sweeps; ++sweep) {
        double change = 0.0;
        for (int s = 0; s < model.num_states(); ++s) {
            double best = -std::numeric_limits<double>::infinity();
            for (int a = 0; a < model.num_actions(); ++a) {
                double future = 0.0;
                for (const auto& t : model.transitions(s, a)) {
                    future += t.probability * values[static_cast<std::size_t>(t.next_state)];
                }
                best = std::max(best, model.reward(s, a) + gamma * future);
            }
            auto& slot = values[static_cast<std::size_t>(s)];
            change = std::max(change, std::abs(slot - best));
            slot = std::min(slot, best);
        }
        if (change <= residual) {
            return values;
        }
    }
    throw NoConvergence("MDP value iteration did not reach the residual within the sweep cap");
}

UpperBound init_upper(const PomdpModel& model) { return UpperBound(mdp_values(model)); }

BoundsPair init_bounds(const PomdpModel& model) { return {init_lower(model), init_upper(model)}; }

double lower_value(const LowerBound& lb, const Belief& b) { return lb.value(b); }
double upper_value(const UpperBound& ub, const Belief& b) { return ub.value(b); }

// ---------------------------------------------------------------------------
// Bellman operators

namespace {

template <typename Evaluate>
double q_value_with(const PomdpModel& model, const Belief& b, int action, Evaluate&& evaluate) {
    const auto predicted = predict(model, b, action);
    double future = 0.0;
    for (int o = 0; o < model.num_observations(); ++o) {
        const double p = observation_probability(model, predicted, action, o);
        if (p <= kImpossibleObservation) {
            continue;
        }
        future += p * evaluate(belief_update(model, predicted, action, o));
    }
    return expected_reward(model, b, action) + model.discount() * future;
}

} // namespace

double q_value(const PomdpModel& model, const LowerBound& lb, const Belief& b, int action) {
    return q_value_with(model, b, action, [&](const Belief& child) { return lb.value(child); });
}

double q_value(const PomdpModel& model, const UpperBound& ub, const Belief& b, int action) {
    return q_value_with(model, b, action, [&](const Belief& child) { return ub.value(child); });
}

double q_value(const PomdpModel& model, const BoundsPair& bounds, BoundSide side, const Belief& b, int action) {
    return side == BoundSide::lower ? q_value(model, bounds.lower, b, action)
                                    : q_value(model, bounds.upper, b, action);
}

BellmanResult bellman_upper(const PomdpModel& model, const UpperBound& ub, const Belief& b) {
    BellmanResult best{-std::numeric_limits<double>::infinity(), 0};
    for (int a = 0; a < model.num_actions(); ++a) {
        const double q = q_value(model, ub, b, a);
        if (q > best.value) {
            best = {q, a};
        }
    }
    return best;
}

AlphaVector backup_lower(const PomdpModel& model, const LowerBound& lb, const Belief& b) {
    const int num_states = model.num_states();
    const auto vectors = lb.vectors();
    const double gamma = model.discount();

    AlphaVector best;
    double best_value = -std::numeric_limits<double>::infinity();
    std::vector<double> weighted(static_cast<std::size_t>(num_states));

    for (int a = 0; a < model.num_actions(); ++a) {
        const auto predicted = predict(model, b, a);

        // Sum over o of O(s', a, o) * beta_{a,o}(s').
        std::fill(weighted.begin(), weighted.end(), 0.0);
        std::size_t fallback = vectors.size();
        for (int o = 0; o < model.num_observations(); ++o) {
            std::size_t chosen = 0;
            double chosen_value = -std::numeric_limits<double>::infinity();
            const double p = observation_probability(model, predicted, a, o);
            if (p > kImpossibleObservation) {
                // argmax over the unnormalized posterior ranks vectors like tau(b, a, o).
                for (std::size_t i = 0; i < vectors.size(); ++i) {
                    double v = 0.0;
                    for (const auto& e : predicted) {
                        v += e.mass * model.observation(e.state, a, o) * vectors[i].values[static_cast<std::size_t>(e.state)];
                    }
                    if (v > chosen_value) {
                        chosen_value = v;
                        chosen = i;
                    }
                }
            } else {
                // Impossible from b, but the vector must still bound the value
                // at other beliefs, so pick a real member of the set.
                if (fallback == vectors.size()) {
                    double fb = -std::numeric_limits<double>::infinity();
                    for (std::size_t i = 0; i < vectors.size(); ++i) {
                        double v = 0.0;
                        for (const auto& e : predicted) {
                            v += e.mass * vectors[i].values[static_cast<std::size_t>(e.state)];
                        }
                        if (v > fb) {
                            fb = v;
                            fallback = i;
                        }
                    }
                }
                chosen = fallback;
            }
            const auto& alpha = vectors[chosen].values;
            for (int sp = 0; sp < num_states; ++sp) {
                const double obs = model.observation(sp, a, o);
                if (obs != 0.0) {
                    weighted[static_cast<std::size_t>(sp)] += obs * alpha[static_cast<std::size_t>(sp)];
                }
            }
        }

        AlphaVector candidate{std::vector<double>(static_cast<std::size_t>(num_states)), a};
        for (int s = 0; s < num_states; ++s) {
            double future = 0.0;
            for (const auto& t : model.transitions(s, a)) {
                future += t.probability * weighted[static_cast<std::size_t>(t.next_state)];
            }
            candidate.values[static_cast<std::size_t>(s)] = model.reward(s, a) + gamma * future;
        }
        const double v = candidate.dot(b);
        if (v > best_value) {
            best_value = v;
            best = std::move(candidate);
        }
    }
    return best;
}

// ---------------------------------------------------------------------------
// Updates and pruning

void local_update(const PomdpModel& model, BoundsPair& bounds, const Belief& b) {
    bounds.lower.add(backup_lower(model, bounds.lower, b));
    bounds.upper.add(b, bellman_upper(model, bounds.upper, b).value);
    if (bounds.lower.needs_prune()) {
        prune_lower(bounds.lower);
    }
    if (bounds.upper.needs_prune()) {
        prune_upper(model, bounds.upper);
    }
}

std::size_t prune_lower(LowerBound& lb) { return lb.prune(); }

std::size_t prune_upper(const PomdpModel& model, UpperBound& ub) {
    const auto first = static_cast<std::size_t>(ub.num_states());
    for (std::size_t i = first; i < ub.size(); ++i) {
        const auto& pt = ub.points()[i];
        const double h = bellman_upper(model, ub, pt.belief).value;
        if (h < pt.value - kPruneSlack) {
            ub.lower_value(i, h);
        }
    }
    std::size_t removed = 0;
    for (std::size_t i = first; i < ub.size();) {
        const auto& pt = ub.points()[i];
        const double others = hull_projection(ub.points(), pt.belief, i);
        if (others <= pt.value) {
            ub.remove_interior(i);
            ++removed;
        } else {
            ++i;
        }
    }
    ub.mark_pruned();
    return removed;
}

} // namespace hsvi
