#pragma once

#include "hsvi/lp.hpp"
#include "hsvi/model.hpp"

#include <cstddef>
#include <span>
#include <vector>

namespace hsvi {

/// Linear function over beliefs, tagged with the action whose backup produced it.
struct AlphaVector {
    std::vector<double> values;
    int action = 0;

    double dot(const Belief& b) const { return b.dot(values); }
    bool operator==(const AlphaVector&) const = default;
};

/// Sets grow by this fraction between prunes.
inline constexpr double kPruneGrowth = 0.10;

/// Piecewise-linear convex lower bound max over a vector set.
class LowerBound {
public:
    LowerBound() = default;
    explicit LowerBound(std::vector<AlphaVector> vectors);

    /// max_alpha alpha . b
    double value(const Belief& b) const;
    /// Index of the maximizing vector; ties go to the lowest index.
    std::size_t best_index(const Belief& b) const;
    const AlphaVector& best(const Belief& b) const { return vectors_[best_index(b)]; }

    void add(AlphaVector v);
    std::span<const AlphaVector> vectors() const { return vectors_; }
    std::size_t size() const { return vectors_.size(); }

    /// True once the set grew by kPruneGrowth since the last prune.
    bool needs_prune() const;
    /// Removes pointwise-dominated vectors; identical copies keep the earliest.
    /// Returns the number removed.
    std::size_t prune();

private:
    std::vector<AlphaVector> vectors_;
    std::size_t size_at_last_prune_ = 0;
};

struct UpperPoint {
    Belief belief;
    double value;
};

/**
 * Upper bound represented by a point set whose lower convex hull is evaluated
 * by LP projection. The first |S| points are the simplex corners; they are
 * permanent and only their values can change.
 */
class UpperBound {
public:
    UpperBound() = default;
    explicit UpperBound(std::vector<double> corner_values);

    double value(const Belief& b) const;

    int num_states() const { return num_states_; }
    double corner_value(int state) const { return points_[static_cast<std::size_t>(state)].value; }
    std::vector<double> corner_values() const;

    /// All points, corners first.
    std::span<const HullPoint> points() const { return points_; }
    std::size_t size() const { return points_.size(); }
    std::size_t num_interior() const { return points_.size() - static_cast<std::size_t>(num_states_); }

    /**
     * Inserts (b, v). Point masses lower the corner value when v is smaller.
     * A belief within L1 distance 1e-9 of a stored interior point replaces it
     * when v is lower and is discarded otherwise. Returns true if the set or a
     * value changed.
     */
    bool add(const Belief& b, double v);

    bool needs_prune() const;

    /// Drops interior point `i` (index into points()). Corners cannot be removed.
    void remove_interior(std::size_t i);
    /// Lowers the value stored at point `i`.
    void lower_value(std::size_t i, double v);
    void mark_pruned() { size_at_last_prune_ = points_.size(); }

private:
    int num_states_ = 0;
    std::vector<HullPoint> points_;
    std::size_t size_at_last_prune_ = 0;
};

struct BoundsPair {
    LowerBound lower;
    UpperBound upper;

    ValueInterval interval(const Belief& b) const { return {lower.value(b), upper.value(b)}; }
    double width(const Belief& b) const { return interval(b).width(); }
};

enum class BoundSide { lower, upper };

/// Blind-policy bound: one constant vector max_a min_s R(s,a) / (1 - gamma).
LowerBound init_lower(const PomdpModel& model);

/// Fully observable MDP values V_MDP(s), by value iteration from above to a
/// sup-norm residual of `residual`. Throws NoConvergence after `max_sweeps`.
std::vector<double> mdp_values(const PomdpModel& model, double residual = 1e-6, long max_sweeps = 1000000);

/// Corner-only point set holding V_MDP.
UpperBound init_upper(const PomdpModel& model);

BoundsPair init_bounds(const PomdpModel& model);

double lower_value(const LowerBound& lb, const Belief& b);
double upper_value(const UpperBound& ub, const Belief& b);

double q_value(const PomdpModel& model, const LowerBound& lb, const Belief& b, int action);
double q_value(const PomdpModel& model, const UpperBound& ub, const Belief& b, int action);
double q_value(const PomdpModel& model, const BoundsPair& bounds, BoundSide side, const Belief& b, int action);

struct BellmanResult {
    double value;
    int action;
};

/// H V(b) = max_a Q^V(b, a) over the upper bound; ties to the lowest action.
BellmanResult bellman_upper(const PomdpModel& model, const UpperBound& ub, const Belief& b);

/// Gradient backup of the lower bound at b.
AlphaVector backup_lower(const PomdpModel& model, const LowerBound& lb, const Belief& b);

/// Applies both local update operators at b, then prunes any set that grew
/// past the threshold.
void local_update(const PomdpModel& model, BoundsPair& bounds, const Belief& b);

std::size_t prune_lower(LowerBound& lb);

/**
 * Upper-bound pruning. A stored interior point with H V(b_i) < v_i - 1e-9 is
 * improvable: its value is lowered to H V(b_i). Afterwards every interior point
 * that the hull of the remaining points already matches or beats at its own
 * belief is removed. Returns the number of removed points.
 */
std::size_t prune_upper(const PomdpModel& model, UpperBound& ub);

} // namespace hsvi
