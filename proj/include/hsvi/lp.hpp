#pragma once

#include "hsvi/errors.hpp"
#include "hsvi/model.hpp"

#include <span>
#include <string>
#include <vector>

namespace hsvi {

/// Equality-form linear program: minimize c.x subject to A x = rhs, x >= 0.
struct LpProblem {
    int num_rows = 0;
    int num_cols = 0;
    std::vector<double> objective;    // length num_cols
    std::vector<double> constraints;  // row-major, num_rows x num_cols
    std::vector<double> rhs;          // length num_rows

    LpProblem() = default;
    LpProblem(int rows, int cols)
        : num_rows(rows), num_cols(cols), objective(static_cast<std::size_t>(cols), 0.0),
          constraints(static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols), 0.0),
          rhs(static_cast<std::size_t>(rows), 0.0) {}

    double& at(int row, int col) {
        return constraints[static_cast<std::size_t>(row) * static_cast<std::size_t>(num_cols) +
                           static_cast<std::size_t>(col)];
    }
    double at(int row, int col) const {
        return constraints[static_cast<std::size_t>(row) * static_cast<std::size_t>(num_cols) +
                           static_cast<std::size_t>(col)];
    }
};

struct LpSolution {
    double value = 0.0;
    std::vector<double> x;
    /// Column index basic in each surviving row; usable as a warm start.
    std::vector<int> basis;
    int iterations = 0;
};

enum class LpStatus { infeasible, unbounded, max_iterations };

class LpError : public Error {
public:
    LpError(LpStatus status, const std::string& message) : Error(message), status_(status) {}
    LpStatus status() const { return status_; }

private:
    LpStatus status_;
};

/// Pivot tolerance of the simplex kernel.
inline constexpr double kPivotTolerance = 1e-9;

/**
 * Primal simplex with Bland's rule on a dense tableau.
 *
 * The starting basis is taken from `warm_basis` when it names a feasible basis,
 * otherwise from unit columns of A, with artificial variables (phase one)
 * covering any remaining rows. Iterations per phase are capped at
 * 10 * (columns + rows).
 */
LpSolution solve_lp(const LpProblem& problem, std::span<const int> warm_basis = {});

struct HullPoint {
    Belief belief;
    double value;
};

/**
 * Lower convex hull of the (belief, value) points evaluated at `query`:
 * min sum_i l_i v_i  s.t.  sum_i l_i b_i = query, sum_i l_i = 1, l >= 0.
 *
 * Only points whose support lies inside the query's support can carry weight,
 * so the LP is built over those points and over the query's support rows.
 * The convexity row is implied by the support rows because every belief sums
 * to one. Feasibility requires the corners for the query's support.
 */
double hull_projection(std::span<const HullPoint> points, const Belief& query);

/// As above, ignoring points[skip].
double hull_projection(std::span<const HullPoint> points, const Belief& query, std::size_t skip);

} // namespace hsvi
