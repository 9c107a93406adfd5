#include "hsvi/lp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <set>

namespace hsvi {

namespace {

// Basic values in (-kDriftTolerance, 0) are rounding residue and reset to zero.
constexpr double kDriftTolerance = 1e-9;
// Basic values below -kFeasibilityTolerance are repaired by dual pivots.
constexpr double kFeasibilityTolerance = 1e-12;

// Dense tableau: one row per constraint plus a trailing reduced-cost row.
// Columns are the structural variables, then artificials, then the rhs.
class Tableau {
public:
    Tableau(int rows, int structural, int artificial)
        : rows_(rows), structural_(structural), cols_(structural + artificial),
          stride_(static_cast<std::size_t>(cols_) + 1),
          data_(static_cast<std::size_t>(rows + 1) * stride_, 0.0), basis_(static_cast<std::size_t>(rows), -1),
          origin_(static_cast<std::size_t>(rows)) {
        for (int r = 0; r < rows; ++r) {
            origin_[static_cast<std::size_t>(r)] = r;
        }
    }

    double& at(int r, int c) { return data_[static_cast<std::size_t>(r) * stride_ + static_cast<std::size_t>(c)]; }
    double at(int r, int c) const {
        return data_[static_cast<std::size_t>(r) * stride_ + static_cast<std::size_t>(c)];
    }
    double& rhs(int r) { return at(r, cols_); }
    double rhs(int r) const { return at(r, cols_); }
    double& reduced(int c) { return at(rows_, c); }
    double& objective() { return at(rows_, cols_); }

    int rows() const { return rows_; }
    int cols() const { return cols_; }
    int structural() const { return structural_; }
    std::vector<int>& basis() { return basis_; }
    const std::vector<int>& basis() const { return basis_; }
    /// Problem row each tableau row came from (rows can be dropped as redundant).
    const std::vector<int>& origin() const { return origin_; }

    // In primal iterations a leaving value that drifted below zero would be
    // divided by the pivot and amplified; it is zero up to rounding. Dual
    // iterations pass clamp = false since their leaving value is negative.
    void pivot(int pr, int pc, bool clamp = true) {
        if (clamp) {
            rhs(pr) = std::max(rhs(pr), 0.0);
        }
        const double inv = 1.0 / at(pr, pc);
        double* prow = &at(pr, 0);
        for (std::size_t c = 0; c < stride_; ++c) {
            prow[c] *= inv;
        }
        prow[pc] = 1.0;
        for (int r = 0; r <= rows_; ++r) {
            if (r == pr) {
                continue;
            }
            double* row = &at(r, 0);
            const double f = row[pc];
            if (f == 0.0) {
                continue;
            }
            for (std::size_t c = 0; c < stride_; ++c) {
                row[c] -= f * prow[c];
            }
            row[pc] = 0.0;
            if (clamp && r < rows_ && row[cols_] < 0.0 && row[cols_] > -kDriftTolerance) {
                row[cols_] = 0.0;
            }
        }
        basis_[static_cast<std::size_t>(pr)] = pc;
    }

    /// Keeps a copy of the loaded rows; refactor() rebuilds from it.
    void snapshot() { initial_.assign(data_.begin(), data_.begin() + static_cast<std::ptrdiff_t>(rows_ * stride_)); }

    // Recomputes B^-1 [A | rhs] for the current basis from the snapshot, which
    // discards the rounding error accumulated over many pivots, then reprices.
    // Returns false (tableau untouched) when the basis matrix looks singular.
    bool refactor() {
        const int m = rows_;
        const std::size_t w = static_cast<std::size_t>(m) + stride_;
        std::vector<double> a(static_cast<std::size_t>(m) * w, 0.0);
        auto el = [&](int i, std::size_t j) -> double& { return a[static_cast<std::size_t>(i) * w + j]; };
        for (int i = 0; i < m; ++i) {
            const double* src = &initial_[static_cast<std::size_t>(origin_[static_cast<std::size_t>(i)]) * stride_];
            for (int j = 0; j < m; ++j) {
                el(i, static_cast<std::size_t>(j)) = src[basis_[static_cast<std::size_t>(j)]];
            }
            for (std::size_t c = 0; c < stride_; ++c) {
                el(i, static_cast<std::size_t>(m) + c) = src[c];
            }
        }
        for (int k = 0; k < m; ++k) {
            int piv = k;
            for (int i = k + 1; i < m; ++i) {
                if (std::abs(el(i, static_cast<std::size_t>(k))) > std::abs(el(piv, static_cast<std::size_t>(k)))) {
                    piv = i;
                }
            }
            if (std::abs(el(piv, static_cast<std::size_t>(k))) < 1e-13) {
                return false;
            }
            if (piv != k) {
                for (std::size_t j = 0; j < w; ++j) {
                    std::swap(el(k, j), el(piv, j));
                }
            }
            const double inv = 1.0 / el(k, static_cast<std::size_t>(k));
            for (std::size_t j = 0; j < w; ++j) {
                el(k, j) *= inv;
            }
            for (int i = 0; i < m; ++i) {
                const double f = el(i, static_cast<std::size_t>(k));
                if (i == k || f == 0.0) {
                    continue;
                }
                for (std::size_t j = 0; j < w; ++j) {
                    el(i, j) -= f * el(k, j);
                }
            }
        }
        // Row k of the reduced system belongs to basis_[k].
        for (int k = 0; k < m; ++k) {
            for (std::size_t c = 0; c < stride_; ++c) {
                at(k, static_cast<int>(c)) = el(k, static_cast<std::size_t>(m) + c);
            }
            at(k, basis_[static_cast<std::size_t>(k)]) = 1.0;
            if (rhs(k) < 0.0 && rhs(k) > -kDriftTolerance) {
                rhs(k) = 0.0;
            }
        }
        price(costs_);
        return true;
    }

    // Sets the cost row to the reduced costs for `costs` given the current basis.
    void price(std::span<const double> costs) {
        costs_.assign(costs.begin(), costs.end());
        for (int c = 0; c <= cols_; ++c) {
            reduced(c) = 0.0;
        }
        for (int c = 0; c < cols_; ++c) {
            reduced(c) = costs[static_cast<std::size_t>(c)];
        }
        for (int r = 0; r < rows_; ++r) {
            const double cb = costs[static_cast<std::size_t>(basis_[static_cast<std::size_t>(r)])];
            if (cb == 0.0) {
                continue;
            }
            for (int c = 0; c <= cols_; ++c) {
                at(rows_, c) -= cb * at(r, c);
            }
        }
    }

    void remove_row(int r) {
        // Shift the rows below (including the cost row) up by one.
        auto first = data_.begin() + static_cast<std::ptrdiff_t>(static_cast<std::size_t>(r) * stride_);
        data_.erase(first, first + static_cast<std::ptrdiff_t>(stride_));
        basis_.erase(basis_.begin() + r);
        origin_.erase(origin_.begin() + r);
        --rows_;
    }

private:
    int rows_;
    int structural_;
    int cols_;
    std::size_t stride_;
    std::vector<double> data_;
    std::vector<int> basis_;
    std::vector<int> origin_;
    std::vector<double> initial_;
    std::vector<double> costs_;
};

enum class PhaseOutcome { optimal, unbounded, iteration_cap };

// Bland's leaving rule: the minimum-ratio row whose basic variable has the
// lowest index.
int leaving_row(const Tableau& t, int enter) {
    const auto& basis = t.basis();
    int leave = -1;
    double best = 0.0;
    for (int r = 0; r < t.rows(); ++r) {
        const double a = t.at(r, enter);
        if (a <= kPivotTolerance) {
            continue;
        }
        const double ratio = std::max(t.rhs(r), 0.0) / a;
        if (leave < 0) {
            best = ratio;
            leave = r;
            continue;
        }
        const double slack = 1e-12 * std::max(1.0, std::abs(best));
        if (ratio < best - slack) {
            best = ratio;
            leave = r;
        } else if (ratio <= best + slack &&
                   basis[static_cast<std::size_t>(r)] < basis[static_cast<std::size_t>(leave)]) {
            leave = r;
        }
    }
    return leave;
}

// Bland's entering rule: the lowest-index column with a negative reduced cost.
// The tableau is rebuilt from the original rows every so many pivots and
// before any verdict, so a stall on rounding noise is not reported as a result.
PhaseOutcome run_simplex(Tableau& t, int allowed_cols, double optimality_tol, int cap, int& iterations) {
    const int refactor_every = std::max(16, t.rows());
    int since_refactor = 0;
    // Bland's rule cannot cycle in exact arithmetic; a basis seen twice means
    // the reduced costs driving the pivots are rounding noise.
    std::set<std::vector<int>> seen;
    for (int it = 0;; ++it) {
        std::vector<int> key = t.basis();
        std::sort(key.begin(), key.end());
        if (!seen.insert(std::move(key)).second) {
            return PhaseOutcome::optimal;
        }
        if (since_refactor >= refactor_every && t.refactor()) {
            since_refactor = 0;
        }
        int enter = -1;
        for (int c = 0; c < allowed_cols; ++c) {
            if (t.reduced(c) < -optimality_tol) {
                enter = c;
                break;
            }
        }
        const int leave = enter < 0 ? -1 : leaving_row(t, enter);
        if (enter < 0 || leave < 0) {
            if (since_refactor > 0 && t.refactor()) {
                since_refactor = 0;
                continue;
            }
            return enter < 0 ? PhaseOutcome::optimal : PhaseOutcome::unbounded;
        }
        if (it >= cap) {
            return PhaseOutcome::iteration_cap;
        }
        t.pivot(leave, enter);
        ++iterations;
        ++since_refactor;
    }
}

bool is_unit_column(const LpProblem& p, int col, int& row) {
    row = -1;
    for (int r = 0; r < p.num_rows; ++r) {
        const double v = p.at(r, col);
        if (v == 0.0) {
            continue;
        }
        if (v != 1.0 || row >= 0) {
            return false;
        }
        row = r;
    }
    return row >= 0;
}

// Relative size of the rhs perturbation used to break degenerate ties.
constexpr double kPerturbation = 1e-7;

// Loads A (with rows sign-normalized so rhs >= 0) into a tableau. With
// `perturb`, every rhs is raised by a small distinct amount: degenerate ratio
// ties are what let tiny pivot elements through, and this removes them.
void load(const LpProblem& p, Tableau& t, const std::vector<double>& sign, bool perturb) {
    double scale = 1.0;
    for (double v : p.rhs) {
        scale = std::max(scale, std::abs(v));
    }
    for (int r = 0; r < p.num_rows; ++r) {
        const double sg = sign[static_cast<std::size_t>(r)];
        for (int c = 0; c < p.num_cols; ++c) {
            t.at(r, c) = sg * p.at(r, c);
        }
        t.rhs(r) = sg * p.rhs[static_cast<std::size_t>(r)];
        if (perturb) {
            // Fractional parts of multiples of the golden ratio: distinct, in (0, 1).
            const double frac = std::fmod(0.6180339887498949 * (r + 1), 1.0);
            t.rhs(r) += kPerturbation * scale * (0.5 + frac);
        }
    }
}

bool try_warm_start(const LpProblem& p, Tableau& t, std::span<const int> warm) {
    if (static_cast<int>(warm.size()) != p.num_rows) {
        return false;
    }
    std::vector<char> assigned(static_cast<std::size_t>(p.num_rows), 0);
    for (int col : warm) {
        if (col < 0 || col >= p.num_cols) {
            return false;
        }
        int pr = -1;
        double best = kPivotTolerance;
        for (int r = 0; r < t.rows(); ++r) {
            if (!assigned[static_cast<std::size_t>(r)] && std::abs(t.at(r, col)) > best) {
                best = std::abs(t.at(r, col));
                pr = r;
            }
        }
        if (pr < 0) {
            return false;
        }
        t.pivot(pr, col);
        assigned[static_cast<std::size_t>(pr)] = 1;
    }
    for (int r = 0; r < t.rows(); ++r) {
        if (t.rhs(r) < -1e-9) {
            return false;
        }
        t.rhs(r) = std::max(0.0, t.rhs(r));
    }
    return true;
}

// Basic solution B^-1 rhs recomputed from the original rows with a fresh
// partial-pivoting solve, free of error accumulated over many pivots. Nullopt
// when the basis still holds an artificial or looks singular.
std::optional<std::vector<double>> basic_values(const LpProblem& p, const std::vector<double>& sign, const Tableau& t) {
    const int m = t.rows();
    const auto& basis = t.basis();
    for (int b : basis) {
        if (b >= p.num_cols) {
            return std::nullopt;
        }
    }
    const std::size_t w = static_cast<std::size_t>(m) + 1;
    std::vector<double> a(static_cast<std::size_t>(m) * w);
    for (int i = 0; i < m; ++i) {
        const int row = t.origin()[static_cast<std::size_t>(i)];
        const double sg = sign[static_cast<std::size_t>(row)];
        for (int j = 0; j < m; ++j) {
            a[static_cast<std::size_t>(i) * w + static_cast<std::size_t>(j)] =
                sg * p.at(row, basis[static_cast<std::size_t>(j)]);
        }
        a[static_cast<std::size_t>(i) * w + static_cast<std::size_t>(m)] = sg * p.rhs[static_cast<std::size_t>(row)];
    }
    auto at = [&](int i, int j) -> double& { return a[static_cast<std::size_t>(i) * w + static_cast<std::size_t>(j)]; };
    for (int k = 0; k < m; ++k) {
        int piv = k;
        for (int i = k + 1; i < m; ++i) {
            if (std::abs(at(i, k)) > std::abs(at(piv, k))) {
                piv = i;
            }
        }
        if (std::abs(at(piv, k)) < 1e-14) {
            return std::nullopt;
        }
        if (piv != k) {
            for (int j = k; j <= m; ++j) {
                std::swap(at(k, j), at(piv, j));
            }
        }
        for (int i = k + 1; i < m; ++i) {
            const double f = at(i, k) / at(k, k);
            if (f == 0.0) {
                continue;
            }
            for (int j = k; j <= m; ++j) {
                at(i, j) -= f * at(k, j);
            }
        }
    }
    std::vector<double> x(static_cast<std::size_t>(m));
    for (int k = m - 1; k >= 0; --k) {
        double v = at(k, m);
        for (int j = k + 1; j < m; ++j) {
            v -= at(k, j) * x[static_cast<std::size_t>(j)];
        }
        x[static_cast<std::size_t>(k)] = v / at(k, k);
        if (!std::isfinite(x[static_cast<std::size_t>(k)])) {
            return std::nullopt;
        }
    }
    return x;
}

// Dual simplex on a dual-feasible tableau: the most negative basic value
// leaves; the entering column keeps reduced costs non-negative (lowest index
// on ties).
PhaseOutcome run_dual_simplex(Tableau& t, int allowed_cols, int cap, int& iterations) {
    for (int it = 0;; ++it) {
        int leave = -1;
        for (int r = 0; r < t.rows(); ++r) {
            if (t.rhs(r) < -kFeasibilityTolerance && (leave < 0 || t.rhs(r) < t.rhs(leave))) {
                leave = r;
            }
        }
        if (leave < 0) {
            return PhaseOutcome::optimal;
        }
        if (it >= cap) {
            return PhaseOutcome::iteration_cap;
        }
        int enter = -1;
        double best = std::numeric_limits<double>::infinity();
        for (int c = 0; c < allowed_cols; ++c) {
            const double a = t.at(leave, c);
            if (a >= -kPivotTolerance) {
                continue;
            }
            const double ratio = std::max(t.reduced(c), 0.0) / -a;
            if (ratio < best) {
                best = ratio;
                enter = c;
            }
        }
        if (enter < 0) {
            return PhaseOutcome::unbounded;
        }
        t.pivot(leave, enter, false);
        ++iterations;
    }
}

// Returns nullopt when the basis found for the perturbed problem is not
// feasible for the original one.
std::optional<LpSolution> solve_with(const LpProblem& p, std::span<const int> warm_basis, bool perturb) {
    const int cap = 10 * (p.num_cols + p.num_rows);
    std::vector<double> sign(static_cast<std::size_t>(p.num_rows), 1.0);
    for (int r = 0; r < p.num_rows; ++r) {
        if (p.rhs[static_cast<std::size_t>(r)] < 0.0) {
            sign[static_cast<std::size_t>(r)] = -1.0;
        }
    }

    double cost_scale = 1.0;
    for (double c : p.objective) {
        cost_scale = std::max(cost_scale, std::abs(c));
    }
    const double optimality_tol = 1e-9 * cost_scale;

    LpSolution sol;
    int artificial = 0;
    std::vector<int> start_basis(static_cast<std::size_t>(p.num_rows), -1);

    bool warm_ok = false;
    if (!warm_basis.empty()) {
        Tableau trial(p.num_rows, p.num_cols, 0);
        load(p, trial, sign, perturb);
        if (try_warm_start(p, trial, warm_basis)) {
            warm_ok = true;
            start_basis = trial.basis();
        }
    }
    if (!warm_ok) {
        for (int c = 0; c < p.num_cols; ++c) {
            int row = -1;
            if (is_unit_column(p, c, row) && sign[static_cast<std::size_t>(row)] > 0.0 &&
                start_basis[static_cast<std::size_t>(row)] < 0) {
                start_basis[static_cast<std::size_t>(row)] = c;
            }
        }
        for (int r = 0; r < p.num_rows; ++r) {
            if (start_basis[static_cast<std::size_t>(r)] < 0) {
                start_basis[static_cast<std::size_t>(r)] = p.num_cols + artificial++;
            }
        }
    }

    Tableau t(p.num_rows, p.num_cols, artificial);
    load(p, t, sign, perturb);
    if (!warm_ok) {
        for (int r = 0; r < p.num_rows; ++r) {
            const int b = start_basis[static_cast<std::size_t>(r)];
            if (b >= p.num_cols) {
                t.at(r, b) = 1.0;
            }
            t.basis()[static_cast<std::size_t>(r)] = b;
        }
    }
    t.snapshot();
    if (warm_ok && !try_warm_start(p, t, start_basis)) {
        throw Error("warm start basis became singular");
    }

    if (artificial > 0) {
        std::vector<double> phase1(static_cast<std::size_t>(t.cols()), 0.0);
        for (int c = p.num_cols; c < t.cols(); ++c) {
            phase1[static_cast<std::size_t>(c)] = 1.0;
        }
        t.price(phase1);
        const auto outcome = run_simplex(t, t.cols(), 1e-11, cap, sol.iterations);
        if (outcome == PhaseOutcome::iteration_cap) {
            throw LpError(LpStatus::max_iterations, "simplex phase one hit the iteration cap");
        }
        double rhs_scale = 1.0;
        for (double v : p.rhs) {
            rhs_scale = std::max(rhs_scale, std::abs(v));
        }
        if (-t.objective() > 1e-9 * rhs_scale) {
            throw LpError(LpStatus::infeasible, "linear program is infeasible");
        }
        // Drive remaining (zero-valued) artificials out of the basis, or drop
        // their rows when they are linearly dependent.
        for (int r = 0; r < t.rows();) {
            if (t.basis()[static_cast<std::size_t>(r)] < p.num_cols) {
                ++r;
                continue;
            }
            int pc = -1;
            for (int c = 0; c < p.num_cols; ++c) {
                if (std::abs(t.at(r, c)) > kPivotTolerance) {
                    pc = c;
                    break;
                }
            }
            if (pc >= 0) {
                t.pivot(r, pc);
                ++r;
            } else {
                t.remove_row(r);
            }
        }
    }

    std::vector<double> costs(static_cast<std::size_t>(t.cols()), 0.0);
    std::copy(p.objective.begin(), p.objective.end(), costs.begin());
    t.price(costs);
    const auto outcome = run_simplex(t, p.num_cols, optimality_tol, cap, sol.iterations);
    if (outcome == PhaseOutcome::unbounded) {
        throw LpError(LpStatus::unbounded, "linear program is unbounded");
    }
    if (outcome == PhaseOutcome::iteration_cap) {
        throw LpError(LpStatus::max_iterations, "simplex phase two hit the iteration cap");
    }
    // Drop the perturbation: recompute the basic values for the true rhs. The
    // basis stays dual feasible, so a few dual pivots repair any value the
    // perturbation pushed below zero.
    if (auto x = basic_values(p, sign, t)) {
        for (int r = 0; r < t.rows(); ++r) {
            t.rhs(r) = (*x)[static_cast<std::size_t>(r)];
        }
        const auto repair = run_dual_simplex(t, p.num_cols, cap, sol.iterations);
        if (repair != PhaseOutcome::optimal) {
            if (perturb) {
                return std::nullopt;
            }
        } else if (auto clean = basic_values(p, sign, t)) {
            for (int r = 0; r < t.rows(); ++r) {
                t.rhs(r) = (*clean)[static_cast<std::size_t>(r)];
            }
        }
    } else if (perturb) {
        return std::nullopt;
    }
    for (int r = 0; r < t.rows(); ++r) {
        if (t.rhs(r) < -kDriftTolerance && perturb) {
            return std::nullopt;
        }
    }

    sol.x.assign(static_cast<std::size_t>(p.num_cols), 0.0);
    sol.basis.resize(static_cast<std::size_t>(t.rows()));
    for (int r = 0; r < t.rows(); ++r) {
        const int b = t.basis()[static_cast<std::size_t>(r)];
        sol.basis[static_cast<std::size_t>(r)] = b;
        if (b < p.num_cols) {
            sol.x[static_cast<std::size_t>(b)] = std::max(0.0, t.rhs(r));
        }
    }
    double value = 0.0;
    for (int c = 0; c < p.num_cols; ++c) {
        value += p.objective[static_cast<std::size_t>(c)] * sol.x[static_cast<std::size_t>(c)];
    }
    sol.value = value;
    return sol;
}

} // namespace

LpSolution solve_lp(const LpProblem& p, std::span<const int> warm_basis) {
    if (p.num_rows < 0 || p.num_cols < 0 || p.objective.size() != static_cast<std::size_t>(p.num_cols) ||
        p.rhs.size() != static_cast<std::size_t>(p.num_rows) ||
        p.constraints.size() != static_cast<std::size_t>(p.num_rows) * static_cast<std::size_t>(p.num_cols)) {
        throw Error("LpProblem dimensions are inconsistent");
    }
    for (double v : p.constraints) {
        if (!std::isfinite(v)) {
            throw Error("LpProblem has non-finite entries");
        }
    }
    try {
        if (auto sol = solve_with(p, warm_basis, true)) {
            return *sol;
        }
    } catch (const LpError&) {
        // Perturbing redundant rows can make them inconsistent; fall through.
    }
    return *solve_with(p, warm_basis, false);
}

namespace {

bool support_within(const Belief& inner, const Belief& outer) {
    auto o = outer.entries().begin();
    const auto oend = outer.entries().end();
    for (const auto& e : inner.entries()) {
        while (o != oend && o->state < e.state) {
            ++o;
        }
        if (o == oend || o->state != e.state) {
            return false;
        }
    }
    return true;
}

} // namespace

double hull_projection(std::span<const HullPoint> points, const Belief& query) {
    return hull_projection(points, query, points.size());
}

double hull_projection(std::span<const HullPoint> points, const Belief& query, std::size_t skip) {
    const auto rows = query.entries();
    std::vector<const HullPoint*> candidates;
    candidates.reserve(points.size());
    for (std::size_t i = 0; i < points.size(); ++i) {
        if (i == skip) {
            continue;
        }
        const auto& pt = points[i];
        if (pt.belief.is_point_mass()) {
            if (query.contains(pt.belief.entries()[0].state)) {
                candidates.push_back(&pt);
            }
        } else if (pt.belief.support_size() <= query.support_size() && support_within(pt.belief, query)) {
            candidates.push_back(&pt);
        }
    }

    LpProblem lp(static_cast<int>(rows.size()), static_cast<int>(candidates.size()));
    for (std::size_t r = 0; r < rows.size(); ++r) {
        lp.rhs[r] = rows[r].mass;
    }
    for (std::size_t c = 0; c < candidates.size(); ++c) {
        const auto* pt = candidates[c];
        lp.objective[c] = pt->value;
        std::size_t r = 0;
        for (const auto& e : pt->belief.entries()) {
            while (rows[r].state != e.state) {
                ++r;
            }
            lp.at(static_cast<int>(r), static_cast<int>(c)) = e.mass;
        }
    }
    return solve_lp(lp).value;
}

} // namespace hsvi
