#include "qlab/simplex.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace qlab {

void SimplexSolver::add_equality(std::vector<double> row, double rhs) {
    if (static_cast<int>(row.size()) != n_) throw std::invalid_argument("simplex: row size");
    eq_rows_.push_back(std::move(row));
    eq_rhs_.push_back(rhs);
}

void SimplexSolver::add_less_equal(std::vector<double> row, double rhs) {
    if (static_cast<int>(row.size()) != n_) throw std::invalid_argument("simplex: row size");
    le_rows_.push_back(std::move(row));
    le_rhs_.push_back(rhs);
}

void SimplexSolver::set_objective(std::vector<double> c) {
    if (static_cast<int>(c.size()) != n_) throw std::invalid_argument("simplex: objective size");
    c_ = std::move(c);
}

namespace {

struct Tableau {
    // columns: structural vars, slacks, artificials, rhs
    int rows, cols;                 // constraint rows, total variable columns
    std::vector<std::vector<double>> a;  // rows x (cols+1)
    std::vector<int> basis;              // basic variable per row

    double& rhs(int r) { return a[r][cols]; }

    void pivot(int pr, int pc) {
        const double pv = a[pr][pc];
        for (double& v : a[pr]) v /= pv;
        for (int r = 0; r < rows; ++r) {
            if (r == pr) continue;
            const double f = a[r][pc];
            if (f == 0.0) continue;
            for (int c = 0; c <= cols; ++c) a[r][c] -= f * a[pr][c];
        }
        basis[pr] = pc;
    }
};

// Minimize obj over the tableau with Bland's rule; obj indexed over columns.
// Returns {optimal objective, bounded}; on exit basis holds the solution.
std::pair<double, bool> run_simplex(Tableau& t, std::vector<double> obj,
                                    const std::vector<bool>& allowed) {
    const double tol = SimplexSolver::kReducedCostTol;
    // reduced costs z_j = c_j - c_B . B^{-1} A_j maintained via an explicit row
    std::vector<double> z(t.cols + 1, 0.0);
    for (int c = 0; c <= t.cols; ++c) z[c] = (c < t.cols ? obj[c] : 0.0);
    for (int r = 0; r < t.rows; ++r) {
        const double cb = obj[t.basis[r]];
        if (cb == 0.0) continue;
        for (int c = 0; c <= t.cols; ++c) z[c] -= cb * t.a[r][c];
    }
    for (;;) {
        int pc = -1;  // Bland: smallest index with negative reduced cost
        for (int c = 0; c < t.cols; ++c)
            if (allowed[c] && z[c] < -tol) {
                pc = c;
                break;
            }
        if (pc < 0) return {-z[t.cols], true};  // optimal; z[cols] = -objective
        int pr = -1;
        double best = std::numeric_limits<double>::infinity();
        for (int r = 0; r < t.rows; ++r) {
            if (t.a[r][pc] > tol) {
                const double ratio = t.rhs(r) / t.a[r][pc];
                if (ratio < best - tol || (ratio < best + tol && (pr < 0 || t.basis[r] < t.basis[pr]))) {
                    best = ratio;
                    pr = r;
                }
            }
        }
        if (pr < 0) return {0.0, false};  // unbounded
        t.pivot(pr, pc);
        // refresh the reduced-cost row for the pivot
        const double f = z[pc];
        if (f != 0.0)
            for (int c = 0; c <= t.cols; ++c) z[c] -= f * t.a[pr][c];
    }
}

}  // namespace

SimplexSolver::Result SimplexSolver::solve() const {
    const int m_eq = static_cast<int>(eq_rows_.size());
    const int m_le = static_cast<int>(le_rows_.size());
    const int rows = m_eq + m_le;
    // columns: n_ structural + m_le slacks + rows artificials
    const int n_slack = m_le;
    const int n_art = rows;
    const int cols = n_ + n_slack + n_art;

    Tableau t;
    t.rows = rows;
    t.cols = cols;
    t.a.assign(rows, std::vector<double>(cols + 1, 0.0));
    t.basis.assign(rows, -1);

    for (int r = 0; r < m_eq; ++r) {
        for (int c = 0; c < n_; ++c) t.a[r][c] = eq_rows_[r][c];
        t.rhs(r) = eq_rhs_[r];
    }
    for (int r = 0; r < m_le; ++r) {
        const int rr = m_eq + r;
        for (int c = 0; c < n_; ++c) t.a[rr][c] = le_rows_[r][c];
        t.a[rr][n_ + r] = 1.0;
        t.rhs(rr) = le_rhs_[r];
    }
    // make all rhs nonnegative, then add artificial basis
    for (int r = 0; r < rows; ++r) {
        if (t.rhs(r) < 0.0)
            for (int c = 0; c <= cols; ++c) t.a[r][c] = -t.a[r][c];
        t.a[r][n_ + n_slack + r] = 1.0;
        t.basis[r] = n_ + n_slack + r;
    }

    std::vector<bool> allowed(cols, true);
    std::vector<double> phase1(cols, 0.0);
    for (int c = n_ + n_slack; c < cols; ++c) phase1[c] = 1.0;
    auto [art_sum, bounded1] = run_simplex(t, phase1, allowed);
    Result res;
    if (!bounded1 || art_sum > 1e-7) {
        res.feasible = false;
        return res;
    }
    // drive any artificial still in the basis out (or drop a redundant row)
    for (int r = 0; r < rows; ++r) {
        if (t.basis[r] >= n_ + n_slack) {
            int pc = -1;
            for (int c = 0; c < n_ + n_slack; ++c)
                if (std::abs(t.a[r][c]) > 1e-9) {
                    pc = c;
                    break;
                }
            if (pc >= 0) t.pivot(r, pc);
        }
    }
    for (int c = n_ + n_slack; c < cols; ++c) allowed[c] = false;

    std::vector<double> phase2(cols, 0.0);
    for (int c = 0; c < n_; ++c) phase2[c] = c_.empty() ? 0.0 : c_[c];
    auto [obj, bounded2] = run_simplex(t, phase2, allowed);

    res.feasible = true;
    res.bounded = bounded2;
    res.objective = obj;
    res.x.assign(n_, 0.0);
    for (int r = 0; r < rows; ++r)
        if (t.basis[r] < n_) res.x[t.basis[r]] = t.rhs(r);
    return res;
}

}  // namespace qlab
