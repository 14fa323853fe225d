#pragma once

#include <vector>

namespace qlab {

/// Dense two-phase primal simplex for small linear programs.
///
///   minimize c.x   subject to  A_eq x = b_eq,  A_le x <= b_le,  x >= 0
///
/// Bland's rule throughout (anti-cycling); reduced-cost tolerance 1e-9.
/// Intended for tiny problems (a few hundred variables), tableau form.
class SimplexSolver {
public:
    struct Result {
        bool feasible = false;
        bool bounded = true;
        double objective = 0.0;
        std::vector<double> x;
    };

    SimplexSolver(int num_vars) : n_(num_vars) {}

    void add_equality(std::vector<double> row, double rhs);
    void add_less_equal(std::vector<double> row, double rhs);
    void set_objective(std::vector<double> c);

    Result solve() const;

    static constexpr double kReducedCostTol = 1e-9;

private:
    int n_;
    std::vector<std::vector<double>> eq_rows_;
    std::vector<double> eq_rhs_;
    std::vector<std::vector<double>> le_rows_;
    std::vector<double> le_rhs_;
    std::vector<double> c_;
};

}  // namespace qlab
