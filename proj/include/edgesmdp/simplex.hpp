#pragma once

#include <vector>

namespace edgesmdp {

// maximize c'x  s.t.  A_eq x = b_eq,  A_le x <= b_le,  x >= 0.
struct LinearProgram {
    std::vector<double> c;
    std::vector<std::vector<double>> A_eq;
    std::vector<double> b_eq;
    std::vector<std::vector<double>> A_le;
    std::vector<double> b_le;
};

struct LpResult {
    std::vector<double> x;
    double objective = 0;
    std::vector<double> duals_eq;
    std::vector<double> duals_le;  // >= 0 at optimum
    int pivots = 0;
};

// Dense two-phase tableau simplex (Dantzig pricing, Bland's rule once a run of
// degenerate pivots is detected). The final basis is re-solved with a pivoted
// LU so x and the duals are accurate to working precision.
//
// Throws SolverFailure on infeasibility, unboundedness or iteration limit.
LpResult solve_lp(const LinearProgram& lp);

}  // namespace edgesmdp
