// Method of Moving Asymptotes for bound-constrained densities with a small
// number of nonlinear constraints (the driver uses exactly one: volume).
//
// Classic 1987 scheme: each variable gets moving asymptotes (initialized at
// 0.5x the bound range, expanded by 1.2 / contracted by 0.7 depending on
// oscillation), the objective and constraints are replaced by separable
// convex fractions, and the subproblem is solved by a primal-dual interior
// point Newton method driven toward KKT tolerance 1e-9.  Newton work per
// barrier level is capped; when strongly scaled gradients put the absolute
// tolerance below the double-precision floor, the interior iterate is
// accepted as-is.  A hard move limit caps |x_new - x| per iteration on top
// of the asymptote bounds.
#pragma once

#include <vector>

namespace pto {

class MmaOptimizer {
public:
    // n design variables in [0,1], one constraint g(x) <= 0.
    MmaOptimizer(int n, double move_limit = 0.1);

    // One MMA update.  df0 is the objective gradient, g the constraint value
    // (feasible when <= 0), dg its gradient.  Returns the new iterate;
    // internal state (asymptotes, previous iterates) advances.
    // Throws std::invalid_argument on non-finite gradients,
    // IterationLimitError if the subproblem residual becomes non-finite.
    std::vector<double> update(const std::vector<double>& x,
                               const std::vector<double>& df0,
                               double g, const std::vector<double>& dg);

    double move_limit() const { return move_; }
    int iteration() const { return iter_; }

    // Asymptotes after the last update (diagnostics; empty before first use).
    const std::vector<double>& lower_asymptotes() const { return low_; }
    const std::vector<double>& upper_asymptotes() const { return upp_; }

private:
    int n_;
    double move_;
    int iter_ = 0;
    std::vector<double> low_, upp_;     // asymptotes
    std::vector<double> xold1_, xold2_; // previous two iterates
};

} // namespace pto
