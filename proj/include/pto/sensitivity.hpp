// Adjoint gradients of both objectives with respect to filtered densities.
//
// Three multipliers appear: lambda1 (and lambda3 for mechanisms) live in
// displacement space and come out in closed form because the objectives are
// built from the same solves; lambda2 lives in pressure space and accounts
// for the design-dependence of the load.  It costs one extra backsolve with
// the already-factorized flow matrix:  A_ff lambda2_f = -H_uf^T lambda1_u.
// Prescribed DOFs of every multiplier are zero by construction.
//
// All gradients returned here are with respect to the *filtered* densities;
// the driver maps them to design variables through the filter chain rule.
#pragma once

#include <functional>
#include <vector>

#include "pto/darcy.hpp"
#include "pto/elasticity.hpp"
#include "pto/load_transfer.hpp"
#include "pto/mesh.hpp"

namespace pto {

struct AdjointSet {
    Eigen::VectorXd lambda1; // displacement space
    Eigen::VectorXd lambda2; // pressure space
    Eigen::VectorXd lambda3; // displacement space (mechanisms only)
};

struct GradientReport {
    std::vector<double> total;        // elastic_part + load_part, exactly
    std::vector<double> elastic_part; // stiffness-interpolation terms
    std::vector<double> load_part;    // pressure-load terms via lambda2
};

// Gradient of scale * u^T K u.  `with_load_sens` toggles the lambda2 term
// (the ablation switch).  Both states must have been computed for `rho`
// (hash-checked; ConsistencyError otherwise).  `adjoints_out`, when non-null,
// receives the multipliers for diagnostics.
GradientReport compliance_gradient(const Mesh& mesh, const std::vector<double>& rho,
                                   const DarcyModel& darcy, const MaterialModel& mat,
                                   const ConversionMatrix& conv,
                                   const PressureState& pressure, const ElasticState& elastic,
                                   const SparseMat& K, double scale, bool with_load_sens,
                                   AdjointSet* adjoints_out = nullptr);

// Gradient of scale * -(v^T K u)/(u^T K u).  Same contract as above; throws
// DegenerateObjectiveError when u^T K u <= 0.
GradientReport cm_gradient(const Mesh& mesh, const std::vector<double>& rho,
                           const DarcyModel& darcy, const MaterialModel& mat,
                           const ConversionMatrix& conv,
                           const PressureState& pressure, const ElasticState& elastic,
                           const SparseMat& K, double scale, bool with_load_sens,
                           AdjointSet* adjoints_out = nullptr);

// Volume-constraint value g = V(rho)/(V* V_total) - 1 and its gradient
// (constant per element, zero rows handled downstream by the filter chain).
double volume_constraint(const Mesh& mesh, const std::vector<double>& rho, double v_star);
std::vector<double> volume_gradient(const Mesh& mesh, double v_star);

// Central finite differences of an arbitrary scalar objective with respect
// to the listed design variables; the objective callback re-runs the full
// analysis per perturbation, so this validates the complete chain.
struct FdResult {
    std::vector<double> grad;      // one entry per requested id
    bool underflow_warning = false; // set when an objective delta vanished
};
FdResult fd_oracle(const std::function<double(const std::vector<double>&)>& objective,
                   const std::vector<double>& x, const std::vector<int>& ids, double step);

} // namespace pto
