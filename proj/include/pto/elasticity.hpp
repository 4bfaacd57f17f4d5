// Plane-stress elasticity with modified-SIMP material interpolation.
//
// E(rho) = E_min + rho^zeta (E0 - E_min) keeps void elements barely stiff so
// the global matrix stays regular while penalizing intermediate densities.
// Output ports of mechanism problems carry a grounded spring (the workpiece
// stiffness) added to the corresponding diagonal entry.
#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>
#include <cstdint>
#include <memory>
#include <vector>

#include "pto/mesh.hpp"

namespace pto {

using SparseMat = Eigen::SparseMatrix<double>;

struct MaterialModel {
    double E0;     // solid Young's modulus (Pa)
    double E_min;  // void Young's modulus (Pa)
    double zeta;   // penalization exponent
    double nu;     // Poisson ratio

    // Validates E0 > E_min > 0, zeta >= 1, 0 <= nu < 0.5.
    MaterialModel(double E0, double E_min, double zeta, double nu);

    // E(rho) and dE/drho; endpoints exact.  Throws outside [0,1].
    void young_modulus(double rho, double& E, double& dE) const;
};

// Element stiffness for a rectangle of width a, height b, thickness t at
// Young's modulus E and Poisson ratio nu (plane stress), DOFs interleaved
// (u1x,u1y,...,u4y) with counter-clockwise nodes.  Exactly symmetric.
// Throws std::invalid_argument for non-positive geometry.
Eigen::Matrix<double, 8, 8> element_stiffness(double E, double nu,
                                              double a, double b, double t);

struct Spring {
    int dof;   // global displacement DOF
    double k;  // stiffness (N/m)
};

// K = sum_e E(rho_e) k0 + springs on diagonal entries.  Springs on
// constrained DOFs are rejected (they would silently vanish in the reduced
// system).
SparseMat assemble_stiffness(const Mesh& mesh, const std::vector<double>& rho,
                             const MaterialModel& mat, const std::vector<Spring>& springs,
                             const std::vector<int>& constrained_dofs);

// State and dummy-load solutions plus the ingredients the adjoint solves
// reuse.  For compliance problems v stays empty.
struct ElasticState {
    Eigen::VectorXd u;             // displacement under F = -Hp
    Eigen::VectorXd v;             // displacement under the unit dummy load (mechanisms)
    std::vector<int> free_index;   // DOF -> reduced index, -1 if constrained
    std::vector<int> free_dofs;    // reduced index -> DOF
    std::shared_ptr<Eigen::SimplicialLDLT<SparseMat>> factorization; // of K_ff
    std::uint64_t design_hash = 0;
};

// Reduced solve K_ff u_f = F_f with homogeneous supports.  Throws
// SingularSystemError if the factorization fails (missing supports).
// `reuse_pattern` carries the symbolic analysis across iterations.
ElasticState solve_displacement(const SparseMat& K, const Mesh& mesh,
                                const std::vector<int>& constrained_dofs,
                                const Eigen::VectorXd& F,
                                const Eigen::VectorXd* dummy_load = nullptr,
                                std::uint64_t design_hash = 0,
                                std::shared_ptr<Eigen::SimplicialLDLT<SparseMat>> reuse_pattern = nullptr);

enum class ObjectiveKind { compliance, compliant_mechanism };

// Objective value from solved states.
//   compliance:           scale *  u^T K u            (= 2x strain energy)
//   compliant_mechanism:  scale * -(v^T K u)/(u^T K u) (= -MSE / 2SE)
// The mechanism ratio throws DegenerateObjectiveError when its denominator
// u^T K u <= 0 (no load path); compliance of a zero field is simply zero.
double objective_value(ObjectiveKind kind, const SparseMat& K,
                       const Eigen::VectorXd& u, const Eigen::VectorXd& v,
                       double scale);

} // namespace pto
