// Density-dependent Darcy flow with a volumetric drainage sink.
//
// The flow coefficient K(rho) steps smoothly from the void value k_v down to
// the solid value k_s; the drainage coefficient H(rho) steps from 0 up to
// h_s = (ln r / delta_s)^2 * k_s, which makes the pressure inside solid
// material decay to the fraction r of its surface value over the penetration
// depth delta_s.  Solving  div(K grad p) - H (p - p_out) = 0  with Dirichlet
// values on the pressure boundaries yields the design-dependent pressure
// field that the load-transfer module turns into nodal forces.
#pragma once

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>
#include <cstdint>
#include <memory>
#include <vector>

#include "pto/mesh.hpp"

namespace pto {

using SparseMat = Eigen::SparseMatrix<double>;

struct DarcyModel {
    double k_v, k_s;       // flow coefficients, void and solid (m^4/(N s))
    double eta_k, beta_k;  // step location / slope for K(rho)
    double eta_h, beta_h;  // step location / slope for H(rho)
    double r;              // remaining pressure fraction at depth (0 < r < 1)
    double delta_s;        // penetration depth (m)
    double h_s;            // derived: (ln r / delta_s)^2 * k_s  (m^2/(N s))
    double p_out = 0;      // external pressure the drainage sink relaxes to (Pa)

    // Validates parameter ranges and derives h_s.
    DarcyModel(double k_v, double k_s, double eta_k, double beta_k,
               double eta_h, double beta_h, double r, double delta_s,
               double p_out = 0.0);

    // K(rho) and dK/drho.  K(0) = k_v and K(1) = k_s exactly; K is
    // non-increasing.  Throws std::invalid_argument outside [0,1].
    void flow_coefficient(double rho, double& K, double& dK) const;

    // H(rho) and dH/drho.  H(0) = 0 and H(1) = h_s exactly; H is
    // non-decreasing.  Throws std::invalid_argument outside [0,1].
    void drainage_coefficient(double rho, double& H, double& dH) const;
};

// Element matrices for a rectangle of width a, height b, thickness t.
// flow_laplacian_matrix  = integral of grad(N)^T grad(N) dV (multiplied by K)
// flow_mass_matrix       = integral of N^T N dV             (multiplied by H)
// Exact closed forms; node order counter-clockwise as in Mesh.
Eigen::Matrix4d flow_laplacian_matrix(double a, double b, double t);
Eigen::Matrix4d flow_mass_matrix(double a, double b, double t);

// Assembles the symmetric global flow matrix A = sum_e (K_e L + H_e M).
// rho holds one filtered density per element.
SparseMat assemble_flow(const Mesh& mesh, const std::vector<double>& rho,
                        const DarcyModel& model);

// Right-hand side contributed by the drainage sink relaxing to p_out:
// f = sum_e H_e M 1 p_out.  Identically zero for p_out = 0, which is what
// every bundled problem uses; kept general for completeness.
Eigen::VectorXd assemble_drainage_rhs(const Mesh& mesh, const std::vector<double>& rho,
                                      const DarcyModel& model);

// Pressure solution plus everything sensitivity analysis reuses: the
// free/prescribed node partition and the factorization of A_ff.
struct PressureState {
    Eigen::VectorXd p;             // full nodal vector, prescribed entries exact
    std::vector<int> free_index;   // node -> reduced index, -1 if prescribed
    std::vector<int> free_nodes;   // reduced index -> node
    std::shared_ptr<Eigen::SimplicialLDLT<SparseMat>> factorization; // of A_ff
    std::uint64_t design_hash = 0; // hash of the density field A was built from

    // Largest violation of min(p_prescribed) <= p_free <= max(p_prescribed),
    // in Pa; filled by solve_pressure for diagnostics.
    double max_principle_violation = 0;
};

// Reduced Dirichlet solve  A_ff p_f = f_f - A_fp p_p (f defaults to zero,
// which covers p_out = 0).  Throws SingularSystemError when no pressure
// Dirichlet node exists or the factorization fails.  `reuse_pattern` may
// carry the solver from a previous call on the same mesh and boundary spec so
// the symbolic analysis is done once.
PressureState solve_pressure(const SparseMat& A, const Mesh& mesh, const BoundarySpec& bc,
                             std::uint64_t design_hash = 0,
                             std::shared_ptr<Eigen::SimplicialLDLT<SparseMat>> reuse_pattern = nullptr,
                             const Eigen::VectorXd* rhs = nullptr);

// FNV-1a hash of a density field; used for stale-state detection.
std::uint64_t hash_field(const std::vector<double>& rho);

} // namespace pto
