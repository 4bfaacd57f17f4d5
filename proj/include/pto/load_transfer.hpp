// Conversion of the nodal pressure field into consistent mechanical loads.
//
// The pressure acts on the structure as the body force b = -grad(p).  Testing
// that force with the displacement shape functions gives per-element loads
// F_e = -(integral of N_u^T B_p dV) p_e = -H_e p_e, and assembling the H_e
// blocks once per mesh yields the design-independent conversion matrix H with
// F = -H p.  Because the element integrals annihilate constant pressure
// vectors exactly, the summed nodal forces always equal the net boundary
// pressure force (load conservation), independent of the current design.
#pragma once

#include <Eigen/Sparse>
#include <array>

#include "pto/mesh.hpp"

namespace pto {

using SparseMat = Eigen::SparseMatrix<double>;

struct ConversionMatrix {
    SparseMat Hmat; // (2*n_nodes) x n_nodes, assembled once per mesh
};

// Exact element conversion block: 8x4, displacement DOFs (x,y interleaved)
// by pressure nodes, for a rectangle of width a, height b, thickness t.
// Rows for x-DOFs scale with b*t/12, rows for y-DOFs with a*t/12; every row
// sums to zero exactly, so constant pressure produces no force.
Eigen::Matrix<double, 8, 4> conversion_block(double a, double b, double t);

ConversionMatrix assemble_conversion(const Mesh& mesh);

// F = -H p.  Throws std::invalid_argument on dimension mismatch.
Eigen::VectorXd nodal_forces(const ConversionMatrix& conv, const Eigen::VectorXd& p);

// Sum of nodal forces per axis: the resultant (Fx, Fy) in N.
std::array<double, 2> resultant(const Eigen::VectorXd& F);

} // namespace pto
