// Linear density filter with cone weights and its exact chain rule.
//
// Filtered densities rho = W x with w_ij proportional to
// max(0, r_min - dist(centroid_i, centroid_j)), rows normalized over the
// neighbors that exist (boundary rows renormalize).  Passive elements take
// part in the weighted average with their frozen value and are reset to that
// value after filtering; the chain rule is the exact adjoint of that
// composite map (zero the passive rows, then multiply by W^T).
#pragma once

#include <Eigen/Sparse>
#include <vector>

#include "pto/mesh.hpp"

namespace pto {

using SparseMat = Eigen::SparseMatrix<double>;

class DensityFilter {
public:
    // Builds the weight matrix for the given radius (meters).
    // Throws std::invalid_argument for r_min <= 0.
    DensityFilter(const Mesh& mesh, double r_min);

    // rho = reset_passive(W x); preserves [0,1] (convex combinations).
    std::vector<double> apply(const std::vector<double>& x) const;

    // dF/dx = W^T (dF/drho with passive entries zeroed): the exact adjoint
    // of apply().
    std::vector<double> chain_rule(const std::vector<double>& dF_drho) const;

    double radius() const { return r_min_; }
    const SparseMat& weights() const { return W_; }

private:
    double r_min_;
    SparseMat W_;                 // row-stochastic, n_elems x n_elems
    std::vector<char> passive_;   // 1 if frozen
};

} // namespace pto
