#include "pto/load_transfer.hpp"

#include <stdexcept>

namespace pto {

Eigen::Matrix<double, 8, 4> conversion_block(double a, double b, double t) {
    // Closed form of integral(N_u^T B_p) over an a-by-b rectangle.  The
    // integer stencils have zero row sums, so constant pressure vectors are
    // annihilated exactly in floating point — the backbone of discrete load
    // conservation.
    static const double MX[4][4] = {
        {-2, 2, 1, -1}, {-2, 2, 1, -1}, {-1, 1, 2, -2}, {-1, 1, 2, -2}};
    static const double MY[4][4] = {
        {-2, -1, 1, 2}, {-1, -2, 2, 1}, {-1, -2, 2, 1}, {-2, -1, 1, 2}};
    const double cx = b * t / 12.0;
    const double cy = a * t / 12.0;
    Eigen::Matrix<double, 8, 4> He;
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) {
            He(2 * i, j) = cx * MX[i][j];
            He(2 * i + 1, j) = cy * MY[i][j];
        }
    return He;
}

ConversionMatrix assemble_conversion(const Mesh& mesh) {
    const Eigen::Matrix<double, 8, 4> He =
        conversion_block(mesh.dx, mesh.dy, mesh.thickness);
    std::vector<Eigen::Triplet<double>> trips;
    trips.reserve(static_cast<size_t>(mesh.n_elems()) * 32);
    for (int e = 0; e < mesh.n_elems(); ++e) {
        const auto& conn = mesh.elem_conn[static_cast<size_t>(e)];
        for (int i = 0; i < 4; ++i)
            for (int j = 0; j < 4; ++j) {
                trips.emplace_back(2 * conn[static_cast<size_t>(i)], conn[static_cast<size_t>(j)],
                                   He(2 * i, j));
                trips.emplace_back(2 * conn[static_cast<size_t>(i)] + 1,
                                   conn[static_cast<size_t>(j)], He(2 * i + 1, j));
            }
    }
    ConversionMatrix conv;
    conv.Hmat.resize(mesh.n_disp_dofs(), mesh.n_nodes());
    conv.Hmat.setFromTriplets(trips.begin(), trips.end());
    return conv;
}

Eigen::VectorXd nodal_forces(const ConversionMatrix& conv, const Eigen::VectorXd& p) {
    if (conv.Hmat.cols() != p.size())
        throw std::invalid_argument("nodal_forces: pressure vector size mismatch");
    return -(conv.Hmat * p);
}

std::array<double, 2> resultant(const Eigen::VectorXd& F) {
    double fx = 0, fy = 0;
    for (Eigen::Index i = 0; i + 1 < F.size(); i += 2) {
        fx += F[i];
        fy += F[i + 1];
    }
    return {fx, fy};
}

} // namespace pto
