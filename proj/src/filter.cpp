#include "pto/filter.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace pto {

DensityFilter::DensityFilter(const Mesh& mesh, double r_min) : r_min_(r_min) {
    if (!(r_min > 0))
        throw std::invalid_argument("DensityFilter: radius must be positive");

    passive_.assign(static_cast<size_t>(mesh.n_elems()), 0);
    for (int e : mesh.passive_elems)
        passive_[static_cast<size_t>(e)] = 1;

    // Candidate window in grid indices; distances are between centroids of a
    // uniform grid so a rectangular window bounds the cone support exactly.
    const int wx = static_cast<int>(std::ceil(r_min / mesh.dx));
    const int wy = static_cast<int>(std::ceil(r_min / mesh.dy));

    std::vector<Eigen::Triplet<double>> trips;
    trips.reserve(static_cast<size_t>(mesh.n_elems()) *
                  static_cast<size_t>((2 * wx + 1) * (2 * wy + 1)));
    for (int j = 0; j < mesh.ny; ++j) {
        for (int i = 0; i < mesh.nx; ++i) {
            const int e = mesh.elem_id(i, j);
            double wsum = 0;
            const size_t first = trips.size();
            for (int jj = std::max(0, j - wy); jj <= std::min(mesh.ny - 1, j + wy); ++jj) {
                for (int ii = std::max(0, i - wx); ii <= std::min(mesh.nx - 1, i + wx); ++ii) {
                    const double dxc = (ii - i) * mesh.dx;
                    const double dyc = (jj - j) * mesh.dy;
                    const double w = r_min - std::sqrt(dxc * dxc + dyc * dyc);
                    if (w > 0) {
                        trips.emplace_back(e, mesh.elem_id(ii, jj), w);
                        wsum += w;
                    }
                }
            }
            for (size_t k = first; k < trips.size(); ++k)
                trips[k] = {trips[k].row(), trips[k].col(), trips[k].value() / wsum};
        }
    }
    W_.resize(mesh.n_elems(), mesh.n_elems());
    W_.setFromTriplets(trips.begin(), trips.end());
}

std::vector<double> DensityFilter::apply(const std::vector<double>& x) const {
    if (x.size() != passive_.size())
        throw std::invalid_argument("DensityFilter::apply: design vector size mismatch");
    const Eigen::Map<const Eigen::VectorXd> xv(x.data(), static_cast<Eigen::Index>(x.size()));
    Eigen::VectorXd rho = W_ * xv;
    std::vector<double> out(x.size());
    // Passive rows are constant (frozen void), so the Jacobian of apply() has
    // zero rows there — which is exactly what chain_rule() implements.  Each
    // row of W is a convex combination, so the exact result lies in [0,1];
    // the clamp only removes last-bit rounding excess at the endpoints.
    for (size_t e = 0; e < x.size(); ++e)
        out[e] = passive_[e] ? 0.0 : std::clamp(rho[static_cast<Eigen::Index>(e)], 0.0, 1.0);
    return out;
}

std::vector<double> DensityFilter::chain_rule(const std::vector<double>& dF_drho) const {
    if (dF_drho.size() != passive_.size())
        throw std::invalid_argument("DensityFilter::chain_rule: gradient size mismatch");
    Eigen::VectorXd g(static_cast<Eigen::Index>(dF_drho.size()));
    for (size_t e = 0; e < dF_drho.size(); ++e)
        g[static_cast<Eigen::Index>(e)] = passive_[e] ? 0.0 : dF_drho[e];
    const Eigen::VectorXd out = W_.transpose() * g;
    std::vector<double> res(dF_drho.size());
    for (size_t e = 0; e < dF_drho.size(); ++e)
        res[e] = out[static_cast<Eigen::Index>(e)];
    return res;
}

} // namespace pto
