#include "pto/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>
#include <string>

namespace pto {

bool Mesh::is_passive(int e) const {
    return std::binary_search(passive_elems.begin(), passive_elems.end(), e);
}

Mesh build_grid(int nx, int ny, double Lx, double Ly, double thickness) {
    if (nx < 1 || ny < 1)
        throw std::invalid_argument("build_grid: element counts must be >= 1, got " +
                                    std::to_string(nx) + "x" + std::to_string(ny));
    if (!(Lx > 0) || !(Ly > 0) || !(thickness > 0))
        throw std::invalid_argument("build_grid: domain dimensions and thickness must be positive");

    Mesh m;
    m.nx = nx;
    m.ny = ny;
    m.Lx = Lx;
    m.Ly = Ly;
    m.thickness = thickness;
    m.dx = Lx / nx;
    m.dy = Ly / ny;

    m.node_coords.resize(static_cast<size_t>(m.n_nodes()));
    for (int j = 0; j <= ny; ++j)
        for (int i = 0; i <= nx; ++i)
            m.node_coords[static_cast<size_t>(m.node_id(i, j))] = {i * m.dx, j * m.dy};

    m.elem_conn.resize(static_cast<size_t>(m.n_elems()));
    for (int j = 0; j < ny; ++j)
        for (int i = 0; i < nx; ++i)
            m.elem_conn[static_cast<size_t>(m.elem_id(i, j))] = {
                m.node_id(i, j), m.node_id(i + 1, j), m.node_id(i + 1, j + 1), m.node_id(i, j + 1)};

    return m;
}

ShapeEval shape_eval(double xi, double eta) {
    // Corner signs in counter-clockwise order.
    static constexpr double sx[4] = {-1, 1, 1, -1};
    static constexpr double sy[4] = {-1, -1, 1, 1};
    ShapeEval s;
    for (int i = 0; i < 4; ++i) {
        s.N[i] = 0.25 * (1 + sx[i] * xi) * (1 + sy[i] * eta);
        s.dN[i] = {0.25 * sx[i] * (1 + sy[i] * eta), 0.25 * sy[i] * (1 + sx[i] * xi)};
    }
    return s;
}

std::vector<QuadPoint> gauss_rule(int order) {
    switch (order) {
    case 1:
        return {{0.0, 0.0, 4.0}};
    case 2: {
        const double g = 1.0 / std::sqrt(3.0);
        return {{-g, -g, 1.0}, {g, -g, 1.0}, {g, g, 1.0}, {-g, g, 1.0}};
    }
    case 3: {
        const double g = std::sqrt(0.6);
        const double w[3] = {5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0};
        const double x[3] = {-g, 0.0, g};
        std::vector<QuadPoint> pts;
        for (int j = 0; j < 3; ++j)
            for (int i = 0; i < 3; ++i)
                pts.push_back({x[i], x[j], w[i] * w[j]});
        return pts;
    }
    default:
        throw std::invalid_argument("gauss_rule: unsupported order " + std::to_string(order));
    }
}

namespace {
double selection_tolerance(const Mesh& mesh) { return 0.5 * std::min(mesh.dx, mesh.dy); }
} // namespace

Selection select_nodes(const Mesh& mesh, const Box& box) {
    const double tol = selection_tolerance(mesh);
    Selection sel;
    for (int n = 0; n < mesh.n_nodes(); ++n) {
        const auto& c = mesh.node_coords[static_cast<size_t>(n)];
        if (c[0] >= box.xmin - tol && c[0] <= box.xmax + tol && c[1] >= box.ymin - tol &&
            c[1] <= box.ymax + tol)
            sel.ids.push_back(n);
    }
    return sel;
}

Selection select_elems(const Mesh& mesh, const Box& box) {
    // Centroids sit half a cell away from cell boundaries, so a quarter-edge
    // tolerance keeps boxes written on either grid lines or centroids away
    // from floating-point knife edges (a half-edge tolerance would put
    // grid-aligned boxes exactly on one).
    const double tol = 0.5 * selection_tolerance(mesh);
    Selection sel;
    for (int e = 0; e < mesh.n_elems(); ++e) {
        const auto c = mesh.elem_centroid(e);
        if (c[0] >= box.xmin - tol && c[0] <= box.xmax + tol && c[1] >= box.ymin - tol &&
            c[1] <= box.ymax + tol)
            sel.ids.push_back(e);
    }
    return sel;
}

int nearest_node(const Mesh& mesh, double x, double y) {
    const int i = static_cast<int>(std::lround(x / mesh.dx));
    const int j = static_cast<int>(std::lround(y / mesh.dy));
    if (i < 0 || i > mesh.nx || j < 0 || j > mesh.ny)
        throw std::invalid_argument("nearest_node: point outside the domain");
    const int n = mesh.node_id(i, j);
    const auto& c = mesh.node_coords[static_cast<size_t>(n)];
    const double tol = selection_tolerance(mesh);
    if (std::abs(c[0] - x) > tol || std::abs(c[1] - y) > tol)
        throw std::invalid_argument("nearest_node: no node within half an element edge of the point");
    return n;
}

std::vector<int> BoundarySpec::constrained_dofs() const {
    std::vector<int> all = fixed_dofs;
    all.insert(all.end(), roller_dofs.begin(), roller_dofs.end());
    std::sort(all.begin(), all.end());
    all.erase(std::unique(all.begin(), all.end()), all.end());
    return all;
}

void validate_boundary(const Mesh& mesh, const BoundarySpec& bc) {
    std::set<int> seen;
    for (const auto& pbc : bc.pressure_dirichlet) {
        for (int n : pbc.nodes) {
            if (n < 0 || n >= mesh.n_nodes())
                throw std::invalid_argument("boundary: pressure node id " + std::to_string(n) +
                                            " out of range");
            if (!seen.insert(n).second)
                throw std::invalid_argument("boundary: pressure Dirichlet sets overlap at node " +
                                            std::to_string(n));
        }
    }
    for (int d : bc.constrained_dofs())
        if (d < 0 || d >= mesh.n_disp_dofs())
            throw std::invalid_argument("boundary: displacement DOF " + std::to_string(d) +
                                        " out of range");
    if (bc.output_node >= mesh.n_nodes())
        throw std::invalid_argument("boundary: output node out of range");
}

} // namespace pto
