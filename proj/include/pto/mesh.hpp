// Structured quadrilateral mesh with bilinear shape functions.
//
// One mesh serves two fields: pressure (1 DOF per node) and displacement
// (2 DOFs per node, x then y).  Node numbering is row-major with x running
// fastest; element connectivity is counter-clockwise starting at the
// lower-left corner.  All grids are uniform rectangles, which is all the
// bundled problems need and keeps filter neighborhoods and element matrices
// trivial.
#pragma once

#include <array>
#include <cstdint>
#include <vector>

namespace pto {

struct Mesh {
    int nx = 0, ny = 0;         // element counts per axis
    double Lx = 0, Ly = 0;      // domain size (m)
    double thickness = 0;       // out-of-plane thickness t (m)
    double dx = 0, dy = 0;      // element edge lengths (m)

    std::vector<std::array<double, 2>> node_coords; // (nx+1)*(ny+1) entries
    std::vector<std::array<int, 4>> elem_conn;      // CCW node ids per element
    std::vector<int> passive_elems;                 // sorted ids with frozen density (rho = 0)

    int n_nodes() const { return (nx + 1) * (ny + 1); }
    int n_elems() const { return nx * ny; }
    int n_disp_dofs() const { return 2 * n_nodes(); }

    // Grid index helpers; i in [0,nx] / [0,nx-1], j likewise for y.
    int node_id(int i, int j) const { return j * (nx + 1) + i; }
    int elem_id(int i, int j) const { return j * nx + i; }

    std::array<double, 2> elem_centroid(int e) const {
        const int i = e % nx, j = e / nx;
        return {(i + 0.5) * dx, (j + 0.5) * dy};
    }

    bool is_passive(int e) const;
};

// Builds a uniform nx-by-ny grid over [0,Lx] x [0,Ly].
// Throws std::invalid_argument for non-positive counts or dimensions.
Mesh build_grid(int nx, int ny, double Lx, double Ly, double thickness);

// Bilinear shape functions on the reference square [-1,1]^2, corners ordered
// counter-clockwise: (-1,-1), (1,-1), (1,1), (-1,1).
struct ShapeEval {
    std::array<double, 4> N;                  // values
    std::array<std::array<double, 2>, 4> dN;  // d/dxi, d/deta per node
};
ShapeEval shape_eval(double xi, double eta);

// Tensor-product Gauss quadrature on the reference square.
// Supported orders: 1 (1 point), 2 (4 points), 3 (9 points); weights sum to 4.
struct QuadPoint {
    double xi, eta, w;
};
std::vector<QuadPoint> gauss_rule(int order);

// Axis-aligned box used for geometric selection.  Node selection tolerates
// half the smallest element edge, element (centroid) selection a quarter, so
// boxes may be given exactly on grid coordinates without floating-point
// anxiety.
struct Box {
    double xmin, xmax, ymin, ymax;
};

// Result of a geometric query.  An empty selection is not an error here;
// the caller decides how severe it is (the config loader upgrades empty
// mandatory selections to ConfigError).
struct Selection {
    std::vector<int> ids;   // sorted, unique
    bool empty() const { return ids.empty(); }
};

Selection select_nodes(const Mesh& mesh, const Box& box);
Selection select_elems(const Mesh& mesh, const Box& box); // by centroid

// Nearest node to a point; throws std::invalid_argument if the point lies
// farther than half an element edge from every node.
int nearest_node(const Mesh& mesh, double x, double y);

// Boundary conditions for both fields plus the mechanism output port.
struct PressureBC {
    std::vector<int> nodes; // sorted, unique
    double value = 0;       // Pa
};

struct BoundarySpec {
    std::vector<PressureBC> pressure_dirichlet; // disjoint node sets
    std::vector<int> fixed_dofs;                // fully constrained displacement DOFs
    std::vector<int> roller_dofs;               // single-component constraints (symmetry lines)
    int output_node = -1;                       // mechanism output port (-1 if none)
    std::array<double, 2> output_dir = {0, 0};  // unit direction of desired motion

    // All displacement constraints merged, sorted, unique.
    std::vector<int> constrained_dofs() const;
    int output_dof_x() const { return 2 * output_node; }
    int output_dof_y() const { return 2 * output_node + 1; }
};

// Verifies that every referenced node/DOF exists and that pressure Dirichlet
// sets are disjoint.  Throws std::invalid_argument on violation.
void validate_boundary(const Mesh& mesh, const BoundarySpec& bc);

} // namespace pto
