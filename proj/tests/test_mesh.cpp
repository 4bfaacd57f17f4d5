// Mesh, shape functions, quadrature, and geometric selection.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <random>

#include "pto/mesh.hpp"

using namespace pto;

TEST_CASE("build_grid produces the expected counts and spacing") {
    const Mesh m = build_grid(10, 7, 1.0, 0.7, 0.01);
    CHECK(m.n_nodes() == 88);
    CHECK(m.n_elems() == 70);
    CHECK(m.dx == doctest::Approx(0.1).epsilon(1e-15));
    CHECK(m.dy == doctest::Approx(0.1).epsilon(1e-15));

    const Mesh unit = build_grid(1, 1, 1, 1, 1);
    CHECK(unit.n_nodes() == 4);
    CHECK(unit.n_elems() == 1);
    CHECK(unit.node_coords[2][0] == 0.0); // top-left corner
    CHECK(unit.node_coords[2][1] == 1.0);
    CHECK(unit.node_coords[3][0] == 1.0); // top-right corner
    CHECK(unit.node_coords[3][1] == 1.0);

    const Mesh big = build_grid(200, 100, 0.2, 0.1, 0.01);
    CHECK(big.n_nodes() == 20301);
    CHECK(big.n_elems() == 20000);
}

TEST_CASE("build_grid rejects degenerate input") {
    CHECK_THROWS_AS(build_grid(0, 7, 1, 1, 1), std::invalid_argument);
    CHECK_THROWS_AS(build_grid(10, -1, 1, 1, 1), std::invalid_argument);
    CHECK_THROWS_AS(build_grid(10, 7, 0, 1, 1), std::invalid_argument);
    CHECK_THROWS_AS(build_grid(10, 7, 1, -2, 1), std::invalid_argument);
    CHECK_THROWS_AS(build_grid(10, 7, 1, 1, 0), std::invalid_argument);
}

TEST_CASE("node numbering is row-major with x fastest and connectivity counter-clockwise") {
    const Mesh m = build_grid(3, 2, 3.0, 2.0, 1.0);
    for (int j = 0; j <= m.ny; ++j)
        for (int i = 0; i <= m.nx; ++i) {
            const auto& c = m.node_coords[static_cast<size_t>(m.node_id(i, j))];
            CHECK(c[0] == doctest::Approx(i * m.dx).epsilon(1e-15));
            CHECK(c[1] == doctest::Approx(j * m.dy).epsilon(1e-15));
        }
    // Element (i, j) connects its lower-left corner and proceeds CCW.
    const auto& conn = m.elem_conn[static_cast<size_t>(m.elem_id(1, 1))];
    CHECK(conn[0] == m.node_id(1, 1));
    CHECK(conn[1] == m.node_id(2, 1));
    CHECK(conn[2] == m.node_id(2, 2));
    CHECK(conn[3] == m.node_id(1, 2));
}

TEST_CASE("construction is bit-stable across runs") {
    const Mesh a = build_grid(17, 9, 1.7, 0.9, 0.002);
    const Mesh b = build_grid(17, 9, 1.7, 0.9, 0.002);
    REQUIRE(a.node_coords.size() == b.node_coords.size());
    for (size_t n = 0; n < a.node_coords.size(); ++n) {
        CHECK(a.node_coords[n][0] == b.node_coords[n][0]);
        CHECK(a.node_coords[n][1] == b.node_coords[n][1]);
    }
    CHECK(a.elem_conn == b.elem_conn);
}

TEST_CASE("jacobian determinant is positive at every quadrature point") {
    const Mesh m = build_grid(4, 3, 2.0, 0.3, 0.01);
    for (int e = 0; e < m.n_elems(); ++e) {
        const auto& conn = m.elem_conn[static_cast<size_t>(e)];
        for (const auto& q : gauss_rule(2)) {
            const ShapeEval s = shape_eval(q.xi, q.eta);
            double j00 = 0, j01 = 0, j10 = 0, j11 = 0;
            for (int i = 0; i < 4; ++i) {
                const auto& c = m.node_coords[static_cast<size_t>(conn[static_cast<size_t>(i)])];
                j00 += s.dN[static_cast<size_t>(i)][0] * c[0];
                j01 += s.dN[static_cast<size_t>(i)][0] * c[1];
                j10 += s.dN[static_cast<size_t>(i)][1] * c[0];
                j11 += s.dN[static_cast<size_t>(i)][1] * c[1];
            }
            CHECK(j00 * j11 - j01 * j10 > 0.0);
        }
    }
}

TEST_CASE("shape functions interpolate nodally and evaluate by the tensor-product formula") {
    const ShapeEval center = shape_eval(0, 0);
    for (int i = 0; i < 4; ++i)
        CHECK(center.N[static_cast<size_t>(i)] == 0.25);

    const ShapeEval corner = shape_eval(-1, -1);
    CHECK(corner.N[0] == 1.0);
    CHECK(corner.N[1] == 0.0);
    CHECK(corner.N[2] == 0.0);
    CHECK(corner.N[3] == 0.0);

    // Hand evaluation of 1/4 (1 +- xi)(1 +- eta) at (0.5, -0.5).
    const ShapeEval s = shape_eval(0.5, -0.5);
    CHECK(s.N[0] == doctest::Approx(0.1875).epsilon(1e-15));
    CHECK(s.N[1] == doctest::Approx(0.5625).epsilon(1e-15));
    CHECK(s.N[2] == doctest::Approx(0.1875).epsilon(1e-15));
    CHECK(s.N[3] == doctest::Approx(0.0625).epsilon(1e-15));
    CHECK(s.N[0] + s.N[1] + s.N[2] + s.N[3] == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("partition of unity holds at random reference points") {
    std::mt19937 rng(12345);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    for (int k = 0; k < 1000; ++k) {
        const ShapeEval s = shape_eval(dist(rng), dist(rng));
        double sum = 0, dsum0 = 0, dsum1 = 0;
        for (int i = 0; i < 4; ++i) {
            CHECK(s.N[static_cast<size_t>(i)] >= 0.0);
            sum += s.N[static_cast<size_t>(i)];
            dsum0 += s.dN[static_cast<size_t>(i)][0];
            dsum1 += s.dN[static_cast<size_t>(i)][1];
        }
        CHECK(std::abs(sum - 1.0) < 1e-14);
        CHECK(std::abs(dsum0) < 1e-13);
        CHECK(std::abs(dsum1) < 1e-13);
    }
}

TEST_CASE("isoparametric map reproduces element corners exactly") {
    const Mesh m = build_grid(5, 4, 0.55, 0.36, 0.01);
    const double ref[4][2] = {{-1, -1}, {1, -1}, {1, 1}, {-1, 1}};
    for (int e = 0; e < m.n_elems(); ++e) {
        const auto& conn = m.elem_conn[static_cast<size_t>(e)];
        for (int cnr = 0; cnr < 4; ++cnr) {
            const ShapeEval s = shape_eval(ref[cnr][0], ref[cnr][1]);
            double x = 0, y = 0;
            for (int i = 0; i < 4; ++i) {
                const auto& c = m.node_coords[static_cast<size_t>(conn[static_cast<size_t>(i)])];
                x += s.N[static_cast<size_t>(i)] * c[0];
                y += s.N[static_cast<size_t>(i)] * c[1];
            }
            // Corner shape values are exactly {0, 1}, so the map is exact.
            const auto& c = m.node_coords[static_cast<size_t>(conn[static_cast<size_t>(cnr)])];
            CHECK(x == c[0]);
            CHECK(y == c[1]);
        }
    }
}

TEST_CASE("gauss rules have the advertised points and weights") {
    const auto one = gauss_rule(1);
    REQUIRE(one.size() == 1);
    CHECK(one[0].xi == 0.0);
    CHECK(one[0].eta == 0.0);
    CHECK(one[0].w == 4.0);

    const auto two = gauss_rule(2);
    REQUIRE(two.size() == 4);
    const double g = 1.0 / std::sqrt(3.0);
    double wsum = 0;
    for (const auto& q : two) {
        CHECK(std::abs(q.xi) == doctest::Approx(g).epsilon(1e-15));
        CHECK(std::abs(q.eta) == doctest::Approx(g).epsilon(1e-15));
        CHECK(q.w == 1.0);
        wsum += q.w;
    }
    CHECK(wsum == 4.0);

    const auto three = gauss_rule(3);
    REQUIRE(three.size() == 9);
    wsum = 0;
    for (const auto& q : three)
        wsum += q.w;
    CHECK(wsum == doctest::Approx(4.0).epsilon(1e-15));

    CHECK_THROWS_AS(gauss_rule(0), std::invalid_argument);
    CHECK_THROWS_AS(gauss_rule(4), std::invalid_argument);
}

TEST_CASE("order-2 rule integrates xi^2 eta^2 exactly") {
    double integral = 0;
    for (const auto& q : gauss_rule(2))
        integral += q.w * q.xi * q.xi * q.eta * q.eta;
    CHECK(integral == doctest::Approx(4.0 / 9.0).epsilon(1e-15));
}

TEST_CASE("node selection finds edges within half an element edge") {
    const Mesh m = build_grid(10, 7, 1.0, 0.7, 0.01);
    const Selection bottom = select_nodes(m, Box{0.0, 1.0, 0.0, 0.0});
    CHECK(bottom.ids.size() == 11);
    for (int n : bottom.ids)
        CHECK(m.node_coords[static_cast<size_t>(n)][1] == 0.0);

    // A box shifted by less than the tolerance still catches the edge row...
    const Selection near = select_nodes(m, Box{0.0, 1.0, 0.049, 0.049});
    CHECK(near.ids.size() == 11);
    // ...but a box strictly between rows catches only the nearer row.
    const Selection between = select_nodes(m, Box{0.0, 1.0, 0.051, 0.051});
    CHECK(between.ids.size() == 11);
    for (int n : between.ids)
        CHECK(m.node_coords[static_cast<size_t>(n)][1] > 0.05);

    const Selection outside = select_nodes(m, Box{5.0, 6.0, 5.0, 6.0});
    CHECK(outside.empty());
}

TEST_CASE("element selection works on centroids") {
    // 200x100 grid over a 0.1 x 0.05 domain; a corner box of one fifth of
    // each side covers exactly 40 x 20 elements.
    const Mesh m = build_grid(200, 100, 0.1, 0.05, 0.01);
    const Selection sel = select_elems(m, Box{0.08, 0.1, 0.0, 0.01});
    CHECK(sel.ids.size() == 800);
    for (int e : sel.ids) {
        const auto c = m.elem_centroid(e);
        CHECK(c[0] > 0.08 - m.dx);
        CHECK(c[1] < 0.01 + m.dy);
    }
    CHECK(select_elems(m, Box{0.2, 0.3, 0.0, 0.01}).empty());
}

TEST_CASE("nearest_node resolves points and rejects far ones") {
    const Mesh m = build_grid(10, 7, 1.0, 0.7, 0.01);
    CHECK(nearest_node(m, 0.0, 0.0) == 0);
    CHECK(nearest_node(m, 1.0, 0.7) == m.n_nodes() - 1);
    CHECK(nearest_node(m, 0.52, 0.31) == m.node_id(5, 3)); // within tolerance
    CHECK_THROWS_AS(nearest_node(m, 2.0, 0.0), std::invalid_argument);
}

TEST_CASE("constrained DOFs merge fixed and roller sets") {
    BoundarySpec bc;
    bc.fixed_dofs = {5, 4};
    bc.roller_dofs = {2, 5};
    const std::vector<int> all = bc.constrained_dofs();
    CHECK(all == std::vector<int>{2, 4, 5});
}

TEST_CASE("boundary validation rejects bad ids and overlapping pressure sets") {
    const Mesh m = build_grid(2, 2, 1.0, 1.0, 0.01);

    BoundarySpec ok;
    ok.pressure_dirichlet.push_back({{0, 1, 2}, 1e5});
    ok.pressure_dirichlet.push_back({{6, 7, 8}, 0.0});
    ok.fixed_dofs = {0, 1};
    CHECK_NOTHROW(validate_boundary(m, ok));

    BoundarySpec bad_node = ok;
    bad_node.pressure_dirichlet[0].nodes.push_back(99);
    CHECK_THROWS_AS(validate_boundary(m, bad_node), std::invalid_argument);

    BoundarySpec overlap = ok;
    overlap.pressure_dirichlet[1].nodes.push_back(2);
    CHECK_THROWS_AS(validate_boundary(m, overlap), std::invalid_argument);

    BoundarySpec bad_dof = ok;
    bad_dof.fixed_dofs.push_back(2 * m.n_nodes());
    CHECK_THROWS_AS(validate_boundary(m, bad_dof), std::invalid_argument);

    BoundarySpec bad_out = ok;
    bad_out.output_node = m.n_nodes();
    CHECK_THROWS_AS(validate_boundary(m, bad_out), std::invalid_argument);
}

TEST_CASE("passive membership uses the sorted id list") {
    Mesh m = build_grid(4, 4, 1.0, 1.0, 0.01);
    m.passive_elems = {3, 7, 8};
    CHECK(m.is_passive(7));
    CHECK(!m.is_passive(6));
    CHECK(!m.is_passive(0));
}
