// Adjoint gradients validated against finite differences of the complete
// analysis chain, plus the volume constraint and the FD oracle itself.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "pto/darcy.hpp"
#include "pto/elasticity.hpp"
#include "pto/errors.hpp"
#include "pto/filter.hpp"
#include "pto/load_transfer.hpp"
#include "pto/mesh.hpp"
#include "pto/sensitivity.hpp"

using namespace pto;

namespace {

// Small pressure-loaded cantilever used by the compliance tests: bottom edge
// pressurized, top edge vented, left edge clamped.
struct ComplianceCase {
    Mesh mesh = build_grid(8, 5, 0.08, 0.05, 0.01);
    DarcyModel darcy{1e-3, 1e-10, 0.4, 10.0, 0.6, 10.0, 0.1, 0.02};
    MaterialModel mat{3e9, 3e4, 3.0, 0.4};
    ConversionMatrix conv = assemble_conversion(mesh);
    BoundarySpec bc;
    std::vector<int> constrained;

    ComplianceCase() {
        bc.pressure_dirichlet.push_back(
            {select_nodes(mesh, Box{0.0, mesh.Lx, 0.0, 0.0}).ids, 1e5});
        bc.pressure_dirichlet.push_back(
            {select_nodes(mesh, Box{0.0, mesh.Lx, mesh.Ly, mesh.Ly}).ids, 0.0});
        for (int j = 0; j <= mesh.ny; ++j) {
            constrained.push_back(2 * mesh.node_id(0, j));
            constrained.push_back(2 * mesh.node_id(0, j) + 1);
        }
    }

    double objective(const std::vector<double>& rho, double scale) const {
        const SparseMat A = assemble_flow(mesh, rho, darcy);
        const PressureState ps = solve_pressure(A, mesh, bc, hash_field(rho));
        const Eigen::VectorXd F = nodal_forces(conv, ps.p);
        const SparseMat K = assemble_stiffness(mesh, rho, mat, {}, constrained);
        const ElasticState es =
            solve_displacement(K, mesh, constrained, F, nullptr, hash_field(rho));
        return objective_value(ObjectiveKind::compliance, K, es.u, {}, scale);
    }
};

// Small pressure-actuated mechanism: pressure enters on the left, vents on
// the right, top edge clamped, sprung output port at the bottom-right corner.
struct MechanismCase {
    Mesh mesh = build_grid(10, 5, 0.1, 0.05, 0.01);
    DarcyModel darcy{1e-3, 1e-10, 0.4, 10.0, 0.6, 10.0, 0.1, 0.02};
    MaterialModel mat{3e9, 3e4, 3.0, 0.4};
    ConversionMatrix conv = assemble_conversion(mesh);
    BoundarySpec bc;
    std::vector<int> constrained;
    std::vector<Spring> springs;
    Eigen::VectorXd dummy;

    MechanismCase() {
        bc.pressure_dirichlet.push_back(
            {select_nodes(mesh, Box{0.0, 0.0, 0.0, mesh.Ly}).ids, 1e5});
        bc.pressure_dirichlet.push_back(
            {select_nodes(mesh, Box{mesh.Lx, mesh.Lx, 0.0, mesh.Ly}).ids, 0.0});
        for (int i = 0; i <= mesh.nx; ++i) {
            constrained.push_back(2 * mesh.node_id(i, mesh.ny));
            constrained.push_back(2 * mesh.node_id(i, mesh.ny) + 1);
        }
        const int out = mesh.node_id(mesh.nx, 0);
        springs.push_back({2 * out + 1, 1e4});
        dummy = Eigen::VectorXd::Zero(mesh.n_disp_dofs());
        dummy[2 * out + 1] = -1.0;
    }

    double objective(const std::vector<double>& rho, double scale) const {
        const SparseMat A = assemble_flow(mesh, rho, darcy);
        const PressureState ps = solve_pressure(A, mesh, bc, hash_field(rho));
        const Eigen::VectorXd F = nodal_forces(conv, ps.p);
        const SparseMat K = assemble_stiffness(mesh, rho, mat, springs, constrained);
        const ElasticState es =
            solve_displacement(K, mesh, constrained, F, &dummy, hash_field(rho));
        return objective_value(ObjectiveKind::compliant_mechanism, K, es.u, es.v, scale);
    }
};

std::vector<double> random_design(int n, unsigned seed) {
    std::mt19937 rng(seed);
    std::uniform_real_distribution<double> dist(0.2, 0.9);
    std::vector<double> rho(static_cast<size_t>(n));
    for (double& v : rho)
        v = dist(rng);
    return rho;
}

// |a-b| / max(|a|,|b|); zero when both are negligible next to the gradient.
double rel_err(double fd, double adj, double floor_abs) {
    const double m = std::max(std::abs(fd), std::abs(adj));
    if (m < floor_abs)
        return 0.0;
    return std::abs(fd - adj) / m;
}

} // namespace

TEST_CASE("compliance adjoint matches finite differences of the full chain") {
    ComplianceCase pc;
    const double scale = 1e4;
    const std::vector<double> rho = random_design(pc.mesh.n_elems(), 101);

    const SparseMat A = assemble_flow(pc.mesh, rho, pc.darcy);
    const PressureState ps = solve_pressure(A, pc.mesh, pc.bc, hash_field(rho));
    const Eigen::VectorXd F = nodal_forces(pc.conv, ps.p);
    const SparseMat K = assemble_stiffness(pc.mesh, rho, pc.mat, {}, pc.constrained);
    const ElasticState es =
        solve_displacement(K, pc.mesh, pc.constrained, F, nullptr, hash_field(rho));

    const GradientReport g = compliance_gradient(pc.mesh, rho, pc.darcy, pc.mat, pc.conv,
                                                 ps, es, K, scale, true);
    REQUIRE(g.total.size() == rho.size());

    std::vector<int> ids;
    for (int e = 0; e < pc.mesh.n_elems(); e += 3)
        ids.push_back(e);
    const FdResult fd = fd_oracle(
        [&](const std::vector<double>& r) { return pc.objective(r, scale); }, rho, ids,
        1e-6);

    double gmax = 0;
    for (double v : g.total)
        gmax = std::max(gmax, std::abs(v));
    std::vector<double> errs;
    for (size_t k = 0; k < ids.size(); ++k)
        errs.push_back(
            rel_err(fd.grad[k], g.total[static_cast<size_t>(ids[k])], 1e-9 * gmax));
    std::sort(errs.begin(), errs.end());
    CHECK(errs[errs.size() / 2] < 1e-4); // median
    CHECK(errs.back() < 1e-3);           // worst sampled element
}

TEST_CASE("mechanism adjoint matches finite differences of the full chain") {
    MechanismCase mc;
    const double scale = 1e4;
    const std::vector<double> rho = random_design(mc.mesh.n_elems(), 202);

    const SparseMat A = assemble_flow(mc.mesh, rho, mc.darcy);
    const PressureState ps = solve_pressure(A, mc.mesh, mc.bc, hash_field(rho));
    const Eigen::VectorXd F = nodal_forces(mc.conv, ps.p);
    const SparseMat K =
        assemble_stiffness(mc.mesh, rho, mc.mat, mc.springs, mc.constrained);
    const ElasticState es =
        solve_displacement(K, mc.mesh, mc.constrained, F, &mc.dummy, hash_field(rho));

    const GradientReport g = cm_gradient(mc.mesh, rho, mc.darcy, mc.mat, mc.conv, ps, es,
                                         K, scale, true);

    std::vector<int> ids;
    for (int e = 1; e < mc.mesh.n_elems(); e += 4)
        ids.push_back(e);
    const FdResult fd = fd_oracle(
        [&](const std::vector<double>& r) { return mc.objective(r, scale); }, rho, ids,
        1e-6);

    double gmax = 0;
    for (double v : g.total)
        gmax = std::max(gmax, std::abs(v));
    std::vector<double> errs;
    for (size_t k = 0; k < ids.size(); ++k)
        errs.push_back(
            rel_err(fd.grad[k], g.total[static_cast<size_t>(ids[k])], 1e-9 * gmax));
    std::sort(errs.begin(), errs.end());
    CHECK(errs[errs.size() / 2] < 1e-4);
    CHECK(errs.back() < 1e-3);
}

TEST_CASE("gradient report decomposes exactly and the ablation drops the load part") {
    ComplianceCase pc;
    const std::vector<double> rho = random_design(pc.mesh.n_elems(), 303);

    const SparseMat A = assemble_flow(pc.mesh, rho, pc.darcy);
    const PressureState ps = solve_pressure(A, pc.mesh, pc.bc, hash_field(rho));
    const Eigen::VectorXd F = nodal_forces(pc.conv, ps.p);
    const SparseMat K = assemble_stiffness(pc.mesh, rho, pc.mat, {}, pc.constrained);
    const ElasticState es =
        solve_displacement(K, pc.mesh, pc.constrained, F, nullptr, hash_field(rho));

    const GradientReport full = compliance_gradient(pc.mesh, rho, pc.darcy, pc.mat,
                                                    pc.conv, ps, es, K, 1e4, true);
    const GradientReport ablated = compliance_gradient(pc.mesh, rho, pc.darcy, pc.mat,
                                                       pc.conv, ps, es, K, 1e4, false);

    double load_norm = 0;
    for (size_t e = 0; e < rho.size(); ++e) {
        CHECK(full.total[e] == full.elastic_part[e] + full.load_part[e]);
        CHECK(ablated.load_part[e] == 0.0);
        CHECK(ablated.total[e] == ablated.elastic_part[e]);
        // The elastic part does not depend on the toggle.
        CHECK(ablated.elastic_part[e] == full.elastic_part[e]);
        load_norm += full.load_part[e] * full.load_part[e];
    }
    // Design-dependent loads genuinely contribute here.
    CHECK(load_norm > 0.0);
}

TEST_CASE("adjoint multipliers satisfy their boundary structure") {
    MechanismCase mc;
    const std::vector<double> rho = random_design(mc.mesh.n_elems(), 404);

    const SparseMat A = assemble_flow(mc.mesh, rho, mc.darcy);
    const PressureState ps = solve_pressure(A, mc.mesh, mc.bc, hash_field(rho));
    const Eigen::VectorXd F = nodal_forces(mc.conv, ps.p);
    const SparseMat K =
        assemble_stiffness(mc.mesh, rho, mc.mat, mc.springs, mc.constrained);
    const ElasticState es =
        solve_displacement(K, mc.mesh, mc.constrained, F, &mc.dummy, hash_field(rho));

    AdjointSet adj;
    cm_gradient(mc.mesh, rho, mc.darcy, mc.mat, mc.conv, ps, es, K, 1e4, true, &adj);
    CHECK(adj.lambda1.size() == mc.mesh.n_disp_dofs());
    CHECK(adj.lambda2.size() == mc.mesh.n_nodes());
    CHECK(adj.lambda3.size() == mc.mesh.n_disp_dofs());

    for (int dof : mc.constrained) {
        CHECK(adj.lambda1[dof] == 0.0);
        CHECK(adj.lambda3[dof] == 0.0);
    }
    for (const PressureBC& set : mc.bc.pressure_dirichlet)
        for (int n : set.nodes)
            CHECK(adj.lambda2[n] == 0.0);

    // Compliance problems have no dummy state and therefore no lambda3.
    ComplianceCase pc;
    const std::vector<double> rho2 = random_design(pc.mesh.n_elems(), 405);
    const SparseMat A2 = assemble_flow(pc.mesh, rho2, pc.darcy);
    const PressureState ps2 = solve_pressure(A2, pc.mesh, pc.bc, hash_field(rho2));
    const Eigen::VectorXd F2 = nodal_forces(pc.conv, ps2.p);
    const SparseMat K2 = assemble_stiffness(pc.mesh, rho2, pc.mat, {}, pc.constrained);
    const ElasticState es2 =
        solve_displacement(K2, pc.mesh, pc.constrained, F2, nullptr, hash_field(rho2));
    AdjointSet adj2;
    compliance_gradient(pc.mesh, rho2, pc.darcy, pc.mat, pc.conv, ps2, es2, K2, 1e4,
                        true, &adj2);
    CHECK(adj2.lambda3.size() == 0);
}

TEST_CASE("stale states are rejected before any gradient is formed") {
    ComplianceCase pc;
    const std::vector<double> rho = random_design(pc.mesh.n_elems(), 505);
    std::vector<double> other = rho;
    other[3] += 0.01;

    const SparseMat A = assemble_flow(pc.mesh, rho, pc.darcy);
    const PressureState ps = solve_pressure(A, pc.mesh, pc.bc, hash_field(rho));
    const Eigen::VectorXd F = nodal_forces(pc.conv, ps.p);
    const SparseMat K = assemble_stiffness(pc.mesh, rho, pc.mat, {}, pc.constrained);
    const ElasticState es =
        solve_displacement(K, pc.mesh, pc.constrained, F, nullptr, hash_field(rho));

    CHECK_THROWS_AS(compliance_gradient(pc.mesh, other, pc.darcy, pc.mat, pc.conv, ps,
                                        es, K, 1e4, true),
                    ConsistencyError);

    // A pressure state refreshed for the new design but a stale elastic state
    // must still be caught.
    const SparseMat A2 = assemble_flow(pc.mesh, other, pc.darcy);
    const PressureState ps2 = solve_pressure(A2, pc.mesh, pc.bc, hash_field(other));
    CHECK_THROWS_AS(compliance_gradient(pc.mesh, other, pc.darcy, pc.mat, pc.conv, ps2,
                                        es, K, 1e4, true),
                    ConsistencyError);
}

TEST_CASE("volume constraint and gradient follow the normalized definition") {
    const Mesh mesh = build_grid(10, 4, 0.1, 0.04, 0.01);
    const int n = mesh.n_elems();
    const double v_star = 0.25;

    CHECK(volume_constraint(mesh, std::vector<double>(static_cast<size_t>(n), 0.25),
                            v_star) == doctest::Approx(0.0).epsilon(1e-13));
    CHECK(volume_constraint(mesh, std::vector<double>(static_cast<size_t>(n), 0.5),
                            v_star) == doctest::Approx(1.0).epsilon(1e-13));

    const std::vector<double> dg = volume_gradient(mesh, v_star);
    REQUIRE(dg.size() == static_cast<size_t>(n));
    for (double v : dg)
        CHECK(v == doctest::Approx(1.0 / (v_star * n)).epsilon(1e-13));

    CHECK_THROWS_AS(volume_constraint(mesh, std::vector<double>(3, 0.5), v_star),
                    std::invalid_argument);
    CHECK_THROWS_AS(volume_constraint(
                        mesh, std::vector<double>(static_cast<size_t>(n), 0.5), 0.0),
                    std::invalid_argument);
}

TEST_CASE("fd oracle differentiates smooth functions at second order") {
    const std::vector<double> x{0.3, 0.5, 0.7, 0.2};
    const std::vector<int> ids{0, 1, 2, 3};
    auto cubic = [](const std::vector<double>& v) {
        double s = 0;
        for (double t : v)
            s += t * t * t;
        return s;
    };
    const FdResult fd = fd_oracle(cubic, x, ids, 1e-5);
    CHECK(!fd.underflow_warning);
    for (size_t k = 0; k < ids.size(); ++k)
        CHECK(fd.grad[k] ==
              doctest::Approx(3.0 * x[k] * x[k]).epsilon(1e-8));

    // Constant objectives trip the underflow warning instead of reporting a
    // spurious zero silently.
    const FdResult flat =
        fd_oracle([](const std::vector<double>&) { return 42.0; }, x, ids, 1e-5);
    CHECK(flat.underflow_warning);

    CHECK_THROWS_AS(fd_oracle(cubic, x, ids, 0.0), std::invalid_argument);
}
