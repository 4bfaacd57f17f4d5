#include "pto/sensitivity.hpp"

#include <cmath>
#include <stdexcept>

#include "pto/errors.hpp"

namespace pto {

namespace {

// Gathers per-element vectors, solves the pressure-space adjoint, and
// accumulates both gradient parts.  lambda1 already encodes the objective;
// extra_elastic adds the objective's explicit K-dependence per element:
// grad_elastic[e] = lambda1_e^T dK u_e (+ lambda3 term) + extra via callback.
struct ElementArrays {
    Eigen::Matrix4d L, M;
    Eigen::Matrix<double, 8, 8> k0;
};

void check_consistency(const std::vector<double>& rho, const PressureState& pressure,
                       const ElasticState& elastic) {
    const std::uint64_t h = hash_field(rho);
    if (pressure.design_hash != h)
        throw ConsistencyError("gradient: pressure state is stale for this density field");
    if (elastic.design_hash != h)
        throw ConsistencyError("gradient: elastic state is stale for this density field");
}

// Solves A_ff lambda2_f = -(H^T lambda1)_f with the stored factorization and
// scatters to the full pressure space (zeros on prescribed nodes).
Eigen::VectorXd pressure_adjoint(const ConversionMatrix& conv, const PressureState& pressure,
                                 const Eigen::VectorXd& lambda1) {
    const Eigen::VectorXd rhs_full = -(conv.Hmat.transpose() * lambda1);
    const int nf = static_cast<int>(pressure.free_nodes.size());
    Eigen::VectorXd rhs(nf);
    for (int fi = 0; fi < nf; ++fi)
        rhs[fi] = rhs_full[pressure.free_nodes[static_cast<size_t>(fi)]];
    const Eigen::VectorXd lam_f = pressure.factorization->solve(rhs);
    Eigen::VectorXd lambda2 = Eigen::VectorXd::Zero(rhs_full.size());
    for (int fi = 0; fi < nf; ++fi)
        lambda2[pressure.free_nodes[static_cast<size_t>(fi)]] = lam_f[fi];
    return lambda2;
}

void gather_elem(const Mesh& mesh, int e, const Eigen::VectorXd& full8,
                 Eigen::Matrix<double, 8, 1>& out) {
    const auto& conn = mesh.elem_conn[static_cast<size_t>(e)];
    for (int i = 0; i < 4; ++i) {
        out[2 * i] = full8[2 * conn[static_cast<size_t>(i)]];
        out[2 * i + 1] = full8[2 * conn[static_cast<size_t>(i)] + 1];
    }
}

void gather_elem4(const Mesh& mesh, int e, const Eigen::VectorXd& full4,
                  Eigen::Vector4d& out) {
    const auto& conn = mesh.elem_conn[static_cast<size_t>(e)];
    for (int i = 0; i < 4; ++i)
        out[i] = full4[conn[static_cast<size_t>(i)]];
}

// Load-dependence part for one element: lambda2_e^T (dK L p_e + dH M (p_e - p_out)).
double load_term(const ElementArrays& arr, const DarcyModel& darcy, double rho_e,
                 const Eigen::Vector4d& p_e, const Eigen::Vector4d& lam2_e) {
    double K, dK, H, dH;
    darcy.flow_coefficient(rho_e, K, dK);
    darcy.drainage_coefficient(rho_e, H, dH);
    Eigen::Vector4d rhs = dK * (arr.L * p_e) + dH * (arr.M * (p_e - Eigen::Vector4d::Constant(darcy.p_out)));
    return lam2_e.dot(rhs);
}

} // namespace

GradientReport compliance_gradient(const Mesh& mesh, const std::vector<double>& rho,
                                   const DarcyModel& darcy, const MaterialModel& mat,
                                   const ConversionMatrix& conv,
                                   const PressureState& pressure, const ElasticState& elastic,
                                   const SparseMat& K, double scale, bool with_load_sens,
                                   AdjointSet* adjoints_out) {
    (void)K;
    check_consistency(rho, pressure, elastic);

    ElementArrays arr{flow_laplacian_matrix(mesh.dx, mesh.dy, mesh.thickness),
                      flow_mass_matrix(mesh.dx, mesh.dy, mesh.thickness),
                      element_stiffness(1.0, mat.nu, mesh.dx, mesh.dy, mesh.thickness)};

    // Stationarity in u gives lambda1 = -2 scale u (zero on supports since u is).
    const Eigen::VectorXd lambda1 = -2.0 * scale * elastic.u;
    Eigen::VectorXd lambda2;
    if (with_load_sens)
        lambda2 = pressure_adjoint(conv, pressure, lambda1);

    const int ne = mesh.n_elems();
    GradientReport rep;
    rep.total.resize(static_cast<size_t>(ne));
    rep.elastic_part.resize(static_cast<size_t>(ne));
    rep.load_part.assign(static_cast<size_t>(ne), 0.0);

    for (int e = 0; e < ne; ++e) {
        double E, dE;
        mat.young_modulus(rho[static_cast<size_t>(e)], E, dE);
        Eigen::Matrix<double, 8, 1> u_e;
        gather_elem(mesh, e, elastic.u, u_e);
        // Explicit term scale u dK u plus lambda1 dK u collapses to the
        // classical -scale dE u^T k0 u.
        rep.elastic_part[static_cast<size_t>(e)] = -scale * dE * u_e.dot(arr.k0 * u_e);
        if (with_load_sens) {
            Eigen::Vector4d p_e, lam2_e;
            gather_elem4(mesh, e, pressure.p, p_e);
            gather_elem4(mesh, e, lambda2, lam2_e);
            rep.load_part[static_cast<size_t>(e)] =
                load_term(arr, darcy, rho[static_cast<size_t>(e)], p_e, lam2_e);
        }
        rep.total[static_cast<size_t>(e)] =
            rep.elastic_part[static_cast<size_t>(e)] + rep.load_part[static_cast<size_t>(e)];
    }

    if (adjoints_out) {
        adjoints_out->lambda1 = lambda1;
        adjoints_out->lambda2 = with_load_sens ? lambda2 : Eigen::VectorXd();
        adjoints_out->lambda3 = Eigen::VectorXd();
    }
    return rep;
}

GradientReport cm_gradient(const Mesh& mesh, const std::vector<double>& rho,
                           const DarcyModel& darcy, const MaterialModel& mat,
                           const ConversionMatrix& conv,
                           const PressureState& pressure, const ElasticState& elastic,
                           const SparseMat& K, double scale, bool with_load_sens,
                           AdjointSet* adjoints_out) {
    check_consistency(rho, pressure, elastic);
    if (elastic.v.size() != elastic.u.size())
        throw std::invalid_argument("cm_gradient: dummy-load solution missing");

    const Eigen::VectorXd Ku = K * elastic.u;
    const double uKu = elastic.u.dot(Ku);
    if (!(uKu > 0))
        throw DegenerateObjectiveError("cm_gradient: strain energy is not positive");
    const double vKu = elastic.v.dot(Ku);

    // f = -scale vKu/uKu.  Stationarity in u and v yields closed-form
    // multipliers built from the two existing solutions.
    const double s1 = scale / uKu;
    const double s2 = scale * vKu / (uKu * uKu);
    const Eigen::VectorXd lambda1 = s1 * elastic.v - 2.0 * s2 * elastic.u;
    const Eigen::VectorXd lambda3 = s1 * elastic.u;
    Eigen::VectorXd lambda2;
    if (with_load_sens)
        lambda2 = pressure_adjoint(conv, pressure, lambda1);

    ElementArrays arr{flow_laplacian_matrix(mesh.dx, mesh.dy, mesh.thickness),
                      flow_mass_matrix(mesh.dx, mesh.dy, mesh.thickness),
                      element_stiffness(1.0, mat.nu, mesh.dx, mesh.dy, mesh.thickness)};

    const int ne = mesh.n_elems();
    GradientReport rep;
    rep.total.resize(static_cast<size_t>(ne));
    rep.elastic_part.resize(static_cast<size_t>(ne));
    rep.load_part.assign(static_cast<size_t>(ne), 0.0);

    for (int e = 0; e < ne; ++e) {
        double E, dE;
        mat.young_modulus(rho[static_cast<size_t>(e)], E, dE);
        Eigen::Matrix<double, 8, 1> u_e, v_e;
        gather_elem(mesh, e, elastic.u, u_e);
        gather_elem(mesh, e, elastic.v, v_e);
        // Explicit K-dependence of f plus the lambda1/lambda3 terms collapse
        // to dE (s1 u^T k0 v - s2 u^T k0 u).
        const double uku = u_e.dot(arr.k0 * u_e);
        const double ukv = u_e.dot(arr.k0 * v_e);
        rep.elastic_part[static_cast<size_t>(e)] = dE * (s1 * ukv - s2 * uku);
        if (with_load_sens) {
            Eigen::Vector4d p_e, lam2_e;
            gather_elem4(mesh, e, pressure.p, p_e);
            gather_elem4(mesh, e, lambda2, lam2_e);
            rep.load_part[static_cast<size_t>(e)] =
                load_term(arr, darcy, rho[static_cast<size_t>(e)], p_e, lam2_e);
        }
        rep.total[static_cast<size_t>(e)] =
            rep.elastic_part[static_cast<size_t>(e)] + rep.load_part[static_cast<size_t>(e)];
    }

    if (adjoints_out) {
        adjoints_out->lambda1 = lambda1;
        adjoints_out->lambda2 = with_load_sens ? lambda2 : Eigen::VectorXd();
        adjoints_out->lambda3 = lambda3;
    }
    return rep;
}

double volume_constraint(const Mesh& mesh, const std::vector<double>& rho, double v_star) {
    if (static_cast<int>(rho.size()) != mesh.n_elems())
        throw std::invalid_argument("volume_constraint: density size mismatch");
    if (!(v_star > 0 && v_star <= 1))
        throw std::invalid_argument("volume_constraint: volume fraction must lie in (0,1]");
    double vol = 0;
    for (double r : rho)
        vol += r;
    // Uniform grid: element volumes cancel into a plain mean.
    return vol / (v_star * mesh.n_elems()) - 1.0;
}

std::vector<double> volume_gradient(const Mesh& mesh, double v_star) {
    if (!(v_star > 0 && v_star <= 1))
        throw std::invalid_argument("volume_gradient: volume fraction must lie in (0,1]");
    return std::vector<double>(static_cast<size_t>(mesh.n_elems()),
                               1.0 / (v_star * mesh.n_elems()));
}

FdResult fd_oracle(const std::function<double(const std::vector<double>&)>& objective,
                   const std::vector<double>& x, const std::vector<int>& ids, double step) {
    if (!(step > 0))
        throw std::invalid_argument("fd_oracle: step must be positive");
    FdResult res;
    res.grad.reserve(ids.size());
    std::vector<double> xp = x;
    for (int id : ids) {
        const double x0 = x[static_cast<size_t>(id)];
        xp[static_cast<size_t>(id)] = x0 + step;
        const double fp = objective(xp);
        xp[static_cast<size_t>(id)] = x0 - step;
        const double fm = objective(xp);
        xp[static_cast<size_t>(id)] = x0;
        if (fp == fm)
            res.underflow_warning = true;
        res.grad.push_back((fp - fm) / (2.0 * step));
    }
    return res;
}

} // namespace pto
