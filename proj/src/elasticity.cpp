#include "pto/elasticity.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "pto/errors.hpp"

namespace pto {

MaterialModel::MaterialModel(double E0_, double E_min_, double zeta_, double nu_)
    : E0(E0_), E_min(E_min_), zeta(zeta_), nu(nu_) {
    if (!(E0 > E_min) || !(E_min > 0))
        throw std::invalid_argument("MaterialModel: need E0 > E_min > 0");
    if (!(zeta >= 1))
        throw std::invalid_argument("MaterialModel: penalization exponent must be >= 1");
    if (!(nu >= 0 && nu < 0.5))
        throw std::invalid_argument("MaterialModel: Poisson ratio must lie in [0, 0.5)");
}

void MaterialModel::young_modulus(double rho, double& E, double& dE) const {
    if (!(rho >= 0.0 && rho <= 1.0))
        throw std::invalid_argument("young_modulus: density " + std::to_string(rho) +
                                    " outside [0,1]");
    const double pw = std::pow(rho, zeta);
    // Convex-combination form keeps both endpoints bit-exact for any E0/E_min.
    E = E_min * (1.0 - pw) + E0 * pw;
    dE = (rho > 0.0) ? zeta * std::pow(rho, zeta - 1.0) * (E0 - E_min)
                     : (zeta == 1.0 ? (E0 - E_min) : 0.0);
}

Eigen::Matrix<double, 8, 8> element_stiffness(double E, double nu,
                                              double a, double b, double t) {
    if (!(a > 0) || !(b > 0) || !(t > 0))
        throw std::invalid_argument("element_stiffness: geometry must be positive");

    // Plane-stress constitutive matrix.
    const double c = E / (1.0 - nu * nu);
    Eigen::Matrix3d D;
    D << c, c * nu, 0, c * nu, c, 0, 0, 0, c * (1.0 - nu) / 2.0;

    // 2x2 Gauss integrates the bilinear integrand exactly on a rectangle.
    const double detJ = a * b / 4.0; // constant Jacobian of the affine map
    Eigen::Matrix<double, 8, 8> K = Eigen::Matrix<double, 8, 8>::Zero();
    for (const auto& q : gauss_rule(2)) {
        const ShapeEval s = shape_eval(q.xi, q.eta);
        Eigen::Matrix<double, 3, 8> B = Eigen::Matrix<double, 3, 8>::Zero();
        for (int i = 0; i < 4; ++i) {
            const double dNdx = s.dN[static_cast<size_t>(i)][0] * 2.0 / a;
            const double dNdy = s.dN[static_cast<size_t>(i)][1] * 2.0 / b;
            B(0, 2 * i) = dNdx;
            B(1, 2 * i + 1) = dNdy;
            B(2, 2 * i) = dNdy;
            B(2, 2 * i + 1) = dNdx;
        }
        K += (q.w * detJ * t) * (B.transpose() * D * B);
    }
    // Mirror the upper triangle so rounding cannot break symmetry.
    for (int i = 0; i < 8; ++i)
        for (int j = i + 1; j < 8; ++j)
            K(j, i) = K(i, j);
    return K;
}

SparseMat assemble_stiffness(const Mesh& mesh, const std::vector<double>& rho,
                             const MaterialModel& mat, const std::vector<Spring>& springs,
                             const std::vector<int>& constrained_dofs) {
    if (static_cast<int>(rho.size()) != mesh.n_elems())
        throw std::invalid_argument("assemble_stiffness: density size mismatch");
    for (const auto& sp : springs) {
        if (sp.dof < 0 || sp.dof >= mesh.n_disp_dofs())
            throw std::invalid_argument("assemble_stiffness: spring DOF out of range");
        if (!(sp.k > 0))
            throw std::invalid_argument("assemble_stiffness: spring stiffness must be positive");
        for (int d : constrained_dofs)
            if (d == sp.dof)
                throw std::invalid_argument(
                    "assemble_stiffness: spring attached to constrained DOF " +
                    std::to_string(sp.dof));
    }

    const Eigen::Matrix<double, 8, 8> k0 =
        element_stiffness(1.0, mat.nu, mesh.dx, mesh.dy, mesh.thickness);

    std::vector<Eigen::Triplet<double>> trips;
    trips.reserve(static_cast<size_t>(mesh.n_elems()) * 64 + springs.size());
    for (int e = 0; e < mesh.n_elems(); ++e) {
        double E, dE;
        mat.young_modulus(rho[static_cast<size_t>(e)], E, dE);
        const auto& conn = mesh.elem_conn[static_cast<size_t>(e)];
        int dof[8];
        for (int i = 0; i < 4; ++i) {
            dof[2 * i] = 2 * conn[static_cast<size_t>(i)];
            dof[2 * i + 1] = 2 * conn[static_cast<size_t>(i)] + 1;
        }
        for (int i = 0; i < 8; ++i)
            for (int j = 0; j < 8; ++j)
                trips.emplace_back(dof[i], dof[j], E * k0(i, j));
    }
    for (const auto& sp : springs)
        trips.emplace_back(sp.dof, sp.dof, sp.k);

    SparseMat K(mesh.n_disp_dofs(), mesh.n_disp_dofs());
    K.setFromTriplets(trips.begin(), trips.end());
    return K;
}

ElasticState solve_displacement(const SparseMat& K, const Mesh& mesh,
                                const std::vector<int>& constrained_dofs,
                                const Eigen::VectorXd& F,
                                const Eigen::VectorXd* dummy_load,
                                std::uint64_t design_hash,
                                std::shared_ptr<Eigen::SimplicialLDLT<SparseMat>> reuse_pattern) {
    const int n = mesh.n_disp_dofs();
    if (F.size() != n)
        throw std::invalid_argument("solve_displacement: load vector size mismatch");
    if (constrained_dofs.empty())
        throw SingularSystemError("solve_displacement: no supports; rigid body modes remain");

    ElasticState st;
    st.design_hash = design_hash;
    st.free_index.assign(static_cast<size_t>(n), 0);
    for (int d : constrained_dofs)
        st.free_index[static_cast<size_t>(d)] = -1;
    for (int d = 0; d < n; ++d)
        if (st.free_index[static_cast<size_t>(d)] == 0) {
            st.free_index[static_cast<size_t>(d)] = static_cast<int>(st.free_dofs.size());
            st.free_dofs.push_back(d);
        }
    const int nf = static_cast<int>(st.free_dofs.size());

    std::vector<Eigen::Triplet<double>> trips;
    for (int col = 0; col < K.outerSize(); ++col) {
        const int cj = st.free_index[static_cast<size_t>(col)];
        if (cj < 0)
            continue;
        for (SparseMat::InnerIterator it(K, col); it; ++it) {
            const int ri = st.free_index[static_cast<size_t>(it.row())];
            if (ri >= 0)
                trips.emplace_back(ri, cj, it.value());
        }
    }
    SparseMat Kff(nf, nf);
    Kff.setFromTriplets(trips.begin(), trips.end());

    auto solver = reuse_pattern;
    if (!solver) {
        solver = std::make_shared<Eigen::SimplicialLDLT<SparseMat>>();
        solver->analyzePattern(Kff);
    }
    solver->factorize(Kff);
    if (solver->info() != Eigen::Success)
        throw SingularSystemError(
            "solve_displacement: factorization of the reduced stiffness matrix failed");

    Eigen::VectorXd Ff(nf);
    for (int fi = 0; fi < nf; ++fi)
        Ff[fi] = F[st.free_dofs[static_cast<size_t>(fi)]];
    const Eigen::VectorXd uf = solver->solve(Ff);
    st.u = Eigen::VectorXd::Zero(n);
    for (int fi = 0; fi < nf; ++fi)
        st.u[st.free_dofs[static_cast<size_t>(fi)]] = uf[fi];

    if (dummy_load) {
        if (dummy_load->size() != n)
            throw std::invalid_argument("solve_displacement: dummy load size mismatch");
        Eigen::VectorXd Gf(nf);
        for (int fi = 0; fi < nf; ++fi)
            Gf[fi] = (*dummy_load)[st.free_dofs[static_cast<size_t>(fi)]];
        const Eigen::VectorXd vf = solver->solve(Gf);
        st.v = Eigen::VectorXd::Zero(n);
        for (int fi = 0; fi < nf; ++fi)
            st.v[st.free_dofs[static_cast<size_t>(fi)]] = vf[fi];
    }
    st.factorization = solver;
    return st;
}

double objective_value(ObjectiveKind kind, const SparseMat& K,
                       const Eigen::VectorXd& u, const Eigen::VectorXd& v,
                       double scale) {
    const Eigen::VectorXd Ku = K * u;
    const double uKu = u.dot(Ku);
    if (kind == ObjectiveKind::compliance)
        return scale * uKu;
    if (!(uKu > 0))
        throw DegenerateObjectiveError(
            "objective_value: strain energy is not positive; no load path to the supports");
    if (v.size() != u.size())
        throw std::invalid_argument("objective_value: mechanism objective needs the dummy solve");
    const double vKu = v.dot(Ku);
    return scale * (-vKu / uKu);
}

} // namespace pto
