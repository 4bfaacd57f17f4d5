#include "pto/darcy.hpp"

#include <cmath>
#include <cstring>
#include <stdexcept>
#include <string>

#include "pto/errors.hpp"

namespace pto {

namespace {

// Smoothed unit step used by both interpolants: rises from exactly 0 at
// rho = 0 to exactly 1 at rho = 1, with slope controlled by beta around eta.
void unit_step(double rho, double eta, double beta, double& s, double& ds) {
    const double denom = std::tanh(beta * eta) + std::tanh(beta * (1.0 - eta));
    s = (std::tanh(beta * eta) + std::tanh(beta * (rho - eta))) / denom;
    const double sech = 1.0 / std::cosh(beta * (rho - eta));
    ds = beta * sech * sech / denom;
}

void check_unit_interval(double rho, const char* what) {
    if (!(rho >= 0.0 && rho <= 1.0))
        throw std::invalid_argument(std::string(what) + ": density " + std::to_string(rho) +
                                    " outside [0,1]");
}

} // namespace

DarcyModel::DarcyModel(double k_v_, double k_s_, double eta_k_, double beta_k_,
                       double eta_h_, double beta_h_, double r_, double delta_s_,
                       double p_out_)
    : k_v(k_v_), k_s(k_s_), eta_k(eta_k_), beta_k(beta_k_), eta_h(eta_h_),
      beta_h(beta_h_), r(r_), delta_s(delta_s_), p_out(p_out_) {
    if (!(k_v > 0) || !(k_s > 0) || !(k_v > k_s))
        throw std::invalid_argument("DarcyModel: need k_v > k_s > 0");
    if (!(eta_k > 0 && eta_k < 1) || !(eta_h > 0 && eta_h < 1))
        throw std::invalid_argument("DarcyModel: step locations eta must lie in (0,1)");
    if (!(beta_k > 0) || !(beta_h > 0))
        throw std::invalid_argument("DarcyModel: step slopes beta must be positive");
    if (!(r > 0 && r < 1))
        throw std::invalid_argument("DarcyModel: remaining fraction r must lie in (0,1)");
    if (!(delta_s > 0))
        throw std::invalid_argument("DarcyModel: penetration depth delta_s must be positive");
    const double lr = std::log(r) / delta_s;
    h_s = lr * lr * k_s;
}

void DarcyModel::flow_coefficient(double rho, double& K, double& dK) const {
    check_unit_interval(rho, "flow_coefficient");
    double s, ds;
    unit_step(rho, eta_k, beta_k, s, ds);
    // Convex-combination form so K(0) = k_v and K(1) = k_s are bit-exact
    // (k_v - (k_v - k_s)*s would miss k_s by the subtraction's rounding).
    K = k_v * (1.0 - s) + k_s * s;
    dK = -(k_v - k_s) * ds;
}

void DarcyModel::drainage_coefficient(double rho, double& H, double& dH) const {
    check_unit_interval(rho, "drainage_coefficient");
    double s, ds;
    unit_step(rho, eta_h, beta_h, s, ds);
    H = h_s * s;
    dH = h_s * ds;
}

Eigen::Matrix4d flow_laplacian_matrix(double a, double b, double t) {
    // Closed form of integral(grad N^T grad N) over an a-by-b rectangle,
    // split into the d/dx part (SX) and the d/dy part (SY).  Integer
    // stencils keep row sums exactly zero in floating point, which in turn
    // keeps constant pressure fields exactly force-free downstream.
    static const double SX[4][4] = {{2, -2, -1, 1}, {-2, 2, 1, -1}, {-1, 1, 2, -2}, {1, -1, -2, 2}};
    static const double SY[4][4] = {{2, 1, -1, -2}, {1, 2, -2, -1}, {-1, -2, 2, 1}, {-2, -1, 1, 2}};
    const double cx = b * t / (6.0 * a);
    const double cy = a * t / (6.0 * b);
    Eigen::Matrix4d L;
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j)
            L(i, j) = cx * SX[i][j] + cy * SY[i][j];
    return L;
}

Eigen::Matrix4d flow_mass_matrix(double a, double b, double t) {
    static const double M[4][4] = {{4, 2, 1, 2}, {2, 4, 2, 1}, {1, 2, 4, 2}, {2, 1, 2, 4}};
    const double c = a * b * t / 36.0;
    Eigen::Matrix4d Mm;
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j)
            Mm(i, j) = c * M[i][j];
    return Mm;
}

SparseMat assemble_flow(const Mesh& mesh, const std::vector<double>& rho,
                        const DarcyModel& model) {
    if (static_cast<int>(rho.size()) != mesh.n_elems())
        throw std::invalid_argument("assemble_flow: density size mismatch");

    const Eigen::Matrix4d L = flow_laplacian_matrix(mesh.dx, mesh.dy, mesh.thickness);
    const Eigen::Matrix4d M = flow_mass_matrix(mesh.dx, mesh.dy, mesh.thickness);

    std::vector<Eigen::Triplet<double>> trips;
    trips.reserve(static_cast<size_t>(mesh.n_elems()) * 16);
    for (int e = 0; e < mesh.n_elems(); ++e) {
        double K, dK, H, dH;
        model.flow_coefficient(rho[static_cast<size_t>(e)], K, dK);
        model.drainage_coefficient(rho[static_cast<size_t>(e)], H, dH);
        const auto& conn = mesh.elem_conn[static_cast<size_t>(e)];
        for (int i = 0; i < 4; ++i)
            for (int j = 0; j < 4; ++j)
                trips.emplace_back(conn[static_cast<size_t>(i)], conn[static_cast<size_t>(j)],
                                   K * L(i, j) + H * M(i, j));
    }
    SparseMat A(mesh.n_nodes(), mesh.n_nodes());
    A.setFromTriplets(trips.begin(), trips.end());
    return A;
}

Eigen::VectorXd assemble_drainage_rhs(const Mesh& mesh, const std::vector<double>& rho,
                                      const DarcyModel& model) {
    if (static_cast<int>(rho.size()) != mesh.n_elems())
        throw std::invalid_argument("assemble_drainage_rhs: density size mismatch");
    Eigen::VectorXd f = Eigen::VectorXd::Zero(mesh.n_nodes());
    if (model.p_out == 0.0)
        return f;
    const Eigen::Matrix4d M = flow_mass_matrix(mesh.dx, mesh.dy, mesh.thickness);
    const Eigen::Vector4d Mrow = M * Eigen::Vector4d::Ones();
    for (int e = 0; e < mesh.n_elems(); ++e) {
        double H, dH;
        model.drainage_coefficient(rho[static_cast<size_t>(e)], H, dH);
        const auto& conn = mesh.elem_conn[static_cast<size_t>(e)];
        for (int i = 0; i < 4; ++i)
            f[conn[static_cast<size_t>(i)]] += H * model.p_out * Mrow(i);
    }
    return f;
}

PressureState solve_pressure(const SparseMat& A, const Mesh& mesh, const BoundarySpec& bc,
                             std::uint64_t design_hash,
                             std::shared_ptr<Eigen::SimplicialLDLT<SparseMat>> reuse_pattern,
                             const Eigen::VectorXd* rhs) {
    const int n = mesh.n_nodes();
    PressureState st;
    st.design_hash = design_hash;
    st.free_index.assign(static_cast<size_t>(n), 0);
    st.p = Eigen::VectorXd::Zero(n);

    double p_lo = 0, p_hi = 0;
    bool have_prescribed = false;
    for (const auto& pbc : bc.pressure_dirichlet) {
        for (int node : pbc.nodes) {
            st.free_index[static_cast<size_t>(node)] = -1;
            st.p[node] = pbc.value;
        }
        if (!pbc.nodes.empty()) {
            if (!have_prescribed) {
                p_lo = p_hi = pbc.value;
                have_prescribed = true;
            } else {
                p_lo = std::min(p_lo, pbc.value);
                p_hi = std::max(p_hi, pbc.value);
            }
        }
    }
    if (!have_prescribed)
        throw SingularSystemError("solve_pressure: no pressure Dirichlet nodes; "
                                  "the flow problem is singular");

    for (int node = 0; node < n; ++node)
        if (st.free_index[static_cast<size_t>(node)] == 0) {
            st.free_index[static_cast<size_t>(node)] = static_cast<int>(st.free_nodes.size());
            st.free_nodes.push_back(node);
        }
    const int nf = static_cast<int>(st.free_nodes.size());

    // Reduced system A_ff p_f = f_f - A_fp p_p, built column-wise from A.
    std::vector<Eigen::Triplet<double>> trips;
    Eigen::VectorXd b = Eigen::VectorXd::Zero(nf);
    if (rhs)
        for (int fi = 0; fi < nf; ++fi)
            b[fi] = (*rhs)[st.free_nodes[static_cast<size_t>(fi)]];
    for (int col = 0; col < A.outerSize(); ++col) {
        const int cj = st.free_index[static_cast<size_t>(col)];
        for (SparseMat::InnerIterator it(A, col); it; ++it) {
            const int ri = st.free_index[static_cast<size_t>(it.row())];
            if (ri < 0)
                continue;
            if (cj >= 0)
                trips.emplace_back(ri, cj, it.value());
            else
                b[ri] -= it.value() * st.p[col];
        }
    }
    SparseMat Aff(nf, nf);
    Aff.setFromTriplets(trips.begin(), trips.end());

    auto solver = reuse_pattern;
    if (!solver) {
        solver = std::make_shared<Eigen::SimplicialLDLT<SparseMat>>();
        solver->analyzePattern(Aff);
    }
    solver->factorize(Aff);
    if (solver->info() != Eigen::Success)
        throw SingularSystemError("solve_pressure: factorization of the reduced flow matrix failed");
    const Eigen::VectorXd pf = solver->solve(b);

    for (int fi = 0; fi < nf; ++fi)
        st.p[st.free_nodes[static_cast<size_t>(fi)]] = pf[fi];
    st.factorization = solver;

    // Discrete maximum-principle diagnostic: interior values should stay
    // inside the prescribed range (drainage relaxes toward p_out = 0, so the
    // lower bound includes it).
    const double lo = std::min(p_lo, 0.0), hi = std::max(p_hi, 0.0);
    double viol = 0;
    for (int fi = 0; fi < nf; ++fi) {
        const double v = pf[fi];
        if (v < lo)
            viol = std::max(viol, lo - v);
        else if (v > hi)
            viol = std::max(viol, v - hi);
    }
    st.max_principle_violation = viol;
    return st;
}

std::uint64_t hash_field(const std::vector<double>& rho) {
    std::uint64_t h = 1469598103934665603ull; // FNV offset basis
    for (double v : rho) {
        std::uint64_t bits;
        std::memcpy(&bits, &v, sizeof bits);
        for (int k = 0; k < 8; ++k) {
            h ^= (bits >> (8 * k)) & 0xffu;
            h *= 1099511628211ull; // FNV prime
        }
    }
    return h;
}

} // namespace pto
