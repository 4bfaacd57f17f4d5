#include "pto/mma.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>

#include "pto/errors.hpp"

namespace pto {

namespace {

using Arr = Eigen::ArrayXd;

// Scheme constants.
constexpr double kAsyInit = 0.5;
constexpr double kAsyIncr = 1.2;
constexpr double kAsyDecr = 0.7;
constexpr double kAlbefa = 0.1;
constexpr double kRaa0 = 1e-5;
constexpr double kA0 = 1.0;
constexpr double kA = 0.0;    // constraint's linear z coefficient
// Constraint-violation penalty.  Must dominate the constraint's true
// Lagrange multiplier or the subproblem treats the constraint as soft and
// converged designs can sit outside it; with the x1e4-scaled objectives the
// multiplier of an active volume constraint reaches the 1e3..1e4 decade on
// coarse meshes, so the usual 1000 is not enough headroom.
constexpr double kC = 1e4;
constexpr double kD = 1.0;
constexpr double kEpsiMin = 1e-9;

// Interior-point state of the dual subproblem (m = 1 constraint, so the
// constraint-side quantities are scalars).
struct IpState {
    Arr x, xsi, eta;
    double y, z, lam, mu, zet, s;
};

struct Residual {
    double norm2 = 0; // squared two-norm
    double max = 0;
};

struct SubProblem {
    Arr low, upp, alfa, beta, p0, q0, P, Q;
    double b;
};

Residual residuals(const SubProblem& sp, const IpState& st, double epsi) {
    const Arr ux1 = sp.upp - st.x;
    const Arr xl1 = st.x - sp.low;
    const Arr plam = sp.p0 + st.lam * sp.P;
    const Arr qlam = sp.q0 + st.lam * sp.Q;
    const double gvec = (sp.P / ux1).sum() + (sp.Q / xl1).sum();

    const Arr rex = plam / ux1.square() - qlam / xl1.square() - st.xsi + st.eta;
    const double rey = kC + kD * st.y - st.mu - st.lam;
    const double rez = kA0 - st.zet - kA * st.lam;
    const double relam = gvec - kA * st.z - st.y + st.s - sp.b;
    const Arr rexsi = st.xsi * (st.x - sp.alfa) - epsi;
    const Arr reeta = st.eta * (sp.beta - st.x) - epsi;
    const double remu = st.mu * st.y - epsi;
    const double rezet = st.zet * st.z - epsi;
    const double res = st.lam * st.s - epsi;

    Residual r;
    r.norm2 = rex.square().sum() + rexsi.square().sum() + reeta.square().sum() +
              rey * rey + rez * rez + relam * relam + remu * remu + rezet * rezet + res * res;
    r.max = std::max({rex.abs().maxCoeff(), rexsi.abs().maxCoeff(), reeta.abs().maxCoeff(),
                      std::abs(rey), std::abs(rez), std::abs(relam), std::abs(remu),
                      std::abs(rezet), std::abs(res)});
    return r;
}

// Primal-dual Newton solve of the separable subproblem to KKT tolerance.
Arr subsolve(const SubProblem& sp) {
    IpState st;
    st.x = 0.5 * (sp.alfa + sp.beta);
    st.xsi = (1.0 / (st.x - sp.alfa)).max(1.0);
    st.eta = (1.0 / (sp.beta - st.x)).max(1.0);
    st.y = 1.0;
    st.z = 1.0;
    st.lam = 1.0;
    st.mu = std::max(1.0, 0.5 * kC);
    st.zet = 1.0;
    st.s = 1.0;

    double epsi = 1.0;
    while (epsi > kEpsiMin) {
        Residual r = residuals(sp, st, epsi);
        double residunorm = std::sqrt(r.norm2);
        int ittt = 0;
        while (r.max > 0.9 * epsi && ittt < 500) {
            ++ittt;
            const Arr ux1 = sp.upp - st.x;
            const Arr xl1 = st.x - sp.low;
            const Arr ux2 = ux1.square();
            const Arr xl2 = xl1.square();
            const Arr plam = sp.p0 + st.lam * sp.P;
            const Arr qlam = sp.q0 + st.lam * sp.Q;
            const double gvec = (sp.P / ux1).sum() + (sp.Q / xl1).sum();
            const Arr GG = sp.P / ux2 - sp.Q / xl2; // row vector of constraint derivatives

            const Arr dpsidx = plam / ux2 - qlam / xl2;
            const Arr delx = dpsidx - epsi / (st.x - sp.alfa) + epsi / (sp.beta - st.x);
            const double dely = kC + kD * st.y - st.lam - epsi / st.y;
            const double delz = kA0 - kA * st.lam - epsi / st.z;
            const double dellam = gvec - kA * st.z - st.y - sp.b + epsi / st.lam;

            Arr diagx = plam / (ux2 * ux1) + qlam / (xl2 * xl1);
            diagx = 2.0 * diagx + st.xsi / (st.x - sp.alfa) + st.eta / (sp.beta - st.x);
            const double diagy = kD + st.mu / st.y;
            const double diaglamyi = st.s / st.lam + 1.0 / diagy;

            // Dense 2x2 system in (dlam, dz); everything else eliminates.
            const double blam = dellam + dely / diagy - (GG * delx / diagx).sum();
            const double alam = diaglamyi + (GG.square() / diagx).sum();
            const double a22 = -st.zet / st.z;
            const double det = alam * a22 - kA * kA;
            const double dlam = (blam * a22 - kA * delz) / det;
            const double dz = (alam * delz - kA * blam) / det;
            const Arr dx = -delx / diagx - dlam * GG / diagx;

            const double dy = -dely / diagy + dlam / diagy;
            const Arr dxsi = -st.xsi + epsi / (st.x - sp.alfa) - st.xsi * dx / (st.x - sp.alfa);
            const Arr deta = -st.eta + epsi / (sp.beta - st.x) + st.eta * dx / (sp.beta - st.x);
            const double dmu = -st.mu + epsi / st.y - st.mu * dy / st.y;
            const double dzet = -st.zet + epsi / st.z - st.zet * dz / st.z;
            const double ds = -st.s + epsi / st.lam - st.s * dlam / st.lam;

            // Step length keeping every positive quantity positive.
            double stm = 1.0;
            stm = std::max(stm, (-1.01 * dxsi / st.xsi).maxCoeff());
            stm = std::max(stm, (-1.01 * deta / st.eta).maxCoeff());
            stm = std::max(stm, (-1.01 * dx / (st.x - sp.alfa)).maxCoeff());
            stm = std::max(stm, (1.01 * dx / (sp.beta - st.x)).maxCoeff());
            stm = std::max({stm, -1.01 * dy / st.y, -1.01 * dz / st.z, -1.01 * dlam / st.lam,
                            -1.01 * dmu / st.mu, -1.01 * dzet / st.zet, -1.01 * ds / st.s});
            double steg = 1.0 / stm;

            const IpState old = st;
            const double residunorm_prev = residunorm;
            Residual rnew;
            rnew.norm2 = 4.0 * r.norm2; // force at least one evaluation
            int itto = 0;
            while (std::sqrt(rnew.norm2) > residunorm && itto < 50) {
                ++itto;
                st.x = old.x + steg * dx;
                st.xsi = old.xsi + steg * dxsi;
                st.eta = old.eta + steg * deta;
                st.y = old.y + steg * dy;
                st.z = old.z + steg * dz;
                st.lam = old.lam + steg * dlam;
                st.mu = old.mu + steg * dmu;
                st.zet = old.zet + steg * dzet;
                st.s = old.s + steg * ds;
                rnew = residuals(sp, st, epsi);
                steg /= 2.0;
            }
            r = rnew;
            residunorm = std::sqrt(r.norm2);
            if (!std::isfinite(residunorm))
                throw IterationLimitError("MmaOptimizer: subproblem residual became non-finite");
            if (itto >= 50 && residunorm >= residunorm_prev) {
                // Numerical floor: no fraction of the Newton step improves the
                // KKT residual, so tighter tolerances are unreachable in double
                // precision.  Keep the pre-step state and accept this level.
                st = old;
                r = residuals(sp, st, epsi);
                break;
            }
        }
        // Strongly scaled gradients can leave the absolute KKT tolerance out
        // of reach at the smallest barrier levels; the iterate is interior
        // and feasible regardless, so it is accepted rather than aborted on.
        epsi *= 0.1;
    }
    return st.x;
}

} // namespace

MmaOptimizer::MmaOptimizer(int n, double move_limit) : n_(n), move_(move_limit) {
    if (n < 1)
        throw std::invalid_argument("MmaOptimizer: need at least one design variable");
    if (!(move_limit > 0 && move_limit <= 1))
        throw std::invalid_argument("MmaOptimizer: move limit must lie in (0,1]");
}

std::vector<double> MmaOptimizer::update(const std::vector<double>& x,
                                         const std::vector<double>& df0,
                                         double g, const std::vector<double>& dg) {
    if (static_cast<int>(x.size()) != n_ || static_cast<int>(df0.size()) != n_ ||
        static_cast<int>(dg.size()) != n_)
        throw std::invalid_argument("MmaOptimizer::update: size mismatch");
    for (int i = 0; i < n_; ++i)
        if (!std::isfinite(x[static_cast<size_t>(i)]) ||
            !std::isfinite(df0[static_cast<size_t>(i)]) ||
            !std::isfinite(dg[static_cast<size_t>(i)]))
            throw std::invalid_argument("MmaOptimizer::update: non-finite input");
    if (!std::isfinite(g))
        throw std::invalid_argument("MmaOptimizer::update: non-finite constraint value");

    ++iter_;
    const Eigen::Map<const Arr> xv(x.data(), n_);
    const Eigen::Map<const Arr> df0v(df0.data(), n_);
    const Eigen::Map<const Arr> dgv(dg.data(), n_);

    // Bounds are fixed at [0,1]: densities.
    const double xrange = 1.0;

    Arr low, upp;
    if (iter_ < 3) {
        low = xv - kAsyInit * xrange;
        upp = xv + kAsyInit * xrange;
    } else {
        const Eigen::Map<const Arr> x1(xold1_.data(), n_);
        const Eigen::Map<const Arr> x2(xold2_.data(), n_);
        const Eigen::Map<const Arr> lowold(low_.data(), n_);
        const Eigen::Map<const Arr> uppold(upp_.data(), n_);
        const Arr osc = (xv - x1) * (x1 - x2);
        Arr factor = Arr::Ones(n_);
        for (int i = 0; i < n_; ++i)
            factor[i] = osc[i] > 0 ? kAsyIncr : (osc[i] < 0 ? kAsyDecr : 1.0);
        low = xv - factor * (x1 - lowold);
        upp = xv + factor * (uppold - x1);
        low = low.max(xv - 10.0 * xrange).min(xv - 0.01 * xrange);
        upp = upp.min(xv + 10.0 * xrange).max(xv + 0.01 * xrange);
    }

    SubProblem sp;
    sp.low = low;
    sp.upp = upp;
    sp.alfa = (low + kAlbefa * (xv - low)).max(xv - move_ * xrange).max(0.0);
    sp.beta = (upp - kAlbefa * (upp - xv)).min(xv + move_ * xrange).min(1.0);

    const Arr ux2 = (upp - xv).square();
    const Arr xl2 = (xv - low).square();
    {
        const Arr dfp = df0v.max(0.0);
        const Arr dfm = (-df0v).max(0.0);
        const Arr pq = 0.001 * (dfp + dfm) + kRaa0 / xrange;
        sp.p0 = (dfp + pq) * ux2;
        sp.q0 = (dfm + pq) * xl2;
    }
    {
        const Arr dgp = dgv.max(0.0);
        const Arr dgm = (-dgv).max(0.0);
        const Arr pq = 0.001 * (dgp + dgm) + kRaa0 / xrange;
        sp.P = (dgp + pq) * ux2;
        sp.Q = (dgm + pq) * xl2;
    }
    sp.b = (sp.P / (upp - xv)).sum() + (sp.Q / (xv - low)).sum() - g;

    const Arr xnew = subsolve(sp);

    xold2_ = (iter_ >= 2) ? xold1_ : x;
    xold1_ = x;
    low_.assign(low.data(), low.data() + n_);
    upp_.assign(upp.data(), upp.data() + n_);

    return std::vector<double>(xnew.data(), xnew.data() + n_);
}

} // namespace pto
