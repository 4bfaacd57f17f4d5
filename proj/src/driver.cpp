#include "pto/driver.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <memory>
#include <stdexcept>

#include "pto/filter.hpp"
#include "pto/load_transfer.hpp"
#include "pto/mma.hpp"
#include "pto/sensitivity.hpp"

namespace pto {

namespace {

double l2_norm(const std::vector<double>& v) {
    double s = 0;
    for (double x : v)
        s += x * x;
    return std::sqrt(s);
}

double mean(const std::vector<double>& v) {
    double s = 0;
    for (double x : v)
        s += x;
    return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

struct ForwardState {
    std::vector<double> rho;
    PressureState pressure;
    ElasticState elastic;
    SparseMat K;
    Eigen::VectorXd F;
    double objective = 0;
    double delta = 0;
    std::array<double, 2> res{0, 0};
};

// One forward pass: filter, flow solve, load conversion, elastic solve(s),
// objective.  Factorization patterns are carried between calls when the
// caller keeps the shared_ptrs alive.
ForwardState forward(const Problem& pb, const DensityFilter& filter,
                     const ConversionMatrix& conv, const std::vector<double>& x,
                     std::shared_ptr<Eigen::SimplicialLDLT<SparseMat>>& flow_pattern,
                     std::shared_ptr<Eigen::SimplicialLDLT<SparseMat>>& stiff_pattern,
                     Diagnostics& diag) {
    ForwardState st;
    st.rho = filter.apply(x);
    const std::uint64_t h = hash_field(st.rho);

    const SparseMat A = assemble_flow(pb.mesh, st.rho, pb.darcy);
    ++diag.pressure_assemblies;
    st.pressure = solve_pressure(A, pb.mesh, pb.bc, h, flow_pattern);
    flow_pattern = st.pressure.factorization;
    diag.max_principle_violation =
        std::max(diag.max_principle_violation, st.pressure.max_principle_violation);

    st.F = nodal_forces(conv, st.pressure.p);
    st.res = resultant(st.F);

    st.K = assemble_stiffness(pb.mesh, st.rho, pb.material, pb.springs,
                              pb.bc.constrained_dofs());
    ++diag.stiffness_assemblies;
    const bool mech = pb.spec.objective == ObjectiveKind::compliant_mechanism;
    st.elastic = solve_displacement(st.K, pb.mesh, pb.bc.constrained_dofs(), st.F,
                                    mech ? &pb.dummy_load : nullptr, h, stiff_pattern);
    stiff_pattern = st.elastic.factorization;

    st.objective = objective_value(pb.spec.objective, st.K, st.elastic.u, st.elastic.v,
                                   pb.spec.objective_scale);
    st.delta = mech ? pb.output_displacement(st.elastic.u) : 0.0;
    return st;
}

} // namespace

std::vector<double> initial_design(const Problem& problem) {
    std::vector<double> x(static_cast<size_t>(problem.mesh.n_elems()),
                          problem.spec.volume_fraction);
    for (int e : problem.mesh.passive_elems)
        x[static_cast<size_t>(e)] = 0.0;
    return x;
}

Analysis analyze(const Problem& problem, const std::vector<double>& x) {
    const DensityFilter filter(problem.mesh, problem.r_min);
    const ConversionMatrix conv = assemble_conversion(problem.mesh);
    std::shared_ptr<Eigen::SimplicialLDLT<SparseMat>> fp, sp;
    Diagnostics diag;
    ForwardState st = forward(problem, filter, conv, x, fp, sp, diag);
    Analysis a;
    a.rho = std::move(st.rho);
    a.objective = st.objective;
    a.delta = st.delta;
    a.resultant = st.res;
    a.pressure = std::move(st.pressure);
    a.elastic = std::move(st.elastic);
    a.K = std::move(st.K);
    return a;
}

RunResult run(const Problem& problem, const RunOptions& options) {
    const Problem& pb = problem;
    const int n_elems = pb.mesh.n_elems();
    const bool mech = pb.spec.objective == ObjectiveKind::compliant_mechanism;
    const int iterations = options.iterations_override.value_or(pb.spec.iterations);

    const DensityFilter filter(pb.mesh, pb.r_min);
    const ConversionMatrix conv = assemble_conversion(pb.mesh);

    std::vector<int> active;
    active.reserve(static_cast<size_t>(n_elems));
    for (int e = 0; e < n_elems; ++e)
        if (!pb.mesh.is_passive(e))
            active.push_back(e);

    MmaOptimizer mma(static_cast<int>(active.size()), pb.spec.move_limit);

    RunResult result;
    result.x = initial_design(pb);
    if (options.initial_design) {
        if (options.initial_design->size() != static_cast<size_t>(n_elems))
            throw std::invalid_argument("initial_design size does not match element count");
        for (int e = 0; e < n_elems; ++e)
            if (!pb.mesh.is_passive(e))
                result.x[static_cast<size_t>(e)] =
                    std::clamp((*options.initial_design)[static_cast<size_t>(e)], 0.0, 1.0);
    }
    result.history.reserve(static_cast<size_t>(iterations));

    std::shared_ptr<Eigen::SimplicialLDLT<SparseMat>> flow_pattern, stiff_pattern;

    std::vector<double> xa(active.size()), dfa(active.size()), dga(active.size());
    const std::vector<double> dg_rho = volume_gradient(pb.mesh, pb.spec.volume_fraction);

    for (int it = 1; it <= iterations; ++it) {
        ForwardState st =
            forward(pb, filter, conv, result.x, flow_pattern, stiff_pattern, result.diag);

        const GradientReport grad =
            mech ? cm_gradient(pb.mesh, st.rho, pb.darcy, pb.material, conv, st.pressure,
                               st.elastic, st.K, pb.spec.objective_scale,
                               options.load_sensitivities)
                 : compliance_gradient(pb.mesh, st.rho, pb.darcy, pb.material, conv,
                                       st.pressure, st.elastic, st.K,
                                       pb.spec.objective_scale, options.load_sensitivities);
        result.diag.load_term_norm.push_back(l2_norm(grad.load_part));
        result.diag.elastic_term_norm.push_back(l2_norm(grad.elastic_part));

        const std::vector<double> df = filter.chain_rule(grad.total);
        const double g = volume_constraint(pb.mesh, st.rho, pb.spec.volume_fraction);
        const std::vector<double> dg = filter.chain_rule(dg_rho);

        for (size_t k = 0; k < active.size(); ++k) {
            const size_t e = static_cast<size_t>(active[k]);
            xa[k] = result.x[e];
            dfa[k] = df[e];
            dga[k] = dg[e];
        }
        const std::vector<double> xnew = mma.update(xa, dfa, g, dga);

        double max_dx = 0;
        for (size_t k = 0; k < active.size(); ++k) {
            const double dx = std::abs(xnew[k] - xa[k]);
            max_dx = std::max(max_dx, dx);
            if (xnew[k] < -1e-12 || xnew[k] > 1.0 + 1e-12 ||
                dx > pb.spec.move_limit + 1e-12)
                ++result.diag.mma_feasibility_violations;
            result.x[static_cast<size_t>(active[k])] = xnew[k];
        }

        result.history.push_back({it, st.objective, mean(st.rho), st.res[0], st.res[1],
                                  st.delta, max_dx});
        if (options.verbosity >= 1)
            std::printf("iter %4d  objective %14.6g  volume %.4f  g %+9.2e  max_dx %.4f\n",
                        it, st.objective, mean(st.rho), g, max_dx);
    }

    // Final analysis of the post-update design: this is what gets exported.
    ForwardState st =
        forward(pb, filter, conv, result.x, flow_pattern, stiff_pattern, result.diag);
    result.rho = std::move(st.rho);
    result.objective = st.objective;
    result.delta = st.delta;
    result.resultant = st.res;
    result.pressure = std::move(st.pressure);
    result.elastic = std::move(st.elastic);
    return result;
}

} // namespace pto
