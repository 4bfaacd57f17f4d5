// The outer optimization loop and single-shot analysis.
//
// Every iteration runs the nested sequence: filter the design, solve the
// pressure field on it, convert pressures to nodal forces, solve the
// elastic state(s), evaluate objective and adjoint gradients, map them
// through the filter chain rule, and take one MMA step on the active
// (non-passive) variables.  A final analysis after the last update produces
// the exported fields.  Everything is deterministic: identical specs yield
// identical histories.
#pragma once

#include <array>
#include <optional>
#include <vector>

#include "pto/problem.hpp"

namespace pto {

struct RunOptions {
    std::optional<int> iterations_override;
    bool load_sensitivities = true; // false reproduces the ablation studies
    int verbosity = 0;              // >=1 prints a line per iteration

    // Warm start: element densities to use instead of the uniform field.
    // Must have one entry per element; passive entries are overridden.
    std::optional<std::vector<double>> initial_design;
};

struct HistoryRow {
    int iter;         // 1-based
    double objective; // scaled objective at this iterate
    double volume;    // V(rho)/V_total
    double Fx, Fy;    // resultant nodal pressure force (N)
    double delta;     // output displacement (m); 0 for compliance problems
    double max_dx;    // max |x_new - x| of the MMA step taken this iteration
};

// Instrumentation for the property and ablation checks.
struct Diagnostics {
    std::vector<double> load_term_norm;    // L2 of load-sensitivity part per iteration
    std::vector<double> elastic_term_norm; // L2 of the remaining gradient per iteration
    int pressure_assemblies = 0;
    int stiffness_assemblies = 0;
    int mma_feasibility_violations = 0;    // bound/move-limit violations (should stay 0)
    double max_principle_violation = 0;    // worst pressure bound violation seen (Pa)
};

struct RunResult {
    std::vector<double> x;   // final design variables
    std::vector<double> rho; // final filtered densities
    std::vector<HistoryRow> history;

    // Final analysis (computed on the post-update design):
    double objective = 0;
    double delta = 0;
    std::array<double, 2> resultant{0, 0};
    PressureState pressure;
    ElasticState elastic;

    Diagnostics diag;
};

RunResult run(const Problem& problem, const RunOptions& options = {});

// One forward analysis of a given design; shared by the run loop, the
// finite-difference oracle, and the tests.
struct Analysis {
    std::vector<double> rho;
    double objective = 0;
    double delta = 0;
    std::array<double, 2> resultant{0, 0};
    PressureState pressure;
    ElasticState elastic;
    SparseMat K;
};
Analysis analyze(const Problem& problem, const std::vector<double>& x);

// Uniform initial design at the volume fraction (passive elements at 0).
std::vector<double> initial_design(const Problem& problem);

} // namespace pto
