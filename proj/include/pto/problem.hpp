// Declarative problem descriptions: the JSON config schema, its validation,
// and the assembly of a runnable Problem (mesh + boundary conditions +
// models) from a spec.
//
// Configs are strict: unknown keys are rejected and every diagnostic carries
// the offending field path.  Geometry is described by domain-edge spans,
// points, and boxes; they are resolved against the mesh with a tolerance of
// half the smallest element edge, and selections that come up empty for
// load-bearing roles (pressure inlet, supports, output port) are config
// errors.
#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "pto/darcy.hpp"
#include "pto/elasticity.hpp"
#include "pto/mesh.hpp"

namespace pto {

// A span of one domain edge.  For "bottom"/"top" the optional clip bounds
// apply to x, for "left"/"right" to y; absent bounds mean the full edge.
struct EdgeSpan {
    std::string edge; // "bottom" | "top" | "left" | "right"
    double lo = 0, hi = 0;
    bool has_lo = false, has_hi = false;
};

// A displacement constraint: an edge span or a single point, restraining
// both components or just one (rollers on symmetry lines).
struct SupportSpec {
    std::optional<EdgeSpan> span;
    std::optional<std::array<double, 2>> point;
    std::string components = "both"; // "both" | "x" | "y"
};

// Mechanism output port: node position, unit direction of desired motion,
// and the workpiece spring attached along that direction.
struct OutputSpec {
    std::array<double, 2> node{};
    std::array<double, 2> direction{};
    double spring = 0; // N/m
};

struct ProblemSpec {
    std::string name;

    int nx = 0, ny = 0;
    double Lx = 0, Ly = 0, thickness = 0;

    double E0 = 0, E_min = 0, zeta = 0, nu = 0;

    double k_v = 0, k_s = 0, eta_k = 0, beta_k = 0, eta_h = 0, beta_h = 0;
    double r = 0, delta_s = 0;

    double p_in = 0;
    std::vector<EdgeSpan> pressure_inlet;
    std::vector<EdgeSpan> pressure_zero;

    std::vector<SupportSpec> supports;

    ObjectiveKind objective = ObjectiveKind::compliance;
    double objective_scale = 10000.0;

    double volume_fraction = 0;
    int iterations = 0;
    double move_limit = 0.1;

    double radius_multiplier = 0; // r_min = multiplier * min(Lx/nx, Ly/ny)

    std::optional<OutputSpec> output;
    std::vector<Box> passive_boxes;
};

// Parses and validates a config file.  Throws ConfigError with the field
// path on parse errors, unknown keys, missing keys, or invalid values.
ProblemSpec load_config(const std::string& path);

// Same, from a JSON string (used by the sweep machinery and tests).
ProblemSpec parse_config(const std::string& json_text, const std::string& origin);

// A runnable problem: spec plus everything resolved against the mesh.
struct Problem {
    ProblemSpec spec;
    Mesh mesh;
    BoundarySpec bc;
    DarcyModel darcy;
    MaterialModel material;
    std::vector<Spring> springs;
    Eigen::VectorXd dummy_load; // zero-size unless compliant_mechanism
    double r_min = 0;           // resolved filter radius (m)

    // Signed output displacement along the desired direction (m).
    double output_displacement(const Eigen::VectorXd& u) const;
};

// Resolves the geometry and constructs the models.  Throws ConfigError when
// mandatory selections are empty or models reject their parameters.
Problem build_problem(const ProblemSpec& spec);

} // namespace pto
