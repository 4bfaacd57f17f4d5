#include "pto/problem.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "pto/errors.hpp"

namespace pto {

namespace {

using nlohmann::json;

struct Ctx {
    std::string origin;
};

[[noreturn]] void fail(const Ctx& c, const std::string& path, const std::string& msg) {
    throw ConfigError(c.origin + ": " + path + ": " + msg);
}

std::string join(const std::string& path, const std::string& key) {
    return path.empty() ? key : path + "." + key;
}

void check_keys(const Ctx& c, const json& obj, const std::string& path,
                std::initializer_list<const char*> allowed) {
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        bool ok = false;
        for (const char* k : allowed)
            if (it.key() == k) {
                ok = true;
                break;
            }
        if (!ok)
            fail(c, join(path, it.key()), "unknown key");
    }
}

const json* find(const json& obj, const char* key) {
    auto it = obj.find(key);
    return it == obj.end() ? nullptr : &*it;
}

const json& req_obj(const Ctx& c, const json& obj, const std::string& path, const char* key) {
    const json* v = find(obj, key);
    if (!v)
        fail(c, join(path, key), "missing required object");
    if (!v->is_object())
        fail(c, join(path, key), "expected an object");
    return *v;
}

double req_num(const Ctx& c, const json& obj, const std::string& path, const char* key) {
    const json* v = find(obj, key);
    if (!v)
        fail(c, join(path, key), "missing required number");
    if (!v->is_number())
        fail(c, join(path, key), "expected a number");
    return v->get<double>();
}

double opt_num(const Ctx& c, const json& obj, const std::string& path, const char* key,
               double fallback) {
    const json* v = find(obj, key);
    if (!v)
        return fallback;
    if (!v->is_number())
        fail(c, join(path, key), "expected a number");
    return v->get<double>();
}

int req_int(const Ctx& c, const json& obj, const std::string& path, const char* key) {
    const json* v = find(obj, key);
    if (!v)
        fail(c, join(path, key), "missing required integer");
    if (!v->is_number_integer())
        fail(c, join(path, key), "expected an integer");
    return v->get<int>();
}

std::string req_str(const Ctx& c, const json& obj, const std::string& path, const char* key) {
    const json* v = find(obj, key);
    if (!v)
        fail(c, join(path, key), "missing required string");
    if (!v->is_string())
        fail(c, join(path, key), "expected a string");
    return v->get<std::string>();
}

std::array<double, 2> req_pair(const Ctx& c, const json& obj, const std::string& path,
                               const char* key) {
    const json* v = find(obj, key);
    if (!v)
        fail(c, join(path, key), "missing required [x, y] pair");
    if (!v->is_array() || v->size() != 2 || !(*v)[0].is_number() || !(*v)[1].is_number())
        fail(c, join(path, key), "expected an array of two numbers");
    return {(*v)[0].get<double>(), (*v)[1].get<double>()};
}

// Reads edge/from/to out of an object whose keys are already vetted.
EdgeSpan span_fields(const Ctx& c, const json& j, const std::string& path) {
    EdgeSpan s;
    s.edge = req_str(c, j, path, "edge");
    if (s.edge != "bottom" && s.edge != "top" && s.edge != "left" && s.edge != "right")
        fail(c, join(path, "edge"), "must be one of bottom/top/left/right");
    if (const json* v = find(j, "from")) {
        if (!v->is_number())
            fail(c, join(path, "from"), "expected a number");
        s.lo = v->get<double>();
        s.has_lo = true;
    }
    if (const json* v = find(j, "to")) {
        if (!v->is_number())
            fail(c, join(path, "to"), "expected a number");
        s.hi = v->get<double>();
        s.has_hi = true;
    }
    if (s.has_lo && s.has_hi && s.lo > s.hi)
        fail(c, path, "'from' exceeds 'to'");
    return s;
}

EdgeSpan parse_span(const Ctx& c, const json& j, const std::string& path) {
    if (!j.is_object())
        fail(c, path, "expected an object");
    check_keys(c, j, path, {"edge", "from", "to"});
    return span_fields(c, j, path);
}

std::vector<EdgeSpan> parse_span_list(const Ctx& c, const json& obj, const std::string& path,
                                      const char* key, bool required) {
    const json* v = find(obj, key);
    if (!v) {
        if (required)
            fail(c, join(path, key), "missing required list of edge spans");
        return {};
    }
    if (!v->is_array())
        fail(c, join(path, key), "expected a list of edge spans");
    std::vector<EdgeSpan> spans;
    for (size_t i = 0; i < v->size(); ++i)
        spans.push_back(parse_span(c, (*v)[i], join(path, key) + "[" + std::to_string(i) + "]"));
    if (required && spans.empty())
        fail(c, join(path, key), "must not be empty");
    return spans;
}

} // namespace

ProblemSpec parse_config(const std::string& json_text, const std::string& origin) {
    Ctx c{origin};
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw ConfigError(origin + ": " + e.what());
    }
    if (!j.is_object())
        fail(c, "", "top level must be an object");
    check_keys(c, j, "",
               {"name", "mesh", "material", "darcy", "pressure", "supports", "objective",
                "optimizer", "filter", "output", "passive"});

    ProblemSpec s;

    s.name = req_str(c, j, "", "name");
    if (s.name.empty() || s.name.find('/') != std::string::npos)
        fail(c, "name", "must be a non-empty string without '/'");

    {
        const json& mesh = req_obj(c, j, "", "mesh");
        check_keys(c, mesh, "mesh", {"nx", "ny", "Lx", "Ly", "thickness"});
        s.nx = req_int(c, mesh, "mesh", "nx");
        s.ny = req_int(c, mesh, "mesh", "ny");
        if (s.nx < 1 || s.ny < 1)
            fail(c, "mesh", "element counts must be >= 1");
        s.Lx = req_num(c, mesh, "mesh", "Lx");
        s.Ly = req_num(c, mesh, "mesh", "Ly");
        s.thickness = req_num(c, mesh, "mesh", "thickness");
        if (!(s.Lx > 0) || !(s.Ly > 0) || !(s.thickness > 0))
            fail(c, "mesh", "dimensions must be positive");
    }

    {
        // Material defaults: structural steel-like polymer from the bundled
        // problem library; E_min tracks E0 when not given.
        json empty = json::object();
        const json* mat = find(j, "material");
        if (mat && !mat->is_object())
            fail(c, "material", "expected an object");
        const json& m = mat ? *mat : empty;
        check_keys(c, m, "material", {"E0", "E_min", "zeta", "nu"});
        s.E0 = opt_num(c, m, "material", "E0", 3e9);
        s.E_min = opt_num(c, m, "material", "E_min", s.E0 * 1e-5);
        s.zeta = opt_num(c, m, "material", "zeta", 3.0);
        s.nu = opt_num(c, m, "material", "nu", 0.4);
    }

    {
        json empty = json::object();
        const json* d = find(j, "darcy");
        if (d && !d->is_object())
            fail(c, "darcy", "expected an object");
        const json& m = d ? *d : empty;
        check_keys(c, m, "darcy",
                   {"k_v", "k_s", "eta_k", "beta_k", "eta_h", "beta_h", "r", "delta_s"});
        s.k_v = opt_num(c, m, "darcy", "k_v", 1e-3);
        s.k_s = opt_num(c, m, "darcy", "k_s", 1e-10);
        s.eta_k = opt_num(c, m, "darcy", "eta_k", 0.4);
        s.beta_k = opt_num(c, m, "darcy", "beta_k", 10.0);
        s.eta_h = opt_num(c, m, "darcy", "eta_h", 0.6);
        s.beta_h = opt_num(c, m, "darcy", "beta_h", 10.0);
        s.r = opt_num(c, m, "darcy", "r", 0.1);
        s.delta_s = opt_num(c, m, "darcy", "delta_s", 0.002);
    }

    {
        const json& p = req_obj(c, j, "", "pressure");
        check_keys(c, p, "pressure", {"p_in", "inlet", "zero"});
        s.p_in = opt_num(c, p, "pressure", "p_in", 1e5);
        if (!(s.p_in > 0))
            fail(c, "pressure.p_in", "must be positive");
        s.pressure_inlet = parse_span_list(c, p, "pressure", "inlet", true);
        s.pressure_zero = parse_span_list(c, p, "pressure", "zero", false);
    }

    {
        const json* v = find(j, "supports");
        if (!v || !v->is_array() || v->empty())
            fail(c, "supports", "missing required non-empty list");
        for (size_t i = 0; i < v->size(); ++i) {
            const std::string path = "supports[" + std::to_string(i) + "]";
            const json& sj = (*v)[i];
            if (!sj.is_object())
                fail(c, path, "expected an object");
            check_keys(c, sj, path, {"edge", "from", "to", "point", "components"});
            SupportSpec sup;
            const bool has_point = find(sj, "point") != nullptr;
            const bool has_edge = find(sj, "edge") != nullptr;
            if (has_point == has_edge)
                fail(c, path, "needs exactly one of 'edge' or 'point'");
            if (has_point) {
                sup.point = req_pair(c, sj, path, "point");
                if (find(sj, "from") || find(sj, "to"))
                    fail(c, path, "'from'/'to' only apply to edge supports");
            } else {
                sup.span = span_fields(c, sj, path);
            }
            if (const json* comp = find(sj, "components")) {
                if (!comp->is_string())
                    fail(c, join(path, "components"), "expected a string");
                sup.components = comp->get<std::string>();
                if (sup.components != "both" && sup.components != "x" && sup.components != "y")
                    fail(c, join(path, "components"), "must be one of both/x/y");
            }
            s.supports.push_back(std::move(sup));
        }
    }

    {
        const json& o = req_obj(c, j, "", "objective");
        check_keys(c, o, "objective", {"kind", "scale"});
        const std::string kind = req_str(c, o, "objective", "kind");
        if (kind == "compliance")
            s.objective = ObjectiveKind::compliance;
        else if (kind == "compliant_mechanism")
            s.objective = ObjectiveKind::compliant_mechanism;
        else
            fail(c, "objective.kind", "must be 'compliance' or 'compliant_mechanism'");
        s.objective_scale = opt_num(c, o, "objective", "scale", 10000.0);
        if (!(s.objective_scale > 0))
            fail(c, "objective.scale", "must be positive");
    }

    {
        const json& o = req_obj(c, j, "", "optimizer");
        check_keys(c, o, "optimizer", {"volume_fraction", "iterations", "move_limit"});
        s.volume_fraction = req_num(c, o, "optimizer", "volume_fraction");
        if (!(s.volume_fraction > 0 && s.volume_fraction < 1))
            fail(c, "optimizer.volume_fraction", "must lie in (0,1)");
        s.iterations = req_int(c, o, "optimizer", "iterations");
        if (s.iterations < 1)
            fail(c, "optimizer.iterations", "must be >= 1");
        s.move_limit = opt_num(c, o, "optimizer", "move_limit", 0.1);
        if (!(s.move_limit > 0 && s.move_limit <= 1))
            fail(c, "optimizer.move_limit", "must lie in (0,1]");
    }

    {
        const json& f = req_obj(c, j, "", "filter");
        check_keys(c, f, "filter", {"radius_multiplier"});
        s.radius_multiplier = req_num(c, f, "filter", "radius_multiplier");
        if (!(s.radius_multiplier > 0))
            fail(c, "filter.radius_multiplier", "must be positive");
    }

    if (const json* o = find(j, "output")) {
        if (s.objective != ObjectiveKind::compliant_mechanism)
            fail(c, "output", "only valid for the compliant_mechanism objective");
        if (!o->is_object())
            fail(c, "output", "expected an object");
        check_keys(c, *o, "output", {"node", "direction", "spring"});
        OutputSpec out;
        out.node = req_pair(c, *o, "output", "node");
        out.direction = req_pair(c, *o, "output", "direction");
        const double nrm = std::hypot(out.direction[0], out.direction[1]);
        if (!(nrm > 0))
            fail(c, "output.direction", "must be nonzero");
        if (out.direction[0] != 0 && out.direction[1] != 0)
            fail(c, "output.direction", "must be axis-aligned");
        out.direction[0] /= nrm;
        out.direction[1] /= nrm;
        out.spring = req_num(c, *o, "output", "spring");
        if (!(out.spring > 0))
            fail(c, "output.spring", "must be positive");
        s.output = out;
    } else if (s.objective == ObjectiveKind::compliant_mechanism) {
        fail(c, "output", "required for the compliant_mechanism objective");
    }

    if (const json* v = find(j, "passive")) {
        if (!v->is_array())
            fail(c, "passive", "expected a list of boxes");
        for (size_t i = 0; i < v->size(); ++i) {
            const std::string path = "passive[" + std::to_string(i) + "]";
            const json& bj = (*v)[i];
            if (!bj.is_object())
                fail(c, path, "expected an object");
            check_keys(c, bj, path, {"x", "y"});
            const auto xr = req_pair(c, bj, path, "x");
            const auto yr = req_pair(c, bj, path, "y");
            if (xr[0] > xr[1] || yr[0] > yr[1])
                fail(c, path, "ranges must be ordered [lo, hi]");
            s.passive_boxes.push_back(Box{xr[0], xr[1], yr[0], yr[1]});
        }
    }

    return s;
}

ProblemSpec load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw ConfigError(path + ": cannot open file");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str(), path);
}

namespace {

Box span_box(const Mesh& mesh, const EdgeSpan& s) {
    if (s.edge == "bottom" || s.edge == "top") {
        const double y = s.edge == "bottom" ? 0.0 : mesh.Ly;
        return {s.has_lo ? s.lo : 0.0, s.has_hi ? s.hi : mesh.Lx, y, y};
    }
    const double x = s.edge == "left" ? 0.0 : mesh.Lx;
    return {x, x, s.has_lo ? s.lo : 0.0, s.has_hi ? s.hi : mesh.Ly};
}

std::string span_desc(const EdgeSpan& s) {
    std::string d = s.edge + " edge";
    if (s.has_lo || s.has_hi)
        d += " (clipped)";
    return d;
}

} // namespace

double Problem::output_displacement(const Eigen::VectorXd& u) const {
    if (bc.output_node < 0)
        return 0.0;
    return bc.output_dir[0] * u[bc.output_dof_x()] + bc.output_dir[1] * u[bc.output_dof_y()];
}

Problem build_problem(const ProblemSpec& spec) {
    Mesh mesh;
    try {
        mesh = build_grid(spec.nx, spec.ny, spec.Lx, spec.Ly, spec.thickness);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("mesh: ") + e.what());
    }

    auto make_darcy = [&]() -> DarcyModel {
        try {
            return DarcyModel(spec.k_v, spec.k_s, spec.eta_k, spec.beta_k, spec.eta_h,
                              spec.beta_h, spec.r, spec.delta_s);
        } catch (const std::invalid_argument& e) {
            throw ConfigError(std::string("darcy: ") + e.what());
        }
    };
    auto make_material = [&]() -> MaterialModel {
        try {
            return MaterialModel(spec.E0, spec.E_min, spec.zeta, spec.nu);
        } catch (const std::invalid_argument& e) {
            throw ConfigError(std::string("material: ") + e.what());
        }
    };

    BoundarySpec bc;

    // Pressure Dirichlet sets: inlet at p_in, outlet at zero; overlaps are
    // config errors (one node cannot carry two prescribed values).
    std::set<int> inlet, zero;
    for (size_t i = 0; i < spec.pressure_inlet.size(); ++i) {
        const Selection sel = select_nodes(mesh, span_box(mesh, spec.pressure_inlet[i]));
        if (sel.empty())
            throw ConfigError("pressure.inlet[" + std::to_string(i) + "]: " +
                              span_desc(spec.pressure_inlet[i]) + " selects no nodes");
        inlet.insert(sel.ids.begin(), sel.ids.end());
    }
    for (size_t i = 0; i < spec.pressure_zero.size(); ++i) {
        const Selection sel = select_nodes(mesh, span_box(mesh, spec.pressure_zero[i]));
        if (sel.empty())
            throw ConfigError("pressure.zero[" + std::to_string(i) + "]: " +
                              span_desc(spec.pressure_zero[i]) + " selects no nodes");
        zero.insert(sel.ids.begin(), sel.ids.end());
    }
    for (int n : inlet)
        if (zero.count(n))
            throw ConfigError("pressure: inlet and zero sets overlap at node " +
                              std::to_string(n));
    bc.pressure_dirichlet.push_back({{inlet.begin(), inlet.end()}, spec.p_in});
    if (!zero.empty())
        bc.pressure_dirichlet.push_back({{zero.begin(), zero.end()}, 0.0});

    for (size_t i = 0; i < spec.supports.size(); ++i) {
        const SupportSpec& sup = spec.supports[i];
        std::vector<int> nodes;
        if (sup.point) {
            try {
                nodes.push_back(nearest_node(mesh, (*sup.point)[0], (*sup.point)[1]));
            } catch (const std::invalid_argument& e) {
                throw ConfigError("supports[" + std::to_string(i) + "].point: " + e.what());
            }
        } else {
            const Selection sel = select_nodes(mesh, span_box(mesh, *sup.span));
            if (sel.empty())
                throw ConfigError("supports[" + std::to_string(i) + "]: " +
                                  span_desc(*sup.span) + " selects no nodes");
            nodes = sel.ids;
        }
        for (int n : nodes) {
            if (sup.components == "both") {
                bc.fixed_dofs.push_back(2 * n);
                bc.fixed_dofs.push_back(2 * n + 1);
            } else if (sup.components == "x") {
                bc.roller_dofs.push_back(2 * n);
            } else {
                bc.roller_dofs.push_back(2 * n + 1);
            }
        }
    }

    std::vector<Spring> springs;
    Eigen::VectorXd dummy;
    if (spec.output) {
        try {
            bc.output_node = nearest_node(mesh, spec.output->node[0], spec.output->node[1]);
        } catch (const std::invalid_argument& e) {
            throw ConfigError(std::string("output.node: ") + e.what());
        }
        bc.output_dir = spec.output->direction;
        const int dof = spec.output->direction[0] != 0 ? bc.output_dof_x() : bc.output_dof_y();
        for (int d : bc.constrained_dofs())
            if (d == dof)
                throw ConfigError("output: port DOF coincides with a support");
        springs.push_back({dof, spec.output->spring});
        dummy = Eigen::VectorXd::Zero(mesh.n_disp_dofs());
        dummy[dof] = spec.output->direction[0] != 0 ? spec.output->direction[0]
                                                    : spec.output->direction[1];
    }

    std::set<int> passive;
    for (size_t i = 0; i < spec.passive_boxes.size(); ++i) {
        const Selection sel = select_elems(mesh, spec.passive_boxes[i]);
        if (sel.empty())
            throw ConfigError("passive[" + std::to_string(i) + "]: box selects no elements");
        passive.insert(sel.ids.begin(), sel.ids.end());
    }
    mesh.passive_elems.assign(passive.begin(), passive.end());
    if (static_cast<int>(passive.size()) >= mesh.n_elems())
        throw ConfigError("passive: boxes freeze every element; nothing left to optimize");

    try {
        validate_boundary(mesh, bc);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("boundary: ") + e.what());
    }

    Problem pb{spec,
               std::move(mesh),
               std::move(bc),
               make_darcy(),
               make_material(),
               std::move(springs),
               std::move(dummy),
               spec.radius_multiplier * std::min(spec.Lx / spec.nx, spec.Ly / spec.ny)};
    return pb;
}

} // namespace pto
