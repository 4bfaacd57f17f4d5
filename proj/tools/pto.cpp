// Command-line front end: runs a declarative optimization config and writes
// the requested result files.
//
// Exit codes: 0 success, 2 configuration problem (bad CLI usage, unreadable
// or invalid config), 3 numerical failure (singular system, degenerate
// objective, optimizer breakdown).
#include <cstdio>
#include <exception>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "pto/driver.hpp"
#include "pto/errors.hpp"
#include "pto/export.hpp"
#include "pto/problem.hpp"

namespace {

using nlohmann::json;

std::set<std::string> parse_formats(const std::string& csv) {
    std::set<std::string> out;
    std::stringstream ss(csv);
    std::string item;
    while (std::getline(ss, item, ','))
        if (!item.empty())
            out.insert(item);
    if (out.empty())
        throw pto::ConfigError("--export: no formats given");
    return out;
}

// Sets json value at a dotted path ("output.spring"), creating intermediate
// objects; the patched document still passes full schema validation.
void patch_json(json& doc, const std::string& dotted, const json& value) {
    json* cur = &doc;
    size_t start = 0;
    while (true) {
        const size_t dot = dotted.find('.', start);
        const std::string key = dotted.substr(start, dot - start);
        if (key.empty())
            throw pto::ConfigError("--sweep: empty key segment in '" + dotted + "'");
        if (dot == std::string::npos) {
            (*cur)[key] = value;
            return;
        }
        if (!cur->contains(key))
            (*cur)[key] = json::object();
        cur = &(*cur)[key];
        if (!cur->is_object())
            throw pto::ConfigError("--sweep: '" + key + "' in '" + dotted +
                                   "' is not an object");
        start = dot + 1;
    }
}

json parse_sweep_value(const std::string& text) {
    try {
        return json::parse(text);
    } catch (const json::parse_error&) {
        return json(text); // fall back to a string value
    }
}

struct SweepCase {
    std::string doc;    // patched config JSON text
    std::string label;  // "" for the plain run, "key=value" otherwise
};

std::vector<SweepCase> expand_sweep(const std::string& config_text, const std::string& sweep) {
    if (sweep.empty())
        return {{config_text, ""}};
    const size_t eq = sweep.find('=');
    if (eq == std::string::npos || eq == 0 || eq + 1 >= sweep.size())
        throw pto::ConfigError("--sweep: expected key=v1,v2,...");
    const std::string key = sweep.substr(0, eq);
    json base;
    try {
        base = json::parse(config_text);
    } catch (const json::parse_error& e) {
        throw pto::ConfigError(std::string("config: ") + e.what());
    }
    std::vector<SweepCase> cases;
    std::stringstream ss(sweep.substr(eq + 1));
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty())
            continue;
        json doc = base;
        patch_json(doc, key, parse_sweep_value(item));
        cases.push_back({doc.dump(), key + "=" + item});
    }
    if (cases.empty())
        throw pto::ConfigError("--sweep: no values given");
    return cases;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Topology optimization of pressure-loaded structures and mechanisms"};
    app.require_subcommand(1);

    auto* cmd = app.add_subcommand("run", "Optimize the problem described by a JSON config");
    std::string config_path;
    cmd->add_option("config", config_path, "Path to the problem config (JSON)")->required();
    int iters = 0;
    cmd->add_option("--iters", iters, "Override the config's iteration count")
        ->check(CLI::PositiveNumber);
    bool no_load_sens = false;
    cmd->add_flag("--no-load-sens", no_load_sens,
                  "Drop the pressure-load term from the sensitivities (ablation)");
    std::string out_dir;
    cmd->add_option("--out", out_dir, "Output directory (default: out/<name>)");
    std::string export_csv = "vtk,csv,img";
    cmd->add_option("--export", export_csv, "Comma-separated formats: vtk,csv,img");
    std::string sweep;
    cmd->add_option("--sweep", sweep,
                    "Run once per value: dotted.key=v1,v2,... patched into the config");
    bool verbose = false;
    cmd->add_flag("-v,--verbose", verbose, "Print one line per iteration");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        std::ifstream in(config_path);
        if (!in)
            throw pto::ConfigError(config_path + ": cannot open file");
        std::ostringstream buf;
        buf << in.rdbuf();

        const std::set<std::string> formats = parse_formats(export_csv);

        for (const SweepCase& sc : expand_sweep(buf.str(), sweep)) {
            const std::string origin =
                sc.label.empty() ? config_path : config_path + " [" + sc.label + "]";
            const pto::ProblemSpec spec = pto::parse_config(sc.doc, origin);
            const pto::Problem problem = pto::build_problem(spec);

            pto::RunOptions opts;
            if (iters > 0)
                opts.iterations_override = iters;
            opts.load_sensitivities = !no_load_sens;
            opts.verbosity = verbose ? 1 : 0;

            const pto::RunResult result = pto::run(problem, opts);

            std::string dir = out_dir.empty() ? "out/" + spec.name : out_dir;
            if (!sc.label.empty())
                dir += "/" + sc.label;
            pto::export_results(dir, formats, problem, result);

            std::printf("%s%s: objective %.6g", spec.name.c_str(),
                        sc.label.empty() ? "" : (" [" + sc.label + "]").c_str(),
                        result.objective);
            if (spec.objective == pto::ObjectiveKind::compliant_mechanism)
                std::printf("  output displacement %.6g m", result.delta);
            std::printf("  resultant (%.6g, %.6g) N  -> %s\n", result.resultant[0],
                        result.resultant[1], dir.c_str());
        }
        return 0;
    } catch (const pto::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
}
