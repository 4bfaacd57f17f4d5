#include "pto/export.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include "pto/errors.hpp"

namespace pto {

namespace {

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path);
    if (!out)
        throw std::runtime_error("cannot write " + path);
    return out;
}

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

} // namespace

void write_vtk(const std::string& path, const Mesh& mesh,
               const std::vector<double>& rho, const Eigen::VectorXd& p) {
    if (static_cast<int>(rho.size()) != mesh.n_elems() || p.size() != mesh.n_nodes())
        throw std::invalid_argument("write_vtk: field size mismatch");
    std::ofstream out = open_out(path);
    out << "# vtk DataFile Version 3.0\n";
    out << "density and pressure fields\n";
    out << "ASCII\n";
    out << "DATASET STRUCTURED_GRID\n";
    out << "DIMENSIONS " << mesh.nx + 1 << ' ' << mesh.ny + 1 << " 1\n";
    out << "POINTS " << mesh.n_nodes() << " double\n";
    for (const auto& c : mesh.node_coords)
        out << fmt(c[0]) << ' ' << fmt(c[1]) << " 0\n";
    out << "POINT_DATA " << mesh.n_nodes() << "\n";
    out << "SCALARS pressure double 1\n";
    out << "LOOKUP_TABLE default\n";
    for (int n = 0; n < mesh.n_nodes(); ++n)
        out << fmt(p[n]) << '\n';
    out << "CELL_DATA " << mesh.n_elems() << "\n";
    out << "SCALARS density double 1\n";
    out << "LOOKUP_TABLE default\n";
    for (double r : rho)
        out << fmt(r) << '\n';
    if (!out)
        throw std::runtime_error("short write to " + path);
}

void write_history_csv(const std::string& path, const std::vector<HistoryRow>& history) {
    std::ofstream out = open_out(path);
    out << "iter,objective,volume,Fx,Fy,delta,max_dx\n";
    for (const auto& row : history)
        out << row.iter << ',' << fmt(row.objective) << ',' << fmt(row.volume) << ','
            << fmt(row.Fx) << ',' << fmt(row.Fy) << ',' << fmt(row.delta) << ','
            << fmt(row.max_dx) << '\n';
    if (!out)
        throw std::runtime_error("short write to " + path);
}

void write_density_pgm(const std::string& path, const Mesh& mesh,
                       const std::vector<double>& rho) {
    if (static_cast<int>(rho.size()) != mesh.n_elems())
        throw std::invalid_argument("write_density_pgm: field size mismatch");
    std::ofstream out = open_out(path);
    out << "P2\n" << mesh.nx << ' ' << mesh.ny << "\n255\n";
    // Image rows run top-down; solid material (rho = 1) prints black.
    for (int j = mesh.ny - 1; j >= 0; --j) {
        for (int i = 0; i < mesh.nx; ++i) {
            const double r = rho[static_cast<size_t>(mesh.elem_id(i, j))];
            const int pix = static_cast<int>(std::lround(255.0 * (1.0 - r)));
            out << std::min(255, std::max(0, pix)) << (i + 1 < mesh.nx ? ' ' : '\n');
        }
    }
    if (!out)
        throw std::runtime_error("short write to " + path);
}

void export_results(const std::string& out_dir, const std::set<std::string>& formats,
                    const Problem& problem, const RunResult& result) {
    for (const auto& f : formats)
        if (f != "vtk" && f != "csv" && f != "img")
            throw ConfigError("export: unknown format '" + f + "' (use vtk, csv, img)");
    std::filesystem::create_directories(out_dir);
    const std::filesystem::path dir(out_dir);
    if (formats.count("vtk"))
        write_vtk((dir / "fields.vtk").string(), problem.mesh, result.rho,
                  result.pressure.p);
    if (formats.count("csv"))
        write_history_csv((dir / "history.csv").string(), result.history);
    if (formats.count("img"))
        write_density_pgm((dir / "density.pgm").string(), problem.mesh, result.rho);
}

} // namespace pto
