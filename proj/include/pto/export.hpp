// Result writers: legacy-ASCII VTK structured grid (density + pressure),
// convergence-history CSV, and a grayscale PGM image of the density field
// (one pixel per element, solid = black).
#pragma once

#include <set>
#include <string>
#include <vector>

#include "pto/driver.hpp"

namespace pto {

void write_vtk(const std::string& path, const Mesh& mesh,
               const std::vector<double>& rho, const Eigen::VectorXd& p);

void write_history_csv(const std::string& path, const std::vector<HistoryRow>& history);

void write_density_pgm(const std::string& path, const Mesh& mesh,
                       const std::vector<double>& rho);

// Writes the requested formats ("vtk", "csv", "img") into out_dir, creating
// it if needed.  File names: fields.vtk, history.csv, density.pgm.
// Throws std::runtime_error on unwritable paths, ConfigError on unknown
// format names.
void export_results(const std::string& out_dir, const std::set<std::string>& formats,
                    const Problem& problem, const RunResult& result);

} // namespace pto
