#pragma once

#include <string>
#include <vector>

#include "harmlab/energy.hpp"
#include "harmlab/hopf_lax.hpp"
#include "harmlab/mesh.hpp"
#include "harmlab/solver.hpp"
#include "harmlab/target.hpp"

namespace harmlab {

// Shortest decimal string that parses back to the identical double.
std::string formatDouble(double v);

// --- Structured documents ---------------------------------------------------
// All documents are JSON with lexicographically sorted keys; floating-point
// numbers are written in round-trip precision.  save -> load recovers
// bit-identical values and save -> load -> save is byte-stable.  Unreadable
// or unwritable paths raise Io errors; malformed or unrecognized content
// raises Config errors naming the file.

void saveMesh(const DomainMesh& mesh, const std::string& path);
DomainMesh loadMesh(const std::string& path);

void saveTarget(const NpcTarget& target, const std::string& path);
NpcTarget loadTarget(const std::string& path);

// The map document embeds the target descriptor plus one tagged point record
// per vertex; loading rebinds the values to `mesh` (vertex counts must
// match) and revalidates admissibility.
void saveMap(const MapState& map, const std::string& path);
MapState loadMap(const DomainMesh& mesh, const std::string& path);

// --- CSV exports --------------------------------------------------------------
// One documented header line, LF separators, round-trip number precision;
// identical data produces byte-identical files.

// Columns: vertex_index, r, phi, density, tag.  The tag marks how the row's
// density was formed: "graph" for weight-derived densities, otherwise
// "interior" or "clipped" depending on whether the averaging ball was cut by
// the mesh boundary.
void writeDensityCsv(const DomainMesh& mesh, const EnergyDensityField& field,
                     const std::string& path);

// Columns: iteration, energy, displacement (1-based sweeps).  Requires a
// report recorded with energy tracing on.
void writeEnergyTraceCsv(const SolverReport& report, const std::string& path);

// Columns: vertex, r, phi, lip, density, ratio — one row per probed vertex.
void writeRegularityCsv(const DomainMesh& mesh,
                        const std::vector<int>& vertices,
                        const std::vector<double>& lipschitz,
                        const std::vector<double>& density,
                        const std::vector<double>& ratios,
                        const std::string& path);

// Columns: vertex, lambda, f, L, argmin_size — cells in row-major order
// (vertex outer, lambda inner).
void writeHopfLaxCsv(const HopfLaxField& field, const std::string& path);

}  // namespace harmlab
