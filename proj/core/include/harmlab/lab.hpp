#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "harmlab/mesh.hpp"
#include "harmlab/target.hpp"

namespace harmlab {

inline constexpr const char* kLabVersion = "0.1.0";

// Boundary data vocabulary.  The named closed forms are:
//   cos_phi        g(r, phi) = cos(phi)            (full-turn domains only)
//   cos_alpha_phi  g(r, phi) = cos(alpha phi), alpha = 2 pi / totalAngle
//   tree_leg_embed three angular sectors onto tree edges 0..2,
//                  offset 0.4 + 0.1 cos(3 phi)     (tree targets only)
//   custom         tabulated per-boundary-vertex values
struct BoundarySpec {
  std::string expression;          // one of the names above, or empty
  std::vector<int> vertices;       // custom: boundary vertex indices
  std::vector<TargetPoint> values; // custom: value per listed vertex
};

// One experiment = one pipeline run with one seed and one output directory.
// Every field is deterministic input; identical configs (including seed)
// produce byte-identical CSV bodies.
struct ExperimentConfig {
  // solve | npc-check | energy-convergence | regularity | sharpness |
  // hopf-lax
  std::string kind;

  // Domain: a built cone or a mesh document (exactly one, where required).
  std::optional<ConeSpec> cone;
  std::string meshFile;

  // Target space (defaults to the real line).  npc-check sweeps `targets`.
  NpcTarget target;
  std::vector<NpcTarget> targets;

  BoundarySpec boundary;

  // --- numeric parameters (kind-specific; parser applies the defaults) ---
  double solverTolerance = 1e-9;
  int maxIterations = 200000;
  double oracleTolerance = 1e-3;   // solve: max error vs the closed form
  int quadrupleCount = 10000;      // npc-check: trials per target
  std::vector<int> refinementLevels;  // studies: levels to sweep
  std::vector<double> epsilons;    // energy-convergence: radius per level
  double interiorRadius = 0.25;    // energy-convergence: chart ball radius
  double exponentTolerance = 0.07; // regularity/sharpness: exponent window
  std::vector<double> angles;      // sharpness: cone angles to sweep
  int baseRings = 8;               // sharpness: level-0 ring count
  double ratioRadius = 0.5;        // sharpness: ratio ball radius
  double tFraction = 0.25;         // hopf-lax: t as a fraction of the horizon
  double lambdaStep = 0.02;        // hopf-lax: grid spacing on [0, 1]
  double innerRadius = 0.3;        // hopf-lax: evaluation ball
  double outerRadius = 0.95;       // hopf-lax: search ball
  int probeCount = 20;             // hopf-lax: time-derivative probes

  std::string outputDir;
  std::uint64_t seed = 1;
  int threads = 1;

  // Verbatim source document, echoed into summaries.
  std::string sourceText;
};

// Parses the structured configuration document.  Unknown keys anywhere in
// the document are hard Config errors.  `kindOverride`, when nonempty, must
// match the document's kind or supplies it when absent.
ExperimentConfig parseExperimentConfig(const std::string& path,
                                       const std::string& kindOverride = "");
ExperimentConfig parseExperimentConfigText(const std::string& text,
                                           const std::string& context,
                                           const std::string& kindOverride = "");

// One verified inequality: a neutral name, the rule it enforces, the
// residual statistic measured, the tolerance applied, and the verdict.
struct CheckResult {
  std::string name;
  std::string statement;
  double residual = 0.0;
  double tolerance = 0.0;
  bool passed = false;
};

struct ExperimentResult {
  std::string kind;
  std::uint64_t seed = 0;
  std::vector<CheckResult> checks;
  std::vector<std::string> artifacts;  // file names inside outputDir
  double wallSeconds = 0.0;

  bool allPassed() const;
  // 0 when every check passed, 1 otherwise (configuration and filesystem
  // failures surface as thrown errors instead).
  int status() const { return allPassed() ? 0 : 1; }
};

// Runs the pipeline for config.kind, writes artifacts plus a summary
// document (summary.json) into config.outputDir, and returns the outcome.
// Config errors and I/O failures throw; assertion failures do not.
ExperimentResult runExperiment(const ExperimentConfig& config);

}  // namespace harmlab
