#include <cstdio>
#include <exception>
#include <string>

#include "CLI11.hpp"
#include "harmlab/error.hpp"
#include "harmlab/lab.hpp"

namespace {

struct Invocation {
  std::string configPath;
  std::string outDir;
  std::uint64_t seed = 0;
  int threads = 1;
};

constexpr const char* kDescriptions[6][2] = {
    {"solve", "solve one Dirichlet problem and verify the solver contracts"},
    {"npc-check", "sweep seeded quadruples through the comparison inequality"},
    {"energy-convergence",
     "compare ball-averaged and graph energy densities under refinement"},
    {"regularity", "probe Lipschitz bounds and sub-harmonicity on a solve"},
    {"sharpness", "sweep cone angles for the pair-separation ratio"},
    {"hopf-lax", "resolve the inf-convolution field and verify its bounds"},
};

int runCommand(const std::string& kind, const CLI::App& sub,
               const Invocation& in) {
  harmlab::ExperimentConfig config =
      harmlab::parseExperimentConfig(in.configPath, kind);
  if (sub.count("--out") > 0) config.outputDir = in.outDir;
  if (sub.count("--seed") > 0) config.seed = in.seed;
  if (sub.count("--threads") > 0) config.threads = in.threads;

  const harmlab::ExperimentResult result = harmlab::runExperiment(config);
  for (const harmlab::CheckResult& check : result.checks) {
    std::printf("[%s] %-40s residual=%- 12.5g tolerance=%g\n",
                check.passed ? "pass" : "FAIL", check.name.c_str(),
                check.residual, check.tolerance);
  }
  std::size_t passed = 0;
  for (const harmlab::CheckResult& check : result.checks) {
    if (check.passed) ++passed;
  }
  std::printf("%s: %zu/%zu checks passed in %.2f s, artifacts in %s\n",
              kind.c_str(), passed, result.checks.size(), result.wallSeconds,
              config.outputDir.c_str());
  return result.status();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"harmlab: a laboratory for energy-minimizing maps from "
               "singular flat domains into nonpositively curved targets"};
  app.require_subcommand(1);

  Invocation in;
  for (const auto& desc : kDescriptions) {
    CLI::App* sub = app.add_subcommand(desc[0], desc[1]);
    sub->add_option("--config", in.configPath, "experiment document (JSON)")
        ->required();
    sub->add_option("--out", in.outDir,
                    "output directory (overrides the document)");
    sub->add_option("--seed", in.seed, "random seed (overrides the document)");
    sub->add_option("--threads", in.threads,
                    "worker threads (overrides the document)")
        ->check(CLI::PositiveNumber);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  const CLI::App* sub = app.get_subcommands().front();
  try {
    return runCommand(sub->get_name(), *sub, in);
  } catch (const harmlab::Error& e) {
    std::fprintf(stderr, "harmlab: %s\n", e.what());
    return e.kind() == harmlab::ErrorKind::Io ? 3 : 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "harmlab: %s\n", e.what());
    return 2;
  }
}
