#pragma once

#include "dwr/config.hpp"
#include "dwr/estimator.hpp"
#include "dwr/fsi.hpp"

#include <memory>
#include <optional>

namespace dwr {

struct AdaptConfig {
  double alpha = 0.5;       // Doerfler fraction
  double epsilon = 1e-8;    // stopping tolerance on eta_h, in goal units
  int max_iterations = 10;
  enum class DualStrategy { EnrichedSolve, Extrapolate };
  DualStrategy dual_strategy = DualStrategy::EnrichedSolve;
  bool compute_reference = false;
  std::string base_dir; // directory of the config file; resolves mesh paths
  Config raw;
};

AdaptConfig parse_adapt_config(const Config& cfg);

/// Mesh named by the config: a file path, or one of the generator shortcuts
/// builtin:square2, builtin:artery, builtin:silicone, builtin:fsi_square:N.
Mesh load_problem_mesh(const AdaptConfig& cfg);

struct ConvergenceRow {
  int iteration = 0;
  long cells = 0;
  long dofs = 0;
  double J_value = 0;
  double eta_global = 0;
  double sum_local = 0;
  std::optional<double> reference_error;
  std::optional<double> relative_error;
  std::optional<double> effectivity_global;
  std::optional<double> effectivity_sum;
};

struct IterationArtifacts {
  std::shared_ptr<const Mesh> mesh;
  std::shared_ptr<Field> u;      // primal field for output
  std::shared_ptr<Field> z_hat;  // enriched dual for output
  Eigen::VectorXd eta_local;
};

struct RunResult {
  std::vector<ConvergenceRow> rows;
  std::vector<DwrReport> reports;
  std::vector<IterationArtifacts> artifacts;
  bool converged = false;
  bool hit_max_iterations = false;
  std::optional<double> J_reference;
};

/// Algorithm: solve primal, solve the dual on the enriched space (directly or
/// by extrapolation), evaluate eta_h, stop if below epsilon, localize,
/// Doerfler-mark, bisect, rebuild. Rows are recorded per iteration; the
/// optional fine reference (two uniform refinements past the final mesh)
/// back-fills error and effectivity columns.
RunResult adaptive_loop(const AdaptConfig& cfg, const Mesh& mesh0);

/// Same pipeline with uniform refinement instead of marking.
RunResult run_uniform(const AdaptConfig& cfg, const Mesh& mesh0, int levels);

/// convergence.csv plus one mesh_NNN.vtk per iteration (u, z_hat, eta_K).
void write_outputs(const RunResult& result, const std::string& out_dir);

} // namespace dwr
