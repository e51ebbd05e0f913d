#pragma once

#include <optional>
#include <string>
#include <vector>

#include "unpiv/grid.hpp"
#include "unpiv/loss.hpp"

namespace unpiv {

/// Coarse-to-fine Adam settings; the optimization variables are flow
/// displacements, so step_size is in pixels.
struct SolverConfig {
  int pyramid_levels = 3;
  int iters_per_level = 150;
  double step_size = 0.05;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  /// Stop a level once 0 <= (L_prev - L) / L_prev < convergence_tol.
  double convergence_tol = 1e-7;
  /// Evaluate the weighted multi-resolution loss of the final flows.
  bool report_multiscale = false;

  // The smoothness penalty is nearly non-differentiable at constant flow, so
  // raw per-pixel Adam steps leave the field stuck or rough. The gradient is
  // low-pass filtered (binomial passes) for the first part of every level,
  // the Adam step itself gets a lighter filter, and the step size decays on a
  // cosine schedule. Zero passes and final_step_fraction = 1 give plain Adam.
  int grad_smoothing = 16;
  double grad_smoothing_fraction = 0.5;
  int step_smoothing = 2;
  double final_step_fraction = 0.01;

  void validate() const;
};

struct TraceRecord {
  int level = 0;
  int iteration = 0;
  double total = 0.0;
  double photometric = 0.0;
  double smoothness = 0.0;
  double consistency = 0.0;
};

struct LevelInfo {
  int level = 0;
  int width = 0;
  int height = 0;
  int iterations = 0;
};

struct SolveTrace {
  std::vector<LevelInfo> levels;    // coarsest first, in execution order
  std::vector<TraceRecord> records;
  FlowField forward;
  FlowField backward;
  std::optional<double> multiscale_total;
  LossParams params;  // echoed for reports
};

/// Minimizes the unsupervised total loss directly over (F^f, F^b). Inputs must
/// be normalized to [0, 1] and at least 16x16.
SolveTrace estimate_unsupervised(const GrayImage& i1, const GrayImage& i2,
                                 const LossParams& loss_params, const SolverConfig& config);

/// JSON document: {levels: [{level, width, height, iters, losses: [...]}],
/// final_flow, ...}. `final_flow_path` may be empty (serialized as null).
std::string solve_trace_json(const SolveTrace& trace, const std::string& final_flow_path = {});
std::string solve_trace_text(const SolveTrace& trace);

}  // namespace unpiv
