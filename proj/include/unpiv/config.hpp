#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "unpiv/horn_schunck.hpp"
#include "unpiv/loss.hpp"
#include "unpiv/variational.hpp"
#include "unpiv/xcorr.hpp"

namespace unpiv {

/// Every tunable constant, loadable from a plain-text `key = value` file.
///
/// Loss keys: gamma, epsilon, lambda_p, lambda_s, lambda_c, layer_weights
/// (6 comma-separated values, full resolution first).
/// Solver keys: pyramid_levels, iters_per_level, step_size, adam_beta1,
/// adam_beta2, adam_eps, convergence_tol, report_multiscale, grad_smoothing,
/// grad_smoothing_fraction, step_smoothing, final_step_fraction.
/// Horn-Schunck keys: hs_alpha, hs_iterations, hs_multiscale, hs_levels, hs_warps.
/// Cross-correlation keys: window_size, search_radius, passes, subpixel
/// (none|gaussian3), grid_step, refine_radius, min_peak.
/// Blank lines and text after '#' are ignored. Unknown keys are errors.
struct EstimatorConfig {
  LossParams loss;
  SolverConfig solver;
  HsConfig hs;
  XcorrConfig xcorr;

  void validate() const;
};

/// Applies one setting; throws InvalidInput for unknown keys or bad values.
void apply_setting(EstimatorConfig& config, std::string_view key, std::string_view value);

EstimatorConfig parse_config(std::string_view text, EstimatorConfig base = {});
EstimatorConfig load_config(const std::filesystem::path& path, EstimatorConfig base = {});

/// Loss-only view of the format, as used by loss-parameter files.
LossParams parse_loss_params(std::string_view text);
std::string format_loss_params(const LossParams& params);
std::string format_config(const EstimatorConfig& config);

/// Shortest decimal text that round-trips to the same double.
std::string format_double(double value);

}  // namespace unpiv
