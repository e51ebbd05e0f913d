#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <vector>

#include "unpiv/grid.hpp"

namespace unpiv {

/// Robust penalty and term weights of the unsupervised objective.
struct LossParams {
  double gamma = 0.45;
  double epsilon = 1e-3;
  double lambda_p = 1.0;
  double lambda_s = 3.0;
  double lambda_c = 0.2;
  /// Index 0 is full resolution.
  std::array<double, 6> layer_weights{12.7, 5.5, 4.35, 3.9, 3.4, 1.1};

  void validate() const;
};

struct LossValueGrad {
  double value = 0.0;
  FlowField grad_forward;
  FlowField grad_backward;
};

/// Generalized Charbonnier penalty (x^2 + eps^2)^gamma.
double charbonnier(double x, const LossParams& p);
double charbonnier_deriv(double x, const LossParams& p);

/// Bidirectional photometric term over all pixels; out-of-grid samples compare
/// against 0.
LossValueGrad photometric_loss(const GrayImage& i1, const GrayImage& i2,
                               const FlowField& flow_f, const FlowField& flow_b,
                               const LossParams& p);

/// Second-order smoothness over the horizontal, vertical and both diagonal
/// (1, -2, 1) stencils. Stencils that leave the grid are skipped.
LossValueGrad smoothness_loss(const FlowField& flow_f, const FlowField& flow_b,
                              const LossParams& p);

/// Number of penalized second differences smoothness_loss evaluates for a pair
/// of width x height flows (both fields, both components, all 4 directions).
std::size_t smoothness_term_count(int width, int height);

/// Forward-backward consistency: F^f(x) + F^b(x + F^f(x)) and the mirrored
/// term, penalized per component. The sampled field is bilinear; samples
/// leaving the grid read as zero.
LossValueGrad consistency_loss(const FlowField& flow_f, const FlowField& flow_b,
                               const LossParams& p);

struct TotalLoss {
  LossValueGrad weighted;  // lambda-weighted value and gradients
  // Raw (unweighted) term values; 0 for terms skipped because their lambda is 0.
  double photometric = 0.0;
  double smoothness = 0.0;
  double consistency = 0.0;
};

TotalLoss total_loss(const GrayImage& i1, const GrayImage& i2, const FlowField& flow_f,
                     const FlowField& flow_b, const LossParams& p);

/// sum_i weights[i] * level_values[i]; weights must cover every level.
double weighted_level_sum(std::span<const double> level_values, std::span<const double> weights);

struct MultiscaleLoss {
  double value = 0.0;
  std::vector<TotalLoss> levels;
};

/// Weighted sum of total_loss over pyramid levels. Image pyramids are built from
/// i1/i2 to the depth of the flow pyramids, whose levels must already be in
/// level-pixel units.
MultiscaleLoss multiscale_loss(const GrayImage& i1, const GrayImage& i2,
                               const Pyramid<FlowField>& flows_f,
                               const Pyramid<FlowField>& flows_b, const LossParams& p);

}  // namespace unpiv
