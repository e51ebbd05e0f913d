#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "unpiv/grid.hpp"

namespace unpiv {

/// Bilinear footprint of a sample point: the 2x2 block anchored at (x0, y0)
/// with fractional offsets (fx, fy) in [0, 1].
struct BilinearStencil {
  int x0 = 0;
  int y0 = 0;
  double fx = 0.0;
  double fy = 0.0;
  bool valid = false;

  /// Weights of (x0,y0), (x0+1,y0), (x0,y0+1), (x0+1,y0+1).
  std::array<double, 4> weights() const {
    return {(1.0 - fx) * (1.0 - fy), fx * (1.0 - fy), (1.0 - fx) * fy, fx * fy};
  }
};

/// Locates (xs, ys) on a width x height grid. The sample is valid when all four
/// corners lie inside the grid. Anchors come from floor() (right-limit
/// derivative convention), except on the last row/column where the block is
/// shifted back one pixel with a unit fraction so exact edge samples stay valid.
BilinearStencil locate(double xs, double ys, int width, int height);

struct BilinearSample {
  double value = 0.0;
  double d_dx = 0.0;
  double d_dy = 0.0;
};

/// Samples `grid` at a located stencil (zero when invalid).
BilinearSample sample(const Grid& grid, const BilinearStencil& st);

struct WarpResult {
  GrayImage warped;
  Grid d_warp_du;
  Grid d_warp_dv;
  std::vector<std::uint8_t> valid_mask;
};

/// Backward warp: warped(x) = target(x + flow(x)) by bilinear sampling, with
/// analytic derivatives w.r.t. the flow. Out-of-grid samples give 0 / 0 / false.
WarpResult backwarp(const Grid& target, const FlowField& flow);

struct PhotometricResidual {
  Grid residual;  // i1(x) - i2(x + flow(x))
  Grid d_du;
  Grid d_dv;
  std::vector<std::uint8_t> valid_mask;
};

PhotometricResidual photometric_residual(const GrayImage& i1, const GrayImage& i2,
                                         const FlowField& flow);

}  // namespace unpiv
