#pragma once

#include "unpiv/grid.hpp"

namespace unpiv {

struct HsConfig {
  double alpha = 1.0;
  int iterations = 200;  // Jacobi sweeps per warp
  bool use_multiscale = true;
  int levels = 4;
  int warps_per_level = 1;

  void validate() const;
};

/// Classical Horn-Schunck with optional coarse-to-fine warping.
FlowField estimate_horn_schunck(const GrayImage& i1, const GrayImage& i2, const HsConfig& config);

}  // namespace unpiv
