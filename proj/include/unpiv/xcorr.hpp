#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "unpiv/grid.hpp"

namespace unpiv {

enum class SubpixelFit { none, gaussian3 };

struct XcorrConfig {
  int window_size = 29;
  int search_radius = 8;
  int passes = 3;
  SubpixelFit subpixel = SubpixelFit::gaussian3;
  int grid_step = 8;
  /// Search radius of the deformation passes after the first.
  int refine_radius = 4;
  /// Vectors with a weaker ZNCC peak are replaced during validation.
  double min_peak = 0.3;

  void validate() const;
};

enum class WindowStatus { ok, out_of_bounds, undefined_correlation };

struct WindowMatch {
  double du = 0.0;
  double dv = 0.0;
  double peak = 0.0;
  WindowStatus status = WindowStatus::ok;
  /// Integer peak sits on the edge of the search range.
  bool at_search_edge = false;
};

struct Point {
  int x = 0;
  int y = 0;
};

/// ZNCC search of the i1 window at `center` over integer offsets in i2 within
/// search_radius, with optional 3-point Gaussian subpixel refinement.
WindowMatch correlate_window(const GrayImage& i1, const GrayImage& i2, Point center,
                             const XcorrConfig& config);
WindowMatch correlate_window(const GrayImage& i1, const GrayImage& i2, Point center,
                             int window_size, int search_radius, SubpixelFit subpixel);

/// 3-point Gaussian peak offset from correlation values at -1, 0, +1, or
/// nullopt when any value is non-positive or the fit is degenerate.
std::optional<double> gaussian3_offset(double c_minus, double c0, double c_plus);

/// Zero-normalized cross-correlation of two equally sized patches, or NaN when
/// either has zero variance.
double zncc(std::span<const double> a, std::span<const double> b);

struct SparseFlow {
  // Regular sample grid, row-major: positions[r * cols + c] =
  // (origin_x + c * step, origin_y + r * step).
  int cols = 0;
  int rows = 0;
  int origin_x = 0;
  int origin_y = 0;
  int step = 1;
  std::vector<Point> positions;
  std::vector<double> u;
  std::vector<double> v;
  std::vector<double> peak;
  std::vector<bool> valid;

  std::size_t size() const { return positions.size(); }
};

/// Replaces invalid vectors (flagged false in `valid`) by the median of their
/// valid 8-neighbours. Returns how many were replaced.
int replace_outliers(SparseFlow& flow);

/// Dense field by bilinear interpolation over the regular sample grid, constant
/// beyond the outermost samples.
FlowField densify(const SparseFlow& flow, int width, int height);

struct XcorrResult {
  SparseFlow sparse;
  FlowField dense;
};

/// Multi-pass window-deformation cross-correlation.
XcorrResult estimate_multipass(const GrayImage& i1, const GrayImage& i2, const XcorrConfig& config);

/// CSV with header x,y,u,v,peak,valid.
std::string sparse_flow_csv(const SparseFlow& flow);

}  // namespace unpiv
