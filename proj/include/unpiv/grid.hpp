#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "unpiv/error.hpp"

namespace unpiv {

/// Row-major scalar field on a width x height pixel grid, stored in f64.
class Grid {
 public:
  Grid() = default;
  Grid(int width, int height, double fill = 0.0);
  Grid(int width, int height, std::vector<double> data);

  int width() const { return width_; }
  int height() const { return height_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  double operator()(int x, int y) const { return data_[index(x, y)]; }
  double& operator()(int x, int y) { return data_[index(x, y)]; }
  double operator[](std::size_t i) const { return data_[i]; }
  double& operator[](std::size_t i) { return data_[i]; }

  std::size_t index(int x, int y) const {
    return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) +
           static_cast<std::size_t>(x);
  }
  bool contains(int x, int y) const {
    return x >= 0 && y >= 0 && x < width_ && y < height_;
  }
  bool same_shape(const Grid& other) const {
    return width_ == other.width_ && height_ == other.height_;
  }

  std::span<const double> values() const { return data_; }
  std::span<double> values() { return data_; }

  bool operator==(const Grid&) const = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<double> data_;
};

/// Single-channel intensity image.
struct GrayImage : Grid {
  using Grid::Grid;
  GrayImage() = default;
  explicit GrayImage(Grid g) : Grid(std::move(g)) {}
};

/// Dense per-pixel displacement (u, v) in pixels.
struct FlowField {
  Grid u;
  Grid v;

  FlowField() = default;
  FlowField(int width, int height, double fill_u = 0.0, double fill_v = 0.0)
      : u(width, height, fill_u), v(width, height, fill_v) {}
  FlowField(Grid u_in, Grid v_in);

  int width() const { return u.width(); }
  int height() const { return u.height(); }
  std::size_t size() const { return u.size(); }
  bool same_shape(const FlowField& o) const { return u.same_shape(o.u); }

  bool operator==(const FlowField&) const = default;
};

template <typename T>
struct Pyramid {
  static constexpr int kMaxLevels = 6;
  std::vector<T> levels;  // level 0 is full resolution

  int depth() const { return static_cast<int>(levels.size()); }
  const T& operator[](int i) const { return levels[static_cast<std::size_t>(i)]; }
  T& operator[](int i) { return levels[static_cast<std::size_t>(i)]; }
};

/// Throws InvalidInput when any value is NaN or infinite.
void require_finite(std::span<const double> values, const char* what);
void require_same_shape(const Grid& a, const Grid& b, const char* what);
void require_same_shape(const Grid& a, const FlowField& f, const char* what);
void require_same_shape(const FlowField& a, const FlowField& b, const char* what);

/// Maps 8-bit range [0, 255] onto [0, 1].
GrayImage normalize(const GrayImage& image);

/// 2x2 mean pooling; the trailing odd row/column is dropped.
Grid downsample2x(const Grid& grid);
GrayImage downsample2x(const GrayImage& image);
/// As above, with displacements halved to stay in coarse-grid pixels.
FlowField downsample2x(const FlowField& flow);

/// Bilinear upsampling to (target_width, target_height), each within
/// [2w, 2w + 1], with displacements doubled.
FlowField upsample2x_flow(const FlowField& flow, int target_width, int target_height);

/// Largest level count (<= max_levels) whose coarsest level keeps at least
/// min_size pixels along both axes.
int feasible_levels(int width, int height, int max_levels, int min_size = 1);

Pyramid<GrayImage> build_pyramid(const GrayImage& image, int levels);
Pyramid<FlowField> build_pyramid(const FlowField& flow, int levels);

}  // namespace unpiv
