#include "unpiv/grid.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace unpiv {

Grid::Grid(int width, int height, double fill) : width_(width), height_(height) {
  if (width < 0 || height < 0) throw InvalidInput("negative grid dimensions");
  data_.assign(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), fill);
}

Grid::Grid(int width, int height, std::vector<double> data)
    : width_(width), height_(height), data_(std::move(data)) {
  if (width < 0 || height < 0) throw InvalidInput("negative grid dimensions");
  if (data_.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height)) {
    throw DimensionMismatch("grid data length " + std::to_string(data_.size()) +
                            " does not match " + std::to_string(width) + "x" +
                            std::to_string(height));
  }
}

FlowField::FlowField(Grid u_in, Grid v_in) : u(std::move(u_in)), v(std::move(v_in)) {
  if (!u.same_shape(v)) throw DimensionMismatch("flow components differ in shape");
}

void require_finite(std::span<const double> values, const char* what) {
  for (double x : values) {
    if (!std::isfinite(x)) throw InvalidInput(std::string(what) + ": non-finite value");
  }
}

namespace {

[[noreturn]] void mismatch(const char* what, int w0, int h0, int w1, int h1) {
  throw DimensionMismatch(std::string(what) + ": " + std::to_string(w0) + "x" +
                          std::to_string(h0) + " vs " + std::to_string(w1) + "x" +
                          std::to_string(h1));
}

double pool(double a, double b, double c, double d) { return 0.25 * ((a + b) + (c + d)); }

void require_poolable(int w, int h) {
  if (w < 2 || h < 2) {
    throw TooSmall("downsample2x needs at least 2x2, got " + std::to_string(w) + "x" +
                   std::to_string(h));
  }
}

}  // namespace

void require_same_shape(const Grid& a, const Grid& b, const char* what) {
  if (!a.same_shape(b)) mismatch(what, a.width(), a.height(), b.width(), b.height());
}

void require_same_shape(const Grid& a, const FlowField& f, const char* what) {
  if (!a.same_shape(f.u)) mismatch(what, a.width(), a.height(), f.width(), f.height());
}

void require_same_shape(const FlowField& a, const FlowField& b, const char* what) {
  if (!a.same_shape(b)) mismatch(what, a.width(), a.height(), b.width(), b.height());
}

GrayImage normalize(const GrayImage& image) {
  require_finite(image.values(), "normalize");
  GrayImage out(image.width(), image.height());
  for (std::size_t i = 0; i < image.size(); ++i) out[i] = image[i] / 255.0;
  return out;
}

Grid downsample2x(const Grid& grid) {
  require_poolable(grid.width(), grid.height());
  const int w = grid.width() / 2;
  const int h = grid.height() / 2;
  Grid out(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      out(x, y) = pool(grid(2 * x, 2 * y), grid(2 * x + 1, 2 * y), grid(2 * x, 2 * y + 1),
                       grid(2 * x + 1, 2 * y + 1));
    }
  }
  return out;
}

GrayImage downsample2x(const GrayImage& image) {
  return GrayImage(downsample2x(static_cast<const Grid&>(image)));
}

FlowField downsample2x(const FlowField& flow) {
  Grid u = downsample2x(flow.u);
  Grid v = downsample2x(flow.v);
  for (std::size_t i = 0; i < u.size(); ++i) {
    u[i] *= 0.5;
    v[i] *= 0.5;
  }
  return FlowField(std::move(u), std::move(v));
}

namespace {

// Coarse cell i covers fine pixels 2i and 2i+1, so fine coordinate x sits at
// coarse coordinate (x - 0.5) / 2. Positions beyond the outer cell centres clamp.
Grid upsample_bilinear(const Grid& src, int tw, int th) {
  Grid out(tw, th);
  const int sw = src.width();
  const int sh = src.height();
  for (int y = 0; y < th; ++y) {
    double cy = std::clamp((y - 0.5) / 2.0, 0.0, static_cast<double>(sh - 1));
    int y0 = std::min(static_cast<int>(cy), std::max(sh - 2, 0));
    int y1 = std::min(y0 + 1, sh - 1);
    double fy = cy - y0;
    for (int x = 0; x < tw; ++x) {
      double cx = std::clamp((x - 0.5) / 2.0, 0.0, static_cast<double>(sw - 1));
      int x0 = std::min(static_cast<int>(cx), std::max(sw - 2, 0));
      int x1 = std::min(x0 + 1, sw - 1);
      double fx = cx - x0;
      double top = (1.0 - fx) * src(x0, y0) + fx * src(x1, y0);
      double bot = (1.0 - fx) * src(x0, y1) + fx * src(x1, y1);
      out(x, y) = (1.0 - fy) * top + fy * bot;
    }
  }
  return out;
}

}  // namespace

FlowField upsample2x_flow(const FlowField& flow, int target_width, int target_height) {
  const int w = flow.width();
  const int h = flow.height();
  if (w < 1 || h < 1) throw TooSmall("upsample2x_flow: empty flow");
  if (target_width < 2 * w || target_width > 2 * w + 1 || target_height < 2 * h ||
      target_height > 2 * h + 1) {
    mismatch("upsample2x_flow target", target_width, target_height, 2 * w, 2 * h);
  }
  Grid u = upsample_bilinear(flow.u, target_width, target_height);
  Grid v = upsample_bilinear(flow.v, target_width, target_height);
  for (std::size_t i = 0; i < u.size(); ++i) {
    u[i] *= 2.0;
    v[i] *= 2.0;
  }
  return FlowField(std::move(u), std::move(v));
}

int feasible_levels(int width, int height, int max_levels, int min_size) {
  int levels = 1;
  int w = width;
  int h = height;
  while (levels < max_levels && w / 2 >= min_size && h / 2 >= min_size && w >= 2 && h >= 2) {
    w /= 2;
    h /= 2;
    ++levels;
  }
  return levels;
}

namespace {

template <typename T>
Pyramid<T> build(const T& grid, int levels, int width, int height) {
  if (levels < 1) throw InvalidInput("pyramid needs at least one level");
  if (levels > Pyramid<T>::kMaxLevels) {
    throw InvalidInput("pyramid depth " + std::to_string(levels) + " exceeds " +
                       std::to_string(Pyramid<T>::kMaxLevels));
  }
  if (feasible_levels(width, height, levels) < levels) {
    throw TooSmall(std::to_string(width) + "x" + std::to_string(height) +
                   " grid cannot hold " + std::to_string(levels) + " pyramid levels");
  }
  Pyramid<T> p;
  p.levels.reserve(static_cast<std::size_t>(levels));
  p.levels.push_back(grid);
  for (int i = 1; i < levels; ++i) p.levels.push_back(downsample2x(p.levels.back()));
  return p;
}

}  // namespace

Pyramid<GrayImage> build_pyramid(const GrayImage& image, int levels) {
  return build(image, levels, image.width(), image.height());
}

Pyramid<FlowField> build_pyramid(const FlowField& flow, int levels) {
  return build(flow, levels, flow.width(), flow.height());
}

}  // namespace unpiv
