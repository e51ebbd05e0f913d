#include "unpiv/horn_schunck.hpp"

#include <cmath>

#include "unpiv/warp.hpp"

namespace unpiv {

void HsConfig::validate() const {
  if (!(alpha > 0.0)) throw InvalidInput("Horn-Schunck alpha must be positive");
  if (iterations < 1) throw InvalidInput("Horn-Schunck iterations must be >= 1");
  if (levels < 1 || levels > Pyramid<GrayImage>::kMaxLevels) {
    throw InvalidInput("Horn-Schunck levels must be in [1, 6]");
  }
  if (warps_per_level < 1) throw InvalidInput("Horn-Schunck warps_per_level must be >= 1");
}

namespace {

// Central difference in the interior, one-sided on the border.
double diff_x(const Grid& g, int x, int y) {
  const int w = g.width();
  if (x == 0) return g(1, y) - g(0, y);
  if (x == w - 1) return g(w - 1, y) - g(w - 2, y);
  return 0.5 * (g(x + 1, y) - g(x - 1, y));
}

double diff_y(const Grid& g, int x, int y) {
  const int h = g.height();
  if (y == 0) return g(x, 1) - g(x, 0);
  if (y == h - 1) return g(x, h - 1) - g(x, h - 2);
  return 0.5 * (g(x, y + 1) - g(x, y - 1));
}

// 4-neighbour mean with replicated borders.
double neighbour_mean(const Grid& g, int x, int y) {
  const int w = g.width();
  const int h = g.height();
  const double l = g(x > 0 ? x - 1 : x, y);
  const double r = g(x < w - 1 ? x + 1 : x, y);
  const double t = g(x, y > 0 ? y - 1 : y);
  const double b = g(x, y < h - 1 ? y + 1 : y);
  return 0.25 * ((l + r) + (t + b));
}

// One linearization around `flow`: Jacobi sweeps on the total flow with the
// data term Ix (u - u0) + Iy (v - v0) + It.
void refine(const GrayImage& i1, const GrayImage& i2, FlowField& flow, const HsConfig& cfg) {
  const int w = i1.width();
  const int h = i1.height();
  const WarpResult wr = backwarp(i2, flow);
  Grid warped(w, h);
  for (std::size_t i = 0; i < i1.size(); ++i) {
    // Samples that left the frame carry no information: neutralize It there.
    warped[i] = wr.valid_mask[i] ? wr.warped[i] : i1[i];
  }
  Grid avg(w, h);
  for (std::size_t i = 0; i < i1.size(); ++i) avg[i] = 0.5 * (i1[i] + warped[i]);

  Grid ix(w, h), iy(w, h), rhs(w, h), denom(w, h);
  const double a2 = cfg.alpha * cfg.alpha;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const std::size_t i = avg.index(x, y);
      ix[i] = diff_x(avg, x, y);
      iy[i] = diff_y(avg, x, y);
      const double it = warped[i] - i1[i];
      rhs[i] = it - ix[i] * flow.u[i] - iy[i] * flow.v[i];
      denom[i] = a2 + ix[i] * ix[i] + iy[i] * iy[i];
    }
  }

  FlowField next = flow;
  for (int k = 0; k < cfg.iterations; ++k) {
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        const std::size_t i = avg.index(x, y);
        const double ub = neighbour_mean(flow.u, x, y);
        const double vb = neighbour_mean(flow.v, x, y);
        const double t = (ix[i] * ub + iy[i] * vb + rhs[i]) / denom[i];
        next.u[i] = ub - ix[i] * t;
        next.v[i] = vb - iy[i] * t;
      }
    }
    std::swap(flow, next);
  }
}

}  // namespace

FlowField estimate_horn_schunck(const GrayImage& i1, const GrayImage& i2, const HsConfig& config) {
  config.validate();
  require_same_shape(i1, i2, "estimate_horn_schunck");
  if (i1.width() < 3 || i1.height() < 3) throw TooSmall("Horn-Schunck needs at least 3x3 images");
  require_finite(i1.values(), "first image");
  require_finite(i2.values(), "second image");

  const int levels =
      config.use_multiscale ? feasible_levels(i1.width(), i1.height(), config.levels, 8) : 1;
  const Pyramid<GrayImage> p1 = build_pyramid(i1, levels);
  const Pyramid<GrayImage> p2 = build_pyramid(i2, levels);

  FlowField flow(p1[levels - 1].width(), p1[levels - 1].height());
  for (int l = levels - 1; l >= 0; --l) {
    if (flow.width() != p1[l].width() || flow.height() != p1[l].height()) {
      flow = upsample2x_flow(flow, p1[l].width(), p1[l].height());
    }
    for (int k = 0; k < config.warps_per_level; ++k) refine(p1[l], p2[l], flow, config);
  }
  return flow;
}

}  // namespace unpiv
