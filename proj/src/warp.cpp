#include "unpiv/warp.hpp"

#include <cmath>

namespace unpiv {

namespace {

bool anchor(double s, int extent, int& i0, double& f) {
  if (!(s >= 0.0) || s > static_cast<double>(extent - 1) || extent < 2) return false;
  double fl = std::floor(s);
  i0 = static_cast<int>(fl);
  f = s - fl;
  if (i0 == extent - 1) {
    i0 = extent - 2;
    f = 1.0;
  }
  return true;
}

}  // namespace

BilinearStencil locate(double xs, double ys, int width, int height) {
  BilinearStencil st;
  st.valid = anchor(xs, width, st.x0, st.fx) && anchor(ys, height, st.y0, st.fy);
  return st;
}

BilinearSample sample(const Grid& grid, const BilinearStencil& st) {
  if (!st.valid) return {};
  const double a = grid(st.x0, st.y0);
  const double b = grid(st.x0 + 1, st.y0);
  const double c = grid(st.x0, st.y0 + 1);
  const double d = grid(st.x0 + 1, st.y0 + 1);
  const auto w = st.weights();
  BilinearSample s;
  s.value = w[0] * a + w[1] * b + w[2] * c + w[3] * d;
  s.d_dx = (1.0 - st.fy) * (b - a) + st.fy * (d - c);
  s.d_dy = (1.0 - st.fx) * (c - a) + st.fx * (d - b);
  return s;
}

WarpResult backwarp(const Grid& target, const FlowField& flow) {
  require_same_shape(target, flow, "backwarp");
  const int w = target.width();
  const int h = target.height();
  WarpResult r{GrayImage(w, h), Grid(w, h), Grid(w, h), std::vector<std::uint8_t>(target.size(), 0)};
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const std::size_t i = target.index(x, y);
      const BilinearStencil st = locate(x + flow.u[i], y + flow.v[i], w, h);
      if (!st.valid) continue;
      const BilinearSample s = sample(target, st);
      r.warped[i] = s.value;
      r.d_warp_du[i] = s.d_dx;
      r.d_warp_dv[i] = s.d_dy;
      r.valid_mask[i] = 1;
    }
  }
  return r;
}

PhotometricResidual photometric_residual(const GrayImage& i1, const GrayImage& i2,
                                         const FlowField& flow) {
  require_same_shape(i1, i2, "photometric_residual images");
  WarpResult wr = backwarp(i2, flow);
  PhotometricResidual r{Grid(i1.width(), i1.height()), std::move(wr.d_warp_du),
                        std::move(wr.d_warp_dv), std::move(wr.valid_mask)};
  for (std::size_t i = 0; i < i1.size(); ++i) {
    r.residual[i] = i1[i] - wr.warped[i];
    r.d_du[i] = -r.d_du[i];
    r.d_dv[i] = -r.d_dv[i];
  }
  return r;
}

}  // namespace unpiv
