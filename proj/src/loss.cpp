#include "unpiv/loss.hpp"

#include <cmath>
#include <string>

#include "unpiv/warp.hpp"

namespace unpiv {

void LossParams::validate() const {
  if (!(gamma > 0.0 && gamma <= 1.0)) throw InvalidInput("gamma must lie in (0, 1]");
  if (!(epsilon > 0.0)) throw InvalidInput("epsilon must be positive");
  if (!(lambda_p >= 0.0 && lambda_s >= 0.0 && lambda_c >= 0.0)) {
    throw InvalidInput("loss weights must be non-negative");
  }
  if (lambda_p == 0.0 && lambda_s == 0.0 && lambda_c == 0.0) {
    throw InvalidInput("at least one loss weight must be positive");
  }
  for (double w : layer_weights) {
    if (!(w >= 0.0)) throw InvalidInput("layer weights must be non-negative");
  }
}

namespace {

struct Penalty {
  double value;
  double deriv;
};

// One pow() per evaluation: (x^2+e^2)^gamma = q * q^(gamma-1).
inline Penalty penalize(double x, double gamma, double eps2) {
  const double q = x * x + eps2;
  const double qpow = std::pow(q, gamma - 1.0);
  return {q * qpow, 2.0 * gamma * x * qpow};
}

LossValueGrad zero_result(int w, int h) { return {0.0, FlowField(w, h), FlowField(w, h)}; }

// Adds one direction of the photometric term: residual = a(x) - b(x + flow(x)).
double photometric_direction(const GrayImage& a, const GrayImage& b, const FlowField& flow,
                             FlowField& grad, double gamma, double eps2) {
  const int w = a.width();
  const int h = a.height();
  double sum = 0.0;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const std::size_t i = a.index(x, y);
      const BilinearStencil st = locate(x + flow.u[i], y + flow.v[i], w, h);
      const BilinearSample s = sample(b, st);
      const Penalty pen = penalize(a[i] - s.value, gamma, eps2);
      sum += pen.value;
      grad.u[i] = -pen.deriv * s.d_dx;
      grad.v[i] = -pen.deriv * s.d_dy;
    }
  }
  return sum;
}

struct Offset {
  int dx;
  int dy;
};
// s = x - d, r = x + d for the horizontal, vertical, and two diagonal stencils.
constexpr Offset kStencils[4] = {{1, 0}, {0, 1}, {1, 1}, {1, -1}};

double smooth_component(const Grid& f, Grid& grad, double gamma, double eps2) {
  const int w = f.width();
  const int h = f.height();
  double sum = 0.0;
  for (const Offset d : kStencils) {
    const int ylo = std::abs(d.dy);
    const int yhi = h - std::abs(d.dy);
    const int xlo = std::abs(d.dx);
    const int xhi = w - std::abs(d.dx);
    const std::ptrdiff_t step = static_cast<std::ptrdiff_t>(d.dy) * w + d.dx;
    for (int y = ylo; y < yhi; ++y) {
      for (int x = xlo; x < xhi; ++x) {
        const std::size_t c = f.index(x, y);
        const std::size_t s = static_cast<std::size_t>(static_cast<std::ptrdiff_t>(c) - step);
        const std::size_t r = static_cast<std::size_t>(static_cast<std::ptrdiff_t>(c) + step);
        const Penalty pen = penalize(f[s] - 2.0 * f[c] + f[r], gamma, eps2);
        sum += pen.value;
        grad[s] += pen.deriv;
        grad[c] -= 2.0 * pen.deriv;
        grad[r] += pen.deriv;
      }
    }
  }
  return sum;
}

// One half of the consistency term: a(x) + b(x + a(x)), scattering into both
// fields' gradients.
double consistency_direction(const FlowField& a, const FlowField& b, FlowField& grad_a,
                             FlowField& grad_b, double gamma, double eps2) {
  const int w = a.width();
  const int h = a.height();
  double sum = 0.0;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const std::size_t i = a.u.index(x, y);
      const BilinearStencil st = locate(x + a.u[i], y + a.v[i], w, h);
      const BilinearSample bu = sample(b.u, st);
      const BilinearSample bv = sample(b.v, st);
      const Penalty pu = penalize(a.u[i] + bu.value, gamma, eps2);
      const Penalty pv = penalize(a.v[i] + bv.value, gamma, eps2);
      sum += pu.value + pv.value;
      grad_a.u[i] += pu.deriv * (1.0 + bu.d_dx) + pv.deriv * bv.d_dx;
      grad_a.v[i] += pu.deriv * bu.d_dy + pv.deriv * (1.0 + bv.d_dy);
      if (!st.valid) continue;
      const auto wts = st.weights();
      const std::size_t c00 = b.u.index(st.x0, st.y0);
      const std::size_t corner[4] = {c00, c00 + 1, c00 + static_cast<std::size_t>(w),
                                     c00 + static_cast<std::size_t>(w) + 1};
      for (int k = 0; k < 4; ++k) {
        grad_b.u[corner[k]] += pu.deriv * wts[k];
        grad_b.v[corner[k]] += pv.deriv * wts[k];
      }
    }
  }
  return sum;
}

void axpy(double a, const FlowField& x, FlowField& y) {
  for (std::size_t i = 0; i < x.size(); ++i) {
    y.u[i] += a * x.u[i];
    y.v[i] += a * x.v[i];
  }
}

}  // namespace

double charbonnier(double x, const LossParams& p) {
  return std::pow(x * x + p.epsilon * p.epsilon, p.gamma);
}

double charbonnier_deriv(double x, const LossParams& p) {
  return 2.0 * p.gamma * x * std::pow(x * x + p.epsilon * p.epsilon, p.gamma - 1.0);
}

LossValueGrad photometric_loss(const GrayImage& i1, const GrayImage& i2, const FlowField& flow_f,
                               const FlowField& flow_b, const LossParams& p) {
  require_same_shape(i1, i2, "photometric_loss images");
  require_same_shape(i1, flow_f, "photometric_loss forward flow");
  require_same_shape(i1, flow_b, "photometric_loss backward flow");
  LossValueGrad r = zero_result(i1.width(), i1.height());
  const double eps2 = p.epsilon * p.epsilon;
  r.value = photometric_direction(i1, i2, flow_f, r.grad_forward, p.gamma, eps2);
  r.value += photometric_direction(i2, i1, flow_b, r.grad_backward, p.gamma, eps2);
  return r;
}

std::size_t smoothness_term_count(int width, int height) {
  if (width < 3 || height < 3) return 0;
  const auto w = static_cast<std::size_t>(width);
  const auto h = static_cast<std::size_t>(height);
  const std::size_t per_component = (w - 2) * h + w * (h - 2) + 2 * (w - 2) * (h - 2);
  return 4 * per_component;
}

LossValueGrad smoothness_loss(const FlowField& flow_f, const FlowField& flow_b,
                              const LossParams& p) {
  require_same_shape(flow_f, flow_b, "smoothness_loss");
  if (flow_f.width() < 3 || flow_f.height() < 3) {
    throw TooSmall("smoothness_loss needs at least 3x3 flows");
  }
  LossValueGrad r = zero_result(flow_f.width(), flow_f.height());
  const double eps2 = p.epsilon * p.epsilon;
  r.value = smooth_component(flow_f.u, r.grad_forward.u, p.gamma, eps2) +
            smooth_component(flow_f.v, r.grad_forward.v, p.gamma, eps2) +
            smooth_component(flow_b.u, r.grad_backward.u, p.gamma, eps2) +
            smooth_component(flow_b.v, r.grad_backward.v, p.gamma, eps2);
  return r;
}

LossValueGrad consistency_loss(const FlowField& flow_f, const FlowField& flow_b,
                               const LossParams& p) {
  require_same_shape(flow_f, flow_b, "consistency_loss");
  LossValueGrad r = zero_result(flow_f.width(), flow_f.height());
  const double eps2 = p.epsilon * p.epsilon;
  r.value = consistency_direction(flow_f, flow_b, r.grad_forward, r.grad_backward, p.gamma, eps2);
  r.value += consistency_direction(flow_b, flow_f, r.grad_backward, r.grad_forward, p.gamma, eps2);
  return r;
}

TotalLoss total_loss(const GrayImage& i1, const GrayImage& i2, const FlowField& flow_f,
                     const FlowField& flow_b, const LossParams& p) {
  require_same_shape(i1, i2, "total_loss images");
  require_same_shape(i1, flow_f, "total_loss forward flow");
  require_same_shape(i1, flow_b, "total_loss backward flow");
  TotalLoss t{zero_result(i1.width(), i1.height())};
  auto add = [&](double lambda, const LossValueGrad& term) {
    t.weighted.value += lambda * term.value;
    axpy(lambda, term.grad_forward, t.weighted.grad_forward);
    axpy(lambda, term.grad_backward, t.weighted.grad_backward);
  };
  if (p.lambda_p != 0.0) {
    LossValueGrad term = photometric_loss(i1, i2, flow_f, flow_b, p);
    t.photometric = term.value;
    add(p.lambda_p, term);
  }
  if (p.lambda_s != 0.0) {
    LossValueGrad term = smoothness_loss(flow_f, flow_b, p);
    t.smoothness = term.value;
    add(p.lambda_s, term);
  }
  if (p.lambda_c != 0.0) {
    LossValueGrad term = consistency_loss(flow_f, flow_b, p);
    t.consistency = term.value;
    add(p.lambda_c, term);
  }
  return t;
}

double weighted_level_sum(std::span<const double> level_values, std::span<const double> weights) {
  if (level_values.size() > weights.size()) {
    throw DimensionMismatch("more pyramid levels (" + std::to_string(level_values.size()) +
                            ") than layer weights (" + std::to_string(weights.size()) + ")");
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < level_values.size(); ++i) sum += weights[i] * level_values[i];
  return sum;
}

MultiscaleLoss multiscale_loss(const GrayImage& i1, const GrayImage& i2,
                               const Pyramid<FlowField>& flows_f,
                               const Pyramid<FlowField>& flows_b, const LossParams& p) {
  if (flows_f.depth() != flows_b.depth()) {
    throw DimensionMismatch("forward and backward flow pyramids differ in depth");
  }
  if (flows_f.depth() < 1 || flows_f.depth() > Pyramid<FlowField>::kMaxLevels) {
    throw InvalidInput("flow pyramid depth must be in [1, 6]");
  }
  const Pyramid<GrayImage> p1 = build_pyramid(i1, flows_f.depth());
  const Pyramid<GrayImage> p2 = build_pyramid(i2, flows_f.depth());
  MultiscaleLoss ms;
  std::vector<double> values;
  for (int l = 0; l < flows_f.depth(); ++l) {
    ms.levels.push_back(total_loss(p1[l], p2[l], flows_f[l], flows_b[l], p));
    values.push_back(ms.levels.back().weighted.value);
  }
  ms.value = weighted_level_sum(values, p.layer_weights);
  return ms;
}

}  // namespace unpiv
