#include "unpiv/variational.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include <json.hpp>

namespace unpiv {

void SolverConfig::validate() const {
  if (pyramid_levels < 1 || pyramid_levels > Pyramid<FlowField>::kMaxLevels) {
    throw InvalidInput("pyramid_levels must be in [1, 6]");
  }
  if (iters_per_level < 1) throw InvalidInput("iters_per_level must be >= 1");
  if (!(step_size > 0.0)) throw InvalidInput("step_size must be positive");
  if (!(adam_beta1 >= 0.0 && adam_beta1 < 1.0) || !(adam_beta2 >= 0.0 && adam_beta2 < 1.0)) {
    throw InvalidInput("Adam betas must lie in [0, 1)");
  }
  if (!(adam_eps > 0.0)) throw InvalidInput("adam_eps must be positive");
  if (!(convergence_tol >= 0.0)) throw InvalidInput("convergence_tol must be non-negative");
  if (grad_smoothing < 0 || step_smoothing < 0) {
    throw InvalidInput("smoothing pass counts must be non-negative");
  }
  if (!(grad_smoothing_fraction >= 0.0 && grad_smoothing_fraction <= 1.0)) {
    throw InvalidInput("grad_smoothing_fraction must lie in [0, 1]");
  }
  if (!(final_step_fraction > 0.0 && final_step_fraction <= 1.0)) {
    throw InvalidInput("final_step_fraction must lie in (0, 1]");
  }
}

namespace {

constexpr int kMinInputSize = 16;
constexpr int kMinLevelSize = 8;

void require_normalized(const GrayImage& img, const char* which) {
  for (double v : img.values()) {
    if (!std::isfinite(v) || v < -1e-9 || v > 1.0 + 1e-9) {
      throw InvalidInput(std::string(which) + " is not normalized to [0, 1]");
    }
  }
}

// Separable (1, 2, 1)/4 filter with replicated borders, applied `passes` times.
void binomial_smooth(Grid& g, int passes) {
  if (passes <= 0) return;
  const int w = g.width();
  const int h = g.height();
  Grid tmp(w, h);
  for (int p = 0; p < passes; ++p) {
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        tmp(x, y) = 0.25 * (g(std::max(x - 1, 0), y) + 2.0 * g(x, y) +
                            g(std::min(x + 1, w - 1), y));
      }
    }
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        g(x, y) = 0.25 * (tmp(x, std::max(y - 1, 0)) + 2.0 * tmp(x, y) +
                          tmp(x, std::min(y + 1, h - 1)));
      }
    }
  }
}

void smooth_all(LossValueGrad& g, int passes) {
  binomial_smooth(g.grad_forward.u, passes);
  binomial_smooth(g.grad_forward.v, passes);
  binomial_smooth(g.grad_backward.u, passes);
  binomial_smooth(g.grad_backward.v, passes);
}

// Adam over the concatenated (u^f, v^f, u^b, v^b) vector.
class AdamState {
 public:
  AdamState(std::size_t n, const SolverConfig& c) : m_(n, 0.0), v_(n, 0.0), cfg_(c) {}

  void step(FlowField& fwd, FlowField& bwd, const LossValueGrad& g, double lr) {
    ++t_;
    const double c1 = 1.0 - std::pow(cfg_.adam_beta1, t_);
    const double c2 = 1.0 - std::pow(cfg_.adam_beta2, t_);
    const std::size_t n = fwd.size();
    update(fwd.u, g.grad_forward.u, 0, lr, c1, c2);
    update(fwd.v, g.grad_forward.v, n, lr, c1, c2);
    update(bwd.u, g.grad_backward.u, 2 * n, lr, c1, c2);
    update(bwd.v, g.grad_backward.v, 3 * n, lr, c1, c2);
  }

 private:
  void update(Grid& x, const Grid& grad, std::size_t offset, double lr, double c1, double c2) {
    const double b1 = cfg_.adam_beta1;
    const double b2 = cfg_.adam_beta2;
    Grid delta(x.width(), x.height());
    for (std::size_t i = 0; i < x.size(); ++i) {
      double& m = m_[offset + i];
      double& v = v_[offset + i];
      const double gi = grad[i];
      m = b1 * m + (1.0 - b1) * gi;
      v = b2 * v + (1.0 - b2) * gi * gi;
      delta[i] = lr * (m / c1) / (std::sqrt(v / c2) + cfg_.adam_eps);
    }
    // per-coordinate normalization turns a smooth gradient into a jagged step
    binomial_smooth(delta, cfg_.step_smoothing);
    for (std::size_t i = 0; i < x.size(); ++i) x[i] -= delta[i];
  }

  std::vector<double> m_;
  std::vector<double> v_;
  const SolverConfig& cfg_;
  int t_ = 0;
};

double scheduled_step(const SolverConfig& c, int it) {
  const double t = static_cast<double>(it) / c.iters_per_level;
  const double f = c.final_step_fraction;
  return c.step_size * (f + (1.0 - f) * 0.5 * (1.0 + std::cos(std::numbers::pi * t)));
}

}  // namespace

SolveTrace estimate_unsupervised(const GrayImage& i1, const GrayImage& i2,
                                 const LossParams& loss_params, const SolverConfig& config) {
  loss_params.validate();
  config.validate();
  require_same_shape(i1, i2, "estimate_unsupervised");
  if (i1.width() < kMinInputSize || i1.height() < kMinInputSize) {
    throw TooSmall("estimate_unsupervised needs images of at least 16x16");
  }
  require_normalized(i1, "first image");
  require_normalized(i2, "second image");

  const int levels = std::min(config.pyramid_levels,
                              feasible_levels(i1.width(), i1.height(),
                                              config.pyramid_levels, kMinLevelSize));
  const Pyramid<GrayImage> p1 = build_pyramid(i1, levels);
  const Pyramid<GrayImage> p2 = build_pyramid(i2, levels);

  SolveTrace trace;
  trace.params = loss_params;
  FlowField fwd(p1[levels - 1].width(), p1[levels - 1].height());
  FlowField bwd = fwd;
  const int smoothed_iters =
      static_cast<int>(std::ceil(config.grad_smoothing_fraction * config.iters_per_level));

  for (int l = levels - 1; l >= 0; --l) {
    const GrayImage& a = p1[l];
    const GrayImage& b = p2[l];
    if (fwd.width() != a.width() || fwd.height() != a.height()) {
      fwd = upsample2x_flow(fwd, a.width(), a.height());
      bwd = upsample2x_flow(bwd, a.width(), a.height());
    }
    AdamState adam(4 * a.size(), config);
    LevelInfo info{l, a.width(), a.height(), 0};
    double prev = 0.0;
    for (int it = 0; it < config.iters_per_level; ++it) {
      TotalLoss loss = total_loss(a, b, fwd, bwd, loss_params);
      trace.records.push_back({l, it, loss.weighted.value, loss.photometric, loss.smoothness,
                               loss.consistency});
      ++info.iterations;
      if (it > 0 && prev > 0.0) {
        const double rel = (prev - loss.weighted.value) / prev;
        if (rel >= 0.0 && rel < config.convergence_tol) break;
      }
      prev = loss.weighted.value;
      if (it < smoothed_iters) smooth_all(loss.weighted, config.grad_smoothing);
      adam.step(fwd, bwd, loss.weighted, scheduled_step(config, it));
    }
    trace.levels.push_back(info);
  }

  if (config.report_multiscale) {
    const Pyramid<FlowField> pf = build_pyramid(fwd, levels);
    const Pyramid<FlowField> pb = build_pyramid(bwd, levels);
    trace.multiscale_total = multiscale_loss(i1, i2, pf, pb, loss_params).value;
  }
  trace.forward = std::move(fwd);
  trace.backward = std::move(bwd);
  return trace;
}

std::string solve_trace_json(const SolveTrace& trace, const std::string& final_flow_path) {
  using nlohmann::ordered_json;
  ordered_json doc;
  doc["levels"] = ordered_json::array();
  for (const LevelInfo& info : trace.levels) {
    ordered_json lv;
    lv["level"] = info.level;
    lv["width"] = info.width;
    lv["height"] = info.height;
    lv["iters"] = info.iterations;
    lv["losses"] = ordered_json::array();
    for (const TraceRecord& r : trace.records) {
      if (r.level != info.level) continue;
      lv["losses"].push_back({{"iter", r.iteration},
                              {"total", r.total},
                              {"photometric", r.photometric},
                              {"smoothness", r.smoothness},
                              {"consistency", r.consistency}});
    }
    doc["levels"].push_back(std::move(lv));
  }
  doc["final_flow"] = final_flow_path.empty() ? ordered_json(nullptr) : ordered_json(final_flow_path);
  doc["lambda"] = {{"photometric", trace.params.lambda_p},
                   {"smoothness", trace.params.lambda_s},
                   {"consistency", trace.params.lambda_c}};
  if (!trace.records.empty()) {
    const TraceRecord& last = trace.records.back();
    doc["final"] = {{"total", last.total},
                    {"photometric", last.photometric},
                    {"smoothness", last.smoothness},
                    {"consistency", last.consistency}};
  }
  doc["multiscale_total"] =
      trace.multiscale_total ? ordered_json(*trace.multiscale_total) : ordered_json(nullptr);
  return doc.dump(2) + "\n";
}

std::string solve_trace_text(const SolveTrace& trace) {
  std::ostringstream out;
  for (const LevelInfo& info : trace.levels) {
    out << "level " << info.level << " (" << info.width << "x" << info.height << "): "
        << info.iterations << " iterations";
    double first = 0.0, last = 0.0;
    bool seen = false;
    for (const TraceRecord& r : trace.records) {
      if (r.level != info.level) continue;
      if (!seen) first = r.total;
      last = r.total;
      seen = true;
    }
    if (seen) out << ", loss " << first << " -> " << last;
    out << '\n';
  }
  if (!trace.records.empty()) {
    const TraceRecord& r = trace.records.back();
    out << "final: total " << r.total << " (photometric " << r.photometric << ", smoothness "
        << r.smoothness << ", consistency " << r.consistency << ")\n";
  }
  return out.str();
}

}  // namespace unpiv
