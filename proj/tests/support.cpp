#include "support.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <sstream>

#include <sys/wait.h>
#include <unistd.h>

namespace testing {

GrayImage random_texture(int w, int h, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  struct Wave { double kx, ky, phase, amp; };
  std::vector<Wave> waves;
  for (int i = 0; i < 6; ++i) {
    waves.push_back({(U(rng) - 0.5) * 1.6, (U(rng) - 0.5) * 1.6,
                     U(rng) * 2 * std::numbers::pi, 0.05 + 0.1 * U(rng)});
  }
  GrayImage img(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double v = 0.5;
      for (const Wave& wv : waves) v += wv.amp * std::sin(wv.kx * x + wv.ky * y + wv.phase);
      v += 0.02 * (U(rng) - 0.5);
      img(x, y) = std::clamp(v, 0.0, 1.0);
    }
  }
  return img;
}

namespace {

// Pushes x so that its fractional part lies in [margin, 1 - margin].
double away_from_integer(double base, double d, double margin) {
  const double s = base + d;
  const double frac = s - std::floor(s);
  if (frac < margin) return d + (margin - frac);
  if (frac > 1.0 - margin) return d - (frac - (1.0 - margin));
  return d;
}

}  // namespace

FlowField off_lattice_flow(int w, int h, std::uint64_t seed, double amplitude, double margin) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> U(-amplitude, amplitude);
  FlowField f(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      f.u(x, y) = away_from_integer(x, U(rng), margin);
      f.v(x, y) = away_from_integer(y, U(rng), margin);
    }
  }
  return f;
}

FlowField nudge_off_lattice(FlowField flow, double margin) {
  for (int y = 0; y < flow.height(); ++y) {
    for (int x = 0; x < flow.width(); ++x) {
      flow.u(x, y) = away_from_integer(x, flow.u(x, y), margin);
      flow.v(x, y) = away_from_integer(y, flow.v(x, y), margin);
    }
  }
  return flow;
}

namespace {

// Fourth-order central difference. The penalty bends sharply within epsilon
// of zero, which rules out plain central differences, and the loss values are
// large enough that roundoff grows quickly below h ~ 1e-5.
template <typename Eval>
double central(Eval&& at, double h) {
  return (8.0 * (at(h) - at(-h)) - (at(2 * h) - at(-2 * h))) / (12.0 * h);
}

void record(GradCheck& out, double numeric, double analytic, double floor) {
  const double abs_err = std::abs(numeric - analytic);
  const double scale = std::max({std::abs(numeric), std::abs(analytic), floor});
  out.max_abs = std::max(out.max_abs, abs_err);
  out.max_rel = std::max(out.max_rel, abs_err / scale);
}

double& variable(FlowField& f, FlowField& b, int which, std::size_t i) {
  switch (which) {
    case 0: return f.u[i];
    case 1: return f.v[i];
    case 2: return b.u[i];
    default: return b.v[i];
  }
}

double gradient_of(const unpiv::LossValueGrad& g, int which, std::size_t i) {
  switch (which) {
    case 0: return g.grad_forward.u[i];
    case 1: return g.grad_forward.v[i];
    case 2: return g.grad_backward.u[i];
    default: return g.grad_backward.v[i];
  }
}

}  // namespace

GradCheck check_gradient(const LossFn& fn, const FlowField& f, const FlowField& b, double h,
                         double floor) {
  const unpiv::LossValueGrad base = fn(f, b);
  GradCheck out;
  FlowField fp = f, bp = b;
  for (std::size_t i = 0; i < f.size(); ++i) {
    for (int which = 0; which < 4; ++which) {
      double& x = variable(fp, bp, which, i);
      const double x0 = x;
      const double numeric = central([&](double d) {
        x = x0 + d;
        return fn(fp, bp).value;
      }, h);
      x = x0;
      record(out, numeric, gradient_of(base, which, i), floor);
    }
  }
  return out;
}

TermChecks check_term_gradients(const GrayImage& i1, const GrayImage& i2, const FlowField& f,
                                const FlowField& b, const unpiv::LossParams& p, double h,
                                double floor) {
  const unpiv::LossValueGrad gp = unpiv::photometric_loss(i1, i2, f, b, p);
  const unpiv::LossValueGrad gs = unpiv::smoothness_loss(f, b, p);
  const unpiv::LossValueGrad gc = unpiv::consistency_loss(f, b, p);
  const unpiv::LossValueGrad gt = unpiv::total_loss(i1, i2, f, b, p).weighted;
  TermChecks out;
  FlowField fp = f, bp = b;
  for (std::size_t i = 0; i < f.size(); ++i) {
    for (int which = 0; which < 4; ++which) {
      double& x = variable(fp, bp, which, i);
      const double x0 = x;
      unpiv::TotalLoss at[4];
      const double steps[4] = {h, -h, 2 * h, -2 * h};
      for (int k = 0; k < 4; ++k) {
        x = x0 + steps[k];
        at[k] = unpiv::total_loss(i1, i2, fp, bp, p);
      }
      x = x0;
      auto diff = [&](auto field) {
        return (8.0 * (field(at[0]) - field(at[1])) - (field(at[2]) - field(at[3]))) / (12.0 * h);
      };
      record(out.photometric, diff([](const unpiv::TotalLoss& t) { return t.photometric; }),
             gradient_of(gp, which, i), floor);
      record(out.smoothness, diff([](const unpiv::TotalLoss& t) { return t.smoothness; }),
             gradient_of(gs, which, i), floor);
      record(out.consistency, diff([](const unpiv::TotalLoss& t) { return t.consistency; }),
             gradient_of(gc, which, i), floor);
      record(out.total, diff([](const unpiv::TotalLoss& t) { return t.weighted.value; }),
             gradient_of(gt, which, i), floor);
    }
  }
  return out;
}

TempDir::TempDir() {
  static std::atomic<int> counter{0};
  path_ = std::filesystem::temp_directory_path() /
          ("unpiv_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
  std::filesystem::create_directories(path_);
}

TempDir::~TempDir() {
  std::error_code ec;
  std::filesystem::remove_all(path_, ec);
}

std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

ShellRun run_shell(const std::string& command) {
  ShellRun r;
  FILE* pipe = popen((command + " 2>&1").c_str(), "r");
  if (!pipe) return r;
  char buf[4096];
  std::size_t n = 0;
  while ((n = std::fread(buf, 1, sizeof(buf), pipe)) > 0) r.output.append(buf, n);
  const int status = pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

}  // namespace testing
