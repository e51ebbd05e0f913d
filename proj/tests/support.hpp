#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <random>
#include <string>

#include "unpiv/grid.hpp"
#include "unpiv/loss.hpp"

namespace testing {

using unpiv::FlowField;
using unpiv::GrayImage;

// Smooth random texture in [0, 1]: a few random plane waves plus mild noise.
GrayImage random_texture(int w, int h, std::uint64_t seed);

// Flow whose values keep every sample point x + flow(x) at least `margin`
// away from integer coordinates, so bilinear kinks never sit inside a finite
// difference stencil.
FlowField off_lattice_flow(int w, int h, std::uint64_t seed, double amplitude,
                           double margin = 0.15);

// Rewrites flow_b so that the consistency samples x + flow_b(x) also avoid
// integer coordinates; flow_f stays as is.
FlowField nudge_off_lattice(FlowField flow, double margin = 0.15);

struct GradCheck {
  double max_rel = 0.0;
  double max_abs = 0.0;
};

using LossFn = std::function<unpiv::LossValueGrad(const FlowField&, const FlowField&)>;

// Central differences (fourth order) on every flow variable against the
// analytic gradient. Relative error is |a - n| / max(|a|, |n|, floor).
GradCheck check_gradient(const LossFn& fn, const FlowField& f, const FlowField& b,
                         double h = 2e-5, double floor = 1e-3);

struct TermChecks {
  GradCheck photometric, smoothness, consistency, total;
};

// Same check for all three terms and the weighted total at once: every probe
// evaluates total_loss once and differences its raw term values and its
// weighted value. Analytic gradients come from the standalone term functions.
TermChecks check_term_gradients(const GrayImage& i1, const GrayImage& i2, const FlowField& f,
                                const FlowField& b, const unpiv::LossParams& p,
                                double h = 2e-5, double floor = 1e-3);

// Scratch directory removed on destruction.
class TempDir {
 public:
  TempDir();
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

std::string read_file(const std::filesystem::path& p);

struct ShellRun {
  int code = -1;
  std::string output;  // stdout and stderr together
};

// Runs through /bin/sh; code is -1 when the command did not exit normally.
ShellRun run_shell(const std::string& command);

}  // namespace testing
