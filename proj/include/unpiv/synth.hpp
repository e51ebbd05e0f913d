#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include "unpiv/grid.hpp"

namespace unpiv::synth {

struct ParticleConfig {
  /// Particles per image area; 0 selects 5% of the pixel count.
  int particle_count = 0;
  double particle_sigma = 1.0;  // Gaussian sigma, pixels
  double peak_intensity = 1.0;
  double background = 0.0;
  std::uint64_t seed = 0;
  int image_size = 256;

  int resolved_count() const;
  void validate() const;
};

enum class FlowKind { uniform, shear, solid_rotation, lamb_oseen_vortex, sinusoid };

struct Displacement {
  double dx = 0.0;
  double dy = 0.0;
};

/// Closed-form displacement fields, in pixels per frame interval. Fields with a
/// centre default to the image centre ((size - 1) / 2, (size - 1) / 2).
struct AnalyticFlow {
  FlowKind kind = FlowKind::uniform;
  double p0 = 0.0;  // dx | shear rate | omega | circulation | amplitude
  double p1 = 0.0;  // dy | -          | -     | core radius | wavelength
  std::optional<double> center_x;
  std::optional<double> center_y;

  static AnalyticFlow uniform(double dx, double dy);
  static AnalyticFlow shear(double rate);
  static AnalyticFlow solid_rotation(double omega);
  static AnalyticFlow lamb_oseen(double circulation, double core_radius);
  static AnalyticFlow sinusoid(double amplitude, double wavelength);

  Displacement at(double x, double y, int image_size) const;
  std::string kind_name() const;
  /// Inverse of parse_flow_spec.
  std::string spec() const;
};

/// Parses `kind:param,param`, e.g. uniform:3,1 rotation:0.01 vortex:50,20
/// shear:0.02 sinusoid:2,64. Throws InvalidInput naming the grammar.
AnalyticFlow parse_flow_spec(std::string_view text);
inline constexpr const char* kFlowSpecGrammar =
    "uniform:DX,DY | rotation:OMEGA | vortex:CIRCULATION,CORE_RADIUS | shear:RATE | "
    "sinusoid:AMPLITUDE,WAVELENGTH";

struct FlowStats {
  double max_magnitude = 0.0;
  double mean_magnitude = 0.0;
};

FlowStats flow_stats(const AnalyticFlow& flow, int image_size);

/// Ground truth evaluated on the pixel grid.
FlowField sample_flow(const AnalyticFlow& flow, int image_size);

struct SyntheticPair {
  GrayImage first;
  GrayImage second;
  FlowField truth;
};

/// Renders seeded Gaussian particles in frame 1 and the same particles advected
/// by the flow at their centres in frame 2.
SyntheticPair render_pair(const AnalyticFlow& flow, const ParticleConfig& config);

/// Counter-based uniform double in [0, 1) for (seed, counter).
double uniform01(std::uint64_t seed, std::uint64_t counter);

/// metadata.json content describing a rendered pair.
std::string metadata_json(const AnalyticFlow& flow, const ParticleConfig& config);

}  // namespace unpiv::synth
