#include "unpiv/synth.hpp"

#include <charconv>
#include <cmath>
#include <numbers>
#include <vector>

#include <json.hpp>

namespace unpiv::synth {

int ParticleConfig::resolved_count() const {
  if (particle_count > 0) return particle_count;
  return std::max(1, static_cast<int>(std::lround(0.05 * image_size * image_size)));
}

void ParticleConfig::validate() const {
  if (!(particle_sigma > 0.0)) throw InvalidInput("particle sigma must be positive");
  if (!(background >= 0.0 && background < peak_intensity && peak_intensity <= 1.0)) {
    throw InvalidInput("need 0 <= background < peak_intensity <= 1");
  }
  if (particle_count < 0) throw InvalidInput("particle_count must be >= 1 (or 0 for default)");
  if (image_size < 2) throw InvalidInput("image_size must be >= 2");
}

AnalyticFlow AnalyticFlow::uniform(double dx, double dy) {
  return {FlowKind::uniform, dx, dy, {}, {}};
}
AnalyticFlow AnalyticFlow::shear(double rate) { return {FlowKind::shear, rate, 0.0, {}, {}}; }
AnalyticFlow AnalyticFlow::solid_rotation(double omega) {
  return {FlowKind::solid_rotation, omega, 0.0, {}, {}};
}
AnalyticFlow AnalyticFlow::lamb_oseen(double circulation, double core_radius) {
  return {FlowKind::lamb_oseen_vortex, circulation, core_radius, {}, {}};
}
AnalyticFlow AnalyticFlow::sinusoid(double amplitude, double wavelength) {
  return {FlowKind::sinusoid, amplitude, wavelength, {}, {}};
}

Displacement AnalyticFlow::at(double x, double y, int image_size) const {
  const double mid = 0.5 * (image_size - 1);
  const double rx = x - center_x.value_or(mid);
  const double ry = y - center_y.value_or(mid);
  switch (kind) {
    case FlowKind::uniform:
      return {p0, p1};
    case FlowKind::shear:
      return {p0 * ry, 0.0};
    case FlowKind::solid_rotation:
      return {-p0 * ry, p0 * rx};
    case FlowKind::lamb_oseen_vortex: {
      const double r2 = rx * rx + ry * ry;
      if (r2 == 0.0) return {};
      // Azimuthal speed G/(2 pi r) (1 - exp(-r^2/rc^2)), divided by r once more
      // to turn (rx, ry) into the unit tangent.
      const double k = p0 / (2.0 * std::numbers::pi * r2) * (1.0 - std::exp(-r2 / (p1 * p1)));
      return {-k * ry, k * rx};
    }
    case FlowKind::sinusoid: {
      const double w = 2.0 * std::numbers::pi / p1;
      return {p0 * std::sin(w * y), p0 * std::sin(w * x)};
    }
  }
  return {};
}

std::string AnalyticFlow::kind_name() const {
  switch (kind) {
    case FlowKind::uniform: return "uniform";
    case FlowKind::shear: return "shear";
    case FlowKind::solid_rotation: return "rotation";
    case FlowKind::lamb_oseen_vortex: return "vortex";
    case FlowKind::sinusoid: return "sinusoid";
  }
  return "unknown";
}

namespace {

std::string num(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

[[noreturn]] void bad_spec(std::string_view text, std::string_view why) {
  throw InvalidInput("bad flow spec '" + std::string(text) + "' (" + std::string(why) +
                     "); expected " + kFlowSpecGrammar);
}

std::uint64_t splitmix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

void splat(Grid& acc, double cx, double cy, double sigma) {
  const double reach = 3.0 * sigma;
  const double reach2 = reach * reach;
  const double inv2s2 = 1.0 / (2.0 * sigma * sigma);
  const int x0 = std::max(0, static_cast<int>(std::ceil(cx - reach)));
  const int x1 = std::min(acc.width() - 1, static_cast<int>(std::floor(cx + reach)));
  const int y0 = std::max(0, static_cast<int>(std::ceil(cy - reach)));
  const int y1 = std::min(acc.height() - 1, static_cast<int>(std::floor(cy + reach)));
  for (int y = y0; y <= y1; ++y) {
    const double ddy = y - cy;
    for (int x = x0; x <= x1; ++x) {
      const double ddx = x - cx;
      const double d2 = ddx * ddx + ddy * ddy;
      if (d2 <= reach2) acc(x, y) += std::exp(-d2 * inv2s2);
    }
  }
}

GrayImage finish(const Grid& acc, const ParticleConfig& c) {
  GrayImage img(acc.width(), acc.height());
  const double amp = c.peak_intensity - c.background;
  for (std::size_t i = 0; i < acc.size(); ++i) {
    img[i] = std::clamp(c.background + amp * acc[i], 0.0, 1.0);
  }
  return img;
}

}  // namespace

std::string AnalyticFlow::spec() const {
  switch (kind) {
    case FlowKind::uniform: return "uniform:" + num(p0) + "," + num(p1);
    case FlowKind::shear: return "shear:" + num(p0);
    case FlowKind::solid_rotation: return "rotation:" + num(p0);
    case FlowKind::lamb_oseen_vortex: return "vortex:" + num(p0) + "," + num(p1);
    case FlowKind::sinusoid: return "sinusoid:" + num(p0) + "," + num(p1);
  }
  return {};
}

AnalyticFlow parse_flow_spec(std::string_view text) {
  const auto colon = text.find(':');
  if (colon == std::string_view::npos) bad_spec(text, "missing ':'");
  const std::string_view kind = text.substr(0, colon);
  std::vector<double> params;
  std::string_view rest = text.substr(colon + 1);
  while (true) {
    const auto comma = rest.find(',');
    const std::string_view piece = rest.substr(0, comma);
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(piece.data(), piece.data() + piece.size(), v);
    if (piece.empty() || ec != std::errc() || ptr != piece.data() + piece.size() ||
        !std::isfinite(v)) {
      bad_spec(text, "unparseable number '" + std::string(piece) + "'");
    }
    params.push_back(v);
    if (comma == std::string_view::npos) break;
    rest = rest.substr(comma + 1);
  }
  auto expect = [&](std::size_t n) {
    if (params.size() != n) bad_spec(text, std::to_string(n) + " parameter(s) expected");
  };
  if (kind == "uniform") {
    expect(2);
    return AnalyticFlow::uniform(params[0], params[1]);
  }
  if (kind == "shear") {
    expect(1);
    return AnalyticFlow::shear(params[0]);
  }
  if (kind == "rotation") {
    expect(1);
    return AnalyticFlow::solid_rotation(params[0]);
  }
  if (kind == "vortex") {
    expect(2);
    if (!(params[1] > 0.0)) bad_spec(text, "core radius must be positive");
    return AnalyticFlow::lamb_oseen(params[0], params[1]);
  }
  if (kind == "sinusoid") {
    expect(2);
    if (params[1] == 0.0) bad_spec(text, "wavelength must be non-zero");
    return AnalyticFlow::sinusoid(params[0], params[1]);
  }
  bad_spec(text, "unknown kind '" + std::string(kind) + "'");
}

FlowField sample_flow(const AnalyticFlow& flow, int image_size) {
  FlowField f(image_size, image_size);
  for (int y = 0; y < image_size; ++y) {
    for (int x = 0; x < image_size; ++x) {
      const Displacement d = flow.at(x, y, image_size);
      f.u(x, y) = d.dx;
      f.v(x, y) = d.dy;
    }
  }
  return f;
}

FlowStats flow_stats(const AnalyticFlow& flow, int image_size) {
  FlowStats s;
  double sum = 0.0;
  for (int y = 0; y < image_size; ++y) {
    for (int x = 0; x < image_size; ++x) {
      const Displacement d = flow.at(x, y, image_size);
      const double m = std::hypot(d.dx, d.dy);
      s.max_magnitude = std::max(s.max_magnitude, m);
      sum += m;
    }
  }
  s.mean_magnitude = sum / (static_cast<double>(image_size) * image_size);
  return s;
}

double uniform01(std::uint64_t seed, std::uint64_t counter) {
  const std::uint64_t bits = splitmix64(splitmix64(seed) + counter);
  return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

SyntheticPair render_pair(const AnalyticFlow& flow, const ParticleConfig& config) {
  config.validate();
  const int n = config.image_size;
  // Particles are scattered over a margin around the frame so that frame 2 is
  // populated where material advects in from outside.
  const double margin = flow_stats(flow, n).max_magnitude + 3.0 * config.particle_sigma + 2.0;
  const double extent = n + 2.0 * margin;
  const double area_ratio = (extent * extent) / (static_cast<double>(n) * n);
  const auto scattered = static_cast<std::uint64_t>(
      std::llround(config.resolved_count() * area_ratio));

  Grid acc1(n, n);
  Grid acc2(n, n);
  for (std::uint64_t i = 0; i < scattered; ++i) {
    const double cx = -margin + extent * uniform01(config.seed, 2 * i);
    const double cy = -margin + extent * uniform01(config.seed, 2 * i + 1);
    const Displacement d = flow.at(cx, cy, n);
    splat(acc1, cx, cy, config.particle_sigma);
    splat(acc2, cx + d.dx, cy + d.dy, config.particle_sigma);
  }
  return {finish(acc1, config), finish(acc2, config), sample_flow(flow, n)};
}

std::string metadata_json(const AnalyticFlow& flow, const ParticleConfig& config) {
  nlohmann::ordered_json doc;
  doc["flow_kind"] = flow.kind_name();
  doc["flow_spec"] = flow.spec();
  doc["params"] = {flow.p0, flow.p1};
  const FlowStats st = flow_stats(flow, config.image_size);
  doc["max_displacement"] = st.max_magnitude;
  doc["mean_displacement"] = st.mean_magnitude;
  doc["seed"] = config.seed;
  doc["rng"] = "splitmix64(splitmix64(seed) + counter)";
  doc["config"] = {{"image_size", config.image_size},
                   {"particle_count", config.resolved_count()},
                   {"particle_sigma", config.particle_sigma},
                   {"peak_intensity", config.peak_intensity},
                   {"background", config.background}};
  return doc.dump(2) + "\n";
}

}  // namespace unpiv::synth
