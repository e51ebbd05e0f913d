#include "unpiv/color.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace unpiv {

std::array<std::uint8_t, 3> hsv_to_rgb(const Hsv& c) {
  const double h = std::fmod(c.hue, 360.0) / 60.0;
  const double chroma = c.value * c.saturation;
  const double x = chroma * (1.0 - std::abs(std::fmod(h, 2.0) - 1.0));
  double r = 0, g = 0, b = 0;
  switch (static_cast<int>(h)) {
    case 0: r = chroma; g = x; break;
    case 1: r = x; g = chroma; break;
    case 2: g = chroma; b = x; break;
    case 3: g = x; b = chroma; break;
    case 4: r = x; b = chroma; break;
    default: r = chroma; b = x; break;
  }
  const double m = c.value - chroma;
  auto byte = [](double v) {
    return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
  };
  return {byte(r + m), byte(g + m), byte(b + m)};
}

namespace {

double percentile99(std::vector<double> values) {
  if (values.empty()) return 0.0;
  const auto rank = static_cast<std::size_t>(std::ceil(0.99 * static_cast<double>(values.size())));
  const std::size_t k = std::max<std::size_t>(rank, 1) - 1;
  std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(k), values.end());
  return values[k];
}

double saturation(double magnitude, double max_magnitude) {
  if (magnitude <= 0.0) return 0.0;
  if (!(max_magnitude > 0.0)) return 1.0;
  return std::min(1.0, magnitude / max_magnitude);
}

}  // namespace

double auto_max_magnitude(const FlowField& flow) {
  std::vector<double> mags(flow.size());
  for (std::size_t i = 0; i < flow.size(); ++i) mags[i] = std::hypot(flow.u[i], flow.v[i]);
  return percentile99(std::move(mags));
}

std::vector<Hsv> flow_to_hsv(const FlowField& flow, double max_magnitude) {
  require_finite(flow.u.values(), "flow u");
  require_finite(flow.v.values(), "flow v");
  std::vector<Hsv> out(flow.size());
  for (std::size_t i = 0; i < flow.size(); ++i) {
    double deg = std::atan2(flow.v[i], flow.u[i]) * (180.0 / std::numbers::pi);
    if (deg < 0.0) deg += 360.0;
    if (deg >= 360.0) deg -= 360.0;
    out[i] = {deg, saturation(std::hypot(flow.u[i], flow.v[i]), max_magnitude), 1.0};
  }
  return out;
}

io::RgbImage flow_to_color(const FlowField& flow, std::optional<double> max_magnitude) {
  const double m = max_magnitude ? *max_magnitude : auto_max_magnitude(flow);
  const std::vector<Hsv> hsv = flow_to_hsv(flow, m);
  io::RgbImage img{flow.width(), flow.height(), std::vector<std::uint8_t>(3 * flow.size())};
  for (std::size_t i = 0; i < hsv.size(); ++i) {
    const auto rgb = hsv_to_rgb(hsv[i]);
    std::copy(rgb.begin(), rgb.end(), img.rgb.begin() + static_cast<std::ptrdiff_t>(3 * i));
  }
  return img;
}

io::RgbImage error_map(const FlowField& estimate, const FlowField& truth,
                       std::optional<double> max_error) {
  require_same_shape(estimate, truth, "error_map");
  std::vector<double> err(estimate.size());
  for (std::size_t i = 0; i < err.size(); ++i) {
    err[i] = std::hypot(estimate.u[i] - truth.u[i], estimate.v[i] - truth.v[i]);
  }
  const double m = max_error ? *max_error : percentile99(err);
  io::RgbImage img{estimate.width(), estimate.height(),
                   std::vector<std::uint8_t>(3 * estimate.size())};
  for (std::size_t i = 0; i < err.size(); ++i) {
    const auto rgb = hsv_to_rgb({0.0, saturation(err[i], m), 1.0});
    std::copy(rgb.begin(), rgb.end(), img.rgb.begin() + static_cast<std::ptrdiff_t>(3 * i));
  }
  return img;
}

}  // namespace unpiv
