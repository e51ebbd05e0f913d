#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

#include "unpiv/grid.hpp"
#include "unpiv/io.hpp"

namespace unpiv {

struct Hsv {
  double hue = 0.0;  // degrees in [0, 360)
  double saturation = 0.0;
  double value = 1.0;
};

std::array<std::uint8_t, 3> hsv_to_rgb(const Hsv& c);

/// 99th percentile (nearest rank) of the per-pixel flow magnitude.
double auto_max_magnitude(const FlowField& flow);

/// Hue from the flow direction atan2(v, u), saturation from magnitude / max
/// (clipped to 1), value 1: zero motion renders white.
std::vector<Hsv> flow_to_hsv(const FlowField& flow, double max_magnitude);

/// `max_magnitude` unset selects auto_max_magnitude().
io::RgbImage flow_to_color(const FlowField& flow, std::optional<double> max_magnitude = {});

/// Endpoint-error map: white where estimate == truth, red saturation growing
/// with the error (clipped at max_error; unset selects the 99th percentile).
io::RgbImage error_map(const FlowField& estimate, const FlowField& truth,
                       std::optional<double> max_error = {});

}  // namespace unpiv
