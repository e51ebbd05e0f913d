#include <doctest.h>

#include <cmath>
#include <random>

#include "unpiv/color.hpp"

using namespace unpiv;

TEST_CASE("hsv primaries") {
  using Rgb = std::array<std::uint8_t, 3>;
  CHECK(hsv_to_rgb({0, 1, 1}) == Rgb{255, 0, 0});
  CHECK(hsv_to_rgb({120, 1, 1}) == Rgb{0, 255, 0});
  CHECK(hsv_to_rgb({240, 1, 1}) == Rgb{0, 0, 255});
  CHECK(hsv_to_rgb({60, 1, 1}) == Rgb{255, 255, 0});
  CHECK(hsv_to_rgb({300, 0, 1}) == Rgb{255, 255, 255});
  CHECK(hsv_to_rgb({10, 1, 0}) == Rgb{0, 0, 0});
}

TEST_CASE("zero flow is white") {
  const io::RgbImage img = flow_to_color(FlowField(7, 5));
  CHECK(img.width == 7);
  CHECK(img.height == 5);
  for (std::uint8_t c : img.rgb) CHECK(c == 255);
}

TEST_CASE("saturation and hue") {
  FlowField f(3, 1);
  f.u(0, 0) = 2.0;  // hue 0, full saturation at max 2
  f.u(1, 0) = 1.0;  // half saturation
  f.v(2, 0) = 5.0;  // clipped, hue 90
  const std::vector<Hsv> hsv = flow_to_hsv(f, 2.0);
  CHECK(hsv[0].hue == 0.0);
  CHECK(hsv[0].saturation == 1.0);
  CHECK(hsv[1].saturation == doctest::Approx(0.5));
  CHECK(hsv[2].hue == doctest::Approx(90.0));
  CHECK(hsv[2].saturation == 1.0);
  const io::RgbImage img = flow_to_color(f, 2.0);
  CHECK(img.rgb[0] == 255);
  CHECK(img.rgb[1] == 0);
  CHECK(img.rgb[2] == 0);
}

TEST_CASE("negated flow rotates hue by half a turn") {
  std::mt19937_64 rng(2);
  std::normal_distribution<double> n(0.0, 3.0);
  FlowField f(20, 20);
  for (std::size_t i = 0; i < f.size(); ++i) {
    f.u[i] = n(rng);
    f.v[i] = n(rng);
  }
  FlowField g = f;
  for (std::size_t i = 0; i < g.size(); ++i) {
    g.u[i] = -g.u[i];
    g.v[i] = -g.v[i];
  }
  const auto a = flow_to_hsv(f, 4.0);
  const auto b = flow_to_hsv(g, 4.0);
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].hue >= 0.0);
    CHECK(a[i].hue < 360.0);
    const double d = std::fmod(b[i].hue - a[i].hue + 720.0, 360.0);
    CHECK(d == doctest::Approx(180.0).epsilon(1e-12));
    CHECK(a[i].saturation == b[i].saturation);
  }
}

TEST_CASE("automatic scale is the 99th percentile") {
  FlowField f(10, 10);
  for (int i = 0; i < 100; ++i) f.u[static_cast<std::size_t>(i)] = i + 1.0;
  CHECK(auto_max_magnitude(f) == 99.0);
  CHECK(auto_max_magnitude(FlowField(4, 4)) == 0.0);
}

TEST_CASE("non-finite flow is rejected") {
  FlowField f(2, 2);
  f.v(1, 1) = std::nan("");
  CHECK_THROWS_AS(flow_to_color(f), InvalidInput);
}

TEST_CASE("error map") {
  FlowField t(4, 1), e(4, 1);
  e.u(1, 0) = 0.5;
  e.u(2, 0) = 1.0;
  e.v(3, 0) = 8.0;
  const io::RgbImage img = error_map(e, t, 1.0);
  CHECK(img.rgb[0] == 255);
  CHECK(img.rgb[1] == 255);
  CHECK(img.rgb[2] == 255);
  CHECK(img.rgb[3] == 255);
  CHECK(img.rgb[4] == 128);
  CHECK(img.rgb[6] == 255);
  CHECK(img.rgb[7] == 0);
  CHECK(img.rgb[10] == 0);
  CHECK_THROWS_AS(error_map(FlowField(2, 2), FlowField(3, 2)), DimensionMismatch);
}
