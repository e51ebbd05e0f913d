#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <ostream>
#include <string>
#include <vector>

#include "unpiv/grid.hpp"

namespace unpiv::io {

/// Middlebury .flo header tag: the float 202021.25 ("PIEH" in ASCII).
inline constexpr float kFloMagic = 202021.25f;

/// Serializes a flow as .flo bytes: magic, int32 width, int32 height, then
/// interleaved float32 (u, v) row-major, all little-endian.
std::vector<std::uint8_t> encode_flo(const FlowField& flow);
FlowField decode_flo(const std::vector<std::uint8_t>& bytes);

FlowField read_flo(const std::filesystem::path& path);
void write_flo(const std::filesystem::path& path, const FlowField& flow);

/// 8-bit grayscale read; values stay in [0, 255] (see normalize()).
/// Dispatches on extension: .png, .pgm. Colour PNGs are converted to gray.
GrayImage read_image(const std::filesystem::path& path);
/// Writes a [0, 1] image as 8-bit (.png or .pgm), clamping and rounding.
void write_image(const std::filesystem::path& path, const GrayImage& image);

struct RgbImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> rgb;  // interleaved, row-major
};
void write_rgb_png(const std::filesystem::path& path, const RgbImage& image);
RgbImage read_rgb_png(const std::filesystem::path& path);

/// Writes through a sibling temp file and renames onto `path`, so readers never
/// observe a partially written target.
void write_atomic(const std::filesystem::path& path,
                  const std::function<void(const std::filesystem::path&)>& writer);
void write_text_atomic(const std::filesystem::path& path, const std::string& text);

std::vector<std::uint8_t> read_bytes(const std::filesystem::path& path);

}  // namespace unpiv::io
