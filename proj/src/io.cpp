#include "unpiv/io.hpp"

#include <png.h>
#include <unistd.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>

namespace unpiv::io {

namespace fs = std::filesystem;

namespace {

static_assert(std::endian::native == std::endian::little,
              ".flo encoding assumes a little-endian host");

template <typename T>
void put(std::vector<std::uint8_t>& out, T value) {
  std::uint8_t raw[sizeof(T)];
  std::memcpy(raw, &value, sizeof(T));
  out.insert(out.end(), raw, raw + sizeof(T));
}

template <typename T>
T get(const std::vector<std::uint8_t>& in, std::size_t offset) {
  T value;
  std::memcpy(&value, in.data() + offset, sizeof(T));
  return value;
}

std::string lower_ext(const fs::path& path) {
  std::string ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return ext;
}

std::uint8_t to_byte(double v) {
  double s = std::clamp(v, 0.0, 1.0) * 255.0;
  return static_cast<std::uint8_t>(std::lround(s));
}

GrayImage read_pgm(const fs::path& path) {
  std::vector<std::uint8_t> bytes = read_bytes(path);
  std::size_t pos = 0;
  auto next_token = [&]() {
    std::string tok;
    while (pos < bytes.size()) {
      char c = static_cast<char>(bytes[pos]);
      if (c == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        ++pos;
      } else {
        break;
      }
    }
    while (pos < bytes.size() && !std::isspace(static_cast<unsigned char>(bytes[pos]))) {
      tok.push_back(static_cast<char>(bytes[pos++]));
    }
    return tok;
  };
  if (next_token() != "P5") throw FormatError(path.string() + ": not a binary PGM (P5)");
  int w = 0, h = 0, maxval = 0;
  try {
    w = std::stoi(next_token());
    h = std::stoi(next_token());
    maxval = std::stoi(next_token());
  } catch (const std::exception&) {
    throw FormatError(path.string() + ": malformed PGM header");
  }
  if (w <= 0 || h <= 0 || maxval != 255) {
    throw FormatError(path.string() + ": unsupported PGM (need 8-bit, maxval 255)");
  }
  ++pos;  // single whitespace before raster
  const std::size_t n = static_cast<std::size_t>(w) * static_cast<std::size_t>(h);
  if (bytes.size() < pos + n) throw FormatError(path.string() + ": truncated PGM raster");
  GrayImage img(w, h);
  for (std::size_t i = 0; i < n; ++i) img[i] = bytes[pos + i];
  return img;
}

void write_pgm(const fs::path& path, const GrayImage& image) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  out << "P5\n" << image.width() << ' ' << image.height() << "\n255\n";
  std::vector<char> raster(image.size());
  for (std::size_t i = 0; i < image.size(); ++i) raster[i] = static_cast<char>(to_byte(image[i]));
  out.write(raster.data(), static_cast<std::streamsize>(raster.size()));
  if (!out) throw Error("failed writing " + path.string());
}

std::vector<std::uint8_t> read_png(const fs::path& path, png_uint_32 format, int& w, int& h) {
  png_image img;
  std::memset(&img, 0, sizeof(img));
  img.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&img, path.c_str())) {
    throw FormatError(path.string() + ": " + img.message);
  }
  img.format = format;
  std::vector<std::uint8_t> buf(PNG_IMAGE_SIZE(img));
  if (!png_image_finish_read(&img, nullptr, buf.data(), 0, nullptr)) {
    std::string msg = img.message;
    png_image_free(&img);
    throw FormatError(path.string() + ": " + msg);
  }
  w = static_cast<int>(img.width);
  h = static_cast<int>(img.height);
  return buf;
}

void write_png(const fs::path& path, png_uint_32 format, int w, int h, const std::uint8_t* data) {
  png_image img;
  std::memset(&img, 0, sizeof(img));
  img.version = PNG_IMAGE_VERSION;
  img.width = static_cast<png_uint_32>(w);
  img.height = static_cast<png_uint_32>(h);
  img.format = format;
  if (!png_image_write_to_file(&img, path.c_str(), 0, data, 0, nullptr)) {
    throw Error("cannot write " + path.string() + ": " + img.message);
  }
}

}  // namespace

std::vector<std::uint8_t> encode_flo(const FlowField& flow) {
  std::vector<std::uint8_t> out;
  out.reserve(12 + flow.size() * 8);
  put(out, kFloMagic);
  put(out, static_cast<std::int32_t>(flow.width()));
  put(out, static_cast<std::int32_t>(flow.height()));
  for (std::size_t i = 0; i < flow.size(); ++i) {
    put(out, static_cast<float>(flow.u[i]));
    put(out, static_cast<float>(flow.v[i]));
  }
  return out;
}

FlowField decode_flo(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() < 12 || get<float>(bytes, 0) != kFloMagic) {
    throw FormatError("not a flow file");
  }
  const auto w = get<std::int32_t>(bytes, 4);
  const auto h = get<std::int32_t>(bytes, 8);
  if (w < 0 || h < 0 || w > (1 << 16) || h > (1 << 16)) {
    throw FormatError("flow file has implausible dimensions");
  }
  const std::size_t n = static_cast<std::size_t>(w) * static_cast<std::size_t>(h);
  if (bytes.size() != 12 + n * 8) throw FormatError("flow file payload is truncated");
  FlowField flow(w, h);
  for (std::size_t i = 0; i < n; ++i) {
    flow.u[i] = get<float>(bytes, 12 + 8 * i);
    flow.v[i] = get<float>(bytes, 16 + 8 * i);
  }
  return flow;
}

FlowField read_flo(const fs::path& path) {
  try {
    return decode_flo(read_bytes(path));
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

void write_flo(const fs::path& path, const FlowField& flow) {
  const std::vector<std::uint8_t> bytes = encode_flo(flow);
  write_atomic(path, [&](const fs::path& tmp) {
    std::ofstream out(tmp, std::ios::binary);
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error("failed writing " + tmp.string());
  });
}

GrayImage read_image(const fs::path& path) {
  if (!fs::exists(path)) throw Error("cannot read image " + path.string() + ": no such file");
  const std::string ext = lower_ext(path);
  if (ext == ".pgm") return read_pgm(path);
  if (ext == ".png") {
    int w = 0, h = 0;
    std::vector<std::uint8_t> buf = read_png(path, PNG_FORMAT_GRAY, w, h);
    GrayImage img(w, h);
    for (std::size_t i = 0; i < img.size(); ++i) img[i] = buf[i];
    return img;
  }
  throw FormatError(path.string() + ": unsupported image extension '" + ext + "'");
}

void write_image(const fs::path& path, const GrayImage& image) {
  const std::string ext = lower_ext(path);
  write_atomic(path, [&](const fs::path& tmp) {
    if (ext == ".pgm") {
      write_pgm(tmp, image);
    } else if (ext == ".png") {
      std::vector<std::uint8_t> buf(image.size());
      for (std::size_t i = 0; i < image.size(); ++i) buf[i] = to_byte(image[i]);
      write_png(tmp, PNG_FORMAT_GRAY, image.width(), image.height(), buf.data());
    } else {
      throw FormatError(path.string() + ": unsupported image extension '" + ext + "'");
    }
  });
}

void write_rgb_png(const fs::path& path, const RgbImage& image) {
  write_atomic(path, [&](const fs::path& tmp) {
    write_png(tmp, PNG_FORMAT_RGB, image.width, image.height, image.rgb.data());
  });
}

RgbImage read_rgb_png(const fs::path& path) {
  RgbImage img;
  img.rgb = read_png(path, PNG_FORMAT_RGB, img.width, img.height);
  return img;
}

void write_atomic(const fs::path& path, const std::function<void(const fs::path&)>& writer) {
  fs::path tmp = path;
  tmp += ".tmp" + std::to_string(::getpid());
  try {
    writer(tmp);
    fs::rename(tmp, path);
  } catch (...) {
    std::error_code ec;
    fs::remove(tmp, ec);
    throw;
  }
}

void write_text_atomic(const fs::path& path, const std::string& text) {
  write_atomic(path, [&](const fs::path& tmp) {
    std::ofstream out(tmp, std::ios::binary);
    out << text;
    if (!out) throw Error("failed writing " + tmp.string());
  });
}

std::vector<std::uint8_t> read_bytes(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace unpiv::io
