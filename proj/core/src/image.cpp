#include "viewgen/image.hpp"

#include <algorithm>
#include <cmath>
#include <cctype>
#include <cstring>
#include <fstream>
#include <iterator>

#include <png.h>

#include "viewgen/errors.hpp"

namespace viewgen {

namespace {

std::vector<unsigned char> read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

GrayImage decode_png(const std::vector<unsigned char>& bytes, const std::string& path) {
  png_image image;
  std::memset(&image, 0, sizeof image);
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&image, bytes.data(), bytes.size()))
    throw FormatError(path + ": " + image.message);
  image.format = PNG_FORMAT_RGB;
  std::vector<unsigned char> rgb(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, rgb.data(), 0, nullptr)) {
    const std::string msg = image.message;
    png_image_free(&image);
    throw FormatError(path + ": " + msg);
  }
  GrayImage out{image.width, image.height, {}};
  out.pixels.resize(out.width * out.height);
  for (std::size_t i = 0; i < out.pixels.size(); ++i)
    out.pixels[i] = luma(rgb[3 * i], rgb[3 * i + 1], rgb[3 * i + 2]);
  return out;
}

GrayImage decode_pnm(const std::vector<unsigned char>& bytes, const std::string& path) {
  std::size_t pos = 2;
  auto next_int = [&]() -> std::size_t {
    for (;;) {
      while (pos < bytes.size() && std::isspace(bytes[pos])) ++pos;
      if (pos < bytes.size() && bytes[pos] == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
        continue;
      }
      break;
    }
    if (pos >= bytes.size() || !std::isdigit(bytes[pos])) throw FormatError(path + ": malformed PNM header");
    std::size_t v = 0;
    while (pos < bytes.size() && std::isdigit(bytes[pos])) {
      v = v * 10 + (bytes[pos++] - '0');
      if (v > (1u << 20)) throw FormatError(path + ": PNM header value too large");
    }
    return v;
  };
  const bool color = bytes[1] == '6';
  const std::size_t w = next_int();
  const std::size_t h = next_int();
  const std::size_t maxval = next_int();
  if (w == 0 || h == 0 || maxval == 0 || maxval > 255) throw FormatError(path + ": unsupported PNM header");
  ++pos;  // single whitespace before the raster
  const std::size_t channels = color ? 3 : 1;
  if (bytes.size() < pos + w * h * channels) throw FormatError(path + ": truncated PNM raster");
  const double scale = 255.0 / static_cast<double>(maxval);
  GrayImage out{w, h, std::vector<double>(w * h)};
  for (std::size_t i = 0; i < w * h; ++i) {
    const unsigned char* p = bytes.data() + pos + i * channels;
    out.pixels[i] = color ? luma(p[0] * scale, p[1] * scale, p[2] * scale) : p[0] * scale;
  }
  return out;
}

}  // namespace

double luma(double r, double g, double b) { return 0.299 * r + 0.587 * g + 0.114 * b; }

GrayImage load_grayscale(const std::string& path) {
  const auto bytes = read_file(path);
  static constexpr unsigned char kPngSig[] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
  if (bytes.size() >= 8 && std::equal(kPngSig, kPngSig + 8, bytes.begin())) return decode_png(bytes, path);
  if (bytes.size() >= 3 && bytes[0] == 'P' && (bytes[1] == '5' || bytes[1] == '6')) return decode_pnm(bytes, path);
  throw FormatError(path + ": unrecognized image format");
}

void write_pgm(const std::string& path, const GrayImage& image) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write " + path);
  out << "P5\n" << image.width << ' ' << image.height << "\n255\n";
  for (double v : image.pixels) out.put(static_cast<char>(std::clamp(std::lround(v), 0L, 255L)));
  if (!out) throw FormatError("write failed: " + path);
}

}  // namespace viewgen
