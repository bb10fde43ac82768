#pragma once

// Minimal grayscale image decoding for dataset ingestion (PNG, PGM, PPM).

#include <cstddef>
#include <string>
#include <vector>

namespace viewgen {

/// Row-major intensities on the 0..255 scale.
struct GrayImage {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<double> pixels;

  double at(std::size_t x, std::size_t y) const { return pixels[y * width + x]; }
};

/// Luma 0.299 R + 0.587 G + 0.114 B.
double luma(double r, double g, double b);

/// Decodes PNG, binary PGM (P5) or binary PPM (P6), chosen by content.
/// Colour images are converted with luma(). Throws FormatError on anything
/// it cannot decode.
GrayImage load_grayscale(const std::string& path);

/// Binary PGM, pixels rounded and clamped to 0..255.
void write_pgm(const std::string& path, const GrayImage& image);

}  // namespace viewgen
