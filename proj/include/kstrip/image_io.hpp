#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "kstrip/ctensor.hpp"
#include "kstrip/mask.hpp"

namespace kstrip {

// 8-bit grayscale, row-major.
struct Gray8 {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<std::uint8_t> pixels;
};

// Linear map of [min, max] onto [0, 255]; a constant input maps to 0.
Gray8 rescale_u8(std::span<const double> values, std::size_t height, std::size_t width);

// log1p(|k|) rescaled to [0, 255]. Accepts [H, W] or [1, H, W].
Gray8 log_kspace_u8(const ComplexTensor& k);
// |image| rescaled to [0, 255].
Gray8 magnitude_u8(const ComplexTensor& image);
// Phase in (-pi, pi] mapped linearly onto [0, 255].
Gray8 phase_u8(const ComplexTensor& image);
Gray8 mask_u8(const BinaryMask& mask);

// Tiles laid out row by row on a black background, `gap` pixels apart.
// All tiles must share one size.
Gray8 tile_grid(const std::vector<Gray8>& tiles, std::size_t columns, std::size_t gap = 2);

// Fixed encoder settings so equal images give equal bytes.
std::vector<std::uint8_t> encode_png(const Gray8& image);
void write_png(const std::string& path, const Gray8& image);

}  // namespace kstrip
