#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace kstrip {

// H x W boolean grid, one byte per pixel, pixel spacing 1.
struct BinaryMask {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<std::uint8_t> bits;

  BinaryMask() = default;
  BinaryMask(std::size_t h, std::size_t w) : height(h), width(w), bits(h * w, 0) {}

  std::size_t size() const { return bits.size(); }
  bool operator[](std::size_t i) const { return bits[i] != 0; }
  bool at(std::size_t r, std::size_t c) const { return bits[r * width + c] != 0; }
  void set(std::size_t r, std::size_t c, bool v) { bits[r * width + c] = v ? 1 : 0; }
  std::size_t count() const {
    std::size_t n = 0;
    for (auto b : bits) n += b ? 1 : 0;
    return n;
  }
  bool empty() const { return count() == 0; }

  friend bool operator==(const BinaryMask&, const BinaryMask&) = default;
};

}  // namespace kstrip
