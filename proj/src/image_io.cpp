#include "kstrip/image_io.hpp"

#include <png.h>

#include <algorithm>
#include <csetjmp>
#include <cmath>
#include <fstream>

#include "kstrip/error.hpp"

namespace kstrip {

namespace {

void spatial_dims(const ComplexTensor& t, std::size_t& h, std::size_t& w) {
  const auto& s = t.shape();
  if (s.size() == 2 || (s.size() == 3 && s[0] == 1)) {
    h = s[s.size() - 2];
    w = s[s.size() - 1];
    return;
  }
  throw DimensionError("expected an [H, W] or [1, H, W] slice, got " + shape_str(s));
}

struct PngSink {
  std::vector<std::uint8_t> bytes;
  bool failed = false;
};

void append_bytes(png_structp png, png_bytep data, png_size_t length) {
  auto* sink = static_cast<PngSink*>(png_get_io_ptr(png));
  if (sink->failed) return;
  try {
    sink->bytes.insert(sink->bytes.end(), data, data + length);
  } catch (...) {
    sink->failed = true;
  }
}


}  // namespace

Gray8 rescale_u8(std::span<const double> values, std::size_t height, std::size_t width) {
  if (values.size() != height * width) throw DimensionError("rescale_u8: size does not match height x width");
  Gray8 g{height, width, std::vector<std::uint8_t>(values.size(), 0)};
  if (values.empty()) return g;
  const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  const double span = *hi - *lo;
  if (!(span > 0.0)) return g;
  for (std::size_t i = 0; i < values.size(); ++i) {
    g.pixels[i] = static_cast<std::uint8_t>(std::lround(255.0 * (values[i] - *lo) / span));
  }
  return g;
}

Gray8 log_kspace_u8(const ComplexTensor& k) {
  std::size_t h = 0;
  std::size_t w = 0;
  spatial_dims(k, h, w);
  const RealTensor v = log1p_abs(k);
  return rescale_u8(v.data, h, w);
}

Gray8 magnitude_u8(const ComplexTensor& image) {
  std::size_t h = 0;
  std::size_t w = 0;
  spatial_dims(image, h, w);
  const RealTensor v = abs(image);
  return rescale_u8(v.data, h, w);
}

Gray8 phase_u8(const ComplexTensor& image) {
  std::size_t h = 0;
  std::size_t w = 0;
  spatial_dims(image, h, w);
  const RealTensor v = angle(image);
  Gray8 g{h, w, std::vector<std::uint8_t>(v.size())};
  for (std::size_t i = 0; i < v.size(); ++i) {
    g.pixels[i] = static_cast<std::uint8_t>(std::lround(255.0 * (v[i] + M_PI) / (2.0 * M_PI)));
  }
  return g;
}

Gray8 mask_u8(const BinaryMask& mask) {
  Gray8 g{mask.height, mask.width, std::vector<std::uint8_t>(mask.size())};
  for (std::size_t i = 0; i < mask.size(); ++i) g.pixels[i] = mask[i] ? 255 : 0;
  return g;
}

Gray8 tile_grid(const std::vector<Gray8>& tiles, std::size_t columns, std::size_t gap) {
  if (tiles.empty() || columns == 0) throw ContractError("tile_grid: need at least one tile and one column");
  const std::size_t th = tiles[0].height;
  const std::size_t tw = tiles[0].width;
  for (const auto& t : tiles) {
    if (t.height != th || t.width != tw) throw DimensionError("tile_grid: tiles differ in size");
  }
  const std::size_t rows = (tiles.size() + columns - 1) / columns;
  const std::size_t cols = std::min(columns, tiles.size());
  Gray8 out{rows * th + (rows - 1) * gap, cols * tw + (cols - 1) * gap, {}};
  out.pixels.assign(out.height * out.width, 0);
  for (std::size_t i = 0; i < tiles.size(); ++i) {
    const std::size_t y0 = (i / columns) * (th + gap);
    const std::size_t x0 = (i % columns) * (tw + gap);
    for (std::size_t y = 0; y < th; ++y) {
      std::copy_n(tiles[i].pixels.begin() + y * tw, tw, out.pixels.begin() + (y0 + y) * out.width + x0);
    }
  }
  return out;
}

std::vector<std::uint8_t> encode_png(const Gray8& image) {
  if (image.pixels.size() != image.height * image.width || image.height == 0 || image.width == 0) {
    throw DimensionError("encode_png: empty or inconsistent image");
  }
  PngSink sink;
  std::vector<png_bytep> rows(image.height);
  for (std::size_t y = 0; y < image.height; ++y) {
    rows[y] = const_cast<png_bytep>(image.pixels.data() + y * image.width);
  }
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (png == nullptr) throw IoError("png: cannot create writer");
  png_infop info = png_create_info_struct(png);
  // libpng reports errors by longjmp; nothing between here and the writes
  // owns resources.
  if (info == nullptr || setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, info ? &info : nullptr);
    throw IoError("png: encoding failed");
  }
  png_set_write_fn(png, &sink, append_bytes, nullptr);
  png_set_IHDR(png, info, static_cast<png_uint_32>(image.width), static_cast<png_uint_32>(image.height), 8,
               PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_set_filter(png, PNG_FILTER_TYPE_BASE, PNG_FILTER_NONE);
  png_set_compression_level(png, 6);
  png_set_rows(png, info, rows.data());
  png_write_png(png, info, PNG_TRANSFORM_IDENTITY, nullptr);
  png_destroy_write_struct(&png, &info);
  if (sink.failed) throw IoError("png: out of memory");
  return std::move(sink.bytes);
}

void write_png(const std::string& path, const Gray8& image) {
  const auto bytes = encode_png(image);
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot open '" + path + "' for writing");
  f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!f) throw IoError("write to '" + path + "' failed");
}

}  // namespace kstrip
