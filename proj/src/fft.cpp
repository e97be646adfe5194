#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

#include "kstrip/ctensor.hpp"
#include "kstrip/error.hpp"

namespace kstrip {

bool is_power_of_two(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

namespace {

using cd = std::complex<double>;

// In-place iterative radix-2 transform of one contiguous line.
class Radix2Plan {
 public:
  Radix2Plan(std::size_t n, bool inverse) : n_(n), rev_(n), twiddle_(n / 2) {
    std::size_t bits = 0;
    while ((std::size_t{1} << bits) < n) ++bits;
    for (std::size_t i = 0; i < n; ++i) {
      std::size_t r = 0;
      for (std::size_t b = 0; b < bits; ++b) {
        if (i & (std::size_t{1} << b)) r |= std::size_t{1} << (bits - 1 - b);
      }
      rev_[i] = r;
    }
    const double sign = inverse ? 1.0 : -1.0;
    for (std::size_t k = 0; k < n / 2; ++k) {
      // Angles evaluated directly rather than by recurrence to keep the
      // error at a few ulps for every k.
      const double a = sign * 2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(n);
      twiddle_[k] = {std::cos(a), std::sin(a)};
    }
  }

  void run(cd* x) const {
    for (std::size_t i = 0; i < n_; ++i) {
      if (i < rev_[i]) std::swap(x[i], x[rev_[i]]);
    }
    for (std::size_t len = 2; len <= n_; len <<= 1) {
      const std::size_t half = len / 2;
      const std::size_t stride = n_ / len;
      for (std::size_t start = 0; start < n_; start += len) {
        for (std::size_t j = 0; j < half; ++j) {
          const cd w = twiddle_[j * stride];
          const cd u = x[start + j];
          const cd v = x[start + j + half] * w;
          x[start + j] = u + v;
          x[start + j + half] = u - v;
        }
      }
    }
  }

 private:
  std::size_t n_;
  std::vector<std::size_t> rev_;
  std::vector<cd> twiddle_;
};

ComplexTensor transform(const ComplexTensor& t, bool inverse) {
  if (t.rank() < 2) throw DimensionError("fft2: tensor needs at least two dimensions");
  const std::size_t h = t.dim(t.rank() - 2);
  const std::size_t w = t.dim(t.rank() - 1);
  if (!is_power_of_two(h) || !is_power_of_two(w)) {
    throw UnsupportedSizeError("fft2: spatial size " + std::to_string(h) + "x" +
                               std::to_string(w) + " is not a power of two");
  }
  const Radix2Plan row_plan(w, inverse);
  const Radix2Plan col_plan(h, inverse);
  const std::size_t plane = h * w;
  const std::size_t planes = t.size() / plane;
  const double norm = inverse ? 1.0 / static_cast<double>(plane) : 1.0;

  ComplexTensor out(t.shape());
  std::vector<cd> buf(plane);
  std::vector<cd> column(h);
  for (std::size_t p = 0; p < planes; ++p) {
    const std::size_t base = p * plane;
    for (std::size_t i = 0; i < plane; ++i) buf[i] = {t.re()[base + i], t.im()[base + i]};
    for (std::size_t r = 0; r < h; ++r) row_plan.run(buf.data() + r * w);
    for (std::size_t c = 0; c < w; ++c) {
      for (std::size_t r = 0; r < h; ++r) column[r] = buf[r * w + c];
      col_plan.run(column.data());
      for (std::size_t r = 0; r < h; ++r) buf[r * w + c] = column[r];
    }
    for (std::size_t i = 0; i < plane; ++i) {
      out.re()[base + i] = buf[i].real() * norm;
      out.im()[base + i] = buf[i].imag() * norm;
    }
  }
  return out;
}

ComplexTensor roll2(const ComplexTensor& t, std::size_t shift_h_of(std::size_t),
                    std::size_t shift_w_of(std::size_t)) {
  if (t.rank() < 2) throw DimensionError("fftshift: tensor needs at least two dimensions");
  const std::size_t h = t.dim(t.rank() - 2);
  const std::size_t w = t.dim(t.rank() - 1);
  const std::size_t sh = shift_h_of(h);
  const std::size_t sw = shift_w_of(w);
  const std::size_t plane = h * w;
  ComplexTensor out(t.shape());
  if (plane == 0) return out;
  for (std::size_t base = 0; base < t.size(); base += plane) {
    for (std::size_t r = 0; r < h; ++r) {
      const std::size_t dr = (r + sh) % h;
      for (std::size_t c = 0; c < w; ++c) {
        const std::size_t dst = base + dr * w + (c + sw) % w;
        out.re()[dst] = t.re()[base + r * w + c];
        out.im()[dst] = t.im()[base + r * w + c];
      }
    }
  }
  return out;
}

std::size_t half_down(std::size_t n) { return n / 2; }
std::size_t half_up(std::size_t n) { return n - n / 2; }

}  // namespace

ComplexTensor fft2(const ComplexTensor& t) { return transform(t, false); }
ComplexTensor ifft2(const ComplexTensor& t) { return transform(t, true); }

ComplexTensor fftshift(const ComplexTensor& t) { return roll2(t, half_down, half_down); }
// Rolling by ceil(n/2) undoes a roll by floor(n/2) for odd n as well.
ComplexTensor ifftshift(const ComplexTensor& t) { return roll2(t, half_up, half_up); }

}  // namespace kstrip
