#pragma once

// Brute-force reference computations used only by tests. None of these
// share code with the library paths they check.

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <random>
#include <vector>

#include "kstrip/ctensor.hpp"

namespace kstrip::testing {

inline ComplexTensor random_tensor(Shape shape, std::uint64_t seed, double lo = -1.0, double hi = 1.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(lo, hi);
  ComplexTensor t(std::move(shape));
  for (auto& v : t.re()) v = dist(rng);
  for (auto& v : t.im()) v = dist(rng);
  return t;
}

// Values with |re|, |im| in [margin, 1], random signs; keeps cReLU away
// from its kink during finite differencing.
inline ComplexTensor random_off_kink(Shape shape, std::uint64_t seed, double margin = 0.05) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> mag(margin, 1.0);
  std::bernoulli_distribution sign(0.5);
  ComplexTensor t(std::move(shape));
  for (auto& v : t.re()) v = sign(rng) ? mag(rng) : -mag(rng);
  for (auto& v : t.im()) v = sign(rng) ? mag(rng) : -mag(rng);
  return t;
}

inline double max_abs_diff(const ComplexTensor& a, const ComplexTensor& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    m = std::max(m, std::abs(a.at(i) - b.at(i)));
  }
  return m;
}

// O(N^4) double-sum DFT of a single H x W plane (rank-2 tensor).
inline ComplexTensor naive_dft2(const ComplexTensor& x, bool inverse = false) {
  const std::size_t h = x.dim(0);
  const std::size_t w = x.dim(1);
  const double sign = inverse ? 1.0 : -1.0;
  ComplexTensor out({h, w});
  for (std::size_t u = 0; u < h; ++u) {
    for (std::size_t v = 0; v < w; ++v) {
      std::complex<long double> acc = 0;
      for (std::size_t r = 0; r < h; ++r) {
        for (std::size_t c = 0; c < w; ++c) {
          const long double phase = sign * 2.0L * std::numbers::pi_v<long double> *
                                    (static_cast<long double>(u * r) / h + static_cast<long double>(v * c) / w);
          const std::complex<long double> z(x.re()[r * w + c], x.im()[r * w + c]);
          acc += z * std::complex<long double>(std::cos(phase), std::sin(phase));
        }
      }
      if (inverse) acc /= static_cast<long double>(h * w);
      out.set(u * w + v, {static_cast<double>(acc.real()), static_cast<double>(acc.imag())});
    }
  }
  return out;
}

// Scalar sliding-window complex convolution (cross-correlation, zero
// padding k/2, stride 1) with W = weight, complex multiply per tap.
inline ComplexTensor naive_complex_conv(const ComplexTensor& x, const ComplexTensor& weight,
                                        const ComplexTensor& bias) {
  const std::size_t b = x.dim(0), cin = x.dim(1), h = x.dim(2), w = x.dim(3);
  const std::size_t cout = weight.dim(0), k = weight.dim(2);
  const long pad = static_cast<long>(k / 2);
  ComplexTensor out({b, cout, h, w});
  for (std::size_t n = 0; n < b; ++n)
    for (std::size_t o = 0; o < cout; ++o)
      for (long y = 0; y < static_cast<long>(h); ++y)
        for (long xx = 0; xx < static_cast<long>(w); ++xx) {
          std::complex<double> acc = bias.at(o);
          for (std::size_t c = 0; c < cin; ++c)
            for (std::size_t ki = 0; ki < k; ++ki)
              for (std::size_t kj = 0; kj < k; ++kj) {
                const long sy = y + static_cast<long>(ki) - pad;
                const long sx = xx + static_cast<long>(kj) - pad;
                if (sy < 0 || sx < 0 || sy >= static_cast<long>(h) || sx >= static_cast<long>(w)) continue;
                const auto wv = weight.at(((o * cin + c) * k + ki) * k + kj);
                const auto xv = x.at(((n * cin + c) * h + sy) * w + sx);
                acc += wv * xv;
              }
          out.set(((n * cout + o) * h + y) * w + xx, acc);
        }
  return out;
}

// Naive directed Hausdorff distance between two boolean grids.
inline double naive_directed_hausdorff(const std::vector<bool>& x, const std::vector<bool>& y,
                                       std::size_t h, std::size_t w) {
  double worst = 0.0;
  for (std::size_t i = 0; i < h * w; ++i) {
    if (!x[i]) continue;
    double best = INFINITY;
    for (std::size_t j = 0; j < h * w; ++j) {
      if (!y[j]) continue;
      const double dr = static_cast<double>(i / w) - static_cast<double>(j / w);
      const double dc = static_cast<double>(i % w) - static_cast<double>(j % w);
      best = std::min(best, std::sqrt(dr * dr + dc * dc));
    }
    worst = std::max(worst, best);
  }
  return worst;
}

}  // namespace kstrip::testing
