#include "conv_kernels.hpp"

#include <algorithm>
#include <cstring>
#include <vector>

// The kernels are compiled once per instruction set and dispatched at load
// time; results are identical across clones only up to FMA contraction, so
// runs are reproducible on one machine.
#if defined(__GNUC__) && !defined(__clang__) && defined(__x86_64__)
#define KSTRIP_CLONES __attribute__((target_clones("avx512f", "avx2", "default")))
#else
#define KSTRIP_CLONES
#endif

namespace kstrip::detail {

namespace {

constexpr std::size_t kOutBlock = 4;
constexpr std::size_t kBandWidth = 256;

// Output columns per register-resident chunk; two 64-byte vectors.
template <class T>
constexpr std::size_t kChunk = 128 / sizeof(T);
// Accumulator lanes of the weight gradient; one 64-byte vector.
template <class T>
constexpr std::size_t kLanes = 64 / sizeof(T);

template <class T>
void pad_impl(std::size_t c, std::size_t h, std::size_t w, std::size_t p, const double* src, T* dst) {
  const std::size_t hp = h + 2 * p;
  const std::size_t wp = w + 2 * p;
  std::fill(dst, dst + c * hp * wp, T(0));
  for (std::size_t ch = 0; ch < c; ++ch) {
    for (std::size_t y = 0; y < h; ++y) {
      const double* s = src + (ch * h + y) * w;
      T* d = dst + (ch * hp + y + p) * wp + p;
      for (std::size_t x = 0; x < w; ++x) d[x] = static_cast<T>(s[x]);
    }
  }
}

// Accumulates `tw` (<= XC) output columns of one row for a block of output
// channels; the accumulators stay in registers across all c and taps.
template <class T, std::size_t XC, bool Partial = false>
[[gnu::always_inline]] inline void forward_chunk(std::size_t cin, std::size_t k, std::size_t plane_stride,
                                                 std::size_t wp, std::size_t tw, const T* __restrict xr,
                                                 const T* __restrict xi, const T* __restrict pwr,
                                                 const T* __restrict pwi, T (&ar)[kOutBlock][XC],
                                                 T (&ai)[kOutBlock][XC]) {
  const std::size_t taps = k * k;
  for (std::size_t o = 0; o < kOutBlock; ++o) {
    for (std::size_t x = 0; x < XC; ++x) ar[o][x] = ai[o][x] = T(0);
  }
  for (std::size_t c = 0; c < cin; ++c) {
    for (std::size_t ki = 0; ki < k; ++ki) {
      const T* rr = xr + c * plane_stride + ki * wp;
      const T* ri = xi + c * plane_stride + ki * wp;
      for (std::size_t kj = 0; kj < k; ++kj) {
        const T* a = pwr + (c * taps + ki * k + kj) * kOutBlock;
        const T* b = pwi + (c * taps + ki * k + kj) * kOutBlock;
        for (std::size_t x = 0; x < (Partial ? tw : XC); ++x) {
          const T u = rr[x + kj];
          const T v = ri[x + kj];
          for (std::size_t o = 0; o < kOutBlock; ++o) {
            ar[o][x] += a[o] * u - b[o] * v;
            ai[o][x] += a[o] * v + b[o] * u;
          }
        }
      }
    }
  }
}

template <class T>
[[gnu::always_inline]] inline void forward_impl(std::size_t cin, std::size_t cout, std::size_t h, std::size_t w,
                                                std::size_t k, const T* __restrict xpr, const T* __restrict xpi,
                                                const double* __restrict wr, const double* __restrict wi,
                                                const double* br, const double* bi, double* __restrict outr,
                                                double* __restrict outi) {
  constexpr std::size_t C = kChunk<T>;
  constexpr std::size_t H = C / 2;
  const std::size_t p = k / 2;
  const std::size_t hp = h + 2 * p;
  const std::size_t wp = w + 2 * p;
  const std::size_t taps = k * k;
  // Weights of one output block packed as [c][tap][o]; missing slots are 0.
  thread_local std::vector<T> packed;
  packed.resize(2 * cin * taps * kOutBlock);
  T* pwr = packed.data();
  T* pwi = packed.data() + cin * taps * kOutBlock;

  for (std::size_t o0 = 0; o0 < cout; o0 += kOutBlock) {
    const std::size_t ob = std::min(kOutBlock, cout - o0);
    for (std::size_t c = 0; c < cin; ++c) {
      for (std::size_t t = 0; t < taps; ++t) {
        for (std::size_t o = 0; o < kOutBlock; ++o) {
          const std::size_t dst = (c * taps + t) * kOutBlock + o;
          const std::size_t src = ((o0 + o) * cin + c) * taps + t;
          pwr[dst] = o < ob ? static_cast<T>(wr[src]) : T(0);
          pwi[dst] = o < ob ? static_cast<T>(wi[src]) : T(0);
        }
      }
    }
    auto store = [&](std::size_t y, std::size_t x0, std::size_t tw, const T* ar, const T* ai, std::size_t stride) {
      for (std::size_t o = 0; o < ob; ++o) {
        const double bre = br ? br[o0 + o] : 0.0;
        const double bim = bi ? bi[o0 + o] : 0.0;
        double* dr = outr + ((o0 + o) * h + y) * w + x0;
        double* di = outi + ((o0 + o) * h + y) * w + x0;
        for (std::size_t x = 0; x < tw; ++x) {
          dr[x] = static_cast<double>(ar[o * stride + x]) + bre;
          di[x] = static_cast<double>(ai[o * stride + x]) + bim;
        }
      }
    };
    for (std::size_t y = 0; y < h; ++y) {
      const T* rowr = xpr + y * wp;
      const T* rowi = xpi + y * wp;
      std::size_t x0 = 0;
      for (; x0 + C <= w; x0 += C) {
        T ar[kOutBlock][C];
        T ai[kOutBlock][C];
        forward_chunk<T, C>(cin, k, hp * wp, wp, C, rowr + x0, rowi + x0, pwr, pwi, ar, ai);
        store(y, x0, C, &ar[0][0], &ai[0][0], C);
      }
      if (x0 + H <= w) {
        T ar[kOutBlock][H];
        T ai[kOutBlock][H];
        forward_chunk<T, H>(cin, k, hp * wp, wp, H, rowr + x0, rowi + x0, pwr, pwi, ar, ai);
        store(y, x0, H, &ar[0][0], &ai[0][0], H);
        x0 += H;
      }
      if (x0 < w) {
        T ar[kOutBlock][H];
        T ai[kOutBlock][H];
        forward_chunk<T, H, true>(cin, k, hp * wp, wp, w - x0, rowr + x0, rowi + x0, pwr, pwi, ar, ai);
        store(y, x0, w - x0, &ar[0][0], &ai[0][0], H);
      }
    }
  }
}

template <class T>
[[gnu::always_inline]] inline void weight_grad_impl(std::size_t cin, std::size_t cout, std::size_t h,
                                                    std::size_t w, std::size_t k, const double* __restrict gr,
                                                    const double* __restrict gi, const T* __restrict xpr,
                                                    const T* __restrict xpi, double* __restrict dwr,
                                                    double* __restrict dwi) {
  constexpr std::size_t L = kLanes<T>;
  const std::size_t p = k / 2;
  const std::size_t hp = h + 2 * p;
  const std::size_t wp = w + 2 * p;
  const std::size_t taps = k * k;
  const std::size_t wv = w - w % L;
  // Lane accumulators per (c, tap, o) are carried across bands of rows. The
  // gradient rows of one band are copied out so they stay in L1.
  const std::size_t band = std::max<std::size_t>(1, kBandWidth / w);
  thread_local std::vector<T> acc;
  thread_local std::vector<T> rows;
  acc.resize(cin * taps * kOutBlock * 2 * L);
  rows.resize(2 * kOutBlock * band * w);
  T* row_r = rows.data();
  T* row_i = rows.data() + kOutBlock * band * w;

  for (std::size_t o0 = 0; o0 < cout; o0 += kOutBlock) {
    const std::size_t ob = std::min(kOutBlock, cout - o0);
    std::fill(acc.begin(), acc.end(), T(0));
    for (std::size_t y0 = 0; y0 < h; y0 += band) {
      const std::size_t nb = std::min(band, h - y0);
      // Layout [r][o][x].
      for (std::size_t r = 0; r < nb; ++r) {
        for (std::size_t o = 0; o < kOutBlock; ++o) {
          T* dr = row_r + (r * kOutBlock + o) * w;
          T* di = row_i + (r * kOutBlock + o) * w;
          if (o < ob) {
            const double* sr = gr + ((o0 + o) * h + y0 + r) * w;
            const double* si = gi + ((o0 + o) * h + y0 + r) * w;
            for (std::size_t x = 0; x < w; ++x) {
              dr[x] = static_cast<T>(sr[x]);
              di[x] = static_cast<T>(si[x]);
            }
          } else {
            std::fill(dr, dr + w, T(0));
            std::fill(di, di + w, T(0));
          }
        }
      }
      for (std::size_t c = 0; c < cin; ++c) {
        for (std::size_t ki = 0; ki < k; ++ki) {
          for (std::size_t kj = 0; kj < k; ++kj) {
            T* a = acc.data() + (c * taps + ki * k + kj) * kOutBlock * 2 * L;
            T sr[kOutBlock][L];
            T si[kOutBlock][L];
            for (std::size_t o = 0; o < kOutBlock; ++o) {
              for (std::size_t l = 0; l < L; ++l) {
                sr[o][l] = a[(2 * o) * L + l];
                si[o][l] = a[(2 * o + 1) * L + l];
              }
            }
            for (std::size_t r = 0; r < nb; ++r) {
              const T* u = xpr + (c * hp + y0 + r + ki) * wp + kj;
              const T* v = xpi + (c * hp + y0 + r + ki) * wp + kj;
              const T* bre = row_r + r * kOutBlock * w;
              const T* bim = row_i + r * kOutBlock * w;
              for (std::size_t x = 0; x < wv; x += L) {
                for (std::size_t o = 0; o < kOutBlock; ++o) {
                  const T* g_r = bre + o * w + x;
                  const T* g_i = bim + o * w + x;
                  for (std::size_t l = 0; l < L; ++l) {
                    sr[o][l] += g_r[l] * u[x + l] + g_i[l] * v[x + l];
                    si[o][l] += g_i[l] * u[x + l] - g_r[l] * v[x + l];
                  }
                }
              }
              for (std::size_t x = wv; x < w; ++x) {
                for (std::size_t o = 0; o < kOutBlock; ++o) {
                  sr[o][0] += bre[o * w + x] * u[x] + bim[o * w + x] * v[x];
                  si[o][0] += bim[o * w + x] * u[x] - bre[o * w + x] * v[x];
                }
              }
            }
            for (std::size_t o = 0; o < kOutBlock; ++o) {
              for (std::size_t l = 0; l < L; ++l) {
                a[(2 * o) * L + l] = sr[o][l];
                a[(2 * o + 1) * L + l] = si[o][l];
              }
            }
          }
        }
      }
    }
    for (std::size_t c = 0; c < cin; ++c) {
      for (std::size_t t = 0; t < taps; ++t) {
        const T* a = acc.data() + (c * taps + t) * kOutBlock * 2 * L;
        for (std::size_t o = 0; o < ob; ++o) {
          double tr = 0.0;
          double ti = 0.0;
          for (std::size_t l = 0; l < L; ++l) {
            tr += static_cast<double>(a[(2 * o) * L + l]);
            ti += static_cast<double>(a[(2 * o + 1) * L + l]);
          }
          const std::size_t idx = ((o0 + o) * cin + c) * taps + t;
          dwr[idx] += tr;
          dwi[idx] += ti;
        }
      }
    }
  }
}

}  // namespace

void pad_planes(std::size_t c, std::size_t h, std::size_t w, std::size_t p, const double* src, double* dst) {
  pad_impl(c, h, w, p, src, dst);
}

void pad_planes(std::size_t c, std::size_t h, std::size_t w, std::size_t p, const double* src, float* dst) {
  pad_impl(c, h, w, p, src, dst);
}

KSTRIP_CLONES
void conv_forward(std::size_t cin, std::size_t cout, std::size_t h, std::size_t w, std::size_t k,
                  const double* xpr, const double* xpi, const double* wr, const double* wi, const double* br,
                  const double* bi, double* outr, double* outi) {
  forward_impl<double>(cin, cout, h, w, k, xpr, xpi, wr, wi, br, bi, outr, outi);
}

KSTRIP_CLONES
void conv_forward(std::size_t cin, std::size_t cout, std::size_t h, std::size_t w, std::size_t k,
                  const float* xpr, const float* xpi, const double* wr, const double* wi, const double* br,
                  const double* bi, double* outr, double* outi) {
  forward_impl<float>(cin, cout, h, w, k, xpr, xpi, wr, wi, br, bi, outr, outi);
}

KSTRIP_CLONES
void conv_weight_grad(std::size_t cin, std::size_t cout, std::size_t h, std::size_t w, std::size_t k,
                      const double* gr, const double* gi, const double* xpr, const double* xpi, double* dwr,
                      double* dwi) {
  weight_grad_impl<double>(cin, cout, h, w, k, gr, gi, xpr, xpi, dwr, dwi);
}

KSTRIP_CLONES
void conv_weight_grad(std::size_t cin, std::size_t cout, std::size_t h, std::size_t w, std::size_t k,
                      const double* gr, const double* gi, const float* xpr, const float* xpi, double* dwr,
                      double* dwi) {
  weight_grad_impl<float>(cin, cout, h, w, k, gr, gi, xpr, xpi, dwr, dwi);
}

}  // namespace kstrip::detail
