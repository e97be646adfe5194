#pragma once

#include <cstddef>

namespace kstrip::detail {

// Direct complex cross-correlation of one image. Inputs are zero-padded by
// k/2 on every side: xp planes are [cin][h + 2p][w + 2p]. Weights are
// [cout][cin][k][k]; out planes [cout][h][w] are overwritten, with
// bias[o] added when bias planes are given. The float overloads accumulate
// in single precision.
void conv_forward(std::size_t cin, std::size_t cout, std::size_t h, std::size_t w, std::size_t k,
                  const double* xpr, const double* xpi, const double* wr, const double* wi, const double* br,
                  const double* bi, double* outr, double* outi);
void conv_forward(std::size_t cin, std::size_t cout, std::size_t h, std::size_t w, std::size_t k,
                  const float* xpr, const float* xpi, const double* wr, const double* wi, const double* br,
                  const double* bi, double* outr, double* outi);

// dW[o][c][ki][kj] += sum_{y,x} g[o][y][x] * conj(xp[c][y + ki][x + kj]).
void conv_weight_grad(std::size_t cin, std::size_t cout, std::size_t h, std::size_t w, std::size_t k,
                      const double* gr, const double* gi, const double* xpr, const double* xpi, double* dwr,
                      double* dwi);
void conv_weight_grad(std::size_t cin, std::size_t cout, std::size_t h, std::size_t w, std::size_t k,
                      const double* gr, const double* gi, const float* xpr, const float* xpi, double* dwr,
                      double* dwi);

// Copies [c][h][w] planes into zeroed [c][h + 2p][w + 2p] buffers.
void pad_planes(std::size_t c, std::size_t h, std::size_t w, std::size_t p, const double* src, double* dst);
void pad_planes(std::size_t c, std::size_t h, std::size_t w, std::size_t p, const double* src, float* dst);

}  // namespace kstrip::detail
