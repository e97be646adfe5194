#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "kstrip/autograd.hpp"
#include "kstrip/rng.hpp"

namespace kstrip {

using NamedParams = std::vector<std::pair<std::string, Var>>;
// Non-trainable state saved with a model (batch-norm running statistics).
using NamedBuffers = std::vector<std::pair<std::string, ComplexTensor*>>;

// Complex kernel bank W = X + iY, stored as one complex tensor
// [out, in, k, k] whose real plane is X and imaginary plane is Y, plus a
// complex bias [out]. Stride 1, zero padding k/2.
struct ComplexConvParams {
  Var weight;
  Var bias;

  static ComplexConvParams init(std::size_t in_channels, std::size_t out_channels,
                                std::size_t kernel, Rng& rng);
  std::size_t out_channels() const { return weight->value.dim(0); }
  std::size_t in_channels() const { return weight->value.dim(1); }
  std::size_t kernel() const { return weight->value.dim(2); }
  void collect(const std::string& prefix, NamedParams& params) const;
};

// out = (X*a - Y*b) + i(X*b + Y*a) + bias for input a + ib, as a direct
// "same"-padded cross-correlation.
Var complex_conv2d(const Var& x, const ComplexConvParams& p);

// Arithmetic used inside complex_conv2d. Tensors stay double either way;
// f32 rounds inputs and weights and accumulates in single precision, which
// roughly halves the cost. Process-wide, f64 by default.
enum class ConvPrecision { f64, f32 };
void set_conv_precision(ConvPrecision precision);
ConvPrecision conv_precision();
ConvPrecision parse_conv_precision(const std::string& name);
std::string to_string(ConvPrecision precision);

class ConvPrecisionScope {
 public:
  explicit ConvPrecisionScope(ConvPrecision precision) : previous_(conv_precision()) {
    set_conv_precision(precision);
  }
  ~ConvPrecisionScope() { set_conv_precision(previous_); }
  ConvPrecisionScope(const ConvPrecisionScope&) = delete;
  ConvPrecisionScope& operator=(const ConvPrecisionScope&) = delete;

 private:
  ConvPrecision previous_;
};

// ReLU on both planes independently.
Var crelu(const Var& x);

struct BatchNormOptions {
  double eps = 1e-5;
  double momentum = 0.1;
  bool affine = true;
};

// Inverse principal square root of a symmetric positive-definite 2x2
// matrix [[a, b], [b, d]], returned as (w11, w12, w22).
struct Sym2 {
  double xx;
  double xy;
  double yy;
};
Sym2 inverse_sqrt_2x2(double a, double b, double d);

// Whitening of the joint (re, im) distribution per channel followed by an
// optional affine map. Gamma is a full 2x2 real matrix per channel packed
// as gamma[c, row] = G(row, 0) + i G(row, 1); beta is complex [C].
class ComplexBatchNorm {
 public:
  ComplexBatchNorm() = default;
  explicit ComplexBatchNorm(std::size_t channels, BatchNormOptions opts = {});

  Var forward(const Var& x, bool training);

  std::size_t channels() const { return running_mean.size(); }
  const BatchNormOptions& options() const { return opts_; }
  void collect(const std::string& prefix, NamedParams& params, NamedBuffers& buffers);

  Var gamma;
  Var beta;
  ComplexTensor running_mean;  // [C]
  // [C, 2]: element (c, 0) = V_rr + i V_ii, element (c, 1) = V_ri.
  ComplexTensor running_cov;

 private:
  BatchNormOptions opts_;
};

// Keeps the central H/2 x W/2 block of centered k-space.
Var spectral_pool(const Var& x);

// Replicates every pixel into a 2x2 block.
Var upsample_nearest2x(const Var& x);
Var upsample_conv(const Var& x, const ComplexConvParams& p);

// One Bernoulli(1 - p) keep-mask per element shared by both planes; kept
// values scale by 1/(1 - p). Identity outside training or for p == 0.
Var complex_dropout(const Var& x, double p, Rng& rng, bool training);

// F(x) + shortcut(x) with F = [conv -> cReLU -> BN] x 2. The shortcut is
// identity when widths agree and a 1x1 complex convolution otherwise.
class ResidualBlock {
 public:
  ResidualBlock() = default;
  ResidualBlock(std::size_t in_channels, std::size_t out_channels, Rng& rng,
                BatchNormOptions bn = {});

  // Dropout, when enabled, is applied to F(x) after the second BN.
  Var forward(const Var& x, bool training, double dropout_p = 0.0, Rng* dropout_rng = nullptr);

  std::size_t in_channels() const { return conv1.in_channels(); }
  std::size_t out_channels() const { return conv1.out_channels(); }
  void collect(const std::string& prefix, NamedParams& params, NamedBuffers& buffers);

  ComplexConvParams conv1;
  ComplexBatchNorm bn1;
  ComplexConvParams conv2;
  ComplexBatchNorm bn2;
  std::optional<ComplexConvParams> projection;
};

}  // namespace kstrip
