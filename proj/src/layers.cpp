#include "kstrip/layers.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>

#include "conv_kernels.hpp"
#include "kstrip/error.hpp"

namespace kstrip {

namespace {

struct ConvGeometry {
  std::size_t batch, cin, cout, h, w, k;
  std::size_t pad() const { return k / 2; }
  std::size_t plane() const { return h * w; }
  std::size_t patch() const { return cin * k * k; }
};

ConvGeometry conv_geometry(const ComplexTensor& x, const ComplexConvParams& p) {
  const auto& xs = x.shape();
  const auto& ws = p.weight->value.shape();
  if (xs.size() != 4) throw DimensionError("complex_conv2d: input must be [B, C, H, W], got " + shape_str(xs));
  if (ws.size() != 4 || ws[2] != ws[3] || ws[2] % 2 == 0) {
    throw DimensionError("complex_conv2d: kernel must be [out, in, k, k] with odd k, got " + shape_str(ws));
  }
  if (xs[1] != ws[1]) {
    throw DimensionError("complex_conv2d: input has " + std::to_string(xs[1]) +
                         " channels, kernel expects " + std::to_string(ws[1]));
  }
  if (p.bias->value.shape() != Shape{ws[0]}) throw DimensionError("complex_conv2d: bias shape mismatch");
  return {xs[0], xs[1], ws[0], xs[2], xs[3], ws[2]};
}

// Weights of the adjoint correlation: wt[c][o][ki][kj] = conj(w[o][c][k-1-ki][k-1-kj]).
void adjoint_weights(const ConvGeometry& g, const ComplexTensor& w, std::vector<double>& wr,
                     std::vector<double>& wi) {
  const std::size_t taps = g.k * g.k;
  wr.assign(g.cin * g.cout * taps, 0.0);
  wi.assign(g.cin * g.cout * taps, 0.0);
  for (std::size_t o = 0; o < g.cout; ++o) {
    for (std::size_t c = 0; c < g.cin; ++c) {
      for (std::size_t t = 0; t < taps; ++t) {
        const std::size_t src = (o * g.cin + c) * taps + t;
        const std::size_t dst = (c * g.cout + o) * taps + (taps - 1 - t);
        wr[dst] = w.re()[src];
        wi[dst] = -w.im()[src];
      }
    }
  }
}

template <class T>
struct Padded {
  std::vector<T> re;
  std::vector<T> im;

  void fill(std::size_t c, std::size_t h, std::size_t w, std::size_t p, const double* src_re, const double* src_im) {
    const std::size_t n = c * (h + 2 * p) * (w + 2 * p);
    re.resize(n);
    im.resize(n);
    detail::pad_planes(c, h, w, p, src_re, re.data());
    detail::pad_planes(c, h, w, p, src_im, im.data());
  }
};

std::atomic<ConvPrecision> precision_setting{ConvPrecision::f64};

template <class T>
ComplexTensor conv_forward_all(const ConvGeometry& g, const ComplexTensor& x, const ComplexConvParams& p) {
  const std::size_t plane = g.plane();
  const auto& w = p.weight->value;
  const auto& b = p.bias->value;
  thread_local Padded<T> xp;
  ComplexTensor out({g.batch, g.cout, g.h, g.w});
  for (std::size_t n = 0; n < g.batch; ++n) {
    const std::size_t in_off = n * g.cin * plane;
    const std::size_t out_off = n * g.cout * plane;
    xp.fill(g.cin, g.h, g.w, g.pad(), x.re().data() + in_off, x.im().data() + in_off);
    detail::conv_forward(g.cin, g.cout, g.h, g.w, g.k, xp.re.data(), xp.im.data(), w.re().data(), w.im().data(),
                         b.re().data(), b.im().data(), out.re().data() + out_off, out.im().data() + out_off);
  }
  return out;
}

template <class T>
void conv_backward(const ConvGeometry& g, Node& self) {
  const auto& px = self.parents[0];
  const auto& pw = self.parents[1];
  const auto& pb = self.parents[2];
  const std::size_t plane = g.plane();
  const auto& gre = self.grad.re();
  const auto& gim = self.grad.im();

  if (pb->requires_grad) {
    ComplexTensor gb({g.cout});
    for (std::size_t n = 0; n < g.batch; ++n) {
      for (std::size_t o = 0; o < g.cout; ++o) {
        const std::size_t off = (n * g.cout + o) * plane;
        double sr = 0.0;
        double si = 0.0;
        for (std::size_t i = 0; i < plane; ++i) {
          sr += gre[off + i];
          si += gim[off + i];
        }
        gb.re()[o] += sr;
        gb.im()[o] += si;
      }
    }
    accumulate_grad(pb, std::move(gb));
  }
  thread_local Padded<T> pad;
  if (pw->requires_grad) {
    ComplexTensor gw(pw->value.shape());
    for (std::size_t n = 0; n < g.batch; ++n) {
      const std::size_t in_off = n * g.cin * plane;
      const std::size_t out_off = n * g.cout * plane;
      pad.fill(g.cin, g.h, g.w, g.pad(), px->value.re().data() + in_off, px->value.im().data() + in_off);
      detail::conv_weight_grad(g.cin, g.cout, g.h, g.w, g.k, gre.data() + out_off, gim.data() + out_off,
                               pad.re.data(), pad.im.data(), gw.re().data(), gw.im().data());
    }
    accumulate_grad(pw, std::move(gw));
  }
  if (px->requires_grad) {
    std::vector<double> wtr;
    std::vector<double> wti;
    adjoint_weights(g, pw->value, wtr, wti);
    ComplexTensor gx(px->value.shape());
    for (std::size_t n = 0; n < g.batch; ++n) {
      const std::size_t in_off = n * g.cin * plane;
      const std::size_t out_off = n * g.cout * plane;
      pad.fill(g.cout, g.h, g.w, g.pad(), gre.data() + out_off, gim.data() + out_off);
      detail::conv_forward(g.cout, g.cin, g.h, g.w, g.k, pad.re.data(), pad.im.data(), wtr.data(), wti.data(),
                           nullptr, nullptr, gx.re().data() + in_off, gx.im().data() + in_off);
    }
    accumulate_grad(px, std::move(gx));
  }
}

}  // namespace

ComplexConvParams ComplexConvParams::init(std::size_t in_channels, std::size_t out_channels,
                                          std::size_t kernel, Rng& rng) {
  const double bound = std::sqrt(1.0 / (static_cast<double>(in_channels * kernel * kernel) * 2.0));
  ComplexTensor w({out_channels, in_channels, kernel, kernel});
  for (auto& v : w.re()) v = uniform(rng, -bound, bound);
  for (auto& v : w.im()) v = uniform(rng, -bound, bound);
  return {parameter(std::move(w)), parameter(ComplexTensor({out_channels}))};
}

void ComplexConvParams::collect(const std::string& prefix, NamedParams& params) const {
  params.emplace_back(prefix + ".weight", weight);
  params.emplace_back(prefix + ".bias", bias);
}

void set_conv_precision(ConvPrecision precision) { precision_setting.store(precision); }
ConvPrecision conv_precision() { return precision_setting.load(); }

ConvPrecision parse_conv_precision(const std::string& name) {
  if (name == "f64") return ConvPrecision::f64;
  if (name == "f32") return ConvPrecision::f32;
  throw ConfigError("conv precision must be f64 or f32, got '" + name + "'");
}

std::string to_string(ConvPrecision precision) { return precision == ConvPrecision::f32 ? "f32" : "f64"; }

Var complex_conv2d(const Var& x, const ComplexConvParams& p) {
  const ConvGeometry g = conv_geometry(x->value, p);
  if (conv_precision() == ConvPrecision::f32) {
    return make_result(conv_forward_all<float>(g, x->value, p), {x, p.weight, p.bias},
                       [g](Node& self) { conv_backward<float>(g, self); });
  }
  return make_result(conv_forward_all<double>(g, x->value, p), {x, p.weight, p.bias},
                     [g](Node& self) { conv_backward<double>(g, self); });
}

Var crelu(const Var& x) {
  ComplexTensor out = x->value;
  for (auto& v : out.re()) v = std::max(v, 0.0);
  for (auto& v : out.im()) v = std::max(v, 0.0);
  return make_result(std::move(out), {x}, [](Node& self) {
    const auto& px = self.parents[0];
    // The incoming gradient is not needed after this sweep step.
    ComplexTensor g = std::move(self.grad);
    const double* xr = px->value.re().data();
    const double* xi = px->value.im().data();
    double* gr = g.re().data();
    double* gi = g.im().data();
    for (std::size_t i = 0; i < g.size(); ++i) {
      gr[i] = xr[i] > 0.0 ? gr[i] : 0.0;
      gi[i] = xi[i] > 0.0 ? gi[i] : 0.0;
    }
    accumulate_grad(px, std::move(g));
  });
}

// ---------------------------------------------------------------------------
// Complex batch normalization

namespace {

// Closed form for the 2x2 principal root: with s = sqrt(det V) and
// t = sqrt(tr V + 2s), sqrt(V) = (V + sI)/t, hence
// V^(-1/2) = [[d + s, -b], [-b, a + s]] / (s t).
struct InvSqrtJacobian {
  Sym2 w;
  // d(w_xx, w_xy, w_yy) / d(a, b, d)
  std::array<std::array<double, 3>, 3> dw;
};

InvSqrtJacobian inverse_sqrt_with_jacobian(double a, double b, double d) {
  const double s = std::sqrt(a * d - b * b);
  const double t = std::sqrt(a + d + 2.0 * s);
  const double q = s * t;
  InvSqrtJacobian r{{(d + s) / q, -b / q, (a + s) / q}, {}};
  // Partial derivatives with respect to (a, b, d).
  const std::array<double, 3> ds{d / (2.0 * s), -b / s, a / (2.0 * s)};
  const std::array<double, 3> da{1.0, 0.0, 0.0};
  const std::array<double, 3> db{0.0, 1.0, 0.0};
  const std::array<double, 3> dd{0.0, 0.0, 1.0};
  for (int k = 0; k < 3; ++k) {
    const double dt = (da[k] + dd[k] + 2.0 * ds[k]) / (2.0 * t);
    const double dq = ds[k] * t + s * dt;
    r.dw[0][k] = (dd[k] + ds[k]) / q - (d + s) * dq / (q * q);
    r.dw[1][k] = -db[k] / q + b * dq / (q * q);
    r.dw[2][k] = (da[k] + ds[k]) / q - (a + s) * dq / (q * q);
  }
  return r;
}

struct ChannelStats {
  double mean_re, mean_im;
  double a, b, d;  // regularized covariance entries
  InvSqrtJacobian inv;
};

}  // namespace

Sym2 inverse_sqrt_2x2(double a, double b, double d) { return inverse_sqrt_with_jacobian(a, b, d).w; }

ComplexBatchNorm::ComplexBatchNorm(std::size_t channels, BatchNormOptions opts)
    : running_mean({channels}), running_cov({channels, 2}), opts_(opts) {
  for (std::size_t c = 0; c < channels; ++c) running_cov.set(2 * c, {1.0, 1.0});
  if (opts_.affine) {
    const double g0 = 1.0 / std::sqrt(2.0);
    ComplexTensor gm({channels, 2});
    for (std::size_t c = 0; c < channels; ++c) {
      gm.set(2 * c, {g0, 0.0});
      gm.set(2 * c + 1, {0.0, g0});
    }
    gamma = parameter(std::move(gm));
    beta = parameter(ComplexTensor({channels}));
  }
}

void ComplexBatchNorm::collect(const std::string& prefix, NamedParams& params, NamedBuffers& buffers) {
  if (opts_.affine) {
    params.emplace_back(prefix + ".gamma", gamma);
    params.emplace_back(prefix + ".beta", beta);
  }
  buffers.emplace_back(prefix + ".running_mean", &running_mean);
  buffers.emplace_back(prefix + ".running_cov", &running_cov);
}

Var ComplexBatchNorm::forward(const Var& x, bool training) {
  const auto& xs = x->value.shape();
  if (xs.size() != 4 || xs[1] != channels()) {
    throw DimensionError("complex_batchnorm: expected [B, " + std::to_string(channels()) +
                         ", H, W], got " + shape_str(xs));
  }
  const std::size_t batch = xs[0];
  const std::size_t ch = xs[1];
  const std::size_t plane = xs[2] * xs[3];
  const std::size_t count = batch * plane;
  if (training && count < 2) throw DimensionError("complex_batchnorm: need at least 2 values per channel");
  const double eps = opts_.eps;
  const auto xre = x->value.re();
  const auto xim = x->value.im();

  std::vector<ChannelStats> stats(ch);
  for (std::size_t c = 0; c < ch; ++c) {
    ChannelStats& st = stats[c];
    if (training) {
      double sr = 0.0;
      double si = 0.0;
      for (std::size_t n = 0; n < batch; ++n) {
        const std::size_t off = (n * ch + c) * plane;
        for (std::size_t i = 0; i < plane; ++i) {
          sr += xre[off + i];
          si += xim[off + i];
        }
      }
      st.mean_re = sr / static_cast<double>(count);
      st.mean_im = si / static_cast<double>(count);
      double vrr = 0.0;
      double vri = 0.0;
      double vii = 0.0;
      for (std::size_t n = 0; n < batch; ++n) {
        const std::size_t off = (n * ch + c) * plane;
        for (std::size_t i = 0; i < plane; ++i) {
          const double cr = xre[off + i] - st.mean_re;
          const double ci = xim[off + i] - st.mean_im;
          vrr += cr * cr;
          vri += cr * ci;
          vii += ci * ci;
        }
      }
      const double inv_n = 1.0 / static_cast<double>(count);
      st.a = vrr * inv_n + eps;
      st.b = vri * inv_n;
      st.d = vii * inv_n + eps;
    } else {
      const auto m = running_mean.at(c);
      const auto v0 = running_cov.at(2 * c);
      st.mean_re = m.real();
      st.mean_im = m.imag();
      st.a = v0.real() + eps;
      st.b = running_cov.re()[2 * c + 1];
      st.d = v0.imag() + eps;
    }
    st.inv = inverse_sqrt_with_jacobian(st.a, st.b, st.d);
    const Sym2& w = st.inv.w;
    if (!std::isfinite(w.xx) || !std::isfinite(w.xy) || !std::isfinite(w.yy) ||
        !std::isfinite(st.mean_re) || !std::isfinite(st.mean_im)) {
      throw NumericError("complex_batchnorm: non-finite statistics in channel " + std::to_string(c));
    }
  }

  if (training) {
    const double m = opts_.momentum;
    for (std::size_t c = 0; c < ch; ++c) {
      const ChannelStats& st = stats[c];
      const auto rm = running_mean.at(c);
      running_mean.set(c, {(1 - m) * rm.real() + m * st.mean_re, (1 - m) * rm.imag() + m * st.mean_im});
      const auto v0 = running_cov.at(2 * c);
      running_cov.set(2 * c, {(1 - m) * v0.real() + m * (st.a - eps), (1 - m) * v0.imag() + m * (st.d - eps)});
      running_cov.re()[2 * c + 1] = (1 - m) * running_cov.re()[2 * c + 1] + m * st.b;
    }
  }

  auto gamma_of = [this](std::size_t c) -> std::array<double, 4> {
    if (!opts_.affine) return {1.0, 0.0, 0.0, 1.0};
    const auto r0 = gamma->value.at(2 * c);
    const auto r1 = gamma->value.at(2 * c + 1);
    return {r0.real(), r0.imag(), r1.real(), r1.imag()};
  };

  ComplexTensor out(xs);
  for (std::size_t c = 0; c < ch; ++c) {
    const ChannelStats& st = stats[c];
    const Sym2& w = st.inv.w;
    const auto gm = gamma_of(c);
    const double br = opts_.affine ? beta->value.re()[c] : 0.0;
    const double bi = opts_.affine ? beta->value.im()[c] : 0.0;
    for (std::size_t n = 0; n < batch; ++n) {
      const std::size_t off = (n * ch + c) * plane;
      for (std::size_t i = 0; i < plane; ++i) {
        const double cr = xre[off + i] - st.mean_re;
        const double ci = xim[off + i] - st.mean_im;
        const double yr = w.xx * cr + w.xy * ci;
        const double yi = w.xy * cr + w.yy * ci;
        out.re()[off + i] = gm[0] * yr + gm[1] * yi + br;
        out.im()[off + i] = gm[2] * yr + gm[3] * yi + bi;
      }
    }
  }

  std::vector<Var> parents{x};
  if (opts_.affine) {
    parents.push_back(gamma);
    parents.push_back(beta);
  }
  const bool affine = opts_.affine;
  return make_result(std::move(out), std::move(parents),
                     [stats = std::move(stats), training, affine, batch, ch, plane,
                      count](Node& self) {
    const auto& px = self.parents[0];
    const auto gre = self.grad.re();
    const auto gim = self.grad.im();
    const auto xre = px->value.re();
    const auto xim = px->value.im();
    const bool want_x = px->requires_grad;
    const bool want_affine = affine && (self.parents[1]->requires_grad || self.parents[2]->requires_grad);
    ComplexTensor gx(want_x ? px->value.shape() : Shape{});
    ComplexTensor ggamma(affine ? self.parents[1]->value.shape() : Shape{});
    ComplexTensor gbeta(affine ? self.parents[2]->value.shape() : Shape{});
    const double inv_n = 1.0 / static_cast<double>(count);

    for (std::size_t c = 0; c < ch; ++c) {
      const ChannelStats& st = stats[c];
      const Sym2& w = st.inv.w;
      std::array<double, 4> gm{1.0, 0.0, 0.0, 1.0};
      if (affine) {
        const auto r0 = self.parents[1]->value.at(2 * c);
        const auto r1 = self.parents[1]->value.at(2 * c + 1);
        gm = {r0.real(), r0.imag(), r1.real(), r1.imag()};
      }
      // Pass 1: affine gradients and dL/dW.
      double d_g[4] = {0, 0, 0, 0};
      double d_br = 0.0;
      double d_bi = 0.0;
      double gw_xx = 0.0;
      double gw_xy = 0.0;
      double gw_yy = 0.0;
      for (std::size_t n = 0; n < batch; ++n) {
        const std::size_t off = (n * ch + c) * plane;
        for (std::size_t i = 0; i < plane; ++i) {
          const double cr = xre[off + i] - st.mean_re;
          const double ci = xim[off + i] - st.mean_im;
          const double yr = w.xx * cr + w.xy * ci;
          const double yi = w.xy * cr + w.yy * ci;
          const double gr = gre[off + i];
          const double gi = gim[off + i];
          d_g[0] += gr * yr;
          d_g[1] += gr * yi;
          d_g[2] += gi * yr;
          d_g[3] += gi * yi;
          d_br += gr;
          d_bi += gi;
          const double gyr = gm[0] * gr + gm[2] * gi;
          const double gyi = gm[1] * gr + gm[3] * gi;
          gw_xx += gyr * cr;
          gw_xy += gyr * ci + gyi * cr;
          gw_yy += gyi * ci;
        }
      }
      if (want_affine) {
        ggamma.set(2 * c, {d_g[0], d_g[1]});
        ggamma.set(2 * c + 1, {d_g[2], d_g[3]});
        gbeta.set(c, {d_br, d_bi});
      }
      if (!want_x) continue;

      // dL/d(a, b, d) through the inverse square root.
      double lv[3] = {0, 0, 0};
      if (training) {
        for (int k = 0; k < 3; ++k) {
          lv[k] = gw_xx * st.inv.dw[0][k] + gw_xy * st.inv.dw[1][k] + gw_yy * st.inv.dw[2][k];
        }
      }
      // Pass 2: gradient w.r.t. the centered input, then remove its mean.
      double sum_r = 0.0;
      double sum_i = 0.0;
      for (std::size_t n = 0; n < batch; ++n) {
        const std::size_t off = (n * ch + c) * plane;
        for (std::size_t i = 0; i < plane; ++i) {
          const double gr = gre[off + i];
          const double gi = gim[off + i];
          const double gyr = gm[0] * gr + gm[2] * gi;
          const double gyi = gm[1] * gr + gm[3] * gi;
          double gcr = w.xx * gyr + w.xy * gyi;
          double gci = w.xy * gyr + w.yy * gyi;
          if (training) {
            const double cr = xre[off + i] - st.mean_re;
            const double ci = xim[off + i] - st.mean_im;
            gcr += inv_n * (2.0 * lv[0] * cr + lv[1] * ci);
            gci += inv_n * (lv[1] * cr + 2.0 * lv[2] * ci);
          }
          gx.re()[off + i] = gcr;
          gx.im()[off + i] = gci;
          sum_r += gcr;
          sum_i += gci;
        }
      }
      if (training) {
        const double mr = sum_r * inv_n;
        const double mi = sum_i * inv_n;
        for (std::size_t n = 0; n < batch; ++n) {
          const std::size_t off = (n * ch + c) * plane;
          for (std::size_t i = 0; i < plane; ++i) {
            gx.re()[off + i] -= mr;
            gx.im()[off + i] -= mi;
          }
        }
      }
    }
    if (want_x) accumulate_grad(px, std::move(gx));
    if (want_affine) {
      accumulate_grad(self.parents[1], std::move(ggamma));
      accumulate_grad(self.parents[2], std::move(gbeta));
    }
  });
}

// ---------------------------------------------------------------------------

Var spectral_pool(const Var& x) {
  const auto& s = x->value.shape();
  if (s.size() < 2) throw DimensionError("spectral_pool: needs spatial dimensions");
  const std::size_t h = s[s.size() - 2];
  const std::size_t w = s[s.size() - 1];
  if (h % 2 != 0 || w % 2 != 0) {
    throw DimensionError("spectral_pool: spatial size " + std::to_string(h) + "x" + std::to_string(w) +
                         " is not even");
  }
  const std::size_t oh = h / 2;
  const std::size_t ow = w / 2;
  // Offsets keep the DC bin (H/2, W/2) at the new center (H/4, W/4).
  const std::size_t r0 = h / 2 - oh / 2;
  const std::size_t c0 = w / 2 - ow / 2;
  Shape os = s;
  os[os.size() - 2] = oh;
  os[os.size() - 1] = ow;
  ComplexTensor out(os);
  const std::size_t planes = x->value.size() / (h * w);
  for (std::size_t p = 0; p < planes; ++p) {
    for (std::size_t r = 0; r < oh; ++r) {
      const std::size_t src = p * h * w + (r + r0) * w + c0;
      const std::size_t dst = p * oh * ow + r * ow;
      std::copy_n(x->value.re().begin() + src, ow, out.re().begin() + dst);
      std::copy_n(x->value.im().begin() + src, ow, out.im().begin() + dst);
    }
  }
  return make_result(std::move(out), {x}, [=](Node& self) {
    ComplexTensor g(self.parents[0]->value.shape());
    for (std::size_t p = 0; p < planes; ++p) {
      for (std::size_t r = 0; r < oh; ++r) {
        const std::size_t dst = p * h * w + (r + r0) * w + c0;
        const std::size_t src = p * oh * ow + r * ow;
        std::copy_n(self.grad.re().begin() + src, ow, g.re().begin() + dst);
        std::copy_n(self.grad.im().begin() + src, ow, g.im().begin() + dst);
      }
    }
    accumulate_grad(self.parents[0], std::move(g));
  });
}

Var upsample_nearest2x(const Var& x) {
  const auto& s = x->value.shape();
  if (s.size() < 2) throw DimensionError("upsample: needs spatial dimensions");
  const std::size_t h = s[s.size() - 2];
  const std::size_t w = s[s.size() - 1];
  Shape os = s;
  os[os.size() - 2] = 2 * h;
  os[os.size() - 1] = 2 * w;
  ComplexTensor out(os);
  const std::size_t planes = h * w == 0 ? 0 : x->value.size() / (h * w);
  for (std::size_t p = 0; p < planes; ++p) {
    for (std::size_t r = 0; r < 2 * h; ++r) {
      for (std::size_t c = 0; c < 2 * w; ++c) {
        const std::size_t src = p * h * w + (r / 2) * w + c / 2;
        const std::size_t dst = p * 4 * h * w + r * 2 * w + c;
        out.re()[dst] = x->value.re()[src];
        out.im()[dst] = x->value.im()[src];
      }
    }
  }
  return make_result(std::move(out), {x}, [=](Node& self) {
    ComplexTensor g(self.parents[0]->value.shape());
    for (std::size_t p = 0; p < planes; ++p) {
      for (std::size_t r = 0; r < 2 * h; ++r) {
        for (std::size_t c = 0; c < 2 * w; ++c) {
          const std::size_t dst = p * h * w + (r / 2) * w + c / 2;
          const std::size_t src = p * 4 * h * w + r * 2 * w + c;
          g.re()[dst] += self.grad.re()[src];
          g.im()[dst] += self.grad.im()[src];
        }
      }
    }
    accumulate_grad(self.parents[0], std::move(g));
  });
}

Var upsample_conv(const Var& x, const ComplexConvParams& p) {
  return complex_conv2d(upsample_nearest2x(x), p);
}

Var complex_dropout(const Var& x, double p, Rng& rng, bool training) {
  if (!(p >= 0.0 && p < 1.0)) throw ContractError("complex_dropout: p must lie in [0, 1)");
  if (!training || p == 0.0) return x;
  const double keep_scale = 1.0 / (1.0 - p);
  std::vector<double> mask(x->value.size());
  for (auto& m : mask) m = uniform01(rng) >= p ? keep_scale : 0.0;
  ComplexTensor out = x->value;
  for (std::size_t i = 0; i < mask.size(); ++i) {
    out.re()[i] *= mask[i];
    out.im()[i] *= mask[i];
  }
  return make_result(std::move(out), {x}, [mask = std::move(mask)](Node& self) {
    ComplexTensor g = self.grad;
    for (std::size_t i = 0; i < mask.size(); ++i) {
      g.re()[i] *= mask[i];
      g.im()[i] *= mask[i];
    }
    accumulate_grad(self.parents[0], std::move(g));
  });
}

ResidualBlock::ResidualBlock(std::size_t in_channels, std::size_t out_channels, Rng& rng,
                             BatchNormOptions bn)
    : conv1(ComplexConvParams::init(in_channels, out_channels, 3, rng)),
      bn1(out_channels, bn),
      conv2(ComplexConvParams::init(out_channels, out_channels, 3, rng)),
      bn2(out_channels, bn) {
  if (in_channels != out_channels) projection = ComplexConvParams::init(in_channels, out_channels, 1, rng);
}

Var ResidualBlock::forward(const Var& x, bool training, double dropout_p, Rng* dropout_rng) {
  Var h = bn1.forward(crelu(complex_conv2d(x, conv1)), training);
  h = bn2.forward(crelu(complex_conv2d(h, conv2)), training);
  if (dropout_rng != nullptr && dropout_p > 0.0) h = complex_dropout(h, dropout_p, *dropout_rng, training);
  const Var shortcut = projection ? complex_conv2d(x, *projection) : x;
  return add(h, shortcut);
}

void ResidualBlock::collect(const std::string& prefix, NamedParams& params, NamedBuffers& buffers) {
  conv1.collect(prefix + ".conv1", params);
  bn1.collect(prefix + ".bn1", params, buffers);
  conv2.collect(prefix + ".conv2", params);
  bn2.collect(prefix + ".bn2", params, buffers);
  if (projection) projection->collect(prefix + ".proj", params);
}

}  // namespace kstrip
