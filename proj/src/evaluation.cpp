#include "kstrip/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>

#include "kstrip/error.hpp"
#include "kstrip/image_io.hpp"

namespace kstrip {

namespace {

ComplexTensor as_plane(const ComplexTensor& t, const char* what) {
  const auto& s = t.shape();
  if (s.size() == 2) return t;
  if (s.size() == 3 && s[0] == 1) return t.reshaped({s[1], s[2]});
  throw DimensionError(std::string(what) + ": expected an [H, W] or [1, H, W] slice, got " + shape_str(s));
}

void require_same_grid(const BinaryMask& a, const BinaryMask& b, const char* what) {
  if (a.height != b.height || a.width != b.width) {
    throw DimensionError(std::string(what) + ": masks are " + std::to_string(a.height) + "x" +
                         std::to_string(a.width) + " and " + std::to_string(b.height) + "x" +
                         std::to_string(b.width));
  }
}

double percent(std::uint64_t num, std::uint64_t den) {
  return den == 0 ? 100.0 : 100.0 * static_cast<double>(num) / static_cast<double>(den);
}

// Lower envelope of parabolas for one line of squared distances. Infinite
// entries never join the envelope.
void edt_1d(const double* f, std::size_t n, double* d, std::vector<std::size_t>& v, std::vector<double>& z) {
  constexpr double inf = std::numeric_limits<double>::infinity();
  v.resize(n);
  z.resize(n + 1);
  std::size_t k = 0;
  std::size_t first = n;
  for (std::size_t q = 0; q < n; ++q) {
    if (f[q] < inf) {
      first = q;
      break;
    }
  }
  if (first == n) {
    std::fill(d, d + n, inf);
    return;
  }
  v[0] = first;
  z[0] = -inf;
  z[1] = inf;
  for (std::size_t q = first + 1; q < n; ++q) {
    if (!(f[q] < inf)) continue;
    const double fq = f[q] + static_cast<double>(q * q);
    auto intersect = [&](std::size_t p) {
      return (fq - (f[p] + static_cast<double>(p * p))) / (2.0 * (static_cast<double>(q) - static_cast<double>(p)));
    };
    double s = intersect(v[k]);
    while (s <= z[k]) {
      --k;
      s = intersect(v[k]);
    }
    ++k;
    v[k] = q;
    z[k] = s;
    z[k + 1] = inf;
  }
  k = 0;
  for (std::size_t q = 0; q < n; ++q) {
    while (z[k + 1] < static_cast<double>(q)) ++k;
    const double dq = static_cast<double>(q) - static_cast<double>(v[k]);
    d[q] = dq * dq + f[v[k]];
  }
}

std::string fmt(double v) {
  if (std::isinf(v)) return "inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

}  // namespace

ComplexTensor to_image(const ComplexTensor& k) { return ifft2(ifftshift(k)); }

BinaryMask binarize(const ComplexTensor& image, double factor) {
  const ComplexTensor plane = as_plane(image, "binarize");
  const std::size_t h = plane.dim(0);
  const std::size_t w = plane.dim(1);
  const RealTensor mag = abs(plane);
  double total = 0.0;
  for (double v : mag.data) total += v;
  const double threshold = factor * total / static_cast<double>(mag.size());
  BinaryMask m(h, w);
  for (std::size_t i = 0; i < mag.size(); ++i) m.bits[i] = mag[i] > threshold ? 1 : 0;
  return m;
}

double dice(const BinaryMask& x, const BinaryMask& y) {
  require_same_grid(x, y, "dice");
  std::uint64_t both = 0;
  std::uint64_t nx = 0;
  std::uint64_t ny = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    nx += x.bits[i] ? 1 : 0;
    ny += y.bits[i] ? 1 : 0;
    both += (x.bits[i] && y.bits[i]) ? 1 : 0;
  }
  if (nx + ny == 0) return 100.0;
  return 100.0 * 2.0 * static_cast<double>(both) / static_cast<double>(nx + ny);
}

std::vector<double> squared_distance_map(const BinaryMask& y) {
  constexpr double inf = std::numeric_limits<double>::infinity();
  const std::size_t h = y.height;
  const std::size_t w = y.width;
  std::vector<double> d(h * w);
  for (std::size_t i = 0; i < d.size(); ++i) d[i] = y.bits[i] ? 0.0 : inf;
  std::vector<std::size_t> v;
  std::vector<double> z;
  std::vector<double> line(std::max(h, w));
  std::vector<double> out(std::max(h, w));
  for (std::size_t c = 0; c < w; ++c) {
    for (std::size_t r = 0; r < h; ++r) line[r] = d[r * w + c];
    edt_1d(line.data(), h, out.data(), v, z);
    for (std::size_t r = 0; r < h; ++r) d[r * w + c] = out[r];
  }
  for (std::size_t r = 0; r < h; ++r) {
    edt_1d(d.data() + r * w, w, out.data(), v, z);
    std::copy_n(out.begin(), w, d.begin() + r * w);
  }
  return d;
}

double directed_hausdorff(const BinaryMask& x, const BinaryMask& y) {
  require_same_grid(x, y, "directed_hausdorff");
  if (y.empty()) throw ContractError("directed_hausdorff: reference mask is empty");
  if (x.empty()) return std::numeric_limits<double>::infinity();
  const auto d = squared_distance_map(y);
  double worst = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (x.bits[i]) worst = std::max(worst, d[i]);
  }
  return std::sqrt(worst);
}

double Confusion::accuracy() const { return percent(tp + tn, tp + tn + fp + fn); }
double Confusion::sensitivity() const { return percent(tp, tp + fn); }
double Confusion::specificity() const { return percent(tn, tn + fp); }

Confusion confusion(const BinaryMask& pred, const BinaryMask& truth) {
  require_same_grid(pred, truth, "confusion");
  Confusion c;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const bool p = pred.bits[i] != 0;
    const bool t = truth.bits[i] != 0;
    if (p && t) ++c.tp;
    else if (p) ++c.fp;
    else if (t) ++c.fn;
    else ++c.tn;
  }
  return c;
}

std::uint64_t exclusion_threshold(std::size_t height, std::size_t width) {
  return static_cast<std::uint64_t>(5000 * height * width / 65536);
}

Predictor model_predictor(KStripModel& model) {
  return [&model](const std::vector<const SliceSample*>& batch) {
    const auto& mc = model.config();
    ComplexTensor x({batch.size(), 1, mc.height, mc.width});
    const std::size_t plane = mc.height * mc.width;
    for (std::size_t b = 0; b < batch.size(); ++b) {
      const auto& k = batch[b]->k_in;
      if (k.size() != plane) {
        throw ConfigError("evaluate: slice is " + shape_str(k.shape()) + " but the model expects " +
                          std::to_string(mc.height) + "x" + std::to_string(mc.width));
      }
      std::copy(k.re().begin(), k.re().end(), x.re().begin() + b * plane);
      std::copy(k.im().begin(), k.im().end(), x.im().begin() + b * plane);
    }
    return model.infer(x);
  };
}

Predictor oracle_predictor() {
  return [](const std::vector<const SliceSample*>& batch) {
    const auto& first = batch.at(0)->k_target;
    const std::size_t plane = first.size();
    ComplexTensor y({batch.size(), 1, first.dim(first.rank() - 2), first.dim(first.rank() - 1)});
    for (std::size_t b = 0; b < batch.size(); ++b) {
      const auto& k = batch[b]->k_target;
      std::copy(k.re().begin(), k.re().end(), y.re().begin() + b * plane);
      std::copy(k.im().begin(), k.im().end(), y.im().begin() + b * plane);
    }
    return y;
  };
}

SliceMetrics slice_metrics(const SliceSample& sample, const ComplexTensor& k_pred, const EvalOptions& opts) {
  const ComplexTensor pred_image = to_image(as_plane(k_pred, "slice_metrics"));
  const ComplexTensor target_image = to_image(as_plane(sample.k_target, "slice_metrics"));
  const BinaryMask truth = opts.truth_from_target ? binarize(target_image, opts.threshold_factor) : sample.brain_mask;
  const BinaryMask mask = binarize(pred_image, opts.threshold_factor);
  require_same_grid(mask, truth, "slice_metrics");
  const std::uint64_t min_pixels =
      opts.min_brain_pixels > 0 ? opts.min_brain_pixels : exclusion_threshold(truth.height, truth.width);

  SliceMetrics m;
  m.patient_id = sample.patient_id;
  m.slice_idx = sample.slice_idx;
  m.brain_pixels = sample.brain_pixels;
  m.included = sample.brain_pixels >= min_pixels;
  m.dice = dice(mask, truth);
  const Confusion c = confusion(mask, truth);
  m.accuracy = c.accuracy();
  m.sensitivity = c.sensitivity();
  m.specificity = c.specificity();
  m.failure = mask.empty() && !truth.empty();
  m.dhd = truth.empty() ? 0.0 : directed_hausdorff(mask, truth);

  double err = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (!truth.bits[i]) continue;
    const double d = std::arg(pred_image.at(i) * std::conj(target_image.at(i)));
    err += std::abs(d);
    ++n;
  }
  m.phase_error = n == 0 ? 0.0 : err / static_cast<double>(n);
  return m;
}

EvalReport evaluate(const Predictor& predict, const std::vector<SliceSample>& samples,
                    const std::vector<std::size_t>& indices, const EvalOptions& opts) {
  if (indices.empty()) throw ConfigError("evaluate: empty test split");
  if (opts.batch_size == 0) throw ConfigError("evaluate: batch_size must be >= 1");
  if (!(opts.threshold_factor > 0.0)) throw ConfigError("evaluate: threshold factor must be > 0");
  std::map<std::uint32_t, std::uint32_t> slices_per_patient;
  for (const auto& s : samples) {
    auto& n = slices_per_patient[s.patient_id];
    n = std::max(n, s.slice_idx + 1);
  }

  EvalReport report;
  report.slices.reserve(indices.size());
  for (std::size_t start = 0; start < indices.size(); start += opts.batch_size) {
    const std::size_t end = std::min(indices.size(), start + opts.batch_size);
    std::vector<const SliceSample*> batch;
    for (std::size_t i = start; i < end; ++i) {
      if (indices[i] >= samples.size()) throw ContractError("evaluate: sample index out of range");
      batch.push_back(&samples[indices[i]]);
    }
    const ComplexTensor pred = predict(batch);
    if (pred.rank() != 4 || pred.dim(0) != batch.size() || pred.dim(1) != 1) {
      throw DimensionError("evaluate: predictor returned " + shape_str(pred.shape()));
    }
    const std::size_t h = pred.dim(2);
    const std::size_t w = pred.dim(3);
    const std::size_t plane = h * w;
    for (std::size_t b = 0; b < batch.size(); ++b) {
      ComplexTensor k({h, w});
      std::copy_n(pred.re().begin() + b * plane, plane, k.re().begin());
      std::copy_n(pred.im().begin() + b * plane, plane, k.im().begin());
      SliceMetrics m = slice_metrics(*batch[b], k, opts);
      const std::uint32_t n = slices_per_patient[m.patient_id];
      m.mid_head = 4 * m.slice_idx >= n && 4 * m.slice_idx < 3 * n;
      report.slices.push_back(m);
    }
  }

  SegMetrics& s = report.summary;
  std::size_t dhd_n = 0;
  for (const auto& m : report.slices) {
    if (!m.included) continue;
    ++s.n;
    s.dice += m.dice;
    s.accuracy += m.accuracy;
    s.sensitivity += m.sensitivity;
    s.specificity += m.specificity;
    s.phase_error += m.phase_error;
    if (m.failure) {
      ++s.failures;
      if (m.mid_head) ++s.mid_head_failures;
    } else {
      s.dhd += m.dhd;
      ++dhd_n;
    }
  }
  if (s.n > 0) {
    const double n = static_cast<double>(s.n);
    s.dice /= n;
    s.accuracy /= n;
    s.sensitivity /= n;
    s.specificity /= n;
    s.phase_error /= n;
  }
  s.dhd = dhd_n > 0 ? s.dhd / static_cast<double>(dhd_n) : 0.0;
  return report;
}

EvalReport evaluate(KStripModel& model, const std::vector<SliceSample>& samples,
                    const std::vector<std::size_t>& indices, const EvalOptions& opts) {
  return evaluate(model_predictor(model), samples, indices, opts);
}

std::string report_header() { return "dataset,split,n,dice,dhd,acc,sens,spec,failures"; }

std::string report_row(const std::string& dataset, const std::string& split, const SegMetrics& m) {
  return dataset + "," + split + "," + std::to_string(m.n) + "," + fmt(m.dice) + "," + fmt(m.dhd) + "," +
         fmt(m.accuracy) + "," + fmt(m.sensitivity) + "," + fmt(m.specificity) + "," + std::to_string(m.failures);
}

void write_report_csv(const std::string& path, const std::string& dataset, const std::string& split,
                      const SegMetrics& m) {
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw IoError("cannot open '" + path + "' for writing");
  f << report_header() << "\n" << report_row(dataset, split, m) << "\n";
  if (!f) throw IoError("write to '" + path + "' failed");
}

void write_slices_csv(const std::string& path, const std::vector<SliceMetrics>& slices) {
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw IoError("cannot open '" + path + "' for writing");
  f << "patient,slice,brain_pixels,included,mid_head,failure,dice,dhd,acc,sens,spec,phase_error\n";
  for (const auto& m : slices) {
    f << m.patient_id << "," << m.slice_idx << "," << m.brain_pixels << "," << (m.included ? 1 : 0) << ","
      << (m.mid_head ? 1 : 0) << "," << (m.failure ? 1 : 0) << "," << fmt(m.dice) << "," << fmt(m.dhd) << ","
      << fmt(m.accuracy) << "," << fmt(m.sensitivity) << "," << fmt(m.specificity) << "," << fmt(m.phase_error)
      << "\n";
  }
  if (!f) throw IoError("write to '" + path + "' failed");
}

void write_panel_png(const std::string& path, const SliceSample& sample, const ComplexTensor& k_pred,
                     double threshold_factor) {
  const ComplexTensor kin = as_plane(sample.k_in, "write_panel_png");
  const ComplexTensor ktarget = as_plane(sample.k_target, "write_panel_png");
  const ComplexTensor kpred = as_plane(k_pred, "write_panel_png");
  const ComplexTensor pred_image = to_image(kpred);
  const ComplexTensor target_image = to_image(ktarget);
  const BinaryMask pred_mask = binarize(pred_image, threshold_factor);
  const BinaryMask& target_mask = sample.brain_mask;
  BinaryMask diff(pred_mask.height, pred_mask.width);
  for (std::size_t i = 0; i < diff.size(); ++i) diff.bits[i] = pred_mask.bits[i] != target_mask.bits[i] ? 1 : 0;

  std::vector<Gray8> tiles{magnitude_u8(to_image(kin)), magnitude_u8(target_image), magnitude_u8(pred_image),
                           mask_u8(diff),           log_kspace_u8(kin),          log_kspace_u8(ktarget),
                           log_kspace_u8(kpred),    mask_u8(pred_mask)};
  write_png(path, tile_grid(tiles, 4));
}

}  // namespace kstrip
