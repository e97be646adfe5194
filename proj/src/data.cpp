#include "kstrip/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <set>

#include "kstrip/binio.hpp"
#include "kstrip/error.hpp"

namespace kstrip {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double draw(Rng& rng, Range r) { return uniform(rng, r.lo, r.hi); }

struct Blob {
  double u, v;    // center in brain-normalized coordinates
  double du, dv;  // drift across the stack
  double sigma;
  double amplitude;
};

// Everything about a patient that stays fixed across its slices.
struct Anatomy {
  double cx, cy;
  double head_ax, head_ay;
  double rotation;
  double skull_thickness, skull_intensity;
  double gap_thickness, gap_intensity;
  double brain_intensity;
  std::vector<Blob> blobs;
  std::optional<Blob> pathology;
  double phase_coeff[6];
  double phase_drift[6];
};

Anatomy draw_anatomy(const PhantomSpec& spec, std::uint32_t patient_id) {
  Rng rng(derive_seed(spec.seed, {0x70686e74ULL, patient_id}));
  Anatomy a{};
  a.cx = static_cast<double>(spec.width) / 2.0 + draw(rng, spec.center_jitter) * static_cast<double>(spec.width);
  a.cy = static_cast<double>(spec.height) / 2.0 + draw(rng, spec.center_jitter) * static_cast<double>(spec.height);
  a.head_ax = draw(rng, spec.head_axis_x);
  a.head_ay = draw(rng, spec.head_axis_y);
  a.rotation = draw(rng, spec.rotation);
  a.skull_thickness = draw(rng, spec.skull_thickness);
  a.skull_intensity = draw(rng, spec.skull_intensity);
  a.gap_thickness = draw(rng, spec.gap_thickness);
  a.gap_intensity = draw(rng, spec.gap_intensity);
  a.brain_intensity = draw(rng, spec.brain_intensity);
  const auto n_blobs = uniform_int(rng, spec.blobs_min, spec.blobs_max);
  auto draw_blob = [&](Range sigma, Range amplitude) {
    Blob b{};
    const double rad = 0.75 * std::sqrt(uniform01(rng));
    const double ang = kTwoPi * uniform01(rng);
    b.u = rad * std::cos(ang);
    b.v = rad * std::sin(ang);
    b.du = uniform(rng, -0.2, 0.2);
    b.dv = uniform(rng, -0.2, 0.2);
    b.sigma = draw(rng, sigma);
    b.amplitude = draw(rng, amplitude);
    return b;
  };
  for (std::int64_t i = 0; i < n_blobs; ++i) a.blobs.push_back(draw_blob(spec.blob_sigma, spec.blob_amplitude));
  if (uniform01(rng) < spec.pathology_probability) {
    a.pathology = draw_blob(spec.pathology_sigma, spec.pathology_amplitude);
  }
  for (int k = 0; k < 6; ++k) {
    a.phase_coeff[k] = draw(rng, spec.phase_coeff);
    a.phase_drift[k] = draw(rng, spec.phase_drift);
  }
  return a;
}

void check_range(Range r, const char* name, double lo = -INFINITY, double hi = INFINITY) {
  if (!std::isfinite(r.lo) || !std::isfinite(r.hi) || r.lo > r.hi || r.lo < lo || r.hi > hi) {
    throw ConfigError(std::string("phantom: invalid range for ") + name);
  }
}

}  // namespace

void PhantomSpec::validate() const {
  if (!is_power_of_two(height) || !is_power_of_two(width) || height < 8 || width < 8) {
    throw ConfigError("phantom: size must be a power of two >= 8");
  }
  check_range(center_jitter, "center_jitter", -0.2, 0.2);
  check_range(head_axis_x, "head_axis_x", 0.0, 1.0);
  check_range(head_axis_y, "head_axis_y", 0.0, 1.0);
  check_range(rotation, "rotation");
  check_range(skull_thickness, "skull_thickness", 0.0, 1.0);
  check_range(gap_thickness, "gap_thickness", 0.0, 1.0);
  check_range(skull_intensity, "skull_intensity", 0.0, 1.0);
  check_range(gap_intensity, "gap_intensity", 0.0, 1.0);
  check_range(brain_intensity, "brain_intensity", 0.0, 1.0);
  check_range(blob_sigma, "blob_sigma", 1e-6);
  check_range(blob_amplitude, "blob_amplitude", -1.0, 1.0);
  check_range(pathology_sigma, "pathology_sigma", 1e-6);
  check_range(pathology_amplitude, "pathology_amplitude", -1.0, 1.0);
  check_range(phase_coeff, "phase_coeff");
  check_range(phase_drift, "phase_drift");
  if (blobs_min < 0 || blobs_max < blobs_min) throw ConfigError("phantom: invalid blob count range");
  if (brain_floor < 0.0 || brain_floor > 1.0) throw ConfigError("phantom: brain_floor outside [0, 1]");
  if (pathology_probability < 0.0 || pathology_probability > 1.0) {
    throw ConfigError("phantom: pathology_probability outside [0, 1]");
  }
  if (min_slice_scale <= 0.0 || min_slice_scale > 1.0) throw ConfigError("phantom: min_slice_scale outside (0, 1]");
}

PhantomSlice render_slice(const PhantomSpec& spec, std::uint32_t patient_id, std::uint32_t slice_idx,
                          std::uint32_t n_slices) {
  spec.validate();
  if (n_slices == 0 || slice_idx >= n_slices) throw ContractError("render_slice: slice index out of range");
  const Anatomy a = draw_anatomy(spec, patient_id);
  const std::size_t h = spec.height;
  const std::size_t w = spec.width;

  // Position in the stack, z in (-1, 1); radii shrink toward both ends.
  const double z = 2.0 * (static_cast<double>(slice_idx) + 0.5) / static_cast<double>(n_slices) - 1.0;
  const double g = std::max(spec.min_slice_scale, std::sqrt(std::max(0.0, 1.0 - z * z)));
  const double outer_x = a.head_ax * g;
  const double outer_y = a.head_ay * g;
  const double inner_x = outer_x - a.skull_thickness;
  const double inner_y = outer_y - a.skull_thickness;
  const double brain_x = inner_x - a.gap_thickness;
  const double brain_y = inner_y - a.gap_thickness;
  const double cr = std::cos(a.rotation);
  const double sr = std::sin(a.rotation);

  PhantomSlice out{RealTensor({h, w}), RealTensor({h, w}), ComplexTensor(), BinaryMask(h, w), BinaryMask(h, w),
                   BinaryMask(h, w)};
  auto inside = [](double x, double y, double ax, double ay) {
    if (ax <= 0.0 || ay <= 0.0) return false;
    return (x / ax) * (x / ax) + (y / ay) * (y / ay) <= 1.0;
  };

  std::vector<double> poly(h * w);
  double pmin = INFINITY;
  double pmax = -INFINITY;
  for (std::size_t r = 0; r < h; ++r) {
    for (std::size_t c = 0; c < w; ++c) {
      const double x0 = (static_cast<double>(c) - a.cx) / (static_cast<double>(w) / 2.0);
      const double y0 = (static_cast<double>(r) - a.cy) / (static_cast<double>(h) / 2.0);
      const double x = cr * x0 + sr * y0;
      const double y = -sr * x0 + cr * y0;
      const std::size_t i = r * w + c;

      double m = 0.0;
      if (inside(x, y, brain_x, brain_y)) {
        out.brain.bits[i] = 1;
        const double u = x / brain_x;
        const double v = y / brain_y;
        m = a.brain_intensity;
        auto add_blob = [&](const Blob& b) {
          const double du = u - (b.u + b.du * z);
          const double dv = v - (b.v + b.dv * z);
          m += b.amplitude * std::exp(-(du * du + dv * dv) / (2.0 * b.sigma * b.sigma));
        };
        for (const auto& b : a.blobs) add_blob(b);
        if (a.pathology) add_blob(*a.pathology);
        m = std::clamp(m, spec.brain_floor, 1.0);
      } else if (inside(x, y, inner_x, inner_y)) {
        m = a.gap_intensity;
      } else if (inside(x, y, outer_x, outer_y)) {
        out.skull.bits[i] = 1;
        m = a.skull_intensity;
      }
      if (m > 0.0) out.head.bits[i] = 1;
      out.magnitude[i] = m;

      const double basis[6] = {1.0, x0, y0, x0 * x0, x0 * y0, y0 * y0};
      double p = 0.0;
      for (int k = 0; k < 6; ++k) p += (a.phase_coeff[k] + a.phase_drift[k] * z) * basis[k];
      poly[i] = p;
      pmin = std::min(pmin, p);
      pmax = std::max(pmax, p);
    }
  }
  const double span = pmax - pmin;
  for (std::size_t i = 0; i < h * w; ++i) out.phase[i] = span > 0.0 ? kTwoPi * (poly[i] - pmin) / span : 0.0;
  out.image = from_polar(out.magnitude, out.phase);
  return out;
}

ComplexTensor to_kspace(const ComplexTensor& image) { return fftshift(fft2(image)); }

SliceSample make_sample(const PhantomSlice& slice, std::uint32_t patient_id, std::uint32_t slice_idx) {
  const std::size_t h = slice.brain.height;
  const std::size_t w = slice.brain.width;
  ComplexTensor brain_image = slice.image;
  for (std::size_t i = 0; i < brain_image.size(); ++i) {
    if (!slice.brain[i]) brain_image.set(i, {0.0, 0.0});
  }
  SliceSample s;
  s.k_in = to_kspace(slice.image).reshaped({1, h, w});
  s.k_target = to_kspace(brain_image).reshaped({1, h, w});
  s.brain_mask = slice.brain;
  s.patient_id = patient_id;
  s.slice_idx = slice_idx;
  s.brain_pixels = slice.brain.count();
  return s;
}

std::vector<SliceSample> gen_patient(const PhantomSpec& spec, std::uint32_t patient_id, std::uint32_t n_slices) {
  if (n_slices < 1) throw ContractError("gen_patient: need at least one slice");
  std::vector<SliceSample> out;
  out.reserve(n_slices);
  for (std::uint32_t s = 0; s < n_slices; ++s) {
    out.push_back(make_sample(render_slice(spec, patient_id, s, n_slices), patient_id, s));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Augmentation

AugmentSpec AugmentSpec::scaled_for(std::size_t size) {
  AugmentSpec s;
  const double f = static_cast<double>(size) / 256.0;
  s.min_width = std::max(1, static_cast<int>(std::lround(5.0 * f)));
  s.max_width = std::max(s.min_width, static_cast<int>(std::lround(40.0 * f)));
  return s;
}

ComplexTensor scale_frame(const ComplexTensor& k, int width, double factor) {
  if (k.rank() < 2) throw DimensionError("periphery_augment: needs spatial dimensions");
  const std::size_t h = k.dim(k.rank() - 2);
  const std::size_t w = k.dim(k.rank() - 1);
  if (width < 0 || 2 * static_cast<std::size_t>(width) >= std::min(h, w)) {
    throw ContractError("periphery_augment: frame width " + std::to_string(width) + " is degenerate for " +
                        std::to_string(h) + "x" + std::to_string(w));
  }
  const auto fw = static_cast<std::size_t>(width);
  ComplexTensor out = k;
  for (std::size_t base = 0; base < k.size(); base += h * w) {
    for (std::size_t r = 0; r < h; ++r) {
      const bool edge_row = r < fw || r >= h - fw;
      for (std::size_t c = 0; c < w; ++c) {
        if (edge_row || c < fw || c >= w - fw) {
          out.re()[base + r * w + c] *= factor;
          out.im()[base + r * w + c] *= factor;
        }
      }
    }
  }
  return out;
}

AugmentDraw draw_augment(const AugmentSpec& spec, Rng& rng) {
  AugmentDraw d{};
  d.factor = uniform(rng, spec.factor.lo, spec.factor.hi);
  d.width = static_cast<int>(uniform_int(rng, spec.min_width, spec.max_width));
  return d;
}

ComplexTensor periphery_augment(const ComplexTensor& k, Rng& rng, const AugmentSpec& spec) {
  if (k.rank() < 2) throw DimensionError("periphery_augment: needs spatial dimensions");
  const std::size_t h = k.dim(k.rank() - 2);
  const std::size_t w = k.dim(k.rank() - 1);
  if (spec.min_width < 0 || spec.max_width < spec.min_width ||
      2 * static_cast<std::size_t>(spec.max_width) >= std::min(h, w)) {
    throw ContractError("periphery_augment: width range [" + std::to_string(spec.min_width) + ", " +
                        std::to_string(spec.max_width) + "] is degenerate for " + std::to_string(h) + "x" +
                        std::to_string(w));
  }
  const auto d = draw_augment(spec, rng);
  return scale_frame(k, d.width, d.factor);
}

// ---------------------------------------------------------------------------
// Splits

PatientSplit split_patients(std::vector<std::uint32_t> ids, std::uint64_t seed) {
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  if (ids.size() < 10) {
    throw ConfigError("split_patients: need at least 10 patients, got " + std::to_string(ids.size()));
  }
  Rng rng(derive_seed(seed, {0x73706c74ULL}));
  for (std::size_t i = ids.size() - 1; i > 0; --i) {
    const auto j = static_cast<std::size_t>(uniform_int(rng, 0, static_cast<std::int64_t>(i)));
    std::swap(ids[i], ids[j]);
  }
  const std::size_t n = ids.size();
  const auto n_train = static_cast<std::size_t>(std::lround(0.7 * static_cast<double>(n)));
  const auto n_val = static_cast<std::size_t>(std::lround(0.2 * static_cast<double>(n)));
  PatientSplit s;
  s.train.assign(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(n_train));
  s.val.assign(ids.begin() + static_cast<std::ptrdiff_t>(n_train),
               ids.begin() + static_cast<std::ptrdiff_t>(n_train + n_val));
  s.test.assign(ids.begin() + static_cast<std::ptrdiff_t>(n_train + n_val), ids.end());
  return s;
}

std::vector<std::uint32_t> patient_ids(const std::vector<SliceSample>& samples) {
  std::vector<std::uint32_t> ids;
  std::set<std::uint32_t> seen;
  for (const auto& s : samples) {
    if (seen.insert(s.patient_id).second) ids.push_back(s.patient_id);
  }
  return ids;
}

std::vector<std::size_t> indices_for(const std::vector<SliceSample>& samples,
                                     const std::vector<std::uint32_t>& patients) {
  const std::set<std::uint32_t> wanted(patients.begin(), patients.end());
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (wanted.count(samples[i].patient_id)) idx.push_back(i);
  }
  return idx;
}

// ---------------------------------------------------------------------------
// KSDS01 files
//
//   magic "KSDS01" | u16 version | u32 height | u32 width | u64 count
//   count x { u64 offset | u64 length | u32 patient | u32 slice |
//             u64 brain_pixels | u32 crc32(sample) }
//   u32 crc32(header)
//   samples: k_in re, k_in im, k_target re, k_target im (f64 LE planes),
//            brain mask bit-packed LSB first
//   u32 crc32(all preceding bytes)

namespace {

constexpr char kDatasetMagic[6] = {'K', 'S', 'D', 'S', '0', '1'};
constexpr std::uint16_t kDatasetVersion = 1;
constexpr std::size_t kIndexEntryBytes = 8 + 8 + 4 + 4 + 8 + 4;
constexpr std::size_t kFixedHeaderBytes = 6 + 2 + 4 + 4 + 8;

std::size_t sample_bytes(std::size_t h, std::size_t w) { return 4 * h * w * 8 + (h * w + 7) / 8; }

void encode_sample(const SliceSample& s, ByteWriter& out) {
  out.f64s(s.k_in.re());
  out.f64s(s.k_in.im());
  out.f64s(s.k_target.re());
  out.f64s(s.k_target.im());
  std::vector<std::uint8_t> packed((s.brain_mask.size() + 7) / 8, 0);
  for (std::size_t i = 0; i < s.brain_mask.size(); ++i) {
    if (s.brain_mask[i]) packed[i / 8] |= static_cast<std::uint8_t>(1u << (i % 8));
  }
  out.raw(packed.data(), packed.size());
}

SliceSample decode_sample(std::span<const std::uint8_t> bytes, std::size_t h, std::size_t w) {
  ByteReader in(bytes);
  SliceSample s;
  s.k_in = ComplexTensor({1, h, w});
  s.k_target = ComplexTensor({1, h, w});
  in.f64s(s.k_in.re());
  in.f64s(s.k_in.im());
  in.f64s(s.k_target.re());
  in.f64s(s.k_target.im());
  const auto packed = in.take((h * w + 7) / 8);
  s.brain_mask = BinaryMask(h, w);
  for (std::size_t i = 0; i < h * w; ++i) s.brain_mask.bits[i] = (packed[i / 8] >> (i % 8)) & 1u;
  return s;
}

struct DatasetHeader {
  std::size_t height = 0;
  std::size_t width = 0;
  std::size_t header_bytes = 0;
  std::uint64_t count = 0;
};

DatasetHeader parse_fixed_header(ByteReader& in) {
  const auto magic = in.take(6);
  if (!std::equal(magic.begin(), magic.end(), kDatasetMagic)) throw FormatError("not a KSDS01 dataset (bad magic)");
  const auto version = in.u16();
  if (version != kDatasetVersion) throw FormatError("unsupported dataset version " + std::to_string(version));
  DatasetHeader h;
  h.height = in.u32();
  h.width = in.u32();
  h.count = in.u64();
  if (h.height == 0 || h.width == 0 || h.height > 65536 || h.width > 65536) {
    throw FormatError("dataset: implausible slice size");
  }
  h.header_bytes = kFixedHeaderBytes + h.count * kIndexEntryBytes + 4;
  return h;
}

void check_sample_consistency(const SliceSample& s, std::size_t h, std::size_t w) {
  if (s.k_in.shape() != Shape{1, h, w} || s.k_target.shape() != Shape{1, h, w} || s.brain_mask.height != h ||
      s.brain_mask.width != w) {
    throw DimensionError("write_dataset: sample shapes are inconsistent");
  }
  if (s.brain_pixels != s.brain_mask.count()) throw ContractError("write_dataset: brain_pixels != mask popcount");
  // The target must be the masked head, up to FFT round-off.
  const ComplexTensor head = ifft2(ifftshift(s.k_in));
  ComplexTensor brain = head;
  for (std::size_t i = 0; i < brain.size(); ++i) {
    if (!s.brain_mask[i]) brain.set(i, {0.0, 0.0});
  }
  const ComplexTensor expected = fftshift(fft2(brain));
  double scale = 1.0;
  double err = 0.0;
  for (std::size_t i = 0; i < expected.size(); ++i) {
    scale = std::max(scale, std::abs(expected.at(i)));
    err = std::max(err, std::abs(expected.at(i) - s.k_target.at(i)));
  }
  if (err > 1e-9 * scale) {
    throw ContractError("write_dataset: k_target is not the masked k_in (patient " + std::to_string(s.patient_id) +
                        ", slice " + std::to_string(s.slice_idx) + ")");
  }
}

}  // namespace

void write_dataset(const std::vector<SliceSample>& samples, const std::string& path) {
  if (samples.empty()) throw ContractError("write_dataset: no samples");
  const std::size_t h = samples.front().brain_mask.height;
  const std::size_t w = samples.front().brain_mask.width;
  for (const auto& s : samples) check_sample_consistency(s, h, w);

  const std::size_t per_sample = sample_bytes(h, w);
  const std::size_t header_bytes = kFixedHeaderBytes + samples.size() * kIndexEntryBytes + 4;

  std::vector<std::uint32_t> crcs;
  ByteWriter body;
  for (const auto& s : samples) {
    ByteWriter one;
    encode_sample(s, one);
    crcs.push_back(crc32(one.bytes()));
    body.raw(one.bytes().data(), one.size());
  }

  ByteWriter out;
  out.raw(kDatasetMagic, 6);
  out.u16(kDatasetVersion);
  out.u32(static_cast<std::uint32_t>(h));
  out.u32(static_cast<std::uint32_t>(w));
  out.u64(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    out.u64(header_bytes + i * per_sample);
    out.u64(per_sample);
    out.u32(samples[i].patient_id);
    out.u32(samples[i].slice_idx);
    out.u64(samples[i].brain_pixels);
    out.u32(crcs[i]);
  }
  out.u32(crc32(out.bytes()));
  out.raw(body.bytes().data(), body.size());
  out.u32(crc32(out.bytes()));
  write_file_atomic(path, out.bytes());
}

std::vector<SliceSample> read_dataset(const std::string& path) {
  const auto bytes = read_file(path);
  if (bytes.size() < kFixedHeaderBytes + 8) throw IntegrityError("dataset '" + path + "' is truncated");
  ByteReader in(bytes);
  const DatasetHeader hdr = parse_fixed_header(in);
  const std::size_t per_sample = sample_bytes(hdr.height, hdr.width);
  const std::size_t expected = hdr.header_bytes + hdr.count * per_sample + 4;
  if (bytes.size() != expected) {
    throw IntegrityError("dataset '" + path + "' has " + std::to_string(bytes.size()) + " bytes, expected " +
                         std::to_string(expected));
  }
  const std::span<const std::uint8_t> all(bytes);
  ByteReader tail(all.subspan(bytes.size() - 4));
  if (tail.u32() != crc32(all.first(bytes.size() - 4))) throw IntegrityError("dataset '" + path + "': CRC mismatch");

  std::vector<SliceSample> samples;
  samples.reserve(hdr.count);
  for (std::uint64_t i = 0; i < hdr.count; ++i) {
    const auto offset = in.u64();
    const auto length = in.u64();
    if (length != per_sample || offset + length > bytes.size()) throw FormatError("dataset: bad index entry");
    SliceSample s = decode_sample(all.subspan(offset, length), hdr.height, hdr.width);
    s.patient_id = in.u32();
    s.slice_idx = in.u32();
    s.brain_pixels = in.u64();
    in.u32();  // per-sample CRC, covered by the file CRC here
    samples.push_back(std::move(s));
  }
  return samples;
}

DatasetReader::DatasetReader(const std::string& path) : path_(path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open '" + path + "' for reading");
  std::vector<std::uint8_t> fixed(kFixedHeaderBytes);
  if (!f.read(reinterpret_cast<char*>(fixed.data()), static_cast<std::streamsize>(fixed.size()))) {
    throw IntegrityError("dataset '" + path + "' is truncated");
  }
  ByteReader fr(fixed);
  const DatasetHeader hdr = parse_fixed_header(fr);
  std::vector<std::uint8_t> header(hdr.header_bytes);
  std::copy(fixed.begin(), fixed.end(), header.begin());
  if (!f.read(reinterpret_cast<char*>(header.data() + fixed.size()),
              static_cast<std::streamsize>(header.size() - fixed.size()))) {
    throw IntegrityError("dataset '" + path + "' is truncated");
  }
  const std::span<const std::uint8_t> hs(header);
  ByteReader crc_in(hs.subspan(header.size() - 4));
  if (crc_in.u32() != crc32(hs.first(header.size() - 4))) throw IntegrityError("dataset '" + path + "': header CRC mismatch");

  ByteReader in(hs.subspan(kFixedHeaderBytes));
  height_ = hdr.height;
  width_ = hdr.width;
  for (std::uint64_t i = 0; i < hdr.count; ++i) {
    Entry e{};
    e.offset = in.u64();
    e.length = in.u64();
    e.patient_id = in.u32();
    e.slice_idx = in.u32();
    e.brain_pixels = in.u64();
    e.crc = in.u32();
    index_.push_back(e);
  }
}

SliceSample DatasetReader::read(std::size_t i) const {
  if (i >= index_.size()) throw ContractError("dataset index " + std::to_string(i) + " out of range");
  const Entry& e = index_[i];
  std::ifstream f(path_, std::ios::binary);
  if (!f) throw IoError("cannot open '" + path_ + "' for reading");
  std::vector<std::uint8_t> buf(e.length);
  f.seekg(static_cast<std::streamoff>(e.offset));
  if (!f.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()))) {
    throw IntegrityError("dataset '" + path_ + "' is truncated");
  }
  if (crc32(buf) != e.crc) throw IntegrityError("dataset '" + path_ + "': sample CRC mismatch");
  SliceSample s = decode_sample(buf, height_, width_);
  s.patient_id = e.patient_id;
  s.slice_idx = e.slice_idx;
  s.brain_pixels = e.brain_pixels;
  return s;
}

}  // namespace kstrip
