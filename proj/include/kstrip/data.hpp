#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "kstrip/ctensor.hpp"
#include "kstrip/mask.hpp"
#include "kstrip/rng.hpp"

namespace kstrip {

struct Range {
  double lo;
  double hi;
};

// Parameters of the synthetic head phantom. Lengths are fractions of the
// half image size, so anatomy scales with resolution; intensities are
// magnitudes in [0, 1].
struct PhantomSpec {
  std::size_t height = 64;
  std::size_t width = 64;
  std::uint64_t seed = 0;

  Range center_jitter{-0.04, 0.04};
  Range head_axis_x{0.62, 0.74};
  Range head_axis_y{0.72, 0.84};
  Range rotation{-0.25, 0.25};
  Range skull_thickness{0.07, 0.11};
  Range skull_intensity{0.6, 0.9};
  Range gap_thickness{0.04, 0.07};  // dark CSF layer between skull and brain
  Range gap_intensity{0.03, 0.1};
  Range brain_intensity{0.55, 0.7};
  double brain_floor = 0.45;
  int blobs_min = 4;
  int blobs_max = 8;
  Range blob_sigma{0.05, 0.15};
  Range blob_amplitude{-0.12, 0.12};
  double pathology_probability = 0.3;
  Range pathology_sigma{0.05, 0.1};
  Range pathology_amplitude{0.25, 0.35};
  // Slice-wise scale of all radii is sqrt(1 - z^2) for z in (-1, 1) across
  // the stack, floored here.
  double min_slice_scale = 0.2;
  // Coefficient range of the quadratic phase polynomial and of its drift
  // across the stack.
  Range phase_coeff{-1.0, 1.0};
  Range phase_drift{-0.5, 0.5};

  void validate() const;
};

// One rendered slice with everything the generator knows about it.
struct PhantomSlice {
  RealTensor magnitude;  // [H, W]
  RealTensor phase;      // [H, W], in [0, 2pi]
  ComplexTensor image;   // [H, W], magnitude * exp(i phase)
  BinaryMask brain;
  BinaryMask skull;
  BinaryMask head;
};

struct SliceSample {
  ComplexTensor k_in;      // [1, H, W], centered k-space of the full head
  ComplexTensor k_target;  // [1, H, W], centered k-space of the brain only
  BinaryMask brain_mask;
  std::uint32_t patient_id = 0;
  std::uint32_t slice_idx = 0;
  std::uint64_t brain_pixels = 0;

  friend bool operator==(const SliceSample&, const SliceSample&) = default;
};

PhantomSlice render_slice(const PhantomSpec& spec, std::uint32_t patient_id, std::uint32_t slice_idx,
                          std::uint32_t n_slices);
SliceSample make_sample(const PhantomSlice& slice, std::uint32_t patient_id, std::uint32_t slice_idx);
std::vector<SliceSample> gen_patient(const PhantomSpec& spec, std::uint32_t patient_id, std::uint32_t n_slices);

// Centered k-space of an image plane: fftshift(fft2(image)).
ComplexTensor to_kspace(const ComplexTensor& image);

struct AugmentSpec {
  Range factor{0.7, 1.3};
  int min_width = 5;
  int max_width = 40;

  // Width range scaled by size/256 (at least one pixel).
  static AugmentSpec scaled_for(std::size_t size);
};

// Multiplies every element within `width` of a spatial edge by `factor`.
ComplexTensor scale_frame(const ComplexTensor& k, int width, double factor);

struct AugmentDraw {
  double factor;
  int width;
};
AugmentDraw draw_augment(const AugmentSpec& spec, Rng& rng);

// Random periphery scaling of centered k-space (one draw per call).
ComplexTensor periphery_augment(const ComplexTensor& k, Rng& rng, const AugmentSpec& spec = {});

struct PatientSplit {
  std::vector<std::uint32_t> train;
  std::vector<std::uint32_t> val;
  std::vector<std::uint32_t> test;
};

// Shuffled 70/20/10 partition by patient; needs at least 10 patients.
PatientSplit split_patients(std::vector<std::uint32_t> patient_ids, std::uint64_t seed);

// Unique patient ids in first-appearance order.
std::vector<std::uint32_t> patient_ids(const std::vector<SliceSample>& samples);
std::vector<std::size_t> indices_for(const std::vector<SliceSample>& samples,
                                     const std::vector<std::uint32_t>& patients);

// "KSDS01" dataset files.
void write_dataset(const std::vector<SliceSample>& samples, const std::string& path);
std::vector<SliceSample> read_dataset(const std::string& path);

// Random access to single samples through the index header.
class DatasetReader {
 public:
  explicit DatasetReader(const std::string& path);

  std::size_t size() const { return index_.size(); }
  std::size_t height() const { return height_; }
  std::size_t width() const { return width_; }
  SliceSample read(std::size_t i) const;

 private:
  struct Entry {
    std::uint64_t offset;
    std::uint64_t length;
    std::uint32_t patient_id;
    std::uint32_t slice_idx;
    std::uint64_t brain_pixels;
    std::uint32_t crc;
  };
  std::string path_;
  std::size_t height_ = 0;
  std::size_t width_ = 0;
  std::vector<Entry> index_;
};

}  // namespace kstrip
