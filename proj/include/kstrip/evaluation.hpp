#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "kstrip/ctensor.hpp"
#include "kstrip/data.hpp"
#include "kstrip/mask.hpp"
#include "kstrip/model.hpp"

namespace kstrip {

// Image domain of centered k-space: ifft2(ifftshift(k)).
ComplexTensor to_image(const ComplexTensor& k);

// |image| > factor * mean(|image|) over every pixel. Accepts [H, W] or
// [1, H, W].
BinaryMask binarize(const ComplexTensor& image, double factor = 1.7);

// 100 * 2|X n Y| / (|X| + |Y|); 100 when both are empty.
double dice(const BinaryMask& x, const BinaryMask& y);

// Squared Euclidean distance from every pixel to the nearest set pixel of
// `y` (exact, separable lower-envelope transform). Infinite when y is empty.
std::vector<double> squared_distance_map(const BinaryMask& y);

// max over x in X of the distance to the nearest y in Y. Throws
// ContractError when Y is empty; returns +inf when only X is empty.
double directed_hausdorff(const BinaryMask& x, const BinaryMask& y);

struct Confusion {
  std::uint64_t tp = 0;
  std::uint64_t fp = 0;
  std::uint64_t tn = 0;
  std::uint64_t fn = 0;

  // Percentages; 100 when the denominator is zero.
  double accuracy() const;
  double sensitivity() const;
  double specificity() const;
};

// Pixel-wise counts with `truth` as ground truth.
Confusion confusion(const BinaryMask& pred, const BinaryMask& truth);

// 5000 brain pixels at 256 x 256, scaled by area and rounded down.
std::uint64_t exclusion_threshold(std::size_t height, std::size_t width);

struct EvalOptions {
  double threshold_factor = 1.7;
  // Slices with fewer brain pixels are skipped; 0 selects exclusion_threshold.
  std::uint64_t min_brain_pixels = 0;
  std::size_t batch_size = 16;
  // Compare against binarize(target image) instead of the generator mask.
  bool truth_from_target = false;
};

struct SliceMetrics {
  std::uint32_t patient_id = 0;
  std::uint32_t slice_idx = 0;
  std::uint64_t brain_pixels = 0;
  bool included = false;
  bool mid_head = false;  // slice index in the middle half of its patient
  bool failure = false;   // empty predicted mask
  double dice = 0.0;
  double dhd = 0.0;  // +inf on failure
  double accuracy = 0.0;
  double sensitivity = 0.0;
  double specificity = 0.0;
  // Mean |wrapped phase difference| between prediction and target on brain
  // pixels, in radians.
  double phase_error = 0.0;
};

// Means over included slices. DHD averages only slices without failure.
struct SegMetrics {
  std::size_t n = 0;
  double dice = 0.0;
  double dhd = 0.0;
  double accuracy = 0.0;
  double sensitivity = 0.0;
  double specificity = 0.0;
  double phase_error = 0.0;
  std::size_t failures = 0;
  std::size_t mid_head_failures = 0;
};

struct EvalReport {
  SegMetrics summary;
  std::vector<SliceMetrics> slices;  // every evaluated slice, in input order
};

// Maps a batch of samples to predicted centered k-space [B, 1, H, W].
using Predictor = std::function<ComplexTensor(const std::vector<const SliceSample*>& batch)>;

Predictor model_predictor(KStripModel& model);
// Returns k_target unchanged: the pipeline with a perfect network.
Predictor oracle_predictor();

// Metrics of one slice from its predicted k-space ([1, H, W] or [H, W]).
SliceMetrics slice_metrics(const SliceSample& sample, const ComplexTensor& k_pred, const EvalOptions& opts);

EvalReport evaluate(const Predictor& predict, const std::vector<SliceSample>& samples,
                    const std::vector<std::size_t>& indices, const EvalOptions& opts = {});
EvalReport evaluate(KStripModel& model, const std::vector<SliceSample>& samples,
                    const std::vector<std::size_t>& indices, const EvalOptions& opts = {});

// Report columns follow the order DICE, DHD, Acc, Sens, Spec.
std::string report_header();
std::string report_row(const std::string& dataset, const std::string& split, const SegMetrics& m);
void write_report_csv(const std::string& path, const std::string& dataset, const std::string& split,
                      const SegMetrics& m);
void write_slices_csv(const std::string& path, const std::vector<SliceMetrics>& slices);

// Figure-style panel of one slice. Top row, image domain: input, target,
// prediction, and the pixels where the predicted mask disagrees with the
// brain mask. Bottom row, log-magnitude
// k-space of input, target and prediction, then the predicted mask.
void write_panel_png(const std::string& path, const SliceSample& sample, const ComplexTensor& k_pred,
                     double threshold_factor = 1.7);

}  // namespace kstrip
