#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "kstrip/autograd.hpp"
#include "kstrip/data.hpp"
#include "kstrip/model.hpp"

namespace kstrip {

// Mean complex modulus |pred - target| over all elements, as a real
// scalar node. With `split`, |d_re| + |d_im| is used instead. The
// subgradient at a zero difference is 0.
Var complex_l1(const Var& pred, const Var& target, bool split = false);

struct AdamOptions {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.99;
  double eps = 1e-8;
};

// Adam with bias correction, applied to the real and imaginary planes of
// every parameter independently.
class Adam {
 public:
  Adam(std::vector<Var> params, AdamOptions opts = {});

  // Updates every parameter from its entry in `grads` (keyed by node id).
  void step(const GradientMap& grads, double lr);
  void step(const GradientMap& grads) { step(grads, opts_.lr); }

  std::uint64_t steps() const { return step_; }
  const AdamOptions& options() const { return opts_; }
  const std::vector<ComplexTensor>& first_moments() const { return m_; }
  const std::vector<ComplexTensor>& second_moments() const { return v_; }
  void restore(std::uint64_t steps, std::vector<ComplexTensor> m, std::vector<ComplexTensor> v);

 private:
  std::vector<Var> params_;
  AdamOptions opts_;
  std::vector<ComplexTensor> m_;
  std::vector<ComplexTensor> v_;
  std::uint64_t step_ = 0;
};

// base * 0.5^floor(epoch / period).
double lr_schedule(std::size_t epoch, double base = 1e-3, std::size_t period = 50);

// Scales all gradients so that their joint L2 norm is at most max_norm.
// Returns the norm before clipping.
double clip_grad_norm(GradientMap& grads, double max_norm);

struct TrainConfig {
  std::size_t epochs = 150;
  std::size_t batch_size = 64;
  double lr = 1e-3;
  std::size_t lr_period = 50;
  AdamOptions adam{};
  std::uint64_t seed = 0;
  bool augment = true;
  bool joint_augment = true;  // apply the same frame to the target
  // Augmentation widths are rescaled to the slice size when unset.
  std::optional<AugmentSpec> augment_spec;
  bool split_l1 = false;
  double clip_norm = 0.0;  // 0 disables clipping
  std::size_t val_every = 1;
  ConvPrecision conv_precision = ConvPrecision::f64;
  std::string out_dir;  // empty: no files written
  std::map<std::string, std::string> meta;  // copied into every checkpoint
  bool quiet = true;

  // 50 epochs of batch 16 with the lr halved every 25 epochs, single
  // precision convolutions.
  static TrainConfig desk();
  void validate() const;
};

struct EpochRecord {
  std::size_t epoch;
  std::string split;  // "train" or "val"
  double loss;
  double lr;
  double seconds;
  std::size_t steps;
};

struct TrainResult {
  std::vector<EpochRecord> log;
  double best_val = 0.0;
  std::size_t best_epoch = 0;
};

struct TrainData {
  const std::vector<SliceSample>* samples;
  std::vector<std::size_t> train;
  std::vector<std::size_t> val;
};

// Stacks samples into [B, 1, H, W] input and target tensors.
void make_batch(const std::vector<SliceSample>& samples, const std::vector<std::size_t>& indices,
                ComplexTensor& input, ComplexTensor& target);

// Mean loss over `indices` in inference mode.
double evaluate_loss(KStripModel& model, const std::vector<SliceSample>& samples,
                     const std::vector<std::size_t>& indices, std::size_t batch_size, bool split_l1 = false);

// Training state kept in "last" checkpoints so that a run can continue
// exactly where it stopped.
struct ResumeState {
  std::size_t next_epoch = 0;
  double best_val = 0.0;
  std::size_t best_epoch = 0;
  bool has_best = false;
  std::uint64_t steps = 0;
  std::vector<ComplexTensor> m;
  std::vector<ComplexTensor> v;
};

Checkpoint training_checkpoint(KStripModel& model, const Adam& opt, const ResumeState& state,
                               const TrainConfig& config);
ResumeState resume_state(const Checkpoint& ckpt, KStripModel& model);

// Runs epochs [resume.next_epoch, config.epochs). Writes best.kstrip,
// last.kstrip and train.log into config.out_dir when it is set.
TrainResult train(KStripModel& model, const TrainData& data, const TrainConfig& config,
                  const std::optional<ResumeState>& resume = std::nullopt);

std::string to_json(const EpochRecord& r);

}  // namespace kstrip
