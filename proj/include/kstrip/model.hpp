#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "kstrip/layers.hpp"

namespace kstrip {

struct KStripConfig {
  std::size_t height = 256;
  std::size_t width = 256;
  std::size_t base_channels = 32;
  std::size_t levels = 3;
  std::size_t blocks_per_level = 4;  // encoder levels and bottleneck
  std::size_t decoder_blocks = 4;    // per decoder level
  std::size_t bottleneck_channels = 256;
  double dropout_p = 0.05;
  // k-space is multiplied by this before the network and divided by it
  // afterwards; 0 selects 1/sqrt(H*W), which makes the transform unitary.
  double input_scale = 0.0;
  BatchNormOptions bn{};

  // 64x64, two levels of width 8, two blocks per chain.
  static KStripConfig desk();

  void validate() const;
  double effective_input_scale() const;
  std::size_t channels_at(std::size_t level) const { return base_channels << level; }

  friend bool operator==(const KStripConfig& a, const KStripConfig& b) {
    return a.height == b.height && a.width == b.width && a.base_channels == b.base_channels &&
           a.levels == b.levels && a.blocks_per_level == b.blocks_per_level &&
           a.decoder_blocks == b.decoder_blocks && a.bottleneck_channels == b.bottleneck_channels &&
           a.dropout_p == b.dropout_p && a.input_scale == b.input_scale && a.bn.eps == b.bn.eps &&
           a.bn.momentum == b.bn.momentum && a.bn.affine == b.bn.affine;
  }
};

// Activation shapes recorded during a forward pass.
struct FeatureTrace {
  std::vector<Shape> encoder;  // per level, before pooling
  Shape bottleneck;
  std::vector<Shape> decoder;  // per level, deepest first
};

// Complex U-Net on centered k-space: residual chains with spectral pooling
// on the way down, upsample-conv plus skip concatenation on the way up and
// a 1x1 complex head.
class KStripModel {
 public:
  static KStripModel build(const KStripConfig& config, std::uint64_t seed);

  KStripModel(KStripModel&&) = default;
  KStripModel& operator=(KStripModel&&) = default;
  KStripModel(const KStripModel&) = delete;
  KStripModel& operator=(const KStripModel&) = delete;

  // x: [B, 1, H, W]. Dropout is active only when training and a generator
  // is supplied.
  Var forward(const Var& x, bool training, Rng* dropout_rng = nullptr, FeatureTrace* trace = nullptr);
  // Inference-mode forward without recording a graph.
  ComplexTensor infer(const ComplexTensor& k);

  const KStripConfig& config() const { return config_; }
  NamedParams parameters();
  NamedBuffers buffers();
  std::vector<Var> parameter_vars();
  // Number of complex scalars over all trainable tensors.
  std::size_t parameter_count();
  std::size_t residual_block_count() const;

 private:
  KStripModel() = default;

  struct DecoderLevel {
    ComplexConvParams up;
    std::vector<ResidualBlock> blocks;
  };

  KStripConfig config_;
  std::vector<std::vector<ResidualBlock>> encoder_;
  std::vector<ResidualBlock> bottleneck_;
  std::vector<DecoderLevel> decoder_;  // indexed by level, run deepest first
  ComplexConvParams head_;
};

// On-disk model and training state ("KSTRIP01").
struct Checkpoint {
  KStripConfig config;
  std::map<std::string, std::string> meta;
  std::vector<std::pair<std::string, ComplexTensor>> tensors;

  const ComplexTensor* find(const std::string& name) const;
};

void save_checkpoint(const Checkpoint& ckpt, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

// Parameters and buffers under their registry names.
Checkpoint to_checkpoint(KStripModel& model);
KStripModel from_checkpoint(const Checkpoint& ckpt);

void save(KStripModel& model, const std::string& path);
KStripModel load(const std::string& path);

}  // namespace kstrip
