#include "kstrip/model.hpp"

#include <cmath>
#include <set>

#include "kstrip/binio.hpp"
#include "kstrip/error.hpp"

namespace kstrip {

KStripConfig KStripConfig::desk() {
  KStripConfig c;
  c.height = 64;
  c.width = 64;
  c.base_channels = 8;
  c.levels = 2;
  c.blocks_per_level = 2;
  c.decoder_blocks = 2;
  c.bottleneck_channels = 32;
  return c;
}

void KStripConfig::validate() const {
  if (levels < 1 || levels > 8) throw ConfigError("model: levels must be in [1, 8]");
  if (base_channels < 1) throw ConfigError("model: base_channels must be >= 1");
  if (blocks_per_level < 1 || decoder_blocks < 1) throw ConfigError("model: block counts must be >= 1");
  const std::size_t factor = std::size_t{1} << levels;
  if (height == 0 || width == 0 || height % factor != 0 || width % factor != 0) {
    throw ConfigError("model: input " + std::to_string(height) + "x" + std::to_string(width) +
                      " is not divisible by 2^levels = " + std::to_string(factor));
  }
  if (!is_power_of_two(height) || !is_power_of_two(width)) throw ConfigError("model: input size must be a power of two");
  if (bottleneck_channels != channels_at(levels)) {
    throw ConfigError("model: bottleneck_channels must equal base_channels * 2^levels = " +
                      std::to_string(channels_at(levels)));
  }
  if (!(dropout_p >= 0.0 && dropout_p < 1.0)) throw ConfigError("model: dropout must lie in [0, 1)");
  if (!(input_scale >= 0.0) || !std::isfinite(input_scale)) throw ConfigError("model: input_scale must be >= 0");
  if (!(bn.eps > 0.0) || !(bn.momentum >= 0.0 && bn.momentum <= 1.0)) {
    throw ConfigError("model: invalid batch-norm options");
  }
}

double KStripConfig::effective_input_scale() const {
  return input_scale > 0.0 ? input_scale : 1.0 / std::sqrt(static_cast<double>(height * width));
}

KStripModel KStripModel::build(const KStripConfig& config, std::uint64_t seed) {
  config.validate();
  KStripModel m;
  m.config_ = config;
  Rng rng(derive_seed(seed, {0x6d6f64656cULL}));
  auto chain = [&](std::size_t in, std::size_t out, std::size_t n) {
    std::vector<ResidualBlock> blocks;
    blocks.emplace_back(in, out, rng, config.bn);
    for (std::size_t b = 1; b < n; ++b) blocks.emplace_back(out, out, rng, config.bn);
    return blocks;
  };
  std::size_t in = 1;
  for (std::size_t l = 0; l < config.levels; ++l) {
    m.encoder_.push_back(chain(in, config.channels_at(l), config.blocks_per_level));
    in = config.channels_at(l);
  }
  m.bottleneck_ = chain(in, config.bottleneck_channels, config.blocks_per_level);
  m.decoder_.resize(config.levels);
  in = config.bottleneck_channels;
  for (std::size_t l = config.levels; l-- > 0;) {
    const std::size_t c = config.channels_at(l);
    m.decoder_[l].up = ComplexConvParams::init(in, c, 3, rng);
    // The skip and the upsampled path are concatenated to 2c channels.
    m.decoder_[l].blocks = chain(2 * c, c, config.decoder_blocks);
    in = c;
  }
  m.head_ = ComplexConvParams::init(config.base_channels, 1, 1, rng);
  return m;
}

Var KStripModel::forward(const Var& x, bool training, Rng* dropout_rng, FeatureTrace* trace) {
  const Shape& s = x->value.shape();
  if (s.size() != 4 || s[1] != 1 || s[2] != config_.height || s[3] != config_.width) {
    throw DimensionError("model: expected input [B, 1, " + std::to_string(config_.height) + ", " +
                         std::to_string(config_.width) + "], got " + shape_str(s));
  }
  const double in_scale = config_.effective_input_scale();
  Var h = scale(x, in_scale);
  std::vector<Var> skips;
  for (std::size_t l = 0; l < config_.levels; ++l) {
    for (auto& block : encoder_[l]) h = block.forward(h, training, config_.dropout_p, dropout_rng);
    if (trace) trace->encoder.push_back(h->value.shape());
    skips.push_back(h);
    h = spectral_pool(h);
  }
  for (auto& block : bottleneck_) h = block.forward(h, training);
  if (trace) trace->bottleneck = h->value.shape();
  for (std::size_t l = config_.levels; l-- > 0;) {
    const Var up = upsample_conv(h, decoder_[l].up);
    if (up->value.shape() != skips[l]->value.shape()) {
      throw DimensionError("model: skip " + shape_str(skips[l]->value.shape()) + " does not match upsampled " +
                           shape_str(up->value.shape()));
    }
    h = concat_channels(skips[l], up);
    for (auto& block : decoder_[l].blocks) h = block.forward(h, training);
    if (trace) trace->decoder.push_back(h->value.shape());
  }
  return scale(complex_conv2d(h, head_), 1.0 / in_scale);
}

ComplexTensor KStripModel::infer(const ComplexTensor& k) {
  NoGradGuard guard;
  return forward(constant(k), false)->value;
}

NamedParams KStripModel::parameters() {
  NamedParams params;
  NamedBuffers buffers;
  for (std::size_t l = 0; l < encoder_.size(); ++l) {
    for (std::size_t b = 0; b < encoder_[l].size(); ++b) {
      encoder_[l][b].collect("enc" + std::to_string(l) + ".block" + std::to_string(b), params, buffers);
    }
  }
  for (std::size_t b = 0; b < bottleneck_.size(); ++b) {
    bottleneck_[b].collect("bottleneck.block" + std::to_string(b), params, buffers);
  }
  for (std::size_t l = decoder_.size(); l-- > 0;) {
    decoder_[l].up.collect("dec" + std::to_string(l) + ".up", params);
    for (std::size_t b = 0; b < decoder_[l].blocks.size(); ++b) {
      decoder_[l].blocks[b].collect("dec" + std::to_string(l) + ".block" + std::to_string(b), params, buffers);
    }
  }
  head_.collect("head", params);
  return params;
}

NamedBuffers KStripModel::buffers() {
  NamedParams params;
  NamedBuffers buffers;
  for (std::size_t l = 0; l < encoder_.size(); ++l) {
    for (std::size_t b = 0; b < encoder_[l].size(); ++b) {
      encoder_[l][b].collect("enc" + std::to_string(l) + ".block" + std::to_string(b), params, buffers);
    }
  }
  for (std::size_t b = 0; b < bottleneck_.size(); ++b) {
    bottleneck_[b].collect("bottleneck.block" + std::to_string(b), params, buffers);
  }
  for (std::size_t l = decoder_.size(); l-- > 0;) {
    for (std::size_t b = 0; b < decoder_[l].blocks.size(); ++b) {
      decoder_[l].blocks[b].collect("dec" + std::to_string(l) + ".block" + std::to_string(b), params, buffers);
    }
  }
  return buffers;
}

std::vector<Var> KStripModel::parameter_vars() {
  std::vector<Var> vars;
  for (auto& [name, v] : parameters()) vars.push_back(v);
  return vars;
}

std::size_t KStripModel::parameter_count() {
  std::size_t n = 0;
  for (auto& [name, v] : parameters()) n += v->value.size();
  return n;
}

std::size_t KStripModel::residual_block_count() const {
  std::size_t n = bottleneck_.size();
  for (const auto& level : encoder_) n += level.size();
  for (const auto& level : decoder_) n += level.blocks.size();
  return n;
}

// ---------------------------------------------------------------------------
// Checkpoints
//
//   magic "KSTRIP01" | u16 version | config | u32 n_meta x (str, str)
//   u32 n_tensors x { str name | u8 rank | u64 dims[rank] | u64 offset | u64 length }
//   u32 crc32(header)
//   payload: per tensor, re plane then im plane as f64 LE
//   u32 crc32(payload)

namespace {

constexpr char kCheckpointMagic[8] = {'K', 'S', 'T', 'R', 'I', 'P', '0', '1'};
constexpr std::uint16_t kCheckpointVersion = 1;

void write_config(ByteWriter& out, const KStripConfig& c) {
  for (std::size_t v : {c.height, c.width, c.base_channels, c.levels, c.blocks_per_level, c.decoder_blocks,
                        c.bottleneck_channels}) {
    out.u64(v);
  }
  out.f64(c.dropout_p);
  out.f64(c.input_scale);
  out.f64(c.bn.eps);
  out.f64(c.bn.momentum);
  out.u8(c.bn.affine ? 1 : 0);
}

KStripConfig read_config(ByteReader& in) {
  KStripConfig c;
  for (std::size_t* v : {&c.height, &c.width, &c.base_channels, &c.levels, &c.blocks_per_level, &c.decoder_blocks,
                         &c.bottleneck_channels}) {
    *v = in.u64();
  }
  c.dropout_p = in.f64();
  c.input_scale = in.f64();
  c.bn.eps = in.f64();
  c.bn.momentum = in.f64();
  c.bn.affine = in.u8() != 0;
  return c;
}

}  // namespace

const ComplexTensor* Checkpoint::find(const std::string& name) const {
  for (const auto& [n, t] : tensors) {
    if (n == name) return &t;
  }
  return nullptr;
}

void save_checkpoint(const Checkpoint& ckpt, const std::string& path) {
  ByteWriter payload;
  ByteWriter header;
  header.raw(kCheckpointMagic, sizeof kCheckpointMagic);
  header.u16(kCheckpointVersion);
  write_config(header, ckpt.config);
  header.u32(static_cast<std::uint32_t>(ckpt.meta.size()));
  for (const auto& [k, v] : ckpt.meta) {
    header.str(k);
    header.str(v);
  }
  header.u32(static_cast<std::uint32_t>(ckpt.tensors.size()));
  std::set<std::string> seen;
  for (const auto& [name, t] : ckpt.tensors) {
    if (!seen.insert(name).second) throw ContractError("checkpoint: duplicate tensor name '" + name + "'");
    header.str(name);
    header.u8(static_cast<std::uint8_t>(t.rank()));
    for (std::size_t d : t.shape()) header.u64(d);
    header.u64(payload.size());
    header.u64(2 * t.size() * sizeof(double));
    payload.f64s(t.re());
    payload.f64s(t.im());
  }
  header.u32(crc32(header.bytes()));
  header.raw(payload.bytes().data(), payload.size());
  header.u32(crc32(payload.bytes()));
  write_file_atomic(path, header.bytes());
}

Checkpoint load_checkpoint(const std::string& path) {
  const auto bytes = read_file(path);
  const std::span<const std::uint8_t> all(bytes);
  ByteReader in(all);
  const auto magic = in.take(sizeof kCheckpointMagic);
  if (!std::equal(magic.begin(), magic.end(), kCheckpointMagic)) {
    throw FormatError("'" + path + "' is not a KSTRIP01 checkpoint (bad magic)");
  }
  const auto version = in.u16();
  if (version != kCheckpointVersion) throw FormatError("unsupported checkpoint version " + std::to_string(version));

  Checkpoint ckpt;
  ckpt.config = read_config(in);
  const auto n_meta = in.u32();
  for (std::uint32_t i = 0; i < n_meta; ++i) {
    auto k = in.str();
    ckpt.meta[k] = in.str();
  }
  struct Entry {
    std::string name;
    Shape shape;
    std::uint64_t offset;
    std::uint64_t length;
  };
  std::vector<Entry> entries(in.u32());
  for (auto& e : entries) {
    e.name = in.str();
    const auto rank = in.u8();
    if (rank < 1 || rank > 4) throw IntegrityError("checkpoint: invalid tensor rank");
    for (int d = 0; d < rank; ++d) e.shape.push_back(in.u64());
    e.offset = in.u64();
    e.length = in.u64();
  }
  const std::size_t header_end = in.position();
  if (in.u32() != crc32(all.first(header_end))) throw IntegrityError("checkpoint '" + path + "': header CRC mismatch");

  const std::size_t payload_begin = in.position();
  if (in.remaining() < 4) throw IntegrityError("checkpoint '" + path + "' is truncated");
  const std::size_t payload_size = in.remaining() - 4;
  const auto payload = all.subspan(payload_begin, payload_size);
  ByteReader tail(all.subspan(payload_begin + payload_size));
  if (tail.u32() != crc32(payload)) throw IntegrityError("checkpoint '" + path + "': payload CRC mismatch");

  for (const auto& e : entries) {
    const std::size_t n = shape_numel(e.shape);
    if (e.length != 2 * n * sizeof(double) || e.offset > payload_size || e.length > payload_size - e.offset) {
      throw IntegrityError("checkpoint: tensor '" + e.name + "' lies outside the payload");
    }
    ByteReader tr(payload.subspan(e.offset, e.length));
    ComplexTensor t(e.shape);
    tr.f64s(t.re());
    tr.f64s(t.im());
    ckpt.tensors.emplace_back(e.name, std::move(t));
  }
  return ckpt;
}

Checkpoint to_checkpoint(KStripModel& model) {
  Checkpoint ckpt;
  ckpt.config = model.config();
  for (auto& [name, v] : model.parameters()) ckpt.tensors.emplace_back(name, v->value);
  for (auto& [name, t] : model.buffers()) ckpt.tensors.emplace_back(name, *t);
  return ckpt;
}

KStripModel from_checkpoint(const Checkpoint& ckpt) {
  try {
    ckpt.config.validate();
  } catch (const ConfigError& e) {
    throw FormatError(std::string("checkpoint carries an invalid config: ") + e.what());
  }
  KStripModel model = KStripModel::build(ckpt.config, 0);
  auto fetch = [&](const std::string& name, const Shape& shape) -> const ComplexTensor& {
    const ComplexTensor* t = ckpt.find(name);
    if (t == nullptr) throw FormatError("checkpoint is missing tensor '" + name + "'");
    if (t->shape() != shape) {
      throw FormatError("checkpoint tensor '" + name + "' has shape " + shape_str(t->shape()) + ", expected " +
                        shape_str(shape));
    }
    return *t;
  };
  for (auto& [name, v] : model.parameters()) {
    v->value = fetch(name, v->value.shape());
    v->grad = ComplexTensor::zeros_like(v->value);
  }
  for (auto& [name, t] : model.buffers()) *t = fetch(name, t->shape());
  return model;
}

void save(KStripModel& model, const std::string& path) { save_checkpoint(to_checkpoint(model), path); }

KStripModel load(const std::string& path) { return from_checkpoint(load_checkpoint(path)); }

}  // namespace kstrip
