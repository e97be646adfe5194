#include "kstrip/training.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "json.hpp"
#include "kstrip/error.hpp"

namespace kstrip {

Var complex_l1(const Var& pred, const Var& target, bool split) {
  require_same_shape(pred->value.shape(), target->value.shape(), "complex_l1");
  const std::size_t n = pred->value.size();
  if (n == 0) throw DimensionError("complex_l1: empty tensors");
  const auto pr = pred->value.re();
  const auto pi = pred->value.im();
  const auto tr = target->value.re();
  const auto ti = target->value.im();
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dr = pr[i] - tr[i];
    const double di = pi[i] - ti[i];
    total += split ? std::abs(dr) + std::abs(di) : std::hypot(dr, di);
  }
  ComplexTensor v({1});
  v.re()[0] = total / static_cast<double>(n);
  return make_result(std::move(v), {pred, target}, [n, split](Node& self) {
    const auto& p = self.parents[0];
    const auto& t = self.parents[1];
    const double up = self.grad.re()[0] / static_cast<double>(n);
    ComplexTensor g(p->value.shape());
    for (std::size_t i = 0; i < n; ++i) {
      const double dr = p->value.re()[i] - t->value.re()[i];
      const double di = p->value.im()[i] - t->value.im()[i];
      if (split) {
        g.re()[i] = up * static_cast<double>((dr > 0.0) - (dr < 0.0));
        g.im()[i] = up * static_cast<double>((di > 0.0) - (di < 0.0));
      } else {
        const double m = std::hypot(dr, di);
        if (m > 0.0) {
          g.re()[i] = up * dr / m;
          g.im()[i] = up * di / m;
        }
      }
    }
    if (t->requires_grad) accumulate_grad(t, scale(g, -1.0));
    accumulate_grad(p, std::move(g));
  });
}

// ---------------------------------------------------------------------------

Adam::Adam(std::vector<Var> params, AdamOptions opts) : params_(std::move(params)), opts_(opts) {
  for (const auto& p : params_) {
    m_.push_back(ComplexTensor::zeros_like(p->value));
    v_.push_back(ComplexTensor::zeros_like(p->value));
  }
}

void Adam::step(const GradientMap& grads, double lr) {
  if (!(lr >= 0.0)) throw ContractError("adam: learning rate must be >= 0");
  for (std::size_t k = 0; k < params_.size(); ++k) {
    const auto it = grads.find(params_[k]->id);
    if (it == grads.end()) throw ContractError("adam: missing gradient for parameter " + std::to_string(k));
    if (it->second.shape() != params_[k]->value.shape()) throw ContractError("adam: gradient shape mismatch");
  }
  ++step_;
  const double b1 = opts_.beta1;
  const double b2 = opts_.beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(step_));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(step_));
  for (std::size_t k = 0; k < params_.size(); ++k) {
    const ComplexTensor& g = grads.at(params_[k]->id);
    ComplexTensor& p = params_[k]->value;
    auto update = [&](std::span<double> pv, std::span<const double> gv, std::span<double> mv, std::span<double> vv) {
      for (std::size_t i = 0; i < pv.size(); ++i) {
        mv[i] = b1 * mv[i] + (1.0 - b1) * gv[i];
        vv[i] = b2 * vv[i] + (1.0 - b2) * gv[i] * gv[i];
        const double mhat = mv[i] / c1;
        const double vhat = vv[i] / c2;
        pv[i] -= lr * mhat / (std::sqrt(vhat) + opts_.eps);
      }
    };
    update(p.re(), g.re(), m_[k].re(), v_[k].re());
    update(p.im(), g.im(), m_[k].im(), v_[k].im());
  }
}

void Adam::restore(std::uint64_t steps, std::vector<ComplexTensor> m, std::vector<ComplexTensor> v) {
  if (m.size() != params_.size() || v.size() != params_.size()) throw ContractError("adam: state size mismatch");
  for (std::size_t k = 0; k < params_.size(); ++k) {
    if (m[k].shape() != params_[k]->value.shape() || v[k].shape() != params_[k]->value.shape()) {
      throw ContractError("adam: state shape mismatch");
    }
  }
  step_ = steps;
  m_ = std::move(m);
  v_ = std::move(v);
}

double lr_schedule(std::size_t epoch, double base, std::size_t period) {
  if (period == 0) throw ContractError("lr_schedule: period must be >= 1");
  return base * std::ldexp(1.0, -static_cast<int>(std::min<std::size_t>(epoch / period, 2000)));
}

double clip_grad_norm(GradientMap& grads, double max_norm) {
  double sq = 0.0;
  for (const auto& [id, g] : grads) {
    for (double x : g.re()) sq += x * x;
    for (double x : g.im()) sq += x * x;
  }
  const double norm = std::sqrt(sq);
  if (max_norm > 0.0 && norm > max_norm) {
    const double f = max_norm / norm;
    for (auto& [id, g] : grads) g = scale(g, f);
  }
  return norm;
}

TrainConfig TrainConfig::desk() {
  TrainConfig c;
  c.epochs = 50;
  c.batch_size = 16;
  c.lr_period = 25;
  c.conv_precision = ConvPrecision::f32;
  return c;
}

void TrainConfig::validate() const {
  if (epochs < 1) throw ConfigError("train: epochs must be >= 1");
  if (batch_size < 1) throw ConfigError("train: batch_size must be >= 1");
  if (!(lr > 0.0)) throw ConfigError("train: lr must be > 0");
  if (lr_period < 1) throw ConfigError("train: lr_period must be >= 1");
  if (val_every < 1) throw ConfigError("train: val_every must be >= 1");
  if (!(clip_norm >= 0.0)) throw ConfigError("train: clip_norm must be >= 0");
  if (!(adam.beta1 >= 0.0 && adam.beta1 < 1.0 && adam.beta2 >= 0.0 && adam.beta2 < 1.0 && adam.eps > 0.0)) {
    throw ConfigError("train: invalid Adam coefficients");
  }
}

// ---------------------------------------------------------------------------

void make_batch(const std::vector<SliceSample>& samples, const std::vector<std::size_t>& indices,
                ComplexTensor& input, ComplexTensor& target) {
  if (indices.empty()) throw ContractError("make_batch: empty batch");
  const std::size_t h = samples.at(indices[0]).k_in.dim(1);
  const std::size_t w = samples.at(indices[0]).k_in.dim(2);
  const std::size_t plane = h * w;
  input = ComplexTensor({indices.size(), 1, h, w});
  target = ComplexTensor({indices.size(), 1, h, w});
  for (std::size_t b = 0; b < indices.size(); ++b) {
    const auto& s = samples.at(indices[b]);
    if (s.k_in.shape() != Shape{1, h, w}) throw DimensionError("make_batch: inconsistent sample sizes");
    std::copy(s.k_in.re().begin(), s.k_in.re().end(), input.re().begin() + b * plane);
    std::copy(s.k_in.im().begin(), s.k_in.im().end(), input.im().begin() + b * plane);
    std::copy(s.k_target.re().begin(), s.k_target.re().end(), target.re().begin() + b * plane);
    std::copy(s.k_target.im().begin(), s.k_target.im().end(), target.im().begin() + b * plane);
  }
}

double evaluate_loss(KStripModel& model, const std::vector<SliceSample>& samples,
                     const std::vector<std::size_t>& indices, std::size_t batch_size, bool split_l1) {
  if (indices.empty()) throw ContractError("evaluate_loss: no samples");
  NoGradGuard guard;
  double total = 0.0;
  for (std::size_t start = 0; start < indices.size(); start += batch_size) {
    const std::vector<std::size_t> batch(indices.begin() + static_cast<std::ptrdiff_t>(start),
                                         indices.begin() + static_cast<std::ptrdiff_t>(
                                                               std::min(indices.size(), start + batch_size)));
    ComplexTensor x, y;
    make_batch(samples, batch, x, y);
    const Var pred = model.forward(constant(std::move(x)), false);
    total += complex_l1(pred, constant(std::move(y)), split_l1)->value.re()[0] * static_cast<double>(batch.size());
  }
  return total / static_cast<double>(indices.size());
}

namespace {

std::string hex_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%a", v);
  return buf;
}

double parse_double(const std::string& s) {
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end == s.c_str() || *end != '\0') throw FormatError("checkpoint: malformed number '" + s + "'");
  return v;
}

std::uint64_t parse_u64(const std::string& s) {
  char* end = nullptr;
  const auto v = std::strtoull(s.c_str(), &end, 10);
  if (end == s.c_str() || *end != '\0') throw FormatError("checkpoint: malformed integer '" + s + "'");
  return v;
}

const std::string& meta_at(const Checkpoint& ckpt, const std::string& key) {
  const auto it = ckpt.meta.find(key);
  if (it == ckpt.meta.end()) throw FormatError("checkpoint has no '" + key + "' entry; not a training checkpoint");
  return it->second;
}

}  // namespace

Checkpoint training_checkpoint(KStripModel& model, const Adam& opt, const ResumeState& state,
                               const TrainConfig& config) {
  Checkpoint ckpt = to_checkpoint(model);
  ckpt.meta = config.meta;
  ckpt.meta["next_epoch"] = std::to_string(state.next_epoch);
  ckpt.meta["best_val"] = hex_double(state.best_val);
  ckpt.meta["best_epoch"] = std::to_string(state.best_epoch);
  ckpt.meta["has_best"] = state.has_best ? "1" : "0";
  ckpt.meta["adam_steps"] = std::to_string(opt.steps());
  ckpt.meta["seed"] = std::to_string(config.seed);
  ckpt.meta["epochs"] = std::to_string(config.epochs);
  ckpt.meta["batch_size"] = std::to_string(config.batch_size);
  ckpt.meta["lr"] = hex_double(config.lr);
  ckpt.meta["lr_period"] = std::to_string(config.lr_period);
  ckpt.meta["conv_precision"] = to_string(config.conv_precision);
  const auto params = model.parameters();
  for (std::size_t k = 0; k < params.size(); ++k) {
    ckpt.tensors.emplace_back("adam.m." + params[k].first, opt.first_moments()[k]);
    ckpt.tensors.emplace_back("adam.v." + params[k].first, opt.second_moments()[k]);
  }
  return ckpt;
}

ResumeState resume_state(const Checkpoint& ckpt, KStripModel& model) {
  ResumeState s;
  s.next_epoch = parse_u64(meta_at(ckpt, "next_epoch"));
  s.best_val = parse_double(meta_at(ckpt, "best_val"));
  s.best_epoch = parse_u64(meta_at(ckpt, "best_epoch"));
  s.has_best = meta_at(ckpt, "has_best") == "1";
  s.steps = parse_u64(meta_at(ckpt, "adam_steps"));
  for (auto& [name, v] : model.parameters()) {
    const ComplexTensor* m = ckpt.find("adam.m." + name);
    const ComplexTensor* vv = ckpt.find("adam.v." + name);
    if (m == nullptr || vv == nullptr) throw FormatError("checkpoint lacks optimizer state for '" + name + "'");
    s.m.push_back(*m);
    s.v.push_back(*vv);
  }
  return s;
}

std::string to_json(const EpochRecord& r) {
  nlohmann::ordered_json j;
  j["epoch"] = r.epoch;
  j["split"] = r.split;
  j["loss"] = r.loss;
  j["lr"] = r.lr;
  j["seconds"] = r.seconds;
  j["steps"] = r.steps;
  return j.dump();
}

TrainResult train(KStripModel& model, const TrainData& data, const TrainConfig& config,
                  const std::optional<ResumeState>& resume) {
  config.validate();
  if (data.samples == nullptr || data.train.empty()) throw ConfigError("train: empty training split");
  const auto& samples = *data.samples;
  const ConvPrecisionScope precision(config.conv_precision);
  const auto& mc = model.config();
  for (const auto& s : samples) {
    if (s.k_in.shape() != Shape{1, mc.height, mc.width}) {
      throw ConfigError("train: dataset slices are " + std::to_string(s.k_in.dim(1)) + "x" +
                        std::to_string(s.k_in.dim(2)) + " but the model expects " + std::to_string(mc.height) +
                        "x" + std::to_string(mc.width));
    }
  }
  const AugmentSpec aug = config.augment_spec.value_or(AugmentSpec::scaled_for(std::min(mc.height, mc.width)));

  const auto params = model.parameter_vars();
  Adam opt(params, config.adam);
  ResumeState state;
  if (resume) {
    state = *resume;
    opt.restore(state.steps, state.m, state.v);
  }
  zero_grad(params);

  std::ofstream log;
  namespace fs = std::filesystem;
  if (!config.out_dir.empty()) {
    fs::create_directories(config.out_dir);
    const auto mode = resume ? std::ios::app : std::ios::trunc;
    log.open(fs::path(config.out_dir) / "train.log", std::ios::out | mode);
    if (!log) throw IoError("cannot open train.log in '" + config.out_dir + "'");
  }

  TrainResult result;
  auto emit = [&](const EpochRecord& r) {
    result.log.push_back(r);
    if (log.is_open()) {
      log << to_json(r) << '\n';
      log.flush();
    }
    if (!config.quiet) std::cerr << to_json(r) << '\n';
  };

  using clock = std::chrono::steady_clock;
  std::vector<std::size_t> order = data.train;
  for (std::size_t epoch = state.next_epoch; epoch < config.epochs; ++epoch) {
    const auto t0 = clock::now();
    const double lr = lr_schedule(epoch, config.lr, config.lr_period);

    order = data.train;
    Rng shuffle(derive_seed(config.seed, {epoch, 0x73687566ULL}));
    for (std::size_t i = order.size() - 1; i > 0; --i) {
      std::swap(order[i], order[static_cast<std::size_t>(uniform_int(shuffle, 0, static_cast<std::int64_t>(i)))]);
    }

    double loss_sum = 0.0;
    std::size_t steps = 0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::vector<std::size_t> batch(
          order.begin() + static_cast<std::ptrdiff_t>(start),
          order.begin() + static_cast<std::ptrdiff_t>(std::min(order.size(), start + config.batch_size)));
      ComplexTensor x, y;
      make_batch(samples, batch, x, y);
      if (config.augment) {
        const std::size_t plane = mc.height * mc.width;
        for (std::size_t b = 0; b < batch.size(); ++b) {
          Rng arng(derive_seed(config.seed, {epoch, 0x61756700ULL, batch[b]}));
          const AugmentDraw d = draw_augment(aug, arng);
          auto apply = [&](ComplexTensor& t) {
            ComplexTensor one({1, mc.height, mc.width});
            std::copy_n(t.re().begin() + b * plane, plane, one.re().begin());
            std::copy_n(t.im().begin() + b * plane, plane, one.im().begin());
            one = scale_frame(one, d.width, d.factor);
            std::copy_n(one.re().begin(), plane, t.re().begin() + b * plane);
            std::copy_n(one.im().begin(), plane, t.im().begin() + b * plane);
          };
          apply(x);
          if (config.joint_augment) apply(y);
        }
      }
      Rng drop(derive_seed(config.seed, {epoch, 0x64726f70ULL, steps}));
      auto fail = [&](const std::string& why) {
        std::string idx;
        for (auto i : batch) idx += (idx.empty() ? "" : ",") + std::to_string(i);
        if (!config.out_dir.empty()) {
          std::ofstream dump(fs::path(config.out_dir) / "nonfinite_batch.txt");
          dump << "epoch " << epoch << " step " << steps << " indices " << idx << '\n' << why << '\n';
        }
        throw NumericError(why + " at epoch " + std::to_string(epoch) + ", step " + std::to_string(steps) +
                           "; batch sample indices [" + idx + "]");
      };
      Var loss;
      try {
        const Var pred = model.forward(constant(std::move(x)), true, &drop);
        loss = complex_l1(pred, constant(std::move(y)), config.split_l1);
      } catch (const NumericError& e) {
        fail(e.what());
      }
      const double value = loss->value.re()[0];
      if (!std::isfinite(value)) fail("non-finite training loss");
      GradientMap grads = backward(loss);
      if (config.clip_norm > 0.0) clip_grad_norm(grads, config.clip_norm);
      opt.step(grads, lr);
      zero_grad(params);
      loss_sum += value * static_cast<double>(batch.size());
      ++steps;
    }
    const double train_loss = loss_sum / static_cast<double>(order.size());
    emit({epoch, "train", train_loss, lr, std::chrono::duration<double>(clock::now() - t0).count(), steps});

    const bool last_epoch = epoch + 1 == config.epochs;
    double score = train_loss;
    bool scored = data.val.empty();
    if (!data.val.empty() && ((epoch + 1) % config.val_every == 0 || last_epoch)) {
      const auto v0 = clock::now();
      score = evaluate_loss(model, samples, data.val, config.batch_size, config.split_l1);
      scored = true;
      emit({epoch, "val", score, lr, std::chrono::duration<double>(clock::now() - v0).count(), 0});
    }
    state.next_epoch = epoch + 1;
    const bool improved = scored && (!state.has_best || score < state.best_val);
    if (improved) {
      state.has_best = true;
      state.best_val = score;
      state.best_epoch = epoch;
    }
    if (!config.out_dir.empty()) {
      const Checkpoint ckpt = training_checkpoint(model, opt, state, config);
      if (improved) save_checkpoint(ckpt, (fs::path(config.out_dir) / "best.kstrip").string());
      save_checkpoint(ckpt, (fs::path(config.out_dir) / "last.kstrip").string());
    }
  }
  result.best_val = state.best_val;
  result.best_epoch = state.best_epoch;
  return result;
}

}  // namespace kstrip
