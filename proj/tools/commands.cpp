#include "commands.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <memory>
#include <mutex>
#include <numeric>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "kstrip/binio.hpp"
#include "kstrip/data.hpp"
#include "kstrip/error.hpp"
#include "kstrip/evaluation.hpp"
#include "kstrip/image_io.hpp"
#include "kstrip/model.hpp"
#include "kstrip/runtime.hpp"
#include "kstrip/training.hpp"
#include "manifest.hpp"

namespace kstrip::cli {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

void add_config_flag(CLI::App* sub) {
  // The file itself is expanded before parsing; see expand_config.
  static std::string path;
  sub->add_option("--config", path, "Key-value file of flag defaults (key = value per line); flags win");
}

std::string parent_dir(const std::string& file) {
  const fs::path p = fs::path(file).parent_path();
  return p.empty() ? "." : p.string();
}

void make_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory '" + dir + "': " + ec.message());
}

template <typename F>
void parallel_for(std::size_t n, F&& f) {
  const std::size_t workers = std::min(n, thread_limit());
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) f(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex mu;
  {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < n; i = next++) {
          try {
            f(i);
          } catch (...) {
            std::lock_guard lock(mu);
            if (!error) error = std::current_exception();
          }
        }
      });
    }
  }
  if (error) std::rethrow_exception(error);
}

std::vector<std::size_t> split_indices(const std::vector<SliceSample>& samples, const std::string& which,
                                       std::uint64_t seed) {
  if (which == "all") {
    std::vector<std::size_t> all(samples.size());
    std::iota(all.begin(), all.end(), std::size_t{0});
    return all;
  }
  const PatientSplit s = split_patients(patient_ids(samples), seed);
  const auto& ids = which == "train" ? s.train : which == "val" ? s.val : s.test;
  return indices_for(samples, ids);
}

std::uint64_t meta_u64(const Checkpoint& ckpt, const std::string& key, std::uint64_t fallback) {
  const auto it = ckpt.meta.find(key);
  if (it == ckpt.meta.end()) return fallback;
  try {
    return std::stoull(it->second);
  } catch (const std::exception&) {
    throw FormatError("checkpoint entry '" + key + "' is not an integer: '" + it->second + "'");
  }
}

void require_size(const KStripConfig& c, std::size_t h, std::size_t w) {
  if (c.height != h || c.width != w) {
    throw ConfigError("model expects " + std::to_string(c.height) + "x" + std::to_string(c.width) +
                      " slices but the dataset holds " + std::to_string(h) + "x" + std::to_string(w));
  }
}

json model_json(const KStripConfig& c) {
  return {{"height", c.height},         {"width", c.width},
          {"base_channels", c.base_channels}, {"levels", c.levels},
          {"blocks_per_level", c.blocks_per_level}, {"decoder_blocks", c.decoder_blocks},
          {"bottleneck_channels", c.bottleneck_channels}, {"dropout", c.dropout_p},
          {"input_scale", c.effective_input_scale()}};
}

json metrics_json(const SegMetrics& m) {
  auto num = [](double v) { return std::isfinite(v) ? json(v) : json("inf"); };
  return {{"n", m.n},
          {"dice", num(m.dice)},
          {"dhd", num(m.dhd)},
          {"accuracy", num(m.accuracy)},
          {"sensitivity", num(m.sensitivity)},
          {"specificity", num(m.specificity)},
          {"phase_error", num(m.phase_error)},
          {"failures", m.failures},
          {"mid_head_failures", m.mid_head_failures}};
}

SliceSample read_one(const std::string& path, std::size_t index) {
  DatasetReader reader(path);
  if (index >= reader.size()) {
    throw ConfigError("--index " + std::to_string(index) + " is out of range; '" + path + "' holds " +
                      std::to_string(reader.size()) + " samples");
  }
  return reader.read(index);
}

// ---- gen-data ---------------------------------------------------------

struct GenDataOptions {
  std::uint32_t patients = 20;
  std::uint32_t slices = 40;
  std::size_t size = 64;
  std::uint64_t seed = 0;
  double pathology = PhantomSpec{}.pathology_probability;
  std::string out;
};

void run_gen_data(const GenDataOptions& o) {
  RunManifest man;
  man.command = "gen-data";
  man.seed = o.seed;
  if (o.patients < 10) throw ConfigError("--patients must be at least 10 for the 70/20/10 patient split");
  if (o.slices < 1) throw ConfigError("--slices must be at least 1");

  PhantomSpec spec;
  spec.height = spec.width = o.size;
  spec.seed = o.seed;
  spec.pathology_probability = o.pathology;
  spec.validate();

  std::vector<std::vector<SliceSample>> per_patient(o.patients);
  parallel_for(o.patients, [&](std::size_t p) {
    per_patient[p] = gen_patient(spec, static_cast<std::uint32_t>(p), o.slices);
  });
  std::vector<SliceSample> samples;
  samples.reserve(std::size_t{o.patients} * o.slices);
  for (auto& v : per_patient) {
    for (auto& s : v) samples.push_back(std::move(s));
  }
  make_dir(parent_dir(o.out));
  write_dataset(samples, o.out);

  const PatientSplit split = split_patients(patient_ids(samples), o.seed);
  std::printf("patients %u slices %u samples %zu\n", o.patients, o.slices, samples.size());
  std::printf("split train %zu val %zu test %zu (patients)\n", split.train.size(), split.val.size(),
              split.test.size());

  man.config = {{"patients", o.patients}, {"slices", o.slices},        {"size", o.size},
                {"seed", o.seed},         {"pathology", o.pathology}, {"out", o.out}};
  man.artifacts = {fs::path(o.out).filename().string()};
  man.results = {{"samples", samples.size()},
                 {"train_patients", split.train.size()},
                 {"val_patients", split.val.size()},
                 {"test_patients", split.test.size()}};
  man.write(parent_dir(o.out));
}

// ---- train ------------------------------------------------------------

struct TrainOptions {
  std::string data;
  std::string out;
  std::string resume;
  bool desk = false;
  std::size_t epochs = 150;
  std::size_t batch_size = 64;
  double lr = 1e-3;
  std::size_t lr_period = 50;
  std::uint64_t seed = 0;
  std::uint64_t split_seed = 0;
  std::size_t size = 256;
  std::size_t base = 32;
  std::size_t levels = 3;
  std::size_t blocks = 4;
  std::size_t decoder_blocks = 4;
  double dropout = 0.05;
  bool no_augment = false;
  bool no_joint_augment = false;
  bool split_l1 = false;
  double clip_norm = 0.0;
  std::string conv_precision = "f64";
  bool quiet = false;
};

void run_train(TrainOptions o, const CLI::App& sub) {
  RunManifest man;
  man.command = "train";
  man.seed = o.seed;
  auto given = [&](const char* flag) { return sub.count(flag) > 0; };

  if (o.desk) {
    const KStripConfig dm = KStripConfig::desk();
    const TrainConfig dt = TrainConfig::desk();
    if (!given("--epochs")) o.epochs = dt.epochs;
    if (!given("--batch-size")) o.batch_size = dt.batch_size;
    if (!given("--lr-period")) o.lr_period = dt.lr_period;
    if (!given("--size")) o.size = dm.height;
    if (!given("--base")) o.base = dm.base_channels;
    if (!given("--levels")) o.levels = dm.levels;
    if (!given("--blocks")) o.blocks = dm.blocks_per_level;
    if (!given("--decoder-blocks")) o.decoder_blocks = dm.decoder_blocks;
    if (!given("--conv-precision")) o.conv_precision = to_string(dt.conv_precision);
  }

  TrainConfig tc;
  tc.epochs = o.epochs;
  tc.batch_size = o.batch_size;
  tc.lr = o.lr;
  tc.lr_period = o.lr_period;
  tc.seed = o.seed;
  tc.augment = !o.no_augment;
  tc.joint_augment = !o.no_joint_augment;
  tc.split_l1 = o.split_l1;
  tc.clip_norm = o.clip_norm;
  tc.conv_precision = parse_conv_precision(o.conv_precision);
  tc.out_dir = o.out;
  tc.quiet = o.quiet;
  tc.meta["split_seed"] = std::to_string(o.split_seed);
  tc.validate();

  std::optional<KStripModel> model;
  std::optional<ResumeState> resume;
  if (!o.resume.empty()) {
    const Checkpoint ckpt = load_checkpoint(o.resume);
    model.emplace(from_checkpoint(ckpt));
    resume = resume_state(ckpt, *model);
  } else {
    KStripConfig mc;
    mc.height = mc.width = o.size;
    mc.base_channels = o.base;
    mc.levels = o.levels;
    mc.blocks_per_level = o.blocks;
    mc.decoder_blocks = o.decoder_blocks;
    mc.bottleneck_channels = o.base << o.levels;
    mc.dropout_p = o.dropout;
    mc.validate();
    model.emplace(KStripModel::build(mc, o.seed));
  }

  const std::vector<SliceSample> samples = read_dataset(o.data);
  if (samples.empty()) throw ConfigError("dataset '" + o.data + "' is empty");
  const Shape& s = samples.front().k_in.shape();
  require_size(model->config(), s[1], s[2]);
  const PatientSplit split = split_patients(patient_ids(samples), o.split_seed);
  const TrainData data{&samples, indices_for(samples, split.train), indices_for(samples, split.val)};

  make_dir(o.out);
  const auto t0 = std::chrono::steady_clock::now();
  const TrainResult r = train(*model, data, tc, resume);
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  std::printf("best val loss %.6f at epoch %zu, %.1f s\n", r.best_val, r.best_epoch, seconds);

  man.config = {{"data", o.data},
                {"resume", o.resume},
                {"desk", o.desk},
                {"model", model_json(model->config())},
                {"epochs", tc.epochs},
                {"batch_size", tc.batch_size},
                {"lr", tc.lr},
                {"lr_period", tc.lr_period},
                {"adam", {{"beta1", tc.adam.beta1}, {"beta2", tc.adam.beta2}, {"eps", tc.adam.eps}}},
                {"split_seed", o.split_seed},
                {"augment", tc.augment},
                {"joint_augment", tc.joint_augment},
                {"split_l1", tc.split_l1},
                {"clip_norm", tc.clip_norm},
                {"conv_precision", to_string(tc.conv_precision)},
                {"threads", thread_limit()}};
  man.artifacts = {"best.kstrip", "last.kstrip", "train.log"};
  man.results = {{"best_val", r.best_val},
                 {"best_epoch", r.best_epoch},
                 {"epochs_run", r.log.empty() ? 0 : r.log.back().epoch + 1 - (resume ? resume->next_epoch : 0)},
                 {"parameters", model->parameter_count()},
                 {"train_samples", data.train.size()},
                 {"val_samples", data.val.size()},
                 {"seconds", seconds}};
  man.write(o.out);
}

// ---- eval -------------------------------------------------------------

struct EvalCliOptions {
  std::string checkpoint;
  std::string data;
  std::string out;
  std::string split = "test";
  std::optional<std::uint64_t> split_seed;
  double threshold = 1.7;
  std::uint64_t min_brain_pixels = 0;
  std::size_t batch_size = 16;
  bool slices_csv = false;
  std::size_t panels = 0;
  bool oracle = false;
  std::string truth = "generator";
  std::string dataset_name = "phantom";
  std::string conv_precision = "f64";
};

void run_eval(const EvalCliOptions& o) {
  RunManifest man;
  man.command = "eval";
  if (o.oracle == !o.checkpoint.empty()) throw ConfigError("give exactly one of --checkpoint and --oracle");

  const std::vector<SliceSample> samples = read_dataset(o.data);
  if (samples.empty()) throw ConfigError("dataset '" + o.data + "' is empty");
  const Shape& shape = samples.front().k_in.shape();

  std::optional<KStripModel> model;
  std::uint64_t split_seed = o.split_seed.value_or(0);
  if (!o.oracle) {
    const Checkpoint ckpt = load_checkpoint(o.checkpoint);
    if (!o.split_seed) split_seed = meta_u64(ckpt, "split_seed", 0);
    model.emplace(from_checkpoint(ckpt));
    require_size(model->config(), shape[1], shape[2]);
  }
  man.seed = split_seed;
  const ConvPrecisionScope precision(parse_conv_precision(o.conv_precision));
  const Predictor predict = model ? model_predictor(*model) : oracle_predictor();

  EvalOptions eo;
  eo.threshold_factor = o.threshold;
  eo.min_brain_pixels = o.min_brain_pixels;
  eo.batch_size = o.batch_size;
  eo.truth_from_target = o.truth == "target";
  const std::vector<std::size_t> indices = split_indices(samples, o.split, split_seed);
  const EvalReport report = evaluate(predict, samples, indices, eo);

  make_dir(o.out);
  write_report_csv((fs::path(o.out) / "metrics.csv").string(), o.dataset_name, o.split, report.summary);
  man.artifacts.push_back("metrics.csv");
  if (o.slices_csv) {
    write_slices_csv((fs::path(o.out) / "slices.csv").string(), report.slices);
    man.artifacts.push_back("slices.csv");
  }
  std::size_t written = 0;
  for (std::size_t i = 0; i < indices.size() && written < o.panels; ++i) {
    if (!report.slices[i].included) continue;
    const SliceSample& sample = samples[indices[i]];
    const ComplexTensor k = predict({&sample});
    const std::string name = "panel_p" + std::to_string(sample.patient_id) + "_s" +
                             std::to_string(sample.slice_idx) + ".png";
    write_panel_png((fs::path(o.out) / name).string(), sample, k.reshaped({1, shape[1], shape[2]}), o.threshold);
    man.artifacts.push_back(name);
    ++written;
  }

  std::printf("%s\n%s\n", report_header().c_str(), report_row(o.dataset_name, o.split, report.summary).c_str());
  std::printf("phase_error %.6f rad, mid-head failures %zu\n", report.summary.phase_error,
              report.summary.mid_head_failures);

  man.config = {{"checkpoint", o.checkpoint},
                {"oracle", o.oracle},
                {"data", o.data},
                {"split", o.split},
                {"split_seed", split_seed},
                {"threshold", eo.threshold_factor},
                {"min_brain_pixels", eo.min_brain_pixels > 0 ? eo.min_brain_pixels
                                                             : exclusion_threshold(shape[1], shape[2])},
                {"truth", o.truth},
                {"batch_size", eo.batch_size},
                {"panels", o.panels},
                {"dataset_name", o.dataset_name},
                {"conv_precision", o.conv_precision}};
  man.results = metrics_json(report.summary);
  man.results["slices_evaluated"] = report.slices.size();
  man.write(o.out);
}

// ---- infer ------------------------------------------------------------

struct InferOptions {
  std::string checkpoint;
  std::string data;
  std::size_t index = 0;
  std::string out;
  double threshold = 1.7;
  std::string conv_precision = "f64";
};

void run_infer(const InferOptions& o) {
  RunManifest man;
  man.command = "infer";
  const SliceSample sample = read_one(o.data, o.index);
  KStripModel model = load(o.checkpoint);
  const std::size_t h = sample.k_in.dim(1);
  const std::size_t w = sample.k_in.dim(2);
  require_size(model.config(), h, w);
  const ConvPrecisionScope precision(parse_conv_precision(o.conv_precision));

  const ComplexTensor x = sample.k_in.reshaped({1, 1, h, w});
  const auto t0 = std::chrono::steady_clock::now();
  const ComplexTensor pred = model.infer(x).reshaped({h, w});
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  const ComplexTensor image = to_image(pred);
  const BinaryMask mask = binarize(image, o.threshold);

  make_dir(o.out);
  ByteWriter raw;
  raw.f64s(pred.re());
  raw.f64s(pred.im());
  write_file_atomic((fs::path(o.out) / "prediction.raw").string(), raw.bytes());
  write_png((fs::path(o.out) / "magnitude.png").string(), magnitude_u8(image));
  write_png((fs::path(o.out) / "phase.png").string(), phase_u8(image));
  write_png((fs::path(o.out) / "mask.png").string(), mask_u8(mask));
  write_png((fs::path(o.out) / "kspace.png").string(), log_kspace_u8(pred));
  std::printf("slice %zu (patient %u, slice %u): %zu mask pixels, %.4f s\n", o.index, sample.patient_id,
              sample.slice_idx, mask.count(), seconds);

  man.config = {{"checkpoint", o.checkpoint},
                {"data", o.data},
                {"index", o.index},
                {"threshold", o.threshold},
                {"conv_precision", o.conv_precision}};
  man.artifacts = {"prediction.raw", "magnitude.png", "phase.png", "mask.png", "kspace.png"};
  man.results = {{"patient", sample.patient_id},
                 {"slice", sample.slice_idx},
                 {"shape", {h, w}},
                 {"prediction_layout", "centered k-space, real plane then imaginary plane, float64 little-endian"},
                 {"mask_pixels", mask.count()},
                 {"dice", dice(mask, sample.brain_mask)},
                 {"seconds_per_slice", seconds}};
  man.write(o.out);
}

// ---- inspect ----------------------------------------------------------

struct InspectOptions {
  std::string data;
  std::size_t index = 0;
  std::string out;
};

void run_inspect(const InspectOptions& o) {
  RunManifest man;
  man.command = "inspect";
  const SliceSample sample = read_one(o.data, o.index);
  const ComplexTensor image_in = to_image(sample.k_in);
  const ComplexTensor image_target = to_image(sample.k_target);

  make_dir(o.out);
  const fs::path dir(o.out);
  write_png((dir / "kspace_in.png").string(), log_kspace_u8(sample.k_in));
  write_png((dir / "kspace_target.png").string(), log_kspace_u8(sample.k_target));
  write_png((dir / "image_in.png").string(), magnitude_u8(image_in));
  write_png((dir / "image_target.png").string(), magnitude_u8(image_target));
  write_png((dir / "phase_in.png").string(), phase_u8(image_in));
  write_png((dir / "mask.png").string(), mask_u8(sample.brain_mask));
  std::printf("slice %zu: patient %u, slice %u, %llu brain pixels\n", o.index, sample.patient_id,
              sample.slice_idx, static_cast<unsigned long long>(sample.brain_pixels));

  man.config = {{"data", o.data}, {"index", o.index}};
  man.artifacts = {"kspace_in.png", "kspace_target.png", "image_in.png", "image_target.png", "phase_in.png",
                   "mask.png"};
  man.results = {{"patient", sample.patient_id},
                 {"slice", sample.slice_idx},
                 {"brain_pixels", sample.brain_pixels}};
  man.write(o.out);
}

}  // namespace

void add_gen_data(CLI::App& app, Action& selected) {
  auto o = std::make_shared<GenDataOptions>();
  CLI::App* sub = app.add_subcommand("gen-data", "Generate a synthetic phantom dataset");
  sub->add_option("--patients", o->patients, "Number of patients (at least 10)");
  sub->add_option("--slices", o->slices, "Slices per patient");
  sub->add_option("--size", o->size, "Slice height and width (power of two)");
  sub->add_option("--seed", o->seed, "Generator and split seed");
  sub->add_option("--pathology", o->pathology, "Probability of a bright lesion per patient");
  sub->add_option("-o,--out", o->out, "Output dataset file")->required();
  add_config_flag(sub);
  sub->callback([o, &selected] { selected = [o] { run_gen_data(*o); }; });
}

void add_train(CLI::App& app, Action& selected) {
  auto o = std::make_shared<TrainOptions>();
  CLI::App* sub = app.add_subcommand("train", "Train a model on a dataset");
  sub->add_option("--data", o->data, "Dataset file")->required();
  sub->add_option("--out", o->out, "Run directory for checkpoints and train.log")->required();
  sub->add_flag("--desk", o->desk,
                "Desk preset: 64x64, base 8, levels 2, blocks 2, batch 16, 50 epochs, lr halved every 25, "
                "f32 convolutions; explicit flags still win");
  sub->add_option("--resume", o->resume, "Continue from a last.kstrip checkpoint (model shape comes from it)");
  sub->add_option("--epochs", o->epochs, "Total number of epochs");
  sub->add_option("--batch-size", o->batch_size, "Samples per optimizer step");
  sub->add_option("--lr", o->lr, "Initial learning rate");
  sub->add_option("--lr-period", o->lr_period, "Epochs between learning rate halvings");
  sub->add_option("--seed", o->seed, "Initialization, shuffling, dropout and augmentation seed");
  sub->add_option("--split-seed", o->split_seed, "Seed of the patient-wise train/val/test split");
  sub->add_option("--size", o->size, "Slice size the model is built for");
  sub->add_option("--base", o->base, "Channels at the first level");
  sub->add_option("--levels", o->levels, "Number of spectral pooling steps");
  sub->add_option("--blocks", o->blocks, "Residual blocks per encoder level and in the bottleneck");
  sub->add_option("--decoder-blocks", o->decoder_blocks, "Residual blocks per decoder level");
  sub->add_option("--dropout", o->dropout, "Dropout probability in the encoder");
  sub->add_flag("--no-augment", o->no_augment, "Disable periphery augmentation");
  sub->add_flag("--no-joint-augment", o->no_joint_augment, "Augment the input only, not the target");
  sub->add_flag("--split-l1", o->split_l1, "Use |d_re| + |d_im| instead of the complex modulus");
  sub->add_option("--clip-norm", o->clip_norm, "Global gradient norm limit (0 disables)");
  sub->add_option("--conv-precision", o->conv_precision, "Convolution arithmetic")
      ->check(CLI::IsMember({"f64", "f32"}));
  sub->add_flag("--quiet", o->quiet, "Do not echo log records");
  add_config_flag(sub);
  sub->callback([o, sub, &selected] { selected = [o, sub] { run_train(*o, *sub); }; });
}

void add_eval(CLI::App& app, Action& selected) {
  auto o = std::make_shared<EvalCliOptions>();
  CLI::App* sub = app.add_subcommand("eval", "Segmentation metrics of a checkpoint on a dataset split");
  sub->add_option("--checkpoint", o->checkpoint, "Model checkpoint");
  sub->add_flag("--oracle", o->oracle, "Use the target k-space as the prediction instead of a model");
  sub->add_option("--data", o->data, "Dataset file")->required();
  sub->add_option("--out", o->out, "Output directory")->required();
  sub->add_option("--split", o->split, "Which patients to evaluate")
      ->check(CLI::IsMember({"train", "val", "test", "all"}));
  sub->add_option("--split-seed", o->split_seed, "Split seed (default: the one stored in the checkpoint, else 0)");
  sub->add_option("--threshold", o->threshold, "Binarization factor on the mean magnitude");
  sub->add_option("--min-brain-pixels", o->min_brain_pixels,
                  "Skip slices with fewer brain pixels (0: 5000 scaled to the slice area)");
  sub->add_option("--batch-size", o->batch_size, "Slices per forward pass");
  sub->add_flag("--slices-csv", o->slices_csv, "Also write per-slice metrics to slices.csv");
  sub->add_option("--panels", o->panels, "Number of figure panels to export");
  sub->add_option("--truth", o->truth, "Reference mask: generator mask or binarized target image")
      ->check(CLI::IsMember({"generator", "target"}));
  sub->add_option("--dataset-name", o->dataset_name, "Name in the dataset column of the report");
  sub->add_option("--conv-precision", o->conv_precision, "Convolution arithmetic")
      ->check(CLI::IsMember({"f64", "f32"}));
  add_config_flag(sub);
  sub->callback([o, &selected] { selected = [o] { run_eval(*o); }; });
}

void add_infer(CLI::App& app, Action& selected) {
  auto o = std::make_shared<InferOptions>();
  CLI::App* sub = app.add_subcommand("infer", "Predict one slice and export it");
  sub->add_option("--checkpoint", o->checkpoint, "Model checkpoint")->required();
  sub->add_option("--data", o->data, "Dataset file")->required();
  sub->add_option("--index", o->index, "Sample index in the dataset")->required();
  sub->add_option("--out", o->out, "Output directory")->required();
  sub->add_option("--threshold", o->threshold, "Binarization factor on the mean magnitude");
  sub->add_option("--conv-precision", o->conv_precision, "Convolution arithmetic")
      ->check(CLI::IsMember({"f64", "f32"}));
  add_config_flag(sub);
  sub->callback([o, &selected] { selected = [o] { run_infer(*o); }; });
}

void add_inspect(CLI::App& app, Action& selected) {
  auto o = std::make_shared<InspectOptions>();
  CLI::App* sub = app.add_subcommand("inspect", "Export k-space and image views of one sample");
  sub->add_option("--data", o->data, "Dataset file")->required();
  sub->add_option("--index", o->index, "Sample index in the dataset")->required();
  sub->add_option("--out", o->out, "Output directory")->required();
  add_config_flag(sub);
  sub->callback([o, &selected] { selected = [o] { run_inspect(*o); }; });
}

}  // namespace kstrip::cli
