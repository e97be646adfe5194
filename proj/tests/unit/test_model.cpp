#include <cmath>
#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "kstrip/autograd.hpp"
#include "kstrip/error.hpp"
#include "kstrip/model.hpp"
#include "kstrip/training.hpp"
#include "oracles.hpp"

using namespace kstrip;
using kstrip::testing::random_tensor;

namespace {

std::string temp_path(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / "kstrip_test_model";
  std::filesystem::create_directories(dir);
  return (dir / name).string();
}

KStripConfig tiny() {
  KStripConfig c;
  c.height = 16;
  c.width = 16;
  c.base_channels = 2;
  c.levels = 1;
  c.blocks_per_level = 1;
  c.decoder_blocks = 1;
  c.bottleneck_channels = 4;
  c.dropout_p = 0.0;
  return c;
}

// Complex scalars per layer, counted by hand.
std::size_t conv_count(std::size_t in, std::size_t out, std::size_t k) { return out * in * k * k + out; }
std::size_t bn_count(std::size_t c) { return 2 * c + c; }
std::size_t block_count(std::size_t in, std::size_t out) {
  return conv_count(in, out, 3) + conv_count(out, out, 3) + 2 * bn_count(out) + (in != out ? conv_count(in, out, 1) : 0);
}

std::vector<std::uint8_t> slurp(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

void dump(const std::string& path, const std::vector<std::uint8_t>& bytes) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

}  // namespace

TEST_CASE("full-size shape trace") {
  auto model = KStripModel::build(KStripConfig{}, 1);
  CHECK(model.residual_block_count() == 3 * 4 + 4 + 3 * 4);
  FeatureTrace trace;
  NoGradGuard guard;
  const auto out = model.forward(constant(random_tensor({1, 1, 256, 256}, 2)), false, nullptr, &trace);
  CHECK(out->value.shape() == Shape{1, 1, 256, 256});
  REQUIRE(trace.encoder.size() == 3);
  CHECK(trace.encoder[0] == Shape{1, 32, 256, 256});
  CHECK(trace.encoder[1] == Shape{1, 64, 128, 128});
  CHECK(trace.encoder[2] == Shape{1, 128, 64, 64});
  CHECK(trace.bottleneck == Shape{1, 256, 32, 32});
  REQUIRE(trace.decoder.size() == 3);
  CHECK(trace.decoder[0] == Shape{1, 128, 64, 64});
  CHECK(trace.decoder[2] == Shape{1, 32, 256, 256});
}

TEST_CASE("desk shapes and parameter count") {
  auto model = KStripModel::build(KStripConfig::desk(), 1);
  FeatureTrace trace;
  NoGradGuard guard;
  model.forward(constant(random_tensor({3, 1, 64, 64}, 2)), false, nullptr, &trace);
  CHECK(trace.bottleneck == Shape{3, 32, 16, 16});
  const std::size_t expected = block_count(1, 8) + block_count(8, 8) + block_count(8, 16) + block_count(16, 16) +
                               block_count(16, 32) + block_count(32, 32) + conv_count(32, 16, 3) +
                               block_count(32, 16) + block_count(16, 16) + conv_count(16, 8, 3) +
                               block_count(16, 8) + block_count(8, 8) + conv_count(8, 1, 1);
  CHECK(model.parameter_count() == expected);
  CHECK(model.parameter_count() == 64961);
}

TEST_CASE("config validation") {
  auto c = KStripConfig::desk();
  c.bottleneck_channels = 48;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = KStripConfig::desk();
  c.height = 60;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = KStripConfig::desk();
  c.levels = 0;
  CHECK_THROWS_AS(KStripModel::build(c, 0), ConfigError);
  CHECK(KStripConfig::desk().effective_input_scale() == doctest::Approx(1.0 / 64.0));
}

TEST_CASE("construction and inference are deterministic") {
  auto a = KStripModel::build(KStripConfig::desk(), 5);
  auto b = KStripModel::build(KStripConfig::desk(), 5);
  auto c = KStripModel::build(KStripConfig::desk(), 6);
  const auto pa = a.parameters();
  const auto pb = b.parameters();
  const auto pc = c.parameters();
  REQUIRE(pa.size() == pb.size());
  bool any_diff = false;
  for (std::size_t i = 0; i < pa.size(); ++i) {
    CHECK(pa[i].first == pb[i].first);
    CHECK(pa[i].second->value == pb[i].second->value);
    any_diff = any_diff || !(pa[i].second->value == pc[i].second->value);
  }
  CHECK(any_diff);
  const auto x = random_tensor({2, 1, 64, 64}, 8);
  CHECK(a.infer(x) == b.infer(x));
  CHECK_THROWS_AS(a.infer(random_tensor({2, 1, 32, 32}, 8)), DimensionError);
}

TEST_CASE("zero k-space maps to zero k-space") {
  auto model = KStripModel::build(KStripConfig::desk(), 3);
  const auto y = model.infer(ComplexTensor({2, 1, 64, 64}));
  for (std::size_t i = 0; i < y.size(); ++i) CHECK(y.at(i) == std::complex<double>(0.0, 0.0));
}

TEST_CASE("dropout changes training outputs only") {
  auto model = KStripModel::build(KStripConfig::desk(), 3);
  const auto x = random_tensor({2, 1, 64, 64}, 4);
  Rng r1(1);
  Rng r2(2);
  NoGradGuard guard;
  const auto t1 = model.forward(constant(x), true, &r1)->value;
  const auto t2 = model.forward(constant(x), true, &r2)->value;
  CHECK_FALSE(t1 == t2);
  CHECK(model.infer(x) == model.infer(x));
}

TEST_CASE("grad_check miniature end-to-end model") {
  auto model = KStripModel::build(tiny(), 9);
  const auto x = constant(random_tensor({2, 1, 16, 16}, 10));
  const auto target = constant(random_tensor({2, 1, 16, 16}, 11, -0.2, 0.2));
  auto params = model.parameter_vars();
  const double err = grad_check([&] { return complex_l1(model.forward(x, true), target); }, params, 1e-6);
  CHECK(err < 1e-4);
}

TEST_CASE("checkpoint roundtrip is bit-exact") {
  auto model = KStripModel::build(KStripConfig::desk(), 12);
  // Move the running statistics away from their initial values.
  {
    NoGradGuard guard;
    model.forward(constant(random_tensor({2, 1, 64, 64}, 1)), true);
  }
  const auto path = temp_path("model.kstrip");
  save(model, path);
  auto back = load(path);
  CHECK(back.config() == model.config());
  const auto p0 = model.parameters();
  const auto p1 = back.parameters();
  REQUIRE(p0.size() == p1.size());
  for (std::size_t i = 0; i < p0.size(); ++i) CHECK(p0[i].second->value == p1[i].second->value);
  const auto b0 = model.buffers();
  const auto b1 = back.buffers();
  REQUIRE(b0.size() == b1.size());
  for (std::size_t i = 0; i < b0.size(); ++i) CHECK(*b0[i].second == *b1[i].second);
  const auto x = random_tensor({1, 1, 64, 64}, 3);
  CHECK(model.infer(x) == back.infer(x));

  const auto path2 = temp_path("model2.kstrip");
  save(back, path2);
  CHECK(slurp(path) == slurp(path2));
}

TEST_CASE("checkpoint corruption is detected") {
  auto model = KStripModel::build(tiny(), 1);
  const auto path = temp_path("corrupt.kstrip");
  save(model, path);
  const auto good = slurp(path);
  const auto bad = temp_path("bad.kstrip");

  auto flipped = good;
  flipped[flipped.size() / 2] ^= 0x10;
  dump(bad, flipped);
  CHECK_THROWS_AS(load(bad), IntegrityError);

  auto header = good;
  header[12] ^= 0x01;
  dump(bad, header);
  CHECK_THROWS_AS(load(bad), IntegrityError);

  auto magic = good;
  magic[0] = 'X';
  dump(bad, magic);
  CHECK_THROWS_AS(load(bad), FormatError);

  dump(bad, std::vector<std::uint8_t>(good.begin(), good.begin() + static_cast<long>(good.size()) - 9));
  CHECK_THROWS_AS(load(bad), Error);

  CHECK_THROWS_AS(load(temp_path("missing.kstrip")), IoError);

  auto ckpt = to_checkpoint(model);
  ckpt.tensors.pop_back();
  CHECK_THROWS_AS(from_checkpoint(ckpt), FormatError);
  ckpt = to_checkpoint(model);
  ckpt.tensors[0].second = ComplexTensor({3});
  CHECK_THROWS_AS(from_checkpoint(ckpt), FormatError);
}
