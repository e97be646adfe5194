#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <set>

#include "doctest.h"
#include "kstrip/binio.hpp"
#include "kstrip/data.hpp"
#include "kstrip/error.hpp"
#include "oracles.hpp"

using namespace kstrip;
using kstrip::testing::random_tensor;

namespace {

std::string temp_path(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / "kstrip_test_data";
  std::filesystem::create_directories(dir);
  return (dir / name).string();
}

bool in_frame(std::size_t r, std::size_t c, std::size_t h, std::size_t w, std::size_t fw) {
  return r < fw || r >= h - fw || c < fw || c >= w - fw;
}

}  // namespace

TEST_CASE("same seed and patient give bit-identical samples") {
  PhantomSpec spec;
  spec.seed = 11;
  const auto a = gen_patient(spec, 3, 6);
  const auto b = gen_patient(spec, 3, 6);
  REQUIRE(a.size() == 6);
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i] == b[i]);
  const auto c = gen_patient(spec, 4, 6);
  CHECK_FALSE(a[3].k_in == c[3].k_in);
  spec.seed = 12;
  CHECK_FALSE(gen_patient(spec, 3, 6)[3].k_in == a[3].k_in);
}

TEST_CASE("phantom geometry") {
  PhantomSpec spec;
  spec.seed = 5;
  for (std::uint32_t p = 0; p < 6; ++p) {
    for (std::uint32_t s : {0u, 7u, 20u, 39u}) {
      const auto slice = render_slice(spec, p, s, 40);
      std::size_t brain_and_skull = 0;
      std::size_t brain_outside_head = 0;
      for (std::size_t i = 0; i < slice.brain.size(); ++i) {
        brain_and_skull += slice.brain[i] && slice.skull[i];
        brain_outside_head += slice.brain[i] && !slice.head[i];
        CHECK(slice.magnitude[i] >= 0.0);
        CHECK(slice.magnitude[i] <= 1.0);
        CHECK(slice.phase[i] >= 0.0);
        CHECK(slice.phase[i] <= 2.0 * std::numbers::pi + 1e-12);
      }
      CHECK(brain_and_skull == 0);
      CHECK(brain_outside_head == 0);
      CHECK(slice.skull.count() > 0);
    }
  }
}

TEST_CASE("brain area varies across the stack and end slices are small") {
  PhantomSpec spec;
  spec.seed = 1;
  const auto samples = gen_patient(spec, 0, 40);
  const std::size_t threshold = 5000 * 64 * 64 / 65536;
  CHECK(samples.front().brain_pixels < threshold);
  CHECK(samples.back().brain_pixels < threshold);
  CHECK(samples[20].brain_pixels > 2 * threshold);
  for (const auto& s : samples) CHECK(s.brain_pixels == s.brain_mask.count());
}

TEST_CASE("k_target is the masked head and carries less energy") {
  PhantomSpec spec;
  spec.seed = 2;
  const auto slice = render_slice(spec, 1, 18, 40);
  const auto s = make_sample(slice, 1, 18);
  const auto img = ifft2(ifftshift(s.k_target));
  double err = 0.0;
  for (std::size_t i = 0; i < img.size(); ++i) {
    const double expected = slice.brain[i] ? slice.magnitude[i] : 0.0;
    err = std::max(err, std::abs(std::abs(img.at(i)) - expected));
  }
  CHECK(err < 1e-10);
  double e_in = 0.0, e_target = 0.0;
  for (std::size_t i = 0; i < s.k_in.size(); ++i) {
    e_in += std::norm(s.k_in.at(i));
    e_target += std::norm(s.k_target.at(i));
  }
  CHECK(e_target <= e_in);
  CHECK(s.k_in.shape() == Shape{1, 64, 64});
}

TEST_CASE("phantom spec validation") {
  PhantomSpec spec;
  spec.height = 48;
  CHECK_THROWS_AS(spec.validate(), ConfigError);
  spec = {};
  spec.skull_intensity = {0.9, 0.6};
  CHECK_THROWS_AS(spec.validate(), ConfigError);
  spec = {};
  spec.brain_intensity = {0.5, 1.5};
  CHECK_THROWS_AS(spec.validate(), ConfigError);
  CHECK_THROWS_AS(render_slice(PhantomSpec{}, 0, 5, 5), ContractError);
  CHECK_THROWS_AS(gen_patient(PhantomSpec{}, 0, 0), ContractError);
}

TEST_CASE("periphery augmentation frame") {
  const auto k = random_tensor({1, 256, 256}, 3);
  SUBCASE("factor one is the identity") { CHECK(scale_frame(k, 17, 1.0) == k); }
  SUBCASE("interior untouched, frame scaled") {
    const auto out = scale_frame(k, 5, 1.3);
    double before = 0.0, after = 0.0;
    std::size_t frame = 0;
    for (std::size_t r = 0; r < 256; ++r) {
      for (std::size_t c = 0; c < 256; ++c) {
        const std::size_t i = r * 256 + c;
        if (in_frame(r, c, 256, 256, 5)) {
          ++frame;
          before += std::abs(k.at(i));
          after += std::abs(out.at(i));
        } else {
          CHECK(out.re()[i] == k.re()[i]);
          CHECK(out.im()[i] == k.im()[i]);
        }
      }
    }
    CHECK(frame == 256 * 256 - 246 * 246);
    CHECK(after / before == doctest::Approx(1.3).epsilon(1e-12));
  }
  SUBCASE("degenerate widths") {
    CHECK_THROWS_AS(scale_frame(k, 128, 1.1), ContractError);
    CHECK_NOTHROW(scale_frame(k, 127, 1.1));
    const auto small = random_tensor({1, 64, 64}, 4);
    Rng rng(1);
    CHECK_THROWS_AS(periphery_augment(small, rng), ContractError);
    CHECK_NOTHROW(periphery_augment(small, rng, AugmentSpec::scaled_for(64)));
  }
  SUBCASE("random draws stay on the frame") {
    Rng rng(9);
    for (int t = 0; t < 20; ++t) {
      Rng probe = rng;
      const auto d = draw_augment(AugmentSpec{}, probe);
      CHECK(d.factor >= 0.7);
      CHECK(d.factor < 1.3);
      CHECK(d.width >= 5);
      CHECK(d.width <= 40);
      const auto out = periphery_augment(k, rng);
      CHECK(out == scale_frame(k, d.width, d.factor));
      CHECK(out.all_finite());
    }
  }
}

TEST_CASE("scaled augmentation widths") {
  const auto s = AugmentSpec::scaled_for(64);
  CHECK(s.min_width == 1);
  CHECK(s.max_width == 10);
  const auto full = AugmentSpec::scaled_for(256);
  CHECK(full.min_width == 5);
  CHECK(full.max_width == 40);
}

TEST_CASE("patient split") {
  std::vector<std::uint32_t> ids(10);
  for (std::uint32_t i = 0; i < 10; ++i) ids[i] = i + 100;
  const auto s = split_patients(ids, 3);
  CHECK(s.train.size() == 7);
  CHECK(s.val.size() == 2);
  CHECK(s.test.size() == 1);
  std::set<std::uint32_t> all;
  for (const auto* part : {&s.train, &s.val, &s.test}) all.insert(part->begin(), part->end());
  CHECK(all == std::set<std::uint32_t>(ids.begin(), ids.end()));

  const auto again = split_patients(ids, 3);
  CHECK(again.train == s.train);
  CHECK(again.test == s.test);
  std::vector<std::uint32_t> reversed(ids.rbegin(), ids.rend());
  CHECK(split_patients(reversed, 3).train == s.train);

  std::vector<std::uint32_t> twenty(20);
  for (std::uint32_t i = 0; i < 20; ++i) twenty[i] = i;
  const auto t = split_patients(twenty, 0);
  CHECK(t.train.size() == 14);
  CHECK(t.val.size() == 4);
  CHECK(t.test.size() == 2);

  ids.pop_back();
  CHECK_THROWS_AS(split_patients(ids, 3), ConfigError);
}

TEST_CASE("dataset file roundtrip and random access") {
  PhantomSpec spec;
  spec.height = spec.width = 16;
  spec.seed = 4;
  std::vector<SliceSample> samples;
  for (std::uint32_t p = 0; p < 3; ++p) {
    auto pat = gen_patient(spec, p, 4);
    samples.insert(samples.end(), pat.begin(), pat.end());
  }
  const auto path = temp_path("roundtrip.ksds");
  write_dataset(samples, path);
  const auto back = read_dataset(path);
  REQUIRE(back.size() == samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) CHECK(back[i] == samples[i]);

  DatasetReader reader(path);
  CHECK(reader.size() == samples.size());
  CHECK(reader.height() == 16);
  for (std::size_t i : {0u, 5u, 11u}) CHECK(reader.read(i) == back[i]);
  CHECK_THROWS_AS(reader.read(12), ContractError);

  write_dataset(samples, temp_path("again.ksds"));
  CHECK(read_file(path) == read_file(temp_path("again.ksds")));

  CHECK(patient_ids(samples) == std::vector<std::uint32_t>{0, 1, 2});
  CHECK(indices_for(samples, {1}) == std::vector<std::size_t>{4, 5, 6, 7});
}

TEST_CASE("dataset corruption is detected") {
  PhantomSpec spec;
  spec.height = spec.width = 8;
  const auto samples = gen_patient(spec, 0, 2);
  const auto path = temp_path("corrupt.ksds");
  write_dataset(samples, path);
  auto bytes = read_file(path);

  SUBCASE("truncated") {
    bytes.resize(bytes.size() - 10);
    write_file_atomic(path, bytes);
    CHECK_THROWS_AS(read_dataset(path), IntegrityError);
  }
  SUBCASE("flipped payload byte") {
    bytes[bytes.size() - 40] ^= 0x10;
    write_file_atomic(path, bytes);
    CHECK_THROWS_AS(read_dataset(path), IntegrityError);
    CHECK_THROWS_AS(DatasetReader(path).read(1), IntegrityError);
  }
  SUBCASE("bad magic") {
    bytes[0] = 'X';
    write_file_atomic(path, bytes);
    CHECK_THROWS_AS(read_dataset(path), FormatError);
  }
  SUBCASE("missing file") { CHECK_THROWS_AS(read_dataset(temp_path("nope.ksds")), IoError); }
  SUBCASE("inconsistent target rejected at write time") {
    auto bad = samples;
    bad[1].k_target.re()[3] += 1.0;
    CHECK_THROWS_AS(write_dataset(bad, temp_path("bad.ksds")), ContractError);
  }
}
