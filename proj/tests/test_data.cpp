#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "rankmini/binary_io.hpp"
#include "rankmini/data.hpp"
#include "rankmini/errors.hpp"
#include "temp_dir.hpp"

using namespace rankmini;
using namespace rankmini::data;
using rankmini::testing::TempDir;

namespace {

double mse(const Tensor<float>& a, const Tensor<float>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.numel(); ++i) s += (double(a[i]) - b[i]) * (double(a[i]) - b[i]);
  return s / static_cast<double>(a.numel());
}

PairDataset small_dataset(std::size_t count, std::uint64_t seed = 3) {
  const PatchGeometry g{1, 8, 8};
  return make_pair_dataset(generate_sources(6, g, seed), {count, 6, false, seed});
}

}  // namespace

TEST(Sources, DeterministicAndInRange) {
  const PatchGeometry g{2, 16, 16};
  const auto a = generate_sources(12, g, 4);
  const auto b = generate_sources(12, g, 4);
  ASSERT_EQ(a.size(), 12u);
  std::set<Generator> kinds;
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].pixels, b[i].pixels);
    kinds.insert(a[i].generator);
    for (float v : a[i].pixels.values()) {
      EXPECT_GE(v, 0.0f);
      EXPECT_LE(v, 1.0f);
    }
  }
  EXPECT_EQ(kinds.size(), kGeneratorCount);
  EXPECT_NE(a[0].pixels, generate_sources(12, g, 5)[0].pixels);
}

TEST(Sources, ErrorsOnDegenerateRequests) {
  EXPECT_THROW(generate_sources(0, {1, 16, 16}, 1), ConfigError);
  EXPECT_THROW(generate_sources(1, {1, 0, 16}, 1), ConfigError);
}

TEST(Sources, MeanPixelIsMidGrey) {
  const auto s = generate_sources(1000, {1, 16, 16}, 9);
  double mean = 0.0;
  for (const auto& p : s)
    for (float v : p.pixels.values()) mean += v;
  mean /= 1000.0 * 256.0;
  EXPECT_GE(mean, 0.3);
  EXPECT_LE(mean, 0.7);
}

TEST(Distortion, LevelZeroIsIdentity) {
  const auto s = generate_sources(4, {1, 16, 16}, 2);
  for (auto kind : kAllDistortions)
    for (const auto& src : s) EXPECT_EQ(apply_distortion(src.pixels, {kind, 0, 6}, 7), src.pixels);
}

TEST(Distortion, QuantizationToTwoLevelsIsBinary) {
  const auto s = generate_sources(4, {1, 16, 16}, 2);
  for (const auto& src : s) {
    const auto q = apply_distortion(src.pixels, {DistortionKind::Quantization, 6, 6}, 1);
    for (float v : q.values()) EXPECT_TRUE(v == 0.0f || v == 1.0f) << v;
  }
}

TEST(Distortion, MagnitudeStrictlyIncreases) {
  for (auto kind : kAllDistortions)
    for (int l = 0; l < 6; ++l)
      EXPECT_LT(distortion_magnitude({kind, l, 6}, 16), distortion_magnitude({kind, l + 1, 6}, 16))
          << distortion_name(kind) << " level " << l;
}

TEST(Distortion, MeanSquaredErrorMonotoneInLevel) {
  const auto s = generate_sources(100, {1, 16, 16}, 8);
  for (auto kind : kAllDistortions) {
    double prev = 0.0;
    for (int l = 1; l <= 6; ++l) {
      double acc = 0.0;
      for (std::size_t i = 0; i < s.size(); ++i) acc += mse(s[i].pixels, apply_distortion(s[i].pixels, {kind, l, 6}, i));
      acc /= static_cast<double>(s.size());
      EXPECT_GT(acc, prev) << distortion_name(kind) << " level " << l;
      prev = acc;
    }
  }
}

TEST(Distortion, DeterministicPerSeedAndClipped) {
  const auto src = generate_sources(1, {1, 16, 16}, 2)[0].pixels;
  const DistortionSpec spec{DistortionKind::AdditiveNoise, 6, 6};
  EXPECT_EQ(apply_distortion(src, spec, 5), apply_distortion(src, spec, 5));
  EXPECT_NE(apply_distortion(src, spec, 5), apply_distortion(src, spec, 6));
  const auto noisy = apply_distortion(src, spec, 5);
  for (float v : noisy.values()) {
    EXPECT_GE(v, 0.0f);
    EXPECT_LE(v, 1.0f);
  }
  EXPECT_THROW(apply_distortion(src, {DistortionKind::GaussianBlur, 7, 6}, 1), std::invalid_argument);
}

TEST(Distortion, NamesRoundTrip) {
  for (auto kind : kAllDistortions) EXPECT_EQ(parse_distortion(distortion_name(kind)), kind);
  EXPECT_THROW(parse_distortion("jpeg"), std::invalid_argument);
}

TEST(Pairs, LabelsFollowSeverityAndBalance) {
  const auto ds = make_pair_dataset(generate_sources(8, {1, 8, 8}, 1), {10000, 6, false, 11});
  std::size_t ones = 0;
  for (const auto& inst : ds.instances) {
    EXPECT_NE(inst.level1, inst.level2);
    EXPECT_EQ(inst.label, label_from_levels(inst.level1, inst.level2));
    EXPECT_EQ(inst.r1, inst.r2);
    ones += inst.label;
  }
  const double frac = static_cast<double>(ones) / 10000.0;
  EXPECT_GE(frac, 0.45);
  EXPECT_LE(frac, 0.55);
  EXPECT_EQ(label_from_levels(1, 3), 1);
  EXPECT_EQ(label_from_levels(3, 1), 0);
}

TEST(Pairs, SwapFlipsLabel) {
  const auto ds = small_dataset(4);
  for (const auto& inst : ds.instances) {
    const auto s = inst.swapped();
    EXPECT_EQ(s.label, 1 - inst.label);
    EXPECT_EQ(s.d1, inst.d2);
    EXPECT_EQ(s.swapped(), inst);
  }
}

TEST(Pairs, CrossContentLevelsDifferByTwo) {
  const auto ds = make_pair_dataset(generate_sources(6, {1, 8, 8}, 1), {400, 6, true, 2});
  for (const auto& inst : ds.instances) {
    EXPECT_GE(std::abs(int(inst.level1) - int(inst.level2)), 2);
    EXPECT_NE(inst.source1, inst.source2);
  }
}

TEST(Pairs, SubsetRegeneratesIndependently) {
  const auto full = small_dataset(40);
  const auto prefix = small_dataset(10);
  for (std::size_t i = 0; i < 10; ++i) EXPECT_EQ(prefix.instances[i], full.instances[i]);
}

TEST(Pairs, LadderTooShortRejected) {
  EXPECT_THROW(make_pair_dataset(generate_sources(2, {1, 8, 8}, 1), {4, 1, false, 1}), ConfigError);
}

TEST(Container, RoundTripIsBitExact) {
  TempDir dir("data_rt");
  const auto ds = small_dataset(100);
  write_dataset(dir.file("a.rmds"), ds, "seed=3");
  EXPECT_EQ(read_dataset(dir.file("a.rmds")), ds);
  const auto bytes = encode_pair_dataset(ds);
  EXPECT_EQ(encode_pair_dataset(decode_pair_dataset(bytes)), bytes);
}

TEST(Container, RelabelFromMetadataReproducesLabels) {
  TempDir dir("data_relabel");
  write_dataset(dir.file("a.rmds"), small_dataset(50));
  for (const auto& inst : read_dataset(dir.file("a.rmds")).instances)
    EXPECT_EQ(label_from_levels(inst.level1, inst.level2), inst.label);
}

TEST(Container, EmptyDatasetIsValid) {
  PairDataset empty;
  const auto back = decode_pair_dataset(encode_pair_dataset(empty));
  EXPECT_TRUE(back.instances.empty());
}

TEST(Container, TruncationAndCorruptionAreErrors) {
  const auto bytes = encode_pair_dataset(small_dataset(5));
  for (std::size_t cut : {std::size_t{0}, std::size_t{3}, std::size_t{20}, bytes.size() / 2, bytes.size() - 1})
    EXPECT_THROW(decode_pair_dataset(bytes.substr(0, cut)), FormatError) << "cut at " << cut;
  EXPECT_THROW(decode_pair_dataset(bytes + "x"), FormatError);
  auto bad_version = bytes;
  bad_version[4] = 9;
  EXPECT_THROW(decode_pair_dataset(bad_version), FormatError);
  auto bad_magic = bytes;
  bad_magic[0] = 'X';
  EXPECT_THROW(decode_pair_dataset(bad_magic), FormatError);
}

TEST(EvalSets, PseudoMosAndRoundTrip) {
  EvalOptions opt;
  opt.sources = 5;
  opt.frames = 2;
  const auto set = make_eval_set(DistortionKind::DownUp, opt);
  EXPECT_EQ(set.items.size(), 5u * 6u);
  for (const auto& item : set.items) {
    EXPECT_GE(item.level, 1);
    EXPECT_LE(std::abs(item.mos - (6.0f - item.level)), 0.2f + 1e-6f);
    EXPECT_EQ(item.ref.shape(), (Shape{2, 1, 16, 16}));
  }
  EXPECT_EQ(decode_eval_set(encode_eval_set(set)), set);
  EXPECT_EQ(make_eval_set(DistortionKind::DownUp, opt), set);
  const auto bytes = encode_eval_set(set);
  EXPECT_THROW(decode_eval_set(bytes.substr(0, bytes.size() - 7)), FormatError);
}

TEST(Batches, GatherStacksInstances) {
  const auto ds = small_dataset(6);
  const auto b = gather_batch(ds, {4, 1});
  EXPECT_EQ(b.r1.shape(), (Shape{2, 1, 8, 8}));
  EXPECT_EQ(b.labels[0], float(ds.instances[4].label));
  EXPECT_EQ(b.d2[64], ds.instances[1].d2[0]);
}
