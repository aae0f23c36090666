// Copyright 2026 The rankmini Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "rankmini/network.hpp"
#include "rankmini/tensor.hpp"

namespace rankmini::data {

// ---------------------------------------------------------------------------
// Procedural source content. Frames are grayscale; a patch with C channels
// holds C consecutive frames of the same drifting texture.

enum class Generator : std::uint8_t { FilteredNoise = 0, Gradient = 1, Checkerboard = 2, Blobs = 3 };
inline constexpr std::size_t kGeneratorCount = 4;

struct SourcePatch {
  Tensor<float> pixels;  // [C, H, W], values in [0, 1]
  Generator generator = Generator::FilteredNoise;
  std::uint64_t seed = 0;
};

/// Frame `frame` of the texture identified by (generator, seed), [1, H, W].
Tensor<float> render_frame(Generator generator, std::uint64_t seed, std::size_t height, std::size_t width,
                           std::size_t frame);

/// One patch: channels = consecutive frames starting at `first_frame`.
SourcePatch render_source(Generator generator, std::uint64_t seed, const PatchGeometry& geometry,
                          std::size_t first_frame = 0);

/// n sources cycling through all generators; pure function of the arguments.
std::vector<SourcePatch> generate_sources(std::size_t n, const PatchGeometry& geometry, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Distortion ladder.

enum class DistortionKind : std::uint8_t { GaussianBlur = 0, AdditiveNoise = 1, Quantization = 2, DownUp = 3 };
inline constexpr std::array kAllDistortions{DistortionKind::GaussianBlur, DistortionKind::AdditiveNoise,
                                            DistortionKind::Quantization, DistortionKind::DownUp};

std::string_view distortion_name(DistortionKind kind);
DistortionKind parse_distortion(std::string_view name);

/// Severity `level` in 0..levels on a ladder of `levels` steps; level 0 is the identity.
struct DistortionSpec {
  DistortionKind kind = DistortionKind::GaussianBlur;
  int level = 1;
  int levels = 6;
};

/// Kind-specific magnitude: blur sigma, noise sigma, quantization step,
/// or resampling factor. Strictly increasing in level; 0 at level 0.
double distortion_magnitude(const DistortionSpec& spec, std::size_t extent);

/// Applies the distortion to each channel plane of a [C, H, W] patch and
/// clips to [0, 1]. Deterministic for a given seed.
Tensor<float> apply_distortion(const Tensor<float>& patch, const DistortionSpec& spec, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Ranked pair instances.

struct RankedPairInstance {
  Tensor<float> r1, d1, r2, d2;  // [C, H, W]
  std::uint8_t label = 0;        // 1 when (r1, d1) is the higher-quality pair
  DistortionKind kind = DistortionKind::GaussianBlur;
  std::uint8_t level1 = 0;
  std::uint8_t level2 = 0;
  std::uint32_t source1 = 0;
  std::uint32_t source2 = 0;

  /// Exchanges the two pairs; flips the label.
  RankedPairInstance swapped() const;

  friend bool operator==(const RankedPairInstance&, const RankedPairInstance&) = default;
};

/// Label implied by severities: lower level means higher quality.
inline std::uint8_t label_from_levels(int level1, int level2) { return level1 < level2 ? 1 : 0; }

struct PairDataset {
  PatchGeometry geometry;
  std::vector<RankedPairInstance> instances;

  friend bool operator==(const PairDataset&, const PairDataset&) = default;
};

struct PairOptions {
  std::size_t count = 10000;
  int levels = 6;
  /// Second pair uses a different source; levels then differ by at least 2.
  bool cross_content = false;
  std::uint64_t seed = 1;
};

/// Each instance draws its randomness from mix_seed(seed, index), so any
/// subset can be regenerated independently. Labels alternate, giving an
/// exact 50/50 class balance for even counts.
PairDataset make_pair_dataset(const std::vector<SourcePatch>& sources, const PairOptions& options);

// Container: "RMDS", u32 version, u64 count, u32 C, u32 H, u32 W, then per
// instance r1 d1 r2 d2 as float32 LE and a label byte. Severity metadata goes
// to the plaintext sidecar `<path>.meta`.
std::string encode_pair_dataset(const PairDataset& ds);
PairDataset decode_pair_dataset(std::string_view bytes);
void write_dataset(const std::string& path, const PairDataset& ds, std::string_view provenance = {});
/// Reads the container and, when present, re-attaches sidecar metadata.
PairDataset read_dataset(const std::string& path);

// ---------------------------------------------------------------------------
// Evaluation sequences with pseudo-MOS.

struct EvalItem {
  DistortionKind kind = DistortionKind::GaussianBlur;
  std::uint8_t level = 0;
  std::uint32_t source = 0;
  float mos = 0.0f;  // levels - level + U(-0.2, 0.2)
  Tensor<float> ref;   // [F, 1, H, W]
  Tensor<float> dist;  // [F, 1, H, W]

  friend bool operator==(const EvalItem&, const EvalItem&) = default;
};

struct EvalSet {
  std::string name;
  std::size_t frames = 1;
  std::size_t height = 16;
  std::size_t width = 16;
  std::vector<EvalItem> items;

  friend bool operator==(const EvalSet&, const EvalSet&) = default;
};

struct EvalOptions {
  std::size_t sources = 12;
  std::size_t frames = 4;
  std::size_t height = 16;
  std::size_t width = 16;
  int levels = 6;
  std::uint64_t seed = 2;
};

/// Every source at every level 1..levels for one distortion kind.
EvalSet make_eval_set(DistortionKind kind, const EvalOptions& options);

// Container: "RMEV", u32 version, u64 count, u32 F, u32 H, u32 W, u32 name
// length + name, then per item u8 kind, u8 level, u32 source, f32 mos, ref
// frames, distorted frames (float32 LE).
std::string encode_eval_set(const EvalSet& set);
EvalSet decode_eval_set(std::string_view bytes);
void write_eval_set(const std::string& path, const EvalSet& set);
EvalSet read_eval_set(const std::string& path);

/// Stacks the selected instances into four [n, C, H, W] batches.
struct PairBatch {
  Tensor<float> r1, d1, r2, d2;
  std::vector<float> labels;
};
PairBatch gather_batch(const PairDataset& ds, const std::vector<std::size_t>& indices);

}  // namespace rankmini::data
