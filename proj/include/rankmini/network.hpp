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

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "rankmini/ops.hpp"
#include "rankmini/tensor.hpp"

namespace rankmini {

enum class LayerKind { Conv2d, LeakyRelu, AvgPool, GlobalAvgPool, Dense };

std::string_view layer_kind_name(LayerKind kind);
LayerKind parse_layer_kind(std::string_view name);

struct LayerSpec {
  std::string name;
  LayerKind kind = LayerKind::Conv2d;
  std::size_t in_channels = 0;   // conv2d / dense only
  std::size_t out_channels = 0;  // conv2d / dense only
  std::size_t kernel = 0;        // conv2d only
  std::size_t stride = 1;        // conv2d only
  std::size_t padding = 0;       // conv2d only
  std::size_t factor = 0;        // avg_pool only

  bool has_params() const { return kind == LayerKind::Conv2d || kind == LayerKind::Dense; }
  Shape weight_shape() const;
  Shape bias_shape() const { return {out_channels}; }

  friend bool operator==(const LayerSpec&, const LayerSpec&) = default;
};

/// Geometry of one patch (channels already include stacked frames).
struct PatchGeometry {
  std::size_t channels = 1;
  std::size_t height = 16;
  std::size_t width = 16;

  Shape batch_shape(std::size_t n) const { return {n, channels, height, width}; }
  std::size_t numel() const { return channels * height * width; }
  friend bool operator==(const PatchGeometry&, const PatchGeometry&) = default;
};

/// Siamese scoring branch: input is concat(R - D, D), i.e. 2 * channels planes.
struct NetworkSpec {
  PatchGeometry input;
  std::vector<LayerSpec> layers;

  std::size_t branch_channels() const { return 2 * input.channels; }
  const LayerSpec* find(std::string_view name) const;
  /// Indices (into layers) of conv2d/dense layers, in data-path order.
  std::vector<std::size_t> parameterized() const;

  friend bool operator==(const NetworkSpec&, const NetworkSpec&) = default;
};

/// Chain-compatibility problems; empty when the spec is well formed.
std::vector<std::string> check_chain(const NetworkSpec& spec);

struct TeacherConfig {
  PatchGeometry geometry{1, 64, 64};
  std::vector<std::size_t> widths{32, 64, 128};
  std::size_t head_width = 64;
  double width_multiplier = 1.0;
  std::size_t kernel = 3;
  std::uint64_t seed = 1234;
};

/// Conv blocks (conv 3x3 pad 1, leaky-ReLU, 2x average pool), global average
/// pool, dense -> leaky-ReLU -> dense(1). Throws ConfigError on bad geometry.
NetworkSpec build_teacher_spec(const TeacherConfig& config);

template <typename T>
struct Parameter {
  Tensor<T> value;
  std::optional<Tensor<T>> grad;
};

template <typename T>
struct LayerParams {
  std::string layer;
  Parameter<T> weight;
  Parameter<T> bias;
};

/// Flat store of every conv/dense weight and bias, in data-path order.
template <typename T>
struct ParameterSet {
  std::vector<LayerParams<T>> entries;

  LayerParams<T>* find(std::string_view layer);
  const LayerParams<T>* find(std::string_view layer) const;
  void clear_grads();

  template <typename U>
  ParameterSet<U> cast() const {
    ParameterSet<U> out;
    for (const auto& e : entries)
      out.entries.push_back({e.layer, {e.weight.value.template cast<U>(), std::nullopt},
                             {e.bias.value.template cast<U>(), std::nullopt}});
    return out;
  }

  friend bool operator==(const ParameterSet& a, const ParameterSet& b) {
    if (a.entries.size() != b.entries.size()) return false;
    for (std::size_t i = 0; i < a.entries.size(); ++i) {
      const auto& x = a.entries[i];
      const auto& y = b.entries[i];
      if (x.layer != y.layer || !(x.weight.value == y.weight.value) || !(x.bias.value == y.bias.value)) return false;
    }
    return true;
  }
};

/// Glorot-uniform weights in +-sqrt(6 / (fan_in + fan_out)), zero biases.
template <typename T>
ParameterSet<T> init_params(const NetworkSpec& spec, std::uint64_t seed);

template <typename T>
struct Model {
  NetworkSpec spec;
  ParameterSet<T> params;
};

template <typename T>
Model<T> build_teacher(const TeacherConfig& config) {
  auto spec = build_teacher_spec(config);
  auto params = init_params<T>(spec, config.seed);
  return {std::move(spec), std::move(params)};
}

/// Total (or exactly-nonzero) scalar count over all weights and biases.
template <typename T>
std::size_t count_params(const ParameterSet<T>& params, bool nonzero_only = false);

/// Inference FLOPs for one (R, D) patch: 2 per multiply-accumulate in conv
/// and dense layers; activations and pooling are not counted.
std::uint64_t count_flops(const NetworkSpec& spec);

// ---------------------------------------------------------------------------
// Forward passes.

namespace ad {

struct BoundLayer {
  Var weight;
  Var bias;
};

/// Parameters placed on a tape, indexed like ParameterSet::entries.
struct BoundParams {
  std::vector<BoundLayer> layers;
};

template <typename T>
BoundParams bind(Tape<T>& tape, const ParameterSet<T>& params, bool trainable);

/// Copies leaf gradients from the tape into ParameterSet::grad slots.
template <typename T>
void collect_grads(const Tape<T>& tape, const BoundParams& bound, ParameterSet<T>& params);

/// Scores a batch; ref and dist are [N, C, H, W]. Returns [N, 1].
template <typename T>
Var quality_scores(Tape<T>& tape, const NetworkSpec& spec, const BoundParams& bound, Var ref, Var dist);

struct PairVars {
  Var s1;
  Var s2;
  Var p;  // sigmoid(s1 - s2), [N, 1]
};

template <typename T>
PairVars forward_pair(Tape<T>& tape, const NetworkSpec& spec, const BoundParams& bound, Var r1, Var d1, Var r2,
                      Var d2);

}  // namespace ad

struct PreferencePrediction {
  double p = 0.5;
  double s1 = 0.0;
  double s2 = 0.0;
};

/// Scores for a batch of patches, [N, C, H, W] each.
template <typename T>
std::vector<double> quality_scores(const NetworkSpec& spec, const ParameterSet<T>& params, const Tensor<T>& ref,
                                   const Tensor<T>& dist);

/// Score of a single [C, H, W] (or [1, C, H, W]) patch pair.
template <typename T>
double quality_score(const NetworkSpec& spec, const ParameterSet<T>& params, const Tensor<T>& ref,
                     const Tensor<T>& dist);

template <typename T>
std::vector<PreferencePrediction> forward_pairs(const NetworkSpec& spec, const ParameterSet<T>& params,
                                                const Tensor<T>& r1, const Tensor<T>& d1, const Tensor<T>& r2,
                                                const Tensor<T>& d2);

template <typename T>
PreferencePrediction forward_pair(const NetworkSpec& spec, const ParameterSet<T>& params, const Tensor<T>& r1,
                                  const Tensor<T>& d1, const Tensor<T>& r2, const Tensor<T>& d2);

/// Position of one patch inside a frame sequence.
struct PatchLocation {
  std::size_t frame = 0;
  std::size_t y = 0;
  std::size_t x = 0;
};

/// Non-overlapping tiling of every frame with `stride` spacing (0 = patch size).
std::vector<PatchLocation> grid_patches(std::size_t frames, std::size_t frame_height, std::size_t frame_width,
                                        const PatchGeometry& patch, std::size_t stride = 0);

/// Mean patch score over co-located patches of two aligned [F, C, H, W]
/// frame sequences. Patch channels must equal frame channels.
template <typename T>
double sequence_quality(const NetworkSpec& spec, const ParameterSet<T>& params, const Tensor<T>& ref_frames,
                        const Tensor<T>& dist_frames, const std::vector<PatchLocation>& locations);

}  // namespace rankmini
