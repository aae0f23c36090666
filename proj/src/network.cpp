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

#include "rankmini/network.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "rankmini/rng.hpp"

namespace rankmini {

std::string_view layer_kind_name(LayerKind kind) {
  switch (kind) {
    case LayerKind::Conv2d: return "conv2d";
    case LayerKind::LeakyRelu: return "leaky_relu";
    case LayerKind::AvgPool: return "avg_pool";
    case LayerKind::GlobalAvgPool: return "global_avg_pool";
    case LayerKind::Dense: return "dense";
  }
  return "unknown";
}

LayerKind parse_layer_kind(std::string_view name) {
  for (auto k : {LayerKind::Conv2d, LayerKind::LeakyRelu, LayerKind::AvgPool, LayerKind::GlobalAvgPool,
                 LayerKind::Dense})
    if (layer_kind_name(k) == name) return k;
  throw FormatError("unknown layer kind '" + std::string(name) + "'");
}

Shape LayerSpec::weight_shape() const {
  if (kind == LayerKind::Conv2d) return {out_channels, in_channels, kernel, kernel};
  if (kind == LayerKind::Dense) return {out_channels, in_channels};
  return {};
}

const LayerSpec* NetworkSpec::find(std::string_view name) const {
  for (const auto& l : layers)
    if (l.name == name) return &l;
  return nullptr;
}

std::vector<std::size_t> NetworkSpec::parameterized() const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < layers.size(); ++i)
    if (layers[i].has_params()) out.push_back(i);
  return out;
}

std::vector<std::string> check_chain(const NetworkSpec& spec) {
  std::vector<std::string> problems;
  if (spec.input.channels == 0 || spec.input.height == 0 || spec.input.width == 0)
    problems.push_back("input geometry has a zero extent");

  bool spatial = true;  // false once features are flattened
  std::size_t channels = spec.branch_channels();
  std::size_t h = spec.input.height, w = spec.input.width;
  std::string producer = "input";
  std::size_t heads = 0;

  for (const auto& l : spec.layers) {
    switch (l.kind) {
      case LayerKind::Conv2d:
        if (!spatial) problems.push_back(l.name + ": conv2d after global pooling");
        if (l.in_channels != channels)
          problems.push_back(producer + " produces " + std::to_string(channels) + " channels but " + l.name +
                             " expects " + std::to_string(l.in_channels));
        if (l.kernel == 0 || l.stride == 0 || l.out_channels == 0) {
          problems.push_back(l.name + ": zero kernel, stride or width");
        } else if (l.kernel > h + 2 * l.padding || l.kernel > w + 2 * l.padding) {
          problems.push_back(l.name + ": kernel " + std::to_string(l.kernel) + " larger than padded input " +
                             std::to_string(h) + "x" + std::to_string(w));
        } else {
          h = (h + 2 * l.padding - l.kernel) / l.stride + 1;
          w = (w + 2 * l.padding - l.kernel) / l.stride + 1;
        }
        channels = l.out_channels;
        producer = l.name;
        break;
      case LayerKind::AvgPool:
        if (!spatial || l.factor == 0 || h % l.factor != 0 || w % l.factor != 0) {
          problems.push_back(l.name + ": pooling factor " + std::to_string(l.factor) + " does not divide " +
                             std::to_string(h) + "x" + std::to_string(w));
        } else {
          h /= l.factor;
          w /= l.factor;
        }
        break;
      case LayerKind::GlobalAvgPool:
        if (!spatial) problems.push_back(l.name + ": repeated global pooling");
        spatial = false;
        break;
      case LayerKind::Dense:
        if (spatial) problems.push_back(l.name + ": dense layer before global pooling");
        if (l.in_channels != channels)
          problems.push_back(producer + " produces " + std::to_string(channels) + " features but " + l.name +
                             " expects " + std::to_string(l.in_channels));
        channels = l.out_channels;
        producer = l.name;
        break;
      case LayerKind::LeakyRelu: break;
    }
  }
  if (spatial) problems.push_back("network never reaches a feature vector");
  if (channels != 1) problems.push_back("score head must produce exactly 1 output, got " + std::to_string(channels));
  if (!spec.layers.empty() && spec.layers.back().kind == LayerKind::Dense) ++heads;
  if (heads != 1) problems.push_back("network must end in a single dense score head");
  return problems;
}

NetworkSpec build_teacher_spec(const TeacherConfig& config) {
  const auto& g = config.geometry;
  if (g.channels == 0 || g.height == 0 || g.width == 0) throw ConfigError("patch geometry has a zero extent");
  if (config.widths.empty()) throw ConfigError("at least one conv block is required");
  if (!(config.width_multiplier > 0.0)) throw ConfigError("width multiplier must be positive");
  if (config.kernel == 0 || config.kernel > g.height || config.kernel > g.width)
    throw ConfigError("kernel " + std::to_string(config.kernel) + " larger than the " + std::to_string(g.height) +
                      "x" + std::to_string(g.width) + " patch");
  const std::size_t downsample = std::size_t{1} << config.widths.size();
  if (g.height % downsample != 0 || g.width % downsample != 0)
    throw ConfigError("patch extents must be divisible by " + std::to_string(downsample) + " for " +
                      std::to_string(config.widths.size()) + " pooling stages");

  auto scaled = [&](std::size_t w) {
    const auto v = static_cast<std::size_t>(std::llround(static_cast<double>(w) * config.width_multiplier));
    if (v == 0) throw ConfigError("width multiplier leaves a layer with zero channels");
    return v;
  };

  NetworkSpec spec;
  spec.input = g;
  std::size_t channels = spec.branch_channels();
  for (std::size_t i = 0; i < config.widths.size(); ++i) {
    const auto idx = std::to_string(i + 1);
    const auto width = scaled(config.widths[i]);
    spec.layers.push_back({"conv" + idx, LayerKind::Conv2d, channels, width, config.kernel, 1, config.kernel / 2, 0});
    spec.layers.push_back({"act" + idx, LayerKind::LeakyRelu});
    spec.layers.push_back({"pool" + idx, LayerKind::AvgPool, 0, 0, 0, 1, 0, 2});
    channels = width;
  }
  spec.layers.push_back({"gap", LayerKind::GlobalAvgPool});
  const auto head = scaled(config.head_width);
  spec.layers.push_back({"fc1", LayerKind::Dense, channels, head});
  spec.layers.push_back({"act_fc1", LayerKind::LeakyRelu});
  spec.layers.push_back({"fc2", LayerKind::Dense, head, 1});

  if (auto problems = check_chain(spec); !problems.empty()) throw ConfigError(problems.front());
  return spec;
}

template <typename T>
LayerParams<T>* ParameterSet<T>::find(std::string_view layer) {
  for (auto& e : entries)
    if (e.layer == layer) return &e;
  return nullptr;
}

template <typename T>
const LayerParams<T>* ParameterSet<T>::find(std::string_view layer) const {
  for (const auto& e : entries)
    if (e.layer == layer) return &e;
  return nullptr;
}

template <typename T>
void ParameterSet<T>::clear_grads() {
  for (auto& e : entries) {
    e.weight.grad.reset();
    e.bias.grad.reset();
  }
}

template <typename T>
ParameterSet<T> init_params(const NetworkSpec& spec, std::uint64_t seed) {
  ParameterSet<T> params;
  Rng rng(mix_seed(seed, 0x1417));
  for (const auto& l : spec.layers) {
    if (!l.has_params()) continue;
    const std::size_t receptive = l.kind == LayerKind::Conv2d ? l.kernel * l.kernel : 1;
    const double fan_in = static_cast<double>(l.in_channels * receptive);
    const double fan_out = static_cast<double>(l.out_channels * receptive);
    const double limit = std::sqrt(6.0 / (fan_in + fan_out));
    Tensor<T> w(l.weight_shape());
    for (auto& v : w.values()) v = static_cast<T>(rng.uniform(-limit, limit));
    params.entries.push_back({l.name, {std::move(w), std::nullopt}, {Tensor<T>(l.bias_shape()), std::nullopt}});
  }
  return params;
}

template <typename T>
std::size_t count_params(const ParameterSet<T>& params, bool nonzero_only) {
  std::size_t n = 0;
  for (const auto& e : params.entries) {
    for (const auto* t : {&e.weight.value, &e.bias.value}) {
      if (!nonzero_only) {
        n += t->numel();
      } else {
        n += static_cast<std::size_t>(std::count_if(t->values().begin(), t->values().end(),
                                                    [](T v) { return v != T(0); }));
      }
    }
  }
  return n;
}

std::uint64_t count_flops(const NetworkSpec& spec) {
  std::uint64_t flops = 0;
  std::size_t h = spec.input.height, w = spec.input.width;
  for (const auto& l : spec.layers) {
    switch (l.kind) {
      case LayerKind::Conv2d:
        h = (h + 2 * l.padding - l.kernel) / l.stride + 1;
        w = (w + 2 * l.padding - l.kernel) / l.stride + 1;
        flops += 2ULL * l.kernel * l.kernel * l.in_channels * l.out_channels * h * w;
        break;
      case LayerKind::AvgPool:
        h /= l.factor;
        w /= l.factor;
        break;
      case LayerKind::Dense: flops += 2ULL * l.in_channels * l.out_channels; break;
      default: break;
    }
  }
  return flops;
}

namespace ad {

template <typename T>
BoundParams bind(Tape<T>& tape, const ParameterSet<T>& params, bool trainable) {
  BoundParams bound;
  for (const auto& e : params.entries) {
    if (trainable)
      bound.layers.push_back({tape.variable(e.weight.value), tape.variable(e.bias.value)});
    else
      bound.layers.push_back({tape.constant(e.weight.value), tape.constant(e.bias.value)});
  }
  return bound;
}

template <typename T>
void collect_grads(const Tape<T>& tape, const BoundParams& bound, ParameterSet<T>& params) {
  for (std::size_t i = 0; i < params.entries.size(); ++i) {
    auto& e = params.entries[i];
    const auto& b = bound.layers.at(i);
    e.weight.grad = tape.has_grad(b.weight) ? tape.grad(b.weight) : Tensor<T>(e.weight.value.shape());
    e.bias.grad = tape.has_grad(b.bias) ? tape.grad(b.bias) : Tensor<T>(e.bias.value.shape());
  }
}

template <typename T>
Var quality_scores(Tape<T>& tape, const NetworkSpec& spec, const BoundParams& bound, Var ref, Var dist) {
  const auto& r = tape.value(ref);
  const auto& d = tape.value(dist);
  if (r.rank() != 4 || r.shape() != d.shape() || r.dim(1) != spec.input.channels ||
      r.dim(2) != spec.input.height || r.dim(3) != spec.input.width)
    throw ShapeError("patch geometry " + shape_string(r.shape()) + " / " + shape_string(d.shape()) +
                     " does not match network input [N," + std::to_string(spec.input.channels) + "," +
                     std::to_string(spec.input.height) + "," + std::to_string(spec.input.width) + "]");
  Var x = concat_channels(tape, sub(tape, ref, dist), dist);
  std::size_t slot = 0;
  for (const auto& l : spec.layers) {
    switch (l.kind) {
      case LayerKind::Conv2d: {
        const auto& b = bound.layers.at(slot++);
        x = conv2d(tape, x, b.weight, b.bias, l.stride, l.padding);
        break;
      }
      case LayerKind::Dense: {
        const auto& b = bound.layers.at(slot++);
        x = dense(tape, x, b.weight, b.bias);
        break;
      }
      case LayerKind::LeakyRelu: x = leaky_relu(tape, x); break;
      case LayerKind::AvgPool: x = avg_pool(tape, x, l.factor); break;
      case LayerKind::GlobalAvgPool: x = global_avg_pool(tape, x); break;
    }
  }
  return x;
}

template <typename T>
PairVars forward_pair(Tape<T>& tape, const NetworkSpec& spec, const BoundParams& bound, Var r1, Var d1, Var r2,
                      Var d2) {
  PairVars out;
  out.s1 = quality_scores(tape, spec, bound, r1, d1);
  out.s2 = quality_scores(tape, spec, bound, r2, d2);
  out.p = sigmoid(tape, sub(tape, out.s1, out.s2));
  return out;
}

}  // namespace ad

namespace {

template <typename T>
Tensor<T> as_batch(const Tensor<T>& t) {
  if (t.rank() == 3) return t.reshaped({1, t.dim(0), t.dim(1), t.dim(2)});
  return t;
}

}  // namespace

template <typename T>
std::vector<double> quality_scores(const NetworkSpec& spec, const ParameterSet<T>& params, const Tensor<T>& ref,
                                   const Tensor<T>& dist) {
  ad::Tape<T> tape(false);
  const auto bound = ad::bind(tape, params, false);
  auto s = ad::quality_scores(tape, spec, bound, tape.constant(as_batch(ref)), tape.constant(as_batch(dist)));
  const auto& v = tape.value(s);
  return {v.values().begin(), v.values().end()};
}

template <typename T>
double quality_score(const NetworkSpec& spec, const ParameterSet<T>& params, const Tensor<T>& ref,
                     const Tensor<T>& dist) {
  const auto r = as_batch(ref);
  if (r.dim(0) != 1) throw ShapeError("quality_score scores exactly one patch; use quality_scores for batches");
  return quality_scores(spec, params, r, as_batch(dist)).front();
}

template <typename T>
std::vector<PreferencePrediction> forward_pairs(const NetworkSpec& spec, const ParameterSet<T>& params,
                                                const Tensor<T>& r1, const Tensor<T>& d1, const Tensor<T>& r2,
                                                const Tensor<T>& d2) {
  ad::Tape<T> tape(false);
  const auto bound = ad::bind(tape, params, false);
  auto pv = ad::forward_pair(tape, spec, bound, tape.constant(as_batch(r1)), tape.constant(as_batch(d1)),
                             tape.constant(as_batch(r2)), tape.constant(as_batch(d2)));
  const auto& p = tape.value(pv.p);
  const auto& s1 = tape.value(pv.s1);
  const auto& s2 = tape.value(pv.s2);
  std::vector<PreferencePrediction> out(p.numel());
  for (std::size_t i = 0; i < p.numel(); ++i) out[i] = {double(p[i]), double(s1[i]), double(s2[i])};
  return out;
}

template <typename T>
PreferencePrediction forward_pair(const NetworkSpec& spec, const ParameterSet<T>& params, const Tensor<T>& r1,
                                  const Tensor<T>& d1, const Tensor<T>& r2, const Tensor<T>& d2) {
  auto all = forward_pairs(spec, params, r1, d1, r2, d2);
  if (all.size() != 1) throw ShapeError("forward_pair expects a single instance");
  return all.front();
}

std::vector<PatchLocation> grid_patches(std::size_t frames, std::size_t frame_height, std::size_t frame_width,
                                        const PatchGeometry& patch, std::size_t stride) {
  std::vector<PatchLocation> out;
  if (patch.height > frame_height || patch.width > frame_width) return out;
  const std::size_t sy = stride ? stride : patch.height;
  const std::size_t sx = stride ? stride : patch.width;
  for (std::size_t f = 0; f < frames; ++f)
    for (std::size_t y = 0; y + patch.height <= frame_height; y += sy)
      for (std::size_t x = 0; x + patch.width <= frame_width; x += sx) out.push_back({f, y, x});
  return out;
}

template <typename T>
double sequence_quality(const NetworkSpec& spec, const ParameterSet<T>& params, const Tensor<T>& ref_frames,
                        const Tensor<T>& dist_frames, const std::vector<PatchLocation>& locations) {
  if (locations.empty()) throw std::invalid_argument("sequence_quality: empty patch set");
  if (ref_frames.shape() != dist_frames.shape() || ref_frames.rank() != 4)
    throw ShapeError("sequence_quality: reference and distorted sequences must be aligned [F,C,H,W]");
  const auto& g = spec.input;
  const std::size_t fc = ref_frames.dim(1), fh = ref_frames.dim(2), fw = ref_frames.dim(3);
  if (g.channels % fc != 0) throw ShapeError("sequence_quality: patch channels not a multiple of frame channels");
  const std::size_t stack = g.channels / fc;

  Tensor<T> ref(g.batch_shape(locations.size()));
  Tensor<T> dist(g.batch_shape(locations.size()));
  for (std::size_t i = 0; i < locations.size(); ++i) {
    const auto& loc = locations[i];
    if (loc.frame + stack > ref_frames.dim(0) || loc.y + g.height > fh || loc.x + g.width > fw)
      throw ShapeError("sequence_quality: patch location outside the sequence");
    for (std::size_t c = 0; c < g.channels; ++c) {
      const std::size_t f = loc.frame + c / fc, fcn = c % fc;
      for (std::size_t y = 0; y < g.height; ++y) {
        const std::size_t src = ((f * fc + fcn) * fh + loc.y + y) * fw + loc.x;
        const std::size_t dst = ((i * g.channels + c) * g.height + y) * g.width;
        std::copy_n(ref_frames.data() + src, g.width, ref.data() + dst);
        std::copy_n(dist_frames.data() + src, g.width, dist.data() + dst);
      }
    }
  }
  const auto scores = quality_scores(spec, params, ref, dist);
  double acc = 0.0;
  for (auto s : scores) acc += s;
  return acc / static_cast<double>(scores.size());
}

#define RANKMINI_INSTANTIATE_NETWORK(T)                                                                           \
  template struct ParameterSet<T>;                                                                                \
  template ParameterSet<T> init_params<T>(const NetworkSpec&, std::uint64_t);                                     \
  template std::size_t count_params<T>(const ParameterSet<T>&, bool);                                             \
  template ad::BoundParams ad::bind<T>(ad::Tape<T>&, const ParameterSet<T>&, bool);                               \
  template void ad::collect_grads<T>(const ad::Tape<T>&, const ad::BoundParams&, ParameterSet<T>&);               \
  template ad::Var ad::quality_scores<T>(ad::Tape<T>&, const NetworkSpec&, const ad::BoundParams&, ad::Var,       \
                                         ad::Var);                                                                \
  template ad::PairVars ad::forward_pair<T>(ad::Tape<T>&, const NetworkSpec&, const ad::BoundParams&, ad::Var,    \
                                            ad::Var, ad::Var, ad::Var);                                           \
  template std::vector<double> quality_scores<T>(const NetworkSpec&, const ParameterSet<T>&, const Tensor<T>&,    \
                                                 const Tensor<T>&);                                               \
  template double quality_score<T>(const NetworkSpec&, const ParameterSet<T>&, const Tensor<T>&,                  \
                                   const Tensor<T>&);                                                             \
  template std::vector<PreferencePrediction> forward_pairs<T>(const NetworkSpec&, const ParameterSet<T>&,         \
                                                              const Tensor<T>&, const Tensor<T>&,                 \
                                                              const Tensor<T>&, const Tensor<T>&);                \
  template PreferencePrediction forward_pair<T>(const NetworkSpec&, const ParameterSet<T>&, const Tensor<T>&,     \
                                                const Tensor<T>&, const Tensor<T>&, const Tensor<T>&);            \
  template double sequence_quality<T>(const NetworkSpec&, const ParameterSet<T>&, const Tensor<T>&,               \
                                      const Tensor<T>&, const std::vector<PatchLocation>&);

RANKMINI_INSTANTIATE_NETWORK(float)
RANKMINI_INSTANTIATE_NETWORK(double)

#undef RANKMINI_INSTANTIATE_NETWORK

}  // namespace rankmini
