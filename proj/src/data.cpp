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

#include "rankmini/data.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numbers>
#include <sstream>

#include "rankmini/binary_io.hpp"
#include "rankmini/rng.hpp"

namespace rankmini::data {

namespace {

constexpr std::uint32_t kPairVersion = 1;
constexpr std::uint32_t kEvalVersion = 1;

double hash_unit(std::uint64_t seed, std::int64_t a, std::int64_t b) {
  const auto h = mix_seed(seed ^ (static_cast<std::uint64_t>(a) * 0x9E3779B1ULL), static_cast<std::uint64_t>(b));
  return static_cast<double>(h >> 11) * 0x1.0p-53;
}

float clip01(double v) { return static_cast<float>(std::clamp(v, 0.0, 1.0)); }

struct Wave {
  double fx, fy, phase, amp;
};

}  // namespace

Tensor<float> render_frame(Generator generator, std::uint64_t seed, std::size_t height, std::size_t width,
                           std::size_t frame) {
  if (height == 0 || width == 0) throw ConfigError("source geometry has a zero extent");
  Rng rng(mix_seed(seed, static_cast<std::uint64_t>(generator)));
  const double vx = rng.uniform(-0.75, 0.75), vy = rng.uniform(-0.75, 0.75);
  const double t = static_cast<double>(frame);
  const double w = static_cast<double>(width), h = static_cast<double>(height);
  Tensor<float> out(Shape{1, height, width});

  switch (generator) {
    case Generator::FilteredNoise: {
      std::vector<Wave> waves(8);
      double norm = 0.0;
      for (auto& wv : waves) {
        const double f = rng.uniform(0.04, 0.4), theta = rng.uniform(0.0, std::numbers::pi);
        wv = {f * std::cos(theta), f * std::sin(theta), rng.uniform(0.0, 2.0 * std::numbers::pi),
              rng.uniform(0.5, 1.0) / (1.0 + 3.0 * f)};
        norm += wv.amp * wv.amp / 2.0;
      }
      norm = std::sqrt(norm);
      const double mean = rng.uniform(0.4, 0.6);
      for (std::size_t y = 0; y < height; ++y)
        for (std::size_t x = 0; x < width; ++x) {
          const double px = double(x) + vx * t, py = double(y) + vy * t;
          double acc = 0.0;
          for (const auto& wv : waves) acc += wv.amp * std::sin(2.0 * std::numbers::pi * (wv.fx * px + wv.fy * py) + wv.phase);
          out[y * width + x] = clip01(mean + 0.16 * acc / norm);
        }
      break;
    }
    case Generator::Gradient: {
      const double theta = rng.uniform(0.0, 2.0 * std::numbers::pi);
      const double base = rng.uniform(0.35, 0.65), slope = rng.uniform(0.3, 0.6);
      const double rf = rng.uniform(0.1, 0.3), rphase = rng.uniform(0.0, 2.0 * std::numbers::pi);
      for (std::size_t y = 0; y < height; ++y)
        for (std::size_t x = 0; x < width; ++x) {
          const double px = (double(x) + vx * t - w / 2) / w, py = (double(y) + vy * t - h / 2) / h;
          const double along = px * std::cos(theta) + py * std::sin(theta);
          const double ripple = 0.06 * std::sin(2.0 * std::numbers::pi * rf * (double(x) + double(y) + vx * t) + rphase);
          out[y * width + x] = clip01(base + slope * along + ripple);
        }
      break;
    }
    case Generator::Checkerboard: {
      const double cell = 2.0 + static_cast<double>(rng.below(4));
      const double ox = rng.uniform(0.0, cell), oy = rng.uniform(0.0, cell);
      const double lo = rng.uniform(0.15, 0.35), hi = rng.uniform(0.65, 0.85);
      const std::uint64_t jitter_seed = mix_seed(seed, 77);
      for (std::size_t y = 0; y < height; ++y)
        for (std::size_t x = 0; x < width; ++x) {
          const auto cx = static_cast<std::int64_t>(std::floor((double(x) + ox + vx * t) / cell));
          const auto cy = static_cast<std::int64_t>(std::floor((double(y) + oy + vy * t) / cell));
          const double level = ((cx + cy) & 1) ? hi : lo;
          const double cell_jitter = 0.16 * (hash_unit(jitter_seed, cx, cy) - 0.5);
          const double grain = 0.04 * (hash_unit(jitter_seed + 1, std::int64_t(x) + 4096 * std::int64_t(frame),
                                                 std::int64_t(y)) - 0.5);
          out[y * width + x] = clip01(level + cell_jitter + grain);
        }
      break;
    }
    case Generator::Blobs: {
      struct Blob {
        double cx, cy, sigma, amp;
      };
      std::vector<Blob> blobs(5);
      for (auto& b : blobs)
        b = {rng.uniform(-0.2 * w, 1.2 * w), rng.uniform(-0.2 * h, 1.2 * h), rng.uniform(1.5, 0.3 * std::max(w, h) + 1.5),
             rng.uniform(-0.35, 0.45)};
      const double base = rng.uniform(0.35, 0.5);
      for (std::size_t y = 0; y < height; ++y)
        for (std::size_t x = 0; x < width; ++x) {
          double acc = base;
          for (const auto& b : blobs) {
            const double dx = double(x) + vx * t - b.cx, dy = double(y) + vy * t - b.cy;
            acc += b.amp * std::exp(-(dx * dx + dy * dy) / (2.0 * b.sigma * b.sigma));
          }
          out[y * width + x] = clip01(acc);
        }
      break;
    }
  }
  return out;
}

SourcePatch render_source(Generator generator, std::uint64_t seed, const PatchGeometry& geometry,
                          std::size_t first_frame) {
  if (geometry.channels == 0 || geometry.height == 0 || geometry.width == 0)
    throw ConfigError("source geometry has a zero extent");
  SourcePatch src{Tensor<float>(Shape{geometry.channels, geometry.height, geometry.width}), generator, seed};
  const std::size_t plane = geometry.height * geometry.width;
  for (std::size_t c = 0; c < geometry.channels; ++c) {
    const auto frame = render_frame(generator, seed, geometry.height, geometry.width, first_frame + c);
    std::copy_n(frame.data(), plane, src.pixels.data() + c * plane);
  }
  return src;
}

std::vector<SourcePatch> generate_sources(std::size_t n, const PatchGeometry& geometry, std::uint64_t seed) {
  if (n == 0) throw ConfigError("generate_sources: n must be at least 1");
  std::vector<SourcePatch> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i)
    out.push_back(render_source(static_cast<Generator>(i % kGeneratorCount), mix_seed(seed, i), geometry));
  return out;
}

std::string_view distortion_name(DistortionKind kind) {
  switch (kind) {
    case DistortionKind::GaussianBlur: return "gaussian-blur";
    case DistortionKind::AdditiveNoise: return "additive-gaussian-noise";
    case DistortionKind::Quantization: return "uniform-quantization";
    case DistortionKind::DownUp: return "downsample-upsample";
  }
  return "unknown";
}

DistortionKind parse_distortion(std::string_view name) {
  for (auto k : kAllDistortions)
    if (distortion_name(k) == name) return k;
  throw ConfigError("unknown distortion kind '" + std::string(name) + "'");
}

namespace {

std::size_t downsampled_extent(std::size_t extent, int level, int levels) {
  const double ratio = static_cast<double>(levels + 1 - level) / static_cast<double>(levels + 1);
  return std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(static_cast<double>(extent) * ratio)));
}

std::size_t quantization_steps(int level, int levels) {
  return std::size_t{1} << std::min(levels + 1 - level, 16);
}

void check_level(const DistortionSpec& spec) {
  if (spec.levels < 1) throw ConfigError("distortion ladder needs at least one level");
  if (spec.level < 0 || spec.level > spec.levels)
    throw ConfigError("severity level " + std::to_string(spec.level) + " outside 0.." + std::to_string(spec.levels));
}

std::size_t reflect(std::ptrdiff_t i, std::size_t n) {
  const auto m = static_cast<std::ptrdiff_t>(n);
  if (m == 1) return 0;
  while (i < 0 || i >= m) i = i < 0 ? -i - 1 : 2 * m - i - 1;
  return static_cast<std::size_t>(i);
}

void blur_plane(const float* src, float* dst, std::size_t h, std::size_t w, double sigma) {
  const auto radius = static_cast<std::ptrdiff_t>(std::ceil(3.0 * sigma));
  std::vector<double> k(static_cast<std::size_t>(2 * radius + 1));
  double norm = 0.0;
  for (std::ptrdiff_t i = -radius; i <= radius; ++i) {
    k[static_cast<std::size_t>(i + radius)] = std::exp(-double(i * i) / (2.0 * sigma * sigma));
    norm += k[static_cast<std::size_t>(i + radius)];
  }
  for (auto& v : k) v /= norm;
  std::vector<double> tmp(h * w);
  for (std::size_t y = 0; y < h; ++y)
    for (std::size_t x = 0; x < w; ++x) {
      double acc = 0.0;
      for (std::ptrdiff_t i = -radius; i <= radius; ++i)
        acc += k[static_cast<std::size_t>(i + radius)] * src[y * w + reflect(std::ptrdiff_t(x) + i, w)];
      tmp[y * w + x] = acc;
    }
  for (std::size_t y = 0; y < h; ++y)
    for (std::size_t x = 0; x < w; ++x) {
      double acc = 0.0;
      for (std::ptrdiff_t i = -radius; i <= radius; ++i)
        acc += k[static_cast<std::size_t>(i + radius)] * tmp[reflect(std::ptrdiff_t(y) + i, h) * w + x];
      dst[y * w + x] = clip01(acc);
    }
}

// Bilinear resize with half-pixel centres.
std::vector<double> resize(const std::vector<double>& src, std::size_t sh, std::size_t sw, std::size_t dh,
                           std::size_t dw) {
  std::vector<double> out(dh * dw);
  const double scale_y = double(sh) / double(dh), scale_x = double(sw) / double(dw);
  for (std::size_t y = 0; y < dh; ++y) {
    const double fy = std::clamp((double(y) + 0.5) * scale_y - 0.5, 0.0, double(sh - 1));
    const auto y0 = static_cast<std::size_t>(fy);
    const std::size_t y1 = std::min(y0 + 1, sh - 1);
    const double ty = fy - double(y0);
    for (std::size_t x = 0; x < dw; ++x) {
      const double fx = std::clamp((double(x) + 0.5) * scale_x - 0.5, 0.0, double(sw - 1));
      const auto x0 = static_cast<std::size_t>(fx);
      const std::size_t x1 = std::min(x0 + 1, sw - 1);
      const double tx = fx - double(x0);
      const double top = src[y0 * sw + x0] * (1 - tx) + src[y0 * sw + x1] * tx;
      const double bot = src[y1 * sw + x0] * (1 - tx) + src[y1 * sw + x1] * tx;
      out[y * dw + x] = top * (1 - ty) + bot * ty;
    }
  }
  return out;
}

// Area average onto a coarser grid (each source pixel split by overlap).
std::vector<double> area_downsample(const std::vector<double>& src, std::size_t sh, std::size_t sw, std::size_t dh,
                                    std::size_t dw) {
  std::vector<double> out(dh * dw, 0.0);
  const double sy = double(sh) / double(dh), sx = double(sw) / double(dw);
  for (std::size_t y = 0; y < dh; ++y) {
    const double y_lo = double(y) * sy, y_hi = y_lo + sy;
    for (std::size_t x = 0; x < dw; ++x) {
      const double x_lo = double(x) * sx, x_hi = x_lo + sx;
      double acc = 0.0;
      for (auto iy = static_cast<std::size_t>(y_lo); iy < sh && double(iy) < y_hi; ++iy) {
        const double wy = std::min(double(iy + 1), y_hi) - std::max(double(iy), y_lo);
        for (auto ix = static_cast<std::size_t>(x_lo); ix < sw && double(ix) < x_hi; ++ix) {
          const double wx = std::min(double(ix + 1), x_hi) - std::max(double(ix), x_lo);
          acc += wy * wx * src[iy * sw + ix];
        }
      }
      out[y * dw + x] = acc / (sy * sx);
    }
  }
  return out;
}

}  // namespace

double distortion_magnitude(const DistortionSpec& spec, std::size_t extent) {
  check_level(spec);
  if (spec.level == 0) return 0.0;
  switch (spec.kind) {
    case DistortionKind::GaussianBlur: return 0.5 * spec.level;
    case DistortionKind::AdditiveNoise: return 0.03 * spec.level;
    case DistortionKind::Quantization: return 1.0 / static_cast<double>(quantization_steps(spec.level, spec.levels) - 1);
    case DistortionKind::DownUp:
      return static_cast<double>(extent) / static_cast<double>(downsampled_extent(extent, spec.level, spec.levels));
  }
  throw ConfigError("unknown distortion kind");
}

Tensor<float> apply_distortion(const Tensor<float>& patch, const DistortionSpec& spec, std::uint64_t seed) {
  check_level(spec);
  if (static_cast<unsigned>(spec.kind) > static_cast<unsigned>(DistortionKind::DownUp))
    throw ConfigError("unknown distortion kind " + std::to_string(static_cast<unsigned>(spec.kind)));
  if (patch.rank() != 3) throw ShapeError("apply_distortion expects a [C,H,W] patch");
  if (spec.level == 0) return patch;
  const std::size_t c = patch.dim(0), h = patch.dim(1), w = patch.dim(2), plane = h * w;
  Tensor<float> out(patch.shape());
  Rng rng(seed);
  for (std::size_t ch = 0; ch < c; ++ch) {
    const float* src = patch.data() + ch * plane;
    float* dst = out.data() + ch * plane;
    switch (spec.kind) {
      case DistortionKind::GaussianBlur: blur_plane(src, dst, h, w, distortion_magnitude(spec, h)); break;
      case DistortionKind::AdditiveNoise: {
        const double sigma = distortion_magnitude(spec, h);
        for (std::size_t i = 0; i < plane; ++i) dst[i] = clip01(src[i] + sigma * rng.normal());
        break;
      }
      case DistortionKind::Quantization: {
        const double q = static_cast<double>(quantization_steps(spec.level, spec.levels) - 1);
        for (std::size_t i = 0; i < plane; ++i) dst[i] = clip01(std::round(double(src[i]) * q) / q);
        break;
      }
      case DistortionKind::DownUp: {
        const std::size_t sh = downsampled_extent(h, spec.level, spec.levels);
        const std::size_t sw = downsampled_extent(w, spec.level, spec.levels);
        std::vector<double> full(src, src + plane);
        const auto small = area_downsample(full, h, w, sh, sw);
        const auto back = resize(small, sh, sw, h, w);
        for (std::size_t i = 0; i < plane; ++i) dst[i] = clip01(back[i]);
        break;
      }
    }
  }
  return out;
}

RankedPairInstance RankedPairInstance::swapped() const {
  RankedPairInstance s = *this;
  std::swap(s.r1, s.r2);
  std::swap(s.d1, s.d2);
  std::swap(s.level1, s.level2);
  std::swap(s.source1, s.source2);
  s.label = static_cast<std::uint8_t>(1 - label);
  return s;
}

PairDataset make_pair_dataset(const std::vector<SourcePatch>& sources, const PairOptions& options) {
  if (options.levels < 2) throw ConfigError("pair dataset needs a ladder of at least 2 levels");
  if (sources.empty()) throw ConfigError("pair dataset needs at least one source");
  if (options.cross_content && (options.levels < 3 || sources.size() < 2))
    throw ConfigError("cross-content pairs need >= 3 levels and >= 2 sources");
  PairDataset ds;
  const auto& shape = sources.front().pixels.shape();
  ds.geometry = {shape[0], shape[1], shape[2]};
  ds.instances.resize(options.count);

  const auto levels = static_cast<std::uint64_t>(options.levels);
#pragma omp parallel for schedule(dynamic, 16)
  for (std::ptrdiff_t ii = 0; ii < static_cast<std::ptrdiff_t>(options.count); ++ii) {
    const auto i = static_cast<std::size_t>(ii);
    const std::uint64_t inst_seed = mix_seed(options.seed, i);
    Rng rng(inst_seed);
    const auto kind = kAllDistortions[rng.below(kAllDistortions.size())];
    const auto s1 = static_cast<std::size_t>(rng.below(sources.size()));
    std::size_t s2 = s1;
    int a = 0, b = 0;
    do {
      a = 1 + static_cast<int>(rng.below(levels));
      b = 1 + static_cast<int>(rng.below(levels - 1));
      if (b >= a) ++b;
    } while (options.cross_content && std::abs(a - b) < 2);
    if (options.cross_content) {
      s2 = static_cast<std::size_t>(rng.below(sources.size() - 1));
      if (s2 >= s1) ++s2;
    }
    const int lo = std::min(a, b), hi = std::max(a, b);
    // even index: pair 1 is the better one
    const bool first_better = (i % 2) == 0;
    const int l1 = first_better ? lo : hi, l2 = first_better ? hi : lo;

    auto& inst = ds.instances[i];
    inst.kind = kind;
    inst.level1 = static_cast<std::uint8_t>(l1);
    inst.level2 = static_cast<std::uint8_t>(l2);
    inst.source1 = static_cast<std::uint32_t>(s1);
    inst.source2 = static_cast<std::uint32_t>(s2);
    inst.label = label_from_levels(l1, l2);
    inst.r1 = sources[s1].pixels;
    inst.r2 = sources[s2].pixels;
    inst.d1 = apply_distortion(inst.r1, {kind, l1, options.levels}, mix_seed(inst_seed, 1));
    inst.d2 = apply_distortion(inst.r2, {kind, l2, options.levels}, mix_seed(inst_seed, 2));
  }
  return ds;
}

namespace {

void put_tensor(std::string& out, const Tensor<float>& t) {
  for (float v : t.values()) io::put_f32(out, v);
}

Tensor<float> get_tensor(io::Reader& in, const Shape& shape) {
  std::vector<float> v(shape_numel(shape));
  for (auto& x : v) x = in.f32();
  return Tensor<float>(shape, std::move(v));
}

std::string meta_path(const std::string& path) { return path + ".meta"; }

}  // namespace

std::string encode_pair_dataset(const PairDataset& ds) {
  std::string out = "RMDS";
  io::put_u32(out, kPairVersion);
  io::put_u64(out, ds.instances.size());
  io::put_u32(out, static_cast<std::uint32_t>(ds.geometry.channels));
  io::put_u32(out, static_cast<std::uint32_t>(ds.geometry.height));
  io::put_u32(out, static_cast<std::uint32_t>(ds.geometry.width));
  const Shape shape{ds.geometry.channels, ds.geometry.height, ds.geometry.width};
  for (const auto& inst : ds.instances) {
    for (const auto* t : {&inst.r1, &inst.d1, &inst.r2, &inst.d2}) {
      if (t->shape() != shape) throw ShapeError("dataset instance does not match dataset geometry");
      put_tensor(out, *t);
    }
    out.push_back(static_cast<char>(inst.label));
  }
  return out;
}

PairDataset decode_pair_dataset(std::string_view bytes) {
  io::Reader in(bytes, "pair dataset");
  if (in.bytes(4) != "RMDS") throw FormatError("not a rankmini pair dataset");
  const auto version = in.u32();
  if (version != kPairVersion)
    throw FormatError("pair dataset version " + std::to_string(version) + " unsupported (expected " +
                      std::to_string(kPairVersion) + ")");
  const auto count = in.u64();
  PairDataset ds;
  ds.geometry.channels = in.u32();
  ds.geometry.height = in.u32();
  ds.geometry.width = in.u32();
  const Shape shape{ds.geometry.channels, ds.geometry.height, ds.geometry.width};
  if (ds.geometry.numel() == 0) throw FormatError("pair dataset has a zero geometry extent");
  const std::size_t record = 4 * 4 * ds.geometry.numel() + 1;
  if (count > in.remaining() / record)
    throw FormatError("pair dataset: truncated (header promises " + std::to_string(count) + " instances)");
  ds.instances.resize(count);
  for (auto& inst : ds.instances) {
    inst.r1 = get_tensor(in, shape);
    inst.d1 = get_tensor(in, shape);
    inst.r2 = get_tensor(in, shape);
    inst.d2 = get_tensor(in, shape);
    inst.label = in.u8();
    if (inst.label > 1) throw FormatError("pair dataset: label byte must be 0 or 1");
  }
  if (in.remaining() != 0) throw FormatError("pair dataset: trailing bytes after last instance");
  return ds;
}

void write_dataset(const std::string& path, const PairDataset& ds, std::string_view provenance) {
  io::write_file(path, encode_pair_dataset(ds));
  std::ostringstream meta;
  meta << "rankmini-dataset-meta 1\n";
  std::istringstream prov{std::string(provenance)};
  for (std::string line; std::getline(prov, line);) meta << "config " << line << "\n";
  meta << "count " << ds.instances.size() << "\n";
  for (std::size_t i = 0; i < ds.instances.size(); ++i) {
    const auto& inst = ds.instances[i];
    meta << "instance " << i << " " << distortion_name(inst.kind) << " " << int(inst.level1) << " "
         << int(inst.level2) << " " << inst.source1 << " " << inst.source2 << " " << int(inst.label) << "\n";
  }
  io::write_file(meta_path(path), meta.str());
}

PairDataset read_dataset(const std::string& path) {
  PairDataset ds;
  try {
    ds = decode_pair_dataset(io::read_file(path));
  } catch (const FormatError& e) {
    throw FormatError(path + ": " + e.what());
  }
  if (!std::filesystem::exists(meta_path(path))) return ds;
  std::istringstream meta(io::read_file(meta_path(path)));
  std::string line;
  std::size_t seen = 0;
  while (std::getline(meta, line)) {
    std::istringstream in(line);
    std::string tag;
    in >> tag;
    if (tag == "count") {
      std::size_t n = 0;
      in >> n;
      if (n != ds.instances.size()) throw FormatError(meta_path(path) + ": count does not match container");
    } else if (tag == "instance") {
      std::size_t i = 0;
      std::string kind;
      int l1 = 0, l2 = 0, label = 0;
      std::uint32_t s1 = 0, s2 = 0;
      if (!(in >> i >> kind >> l1 >> l2 >> s1 >> s2 >> label) || i >= ds.instances.size())
        throw FormatError(meta_path(path) + ": malformed instance line");
      auto& inst = ds.instances[i];
      inst.kind = parse_distortion(kind);
      inst.level1 = static_cast<std::uint8_t>(l1);
      inst.level2 = static_cast<std::uint8_t>(l2);
      inst.source1 = s1;
      inst.source2 = s2;
      if (label != inst.label) throw FormatError(meta_path(path) + ": label disagrees with container");
      ++seen;
    }
  }
  if (seen != ds.instances.size()) throw FormatError(meta_path(path) + ": metadata incomplete");
  return ds;
}

EvalSet make_eval_set(DistortionKind kind, const EvalOptions& options) {
  if (options.sources == 0 || options.frames == 0) throw ConfigError("eval set needs sources and frames");
  if (options.levels < 1) throw ConfigError("eval set needs at least one level");
  EvalSet set;
  set.name = std::string(distortion_name(kind));
  set.frames = options.frames;
  set.height = options.height;
  set.width = options.width;
  const Shape shape{options.frames, 1, options.height, options.width};
  const std::uint64_t kind_seed = mix_seed(options.seed, 100 + static_cast<std::uint64_t>(kind));
  for (std::size_t s = 0; s < options.sources; ++s) {
    const auto gen = static_cast<Generator>(s % kGeneratorCount);
    const auto src_seed = mix_seed(kind_seed, s);
    Tensor<float> ref(shape);
    const std::size_t plane = options.height * options.width;
    for (std::size_t f = 0; f < options.frames; ++f) {
      const auto frame = render_frame(gen, src_seed, options.height, options.width, f);
      std::copy_n(frame.data(), plane, ref.data() + f * plane);
    }
    for (int level = 1; level <= options.levels; ++level) {
      const auto item_seed = mix_seed(src_seed, static_cast<std::uint64_t>(level));
      Rng jitter(mix_seed(item_seed, 0x3055));
      EvalItem item;
      item.kind = kind;
      item.level = static_cast<std::uint8_t>(level);
      item.source = static_cast<std::uint32_t>(s);
      item.mos = static_cast<float>(options.levels - level + jitter.uniform(-0.2, 0.2));
      item.ref = ref;
      item.dist = Tensor<float>(shape);
      for (std::size_t f = 0; f < options.frames; ++f) {
        Tensor<float> frame(Shape{1, options.height, options.width},
                            std::vector<float>(ref.data() + f * plane, ref.data() + (f + 1) * plane));
        const auto d = apply_distortion(frame, {kind, level, options.levels}, mix_seed(item_seed, 1 + f));
        std::copy_n(d.data(), plane, item.dist.data() + f * plane);
      }
      set.items.push_back(std::move(item));
    }
  }
  return set;
}

std::string encode_eval_set(const EvalSet& set) {
  std::string out = "RMEV";
  io::put_u32(out, kEvalVersion);
  io::put_u64(out, set.items.size());
  io::put_u32(out, static_cast<std::uint32_t>(set.frames));
  io::put_u32(out, static_cast<std::uint32_t>(set.height));
  io::put_u32(out, static_cast<std::uint32_t>(set.width));
  io::put_u32(out, static_cast<std::uint32_t>(set.name.size()));
  out += set.name;
  const Shape shape{set.frames, 1, set.height, set.width};
  for (const auto& item : set.items) {
    if (item.ref.shape() != shape || item.dist.shape() != shape)
      throw ShapeError("eval item does not match eval set geometry");
    out.push_back(static_cast<char>(item.kind));
    out.push_back(static_cast<char>(item.level));
    io::put_u32(out, item.source);
    io::put_f32(out, item.mos);
    put_tensor(out, item.ref);
    put_tensor(out, item.dist);
  }
  return out;
}

EvalSet decode_eval_set(std::string_view bytes) {
  io::Reader in(bytes, "eval set");
  if (in.bytes(4) != "RMEV") throw FormatError("not a rankmini eval set");
  const auto version = in.u32();
  if (version != kEvalVersion)
    throw FormatError("eval set version " + std::to_string(version) + " unsupported (expected " +
                      std::to_string(kEvalVersion) + ")");
  const auto count = in.u64();
  EvalSet set;
  set.frames = in.u32();
  set.height = in.u32();
  set.width = in.u32();
  set.name = std::string(in.bytes(in.u32()));
  if (set.frames * set.height * set.width == 0) throw FormatError("eval set has a zero geometry extent");
  const Shape shape{set.frames, 1, set.height, set.width};
  const std::size_t record = 10 + 2 * 4 * shape_numel(shape);
  if (count > in.remaining() / record)
    throw FormatError("eval set: truncated (header promises " + std::to_string(count) + " items)");
  set.items.resize(count);
  for (auto& item : set.items) {
    const auto kind = in.u8();
    if (kind > static_cast<std::uint8_t>(DistortionKind::DownUp)) throw FormatError("eval set: unknown distortion kind");
    item.kind = static_cast<DistortionKind>(kind);
    item.level = in.u8();
    item.source = in.u32();
    item.mos = in.f32();
    item.ref = get_tensor(in, shape);
    item.dist = get_tensor(in, shape);
  }
  if (in.remaining() != 0) throw FormatError("eval set: trailing bytes after last item");
  return set;
}

void write_eval_set(const std::string& path, const EvalSet& set) { io::write_file(path, encode_eval_set(set)); }

EvalSet read_eval_set(const std::string& path) {
  try {
    return decode_eval_set(io::read_file(path));
  } catch (const FormatError& e) {
    throw FormatError(path + ": " + e.what());
  }
}

PairBatch gather_batch(const PairDataset& ds, const std::vector<std::size_t>& indices) {
  if (indices.empty()) throw std::invalid_argument("gather_batch: empty selection");
  const std::size_t n = indices.size(), numel = ds.geometry.numel();
  PairBatch b{Tensor<float>(ds.geometry.batch_shape(n)), Tensor<float>(ds.geometry.batch_shape(n)),
              Tensor<float>(ds.geometry.batch_shape(n)), Tensor<float>(ds.geometry.batch_shape(n)), {}};
  b.labels.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& inst = ds.instances.at(indices[i]);
    std::copy_n(inst.r1.data(), numel, b.r1.data() + i * numel);
    std::copy_n(inst.d1.data(), numel, b.d1.data() + i * numel);
    std::copy_n(inst.r2.data(), numel, b.r2.data() + i * numel);
    std::copy_n(inst.d2.data(), numel, b.d2.data() + i * numel);
    b.labels.push_back(static_cast<float>(inst.label));
  }
  return b;
}

}  // namespace rankmini::data
