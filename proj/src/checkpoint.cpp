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

#include "rankmini/checkpoint.hpp"

#include <bit>
#include <cstdio>
#include <sstream>
#include <vector>

#include "rankmini/binary_io.hpp"

namespace rankmini {

namespace {

constexpr std::string_view kMagic = "rankmini-checkpoint";
constexpr int kVersion = 1;

std::string join_shape(const Shape& s) {
  std::string out;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i) out += ',';
    out += std::to_string(s[i]);
  }
  return out;
}

Shape parse_shape(const std::string& text) {
  Shape s;
  std::istringstream in(text);
  std::string part;
  while (std::getline(in, part, ',')) {
    try {
      s.push_back(std::stoul(part));
    } catch (const std::exception&) {
      throw FormatError("checkpoint: bad shape '" + text + "'");
    }
  }
  return s;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string layer_line(const LayerSpec& l) {
  std::string out = "layer " + l.name + " " + std::string(layer_kind_name(l.kind));
  switch (l.kind) {
    case LayerKind::Conv2d:
      out += " in=" + std::to_string(l.in_channels) + " out=" + std::to_string(l.out_channels) +
             " kernel=" + std::to_string(l.kernel) + " stride=" + std::to_string(l.stride) +
             " padding=" + std::to_string(l.padding);
      break;
    case LayerKind::Dense:
      out += " in=" + std::to_string(l.in_channels) + " out=" + std::to_string(l.out_channels);
      break;
    case LayerKind::AvgPool: out += " factor=" + std::to_string(l.factor); break;
    default: break;
  }
  return out;
}

LayerSpec parse_layer(std::istringstream& in) {
  LayerSpec l;
  std::string kind;
  if (!(in >> l.name >> kind)) throw FormatError("checkpoint: malformed layer line");
  l.kind = parse_layer_kind(kind);
  std::string kv;
  while (in >> kv) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw FormatError("checkpoint: malformed layer attribute '" + kv + "'");
    const auto key = kv.substr(0, eq);
    std::size_t value = 0;
    try {
      value = std::stoul(kv.substr(eq + 1));
    } catch (const std::exception&) {
      throw FormatError("checkpoint: bad value in '" + kv + "'");
    }
    if (key == "in") l.in_channels = value;
    else if (key == "out") l.out_channels = value;
    else if (key == "kernel") l.kernel = value;
    else if (key == "stride") l.stride = value;
    else if (key == "padding") l.padding = value;
    else if (key == "factor") l.factor = value;
    else throw FormatError("checkpoint: unknown layer attribute '" + key + "'");
  }
  return l;
}

}  // namespace

std::string encode_checkpoint(const Checkpoint& ckpt) {
  std::string manifest;
  manifest += std::string(kMagic) + " " + std::to_string(kVersion) + "\n";
  manifest += "input " + std::to_string(ckpt.spec.input.channels) + " " + std::to_string(ckpt.spec.input.height) +
              " " + std::to_string(ckpt.spec.input.width) + "\n";
  for (const auto& [k, v] : ckpt.meta) {
    if (k.find_first_of(" \n") != std::string::npos || v.find('\n') != std::string::npos)
      throw std::invalid_argument("checkpoint metadata must be single-line with a space-free key");
    manifest += "meta " + k + " " + v + "\n";
  }
  for (const auto& l : ckpt.spec.layers) manifest += layer_line(l) + "\n";

  std::string blob;
  std::size_t offset = 0;
  for (const auto& e : ckpt.params.entries) {
    const auto* layer = ckpt.spec.find(e.layer);
    if (!layer) throw StructureError("checkpoint: parameters for unknown layer '" + e.layer + "'");
    for (const auto& [suffix, tensor] : {std::pair{"weight", &e.weight.value}, std::pair{"bias", &e.bias.value}}) {
      manifest += "tensor " + e.layer + "." + suffix + " " + std::string(layer_kind_name(layer->kind)) + " " +
                  join_shape(tensor->shape()) + " " + std::to_string(offset) + "\n";
      for (float v : tensor->values()) io::put_f32(blob, v);
      offset += tensor->numel() * 4;
    }
  }
  manifest += "blob " + std::to_string(blob.size()) + "\n";
  const auto hash = io::fnv1a64(std::span(reinterpret_cast<const unsigned char*>(blob.data()), blob.size()),
                                io::fnv1a64(manifest));
  return manifest + "checksum fnv1a64 " + hex64(hash) + "\nend\n" + blob;
}

Checkpoint decode_checkpoint(std::string_view bytes) {
  Checkpoint ckpt;
  std::size_t pos = 0;
  auto next_line = [&]() -> std::string {
    const auto nl = bytes.find('\n', pos);
    if (nl == std::string_view::npos) throw FormatError("checkpoint: truncated manifest");
    std::string line(bytes.substr(pos, nl - pos));
    pos = nl + 1;
    return line;
  };

  {
    std::istringstream head(next_line());
    std::string magic;
    int version = 0;
    head >> magic >> version;
    if (magic != kMagic) throw FormatError("not a rankmini checkpoint");
    if (version != kVersion)
      throw FormatError("checkpoint version " + std::to_string(version) + " unsupported (expected " +
                        std::to_string(kVersion) + ")");
  }

  struct TensorEntry {
    std::string layer;
    bool is_weight;
    Shape shape;
    std::size_t offset;
  };
  std::vector<TensorEntry> tensors;
  std::size_t blob_size = 0;
  bool have_blob = false;
  std::string checksum;
  std::size_t manifest_end = 0;

  for (;;) {
    const std::size_t line_start = pos;
    const std::string line = next_line();
    std::istringstream in(line);
    std::string tag;
    in >> tag;
    if (tag == "input") {
      if (!(in >> ckpt.spec.input.channels >> ckpt.spec.input.height >> ckpt.spec.input.width))
        throw FormatError("checkpoint: malformed input line");
    } else if (tag == "meta") {
      std::string key;
      in >> key;
      std::string value;
      std::getline(in, value);
      if (!value.empty() && value.front() == ' ') value.erase(0, 1);
      ckpt.meta[key] = value;
    } else if (tag == "layer") {
      ckpt.spec.layers.push_back(parse_layer(in));
    } else if (tag == "tensor") {
      std::string name, kind, shape;
      std::size_t offset = 0;
      if (!(in >> name >> kind >> shape >> offset)) throw FormatError("checkpoint: malformed tensor line");
      const auto dot = name.rfind('.');
      if (dot == std::string::npos) throw FormatError("checkpoint: tensor name '" + name + "' lacks a suffix");
      const auto suffix = name.substr(dot + 1);
      if (suffix != "weight" && suffix != "bias") throw FormatError("checkpoint: unknown tensor '" + name + "'");
      tensors.push_back({name.substr(0, dot), suffix == "weight", parse_shape(shape), offset});
    } else if (tag == "blob") {
      if (!(in >> blob_size)) throw FormatError("checkpoint: malformed blob line");
      have_blob = true;
    } else if (tag == "checksum") {
      manifest_end = line_start;
      std::string algo;
      in >> algo >> checksum;
      if (algo != "fnv1a64") throw FormatError("checkpoint: unsupported checksum '" + algo + "'");
    } else if (tag == "end") {
      break;
    } else {
      throw FormatError("checkpoint: unexpected manifest line '" + line + "'");
    }
  }
  if (!have_blob || checksum.empty()) throw FormatError("checkpoint: manifest lacks blob size or checksum");

  const auto blob = bytes.substr(pos);
  if (blob.size() < blob_size)
    throw FormatError("checkpoint: truncated blob (" + std::to_string(blob.size()) + " of " +
                      std::to_string(blob_size) + " bytes)");
  if (blob.size() > blob_size) throw FormatError("checkpoint: trailing bytes after blob");
  const auto hash = io::fnv1a64(std::span(reinterpret_cast<const unsigned char*>(blob.data()), blob.size()),
                                io::fnv1a64(bytes.substr(0, manifest_end)));
  if (hex64(hash) != checksum) throw FormatError("checkpoint: checksum mismatch (file corrupted)");

  for (const auto& t : tensors) {
    const std::size_t n = shape_numel(t.shape);
    if (t.offset + n * 4 > blob.size()) throw FormatError("checkpoint: tensor '" + t.layer + "' runs past blob end");
    std::vector<float> values(n);
    for (std::size_t i = 0; i < n; ++i) {
      std::uint32_t u = 0;
      for (int b = 0; b < 4; ++b)
        u |= static_cast<std::uint32_t>(static_cast<unsigned char>(blob[t.offset + i * 4 + b])) << (8 * b);
      values[i] = std::bit_cast<float>(u);
    }
    auto* entry = ckpt.params.find(t.layer);
    if (!entry) {
      ckpt.params.entries.push_back({t.layer, {}, {}});
      entry = &ckpt.params.entries.back();
    }
    (t.is_weight ? entry->weight : entry->bias).value = Tensor<float>(t.shape, std::move(values));
  }
  return ckpt;
}

void save_checkpoint(const std::string& path, const Checkpoint& ckpt) { io::write_file(path, encode_checkpoint(ckpt)); }

Checkpoint load_checkpoint(const std::string& path) {
  try {
    return decode_checkpoint(io::read_file(path));
  } catch (const FormatError& e) {
    throw FormatError(path + ": " + e.what());
  }
}

std::uint64_t params_hash(const ParameterSet<float>& params) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const auto& e : params.entries) {
    h = io::fnv1a64(e.layer, h);
    for (const auto* t : {&e.weight.value, &e.bias.value}) {
      const auto v = t->values();
      h = io::fnv1a64(std::span(reinterpret_cast<const unsigned char*>(v.data()), v.size_bytes()), h);
    }
  }
  return h;
}

}  // namespace rankmini
