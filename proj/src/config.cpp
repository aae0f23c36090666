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

#include "rankmini/config.hpp"

#include <charconv>
#include <functional>
#include <sstream>

#include "rankmini/binary_io.hpp"
#include "rankmini/errors.hpp"
#include "rankmini/rng.hpp"

namespace rankmini {

TeacherConfig PipelineConfig::teacher_config() const {
  TeacherConfig t;
  t.geometry = patch;
  t.widths = widths;
  t.head_width = head_width;
  t.width_multiplier = width_multiplier;
  t.kernel = kernel;
  t.seed = mix_seed(seed, 10);
  return t;
}

OptimizerConfig PipelineConfig::teacher_optimizer() const {
  OptimizerConfig o;
  o.lr = lr;
  o.beta1 = beta1;
  o.beta2 = beta2;
  o.lambda = 0.0;
  o.epochs = epochs;
  o.batch = batch;
  o.seed = mix_seed(seed, 11);
  return o;
}

OptimizerConfig PipelineConfig::sparse_optimizer() const {
  OptimizerConfig o = teacher_optimizer();
  o.lambda = lambda;
  o.epochs = sparse_epochs;
  o.orthant_epoch = orthant_epoch;
  o.seed = mix_seed(seed, 12);
  return o;
}

DistillConfig PipelineConfig::distill_config() const {
  DistillConfig d;
  d.alpha = alpha;
  d.optimizer = teacher_optimizer();
  d.optimizer.epochs = distill_epochs;
  d.optimizer.seed = mix_seed(seed, 13);
  return d;
}

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

template <typename T>
T parse_number(std::string_view key, std::string_view v) {
  T out{};
  const auto* end = v.data() + v.size();
  const auto [ptr, ec] = std::from_chars(v.data(), end, out);
  if (ec != std::errc{} || ptr != end || v.empty())
    throw ConfigError("config key '" + std::string(key) + "': cannot parse '" + std::string(v) + "'");
  return out;
}

bool parse_bool(std::string_view key, std::string_view v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError("config key '" + std::string(key) + "': expected true/false, got '" + std::string(v) + "'");
}

std::string show(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

struct Binding {
  ConfigKey key;
  std::function<void(PipelineConfig&, std::string_view)> set;
  std::function<std::string(const PipelineConfig&)> get;
};

template <typename T>
Binding number(std::string_view name, std::string_view doc, T PipelineConfig::*field) {
  return {{name, doc},
          [name, field](PipelineConfig& c, std::string_view v) { c.*field = parse_number<T>(name, v); },
          [field](const PipelineConfig& c) {
            if constexpr (std::is_floating_point_v<T>) return show(c.*field);
            else return std::to_string(c.*field);
          }};
}

template <typename T>
Binding geometry(std::string_view name, std::string_view doc, T PatchGeometry::*field) {
  return {{name, doc},
          [name, field](PipelineConfig& c, std::string_view v) { c.patch.*field = parse_number<T>(name, v); },
          [field](const PipelineConfig& c) { return std::to_string(c.patch.*field); }};
}

const std::vector<Binding>& bindings() {
  static const std::vector<Binding> table = [] {
    std::vector<Binding> t;
    t.push_back(number("seed", "master seed; every stage derives its own", &PipelineConfig::seed));
    t.push_back({{"out_dir", "directory for all artifacts"},
                 [](PipelineConfig& c, std::string_view v) { c.out_dir = std::string(v); },
                 [](const PipelineConfig& c) { return c.out_dir; }});
    t.push_back(geometry("patch_channels", "frames stacked per patch", &PatchGeometry::channels));
    t.push_back(geometry("patch_height", "patch rows", &PatchGeometry::height));
    t.push_back(geometry("patch_width", "patch columns", &PatchGeometry::width));
    t.push_back(number("levels", "severity levels per distortion kind", &PipelineConfig::levels));
    t.push_back({{"cross_content", "pair different sources (levels then differ by >= 2)"},
                 [](PipelineConfig& c, std::string_view v) { c.cross_content = parse_bool("cross_content", v); },
                 [](const PipelineConfig& c) { return std::string(c.cross_content ? "true" : "false"); }});
    t.push_back(number("train_sources", "source textures behind the training pairs", &PipelineConfig::train_sources));
    t.push_back(number("val_sources", "source textures behind validation and test pairs", &PipelineConfig::val_sources));
    t.push_back(number("train_pairs", "training instances", &PipelineConfig::train_pairs));
    t.push_back(number("val_pairs", "validation instances", &PipelineConfig::val_pairs));
    t.push_back(number("test_pairs", "held-out test instances", &PipelineConfig::test_pairs));
    t.push_back(number("eval_sources", "sources per evaluation set", &PipelineConfig::eval_sources));
    t.push_back(number("eval_frames", "frames per evaluation sequence", &PipelineConfig::eval_frames));
    t.push_back(number("eval_height", "evaluation frame rows", &PipelineConfig::eval_height));
    t.push_back(number("eval_width", "evaluation frame columns", &PipelineConfig::eval_width));
    t.push_back({{"widths", "teacher conv widths, comma separated"},
                 [](PipelineConfig& c, std::string_view v) {
                   std::vector<std::size_t> w;
                   std::size_t start = 0;
                   while (start <= v.size()) {
                     const auto comma = v.find(',', start);
                     const auto part = trim(v.substr(start, comma == std::string_view::npos ? v.npos : comma - start));
                     w.push_back(parse_number<std::size_t>("widths", part));
                     if (comma == std::string_view::npos) break;
                     start = comma + 1;
                   }
                   c.widths = std::move(w);
                 },
                 [](const PipelineConfig& c) {
                   std::string s;
                   for (std::size_t i = 0; i < c.widths.size(); ++i) s += (i ? "," : "") + std::to_string(c.widths[i]);
                   return s;
                 }});
    t.push_back(number("head_width", "hidden units of the dense head", &PipelineConfig::head_width));
    t.push_back(number("width_multiplier", "scales every teacher width", &PipelineConfig::width_multiplier));
    t.push_back(number("kernel", "conv kernel size", &PipelineConfig::kernel));
    t.push_back(number("lr", "AdaMax learning rate (also the prox step size)", &PipelineConfig::lr));
    t.push_back(number("beta1", "AdaMax first-moment decay", &PipelineConfig::beta1));
    t.push_back(number("beta2", "AdaMax infinity-norm decay", &PipelineConfig::beta2));
    t.push_back(number("batch", "instances per step", &PipelineConfig::batch));
    t.push_back(number("epochs", "teacher and scratch training epochs", &PipelineConfig::epochs));
    t.push_back(number("lambda", "L1 weight during sparsification", &PipelineConfig::lambda));
    t.push_back(number("sparse_epochs", "sparsification epochs", &PipelineConfig::sparse_epochs));
    t.push_back(number("orthant_epoch", "epoch where prox steps give way to orthant steps; -1 = half",
                       &PipelineConfig::orthant_epoch));
    t.push_back({{"sparsify_from", "teacher | scratch"},
                 [](PipelineConfig& c, std::string_view v) {
                   if (v != "teacher" && v != "scratch")
                     throw ConfigError("config key 'sparsify_from': expected teacher or scratch");
                   c.sparsify_from = std::string(v);
                 },
                 [](const PipelineConfig& c) { return c.sparsify_from; }});
    t.push_back(number("alpha", "weight of the ground-truth ranking term in distillation", &PipelineConfig::alpha));
    t.push_back(number("distill_epochs", "distillation epochs", &PipelineConfig::distill_epochs));
    return t;
  }();
  return table;
}

const Binding& binding(std::string_view key) {
  for (const auto& b : bindings())
    if (b.key.name == key) return b;
  throw ConfigError("unknown config key '" + std::string(key) + "'");
}

}  // namespace

const std::vector<ConfigKey>& config_keys() {
  static const std::vector<ConfigKey> keys = [] {
    std::vector<ConfigKey> k;
    for (const auto& b : bindings()) k.push_back(b.key);
    return k;
  }();
  return keys;
}

void set_config_value(PipelineConfig& config, std::string_view key, std::string_view value) {
  binding(key).set(config, trim(value));
}

std::string get_config_value(const PipelineConfig& config, std::string_view key) { return binding(key).get(config); }

void apply_config_text(PipelineConfig& config, std::string_view text) {
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto nl = text.find('\n', pos);
    auto line = text.substr(pos, nl == std::string_view::npos ? text.npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos)
      throw ConfigError("config line " + std::to_string(line_no) + ": expected key=value");
    set_config_value(config, trim(line.substr(0, eq)), line.substr(eq + 1));
  }
}

PipelineConfig load_config(const std::string& path) {
  PipelineConfig c;
  std::string text;
  try {
    text = io::read_file(path);
  } catch (const std::exception& e) {
    throw ConfigError(e.what());
  }
  apply_config_text(c, text);
  return c;
}

void validate(const PipelineConfig& c) {
  if (c.patch.channels == 0 || c.patch.height == 0 || c.patch.width == 0)
    throw ConfigError("patch geometry must be positive");
  if (c.levels < 2) throw ConfigError("levels must be >= 2");
  if (c.cross_content && c.levels < 3) throw ConfigError("cross_content needs levels >= 3");
  if (c.train_sources == 0 || c.val_sources == 0 || c.eval_sources == 0) throw ConfigError("source counts must be >= 1");
  if (c.train_pairs == 0) throw ConfigError("train_pairs must be >= 1");
  if (c.eval_frames == 0 || c.eval_frames % c.patch.channels != 0)
    throw ConfigError("eval_frames must be a positive multiple of patch_channels");
  if (c.eval_height < c.patch.height || c.eval_width < c.patch.width)
    throw ConfigError("evaluation frames must be at least one patch in size");
  if (c.eval_sources < 3) throw ConfigError("eval_sources must be >= 3 for rank correlation");
  if (c.widths.empty()) throw ConfigError("widths must list at least one conv width");
  if (!(c.alpha >= 0.0)) throw ConfigError("alpha must be >= 0");
  if (c.epochs < 0 || c.sparse_epochs < 0 || c.distill_epochs < 0) throw ConfigError("epoch counts must be >= 0");
  validate(c.sparse_optimizer());
  build_teacher_spec(c.teacher_config());
}

std::string config_text(const PipelineConfig& config) {
  std::string out;
  for (const auto& b : bindings()) out += std::string(b.key.name) + "=" + b.get(config) + "\n";
  return out;
}

}  // namespace rankmini
