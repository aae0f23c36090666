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

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "rankmini/distill.hpp"
#include "rankmini/network.hpp"
#include "rankmini/optim.hpp"

namespace rankmini {

struct PipelineConfig {
  std::uint64_t seed = 1;
  std::string out_dir = "run";

  PatchGeometry patch{1, 16, 16};
  int levels = 6;
  bool cross_content = false;
  std::size_t train_sources = 64;
  std::size_t val_sources = 16;
  std::size_t train_pairs = 2048;
  std::size_t val_pairs = 512;
  std::size_t test_pairs = 512;
  std::size_t eval_sources = 12;
  std::size_t eval_frames = 4;
  std::size_t eval_height = 32;
  std::size_t eval_width = 32;

  std::vector<std::size_t> widths{32, 64, 128};
  std::size_t head_width = 64;
  double width_multiplier = 1.0;
  std::size_t kernel = 3;

  double lr = 2e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  std::size_t batch = 16;
  int epochs = 30;

  double lambda = 0.1;
  int sparse_epochs = 30;
  int orthant_epoch = -1;
  /// "teacher": fine-tune the trained teacher; "scratch": sparsify a fresh init.
  std::string sparsify_from = "teacher";

  double alpha = 0.1;
  int distill_epochs = 30;

  TeacherConfig teacher_config() const;
  OptimizerConfig teacher_optimizer() const;
  OptimizerConfig sparse_optimizer() const;
  DistillConfig distill_config() const;
};

struct ConfigKey {
  std::string_view name;
  std::string_view doc;
};

/// Every key with its description, in echo order.
const std::vector<ConfigKey>& config_keys();

/// Throws ConfigError on an unknown key or an unparsable value.
void set_config_value(PipelineConfig& config, std::string_view key, std::string_view value);
std::string get_config_value(const PipelineConfig& config, std::string_view key);

/// key=value lines; '#' starts a comment; blank lines ignored.
void apply_config_text(PipelineConfig& config, std::string_view text);
PipelineConfig load_config(const std::string& path);

/// Range checks across keys; throws ConfigError.
void validate(const PipelineConfig& config);

/// All keys as key=value lines, suitable for apply_config_text.
std::string config_text(const PipelineConfig& config);

}  // namespace rankmini
