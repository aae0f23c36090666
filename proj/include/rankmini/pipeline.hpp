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

#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "rankmini/checkpoint.hpp"
#include "rankmini/config.hpp"
#include "rankmini/data.hpp"
#include "rankmini/eval.hpp"

namespace rankmini {

/// Artifact locations under one output directory.
struct PipelinePaths {
  explicit PipelinePaths(const std::string& out_dir);

  std::string root;
  std::string data_dir;
  std::string train, val, test, manifest;
  std::string teacher, teacher_log;
  std::string sparse, sparse_log, density;
  std::string student, plan;
  std::string distilled, distill_log;
  std::string eval_dir;

  std::string eval_set(data::DistortionKind kind) const;
};

/// Writes `<out_dir>/<stage>.config.txt` holding every effective key.
void echo_config(const PipelineConfig& config, const std::string& stage);

struct Corpus {
  data::PairDataset train, val, test;
};
Corpus make_corpus(const PipelineConfig& config);
std::vector<data::EvalSet> make_eval_sets(const PipelineConfig& config);

/// Train/val/test containers, one evaluation set per distortion kind, and a manifest.
void stage_gen_data(const PipelineConfig& config, std::ostream& log);

/// Trains the teacher. With `resume`, continues from that checkpoint's epoch.
void stage_train_teacher(const PipelineConfig& config, std::ostream& log, const std::string& resume = {});

/// Refuses checkpoints that are not teacher-shaped under `config`.
void stage_sparsify(const PipelineConfig& config, std::ostream& log, const std::string& teacher_path = {});

void stage_prune(const PipelineConfig& config, std::ostream& log, const std::string& sparse_path = {});

/// With `freeze_check`, verifies the teacher's parameter hash before and after.
void stage_distill(const PipelineConfig& config, std::ostream& log, const std::string& teacher_path = {},
                   const std::string& student_path = {}, bool freeze_check = false);

enum class ReportFormat { Table, Csv };

/// Evaluates each (name, checkpoint) on the evaluation sets; the first model
/// is the reference for F-tests and ratios. Writes report files and prints
/// the selected form to `out`.
std::vector<EvalReport> stage_eval(const PipelineConfig& config, std::ostream& out,
                                   const std::vector<std::pair<std::string, std::string>>& models = {},
                                   ReportFormat format = ReportFormat::Table,
                                   const std::vector<std::string>& eval_paths = {});

/// gen-data, train-teacher, sparsify, prune, distill, eval.
void run_pipeline(const PipelineConfig& config, std::ostream& log);

}  // namespace rankmini
