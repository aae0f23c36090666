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

#include <string>
#include <vector>

#include "rankmini/data.hpp"
#include "rankmini/network.hpp"
#include "rankmini/optim.hpp"
#include "rankmini/training.hpp"

namespace rankmini {

struct DistillConfig {
  double alpha = 0.1;  // weight of the ground-truth ranking term
  OptimizerConfig optimizer;  // lambda is ignored
};

struct DistillRecord {
  int epoch = 0;
  double instance = 0.0;
  double batch = 0.0;
  double cls = 0.0;
  double ranking = 0.0;
  double total = 0.0;
  double accuracy = 0.0;  // held-out
};

struct DistillLog {
  std::vector<DistillRecord> epochs;
  bool diverged = false;
  std::string message;
};

/// epoch,instance,batch,class,ranking,total,accuracy
std::string distill_log_csv(const DistillLog& log);

/// Preference probabilities of a model over every instance, in order.
std::vector<float> predict_preferences(const Model<float>& model, const data::PairDataset& ds,
                                       std::size_t batch = 64);

using DistillCallback = std::function<void(const DistillRecord&, const Model<float>&)>;

/// Trains the student with AdaMax on multilevel + alpha * ranking BCE. The
/// teacher is only read: its predictions are computed once up front. Loss
/// columns are means over the epoch's batches.
DistillLog distill_train(const Model<float>& teacher, Model<float>& student, const data::PairDataset& train,
                         const data::PairDataset& val, const DistillConfig& config,
                         const DistillCallback& on_epoch = {});

}  // namespace rankmini
