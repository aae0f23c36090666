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

#include <functional>
#include <string>
#include <vector>

#include "rankmini/data.hpp"
#include "rankmini/network.hpp"
#include "rankmini/optim.hpp"

namespace rankmini {

enum class Phase { Dense, Prox, Orthant };
std::string_view phase_name(Phase phase);

struct EpochRecord {
  int epoch = 0;  // 1-based count of completed epochs
  Phase phase = Phase::Dense;
  double loss = 0.0;  // mean ranking BCE over the epoch's batches
  double l1 = 0.0;
  std::size_t nonzero = 0;
  double accuracy = 0.0;  // held-out
};

struct TrainLog {
  std::vector<EpochRecord> epochs;
  bool diverged = false;
  std::string message;
};

/// epoch,phase,loss,l1,nonzero,accuracy
std::string training_log_csv(const TrainLog& log);

/// Fraction of instances whose predicted preference agrees with the label;
/// p == 0.5 counts as half.
double pair_accuracy(const NetworkSpec& spec, const ParameterSet<float>& params, const data::PairDataset& ds,
                     std::size_t batch = 64);

/// Mean ranking BCE over `ds` plus lambda * ||w||_1.
double ranking_objective(const NetworkSpec& spec, const ParameterSet<float>& params, const data::PairDataset& ds,
                         double lambda, std::size_t batch = 64);

/// Batch order for one epoch; a pure function of (seed, epoch).
std::vector<std::size_t> epoch_order(std::size_t n, std::uint64_t seed, int epoch);

using EpochCallback = std::function<void(const EpochRecord&, const Model<float>&)>;

/// AdaMax on the ranking BCE for epochs [start_epoch, config.epochs). With
/// `sparsify` and lambda > 0, epochs before config.switch_epoch() apply a
/// soft-threshold after each step and later epochs apply orthant steps.
/// On a non-finite loss or gradient the model is restored to the end of the
/// last completed epoch and the log is marked diverged.
TrainLog train_ranking(Model<float>& model, const data::PairDataset& train, const data::PairDataset& val,
                       const OptimizerConfig& config, bool sparsify = false, int start_epoch = 0,
                       const EpochCallback& on_epoch = {});

inline TrainLog train_sparse(Model<float>& model, const data::PairDataset& train, const data::PairDataset& val,
                             const OptimizerConfig& config, const EpochCallback& on_epoch = {}) {
  return train_ranking(model, train, val, config, true, 0, on_epoch);
}

}  // namespace rankmini
