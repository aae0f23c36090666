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

#include "rankmini/training.hpp"

#include <cmath>
#include <numeric>
#include <sstream>

#include "rankmini/errors.hpp"
#include "rankmini/losses.hpp"
#include "rankmini/rng.hpp"

namespace rankmini {

std::string_view phase_name(Phase phase) {
  switch (phase) {
    case Phase::Dense: return "dense";
    case Phase::Prox: return "prox";
    case Phase::Orthant: return "orthant";
  }
  return "?";
}

std::string training_log_csv(const TrainLog& log) {
  std::ostringstream out;
  out.precision(9);
  out << "epoch,phase,loss,l1,nonzero,accuracy\n";
  for (const auto& r : log.epochs)
    out << r.epoch << ',' << phase_name(r.phase) << ',' << r.loss << ',' << r.l1 << ',' << r.nonzero << ','
        << r.accuracy << '\n';
  return out.str();
}

namespace {

template <typename F>
void for_batches(std::size_t n, std::size_t batch, F&& f) {
  std::vector<std::size_t> idx;
  for (std::size_t start = 0; start < n; start += batch) {
    idx.resize(std::min(batch, n - start));
    std::iota(idx.begin(), idx.end(), start);
    f(idx);
  }
}

}  // namespace

double pair_accuracy(const NetworkSpec& spec, const ParameterSet<float>& params, const data::PairDataset& ds,
                     std::size_t batch) {
  if (ds.instances.empty()) throw std::invalid_argument("pair_accuracy: empty dataset");
  double hits = 0.0;
  for_batches(ds.instances.size(), batch, [&](const std::vector<std::size_t>& idx) {
    const auto b = data::gather_batch(ds, idx);
    const auto preds = forward_pairs(spec, params, b.r1, b.d1, b.r2, b.d2);
    for (std::size_t i = 0; i < idx.size(); ++i) {
      const double p = preds[i].p;
      if (p == 0.5) hits += 0.5;
      else if ((p > 0.5) == (b.labels[i] > 0.5f)) hits += 1.0;
    }
  });
  return hits / static_cast<double>(ds.instances.size());
}

double ranking_objective(const NetworkSpec& spec, const ParameterSet<float>& params, const data::PairDataset& ds,
                         double lambda, std::size_t batch) {
  if (ds.instances.empty()) throw std::invalid_argument("ranking_objective: empty dataset");
  double acc = 0.0;
  for_batches(ds.instances.size(), batch, [&](const std::vector<std::size_t>& idx) {
    const auto b = data::gather_batch(ds, idx);
    const auto preds = forward_pairs(spec, params, b.r1, b.d1, b.r2, b.d2);
    for (std::size_t i = 0; i < idx.size(); ++i) acc += ranking_bce_loss(preds[i].p, b.labels[i]);
  });
  return acc / static_cast<double>(ds.instances.size()) + lambda * l1_norm(params);
}

std::vector<std::size_t> epoch_order(std::size_t n, std::uint64_t seed, int epoch) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(mix_seed(seed, static_cast<std::uint64_t>(epoch)));
  shuffle(order, rng);
  return order;
}

TrainLog train_ranking(Model<float>& model, const data::PairDataset& train, const data::PairDataset& val,
                       const OptimizerConfig& config, bool sparsify, int start_epoch, const EpochCallback& on_epoch) {
  validate(config);
  if (train.instances.empty()) throw std::invalid_argument("training set is empty");
  if (train.geometry != model.spec.input || val.geometry != model.spec.input)
    throw ConfigError("dataset patch geometry does not match the network input");

  TrainLog log;
  AdamaxState<float> state;
  const bool penalized = sparsify && config.lambda > 0.0;
  const std::size_t n = train.instances.size();

  for (int epoch = start_epoch; epoch < config.epochs; ++epoch) {
    const Phase phase = !penalized ? Phase::Dense : epoch < config.switch_epoch() ? Phase::Prox : Phase::Orthant;
    const ParameterSet<float> last_good = model.params;
    double loss_sum = 0.0;
    try {
      const auto order = epoch_order(n, config.seed, epoch);
      for (std::size_t start = 0; start < n; start += config.batch) {
        const std::vector<std::size_t> idx(order.begin() + static_cast<std::ptrdiff_t>(start),
                                           order.begin() + static_cast<std::ptrdiff_t>(std::min(n, start + config.batch)));
        const auto b = data::gather_batch(train, idx);
        SignSnapshot signs;
        if (phase == Phase::Orthant) signs = capture_signs(model.params);

        ad::Tape<float> tape;
        const auto bound = ad::bind(tape, model.params, true);
        const auto pv = ad::forward_pair(tape, model.spec, bound, tape.constant(b.r1), tape.constant(b.d1),
                                         tape.constant(b.r2), tape.constant(b.d2));
        const ad::Var loss = ad::bce_mean<float>(tape, pv.p, b.labels);
        const float value = tape.value(loss)[0];
        if (!std::isfinite(value)) throw NumericalError("non-finite loss at epoch " + std::to_string(epoch + 1));
        tape.backward(loss);
        model.params.clear_grads();
        ad::collect_grads(tape, bound, model.params);
        adamax_step(model.params, state, config);
        if (phase == Phase::Prox) prox_l1_step(model.params, config.lr, config.lambda);
        if (phase == Phase::Orthant) orthant_step(model.params, signs, config.lr, config.lambda);
        loss_sum += static_cast<double>(value) * static_cast<double>(idx.size());
      }
      model.params.clear_grads();
      for (const auto& e : model.params.entries)
        if (!e.weight.value.all_finite() || !e.bias.value.all_finite())
          throw NumericalError("non-finite parameter in layer '" + e.layer + "'");
    } catch (const NumericalError& e) {
      model.params = last_good;
      log.diverged = true;
      log.message = e.what();
      return log;
    }

    EpochRecord rec;
    rec.epoch = epoch + 1;
    rec.phase = phase;
    rec.loss = loss_sum / static_cast<double>(n);
    rec.l1 = l1_norm(model.params);
    rec.nonzero = nonzero_weights(model.params);
    rec.accuracy = val.instances.empty() ? 0.0 : pair_accuracy(model.spec, model.params, val);
    log.epochs.push_back(rec);
    if (on_epoch) on_epoch(rec, model);
  }
  return log;
}

}  // namespace rankmini
