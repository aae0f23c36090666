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

#include "rankmini/distill.hpp"

#include <cmath>
#include <numeric>
#include <sstream>

#include "rankmini/errors.hpp"
#include "rankmini/losses.hpp"

namespace rankmini {

std::string distill_log_csv(const DistillLog& log) {
  std::ostringstream out;
  out.precision(9);
  out << "epoch,instance,batch,class,ranking,total,accuracy\n";
  for (const auto& r : log.epochs)
    out << r.epoch << ',' << r.instance << ',' << r.batch << ',' << r.cls << ',' << r.ranking << ',' << r.total << ','
        << r.accuracy << '\n';
  return out.str();
}

std::vector<float> predict_preferences(const Model<float>& model, const data::PairDataset& ds, std::size_t batch) {
  std::vector<float> out;
  out.reserve(ds.instances.size());
  std::vector<std::size_t> idx;
  for (std::size_t start = 0; start < ds.instances.size(); start += batch) {
    idx.resize(std::min(batch, ds.instances.size() - start));
    std::iota(idx.begin(), idx.end(), start);
    const auto b = data::gather_batch(ds, idx);
    for (const auto& p : forward_pairs(model.spec, model.params, b.r1, b.d1, b.r2, b.d2))
      out.push_back(static_cast<float>(p.p));
  }
  return out;
}

DistillLog distill_train(const Model<float>& teacher, Model<float>& student, const data::PairDataset& train,
                         const data::PairDataset& val, const DistillConfig& config, const DistillCallback& on_epoch) {
  const auto& opt = config.optimizer;
  validate(opt);
  if (!(config.alpha >= 0.0) || !std::isfinite(config.alpha)) throw ConfigError("alpha must be >= 0");
  if (teacher.spec.input != student.spec.input)
    throw ConfigError("teacher and student disagree on input geometry");
  if (train.geometry != student.spec.input || val.geometry != student.spec.input)
    throw ConfigError("dataset patch geometry does not match the network input");
  if (train.instances.empty()) throw std::invalid_argument("training set is empty");

  DistillLog log;
  if (opt.epochs == 0) return log;
  const auto teacher_p = predict_preferences(teacher, train);

  AdamaxState<float> state;
  const std::size_t n = train.instances.size();
  for (int epoch = 0; epoch < opt.epochs; ++epoch) {
    const ParameterSet<float> last_good = student.params;
    DistillRecord rec;
    rec.epoch = epoch + 1;
    std::size_t batches = 0;
    try {
      const auto order = epoch_order(n, opt.seed, epoch);
      for (std::size_t start = 0; start < n; start += opt.batch) {
        const std::vector<std::size_t> idx(order.begin() + static_cast<std::ptrdiff_t>(start),
                                           order.begin() + static_cast<std::ptrdiff_t>(std::min(n, start + opt.batch)));
        const auto b = data::gather_batch(train, idx);
        std::vector<float> pt(idx.size());
        for (std::size_t i = 0; i < idx.size(); ++i) pt[i] = teacher_p[idx[i]];

        ad::Tape<float> tape;
        const auto bound = ad::bind(tape, student.params, true);
        const auto pv = ad::forward_pair(tape, student.spec, bound, tape.constant(b.r1), tape.constant(b.d1),
                                         tape.constant(b.r2), tape.constant(b.d2));
        const auto terms = ad::distill_objective<float>(tape, pv.p, pt, b.labels, static_cast<float>(config.alpha));
        const float total = tape.value(terms.total)[0];
        if (!std::isfinite(total)) throw NumericalError("non-finite loss at epoch " + std::to_string(epoch + 1));
        tape.backward(terms.total);
        student.params.clear_grads();
        ad::collect_grads(tape, bound, student.params);
        adamax_step(student.params, state, opt);

        rec.instance += tape.value(terms.instance)[0];
        rec.batch += tape.value(terms.batch)[0];
        rec.cls += tape.value(terms.cls)[0];
        rec.ranking += tape.value(terms.ranking)[0];
        rec.total += total;
        ++batches;
      }
      student.params.clear_grads();
      for (const auto& e : student.params.entries)
        if (!e.weight.value.all_finite() || !e.bias.value.all_finite())
          throw NumericalError("non-finite parameter in layer '" + e.layer + "'");
    } catch (const NumericalError& e) {
      student.params = last_good;
      log.diverged = true;
      log.message = e.what();
      return log;
    }
    const double nb = static_cast<double>(batches);
    rec.instance /= nb;
    rec.batch /= nb;
    rec.cls /= nb;
    rec.ranking /= nb;
    rec.total /= nb;
    rec.accuracy = val.instances.empty() ? 0.0 : pair_accuracy(student.spec, student.params, val);
    log.epochs.push_back(rec);
    if (on_epoch) on_epoch(rec, student);
  }
  return log;
}

}  // namespace rankmini
