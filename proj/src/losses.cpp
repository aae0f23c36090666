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

#include "rankmini/losses.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "rankmini/ops.hpp"

namespace rankmini {

namespace {

template <typename T>
T clamp_prob(T p) {
  return std::clamp(p, T(kProbEps), T(1.0 - kProbEps));
}

template <typename T>
T bce_value(T target, T p) {
  const T q = clamp_prob(p);
  return -(target * std::log(q) + (T(1) - target) * std::log(T(1) - q));
}

template <typename T>
T gram_value(std::span<const T> pt, std::span<const T> ps) {
  const std::size_t b = ps.size();
  T acc = T(0);
  for (std::size_t i = 0; i < b; ++i)
    for (std::size_t j = 0; j < b; ++j) {
      const T d = pt[i] * pt[j] - ps[i] * ps[j];
      acc += d * d;
    }
  return acc / static_cast<T>(b);
}

template <typename T>
T self_inner_gap(std::span<const T> pt, std::span<const T> ps) {
  T tt = T(0), ss = T(0);
  for (std::size_t i = 0; i < ps.size(); ++i) {
    tt += pt[i] * pt[i];
    ss += ps[i] * ps[i];
  }
  return tt - ss;
}

void check_batch(const BatchPredictions& bp) {
  if (bp.p_student.empty()) throw std::invalid_argument("batch must hold at least one instance");
  if (bp.p_teacher.size() != bp.p_student.size())
    throw std::invalid_argument("teacher and student batches differ in length");
}

}  // namespace

double binary_cross_entropy(double target, double p) { return bce_value(target, p); }

double ranking_bce_loss(double p, double label) { return bce_value(label, p); }

double instance_loss(const BatchPredictions& bp) {
  check_batch(bp);
  double acc = 0.0;
  for (std::size_t i = 0; i < bp.size(); ++i) acc += bce_value(bp.p_teacher[i], bp.p_student[i]);
  return acc / static_cast<double>(bp.size());
}

double batch_loss(const BatchPredictions& bp) {
  check_batch(bp);
  return gram_value<double>(bp.p_teacher, bp.p_student);
}

double class_loss(const BatchPredictions& bp) {
  check_batch(bp);
  const double gap = self_inner_gap<double>(bp.p_teacher, bp.p_student);
  return gap * gap;
}

double multilevel_loss(const BatchPredictions& bp) { return instance_loss(bp) + batch_loss(bp) + class_loss(bp); }

double ranking_loss(const BatchPredictions& bp) {
  if (bp.labels.size() != bp.p_student.size()) throw std::invalid_argument("labels and predictions differ in length");
  double acc = 0.0;
  for (std::size_t i = 0; i < bp.size(); ++i) acc += bce_value(bp.labels[i], bp.p_student[i]);
  return acc / static_cast<double>(bp.size());
}

double total_loss(const BatchPredictions& bp, double alpha) { return multilevel_loss(bp) + alpha * ranking_loss(bp); }

namespace ad {

namespace {

template <typename T>
void check_targets(const Tape<T>& tape, Var p, std::size_t n, const char* op) {
  if (tape.value(p).numel() != n || n == 0)
    throw ShapeError(std::string(op) + ": " + std::to_string(tape.value(p).numel()) + " predictions vs " +
                     std::to_string(n) + " targets");
}

}  // namespace

template <typename T>
Var bce_mean(Tape<T>& tape, Var p, std::span<const T> targets) {
  check_targets(tape, p, targets.size(), "bce_mean");
  const auto& pv = tape.value(p);
  T acc = T(0);
  for (std::size_t i = 0; i < targets.size(); ++i) acc += bce_value(targets[i], pv[i]);
  const T n = static_cast<T>(targets.size());
  std::vector<T> y(targets.begin(), targets.end());
  return tape.record(Tensor<T>::scalar(acc / n), {p}, [p, y = std::move(y), n](Tape<T>& t, std::size_t self) {
    const T g = t.grad_of(self)[0];
    const auto& pv = t.value_of(p.id);
    auto& gp = t.grad_buffer(p.id);
    for (std::size_t i = 0; i < y.size(); ++i) {
      const T q = pv[i];
      // clamp is flat outside its range
      if (q < T(kProbEps) || q > T(1.0 - kProbEps)) continue;
      gp[i] += g * (-(y[i] / q) + (T(1) - y[i]) / (T(1) - q)) / n;
    }
  });
}

template <typename T>
Var gram_alignment(Tape<T>& tape, Var p_student, std::span<const T> p_teacher) {
  check_targets(tape, p_student, p_teacher.size(), "gram_alignment");
  const auto& ps = tape.value(p_student);
  const T value = gram_value<T>(p_teacher, ps.values());
  std::vector<T> pt(p_teacher.begin(), p_teacher.end());
  return tape.record(Tensor<T>::scalar(value), {p_student}, [p_student, pt = std::move(pt)](Tape<T>& t, std::size_t self) {
    const T g = t.grad_of(self)[0];
    const auto& ps = t.value_of(p_student.id);
    auto& gp = t.grad_buffer(p_student.id);
    const std::size_t b = pt.size();
    // d/dps_k of (1/B) sum_ij (G_t - G_s)_ij^2 = -(4/B) sum_j (G_t - G_s)_kj ps_j
    for (std::size_t k = 0; k < b; ++k) {
      T acc = T(0);
      for (std::size_t j = 0; j < b; ++j) acc += (pt[k] * pt[j] - ps[k] * ps[j]) * ps[j];
      gp[k] += g * T(-4) * acc / static_cast<T>(b);
    }
  });
}

template <typename T>
Var class_alignment(Tape<T>& tape, Var p_student, std::span<const T> p_teacher) {
  check_targets(tape, p_student, p_teacher.size(), "class_alignment");
  const auto& ps = tape.value(p_student);
  const T gap = self_inner_gap<T>(p_teacher, ps.values());
  return tape.record(Tensor<T>::scalar(gap * gap), {p_student}, [p_student, gap](Tape<T>& t, std::size_t self) {
    const T g = t.grad_of(self)[0];
    const auto& ps = t.value_of(p_student.id);
    auto& gp = t.grad_buffer(p_student.id);
    for (std::size_t k = 0; k < ps.numel(); ++k) gp[k] += g * T(-4) * gap * ps[k];
  });
}

template <typename T>
DistillTerms distill_objective(Tape<T>& tape, Var p_student, std::span<const T> p_teacher, std::span<const T> labels,
                               T alpha) {
  DistillTerms terms;
  terms.instance = bce_mean(tape, p_student, p_teacher);
  terms.batch = gram_alignment(tape, p_student, p_teacher);
  terms.cls = class_alignment(tape, p_student, p_teacher);
  terms.ranking = bce_mean(tape, p_student, labels);
  const Var multilevel = add(tape, add(tape, terms.instance, terms.batch), terms.cls);
  terms.total = add(tape, multilevel, scale(tape, terms.ranking, alpha));
  return terms;
}

#define RANKMINI_INSTANTIATE_LOSSES(T)                                                             \
  template Var bce_mean<T>(Tape<T>&, Var, std::span<const T>);                                     \
  template Var gram_alignment<T>(Tape<T>&, Var, std::span<const T>);                               \
  template Var class_alignment<T>(Tape<T>&, Var, std::span<const T>);                              \
  template DistillTerms distill_objective<T>(Tape<T>&, Var, std::span<const T>, std::span<const T>, T);

RANKMINI_INSTANTIATE_LOSSES(float)
RANKMINI_INSTANTIATE_LOSSES(double)

#undef RANKMINI_INSTANTIATE_LOSSES

}  // namespace ad

}  // namespace rankmini
