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

#include <span>
#include <vector>

#include "rankmini/tape.hpp"

namespace rankmini {

/// Probabilities are clamped to [kProbEps, 1 - kProbEps] wherever a log is taken.
inline constexpr double kProbEps = 1e-7;

/// -(y log p + (1 - y) log(1 - p)) with p clamped.
double binary_cross_entropy(double target, double p);

/// Ranking loss of one preference prediction against a {0,1} or soft label.
double ranking_bce_loss(double p, double label);

/// Teacher and student outputs on one batch, plus ground-truth labels.
struct BatchPredictions {
  std::vector<double> p_teacher;
  std::vector<double> p_student;
  std::vector<double> labels;

  std::size_t size() const { return p_student.size(); }
};

/// Mean over the batch of BCE(student; teacher as soft target).
double instance_loss(const BatchPredictions& bp);
/// (1/B) * ||p_t p_t^T - p_s p_s^T||_F^2
double batch_loss(const BatchPredictions& bp);
/// (p_t . p_t - p_s . p_s)^2
double class_loss(const BatchPredictions& bp);
/// instance + batch + class, unit weights.
double multilevel_loss(const BatchPredictions& bp);
/// Mean ranking BCE of the student against the labels.
double ranking_loss(const BatchPredictions& bp);
/// multilevel + alpha * ranking.
double total_loss(const BatchPredictions& bp, double alpha);

// Tape versions. `p` is any tensor holding B probabilities; targets are
// constants (labels or frozen-teacher outputs).
namespace ad {

template <typename T>
Var bce_mean(Tape<T>& tape, Var p, std::span<const T> targets);

template <typename T>
Var gram_alignment(Tape<T>& tape, Var p_student, std::span<const T> p_teacher);

template <typename T>
Var class_alignment(Tape<T>& tape, Var p_student, std::span<const T> p_teacher);

struct DistillTerms {
  Var instance;
  Var batch;
  Var cls;
  Var ranking;
  Var total;
};

/// Full distillation objective on one batch.
template <typename T>
DistillTerms distill_objective(Tape<T>& tape, Var p_student, std::span<const T> p_teacher, std::span<const T> labels,
                               T alpha);

}  // namespace ad

}  // namespace rankmini
