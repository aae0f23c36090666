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
#include <vector>

#include "rankmini/network.hpp"

namespace rankmini {

struct OptimizerConfig {
  double lr = 2e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double lambda = 0.1;  // L1 weight on conv/dense weights; biases are exempt
  int epochs = 30;
  std::size_t batch = 16;
  /// Epoch at which proximal steps give way to orthant steps; -1 means epochs / 2.
  int orthant_epoch = -1;
  std::uint64_t seed = 7;

  int switch_epoch() const { return orthant_epoch < 0 ? epochs / 2 : orthant_epoch; }
};

/// Throws ConfigError when a field is out of range.
void validate(const OptimizerConfig& config);

/// Moments per tensor, laid out as weight, bias for each ParameterSet entry.
template <typename T>
struct AdamaxState {
  std::vector<std::vector<T>> m;
  std::vector<std::vector<T>> u;
  std::uint64_t step = 0;

  void reset() {
    m.clear();
    u.clear();
    step = 0;
  }
};

/// One AdaMax update from the grad slots of `params`. A missing grad counts as
/// zero. Throws NumericalError, leaving params and state untouched, when any
/// gradient is non-finite.
template <typename T>
void adamax_step(ParameterSet<T>& params, AdamaxState<T>& state, const OptimizerConfig& config);

/// sign(w) * max(|w| - t, 0)
template <typename T>
T soft_threshold(T w, T t) {
  if (w > t) return w - t;
  if (w < -t) return w + t;
  return T(0);
}

/// Soft-thresholds every weight by eta * lambda. Biases are left alone.
template <typename T>
void prox_l1_step(ParameterSet<T>& params, double eta, double lambda);

/// Sign of every weight (-1, 0, +1), taken at the start of an iterate.
using SignSnapshot = std::vector<std::vector<std::int8_t>>;

template <typename T>
SignSnapshot capture_signs(const ParameterSet<T>& params);

/// Applies the L1 subgradient step w -= eta * lambda * sign_ref, then zeroes
/// every weight whose sign differs from its reference. Weights with reference
/// sign 0 stay at 0.
template <typename T>
void orthant_step(ParameterSet<T>& params, const SignSnapshot& reference, double eta, double lambda);

/// Sum of |w| over weights.
template <typename T>
double l1_norm(const ParameterSet<T>& params);

/// Exactly-nonzero weights (biases excluded).
template <typename T>
std::size_t nonzero_weights(const ParameterSet<T>& params);

template <typename T>
std::size_t total_weights(const ParameterSet<T>& params);

}  // namespace rankmini
