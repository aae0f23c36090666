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

#include "rankmini/optim.hpp"

#include <cmath>

#include "rankmini/errors.hpp"

namespace rankmini {

void validate(const OptimizerConfig& c) {
  if (!(c.lr > 0.0) || !std::isfinite(c.lr)) throw ConfigError("learning rate must be positive");
  if (!(c.beta1 > 0.0 && c.beta1 < 1.0)) throw ConfigError("beta1 must lie in (0, 1)");
  if (!(c.beta2 > 0.0 && c.beta2 < 1.0)) throw ConfigError("beta2 must lie in (0, 1)");
  if (!(c.lambda >= 0.0) || !std::isfinite(c.lambda)) throw ConfigError("lambda must be >= 0");
  if (c.epochs < 0) throw ConfigError("epochs must be >= 0");
  if (c.batch == 0) throw ConfigError("batch size must be >= 1");
  if (c.orthant_epoch > c.epochs) throw ConfigError("orthant switch epoch exceeds epoch count");
}

namespace {

template <typename T, typename F>
void for_each_tensor(ParameterSet<T>& params, F&& f) {
  std::size_t slot = 0;
  for (auto& e : params.entries) {
    f(slot++, e.weight);
    f(slot++, e.bias);
  }
}

}  // namespace

template <typename T>
void adamax_step(ParameterSet<T>& params, AdamaxState<T>& state, const OptimizerConfig& config) {
  for (const auto& e : params.entries)
    for (const auto* p : {&e.weight, &e.bias})
      if (p->grad && !p->grad->all_finite())
        throw NumericalError("non-finite gradient in layer '" + e.layer + "'; step aborted");

  const std::size_t slots = params.entries.size() * 2;
  if (state.m.size() != slots) {
    state.m.assign(slots, {});
    state.u.assign(slots, {});
    state.step = 0;
  }
  state.step += 1;
  const T b1 = static_cast<T>(config.beta1);
  const T b2 = static_cast<T>(config.beta2);
  const T rate = static_cast<T>(config.lr / (1.0 - std::pow(config.beta1, static_cast<double>(state.step))));

  for_each_tensor(params, [&](std::size_t slot, Parameter<T>& p) {
    auto& m = state.m[slot];
    auto& u = state.u[slot];
    const std::size_t n = p.value.numel();
    if (m.size() != n) {
      m.assign(n, T(0));
      u.assign(n, T(0));
    }
    if (!p.grad) {
      for (std::size_t i = 0; i < n; ++i) {
        m[i] *= b1;
        u[i] *= b2;
      }
    } else {
      const auto& g = *p.grad;
      for (std::size_t i = 0; i < n; ++i) {
        m[i] = b1 * m[i] + (T(1) - b1) * g[i];
        u[i] = std::max(b2 * u[i], std::abs(g[i]));
      }
    }
    for (std::size_t i = 0; i < n; ++i)
      if (u[i] > T(0)) p.value[i] -= rate * m[i] / u[i];
  });
}

template <typename T>
void prox_l1_step(ParameterSet<T>& params, double eta, double lambda) {
  const T t = static_cast<T>(eta * lambda);
  if (t == T(0)) return;
  for (auto& e : params.entries)
    for (auto& w : e.weight.value.values()) w = soft_threshold(w, t);
}

template <typename T>
SignSnapshot capture_signs(const ParameterSet<T>& params) {
  SignSnapshot out;
  out.reserve(params.entries.size());
  for (const auto& e : params.entries) {
    std::vector<std::int8_t> s(e.weight.value.numel());
    const auto w = e.weight.value.values();
    for (std::size_t i = 0; i < s.size(); ++i) s[i] = static_cast<std::int8_t>((w[i] > T(0)) - (w[i] < T(0)));
    out.push_back(std::move(s));
  }
  return out;
}

template <typename T>
void orthant_step(ParameterSet<T>& params, const SignSnapshot& reference, double eta, double lambda) {
  if (reference.size() != params.entries.size()) throw ShapeError("sign snapshot does not match parameter set");
  const T step = static_cast<T>(eta * lambda);
  for (std::size_t l = 0; l < params.entries.size(); ++l) {
    auto w = params.entries[l].weight.value.values();
    const auto& ref = reference[l];
    if (ref.size() != w.size()) throw ShapeError("sign snapshot does not match layer '" + params.entries[l].layer + "'");
    for (std::size_t i = 0; i < w.size(); ++i) {
      if (ref[i] == 0) {
        w[i] = T(0);
        continue;
      }
      const T v = w[i] - step * static_cast<T>(ref[i]);
      w[i] = (ref[i] > 0 ? v > T(0) : v < T(0)) ? v : T(0);
    }
  }
}

template <typename T>
double l1_norm(const ParameterSet<T>& params) {
  double acc = 0.0;
  for (const auto& e : params.entries)
    for (T w : e.weight.value.values()) acc += std::abs(static_cast<double>(w));
  return acc;
}

template <typename T>
std::size_t nonzero_weights(const ParameterSet<T>& params) {
  std::size_t n = 0;
  for (const auto& e : params.entries)
    for (T w : e.weight.value.values()) n += (w != T(0));
  return n;
}

template <typename T>
std::size_t total_weights(const ParameterSet<T>& params) {
  std::size_t n = 0;
  for (const auto& e : params.entries) n += e.weight.value.numel();
  return n;
}

#define RANKMINI_INSTANTIATE_OPTIM(T)                                                         \
  template void adamax_step<T>(ParameterSet<T>&, AdamaxState<T>&, const OptimizerConfig&);    \
  template void prox_l1_step<T>(ParameterSet<T>&, double, double);                            \
  template SignSnapshot capture_signs<T>(const ParameterSet<T>&);                             \
  template void orthant_step<T>(ParameterSet<T>&, const SignSnapshot&, double, double);       \
  template double l1_norm<T>(const ParameterSet<T>&);                                         \
  template std::size_t nonzero_weights<T>(const ParameterSet<T>&);                           \
  template std::size_t total_weights<T>(const ParameterSet<T>&);

RANKMINI_INSTANTIATE_OPTIM(float)
RANKMINI_INSTANTIATE_OPTIM(double)

#undef RANKMINI_INSTANTIATE_OPTIM

}  // namespace rankmini
