#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "rankmini/rng.hpp"
#include "rankmini/tape.hpp"
#include "rankmini/tensor.hpp"

namespace rankmini::testing {

inline Tensor<double> random_tensor(Shape shape, Rng& rng, double lo = -1.0, double hi = 1.0) {
  Tensor<double> t(std::move(shape));
  for (auto& v : t.values()) v = rng.uniform(lo, hi);
  return t;
}

inline Tensor<float> random_tensor_f(Shape shape, Rng& rng, double lo = -1.0, double hi = 1.0) {
  Tensor<float> t(std::move(shape));
  for (auto& v : t.values()) v = static_cast<float>(rng.uniform(lo, hi));
  return t;
}

using LossBuilder = std::function<ad::Var(ad::Tape<double>&, const std::vector<ad::Var>&)>;

struct GradCheck {
  double max_rel_error = 0.0;
  std::size_t coordinates = 0;
};

// Central differences on up to `per_tensor` random coordinates of every input.
inline GradCheck check_gradients(std::vector<Tensor<double>> inputs, const LossBuilder& build, Rng& rng,
                                 std::size_t per_tensor = 20, double h = 1e-5) {
  auto evaluate = [&](const std::vector<Tensor<double>>& xs) {
    ad::Tape<double> tape(false);
    std::vector<ad::Var> vars;
    for (const auto& x : xs) vars.push_back(tape.constant(x));
    return tape.value(build(tape, vars))[0];
  };

  ad::Tape<double> tape;
  std::vector<ad::Var> vars;
  for (const auto& x : inputs) vars.push_back(tape.variable(x));
  const ad::Var loss = build(tape, vars);
  tape.backward(loss);

  GradCheck out;
  for (std::size_t t = 0; t < inputs.size(); ++t) {
    const std::size_t n = inputs[t].numel();
    std::vector<std::size_t> coords(n);
    for (std::size_t i = 0; i < n; ++i) coords[i] = i;
    shuffle(coords, rng);
    coords.resize(std::min(n, per_tensor));
    for (std::size_t i : coords) {
      const double analytic = tape.has_grad(vars[t]) ? tape.grad(vars[t])[i] : 0.0;
      auto plus = inputs;
      auto minus = inputs;
      plus[t][i] += h;
      minus[t][i] -= h;
      const double numeric = (evaluate(plus) - evaluate(minus)) / (2.0 * h);
      const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-6});
      out.max_rel_error = std::max(out.max_rel_error, std::abs(analytic - numeric) / denom);
      ++out.coordinates;
    }
  }
  return out;
}

}  // namespace rankmini::testing
