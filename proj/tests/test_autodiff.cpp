#include <gtest/gtest.h>

#include "rankmini/errors.hpp"
#include "rankmini/ops.hpp"
#include "support.hpp"

using namespace rankmini;
using namespace rankmini::ad;
using rankmini::testing::check_gradients;
using rankmini::testing::random_tensor;

namespace {

// Contracts any output with fixed random weights so every entry gets a distinct gradient.
Var project(Tape<double>& t, Var x) {
  Rng rng(99);
  const auto w = random_tensor(t.value(x).shape(), rng);
  return sum(t, mul(t, x, t.constant(w)));
}

constexpr double kTol = 1e-4;

}  // namespace

TEST(Tape, ConstantsReceiveNoGradient) {
  Tape<double> t;
  const Var a = t.variable(Tensor<double>::scalar(2.0));
  const Var b = t.constant(Tensor<double>::scalar(3.0));
  t.backward(mul(t, a, b));
  EXPECT_DOUBLE_EQ(t.grad(a)[0], 3.0);
  EXPECT_FALSE(t.has_grad(b));
}

TEST(Tape, NonScalarLossRejected) {
  Tape<double> t;
  const Var a = t.variable(Tensor<double>({2}, 1.0));
  EXPECT_THROW(t.backward(a), ShapeError);
}

TEST(Tape, GradientsAccumulateOverReuse) {
  Tape<double> t;
  const Var a = t.variable(Tensor<double>::scalar(3.0));
  t.backward(add(t, mul(t, a, a), a));  // d/da (a^2 + a) = 2a + 1
  EXPECT_DOUBLE_EQ(t.grad(a)[0], 7.0);
}

TEST(Tape, SingleReverseSweep) {
  Tape<double> t;
  Var x = t.variable(Tensor<double>::scalar(0.5));
  for (int i = 0; i < 50; ++i) x = add(t, x, x);
  t.backward(x);
  EXPECT_EQ(t.last_backward_visits(), 50u);
}

TEST(Ops, ShapeMismatchesThrow) {
  Tape<double> t;
  const Var a = t.variable(Tensor<double>({2, 3}));
  const Var b = t.variable(Tensor<double>({3, 2}));
  EXPECT_THROW(add(t, a, b), ShapeError);
  const Var img = t.variable(Tensor<double>({1, 2, 5, 5}));
  EXPECT_THROW(avg_pool(t, img, 2), ShapeError);
  const Var k = t.variable(Tensor<double>({4, 3, 3, 3}));
  EXPECT_THROW(conv2d(t, img, k, t.variable(Tensor<double>({4})), 1, 1), ShapeError);
}

TEST(GradCheck, Conv2d) {
  Rng rng(1);
  for (auto [stride, pad] : {std::pair{1, 1}, {2, 0}, {1, 0}}) {
    const auto r = check_gradients({random_tensor({2, 3, 6, 6}, rng), random_tensor({4, 3, 3, 3}, rng),
                                    random_tensor({4}, rng)},
                                   [&](Tape<double>& t, const std::vector<Var>& v) {
                                     return project(t, conv2d(t, v[0], v[1], v[2], stride, pad));
                                   },
                                   rng);
    EXPECT_LT(r.max_rel_error, kTol) << "stride " << stride << " pad " << pad;
  }
}

TEST(GradCheck, Dense) {
  Rng rng(2);
  const auto r = check_gradients(
      {random_tensor({5, 7}, rng), random_tensor({3, 7}, rng), random_tensor({3}, rng)},
      [](Tape<double>& t, const std::vector<Var>& v) { return project(t, dense(t, v[0], v[1], v[2])); }, rng);
  EXPECT_LT(r.max_rel_error, kTol);
}

TEST(GradCheck, Activations) {
  Rng rng(3);
  // keep inputs away from the kinks so central differences stay on one side
  auto x = random_tensor({4, 9}, rng);
  for (auto& v : x.values()) v = v < 0 ? v - 0.05 : v + 0.05;
  for (int kind = 0; kind < 3; ++kind) {
    const auto r = check_gradients({x},
                                   [kind](Tape<double>& t, const std::vector<Var>& v) {
                                     const Var y = kind == 0   ? relu(t, v[0])
                                                   : kind == 1 ? leaky_relu(t, v[0])
                                                               : sigmoid(t, v[0]);
                                     return project(t, y);
                                   },
                                   rng);
    EXPECT_LT(r.max_rel_error, kTol) << "activation " << kind;
  }
}

TEST(GradCheck, Pooling) {
  Rng rng(4);
  const auto r1 = check_gradients(
      {random_tensor({2, 3, 8, 6}, rng)},
      [](Tape<double>& t, const std::vector<Var>& v) { return project(t, avg_pool(t, v[0], 2)); }, rng);
  EXPECT_LT(r1.max_rel_error, kTol);
  const auto r2 = check_gradients(
      {random_tensor({2, 3, 5, 4}, rng)},
      [](Tape<double>& t, const std::vector<Var>& v) { return project(t, global_avg_pool(t, v[0])); }, rng);
  EXPECT_LT(r2.max_rel_error, kTol);
}

TEST(GradCheck, Elementwise) {
  Rng rng(5);
  const auto r = check_gradients({random_tensor({2, 2, 3, 3}, rng), random_tensor({2, 1, 3, 3}, rng)},
                                 [](Tape<double>& t, const std::vector<Var>& v) {
                                   const Var c = concat_channels(t, v[0], v[1]);
                                   const Var d = concat_channels(t, v[1], v[0]);
                                   return project(t, scale(t, add(t, mul(t, c, d), sub(t, c, d)), 0.7));
                                 },
                                 rng);
  EXPECT_LT(r.max_rel_error, kTol);
}

TEST(Ops, SigmoidStableAtExtremes) {
  Tape<double> t;
  const Var y = sigmoid(t, t.constant(Tensor<double>({3}, std::vector<double>{-800.0, 0.0, 800.0})));
  EXPECT_EQ(t.value(y)[0], 0.0);
  EXPECT_DOUBLE_EQ(t.value(y)[1], 0.5);
  EXPECT_EQ(t.value(y)[2], 1.0);
}
