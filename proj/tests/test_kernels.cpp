#include <gtest/gtest.h>
#include <omp.h>

#include "rankmini/kernels.hpp"
#include "support.hpp"

using namespace rankmini;
using rankmini::kernels::ConvGeometry;

namespace {

struct ConvCase {
  ConvGeometry g;
  std::vector<double> input, weight, bias, grad_out;
};

ConvCase make_case(const ConvGeometry& g, Rng& rng) {
  ConvCase c{g, {}, {}, {}, {}};
  auto fill = [&](std::vector<double>& v, std::size_t n) {
    v.resize(n);
    for (auto& x : v) x = rng.uniform(-1, 1);
  };
  fill(c.input, g.batch * g.in_channels * g.height * g.width);
  fill(c.weight, g.out_channels * g.patch_size());
  fill(c.bias, g.out_channels);
  fill(c.grad_out, g.batch * g.out_channels * g.out_height() * g.out_width());
  return c;
}

double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace

TEST(Gemm, MatchesTripleLoop) {
  Rng rng(3);
  for (auto [m, n, k] : {std::tuple{1, 1, 1}, {7, 300, 5}, {33, 17, 64}, {3, 513, 9}}) {
    std::vector<double> a(m * k), b(k * n), c(m * n, 0.5), expect(m * n, 0.5);
    for (auto& x : a) x = rng.uniform(-1, 1);
    for (auto& x : b) x = rng.uniform(-1, 1);
    a[0] = 0.0;  // the kernel skips zero rows of A
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < n; ++j)
        for (int p = 0; p < k; ++p) expect[i * n + j] += a[i * k + p] * b[p * n + j];
    kernels::gemm_accumulate<double>(m, n, k, a.data(), b.data(), c.data());
    EXPECT_LT(max_abs_diff(c, expect), 1e-12) << m << "x" << n << "x" << k;
  }
}

class ConvAgainstReference : public ::testing::TestWithParam<ConvGeometry> {};

TEST_P(ConvAgainstReference, ForwardAndBackward) {
  Rng rng(17);
  const auto c = make_case(GetParam(), rng);
  const auto& g = c.g;
  std::vector<double> out(c.grad_out.size()), ref_out(c.grad_out.size());
  std::vector<double> columns(g.patch_size() * g.columns());
  kernels::conv2d_forward<double>(g, c.input, c.weight, c.bias, out, columns);
  kernels::reference::conv2d_forward<double>(g, c.input, c.weight, c.bias, ref_out);
  EXPECT_LT(max_abs_diff(out, ref_out), 1e-12);

  std::vector<double> gi(c.input.size()), gw(c.weight.size()), gb(c.bias.size());
  std::vector<double> rgi(c.input.size()), rgw(c.weight.size()), rgb(c.bias.size());
  kernels::conv2d_backward<double>(g, columns, c.weight, c.grad_out, gi, gw, gb);
  kernels::reference::conv2d_backward<double>(g, c.input, c.weight, c.grad_out, rgi, rgw, rgb);
  EXPECT_LT(max_abs_diff(gi, rgi), 1e-12);
  EXPECT_LT(max_abs_diff(gw, rgw), 1e-12);
  EXPECT_LT(max_abs_diff(gb, rgb), 1e-12);
}

INSTANTIATE_TEST_SUITE_P(Geometries, ConvAgainstReference,
                         ::testing::Values(ConvGeometry{1, 1, 5, 5, 1, 3, 1, 1}, ConvGeometry{2, 3, 8, 6, 4, 3, 1, 1},
                                           ConvGeometry{3, 2, 9, 9, 5, 3, 2, 0}, ConvGeometry{1, 4, 7, 7, 2, 1, 1, 0},
                                           ConvGeometry{2, 2, 6, 6, 3, 5, 1, 2}, ConvGeometry{1, 8, 16, 16, 16, 3, 1, 1}));

TEST(Conv, BackwardAccumulatesAndSkipsEmptyOutputs) {
  Rng rng(5);
  const auto c = make_case({1, 2, 5, 5, 3, 3, 1, 1}, rng);
  std::vector<double> out(c.grad_out.size()), columns(c.g.patch_size() * c.g.columns());
  kernels::conv2d_forward<double>(c.g, c.input, c.weight, c.bias, out, columns);
  std::vector<double> gw(c.weight.size(), 0.0), gw2(c.weight.size(), 0.0);
  kernels::conv2d_backward<double>(c.g, columns, c.weight, c.grad_out, {}, gw, {});
  gw2 = gw;
  kernels::conv2d_backward<double>(c.g, columns, c.weight, c.grad_out, {}, gw2, {});
  for (std::size_t i = 0; i < gw.size(); ++i) EXPECT_NEAR(gw2[i], 2.0 * gw[i], 1e-12);
}

TEST(Conv, ResultIndependentOfThreadCount) {
  Rng rng(9);
  const auto c = make_case({2, 4, 12, 12, 8, 3, 1, 1}, rng);
  std::vector<float> in(c.input.begin(), c.input.end()), w(c.weight.begin(), c.weight.end()),
      b(c.bias.begin(), c.bias.end());
  std::vector<float> cols(c.g.patch_size() * c.g.columns());
  std::vector<float> one(c.grad_out.size()), many(c.grad_out.size());
  const int saved = omp_get_max_threads();
  omp_set_num_threads(1);
  kernels::conv2d_forward<float>(c.g, in, w, b, one, cols);
  omp_set_num_threads(4);
  kernels::conv2d_forward<float>(c.g, in, w, b, many, cols);
  omp_set_num_threads(saved);
  EXPECT_EQ(one, many);
}
