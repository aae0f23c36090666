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

#include "rankmini/kernels.hpp"

#include <algorithm>
#include <vector>

namespace rankmini::kernels {

namespace {

constexpr std::size_t kColumnBlock = 256;

using index_t = std::ptrdiff_t;

}  // namespace

template <typename T>
void gemm_accumulate(std::size_t m, std::size_t n, std::size_t k, const T* a, const T* b, T* c) {
  for (std::size_t jb = 0; jb < n; jb += kColumnBlock) {
    const std::size_t nb = std::min(kColumnBlock, n - jb);
#pragma omp parallel for schedule(static)
    for (index_t i = 0; i < static_cast<index_t>(m); ++i) {
      T* crow = c + static_cast<std::size_t>(i) * n + jb;
      const T* arow = a + static_cast<std::size_t>(i) * k;
      for (std::size_t p = 0; p < k; ++p) {
        const T av = arow[p];
        if (av == T(0)) continue;
        const T* brow = b + p * n + jb;
        for (std::size_t j = 0; j < nb; ++j) crow[j] += av * brow[j];
      }
    }
  }
}

template <typename T>
void im2col(const ConvGeometry& g, std::span<const T> input, std::span<T> columns) {
  const std::size_t oh = g.out_height(), ow = g.out_width();
  const std::size_t q_total = g.columns();
  const std::size_t rows = g.patch_size();
#pragma omp parallel for schedule(static)
  for (index_t r = 0; r < static_cast<index_t>(rows); ++r) {
    const std::size_t row = static_cast<std::size_t>(r);
    const std::size_t kx = row % g.kernel;
    const std::size_t ky = (row / g.kernel) % g.kernel;
    const std::size_t ci = row / (g.kernel * g.kernel);
    T* dst = columns.data() + row * q_total;
    for (std::size_t b = 0; b < g.batch; ++b) {
      const T* plane = input.data() + (b * g.in_channels + ci) * g.height * g.width;
      for (std::size_t oy = 0; oy < oh; ++oy) {
        const auto iy = static_cast<index_t>(oy * g.stride + ky) - static_cast<index_t>(g.padding);
        for (std::size_t ox = 0; ox < ow; ++ox) {
          const auto ix = static_cast<index_t>(ox * g.stride + kx) - static_cast<index_t>(g.padding);
          const bool inside = iy >= 0 && ix >= 0 && iy < static_cast<index_t>(g.height) &&
                              ix < static_cast<index_t>(g.width);
          *dst++ = inside ? plane[static_cast<std::size_t>(iy) * g.width + static_cast<std::size_t>(ix)] : T(0);
        }
      }
    }
  }
}

template <typename T>
void conv2d_forward(const ConvGeometry& g, std::span<const T> input, std::span<const T> weight,
                    std::span<const T> bias, std::span<T> output, std::span<T> columns) {
  im2col<T>(g, input, columns);
  const std::size_t q_total = g.columns();
  const std::size_t plane = g.out_height() * g.out_width();
  std::vector<T> product(g.out_channels * q_total, T(0));
  gemm_accumulate<T>(g.out_channels, q_total, g.patch_size(), weight.data(), columns.data(), product.data());
#pragma omp parallel for schedule(static)
  for (index_t bc = 0; bc < static_cast<index_t>(g.batch * g.out_channels); ++bc) {
    const std::size_t b = static_cast<std::size_t>(bc) / g.out_channels;
    const std::size_t co = static_cast<std::size_t>(bc) % g.out_channels;
    const T* src = product.data() + co * q_total + b * plane;
    T* dst = output.data() + static_cast<std::size_t>(bc) * plane;
    const T shift = bias.empty() ? T(0) : bias[co];
    for (std::size_t p = 0; p < plane; ++p) dst[p] = src[p] + shift;
  }
}

template <typename T>
void conv2d_backward(const ConvGeometry& g, std::span<const T> columns, std::span<const T> weight,
                     std::span<const T> grad_output, std::span<T> grad_input, std::span<T> grad_weight,
                     std::span<T> grad_bias) {
  const std::size_t q_total = g.columns();
  const std::size_t plane = g.out_height() * g.out_width();
  const std::size_t patch = g.patch_size();

  // grad_output as [out_channels, batch * plane]
  std::vector<T> dy(g.out_channels * q_total);
#pragma omp parallel for schedule(static)
  for (index_t co = 0; co < static_cast<index_t>(g.out_channels); ++co) {
    const auto c = static_cast<std::size_t>(co);
    for (std::size_t b = 0; b < g.batch; ++b)
      std::copy_n(grad_output.data() + (b * g.out_channels + c) * plane, plane, dy.data() + c * q_total + b * plane);
  }

  if (!grad_bias.empty()) {
    for (std::size_t co = 0; co < g.out_channels; ++co) {
      T acc = T(0);
      for (std::size_t q = 0; q < q_total; ++q) acc += dy[co * q_total + q];
      grad_bias[co] += acc;
    }
  }

  if (!grad_weight.empty()) {
    std::vector<T> columns_t(q_total * patch);
#pragma omp parallel for schedule(static)
    for (index_t q = 0; q < static_cast<index_t>(q_total); ++q)
      for (std::size_t r = 0; r < patch; ++r)
        columns_t[static_cast<std::size_t>(q) * patch + r] = columns[r * q_total + static_cast<std::size_t>(q)];
    gemm_accumulate<T>(g.out_channels, patch, q_total, dy.data(), columns_t.data(), grad_weight.data());
  }

  if (!grad_input.empty()) {
    std::vector<T> weight_t(patch * g.out_channels);
    for (std::size_t co = 0; co < g.out_channels; ++co)
      for (std::size_t r = 0; r < patch; ++r) weight_t[r * g.out_channels + co] = weight[co * patch + r];
    std::vector<T> dcol(patch * q_total, T(0));
    gemm_accumulate<T>(patch, q_total, g.out_channels, weight_t.data(), dy.data(), dcol.data());

    const std::size_t oh = g.out_height(), ow = g.out_width();
#pragma omp parallel for schedule(static)
    for (index_t bc = 0; bc < static_cast<index_t>(g.batch * g.in_channels); ++bc) {
      const std::size_t b = static_cast<std::size_t>(bc) / g.in_channels;
      const std::size_t ci = static_cast<std::size_t>(bc) % g.in_channels;
      T* dst = grad_input.data() + static_cast<std::size_t>(bc) * g.height * g.width;
      for (std::size_t ky = 0; ky < g.kernel; ++ky) {
        for (std::size_t kx = 0; kx < g.kernel; ++kx) {
          const std::size_t row = (ci * g.kernel + ky) * g.kernel + kx;
          const T* src = dcol.data() + row * q_total + b * plane;
          for (std::size_t oy = 0; oy < oh; ++oy) {
            const auto iy = static_cast<index_t>(oy * g.stride + ky) - static_cast<index_t>(g.padding);
            if (iy < 0 || iy >= static_cast<index_t>(g.height)) continue;
            for (std::size_t ox = 0; ox < ow; ++ox) {
              const auto ix = static_cast<index_t>(ox * g.stride + kx) - static_cast<index_t>(g.padding);
              if (ix < 0 || ix >= static_cast<index_t>(g.width)) continue;
              dst[static_cast<std::size_t>(iy) * g.width + static_cast<std::size_t>(ix)] += src[oy * ow + ox];
            }
          }
        }
      }
    }
  }
}

namespace reference {

template <typename T>
void conv2d_forward(const ConvGeometry& g, std::span<const T> input, std::span<const T> weight,
                    std::span<const T> bias, std::span<T> output) {
  const std::size_t oh = g.out_height(), ow = g.out_width();
  for (std::size_t b = 0; b < g.batch; ++b)
    for (std::size_t co = 0; co < g.out_channels; ++co)
      for (std::size_t oy = 0; oy < oh; ++oy)
        for (std::size_t ox = 0; ox < ow; ++ox) {
          T acc = bias.empty() ? T(0) : bias[co];
          for (std::size_t ci = 0; ci < g.in_channels; ++ci)
            for (std::size_t ky = 0; ky < g.kernel; ++ky)
              for (std::size_t kx = 0; kx < g.kernel; ++kx) {
                const auto iy = static_cast<index_t>(oy * g.stride + ky) - static_cast<index_t>(g.padding);
                const auto ix = static_cast<index_t>(ox * g.stride + kx) - static_cast<index_t>(g.padding);
                if (iy < 0 || ix < 0 || iy >= static_cast<index_t>(g.height) || ix >= static_cast<index_t>(g.width))
                  continue;
                acc += weight[((co * g.in_channels + ci) * g.kernel + ky) * g.kernel + kx] *
                       input[((b * g.in_channels + ci) * g.height + static_cast<std::size_t>(iy)) * g.width +
                             static_cast<std::size_t>(ix)];
              }
          output[((b * g.out_channels + co) * oh + oy) * ow + ox] = acc;
        }
}

template <typename T>
void conv2d_backward(const ConvGeometry& g, std::span<const T> input, std::span<const T> weight,
                     std::span<const T> grad_output, std::span<T> grad_input, std::span<T> grad_weight,
                     std::span<T> grad_bias) {
  const std::size_t oh = g.out_height(), ow = g.out_width();
  for (std::size_t b = 0; b < g.batch; ++b)
    for (std::size_t co = 0; co < g.out_channels; ++co)
      for (std::size_t oy = 0; oy < oh; ++oy)
        for (std::size_t ox = 0; ox < ow; ++ox) {
          const T dy = grad_output[((b * g.out_channels + co) * oh + oy) * ow + ox];
          if (!grad_bias.empty()) grad_bias[co] += dy;
          for (std::size_t ci = 0; ci < g.in_channels; ++ci)
            for (std::size_t ky = 0; ky < g.kernel; ++ky)
              for (std::size_t kx = 0; kx < g.kernel; ++kx) {
                const auto iy = static_cast<index_t>(oy * g.stride + ky) - static_cast<index_t>(g.padding);
                const auto ix = static_cast<index_t>(ox * g.stride + kx) - static_cast<index_t>(g.padding);
                if (iy < 0 || ix < 0 || iy >= static_cast<index_t>(g.height) || ix >= static_cast<index_t>(g.width))
                  continue;
                const std::size_t wi = ((co * g.in_channels + ci) * g.kernel + ky) * g.kernel + kx;
                const std::size_t xi = ((b * g.in_channels + ci) * g.height + static_cast<std::size_t>(iy)) * g.width +
                                       static_cast<std::size_t>(ix);
                if (!grad_weight.empty()) grad_weight[wi] += dy * input[xi];
                if (!grad_input.empty()) grad_input[xi] += dy * weight[wi];
              }
        }
}

}  // namespace reference

#define RANKMINI_INSTANTIATE_KERNELS(T)                                                                          \
  template void gemm_accumulate<T>(std::size_t, std::size_t, std::size_t, const T*, const T*, T*);               \
  template void im2col<T>(const ConvGeometry&, std::span<const T>, std::span<T>);                                \
  template void conv2d_forward<T>(const ConvGeometry&, std::span<const T>, std::span<const T>, std::span<const T>, \
                                  std::span<T>, std::span<T>);                                                   \
  template void conv2d_backward<T>(const ConvGeometry&, std::span<const T>, std::span<const T>,                  \
                                   std::span<const T>, std::span<T>, std::span<T>, std::span<T>);                \
  template void reference::conv2d_forward<T>(const ConvGeometry&, std::span<const T>, std::span<const T>,        \
                                             std::span<const T>, std::span<T>);                                  \
  template void reference::conv2d_backward<T>(const ConvGeometry&, std::span<const T>, std::span<const T>,       \
                                              std::span<const T>, std::span<T>, std::span<T>, std::span<T>);

RANKMINI_INSTANTIATE_KERNELS(float)
RANKMINI_INSTANTIATE_KERNELS(double)

#undef RANKMINI_INSTANTIATE_KERNELS

}  // namespace rankmini::kernels
