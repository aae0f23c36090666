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

#include <cstddef>
#include <span>

namespace rankmini::kernels {

/// Geometry of one batched 2-d cross-correlation.
struct ConvGeometry {
  std::size_t batch = 1;
  std::size_t in_channels = 1;
  std::size_t height = 1;
  std::size_t width = 1;
  std::size_t out_channels = 1;
  std::size_t kernel = 1;
  std::size_t stride = 1;
  std::size_t padding = 0;

  std::size_t out_height() const { return (height + 2 * padding - kernel) / stride + 1; }
  std::size_t out_width() const { return (width + 2 * padding - kernel) / stride + 1; }
  std::size_t patch_size() const { return in_channels * kernel * kernel; }
  std::size_t columns() const { return batch * out_height() * out_width(); }
};

// Row-major C[M,N] += A[M,K] * B[K,N]. Rows of C are split across OpenMP
// threads; each entry is accumulated by one thread in a fixed order, so
// results do not depend on the thread count.
template <typename T>
void gemm_accumulate(std::size_t m, std::size_t n, std::size_t k, const T* a, const T* b, T* c);

// im2col-backed kernels. `columns` is the [patch_size, columns()] buffer
// produced by conv2d_forward and consumed again by conv2d_backward.
template <typename T>
void im2col(const ConvGeometry& g, std::span<const T> input, std::span<T> columns);

template <typename T>
void conv2d_forward(const ConvGeometry& g, std::span<const T> input, std::span<const T> weight,
                    std::span<const T> bias, std::span<T> output, std::span<T> columns);

/// Any of grad_input / grad_weight / grad_bias may be empty to skip it.
/// Gradients are accumulated, not overwritten.
template <typename T>
void conv2d_backward(const ConvGeometry& g, std::span<const T> columns, std::span<const T> weight,
                     std::span<const T> grad_output, std::span<T> grad_input, std::span<T> grad_weight,
                     std::span<T> grad_bias);

namespace reference {

// Direct seven-loop cross-correlation. Slow; kept as the ground truth the
// im2col kernels are tested and benchmarked against.
template <typename T>
void conv2d_forward(const ConvGeometry& g, std::span<const T> input, std::span<const T> weight,
                    std::span<const T> bias, std::span<T> output);

template <typename T>
void conv2d_backward(const ConvGeometry& g, std::span<const T> input, std::span<const T> weight,
                     std::span<const T> grad_output, std::span<T> grad_input, std::span<T> grad_weight,
                     std::span<T> grad_bias);

}  // namespace reference

}  // namespace rankmini::kernels
