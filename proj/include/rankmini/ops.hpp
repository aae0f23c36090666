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

#include "rankmini/tape.hpp"

// Differentiable operations used by the quality network. Image tensors are
// laid out [batch, channels, height, width]; feature tensors [batch, features].
namespace rankmini::ad {

inline constexpr double kLeakySlope = 0.01;

template <typename T>
Var conv2d(Tape<T>& tape, Var input, Var kernel, Var bias, std::size_t stride, std::size_t padding);

/// weight is [out_features, in_features]; output = input * weight^T + bias.
template <typename T>
Var dense(Tape<T>& tape, Var input, Var weight, Var bias);

template <typename T>
Var relu(Tape<T>& tape, Var x);

template <typename T>
Var leaky_relu(Tape<T>& tape, Var x, T slope = T(kLeakySlope));

template <typename T>
Var sigmoid(Tape<T>& tape, Var x);

/// Non-overlapping factor x factor mean pooling; spatial extents must divide.
template <typename T>
Var avg_pool(Tape<T>& tape, Var x, std::size_t factor);

/// [N, C, H, W] -> [N, C]
template <typename T>
Var global_avg_pool(Tape<T>& tape, Var x);

/// Concatenates two [N, C_i, ...] tensors along the channel axis.
template <typename T>
Var concat_channels(Tape<T>& tape, Var a, Var b);

template <typename T>
Var sub(Tape<T>& tape, Var a, Var b);

template <typename T>
Var add(Tape<T>& tape, Var a, Var b);

template <typename T>
Var mul(Tape<T>& tape, Var a, Var b);

template <typename T>
Var scale(Tape<T>& tape, Var x, T factor);

/// Sum of all entries as a [1] tensor.
template <typename T>
Var sum(Tape<T>& tape, Var x);

}  // namespace rankmini::ad
