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
#include <functional>
#include <initializer_list>
#include <limits>
#include <vector>

#include "rankmini/tensor.hpp"

namespace rankmini::ad {

/// Handle to a value recorded on a Tape.
struct Var {
  static constexpr std::size_t kInvalid = std::numeric_limits<std::size_t>::max();
  std::size_t id = kInvalid;
  bool valid() const noexcept { return id != kInvalid; }
};

/// Define-by-run record of executed operations.
///
/// Nodes are appended in execution order, so inputs always precede the
/// operations that consume them. backward() walks the nodes once in reverse.
/// A tape built with `recording == false` keeps values only, which is what
/// inference and frozen-teacher passes use.
template <typename T>
class Tape {
 public:
  using BackwardFn = std::function<void(Tape&, std::size_t)>;

  explicit Tape(bool recording = true) : recording_(recording) {}

  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;
  Tape(Tape&&) noexcept = default;
  Tape& operator=(Tape&&) noexcept = default;

  /// Leaf that never receives a gradient (data, frozen weights).
  Var constant(Tensor<T> value);
  /// Leaf that accumulates a gradient during backward().
  Var variable(Tensor<T> value);
  /// Appends an operation result. The backward rule is dropped when the tape
  /// is not recording or no input requires a gradient.
  Var record(Tensor<T> value, std::initializer_list<Var> inputs, BackwardFn backward);

  const Tensor<T>& value(Var v) const;
  bool requires_grad(Var v) const;
  bool has_grad(Var v) const;
  /// Gradient of a node after backward(); throws if none was propagated.
  const Tensor<T>& grad(Var v) const;
  /// Zero-initialized gradient buffer for node `id`, allocated on first use.
  Tensor<T>& grad_buffer(std::size_t id);
  const Tensor<T>& grad_of(std::size_t id) const { return nodes_[id].grad; }
  const Tensor<T>& value_of(std::size_t id) const { return nodes_[id].value; }
  bool requires_grad_of(std::size_t id) const { return nodes_[id].requires_grad; }

  /// Reverse sweep from a scalar loss. Rejects non-scalar losses.
  void backward(Var loss);

  bool recording() const noexcept { return recording_; }
  std::size_t size() const noexcept { return nodes_.size(); }
  /// Number of backward rules executed by the last backward() call.
  std::size_t last_backward_visits() const noexcept { return visits_; }

 private:
  struct Node {
    Tensor<T> value;
    Tensor<T> grad;
    bool requires_grad = false;
    bool has_grad = false;
    BackwardFn backward;
  };

  const Node& node(Var v) const;

  std::vector<Node> nodes_;
  bool recording_ = true;
  std::size_t visits_ = 0;
};

extern template class Tape<float>;
extern template class Tape<double>;

}  // namespace rankmini::ad
