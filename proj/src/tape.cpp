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

#include "rankmini/tape.hpp"

#include <string>

namespace rankmini::ad {

template <typename T>
const typename Tape<T>::Node& Tape<T>::node(Var v) const {
  if (!v.valid() || v.id >= nodes_.size()) throw std::out_of_range("variable does not belong to this tape");
  return nodes_[v.id];
}

template <typename T>
Var Tape<T>::constant(Tensor<T> value) {
  nodes_.push_back(Node{std::move(value), {}, false, false, {}});
  return Var{nodes_.size() - 1};
}

template <typename T>
Var Tape<T>::variable(Tensor<T> value) {
  nodes_.push_back(Node{std::move(value), {}, recording_, false, {}});
  return Var{nodes_.size() - 1};
}

template <typename T>
Var Tape<T>::record(Tensor<T> value, std::initializer_list<Var> inputs, BackwardFn backward) {
  bool needs = false;
  if (recording_)
    for (auto in : inputs) needs = needs || node(in).requires_grad;
  Node n{std::move(value), {}, needs, false, {}};
  if (needs) n.backward = std::move(backward);
  nodes_.push_back(std::move(n));
  return Var{nodes_.size() - 1};
}

template <typename T>
const Tensor<T>& Tape<T>::value(Var v) const {
  return node(v).value;
}

template <typename T>
bool Tape<T>::requires_grad(Var v) const {
  return node(v).requires_grad;
}

template <typename T>
bool Tape<T>::has_grad(Var v) const {
  return node(v).has_grad;
}

template <typename T>
const Tensor<T>& Tape<T>::grad(Var v) const {
  const auto& n = node(v);
  if (!n.has_grad) throw std::logic_error("no gradient was propagated to node " + std::to_string(v.id));
  return n.grad;
}

template <typename T>
Tensor<T>& Tape<T>::grad_buffer(std::size_t id) {
  auto& n = nodes_.at(id);
  if (!n.has_grad) {
    n.grad = Tensor<T>(n.value.shape());
    n.has_grad = true;
  }
  return n.grad;
}

template <typename T>
void Tape<T>::backward(Var loss) {
  const auto& l = node(loss);
  if (l.value.numel() != 1)
    throw ShapeError("backward() needs a scalar loss, got shape " + shape_string(l.value.shape()));
  if (!l.requires_grad) throw std::logic_error("loss does not depend on any variable");
  for (auto& n : nodes_) {
    n.has_grad = false;
    n.grad = Tensor<T>();
  }
  grad_buffer(loss.id)[0] = T(1);
  visits_ = 0;
  for (std::size_t i = loss.id + 1; i-- > 0;) {
    auto& n = nodes_[i];
    if (!n.has_grad || !n.backward) continue;
    n.backward(*this, i);
    ++visits_;
  }
}

template class Tape<float>;
template class Tape<double>;

}  // namespace rankmini::ad
