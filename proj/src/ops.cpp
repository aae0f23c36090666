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

#include "rankmini/ops.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <string>
#include <vector>

#include "rankmini/kernels.hpp"

namespace rankmini::ad {

namespace {

void require(bool ok, const std::string& msg) {
  if (!ok) throw ShapeError(msg);
}

template <typename T>
void check_same_shape(const Tape<T>& tape, Var a, Var b, const char* op) {
  const auto& sa = tape.value(a).shape();
  const auto& sb = tape.value(b).shape();
  require(sa == sb, std::string(op) + ": shape mismatch " + shape_string(sa) + " vs " + shape_string(sb));
}

}  // namespace

template <typename T>
Var conv2d(Tape<T>& tape, Var input, Var kernel, Var bias, std::size_t stride, std::size_t padding) {
  const auto& x = tape.value(input);
  const auto& w = tape.value(kernel);
  const auto& b = tape.value(bias);
  require(x.rank() == 4, "conv2d: input must be [N,C,H,W], got " + shape_string(x.shape()));
  require(w.rank() == 4 && w.dim(2) == w.dim(3), "conv2d: kernel must be [C_out,C_in,k,k], got " + shape_string(w.shape()));
  require(x.dim(1) == w.dim(1), "conv2d: input has " + std::to_string(x.dim(1)) + " channels but kernel expects " +
                                    std::to_string(w.dim(1)));
  require(b.numel() == w.dim(0), "conv2d: bias length " + std::to_string(b.numel()) + " != C_out " +
                                     std::to_string(w.dim(0)));
  require(stride >= 1, "conv2d: stride must be positive");
  require(w.dim(2) <= x.dim(2) + 2 * padding && w.dim(3) <= x.dim(3) + 2 * padding,
          "conv2d: kernel larger than padded input");

  kernels::ConvGeometry g{x.dim(0), x.dim(1), x.dim(2), x.dim(3), w.dim(0), w.dim(2), stride, padding};
  Tensor<T> out(Shape{g.batch, g.out_channels, g.out_height(), g.out_width()});
  auto columns = std::make_shared<std::vector<T>>(g.patch_size() * g.columns());
  kernels::conv2d_forward<T>(g, x.values(), w.values(), b.values(), out.values(), *columns);

  return tape.record(std::move(out), {input, kernel, bias},
                     [g, columns, input, kernel, bias](Tape<T>& t, std::size_t self) {
                       std::span<T> gx, gw, gb;
                       if (t.requires_grad_of(input.id)) gx = t.grad_buffer(input.id).values();
                       if (t.requires_grad_of(kernel.id)) gw = t.grad_buffer(kernel.id).values();
                       if (t.requires_grad_of(bias.id)) gb = t.grad_buffer(bias.id).values();
                       kernels::conv2d_backward<T>(g, *columns, t.value_of(kernel.id).values(),
                                                   t.grad_of(self).values(), gx, gw, gb);
                     });
}

template <typename T>
Var dense(Tape<T>& tape, Var input, Var weight, Var bias) {
  const auto& x = tape.value(input);
  const auto& w = tape.value(weight);
  const auto& b = tape.value(bias);
  require(x.rank() == 2, "dense: input must be [N,F], got " + shape_string(x.shape()));
  require(w.rank() == 2, "dense: weight must be [F_out,F], got " + shape_string(w.shape()));
  require(x.dim(1) == w.dim(1), "dense: input has " + std::to_string(x.dim(1)) + " features but weight expects " +
                                    std::to_string(w.dim(1)));
  require(b.numel() == w.dim(0), "dense: bias length does not match F_out");
  const std::size_t n = x.dim(0), f = x.dim(1), fo = w.dim(0);
  Tensor<T> out(Shape{n, fo});
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t o = 0; o < fo; ++o) {
      T acc = b[o];
      for (std::size_t j = 0; j < f; ++j) acc += w[o * f + j] * x[i * f + j];
      out[i * fo + o] = acc;
    }
  return tape.record(std::move(out), {input, weight, bias}, [=](Tape<T>& t, std::size_t self) {
    const auto& gy = t.grad_of(self);
    const auto& xv = t.value_of(input.id);
    const auto& wv = t.value_of(weight.id);
    if (t.requires_grad_of(input.id)) {
      auto& gx = t.grad_buffer(input.id);
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t o = 0; o < fo; ++o) {
          const T d = gy[i * fo + o];
          for (std::size_t j = 0; j < f; ++j) gx[i * f + j] += d * wv[o * f + j];
        }
    }
    if (t.requires_grad_of(weight.id)) {
      auto& gw = t.grad_buffer(weight.id);
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t o = 0; o < fo; ++o) {
          const T d = gy[i * fo + o];
          for (std::size_t j = 0; j < f; ++j) gw[o * f + j] += d * xv[i * f + j];
        }
    }
    if (t.requires_grad_of(bias.id)) {
      auto& gb = t.grad_buffer(bias.id);
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t o = 0; o < fo; ++o) gb[o] += gy[i * fo + o];
    }
  });
}

template <typename T>
Var leaky_relu(Tape<T>& tape, Var x, T slope) {
  const auto& in = tape.value(x);
  Tensor<T> out(in.shape());
  for (std::size_t i = 0; i < in.numel(); ++i) out[i] = in[i] > T(0) ? in[i] : slope * in[i];
  return tape.record(std::move(out), {x}, [x, slope](Tape<T>& t, std::size_t self) {
    const auto& gy = t.grad_of(self);
    const auto& v = t.value_of(x.id);
    auto& gx = t.grad_buffer(x.id);
    for (std::size_t i = 0; i < v.numel(); ++i) gx[i] += v[i] > T(0) ? gy[i] : slope * gy[i];
  });
}

template <typename T>
Var relu(Tape<T>& tape, Var x) {
  return leaky_relu<T>(tape, x, T(0));
}

template <typename T>
Var sigmoid(Tape<T>& tape, Var x) {
  const auto& in = tape.value(x);
  Tensor<T> out(in.shape());
  for (std::size_t i = 0; i < in.numel(); ++i) {
    // split by sign so exp() never overflows
    const T v = in[i];
    if (v >= T(0)) {
      out[i] = T(1) / (T(1) + std::exp(-v));
    } else {
      const T e = std::exp(v);
      out[i] = e / (T(1) + e);
    }
  }
  return tape.record(std::move(out), {x}, [x](Tape<T>& t, std::size_t self) {
    const auto& gy = t.grad_of(self);
    const auto& y = t.value_of(self);
    auto& gx = t.grad_buffer(x.id);
    for (std::size_t i = 0; i < y.numel(); ++i) gx[i] += gy[i] * y[i] * (T(1) - y[i]);
  });
}

template <typename T>
Var avg_pool(Tape<T>& tape, Var x, std::size_t factor) {
  const auto& in = tape.value(x);
  require(in.rank() == 4, "avg_pool: input must be [N,C,H,W]");
  require(factor >= 1 && in.dim(2) % factor == 0 && in.dim(3) % factor == 0,
          "avg_pool: factor " + std::to_string(factor) + " does not divide " + shape_string(in.shape()));
  const std::size_t nc = in.dim(0) * in.dim(1), h = in.dim(2), w = in.dim(3);
  const std::size_t oh = h / factor, ow = w / factor;
  const T inv = T(1) / static_cast<T>(factor * factor);
  Tensor<T> out(Shape{in.dim(0), in.dim(1), oh, ow});
  for (std::size_t p = 0; p < nc; ++p)
    for (std::size_t oy = 0; oy < oh; ++oy)
      for (std::size_t ox = 0; ox < ow; ++ox) {
        T acc = T(0);
        for (std::size_t dy = 0; dy < factor; ++dy)
          for (std::size_t dx = 0; dx < factor; ++dx) acc += in[(p * h + oy * factor + dy) * w + ox * factor + dx];
        out[(p * oh + oy) * ow + ox] = acc * inv;
      }
  return tape.record(std::move(out), {x}, [=](Tape<T>& t, std::size_t self) {
    const auto& gy = t.grad_of(self);
    auto& gx = t.grad_buffer(x.id);
    for (std::size_t p = 0; p < nc; ++p)
      for (std::size_t oy = 0; oy < oh; ++oy)
        for (std::size_t ox = 0; ox < ow; ++ox) {
          const T d = gy[(p * oh + oy) * ow + ox] * inv;
          for (std::size_t dy = 0; dy < factor; ++dy)
            for (std::size_t dx = 0; dx < factor; ++dx) gx[(p * h + oy * factor + dy) * w + ox * factor + dx] += d;
        }
  });
}

template <typename T>
Var global_avg_pool(Tape<T>& tape, Var x) {
  const auto& in = tape.value(x);
  require(in.rank() == 4, "global_avg_pool: input must be [N,C,H,W]");
  const std::size_t n = in.dim(0), c = in.dim(1), plane = in.dim(2) * in.dim(3);
  const T inv = T(1) / static_cast<T>(plane);
  Tensor<T> out(Shape{n, c});
  for (std::size_t p = 0; p < n * c; ++p) {
    T acc = T(0);
    for (std::size_t i = 0; i < plane; ++i) acc += in[p * plane + i];
    out[p] = acc * inv;
  }
  return tape.record(std::move(out), {x}, [=](Tape<T>& t, std::size_t self) {
    const auto& gy = t.grad_of(self);
    auto& gx = t.grad_buffer(x.id);
    for (std::size_t p = 0; p < n * c; ++p)
      for (std::size_t i = 0; i < plane; ++i) gx[p * plane + i] += gy[p] * inv;
  });
}

template <typename T>
Var concat_channels(Tape<T>& tape, Var a, Var b) {
  const auto& va = tape.value(a);
  const auto& vb = tape.value(b);
  require(va.rank() >= 2 && va.rank() == vb.rank() && va.dim(0) == vb.dim(0),
          "concat_channels: incompatible shapes " + shape_string(va.shape()) + " and " + shape_string(vb.shape()));
  for (std::size_t axis = 2; axis < va.rank(); ++axis)
    require(va.dim(axis) == vb.dim(axis), "concat_channels: spatial extents differ");
  const std::size_t n = va.dim(0);
  const std::size_t sa = va.numel() / n, sb = vb.numel() / n;
  Shape shape = va.shape();
  shape[1] += vb.dim(1);
  Tensor<T> out(shape);
  for (std::size_t i = 0; i < n; ++i) {
    std::copy_n(va.data() + i * sa, sa, out.data() + i * (sa + sb));
    std::copy_n(vb.data() + i * sb, sb, out.data() + i * (sa + sb) + sa);
  }
  return tape.record(std::move(out), {a, b}, [=](Tape<T>& t, std::size_t self) {
    const auto& gy = t.grad_of(self);
    if (t.requires_grad_of(a.id)) {
      auto& ga = t.grad_buffer(a.id);
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < sa; ++j) ga[i * sa + j] += gy[i * (sa + sb) + j];
    }
    if (t.requires_grad_of(b.id)) {
      auto& gb = t.grad_buffer(b.id);
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < sb; ++j) gb[i * sb + j] += gy[i * (sa + sb) + sa + j];
    }
  });
}

template <typename T>
Var sub(Tape<T>& tape, Var a, Var b) {
  check_same_shape(tape, a, b, "sub");
  const auto& va = tape.value(a);
  const auto& vb = tape.value(b);
  Tensor<T> out(va.shape());
  for (std::size_t i = 0; i < out.numel(); ++i) out[i] = va[i] - vb[i];
  return tape.record(std::move(out), {a, b}, [a, b](Tape<T>& t, std::size_t self) {
    const auto& gy = t.grad_of(self);
    if (t.requires_grad_of(a.id)) {
      auto& ga = t.grad_buffer(a.id);
      for (std::size_t i = 0; i < gy.numel(); ++i) ga[i] += gy[i];
    }
    if (t.requires_grad_of(b.id)) {
      auto& gb = t.grad_buffer(b.id);
      for (std::size_t i = 0; i < gy.numel(); ++i) gb[i] -= gy[i];
    }
  });
}

template <typename T>
Var add(Tape<T>& tape, Var a, Var b) {
  check_same_shape(tape, a, b, "add");
  const auto& va = tape.value(a);
  const auto& vb = tape.value(b);
  Tensor<T> out(va.shape());
  for (std::size_t i = 0; i < out.numel(); ++i) out[i] = va[i] + vb[i];
  return tape.record(std::move(out), {a, b}, [a, b](Tape<T>& t, std::size_t self) {
    const auto& gy = t.grad_of(self);
    for (auto id : {a.id, b.id}) {
      if (!t.requires_grad_of(id)) continue;
      auto& g = t.grad_buffer(id);
      for (std::size_t i = 0; i < gy.numel(); ++i) g[i] += gy[i];
    }
  });
}

template <typename T>
Var mul(Tape<T>& tape, Var a, Var b) {
  check_same_shape(tape, a, b, "mul");
  const auto& va = tape.value(a);
  const auto& vb = tape.value(b);
  Tensor<T> out(va.shape());
  for (std::size_t i = 0; i < out.numel(); ++i) out[i] = va[i] * vb[i];
  return tape.record(std::move(out), {a, b}, [a, b](Tape<T>& t, std::size_t self) {
    const auto& gy = t.grad_of(self);
    const auto& xa = t.value_of(a.id);
    const auto& xb = t.value_of(b.id);
    if (t.requires_grad_of(a.id)) {
      auto& ga = t.grad_buffer(a.id);
      for (std::size_t i = 0; i < gy.numel(); ++i) ga[i] += gy[i] * xb[i];
    }
    if (t.requires_grad_of(b.id)) {
      auto& gb = t.grad_buffer(b.id);
      for (std::size_t i = 0; i < gy.numel(); ++i) gb[i] += gy[i] * xa[i];
    }
  });
}

template <typename T>
Var scale(Tape<T>& tape, Var x, T factor) {
  const auto& in = tape.value(x);
  Tensor<T> out(in.shape());
  for (std::size_t i = 0; i < in.numel(); ++i) out[i] = in[i] * factor;
  return tape.record(std::move(out), {x}, [x, factor](Tape<T>& t, std::size_t self) {
    const auto& gy = t.grad_of(self);
    auto& gx = t.grad_buffer(x.id);
    for (std::size_t i = 0; i < gy.numel(); ++i) gx[i] += gy[i] * factor;
  });
}

template <typename T>
Var sum(Tape<T>& tape, Var x) {
  const auto& in = tape.value(x);
  T acc = T(0);
  for (auto v : in.values()) acc += v;
  return tape.record(Tensor<T>::scalar(acc), {x}, [x](Tape<T>& t, std::size_t self) {
    const T d = t.grad_of(self)[0];
    auto& gx = t.grad_buffer(x.id);
    for (std::size_t i = 0; i < gx.numel(); ++i) gx[i] += d;
  });
}

#define RANKMINI_INSTANTIATE_OPS(T)                                                \
  template Var conv2d<T>(Tape<T>&, Var, Var, Var, std::size_t, std::size_t);       \
  template Var dense<T>(Tape<T>&, Var, Var, Var);                                  \
  template Var relu<T>(Tape<T>&, Var);                                             \
  template Var leaky_relu<T>(Tape<T>&, Var, T);                                    \
  template Var sigmoid<T>(Tape<T>&, Var);                                          \
  template Var avg_pool<T>(Tape<T>&, Var, std::size_t);                            \
  template Var global_avg_pool<T>(Tape<T>&, Var);                                  \
  template Var concat_channels<T>(Tape<T>&, Var, Var);                             \
  template Var sub<T>(Tape<T>&, Var, Var);                                         \
  template Var add<T>(Tape<T>&, Var, Var);                                         \
  template Var mul<T>(Tape<T>&, Var, Var);                                         \
  template Var scale<T>(Tape<T>&, Var, T);                                         \
  template Var sum<T>(Tape<T>&, Var);

RANKMINI_INSTANTIATE_OPS(float)
RANKMINI_INSTANTIATE_OPS(double)

#undef RANKMINI_INSTANTIATE_OPS

}  // namespace rankmini::ad
