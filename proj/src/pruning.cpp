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

#include "rankmini/pruning.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>

#include "rankmini/errors.hpp"

namespace rankmini {

const LayerDensity* DensityReport::find(std::string_view layer) const {
  for (const auto& l : layers)
    if (l.layer == layer) return &l;
  return nullptr;
}

const LayerPlan* PruningPlan::find(std::string_view layer) const {
  for (const auto& l : layers)
    if (l.layer == layer) return &l;
  return nullptr;
}

template <typename T>
DensityReport compute_density(const ParameterSet<T>& params) {
  DensityReport r;
  for (const auto& e : params.entries) {
    LayerDensity d;
    d.layer = e.layer;
    d.total = e.weight.value.numel();
    for (T w : e.weight.value.values()) d.nonzero += (w != T(0));
    if (d.total == 0) {
      d.density = 1.0;
      r.warnings.push_back("layer '" + e.layer + "' has no weights; density taken as 1");
    } else {
      d.density = static_cast<double>(d.nonzero) / static_cast<double>(d.total);
      if (d.nonzero == 0) r.warnings.push_back("layer '" + e.layer + "' is entirely zero; keeping one channel");
    }
    r.nonzero += d.nonzero;
    r.total += d.total;
    r.layers.push_back(std::move(d));
  }
  r.global = r.total ? static_cast<double>(r.nonzero) / static_cast<double>(r.total) : 1.0;
  return r;
}

DensityReport full_density(const NetworkSpec& spec) {
  DensityReport r;
  for (std::size_t i : spec.parameterized()) {
    const auto& l = spec.layers[i];
    const std::size_t n = shape_numel(l.weight_shape());
    r.layers.push_back({l.name, n, n, 1.0});
    r.nonzero += n;
    r.total += n;
  }
  return r;
}

std::size_t retained_channels(std::size_t nonzero, std::size_t total, std::size_t channels) {
  if (total == 0) return channels;
  const std::size_t k = (2 * nonzero * channels + total) / (2 * total);
  return std::clamp<std::size_t>(k, 1, channels);
}

namespace {

std::vector<std::size_t> all_channels(std::size_t n) {
  std::vector<std::size_t> v(n);
  std::iota(v.begin(), v.end(), std::size_t{0});
  return v;
}

// Weight tensors are [out, in, ...]; the trailing extent is the per-pair slice.
std::size_t inner_extent(const Shape& s) {
  std::size_t k = 1;
  for (std::size_t i = 2; i < s.size(); ++i) k *= s[i];
  return k;
}

}  // namespace

template <typename T>
PruningPlan build_pruning_plan(const NetworkSpec& spec, const ParameterSet<T>& params, const DensityReport& report) {
  if (const auto problems = check_chain(spec); !problems.empty())
    throw StructureError("cannot plan pruning: " + problems.front());
  const auto order = spec.parameterized();
  PruningPlan plan;
  for (std::size_t i : order) {
    const auto& l = spec.layers[i];
    plan.layers.push_back({l.name, all_channels(l.in_channels), all_channels(l.out_channels), l.in_channels});
  }
  for (std::size_t k = plan.layers.size(); k-- > 1;) {
    const auto& l = spec.layers[order[k]];
    auto& lp = plan.layers[k];
    const auto* d = report.find(l.name);
    if (!d) throw StructureError("density report has no entry for layer '" + l.name + "'");
    const auto* p = params.find(l.name);
    if (!p || p->weight.value.shape() != l.weight_shape())
      throw StructureError("parameters for layer '" + l.name + "' do not match its spec");

    lp.target_in = retained_channels(d->nonzero, d->total, l.in_channels);
    const auto& w = p->weight.value;
    const std::size_t inner = inner_extent(w.shape());
    std::vector<double> score(l.in_channels, 0.0);
    for (std::size_t o : lp.keep_out)
      for (std::size_t c = 0; c < l.in_channels; ++c)
        for (std::size_t j = 0; j < inner; ++j)
          score[c] += std::abs(static_cast<double>(w[(o * l.in_channels + c) * inner + j]));
    auto ranked = all_channels(l.in_channels);
    std::stable_sort(ranked.begin(), ranked.end(), [&](std::size_t a, std::size_t b) { return score[a] > score[b]; });
    ranked.resize(lp.target_in);
    std::sort(ranked.begin(), ranked.end());
    lp.keep_in = ranked;
    plan.layers[k - 1].keep_out = std::move(ranked);
  }
  return plan;
}

std::vector<std::string> check_plan(const NetworkSpec& spec, const PruningPlan& plan) {
  std::vector<std::string> out;
  const auto order = spec.parameterized();
  if (plan.layers.size() != order.size()) {
    out.push_back("plan covers " + std::to_string(plan.layers.size()) + " layers, network has " +
                  std::to_string(order.size()));
    return out;
  }
  auto check_indices = [&](const std::string& layer, const char* what, const std::vector<std::size_t>& idx,
                           std::size_t extent) {
    if (idx.empty()) out.push_back(layer + ": no " + what + " channels retained");
    for (std::size_t i = 0; i < idx.size(); ++i) {
      if (idx[i] >= extent) out.push_back(layer + ": " + what + " index " + std::to_string(idx[i]) + " out of range");
      if (i && idx[i] <= idx[i - 1]) out.push_back(layer + ": " + what + " indices not strictly increasing");
    }
  };
  for (std::size_t k = 0; k < order.size(); ++k) {
    const auto& l = spec.layers[order[k]];
    const auto& lp = plan.layers[k];
    if (lp.layer != l.name) {
      out.push_back("plan entry " + std::to_string(k) + " is '" + lp.layer + "', expected '" + l.name + "'");
      continue;
    }
    check_indices(l.name, "input", lp.keep_in, l.in_channels);
    check_indices(l.name, "output", lp.keep_out, l.out_channels);
    if (k + 1 < order.size() && lp.keep_out != plan.layers[k + 1].keep_in)
      out.push_back(l.name + " outputs disagree with " + plan.layers[k + 1].layer + " inputs");
  }
  if (!plan.layers.empty()) {
    if (plan.layers.front().keep_in.size() != spec.layers[order.front()].in_channels)
      out.push_back(plan.layers.front().layer + ": network input channels cannot be pruned");
    if (plan.layers.back().keep_out.size() != spec.layers[order.back()].out_channels)
      out.push_back(plan.layers.back().layer + ": score head outputs cannot be pruned");
  }
  return out;
}

template <typename T>
Model<T> prune_network(const NetworkSpec& spec, const ParameterSet<T>& params, const PruningPlan& plan) {
  if (const auto problems = check_plan(spec, plan); !problems.empty()) throw StructureError(problems.front());
  Model<T> out;
  out.spec = spec;
  std::size_t k = 0;
  for (std::size_t i : spec.parameterized()) {
    auto& l = out.spec.layers[i];
    const auto& lp = plan.layers[k++];
    const auto* p = params.find(l.name);
    if (!p) throw StructureError("layer '" + l.name + "': no parameters");
    if (p->weight.value.shape() != l.weight_shape() || p->bias.value.shape() != l.bias_shape())
      throw StructureError("layer '" + l.name + "': parameter shape " + shape_string(p->weight.value.shape()) +
                           " does not match spec " + shape_string(l.weight_shape()));
    const auto& w = p->weight.value;
    const std::size_t inner = inner_extent(w.shape());
    const std::size_t cin = l.in_channels;
    l.in_channels = lp.keep_in.size();
    l.out_channels = lp.keep_out.size();
    Tensor<T> nw(l.weight_shape());
    Tensor<T> nb(l.bias_shape());
    for (std::size_t a = 0; a < lp.keep_out.size(); ++a) {
      const std::size_t o = lp.keep_out[a];
      nb[a] = p->bias.value[o];
      for (std::size_t b = 0; b < lp.keep_in.size(); ++b)
        std::copy_n(w.data() + (o * cin + lp.keep_in[b]) * inner, inner,
                    nw.data() + (a * l.in_channels + b) * inner);
    }
    out.params.entries.push_back({l.name, {std::move(nw), std::nullopt}, {std::move(nb), std::nullopt}});
  }
  return out;
}

template <typename T>
std::vector<std::string> validate_structure(const NetworkSpec& spec, const ParameterSet<T>& params) {
  auto out = check_chain(spec);
  const auto order = spec.parameterized();
  for (std::size_t i : order) {
    const auto& l = spec.layers[i];
    const auto* p = params.find(l.name);
    if (!p) {
      out.push_back("layer '" + l.name + "' has no parameters");
      continue;
    }
    if (p->weight.value.shape() != l.weight_shape())
      out.push_back("layer '" + l.name + "' weight is " + shape_string(p->weight.value.shape()) + ", spec says " +
                    shape_string(l.weight_shape()));
    if (p->bias.value.shape() != l.bias_shape())
      out.push_back("layer '" + l.name + "' bias is " + shape_string(p->bias.value.shape()) + ", spec says " +
                    shape_string(l.bias_shape()));
  }
  for (const auto& e : params.entries) {
    const auto* l = spec.find(e.layer);
    if (!l || !l->has_params()) out.push_back("parameters for '" + e.layer + "' match no conv/dense layer");
  }
  if (!out.empty()) return out;
  try {
    const Tensor<T> zero(spec.input.batch_shape(1));
    const double s = quality_score(spec, params, zero, zero);
    if (!std::isfinite(s)) out.push_back("dry-run forward produced a non-finite score");
  } catch (const std::exception& e) {
    out.push_back(std::string("dry-run forward failed: ") + e.what());
  }
  return out;
}

std::string format_density_report(const DensityReport& report) {
  std::ostringstream out;
  char buf[160];
  std::snprintf(buf, sizeof buf, "%-10s %12s %12s %10s\n", "layer", "nonzero", "total", "density");
  out << buf;
  for (const auto& l : report.layers) {
    std::snprintf(buf, sizeof buf, "%-10s %12zu %12zu %10.6f\n", l.layer.c_str(), l.nonzero, l.total, l.density);
    out << buf;
  }
  std::snprintf(buf, sizeof buf, "%-10s %12zu %12zu %10.6f\n", "global", report.nonzero, report.total, report.global);
  out << buf;
  for (const auto& w : report.warnings) out << "# warning: " << w << '\n';
  return out.str();
}

std::string format_pruning_plan(const PruningPlan& plan) {
  auto list = [](const std::vector<std::size_t>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
    return s;
  };
  std::ostringstream out;
  out << "layer\ttarget_in\tkept_in\tkept_out\tin_indices\tout_indices\n";
  for (const auto& l : plan.layers)
    out << l.layer << '\t' << l.target_in << '\t' << l.keep_in.size() << '\t' << l.keep_out.size() << '\t'
        << list(l.keep_in) << '\t' << list(l.keep_out) << '\n';
  return out.str();
}

#define RANKMINI_INSTANTIATE_PRUNING(T)                                                                       \
  template DensityReport compute_density<T>(const ParameterSet<T>&);                                          \
  template PruningPlan build_pruning_plan<T>(const NetworkSpec&, const ParameterSet<T>&, const DensityReport&); \
  template Model<T> prune_network<T>(const NetworkSpec&, const ParameterSet<T>&, const PruningPlan&);         \
  template std::vector<std::string> validate_structure<T>(const NetworkSpec&, const ParameterSet<T>&);

RANKMINI_INSTANTIATE_PRUNING(float)
RANKMINI_INSTANTIATE_PRUNING(double)

#undef RANKMINI_INSTANTIATE_PRUNING

}  // namespace rankmini
