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

#include <string>
#include <vector>

#include "rankmini/network.hpp"

namespace rankmini {

struct LayerDensity {
  std::string layer;
  std::size_t nonzero = 0;
  std::size_t total = 0;
  double density = 1.0;
};

/// Weight densities per conv/dense layer; biases are not counted.
struct DensityReport {
  std::vector<LayerDensity> layers;
  std::size_t nonzero = 0;
  std::size_t total = 0;
  double global = 1.0;
  std::vector<std::string> warnings;

  const LayerDensity* find(std::string_view layer) const;
};

template <typename T>
DensityReport compute_density(const ParameterSet<T>& params);

/// Report with density 1 for every parameterized layer of `spec`.
DensityReport full_density(const NetworkSpec& spec);

/// round-half-up(nonzero * channels / total), clamped to [1, channels], in exact integer arithmetic.
std::size_t retained_channels(std::size_t nonzero, std::size_t total, std::size_t channels);

struct LayerPlan {
  std::string layer;
  std::vector<std::size_t> keep_in;
  std::vector<std::size_t> keep_out;
  std::size_t target_in = 0;
};

struct PruningPlan {
  std::vector<LayerPlan> layers;  // parameterized layers in data-path order

  const LayerPlan* find(std::string_view layer) const;
};

/// Walks the parameterized layers from last to first. Each layer keeps
/// retained_channels(...) input channels chosen by the l1 norm of their weight
/// slice over the layer's already-retained outputs (ties to the lower index);
/// the producing layer keeps the same output channels. The network input and
/// the score head output are never pruned. Throws StructureError on a spec
/// that fails check_chain or a report missing a layer.
template <typename T>
PruningPlan build_pruning_plan(const NetworkSpec& spec, const ParameterSet<T>& params, const DensityReport& report);

/// Problems with a plan against a spec; empty when the plan is chain-consistent.
std::vector<std::string> check_plan(const NetworkSpec& spec, const PruningPlan& plan);

/// Slices weights and biases per plan. Throws StructureError naming the layer
/// on any plan/parameter mismatch.
template <typename T>
Model<T> prune_network(const NetworkSpec& spec, const ParameterSet<T>& params, const PruningPlan& plan);

/// Chain compatibility, parameter/spec agreement, and a dry-run forward on a
/// zero patch. Never throws; returns the list of violations.
template <typename T>
std::vector<std::string> validate_structure(const NetworkSpec& spec, const ParameterSet<T>& params);

std::string format_density_report(const DensityReport& report);
std::string format_pruning_plan(const PruningPlan& plan);

}  // namespace rankmini
