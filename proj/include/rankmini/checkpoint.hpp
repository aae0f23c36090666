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

#include <cstdint>
#include <map>
#include <string>
#include <string_view>

#include "rankmini/network.hpp"

namespace rankmini {

/// Network description, parameters and free-form metadata (role, epoch, ...).
///
/// On disk: a plaintext manifest (one `layer` line per layer, one `tensor`
/// line per weight/bias with shape and byte offset), a `checksum` line, an
/// `end` line, then every tensor as little-endian float32 in manifest order.
/// The checksum is FNV-1a 64 over the manifest text and the blob.
struct Checkpoint {
  NetworkSpec spec;
  ParameterSet<float> params;
  std::map<std::string, std::string> meta;
};

std::string encode_checkpoint(const Checkpoint& ckpt);
Checkpoint decode_checkpoint(std::string_view bytes);

void save_checkpoint(const std::string& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::string& path);

/// Hash of parameter values only; used to prove a model was left untouched.
std::uint64_t params_hash(const ParameterSet<float>& params);

}  // namespace rankmini
