// Copyright 2026 The specguard Authors.
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

#include <filesystem>
#include <string>

#include "specguard/network.hpp"

namespace specguard {

/// Versioned JSON encoding of a Net: layer kinds, shapes, activation tags and
/// every weight. Numbers are written in shortest round-trip form, so decoding
/// restores each double bit-exactly (non-finite values are written as the
/// strings "nan", "inf" and "-inf").
std::string net_to_json(const Net& net, const std::string& meta_json = "{}");
Net net_from_json(const std::string& text);

void save_net(const Net& net, const std::filesystem::path& path,
              const std::string& meta_json = "{}");
Net load_net(const std::filesystem::path& path);

}  // namespace specguard
