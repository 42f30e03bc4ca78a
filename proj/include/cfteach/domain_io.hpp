// Copyright 2026 The Authors.
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

// Domain configuration files and the built-in domains.
//
// Config format (JSON):
//   {"name": "...",
//    "features": [{"name": "mud", "trigger": "mud_exit"}, ...],
//    "weights": [-3, 3.5, -1],          // normalized on load
//    "discount": 1.0,
//    "environments": [{"id": "e0",      // optional
//                      "grid": ["#...#", "..m.G"],
//                      "start": [0, 1], // or "starts": [[0, 1], ...]
//                      "flags": {"recharged": false}}]}

#ifndef CFTEACH_DOMAIN_IO_HPP_
#define CFTEACH_DOMAIN_IO_HPP_

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>

#include <json.hpp>

#include "cfteach/mdp.hpp"

namespace cfteach {

enum class BuiltinDomain { kDelivery, kTiles, kSkateboard };

inline constexpr std::array<BuiltinDomain, 3> kBuiltinDomains = {
    BuiltinDomain::kDelivery, BuiltinDomain::kTiles, BuiltinDomain::kSkateboard};

std::string_view builtin_name(BuiltinDomain d);
std::optional<BuiltinDomain> parse_builtin(std::string_view name);

Domain builtin_domain(BuiltinDomain d);
// Same features and weights over separate layouts (ids "test-..."), used to
// build test suites the learner has not seen during teaching.
Domain builtin_assessment_domain(BuiltinDomain d);

// Default teaching-demo cap per built-in domain (5, 5, 7).
int default_demo_cap(BuiltinDomain d);

// The single-mud detour and two-mud go-through situations of the delivery
// domain, as fixed environments.
GridEnvironment single_patch_environment();
GridEnvironment two_patch_environment();

// A random layout of the given kind, connected to its goal, with every open
// non-goal cell as a start.
GridEnvironment random_environment(BuiltinDomain kind, std::string id, int width,
                                   int height, std::uint64_t seed);

// `count` random 4x5-ish layouts of the given kind, each followed (after all
// layouts) by one copy per state flag with that flag set at every start.
std::vector<GridEnvironment> generated_environments(BuiltinDomain d, std::uint64_t seed,
                                                   int count);

// The feature vocabulary and true weights of a built-in domain.
FeatureSpec builtin_features(BuiltinDomain d);
WeightVector builtin_weights(BuiltinDomain d);

// Throws SchemaError (with line or field path) or SemanticError.
Domain load_domain(std::string_view config_text);
Domain load_domain_file(const std::filesystem::path& path);
// A built-in name or a config file path.
Domain resolve_domain(std::string_view ref);

nlohmann::json domain_to_json(const Domain& domain);
std::string serialize_domain(const Domain& domain);

}  // namespace cfteach

#endif  // CFTEACH_DOMAIN_IO_HPP_
