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

#include "cfteach/domain_io.hpp"

#include <algorithm>
#include <fstream>
#include <random>
#include <sstream>

#include "cfteach/errors.hpp"

namespace cfteach {

using nlohmann::json;

namespace {

// Generator seed and layout count of each built-in, picked so that the
// policy BEC is a sliver of a few percent of the sphere and the pool holds
// 40-70 demonstrations.
struct GeneratedLayouts {
  std::uint64_t seed;
  int count;
};

constexpr std::uint64_t kAssessmentLayoutSeed = 104;
constexpr int kAssessmentLayoutCount = 6;

GeneratedLayouts generated_layouts(BuiltinDomain d) {
  switch (d) {
    case BuiltinDomain::kDelivery: return {77, 1};
    case BuiltinDomain::kTiles: return {15, 3};
    case BuiltinDomain::kSkateboard: return {3, 2};
  }
  return {0, 0};
}

int uniform_int(std::mt19937_64& rng, int lo, int hi) {
  return std::uniform_int_distribution<int>(lo, hi)(rng);
}

// ---------------------------------------------------------------------------
// Config parsing

std::string line_of(std::string_view text, std::size_t byte) {
  const auto end = std::min(byte, text.size());
  const auto line = 1 + std::count(text.begin(), text.begin() + static_cast<long>(end), '\n');
  return "line " + std::to_string(line);
}

const json& require(const json& obj, const std::string& key, const std::string& path) {
  if (!obj.is_object()) throw SchemaError(path + ": expected an object");
  auto it = obj.find(key);
  if (it == obj.end()) throw SchemaError(path + "." + key + ": missing");
  return *it;
}

double as_number(const json& j, const std::string& path) {
  if (!j.is_number()) throw SchemaError(path + ": expected a number");
  return j.get<double>();
}

std::string as_string(const json& j, const std::string& path) {
  if (!j.is_string()) throw SchemaError(path + ": expected a string");
  return j.get<std::string>();
}

const json& as_array(const json& j, const std::string& path) {
  if (!j.is_array()) throw SchemaError(path + ": expected an array");
  return j;
}

std::pair<int, int> as_xy(const json& j, const std::string& path) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number_integer() ||
      !j[1].is_number_integer()) {
    throw SchemaError(path + ": expected [x, y] integers");
  }
  return {j[0].get<int>(), j[1].get<int>()};
}

GridEnvironment parse_environment(const json& j, int index, const FeatureSpec& spec) {
  const std::string path = "$.environments[" + std::to_string(index) + "]";
  if (!j.is_object()) throw SchemaError(path + ": expected an object");
  std::string id = "env" + std::to_string(index);
  if (j.contains("id")) id = as_string(j["id"], path + ".id");

  std::vector<std::string> rows;
  const json& grid = as_array(require(j, "grid", path), path + ".grid");
  for (std::size_t r = 0; r < grid.size(); ++r) {
    rows.push_back(as_string(grid[r], path + ".grid[" + std::to_string(r) + "]"));
  }

  std::uint32_t flags = 0;
  if (j.contains("flags")) {
    const json& f = j["flags"];
    if (!f.is_object()) throw SchemaError(path + ".flags: expected an object");
    for (auto it = f.begin(); it != f.end(); ++it) {
      if (!it.value().is_boolean()) {
        throw SchemaError(path + ".flags." + it.key() + ": expected a boolean");
      }
      const int bit = spec.flag_index(it.key());
      if (bit < 0) {
        throw SemanticError(path + ".flags: unknown flag '" + it.key() + "'");
      }
      if (it.value().get<bool>()) flags |= 1u << bit;
    }
  }

  std::vector<State> starts;
  const bool one = j.contains("start");
  const bool many = j.contains("starts");
  if (one == many) {
    throw SchemaError(path + ": exactly one of 'start' or 'starts' is required");
  }
  if (one) {
    auto [x, y] = as_xy(j["start"], path + ".start");
    starts.push_back(State{x, y, flags});
  } else {
    const json& list = as_array(j["starts"], path + ".starts");
    for (std::size_t i = 0; i < list.size(); ++i) {
      auto [x, y] = as_xy(list[i], path + ".starts[" + std::to_string(i) + "]");
      starts.push_back(State{x, y, flags});
    }
  }
  try {
    return GridEnvironment::from_rows(std::move(id), rows, std::move(starts));
  } catch (const SchemaError& e) {
    std::string_view msg = e.what();
    if (msg.starts_with("SchemaError: ")) msg.remove_prefix(13);
    throw SchemaError(path + ".grid: " + std::string(msg));
  }
}

Domain parse_domain(const json& doc) {
  if (!doc.is_object()) throw SchemaError("top level: expected an object");
  const std::string name = as_string(require(doc, "name", "$"), "$.name");

  std::vector<Feature> features;
  const json& fs = as_array(require(doc, "features", "$"), "$.features");
  for (std::size_t i = 0; i < fs.size(); ++i) {
    const std::string path = "$.features[" + std::to_string(i) + "]";
    const std::string fname = as_string(require(fs[i], "name", path), path + ".name");
    const std::string tname = as_string(require(fs[i], "trigger", path), path + ".trigger");
    auto trigger = parse_trigger(tname);
    if (!trigger) throw SemanticError(path + ".trigger: unknown trigger '" + tname + "'");
    features.push_back(Feature{fname, *trigger});
  }
  FeatureSpec spec(std::move(features));

  const json& ws = as_array(require(doc, "weights", "$"), "$.weights");
  Eigen::VectorXd w(static_cast<Eigen::Index>(ws.size()));
  for (std::size_t i = 0; i < ws.size(); ++i) {
    w[static_cast<Eigen::Index>(i)] = as_number(ws[i], "$.weights[" + std::to_string(i) + "]");
  }
  if (w.size() != spec.size()) {
    throw SemanticError("$.weights: " + std::to_string(w.size()) + " weights for " +
                        std::to_string(spec.size()) + " features");
  }
  if (!w.allFinite() || w.norm() == 0.0) {
    throw SemanticError("$.weights: must be finite and not all zero");
  }
  if (w[spec.action_index()] >= 0.0) {
    throw SemanticError("$.weights: the action weight must be negative (got " +
                        std::to_string(w[spec.action_index()]) +
                        "); otherwise optimal trajectories need not end");
  }

  double discount = 1.0;
  if (doc.contains("discount")) discount = as_number(doc["discount"], "$.discount");

  std::vector<GridEnvironment> envs;
  const json& es = as_array(require(doc, "environments", "$"), "$.environments");
  for (std::size_t i = 0; i < es.size(); ++i) {
    envs.push_back(parse_environment(es[i], static_cast<int>(i), spec));
  }
  return Domain(name, std::move(spec), WeightVector::normalized(w), discount, std::move(envs));
}

// ---------------------------------------------------------------------------
// Generators

std::vector<std::pair<int, int>> open_cells(const std::vector<std::string>& rows) {
  std::vector<std::pair<int, int>> out;
  for (int y = 0; y < static_cast<int>(rows.size()); ++y) {
    for (int x = 0; x < static_cast<int>(rows[y].size()); ++x) {
      if (rows[y][x] == '.') out.emplace_back(x, y);
    }
  }
  return out;
}

std::pair<int, int> take_cell(std::vector<std::pair<int, int>>& cells,
                              std::mt19937_64& rng) {
  const int i = uniform_int(rng, 0, static_cast<int>(cells.size()) - 1);
  auto c = cells[i];
  cells.erase(cells.begin() + i);
  return c;
}

// One attempt; may produce a disconnected layout.
GridEnvironment draw_layout(BuiltinDomain kind, const std::string& id, int width,
                            int height, std::mt19937_64& rng) {
  std::vector<std::string> rows(height, std::string(width, '.'));
  auto cells = open_cells(rows);
  auto place = [&](char c) {
    auto [x, y] = take_cell(cells, rng);
    rows[y][x] = c;
    return std::make_pair(x, y);
  };
  place('G');
  switch (kind) {
    case BuiltinDomain::kDelivery: {
      const int muds = uniform_int(rng, 2, 4);
      for (int i = 0; i < muds; ++i) place('m');
      place('r');
      const int walls = uniform_int(rng, 0, 3);
      for (int i = 0; i < walls; ++i) place('#');
      break;
    }
    case BuiltinDomain::kTiles: {
      const int area = width * height;
      const int as = uniform_int(rng, area / 6, area / 4);
      const int bs = uniform_int(rng, area / 6, area / 4);
      for (int i = 0; i < as; ++i) place('a');
      for (int i = 0; i < bs; ++i) place('b');
      const int walls = uniform_int(rng, 0, 2);
      for (int i = 0; i < walls; ++i) place('#');
      break;
    }
    case BuiltinDomain::kSkateboard: {
      // A straight run of path cells, then the skateboard somewhere else.
      const bool horizontal = uniform_int(rng, 0, 1) == 1;
      const int len = uniform_int(rng, 2, std::max(2, (horizontal ? width : height) - 1));
      const int x0 = uniform_int(rng, 0, horizontal ? width - len : width - 1);
      const int y0 = uniform_int(rng, 0, horizontal ? height - 1 : height - len);
      for (int i = 0; i < len; ++i) {
        const int x = horizontal ? x0 + i : x0;
        const int y = horizontal ? y0 : y0 + i;
        if (rows[y][x] != '.') continue;
        rows[y][x] = 'p';
        cells.erase(std::find(cells.begin(), cells.end(), std::make_pair(x, y)));
      }
      place('s');
      const int walls = uniform_int(rng, 0, 2);
      for (int i = 0; i < walls; ++i) place('#');
      break;
    }
  }
  // Every open non-goal cell is a start, so the candidate demos cover the
  // whole policy.
  std::vector<State> starts;
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      if (rows[y][x] != '#' && rows[y][x] != 'G') starts.push_back(State{x, y, 0});
    }
  }
  return GridEnvironment::from_rows(id, rows, std::move(starts));
}

}  // namespace

// ---------------------------------------------------------------------------

std::string_view builtin_name(BuiltinDomain d) {
  switch (d) {
    case BuiltinDomain::kDelivery: return "delivery";
    case BuiltinDomain::kTiles: return "tiles";
    case BuiltinDomain::kSkateboard: return "skateboard";
  }
  return "?";
}

std::optional<BuiltinDomain> parse_builtin(std::string_view name) {
  for (BuiltinDomain d : kBuiltinDomains) {
    if (builtin_name(d) == name) return d;
  }
  return std::nullopt;
}

int default_demo_cap(BuiltinDomain d) {
  return d == BuiltinDomain::kSkateboard ? 7 : 5;
}

FeatureSpec builtin_features(BuiltinDomain d) {
  switch (d) {
    case BuiltinDomain::kDelivery:
      return FeatureSpec({{"mud", Trigger::kMudExit},
                          {"recharge", Trigger::kRecharge},
                          {"action", Trigger::kAction}});
    case BuiltinDomain::kTiles:
      return FeatureSpec({{"tile_a", Trigger::kTileA},
                          {"tile_b", Trigger::kTileB},
                          {"action", Trigger::kAction}});
    case BuiltinDomain::kSkateboard:
      return FeatureSpec({{"ride", Trigger::kRide},
                          {"path", Trigger::kPath},
                          {"action", Trigger::kAction}});
  }
  throw std::invalid_argument("unknown built-in domain");
}

WeightVector builtin_weights(BuiltinDomain d) {
  switch (d) {
    case BuiltinDomain::kDelivery: return WeightVector::normalized({-3.0, 3.5, -1.0});
    case BuiltinDomain::kTiles: return WeightVector::normalized({-1.3, -3.6, -1.0});
    case BuiltinDomain::kSkateboard: return WeightVector::normalized({0.59, 0.34, -1.0});
  }
  throw std::invalid_argument("unknown built-in domain");
}

GridEnvironment single_patch_environment() {
  return GridEnvironment::from_rows("delivery-single-patch", {"#...#", "..m.G"},
                                    {State{0, 1, 0}});
}

GridEnvironment two_patch_environment() {
  return GridEnvironment::from_rows("delivery-two-patch",
                                    {".......", ".#####.", ".#####.", ".#####.",
                                     "..m.m.G"},
                                    {State{0, 4, 0}});
}

GridEnvironment random_environment(BuiltinDomain kind, std::string id, int width,
                                   int height, std::uint64_t seed) {
  if (width < 3 || height < 3) throw std::invalid_argument("grid must be at least 3x3");
  const FeatureSpec spec = builtin_features(kind);
  for (std::uint64_t attempt = 0; attempt < 1000; ++attempt) {
    std::mt19937_64 rng(derive_seed(seed, attempt));
    GridEnvironment env = draw_layout(kind, id, width, height, rng);
    try {
      validate_environment(env, spec);
      return env;
    } catch (const SemanticError&) {
    }
  }
  throw std::runtime_error("could not generate a connected layout for '" + id + "'");
}

std::vector<GridEnvironment> generated_environments(BuiltinDomain d, std::uint64_t seed,
                                                   int count) {
  const std::string name(builtin_name(d));
  const FeatureSpec spec = builtin_features(d);
  std::vector<GridEnvironment> envs;
  for (int i = 0; i < count; ++i) {
    const std::uint64_t s =
        derive_seed(seed, static_cast<std::uint64_t>(d), static_cast<std::uint64_t>(i));
    std::mt19937_64 rng(s);
    const int w = uniform_int(rng, 4, 5);
    const int h = uniform_int(rng, 4, 5);
    char id[32];
    std::snprintf(id, sizeof id, "%s-%02d", name.c_str(), i);
    envs.push_back(random_environment(d, id, w, h, s));
  }
  // The same layouts entered with each flag already set, so that every
  // state of the domain starts some candidate demonstration.
  for (int i = 0; i < count; ++i) {
    for (std::size_t b = 0; b < spec.flags().size(); ++b) {
      GridEnvironment copy = envs[i];
      copy.id += "+" + spec.flags()[b];
      for (State& st : copy.starts) st.flags |= 1u << b;
      envs.push_back(std::move(copy));
    }
  }
  return envs;
}

Domain builtin_domain(BuiltinDomain d) {
  std::vector<GridEnvironment> envs;
  if (d == BuiltinDomain::kDelivery) {
    envs.push_back(single_patch_environment());
    envs.push_back(two_patch_environment());
  }
  const GeneratedLayouts layouts = generated_layouts(d);
  for (GridEnvironment& e : generated_environments(d, layouts.seed, layouts.count)) {
    envs.push_back(std::move(e));
  }
  return Domain(std::string(builtin_name(d)), builtin_features(d), builtin_weights(d), 1.0,
                std::move(envs));
}

Domain builtin_assessment_domain(BuiltinDomain d) {
  std::vector<GridEnvironment> envs =
      generated_environments(d, kAssessmentLayoutSeed, kAssessmentLayoutCount);
  for (GridEnvironment& e : envs) e.id = "test-" + e.id;
  return Domain(std::string(builtin_name(d)), builtin_features(d), builtin_weights(d), 1.0,
                std::move(envs));
}

Domain load_domain(std::string_view config_text) {
  json doc;
  try {
    doc = json::parse(config_text);
  } catch (const json::parse_error& e) {
    throw SchemaError(line_of(config_text, e.byte) + ": " + e.what());
  }
  return parse_domain(doc);
}

Domain load_domain_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw SchemaError("cannot read domain file '" + path.string() + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return load_domain(buf.str());
}

Domain resolve_domain(std::string_view ref) {
  if (auto d = parse_builtin(ref)) return builtin_domain(*d);
  return load_domain_file(std::filesystem::path(ref));
}

json domain_to_json(const Domain& domain) {
  json doc;
  doc["name"] = domain.name();
  doc["discount"] = domain.discount();
  json features = json::array();
  for (const Feature& f : domain.spec().features()) {
    features.push_back({{"name", f.name}, {"trigger", std::string(trigger_name(f.trigger))}});
  }
  doc["features"] = std::move(features);
  json weights = json::array();
  for (int i = 0; i < domain.true_weights().size(); ++i) {
    weights.push_back(domain.true_weights()[i]);
  }
  doc["weights"] = std::move(weights);
  json envs = json::array();
  for (const GridEnvironment& env : domain.environments()) {
    json e;
    e["id"] = env.id;
    e["grid"] = env.rows();
    json starts = json::array();
    for (const State& s : env.starts) starts.push_back({s.x, s.y});
    if (env.starts.size() == 1) {
      e["start"] = starts[0];
    } else {
      e["starts"] = std::move(starts);
    }
    // Starts share one flag assignment in this format.
    json flags = json::object();
    for (std::size_t b = 0; b < domain.spec().flags().size(); ++b) {
      flags[domain.spec().flags()[b]] = ((env.starts.front().flags >> b) & 1u) != 0;
    }
    e["flags"] = std::move(flags);
    envs.push_back(std::move(e));
  }
  doc["environments"] = std::move(envs);
  return doc;
}

std::string serialize_domain(const Domain& domain) {
  return domain_to_json(domain).dump(2) + "\n";
}

}  // namespace cfteach
