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

#include "cfteach/session.hpp"

#include <chrono>
#include <ctime>
#include <fstream>
#include <sstream>

#include <httplib.h>
#include <openssl/evp.h>

#include "cfteach/errors.hpp"

namespace cfteach {

using nlohmann::json;

namespace {

json xy(const State& s) { return json::array({s.x, s.y}); }

json flags_json(const FeatureSpec& spec, std::uint32_t flags) {
  json out = json::object();
  for (std::size_t b = 0; b < spec.flags().size(); ++b) {
    out[spec.flags()[b]] = ((flags >> b) & 1u) != 0;
  }
  return out;
}

std::uint32_t flags_from_json(const FeatureSpec& spec, const json& j) {
  std::uint32_t out = 0;
  if (!j.is_object()) return out;
  for (auto it = j.begin(); it != j.end(); ++it) {
    const int b = spec.flag_index(it.key());
    if (b < 0) throw SchemaError("unknown flag '" + it.key() + "'");
    if (it.value().get<bool>()) out |= 1u << b;
  }
  return out;
}

json actions_json(const Trajectory& t) {
  json out = json::array();
  for (const Step& s : t.steps) out.push_back(std::string(action_name(s.action)));
  return out;
}

std::vector<Action> actions_from_json(const json& j) {
  if (!j.is_array()) throw SchemaError("actions: expected an array");
  std::vector<Action> out;
  for (const json& a : j) {
    const auto parsed = a.is_string() ? parse_action(a.get<std::string>()) : std::nullopt;
    if (!parsed) throw SchemaError("actions: unknown action " + a.dump());
    out.push_back(*parsed);
  }
  return out;
}

json vector_json(const Eigen::VectorXd& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

json constraints_json(const ConstraintSet& cs) {
  json out = json::array();
  for (const HalfSpaceConstraint& c : cs) out.push_back(vector_json(c.normal()));
  return out;
}

json area_json(const AreaEstimate& a) {
  return {{"fraction", a.fraction}, {"half_width", a.half_width}, {"samples", a.samples}};
}

// The part of a step or test that locates it: environment and start.
json placement_json(const Domain& domain, const Demonstration& d) {
  const GridEnvironment& env = domain.environments()[d.env_index];
  return {{"env_id", env.id},
          {"grid", env.rows()},
          {"start", xy(d.trajectory.start)},
          {"flags", flags_json(domain.spec(), d.trajectory.start.flags)}};
}

const json& field(const json& obj, const std::string& key, const std::string& where) {
  if (!obj.is_object() || !obj.contains(key)) {
    throw SchemaError(where + ": missing '" + key + "'");
  }
  return obj.at(key);
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw SchemaError("cannot read '" + path.string() + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::string dump(const json& doc) { return doc.dump(2) + "\n"; }

std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  const auto ms =
      std::chrono::duration_cast<std::chrono::milliseconds>(now.time_since_epoch()).count() %
      1000;
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%S", &tm);
  char out[48];
  std::snprintf(out, sizeof out, "%s.%03dZ", buf, static_cast<int>(ms));
  return out;
}

json legend() {
  return {{".", "empty"},     {"#", "wall"},  {"m", "mud"},  {"r", "recharge"},
          {"G", "goal"},      {"a", "tile A"}, {"b", "tile B"}, {"p", "path"},
          {"s", "skateboard"}};
}

}  // namespace

json domain_identity(const Domain& domain) {
  json features = json::array();
  for (const Feature& f : domain.spec().features()) {
    features.push_back({{"name", f.name}, {"trigger", std::string(trigger_name(f.trigger))}});
  }
  return {{"name", domain.name()},
          {"features", std::move(features)},
          {"weights", vector_json(domain.true_weights().values())},
          {"discount", domain.discount()}};
}

json curriculum_to_json(const Domain& domain, const Curriculum& curriculum,
                        const CurriculumOptions& options) {
  json doc;
  doc["kind"] = "curriculum";
  doc["version"] = kFileVersion;
  doc["domain"] = domain_identity(domain);
  doc["config"] = {{"strategy", std::string(strategy_name(curriculum.strategy.inner))},
                   {"feature_scaffolding", curriculum.strategy.feature_scaffolded},
                   {"m", options.m},
                   {"epsilon", options.epsilon},
                   {"max_demos", options.max_demos},
                   {"gain_ratio", options.gain_ratio},
                   {"pool_cap", options.pool_cap},
                   {"area_samples", options.area_samples},
                   {"seed", options.seed}};
  json mask = json::array();
  for (int f : curriculum.mask.features) mask.push_back(domain.spec()[f].name);
  doc["mask"] = std::move(mask);
  doc["prior_area"] = area_json(curriculum.prior_area);
  json steps = json::array();
  for (std::size_t i = 0; i < curriculum.steps.size(); ++i) {
    const CurriculumStep& s = curriculum.steps[i];
    json step = placement_json(domain, s.demo);
    step["index"] = i + 1;
    step["actions"] = actions_json(s.demo.trajectory);
    step["features"] = vector_json(s.demo.trajectory.features);
    step["info_gain"] = s.info_gain;
    step["area_after"] = area_json(s.area_after);
    step["phase"] = s.phase;
    step["constraints"] = constraints_json(s.conveyed);
    if (s.target_ratio) step["target_ratio"] = *s.target_ratio;
    steps.push_back(std::move(step));
  }
  doc["steps"] = std::move(steps);
  doc["final_belief"] = {{"area", area_json(curriculum.final_belief.area())},
                         {"constraints", constraints_json(curriculum.final_belief.constraints())}};
  doc["notes"] = curriculum.notes;
  return doc;
}

json suite_to_json(const Domain& domain, const TestSuite& suite, const BeliefRegion& belief,
                   const SuiteEcho& echo) {
  json doc;
  doc["kind"] = "test-suite";
  doc["version"] = kFileVersion;
  doc["domain"] = domain_identity(domain);
  doc["config"] = {{"belief", echo.belief},
                   {"per_tier", echo.per_tier},
                   {"m", echo.m},
                   {"seed", echo.seed}};
  doc["belief_area"] = area_json(belief.area());
  doc["centroids"] = suite.centroids;
  json tests = json::array();
  for (const TestItem& t : suite.items) {
    json item = placement_json(domain, t.demo);
    item["tier"] = std::string(tier_name(t.tier));
    item["overlap"] = t.overlap;
    item["difficulty"] = t.difficulty;
    item["optimal_actions"] = actions_json(t.demo.trajectory);
    item["optimal_return"] = domain.true_weights().dot(t.demo.trajectory.features);
    tests.push_back(std::move(item));
  }
  doc["tests"] = std::move(tests);
  return doc;
}

void expect_document(const json& doc, std::string_view kind) {
  if (!doc.is_object() || !doc.contains("kind") || doc["kind"] != kind) {
    throw SchemaError("expected a " + std::string(kind) + " document");
  }
  if (!doc.contains("version") || doc["version"] != kFileVersion) {
    throw SchemaError(std::string(kind) + ": unsupported version");
  }
}

json read_document(const std::filesystem::path& path, std::string_view kind) {
  json doc;
  try {
    doc = json::parse(read_text(path));
  } catch (const json::parse_error& e) {
    throw SchemaError(path.string() + ": " + e.what());
  }
  expect_document(doc, kind);
  return doc;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  // Through a sibling temporary, so a failed run never leaves a partial file.
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw SchemaError("cannot write '" + path.string() + "'");
    out << text;
    if (!out.flush()) throw SchemaError("failed writing '" + path.string() + "'");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw SchemaError("cannot write '" + path.string() + "'");
  }
}

ConstraintSet curriculum_final_constraints(const json& curriculum, int dim) {
  expect_document(curriculum, "curriculum");
  ConstraintSet out(dim);
  const json& list = field(field(curriculum, "final_belief", "curriculum"), "constraints",
                           "curriculum.final_belief");
  for (const json& n : list) {
    if (!n.is_array() || static_cast<int>(n.size()) != dim) {
      throw SchemaError("curriculum.final_belief.constraints: expected " +
                        std::to_string(dim) + " entries per normal");
    }
    Eigen::VectorXd v(dim);
    for (int i = 0; i < dim; ++i) v[i] = n[i].get<double>();
    out.insert_direction(v);
  }
  return out;
}

std::vector<Demonstration> curriculum_demos(const json& curriculum, const Domain& domain) {
  std::vector<Demonstration> out;
  for (const json& step : field(curriculum, "steps", "curriculum")) {
    const int e = domain.find_environment(field(step, "env_id", "step").get<std::string>());
    if (e < 0) continue;
    const json& start = field(step, "start", "step");
    const State s{start[0].get<int>(), start[1].get<int>(),
                  flags_from_json(domain.spec(), step.value("flags", json::object()))};
    out.push_back({e, replay(domain.mdp(e), s, actions_from_json(field(step, "actions", "step")))});
  }
  return out;
}

std::string sha256_hex(const std::string& bytes) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr) != 1) {
    throw std::runtime_error("SHA-256 digest failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(kHex[md[i] >> 4]);
    out.push_back(kHex[md[i] & 15]);
  }
  return out;
}

SessionFiles export_session(const json& curriculum, const json& suite) {
  expect_document(curriculum, "curriculum");
  expect_document(suite, "test-suite");
  if (curriculum["domain"] != suite["domain"]) {
    throw DomainMismatch("curriculum is for '" + curriculum["domain"].value("name", "?") +
                         "' but the test suite is for '" + suite["domain"].value("name", "?") +
                         "' (names, features, weights and discount must all agree)");
  }
  const json& identity = curriculum["domain"];

  json answers;
  answers["kind"] = "answers";
  answers["version"] = kFileVersion;
  answers["domain"] = identity;
  json answer_list = json::array();
  json tests = json::array();
  int index = 0;
  for (const json& t : field(suite, "tests", "suite")) {
    const std::string id = "t" + std::to_string(++index);
    json shown = {{"test_id", id},
                  {"env_id", t.at("env_id")},
                  {"grid", t.at("grid")},
                  {"start", t.at("start")},
                  {"flags", t.at("flags")},
                  {"tier", t.at("tier")}};
    json hidden = shown;
    hidden["optimal_actions"] = t.at("optimal_actions");
    hidden["optimal_return"] = t.at("optimal_return");
    tests.push_back(std::move(shown));
    answer_list.push_back(std::move(hidden));
  }
  answers["tests"] = std::move(answer_list);
  const std::string answers_text = dump(answers);

  json teaching = json::array();
  for (const json& s : field(curriculum, "steps", "curriculum")) {
    teaching.push_back({{"index", s.at("index")},
                        {"env_id", s.at("env_id")},
                        {"grid", s.at("grid")},
                        {"start", s.at("start")},
                        {"flags", s.at("flags")},
                        {"actions", s.at("actions")},
                        {"phase", s.at("phase")},
                        {"area_after", s.at("area_after").at("fraction")}});
  }
  json features = json::array();
  for (const json& f : identity.at("features")) features.push_back(f.at("name"));

  json bundle;
  bundle["kind"] = "session";
  bundle["version"] = kFileVersion;
  bundle["domain"] = {{"name", identity.at("name")},
                      {"features", std::move(features)},
                      {"legend", legend()}};
  bundle["config"] = {{"teaching", curriculum.at("config")},
                      {"assessment", suite.at("config")}};
  bundle["teaching"] = std::move(teaching);
  bundle["tests"] = std::move(tests);
  bundle["grading_digest"] = sha256_hex(answers_text);
  return {dump(bundle), answers_text};
}

// ---------------------------------------------------------------------------
// SessionService

SessionService::SessionService(const std::string& bundle_text,
                               const std::string& answers_text,
                               std::filesystem::path log_path)
    : bundle_text_(bundle_text), log_path_(std::move(log_path)) {
  json bundle;
  json answers;
  try {
    bundle = json::parse(bundle_text);
    answers = json::parse(answers_text);
  } catch (const json::parse_error& e) {
    throw SchemaError(std::string("session files: ") + e.what());
  }
  expect_document(bundle, "session");
  expect_document(answers, "answers");
  const std::string digest = sha256_hex(answers_text);
  if (bundle.value("grading_digest", "") != digest) {
    throw ChecksumError("the answers file does not match the bundle's grading digest");
  }

  const json& identity = answers.at("domain");
  std::vector<Feature> features;
  for (const json& f : identity.at("features")) {
    const auto trigger = parse_trigger(f.at("trigger").get<std::string>());
    if (!trigger) throw SchemaError("answers: unknown trigger");
    features.push_back({f.at("name").get<std::string>(), *trigger});
  }
  FeatureSpec spec(std::move(features));
  Eigen::VectorXd w(spec.size());
  for (int i = 0; i < spec.size(); ++i) w[i] = identity.at("weights").at(i).get<double>();

  std::vector<GridEnvironment> envs;
  std::vector<std::vector<Action>> optimal;
  std::vector<std::string> ids;
  for (const json& t : answers.at("tests")) {
    const json& start = t.at("start");
    const State s{start[0].get<int>(), start[1].get<int>(), flags_from_json(spec, t.at("flags"))};
    ids.push_back(t.at("test_id").get<std::string>());
    envs.push_back(GridEnvironment::from_rows(ids.back(),
                                              t.at("grid").get<std::vector<std::string>>(), {s}));
    optimal.push_back(actions_from_json(t.at("optimal_actions")));
  }
  domain_ = std::make_unique<Domain>(identity.at("name").get<std::string>(), spec,
                                     WeightVector::normalized(w),
                                     identity.at("discount").get<double>(), std::move(envs));
  for (int e = 0; e < domain_->num_environments(); ++e) {
    const GridEnvironment& env = domain_->environments()[e];
    TestItem item;
    item.demo = {e, replay(domain_->mdp(e), env.starts[0], optimal[e])};
    answers_.emplace(ids[e], std::move(item));
  }
}

HttpResult SessionService::respond(const std::string& request_body) {
  auto bad = [](int status, const std::string& why) {
    return HttpResult{status, {{"error", why}}};
  };
  json req;
  try {
    req = json::parse(request_body);
  } catch (const json::parse_error&) {
    return bad(400, "request body is not JSON");
  }
  if (!req.is_object()) return bad(400, "request body must be a JSON object");
  if (!req.contains("test_id") || !req["test_id"].is_string()) {
    return bad(400, "test_id must be a string");
  }
  const std::string test_id = req["test_id"].get<std::string>();
  const auto it = answers_.find(test_id);
  if (it == answers_.end()) return bad(404, "unknown test_id '" + test_id + "'");
  if (!req.contains("confidence") || !req["confidence"].is_number_integer()) {
    return bad(400, "confidence must be an integer from 1 to 5");
  }
  const int confidence = req["confidence"].get<int>();

  ResponseScore score;
  std::vector<Action> actions;
  try {
    actions = actions_from_json(req.value("actions", json()));
    score = score_response(*domain_, it->second, actions, confidence);
  } catch (const SchemaError& e) {
    return bad(400, e.what());
  } catch (const InvalidTrajectory& e) {
    return bad(400, e.what());
  }

  json names = json::array();
  for (Action a : actions) names.push_back(std::string(action_name(a)));
  json result = {{"test_id", test_id},
                 {"optimal", score.optimal},
                 {"reward_gap", score.reward_gap},
                 {"confidence", confidence}};
  json record = result;
  record["timestamp"] = utc_timestamp();
  record["actions"] = std::move(names);
  {
    std::lock_guard<std::mutex> lock(log_mutex_);
    std::ofstream log(log_path_, std::ios::app | std::ios::binary);
    if (!log || !(log << record.dump() << '\n').flush()) {
      return bad(500, "cannot append to the results log");
    }
  }
  return {200, std::move(result)};
}

// ---------------------------------------------------------------------------
// SessionServer

struct SessionServer::Impl {
  httplib::Server server;
};

SessionServer::SessionServer(SessionService& service) : impl_(std::make_unique<Impl>()) {
  auto& srv = impl_->server;
  srv.set_default_headers({{"Access-Control-Allow-Origin", "*"},
                           {"Access-Control-Allow-Headers", "Content-Type"}});
  srv.Get("/session", [&service](const httplib::Request&, httplib::Response& res) {
    res.set_content(service.session_payload(), "application/json");
  });
  srv.Post("/response", [&service](const httplib::Request& req, httplib::Response& res) {
    const HttpResult r = service.respond(req.body);
    res.status = r.status;
    res.set_content(r.body.dump(), "application/json");
  });
  srv.Options(R"(/.*)", [](const httplib::Request&, httplib::Response& res) {
    res.status = 204;
  });
}

SessionServer::~SessionServer() { stop(); }

int SessionServer::bind(const std::string& host, int port) {
  auto& srv = impl_->server;
  if (port == 0) {
    const int bound = srv.bind_to_any_port(host);
    if (bound < 0) throw std::runtime_error("cannot bind " + host);
    return bound;
  }
  if (!srv.bind_to_port(host, port)) {
    throw std::runtime_error("cannot bind " + host + ":" + std::to_string(port));
  }
  return port;
}

void SessionServer::run() { impl_->server.listen_after_bind(); }

void SessionServer::stop() { impl_->server.stop(); }

}  // namespace cfteach
