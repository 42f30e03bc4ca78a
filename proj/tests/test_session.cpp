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

#include <atomic>
#include <filesystem>
#include <fstream>
#include <regex>
#include <thread>

#include <gtest/gtest.h>

#include "cfteach/assessment.hpp"
#include "cfteach/curriculum.hpp"
#include "cfteach/domain_io.hpp"
#include "cfteach/errors.hpp"
#include "cfteach/session.hpp"

// After Eigen: <resolv.h> defines _res.
#include <httplib.h>

namespace cfteach {
namespace {

using nlohmann::json;

json teach_doc(BuiltinDomain kind) {
  const Domain d = builtin_domain(kind);
  CurriculumOptions o;
  o.seed = 7;
  o.max_demos = default_demo_cap(kind);
  const Curriculum c = build_curriculum(d, {TeachingStrategy::kCounterfactual, false},
                                        default_prior(d.spec()), o);
  return curriculum_to_json(d, c, o);
}

json suite_doc(BuiltinDomain kind) {
  const Domain d = builtin_assessment_domain(kind);
  const BeliefRegion b = BeliefRegion::create(sign_orthant(d), kDefaultAreaSamples, 0);
  const TestSuite suite = build_test_suite(d, b, 2, kDefaultBeliefSamples, 3);
  return suite_to_json(d, suite, b, SuiteEcho{"sign-orthant", 2, kDefaultBeliefSamples, 3});
}

bool has_key(const json& j, const std::string& key) {
  if (j.is_object()) {
    for (auto it = j.begin(); it != j.end(); ++it) {
      if (it.key() == key || has_key(it.value(), key)) return true;
    }
  } else if (j.is_array()) {
    for (const json& e : j) {
      if (has_key(e, key)) return true;
    }
  }
  return false;
}

std::vector<json> log_lines(const std::filesystem::path& p) {
  std::vector<json> out;
  std::ifstream in(p);
  for (std::string line; std::getline(in, line);) out.push_back(json::parse(line));
  return out;
}

// An action from the test's start that leaves the grid or hits a wall.
std::string illegal_action(const json& test) {
  const auto rows = test.at("grid").get<std::vector<std::string>>();
  const int x = test.at("start")[0], y = test.at("start")[1];
  const std::vector<std::tuple<std::string, int, int>> moves{
      {"up", 0, -1}, {"down", 0, 1}, {"left", -1, 0}, {"right", 1, 0}};
  for (const auto& [name, dx, dy] : moves) {
    const int nx = x + dx, ny = y + dy;
    if (ny < 0 || nx < 0 || ny >= static_cast<int>(rows.size()) ||
        nx >= static_cast<int>(rows[0].size()) || rows[ny][nx] == '#') {
      return name;
    }
  }
  return "";
}

class Session : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    files_ = new SessionFiles(export_session(teach_doc(BuiltinDomain::kDelivery),
                                             suite_doc(BuiltinDomain::kDelivery)));
  }
  static void TearDownTestSuite() {
    delete files_;
    files_ = nullptr;
  }
  void SetUp() override {
    log_ = std::filesystem::temp_directory_path() /
           ("cfteach_log_" + std::to_string(::getpid()) + "_" +
            ::testing::UnitTest::GetInstance()->current_test_info()->name() + ".ndjson");
    std::filesystem::remove(log_);
  }
  void TearDown() override { std::filesystem::remove(log_); }

  json bundle() const { return json::parse(files_->bundle); }
  json answers() const { return json::parse(files_->answers); }
  json answer(const std::string& id) const {
    const json all = answers();
    for (const json& t : all["tests"]) {
      if (t["test_id"] == id) return t;
    }
    return {};
  }

  static SessionFiles* files_;
  std::filesystem::path log_;
};

SessionFiles* Session::files_ = nullptr;

TEST(Sha256, KnownVector) {
  EXPECT_EQ(sha256_hex("abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_F(Session, BundleShape) {
  const json b = bundle();
  EXPECT_EQ(b["kind"], "session");
  EXPECT_EQ(b["tests"].size(), 6u);
  EXPECT_GE(b["teaching"].size(), 1u);
  EXPECT_LE(b["teaching"].size(), 5u);
  EXPECT_EQ(b["domain"]["features"], json({"mud", "recharge", "action"}));
  for (const json& step : b["teaching"]) EXPECT_FALSE(step["actions"].empty());
  EXPECT_EQ(b["grading_digest"], sha256_hex(files_->answers));
  EXPECT_EQ(files_->bundle.back(), '\n');
}

TEST_F(Session, BundleHidesAnswers) {
  const json b = bundle();
  for (const char* key : {"answers", "optimal_actions", "optimal_return", "weights"}) {
    EXPECT_FALSE(has_key(b, key)) << key;
  }
  EXPECT_TRUE(has_key(answers(), "optimal_actions"));
}

TEST_F(Session, ExportIsByteStable) {
  const SessionFiles again = export_session(teach_doc(BuiltinDomain::kDelivery),
                                            suite_doc(BuiltinDomain::kDelivery));
  EXPECT_EQ(again.bundle, files_->bundle);
  EXPECT_EQ(again.answers, files_->answers);
}

TEST_F(Session, MismatchedDomainsAreRefused) {
  EXPECT_THROW(export_session(teach_doc(BuiltinDomain::kDelivery), suite_doc(BuiltinDomain::kTiles)),
               DomainMismatch);
  EXPECT_THROW(export_session(suite_doc(BuiltinDomain::kDelivery), suite_doc(BuiltinDomain::kDelivery)),
               SchemaError);
}

TEST_F(Session, TamperedAnswersAreRefused) {
  json doc = answers();
  doc["tests"][0]["optimal_return"] = doc["tests"][0]["optimal_return"].get<double>() + 1.0;
  const std::string tampered = doc.dump(2) + "\n";
  EXPECT_THROW(SessionService(files_->bundle, tampered, log_), ChecksumError);
}

TEST_F(Session, GradesResponses) {
  SessionService service(files_->bundle, files_->answers, log_);
  const json t1 = answer("t1");

  HttpResult r = service.respond(json({{"test_id", "t1"},
                                       {"actions", t1["optimal_actions"]},
                                       {"confidence", 3}})
                                     .dump());
  EXPECT_EQ(r.status, 200);
  EXPECT_EQ(r.body["optimal"], true);
  EXPECT_EQ(r.body["reward_gap"], 0.0);
  EXPECT_EQ(r.body["confidence"], 3);

  const std::string wall = illegal_action(t1);
  if (!wall.empty()) {
    r = service.respond(json({{"test_id", "t1"}, {"actions", {wall}}, {"confidence", 3}}).dump());
    EXPECT_EQ(r.status, 400);
    EXPECT_NE(r.body["error"].get<std::string>().find("InvalidTrajectory"), std::string::npos);
  }
  r = service.respond(json({{"test_id", "t1"}, {"actions", json::array()}, {"confidence", 3}}).dump());
  EXPECT_EQ(r.status, 400);
  r = service.respond(json({{"test_id", "t99"}, {"actions", json::array()}, {"confidence", 3}}).dump());
  EXPECT_EQ(r.status, 404);
  r = service.respond(json({{"test_id", "t1"}, {"actions", t1["optimal_actions"]}, {"confidence", 6}}).dump());
  EXPECT_EQ(r.status, 400);
  r = service.respond(json({{"test_id", "t1"}, {"actions", {"jump"}}, {"confidence", 2}}).dump());
  EXPECT_EQ(r.status, 400);
  EXPECT_EQ(service.respond("{not json").status, 400);
  EXPECT_EQ(service.respond("[1, 2]").status, 400);

  // Only graded responses are logged.
  const auto lines = log_lines(log_);
  ASSERT_EQ(lines.size(), 1u);
  EXPECT_EQ(lines[0]["test_id"], "t1");
  EXPECT_EQ(lines[0]["actions"], t1["optimal_actions"]);
  EXPECT_EQ(lines[0]["optimal"], true);
  EXPECT_TRUE(std::regex_match(lines[0]["timestamp"].get<std::string>(),
                               std::regex(R"(\d{4}-\d\d-\d\dT\d\d:\d\d:\d\d\.\d{3}Z)")));
}

TEST_F(Session, SuboptimalResponseHasPositiveGap) {
  SessionService service(files_->bundle, files_->answers, log_);
  const json all = answers();
  for (const json& t : all["tests"]) {
    // Step away and back first, if the first optimal move can be undone.
    const auto opt = t["optimal_actions"].get<std::vector<std::string>>();
    if (opt.empty()) continue;
    const std::map<std::string, std::string> back{
        {"up", "down"}, {"down", "up"}, {"left", "right"}, {"right", "left"}};
    if (!back.contains(opt[0])) continue;
    std::vector<std::string> detour{opt[0], back.at(opt[0])};
    detour.insert(detour.end(), opt.begin(), opt.end());
    const HttpResult r =
        service.respond(json({{"test_id", t["test_id"]}, {"actions", detour}, {"confidence", 1}}).dump());
    if (r.status != 200) continue;  // e.g. a one-shot pickup along the way
    EXPECT_EQ(r.body["optimal"], false);
    EXPECT_GT(r.body["reward_gap"].get<double>(), 0.0);
    return;
  }
  GTEST_SKIP() << "no test allows a back-and-forth";
}

TEST_F(Session, HttpRoundTrip) {
  SessionService service(files_->bundle, files_->answers, log_);
  SessionServer server(service);
  const int port = server.bind("127.0.0.1", 0);
  ASSERT_GT(port, 0);
  std::thread loop([&] { server.run(); });
  struct Join {
    SessionServer& s;
    std::thread& t;
    ~Join() {
      s.stop();
      if (t.joinable()) t.join();
    }
  } join{server, loop};

  httplib::Client client("127.0.0.1", port);
  client.set_connection_timeout(5);
  auto got = client.Get("/session");
  ASSERT_TRUE(got);
  EXPECT_EQ(got->status, 200);
  EXPECT_EQ(got->body, files_->bundle);
  EXPECT_EQ(got->get_header_value("Content-Type").rfind("application/json", 0), 0u);
  EXPECT_FALSE(has_key(json::parse(got->body), "optimal_actions"));

  const json t2 = answer("t2");
  auto posted = client.Post("/response",
                            json({{"test_id", "t2"}, {"actions", t2["optimal_actions"]},
                                  {"confidence", 5}})
                                .dump(),
                            "application/json");
  ASSERT_TRUE(posted);
  EXPECT_EQ(posted->status, 200);
  EXPECT_EQ(json::parse(posted->body)["optimal"], true);

  auto missing = client.Post("/response", R"({"test_id": "nope", "actions": [], "confidence": 1})",
                             "application/json");
  ASSERT_TRUE(missing);
  EXPECT_EQ(missing->status, 404);

  // Concurrent graders each get one log line.
  constexpr int kClients = 12;
  std::atomic<int> ok{0};
  std::vector<std::thread> clients;
  for (int i = 0; i < kClients; ++i) {
    clients.emplace_back([&, i] {
      httplib::Client c("127.0.0.1", port);
      const json body = {{"test_id", "t2"}, {"actions", t2["optimal_actions"]}, {"confidence", 1 + i % 5}};
      auto res = c.Post("/response", body.dump(), "application/json");
      if (res && res->status == 200) ++ok;
    });
  }
  for (std::thread& t : clients) t.join();

  EXPECT_EQ(ok.load(), kClients);
  EXPECT_EQ(log_lines(log_).size(), static_cast<std::size_t>(kClients + 1));
}

TEST(Documents, KindAndVersionAreChecked) {
  EXPECT_NO_THROW(expect_document(suite_doc(BuiltinDomain::kTiles), "test-suite"));
  json doc = suite_doc(BuiltinDomain::kTiles);
  EXPECT_THROW(expect_document(doc, "curriculum"), SchemaError);
  doc["version"] = 2;
  EXPECT_THROW(expect_document(doc, "test-suite"), SchemaError);
  EXPECT_THROW(expect_document(json::array(), "test-suite"), SchemaError);
}

TEST(Documents, CurriculumRoundTrip) {
  const Domain d = builtin_domain(BuiltinDomain::kDelivery);
  const json doc = teach_doc(BuiltinDomain::kDelivery);
  const auto demos = curriculum_demos(doc, d);
  ASSERT_EQ(demos.size(), doc["steps"].size());
  for (const Demonstration& demo : demos) {
    EXPECT_TRUE(rollout(d.mdp(demo.env_index), d.optimal_policy(demo.env_index),
                        demo.trajectory.start)
                    .same_path(demo.trajectory));
  }
  const ConstraintSet final = curriculum_final_constraints(doc, 3);
  EXPECT_TRUE(final.contains(d.true_weights().values()));
  EXPECT_EQ(final.size(), static_cast<int>(doc["final_belief"]["constraints"].size()));
}

TEST(Documents, AtomicWrite) {
  const auto p = std::filesystem::temp_directory_path() / "cfteach_write_test.json";
  write_text(p, "{}\n");
  write_text(p, "[1]\n");
  std::ifstream in(p);
  std::string text((std::istreambuf_iterator<char>(in)), {});
  EXPECT_EQ(text, "[1]\n");
  EXPECT_FALSE(std::filesystem::exists(p.string() + ".tmp"));
  std::filesystem::remove(p);
}

}  // namespace
}  // namespace cfteach
