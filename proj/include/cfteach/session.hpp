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

// Files exchanged between the CLI commands and the session player:
// curriculum and test-suite documents, the session bundle with its separate
// answers file, and the HTTP endpoint that grades learner responses.

#ifndef CFTEACH_SESSION_HPP_
#define CFTEACH_SESSION_HPP_

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include <json.hpp>

#include "cfteach/assessment.hpp"
#include "cfteach/curriculum.hpp"
#include "cfteach/mdp.hpp"

namespace cfteach {

inline constexpr int kFileVersion = 1;

// Name, features with triggers, weights and discount: what two documents
// must share to belong to the same domain.
nlohmann::json domain_identity(const Domain& domain);

nlohmann::json curriculum_to_json(const Domain& domain, const Curriculum& curriculum,
                                  const CurriculumOptions& options);

struct SuiteEcho {
  std::string belief;  // "sign-orthant" or "curriculum"
  int per_tier = 2;
  int m = kDefaultBeliefSamples;
  std::uint64_t seed = 0;
};

nlohmann::json suite_to_json(const Domain& domain, const TestSuite& suite,
                             const BeliefRegion& belief, const SuiteEcho& echo);

// Throws SchemaError unless `doc` is a document of the given kind and
// version.
void expect_document(const nlohmann::json& doc, std::string_view kind);
nlohmann::json read_document(const std::filesystem::path& path, std::string_view kind);
void write_text(const std::filesystem::path& path, const std::string& text);

// The final belief constraints recorded in a curriculum document.
ConstraintSet curriculum_final_constraints(const nlohmann::json& curriculum, int dim);
// Its teaching demos that name an environment of `domain`.
std::vector<Demonstration> curriculum_demos(const nlohmann::json& curriculum,
                                            const Domain& domain);

struct SessionFiles {
  std::string bundle;   // served to the learner
  std::string answers;  // stays with the server
};

// Throws DomainMismatch when the two documents name different domains.
SessionFiles export_session(const nlohmann::json& curriculum, const nlohmann::json& suite);

std::string sha256_hex(const std::string& bytes);

struct HttpResult {
  int status = 200;
  nlohmann::json body;
};

// Grades responses against an answers file checked against the bundle's
// digest (ChecksumError on mismatch) and appends one JSON line per graded
// response to `log_path`.
class SessionService {
 public:
  SessionService(const std::string& bundle_text, const std::string& answers_text,
                 std::filesystem::path log_path);

  const std::string& session_payload() const { return bundle_text_; }
  HttpResult respond(const std::string& request_body);

 private:
  std::string bundle_text_;
  std::unique_ptr<Domain> domain_;
  std::map<std::string, TestItem> answers_;
  std::filesystem::path log_path_;
  std::mutex log_mutex_;
};

// GET /session and POST /response over HTTP.
class SessionServer {
 public:
  explicit SessionServer(SessionService& service);
  ~SessionServer();

  // Port 0 picks a free port. Returns the bound port; throws
  // std::runtime_error when binding fails.
  int bind(const std::string& host, int port);
  // Blocks until stop().
  void run();
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace cfteach

#endif  // CFTEACH_SESSION_HPP_
