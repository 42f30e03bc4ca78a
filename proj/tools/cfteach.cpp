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

// cfteach: teach, assess, oracle, export-session, serve.
//
// Exit codes: 0 success, 1 oracle mismatch, 2 configuration error,
// 3 infeasible inputs, 4 internal error.

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "cfteach/assessment.hpp"
#include "cfteach/curriculum.hpp"
#include "cfteach/domain_io.hpp"
#include "cfteach/errors.hpp"
#include "cfteach/oracle.hpp"
#include "cfteach/session.hpp"

namespace {

using namespace cfteach;

constexpr int kExitOracle = 1;
constexpr int kExitConfig = 2;
constexpr int kExitInfeasible = 3;
constexpr int kExitInternal = 4;

int exit_code(ErrorCategory c) {
  switch (c) {
    case ErrorCategory::kConfig:
    case ErrorCategory::kInput: return kExitConfig;
    case ErrorCategory::kInfeasible: return kExitInfeasible;
    case ErrorCategory::kInternal: return kExitInternal;
  }
  return kExitInternal;
}

std::string format_area(const AreaEstimate& a) {
  return fmt::format("{:.5f} +/- {:.5f}", a.fraction, a.half_width);
}

std::string format_start(const Domain& domain, const State& s) {
  std::string out = fmt::format("({},{})", s.x, s.y);
  for (std::size_t b = 0; b < domain.spec().flags().size(); ++b) {
    if ((s.flags >> b) & 1u) out += " " + domain.spec().flags()[b];
  }
  return out;
}

std::string format_actions(const Trajectory& t) {
  std::string out;
  for (const Step& s : t.steps) {
    if (!out.empty()) out += ' ';
    out += action_name(s.action);
  }
  return out;
}

struct TeachArgs {
  std::string domain;
  std::string strategy = "counterfactual";
  bool scaffolding = false;
  bool one_step = false;
  std::uint64_t seed = 0;
  int m = kDefaultBeliefSamples;
  double epsilon = 1e-3;
  int max_demos = -1;
  double gain_ratio = 1.0;
  std::string out = "curriculum.json";
};

int run_teach(const TeachArgs& a) {
  const Domain domain = resolve_domain(a.domain);
  const auto strategy = parse_strategy(a.strategy);
  if (!strategy) throw SemanticError("unknown strategy '" + a.strategy + "'");
  CurriculumOptions o;
  o.m = a.m;
  o.epsilon = a.epsilon;
  o.gain_ratio = a.gain_ratio;
  o.seed = a.seed;
  o.mode = a.one_step ? CounterfactualMode::kOneStepUnderBelief
                      : CounterfactualMode::kWholeTrajectory;
  if (a.max_demos >= 0) {
    o.max_demos = a.max_demos;
  } else if (const auto b = parse_builtin(a.domain)) {
    o.max_demos = default_demo_cap(*b);
  }
  const StrategyConfig config{*strategy, a.scaffolding};
  const Curriculum c = build_curriculum(domain, config, default_prior(domain.spec()), o);
  write_text(a.out, curriculum_to_json(domain, c, o).dump(2) + "\n");

  fmt::print("{} curriculum for '{}'{}: {} demos\n", strategy_name(config.inner), domain.name(),
             config.feature_scaffolded ? " (feature scaffolding)" : "", c.steps.size());
  fmt::print("  prior area {}\n", format_area(c.prior_area));
  for (std::size_t i = 0; i < c.steps.size(); ++i) {
    const CurriculumStep& s = c.steps[i];
    fmt::print("  {}. {} from {}: {}\n     gain {:.5f}, area {}, masked {}\n", i + 1,
               s.demo.env_id(), format_start(domain, s.demo.trajectory.start),
               format_actions(s.demo.trajectory), s.info_gain, format_area(s.area_after),
               s.phase);
  }
  for (const std::string& n : c.notes) fmt::print("  note: {}\n", n);
  fmt::print("  wrote {}\n", a.out);
  return 0;
}

struct AssessArgs {
  std::string domain;
  std::string belief = "sign-orthant";
  int per_tier = 2;
  int m = kDefaultBeliefSamples;
  std::uint64_t seed = 0;
  std::string out = "suite.json";
};

int run_assess(const AssessArgs& a) {
  const auto builtin = parse_builtin(a.domain);
  const Domain domain = builtin ? builtin_assessment_domain(*builtin) : resolve_domain(a.domain);
  ConstraintSet constraints(domain.spec().size());
  std::vector<Demonstration> shown;
  std::string belief_kind;
  static constexpr std::string_view kCurriculumPrefix = "curriculum:";
  if (a.belief == "sign-orthant") {
    constraints = sign_orthant(domain);
    belief_kind = "sign-orthant";
  } else if (a.belief.starts_with(kCurriculumPrefix)) {
    const auto doc = read_document(a.belief.substr(kCurriculumPrefix.size()), "curriculum");
    if (doc["domain"] != domain_identity(domain)) {
      throw DomainMismatch("the curriculum was built for another domain");
    }
    constraints = curriculum_final_constraints(doc, domain.spec().size());
    shown = curriculum_demos(doc, domain);
    belief_kind = "curriculum";
  } else {
    throw SemanticError("--belief must be sign-orthant or curriculum:<file>");
  }
  const BeliefRegion belief = BeliefRegion::create(constraints);
  const TestSuite suite = build_test_suite(domain, belief, a.per_tier, a.m, a.seed, shown);
  const SuiteEcho echo{belief_kind, a.per_tier, a.m, a.seed};
  write_text(a.out, suite_to_json(domain, suite, belief, echo).dump(2) + "\n");

  fmt::print("test suite for '{}' over the {} belief (area {}): {} tests\n", domain.name(),
             belief_kind, format_area(belief.area()), suite.items.size());
  for (const TestItem& t : suite.items) {
    fmt::print("  {:<6} {} from {}: overlap {:.5f}, difficulty {:.2f}\n", tier_name(t.tier),
               t.demo.env_id(), format_start(domain, t.demo.trajectory.start), t.overlap,
               t.difficulty);
  }
  fmt::print("  wrote {}\n", a.out);
  return 0;
}

struct OracleArgs {
  std::string domain;
  std::string check = "all";
  std::uint64_t seed = 0;
  bool inject_fault = false;
  std::string out;
};

int run_oracle_cmd(const OracleArgs& a) {
  std::vector<OracleCheck> checks;
  if (a.check == "all") {
    checks = {OracleCheck::kPlannerOptimality, OracleCheck::kBecMembership,
              OracleCheck::kRedundancy};
  } else if (const auto c = parse_oracle_check(a.check)) {
    checks = {*c};
  } else {
    throw SemanticError("unknown check '" + a.check + "'");
  }
  nlohmann::json reports = nlohmann::json::array();
  bool pass = true;
  for (OracleCheck c : checks) {
    const OracleReport r = run_oracle(c, a.domain, a.seed, a.inject_fault);
    pass = pass && r.pass();
    for (const OracleCase& k : r.cases) {
      fmt::print("{} {} {}: {}\n", k.pass ? "ok  " : "FAIL", oracle_check_name(c), k.label,
                 k.detail);
    }
    fmt::print("{} {} ({} cases, {:.2f} s)\n", r.pass() ? "PASS" : "FAIL", oracle_check_name(c),
               r.cases.size(), r.seconds);
    reports.push_back(r.to_json());
  }
  if (!a.out.empty()) write_text(a.out, reports.dump(2) + "\n");
  return pass ? 0 : kExitOracle;
}

struct ExportArgs {
  std::string curriculum;
  std::string suite;
  std::string bundle = "session.json";
  std::string answers = "answers.json";
};

int run_export(const ExportArgs& a) {
  const SessionFiles files = export_session(read_document(a.curriculum, "curriculum"),
                                            read_document(a.suite, "test-suite"));
  write_text(a.answers, files.answers);
  write_text(a.bundle, files.bundle);
  fmt::print("wrote {} and {}\n", a.bundle, a.answers);
  return 0;
}

struct ServeArgs {
  std::string bundle = "session.json";
  std::string answers = "answers.json";
  std::string log = "results.ndjson";
  std::string host = "127.0.0.1";
  int port = 0;
};

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw SchemaError("cannot read '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

int run_serve(const ServeArgs& a) {
  int port = a.port;
  if (port == 0) {
    const char* env = std::getenv("CFTEACH_PORT");
    port = env ? std::atoi(env) : 8080;
    if (port <= 0 || port > 65535) throw SemanticError("CFTEACH_PORT is not a valid port");
  }
  SessionService service(slurp(a.bundle), slurp(a.answers), a.log);
  SessionServer server(service);
  const int bound = server.bind(a.host, port);
  fmt::print("serving {} on http://{}:{} (GET /session, POST /response), log {}\n", a.bundle,
             a.host, bound, a.log);
  std::fflush(stdout);
  server.run();
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Counterfactual machine teaching of reward functions"};
  app.require_subcommand(1);

  TeachArgs teach;
  auto* t = app.add_subcommand("teach", "select a teaching curriculum");
  t->add_option("--domain", teach.domain, "built-in name or domain config file")->required();
  t->add_option("--strategy", teach.strategy, "counterfactual or baseline")
      ->check(CLI::IsMember({"counterfactual", "baseline"}));
  t->add_flag("--feature-scaffolding", teach.scaffolding, "phase the curriculum by feature masks");
  t->add_flag("--one-step", teach.one_step,
              "counterfactuals as one-action deviations under the learner's policy");
  t->add_option("--seed", teach.seed);
  t->add_option("--m", teach.m, "belief samples per iteration")->check(CLI::PositiveNumber);
  t->add_option("--epsilon", teach.epsilon, "stop once gain falls to this sphere fraction")
      ->check(CLI::PositiveNumber);
  t->add_option("--max-demos", teach.max_demos,
                "demo cap, 0 for none (built-ins default to 5, 5, 7)")
      ->check(CLI::NonNegativeNumber);
  t->add_option("--gain-ratio", teach.gain_ratio, "pick the demo nearest this share of the best gain")
      ->check(CLI::Range(1e-9, 1.0));
  t->add_option("--out", teach.out, "curriculum file");

  AssessArgs assess;
  auto* s = app.add_subcommand("assess", "build a difficulty-tiered test suite");
  s->add_option("--domain", assess.domain, "built-in name or domain config file")->required();
  s->add_option("--belief", assess.belief, "sign-orthant or curriculum:<file>");
  s->add_option("--per-tier", assess.per_tier)->check(CLI::PositiveNumber);
  s->add_option("--m", assess.m, "belief samples per test")->check(CLI::PositiveNumber);
  s->add_option("--seed", assess.seed);
  s->add_option("--out", assess.out, "test suite file");

  OracleArgs oracle;
  auto* o = app.add_subcommand("oracle", "check the engine against independent oracles");
  o->add_option("--domain", oracle.domain, "built-in name or domain config file")->required();
  o->add_option("--check", oracle.check)
      ->check(CLI::IsMember({"all", "planner-optimality", "bec-membership", "redundancy"}));
  o->add_option("--seed", oracle.seed);
  o->add_flag("--inject-fault", oracle.inject_fault,
              "flip one constraint sign before bec-membership (must fail)");
  o->add_option("--out", oracle.out, "JSON verdicts");

  ExportArgs ex;
  auto* e = app.add_subcommand("export-session", "write a session bundle and its answers");
  e->add_option("--curriculum", ex.curriculum)->required();
  e->add_option("--suite", ex.suite)->required();
  e->add_option("--out", ex.bundle, "bundle served to the learner");
  e->add_option("--answers", ex.answers, "answers kept by the server");

  ServeArgs serve;
  auto* v = app.add_subcommand("serve", "serve a session bundle and grade responses");
  v->add_option("--bundle", serve.bundle);
  v->add_option("--answers", serve.answers);
  v->add_option("--log", serve.log, "append-only results log");
  v->add_option("--host", serve.host);
  v->add_option("--port", serve.port, "default $CFTEACH_PORT, else 8080")
      ->check(CLI::Range(1, 65535));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    const int rc = app.exit(err);
    return rc == 0 ? 0 : kExitConfig;
  }

  try {
    if (*t) return run_teach(teach);
    if (*s) return run_assess(assess);
    if (*o) return run_oracle_cmd(oracle);
    if (*e) return run_export(ex);
    if (*v) return run_serve(serve);
  } catch (const Error& err) {
    std::cerr << "error: " << err.what() << "\n";
    return exit_code(err.category());
  } catch (const nlohmann::json::exception& err) {
    std::cerr << "error: malformed file: " << err.what() << "\n";
    return kExitConfig;
  } catch (const std::invalid_argument& err) {
    std::cerr << "error: " << err.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& err) {
    std::cerr << "internal error: " << err.what() << "\n";
    return kExitInternal;
  }
  return kExitInternal;
}
