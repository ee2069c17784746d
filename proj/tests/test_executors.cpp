#include <doctest.h>

#include <atomic>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "stratroute/executors.hpp"
#include "stratroute/util.hpp"
#include "support/corpus.hpp"
#include "support/tmpdir.hpp"

using namespace stratroute;
using testsupport::TmpDir;

namespace {

std::shared_ptr<const TraceStore> tiny_store() {
  ProblemInstance p;
  p.id = "p1";
  p.text = "what is six times seven";
  p.gold_answer = "42";
  StrategyTrace t;
  t.problem_id = "p1";
  t.strategy = StrategyId::TIR;
  t.raw_answer = "42";
  t.correct = 1;
  t.quality = 0.9;
  t.time_ms = 120.0;
  t.output_length = 88;
  return std::make_shared<TraceStore>(TraceStore::build({}, {p}, {t}));
}

}  // namespace

TEST_CASE("replay returns stored values verbatim") {
  ReplayExecutor executor(tiny_store());
  ProblemInstance p;
  p.id = "p1";
  p.text = "x";
  const auto r = executor.execute(StrategyId::TIR, p, 0);
  REQUIRE(r.succeeded);
  CHECK(r.raw_answer == "42");
  CHECK(r.time_ms == 120.0);
  CHECK(r.output_length == 88);
}

TEST_CASE("replay miss names the pair") {
  ReplayExecutor executor(tiny_store());
  ProblemInstance p;
  p.id = "p2";
  p.text = "x";
  const auto r = executor.execute(StrategyId::NLR, p, 0);
  CHECK(!r.succeeded);
  CHECK(r.failure_reason.find("p2") != std::string::npos);
  CHECK(r.failure_reason.find("NLR") != std::string::npos);
}

TEST_CASE("synthetic executor is deterministic") {
  SyntheticRule rule;
  SyntheticExecutor a(42, {rule});
  SyntheticExecutor b(42, {rule});
  ProblemInstance p;
  p.id = "p9";
  p.text = "t";
  p.gold_answer = "7";
  const auto r1 = a.execute(StrategyId::CAR, p, 3);
  const auto r2 = b.execute(StrategyId::CAR, p, 3);
  CHECK(r1.succeeded);
  CHECK(r1.raw_answer == r2.raw_answer);
  CHECK(r1.time_ms == r2.time_ms);
  CHECK(r1.output_length == r2.output_length);

  // A different run index changes the sampling stream.
  bool any_different = false;
  for (uint32_t run = 0; run < 8; ++run) {
    const auto r = a.execute(StrategyId::CAR, p, run);
    if (r.raw_answer != r1.raw_answer || r.time_ms != r1.time_ms) any_different = true;
  }
  CHECK(any_different);
}

TEST_CASE("synthetic executor respects rule probabilities") {
  SyntheticRule rule;
  rule.tag = "*";
  rule.p_correct = {1.0, 0.0, 1.0, 0.0};
  SyntheticExecutor executor(7, {rule});
  ProblemInstance p;
  p.id = "p1";
  p.text = "t";
  p.gold_answer = "5";
  for (uint32_t run = 0; run < 20; ++run) {
    CHECK(executor.execute(StrategyId::NLR, p, run).raw_answer == "5");
    CHECK(executor.execute(StrategyId::CAR, p, run).raw_answer != "5");
  }
}

TEST_CASE("synthetic rules match by tag with fallback") {
  SyntheticRule tagged;
  tagged.tag = "fam1";
  tagged.p_correct = {1.0, 1.0, 1.0, 1.0};
  SyntheticExecutor executor(7, {tagged});

  ProblemInstance tagged_problem;
  tagged_problem.id = "a";
  tagged_problem.text = "t";
  tagged_problem.gold_answer = "9";
  tagged_problem.tags = {"fam1"};
  CHECK(executor.execute(StrategyId::NLR, tagged_problem, 0).raw_answer == "9");

  // Untagged problems fall back to the default rule (p = 0.5), so over many
  // runs both outcomes appear.
  ProblemInstance untagged;
  untagged.id = "b";
  untagged.text = "t";
  untagged.gold_answer = "9";
  int hits = 0;
  for (uint32_t run = 0; run < 40; ++run) {
    hits += executor.execute(StrategyId::NLR, untagged, run).raw_answer == "9" ? 1 : 0;
  }
  CHECK(hits > 0);
  CHECK(hits < 40);
}

TEST_CASE("registry rejects unbound strategies") {
  ExecutorRegistry registry;
  CHECK(!registry.fully_bound());
  ProblemInstance p;
  p.id = "p";
  p.text = "t";
  CHECK_THROWS_AS(registry.execute(StrategyId::NLR, p, 0), ExecutorError);
  registry.bind(StrategyId::NLR, std::make_shared<SyntheticExecutor>(1, std::vector<SyntheticRule>{}));
  CHECK_NOTHROW(registry.execute(StrategyId::NLR, p, 0));
  CHECK(registry.unbound_strategies().size() == 3);
}

TEST_CASE("registry config file with all shorthand and overrides") {
  TmpDir dir("exec");
  const auto store_path = dir.file("traces.jsonl");
  tiny_store()->save(store_path);

  const std::string config = std::string(R"({"all": {"kind": "synthetic", "seed": 3},)") +
                             R"("TIR": {"kind": "replay", "path": ")" + store_path.string() +
                             R"("}})";
  const auto config_path = dir.file("exec.json");
  write_text_file_atomic(config_path, config);

  ExecutorRegistry registry = ExecutorRegistry::from_config_file(config_path);
  CHECK(registry.fully_bound());
  ProblemInstance p;
  p.id = "p1";
  p.text = "t";
  p.gold_answer = "42";
  CHECK(registry.execute(StrategyId::TIR, p, 0).raw_answer == "42");  // replay override
  CHECK(registry.execute(StrategyId::NLR, p, 0).succeeded);           // synthetic
}

TEST_CASE("registry config rejects partial bindings and unknown keys") {
  TmpDir dir("exec");
  const auto config_path = dir.file("exec.json");
  write_text_file_atomic(config_path, R"({"NLR": {"kind": "synthetic"}})");
  CHECK_THROWS_WITH_AS(ExecutorRegistry::from_config_file(config_path),
                       doctest::Contains("missing bindings"), DataError);

  write_text_file_atomic(config_path, R"({"all": {"kind": "synthetic"}, "XYZ": {}})");
  CHECK_THROWS_WITH_AS(ExecutorRegistry::from_config_file(config_path),
                       doctest::Contains("XYZ"), DataError);
}

TEST_CASE("remote executor round trip against a local endpoint") {
  httplib::Server server;
  std::atomic<int> requests{0};
  server.Post("/execute", [&](const httplib::Request& req, httplib::Response& res) {
    ++requests;
    auto body = nlohmann::json::parse(req.body);
    nlohmann::json reply;
    reply["answer"] = "echo:" + body["strategy"].get<std::string>() + ":" +
                      body["problem_id"].get<std::string>();
    reply["token_count"] = 17;
    if (req.has_header("Authorization")) {
      reply["answer"] = reply["answer"].get<std::string>() + ":auth";
    }
    res.set_content(reply.dump(), "application/json");
  });
  const int port = server.bind_to_any_port("127.0.0.1");
  REQUIRE(port > 0);
  std::thread server_thread([&] { server.listen_after_bind(); });
  server.wait_until_ready();

  RemoteEndpointConfig cfg;
  cfg.base_url = "http://127.0.0.1:" + std::to_string(port);
  cfg.template_id = "tmpl-1";
  cfg.timeout_ms = 2000;
  RemoteExecutor executor(cfg);

  ProblemInstance p;
  p.id = "p7";
  p.text = "remote me";
  const auto r = executor.execute(StrategyId::EBR, p, 0);
  REQUIRE(r.succeeded);
  CHECK(r.raw_answer == "echo:EBR:p7");
  CHECK(r.output_length == 17);
  CHECK(r.time_ms >= 0.0);
  CHECK(requests.load() == 1);

  server.stop();
  server_thread.join();
}

TEST_CASE("remote executor sends bearer token from the named env var") {
  httplib::Server server;
  std::string seen_auth;
  server.Post("/execute", [&](const httplib::Request& req, httplib::Response& res) {
    seen_auth = req.get_header_value("Authorization");
    res.set_content(R"({"answer":"ok"})", "application/json");
  });
  const int port = server.bind_to_any_port("127.0.0.1");
  REQUIRE(port > 0);
  std::thread server_thread([&] { server.listen_after_bind(); });
  server.wait_until_ready();

  setenv("STRATROUTE_TEST_TOKEN", "sekrit", 1);
  RemoteEndpointConfig cfg;
  cfg.base_url = "http://127.0.0.1:" + std::to_string(port);
  cfg.auth_env = "STRATROUTE_TEST_TOKEN";
  RemoteExecutor executor(cfg);
  ProblemInstance p;
  p.id = "p";
  p.text = "t";
  const auto r = executor.execute(StrategyId::NLR, p, 0);
  CHECK(r.succeeded);
  CHECK(seen_auth == "Bearer sekrit");
  unsetenv("STRATROUTE_TEST_TOKEN");

  server.stop();
  server_thread.join();
}

TEST_CASE("remote executor retries then reports failure") {
  // Nothing listens on this port.
  RemoteEndpointConfig cfg;
  cfg.base_url = "http://127.0.0.1:9";
  cfg.timeout_ms = 200;
  cfg.max_retries = 1;
  RemoteExecutor executor(cfg);
  ProblemInstance p;
  p.id = "p";
  p.text = "t";
  const auto r = executor.execute(StrategyId::NLR, p, 0);
  CHECK(!r.succeeded);
  CHECK(r.failure_reason.find("2 attempts") != std::string::npos);
}

TEST_CASE("remote executor surfaces non-success status after retries") {
  httplib::Server server;
  std::atomic<int> requests{0};
  server.Post("/execute", [&](const httplib::Request&, httplib::Response& res) {
    ++requests;
    res.status = 503;
  });
  const int port = server.bind_to_any_port("127.0.0.1");
  REQUIRE(port > 0);
  std::thread server_thread([&] { server.listen_after_bind(); });
  server.wait_until_ready();

  RemoteEndpointConfig cfg;
  cfg.base_url = "http://127.0.0.1:" + std::to_string(port);
  cfg.max_retries = 2;
  RemoteExecutor executor(cfg);
  ProblemInstance p;
  p.id = "p";
  p.text = "t";
  const auto r = executor.execute(StrategyId::NLR, p, 0);
  CHECK(!r.succeeded);
  CHECK(r.failure_reason.find("503") != std::string::npos);
  CHECK(requests.load() == 3);

  server.stop();
  server_thread.join();
}
