#include "stratroute/executors.hpp"

#include <chrono>
#include <cmath>
#include <condition_variable>
#include <cstdlib>
#include <map>
#include <mutex>

#include <httplib.h>
#include <json.hpp>

#include "stratroute/util.hpp"

namespace stratroute {

using nlohmann::json;

ReplayExecutor::ReplayExecutor(std::shared_ptr<const TraceStore> store)
    : store_(std::move(store)) {
  if (!store_) throw DataError("replay executor requires a trace store");
}

ExecutorResult ReplayExecutor::execute(StrategyId strategy, const ProblemInstance& problem,
                                       uint32_t /*run*/) {
  const StrategyTrace* trace = store_->find(problem.id, strategy);
  if (trace == nullptr) {
    return ExecutorResult::failure("replay miss: no stored trace for (" + problem.id + ", " +
                                   to_string(strategy) + ")");
  }
  ExecutorResult r;
  r.raw_answer = trace->raw_answer;
  r.time_ms = trace->time_ms;
  r.output_length = trace->output_length;
  r.succeeded = true;
  return r;
}

SyntheticExecutor::SyntheticExecutor(uint64_t seed, std::vector<SyntheticRule> rules)
    : seed_(seed), rules_(std::move(rules)) {}

const SyntheticRule& SyntheticExecutor::rule_for(const ProblemInstance& problem) const {
  for (const SyntheticRule& rule : rules_) {
    if (rule.tag == "*") return rule;
    for (const std::string& tag : problem.tags) {
      if (tag == rule.tag) return rule;
    }
  }
  return fallback_;
}

ExecutorResult SyntheticExecutor::execute(StrategyId strategy, const ProblemInstance& problem,
                                          uint32_t run) {
  const SyntheticRule& rule = rule_for(problem);
  const auto s = static_cast<size_t>(strategy_index(strategy));

  auto draw = [&](uint64_t salt) {
    uint64_t h = hash_combine(seed_, salt);
    h = hash_combine(h, fnv1a64(problem.id));
    h = hash_combine(h, static_cast<uint64_t>(strategy_index(strategy)));
    h = hash_combine(h, run);
    return unit_double(h);
  };

  const bool correct = draw(0xc0) < rule.p_correct[s];
  ExecutorResult r;
  r.succeeded = true;
  if (correct) {
    if (problem.gold_answer) {
      r.raw_answer = *problem.gold_answer;
    } else {
      char buf[32];
      std::snprintf(buf, sizeof(buf), "ans-%08llx",
                    static_cast<unsigned long long>(fnv1a64(problem.id) & 0xffffffffull));
      r.raw_answer = buf;
    }
  } else {
    // Small pool so that two wrong strategies sometimes coincide.
    const auto slot = static_cast<uint64_t>(draw(0xbad) * 5.0);
    r.raw_answer = "wrong-" + std::to_string(slot);
  }
  const auto [t_lo, t_hi] = rule.time_ms[s];
  r.time_ms = t_lo + draw(0x71) * (t_hi - t_lo);
  const auto [l_lo, l_hi] = rule.length[s];
  r.output_length =
      l_lo + static_cast<int64_t>(draw(0x1e) * static_cast<double>(l_hi - l_lo + 1));
  if (r.output_length > l_hi) r.output_length = l_hi;
  return r;
}

void RemoteEndpointConfig::validate() const {
  if (base_url.empty()) throw DataError("remote executor: base_url must be set");
  if (timeout_ms <= 0) throw DataError("remote executor: timeout_ms must be > 0");
  if (max_retries < 0) throw DataError("remote executor: max_retries must be >= 0");
  if (max_concurrency <= 0) throw DataError("remote executor: max_concurrency must be > 0");
}

namespace {

// Counting semaphore without a compile-time ceiling.
class ConcurrencyGate {
 public:
  explicit ConcurrencyGate(int slots) : slots_(slots) {}

  void acquire() {
    std::unique_lock lock(mu_);
    cv_.wait(lock, [&] { return slots_ > 0; });
    --slots_;
  }

  void release() {
    {
      std::lock_guard lock(mu_);
      ++slots_;
    }
    cv_.notify_one();
  }

 private:
  std::mutex mu_;
  std::condition_variable cv_;
  int slots_;
};

}  // namespace

struct RemoteExecutor::Impl {
  RemoteEndpointConfig config;
  ConcurrencyGate gate;

  explicit Impl(RemoteEndpointConfig cfg) : config(std::move(cfg)), gate(config.max_concurrency) {}
};

RemoteExecutor::RemoteExecutor(RemoteEndpointConfig config) {
  config.validate();
  impl_ = std::make_unique<Impl>(std::move(config));
}

RemoteExecutor::~RemoteExecutor() = default;

ExecutorResult RemoteExecutor::execute(StrategyId strategy, const ProblemInstance& problem,
                                       uint32_t /*run*/) {
  const RemoteEndpointConfig& cfg = impl_->config;

  json request;
  request["problem_id"] = problem.id;
  request["text"] = problem.text;
  request["strategy"] = to_string(strategy);
  request["template_id"] = cfg.template_id;
  const std::string body = request.dump();

  httplib::Headers headers;
  if (!cfg.auth_env.empty()) {
    if (const char* token = std::getenv(cfg.auth_env.c_str())) {
      headers.emplace("Authorization", std::string("Bearer ") + token);
    }
  }

  impl_->gate.acquire();
  struct GateRelease {
    ConcurrencyGate& gate;
    ~GateRelease() { gate.release(); }
  } release{impl_->gate};

  std::string last_error;
  for (int attempt = 0; attempt <= cfg.max_retries; ++attempt) {
    httplib::Client client(cfg.base_url);
    client.set_connection_timeout(0, cfg.timeout_ms * 1000);
    client.set_read_timeout(cfg.timeout_ms / 1000, (cfg.timeout_ms % 1000) * 1000);
    client.set_write_timeout(cfg.timeout_ms / 1000, (cfg.timeout_ms % 1000) * 1000);

    const auto start = std::chrono::steady_clock::now();
    auto response = client.Post("/execute", headers, body, "application/json");
    const auto elapsed = std::chrono::duration<double, std::milli>(
                             std::chrono::steady_clock::now() - start)
                             .count();
    if (!response) {
      last_error = "transport error: " + httplib::to_string(response.error());
      continue;
    }
    if (response->status != 200) {
      last_error = "endpoint status " + std::to_string(response->status);
      continue;
    }
    json parsed = json::parse(response->body, nullptr, false);
    if (parsed.is_discarded() || !parsed.is_object() || !parsed.contains("answer")) {
      last_error = "malformed endpoint response";
      continue;
    }
    ExecutorResult r;
    r.raw_answer = parsed["answer"].get<std::string>();
    r.time_ms = elapsed;
    r.output_length = parsed.contains("token_count")
                          ? parsed["token_count"].get<int64_t>()
                          : static_cast<int64_t>(r.raw_answer.size());
    r.succeeded = true;
    return r;
  }
  return ExecutorResult::failure("remote execution failed after " +
                                 std::to_string(cfg.max_retries + 1) + " attempts (" + last_error +
                                 ")");
}

void ExecutorRegistry::bind(StrategyId strategy, std::shared_ptr<Executor> executor) {
  if (!executor) throw DataError("cannot bind a null executor");
  bindings_[static_cast<size_t>(strategy_index(strategy))] = std::move(executor);
}

bool ExecutorRegistry::fully_bound() const { return unbound_strategies().empty(); }

std::vector<StrategyId> ExecutorRegistry::unbound_strategies() const {
  std::vector<StrategyId> missing;
  for (StrategyId s : canonical_strategy_order()) {
    if (!bindings_[static_cast<size_t>(strategy_index(s))]) missing.push_back(s);
  }
  return missing;
}

ExecutorResult ExecutorRegistry::execute(StrategyId strategy, const ProblemInstance& problem,
                                         uint32_t run) {
  auto& binding = bindings_[static_cast<size_t>(strategy_index(strategy))];
  if (!binding) {
    throw ExecutorError("no executor bound for strategy " + to_string(strategy));
  }
  return binding->execute(strategy, problem, run);
}

namespace {

std::array<double, kNumStrategies> parse_per_strategy_doubles(const json& j, const char* key) {
  const json& arr = j.at(key);
  if (!arr.is_array() || arr.size() != kNumStrategies) {
    throw DataError(std::string("executor config: \"") + key + "\" must be an array of 4 values");
  }
  std::array<double, kNumStrategies> out{};
  for (int i = 0; i < kNumStrategies; ++i) out[static_cast<size_t>(i)] = arr[static_cast<size_t>(i)].get<double>();
  return out;
}

template <typename T>
std::array<std::pair<T, T>, kNumStrategies> parse_per_strategy_ranges(const json& j,
                                                                      const char* key) {
  const json& arr = j.at(key);
  if (!arr.is_array() || arr.size() != kNumStrategies) {
    throw DataError(std::string("executor config: \"") + key + "\" must be an array of 4 ranges");
  }
  std::array<std::pair<T, T>, kNumStrategies> out{};
  for (int i = 0; i < kNumStrategies; ++i) {
    const json& range = arr[static_cast<size_t>(i)];
    if (!range.is_array() || range.size() != 2) {
      throw DataError(std::string("executor config: each \"") + key + "\" entry must be [lo, hi]");
    }
    out[static_cast<size_t>(i)] = {range[0].get<T>(), range[1].get<T>()};
    if (out[static_cast<size_t>(i)].second < out[static_cast<size_t>(i)].first) {
      throw DataError(std::string("executor config: \"") + key + "\" range is inverted");
    }
  }
  return out;
}

SyntheticRule parse_rule(const json& j) {
  SyntheticRule rule;
  if (j.contains("tag")) rule.tag = j["tag"].get<std::string>();
  if (j.contains("p_correct")) rule.p_correct = parse_per_strategy_doubles(j, "p_correct");
  if (j.contains("time_ms")) rule.time_ms = parse_per_strategy_ranges<double>(j, "time_ms");
  if (j.contains("length")) rule.length = parse_per_strategy_ranges<int64_t>(j, "length");
  for (double p : rule.p_correct) {
    if (!std::isfinite(p) || p < 0.0 || p > 1.0) {
      throw DataError("executor config: p_correct values must lie in [0,1]");
    }
  }
  return rule;
}

std::shared_ptr<Executor> make_executor(
    const json& binding, std::map<std::string, std::shared_ptr<const TraceStore>>& store_cache) {
  if (!binding.is_object() || !binding.contains("kind")) {
    throw DataError("executor config: each binding needs a \"kind\"");
  }
  const std::string kind = binding["kind"].get<std::string>();
  if (kind == "replay") {
    const std::string path = binding.at("path").get<std::string>();
    auto it = store_cache.find(path);
    if (it == store_cache.end()) {
      it = store_cache.emplace(path, std::make_shared<TraceStore>(TraceStore::load(path))).first;
    }
    return std::make_shared<ReplayExecutor>(it->second);
  }
  if (kind == "synthetic") {
    const uint64_t seed = binding.value("seed", uint64_t{0});
    std::vector<SyntheticRule> rules;
    if (binding.contains("rules")) {
      for (const json& r : binding["rules"]) rules.push_back(parse_rule(r));
    }
    return std::make_shared<SyntheticExecutor>(seed, std::move(rules));
  }
  if (kind == "remote") {
    RemoteEndpointConfig cfg;
    cfg.base_url = binding.at("base_url").get<std::string>();
    cfg.template_id = binding.value("template_id", std::string{});
    cfg.timeout_ms = binding.value("timeout_ms", 5000);
    cfg.max_retries = binding.value("max_retries", 2);
    cfg.auth_env = binding.value("auth_env", std::string{});
    cfg.max_concurrency = binding.value("max_concurrency", 4);
    return std::make_shared<RemoteExecutor>(std::move(cfg));
  }
  throw DataError("executor config: unknown kind \"" + kind + "\"");
}

}  // namespace

ExecutorRegistry ExecutorRegistry::from_config_file(const std::filesystem::path& path) {
  json config = json::parse(read_text_file(path), nullptr, false);
  if (config.is_discarded() || !config.is_object()) {
    throw DataError("executor config: not a JSON object: " + path.string());
  }
  std::map<std::string, std::shared_ptr<const TraceStore>> store_cache;
  ExecutorRegistry registry;
  if (config.contains("all")) {
    auto shared = make_executor(config["all"], store_cache);
    for (StrategyId s : canonical_strategy_order()) registry.bind(s, shared);
  }
  for (StrategyId s : canonical_strategy_order()) {
    const std::string name = to_string(s);
    if (config.contains(name)) {
      registry.bind(s, make_executor(config[name], store_cache));
    }
  }
  for (auto it = config.begin(); it != config.end(); ++it) {
    if (it.key() != "all" && !strategy_from_string(it.key())) {
      throw DataError("executor config: unknown binding key \"" + it.key() + "\"");
    }
  }
  if (!registry.fully_bound()) {
    std::string missing;
    for (StrategyId s : registry.unbound_strategies()) {
      if (!missing.empty()) missing += ", ";
      missing += to_string(s);
    }
    throw DataError("executor config: missing bindings for " + missing);
  }
  return registry;
}

}  // namespace stratroute
