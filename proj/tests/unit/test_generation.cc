#include <atomic>
#include <cstdlib>
#include <map>
#include <random>
#include <string>
#include <thread>

#include "doctest.h"
#include "gold_eval.h"
#include "httplib.h"
#include "synthehr/error.h"
#include "synthehr/generation.h"
#include "test_util.h"

using namespace synthehr;
using testing::TempDir;

namespace {

std::string words(const std::string &stem, std::size_t n) {
  std::string s;
  for (std::size_t i = 0; i < n; ++i) {
    if (i) s += ' ';
    s += stem + std::to_string(i);
  }
  return s + ".";
}

ModelConfig stub_config(const std::string &id) {
  ModelConfig c;
  c.model_id = id;
  c.endpoint_url = "stub";
  c.backoff = std::chrono::milliseconds(1);
  return c;
}

class ScriptedBackend : public Backend {
 public:
  explicit ScriptedBackend(std::vector<std::function<std::string()>> steps)
      : steps_(std::move(steps)) {}
  std::string complete(const PromptPair &, const ModelConfig &) override {
    const std::size_t i = calls++;
    return steps_[std::min(i, steps_.size() - 1)]();
  }
  std::size_t calls = 0;

 private:
  std::vector<std::function<std::string()>> steps_;
};

std::string transport_failure() { throw Error(ErrorCode::kTransportFailure, "down"); }

ErrorCode code_of(const std::function<void()> &f) {
  try {
    f();
  } catch (const Error &e) {
    return e.code();
  }
  FAIL("no error thrown");
  return ErrorCode::kInvalidArgument;
}

std::string fixture(const std::string &name) {
  return testing::read_text(std::string(SYNTHEHR_FIXTURES) + "/" + name);
}

}  // namespace

TEST_CASE("refusal markers") {
  CHECK(detect_refusal("I cannot fulfill this request.") == "I cannot");
  CHECK(detect_refusal("i CAN'T PROVIDE that.") == "I can't provide");
  CHECK(detect_refusal("I can’t provide clinical notes.") == "I can't provide");
  CHECK(detect_refusal("Sorry, as an AI I must decline.") == "as an AI");
  CHECK_FALSE(detect_refusal("").has_value());
  CHECK_FALSE(detect_refusal("The patient said AI cannot help.").has_value());
  // Only the opening window counts.
  const std::string late = std::string(300, 'x') + " I cannot do this.";
  CHECK_FALSE(detect_refusal(late).has_value());
  const std::string edge = std::string(291, 'x') + " I cannot";
  REQUIRE(edge.size() == 300);
  CHECK(detect_refusal(edge) == "I cannot");
  // Earliest match wins over list order.
  CHECK(detect_refusal("As an AI, I cannot.") == "as an AI");
  QualityMarkers custom;
  custom.refusal = {"decline"};
  CHECK(detect_refusal("I decline.", custom) == "decline");
  CHECK_FALSE(detect_refusal("I cannot.", custom).has_value());
}

TEST_CASE("sample letters are clean") {
  for (const char *name : {"mistral_init.md", "mistral_gp.md", "mistral_ref.md",
                           "mistral_care.md"}) {
    const std::string text = fixture(name);
    INFO(name);
    CHECK_FALSE(detect_refusal(text).has_value());
    CHECK(detect_disclaimer(text).empty());
    CHECK(detect_repetition(text).empty());
    CHECK(quality_flags(text).empty());
  }
}

TEST_CASE("disclaimer spans") {
  const std::string text = "Review in four weeks. Please note that this report is fictional.";
  const auto spans = detect_disclaimer(text);
  REQUIRE(spans.size() == 1);
  CHECK(text.substr(spans[0].begin, spans[0].size()) == "this report is fictional");
  const std::string two =
      "This is a fictional case. The plan follows. As a language model, I add this note.";
  const auto both = detect_disclaimer(two);
  REQUIRE(both.size() == 2);
  CHECK(two.substr(both[0].begin, both[0].size()) == "This is a fictional");
  CHECK(two.substr(both[1].begin, both[1].size()) == "As a language model");
  CHECK(detect_disclaimer("").empty());
}

TEST_CASE("repetition of a 40-word paragraph") {
  const std::string p1 = words("alpha", 40), p2 = words("beta", 35);
  const auto reps = detect_repetition(p1 + "\n\n" + p2 + "\n\n" + p1);
  REQUIRE(reps.size() == 1);
  CHECK(reps[0].block == p1);
  CHECK(reps[0].count == 2);
  CHECK(detect_repetition(p1).empty());
  const std::string short_p = words("s", 10);
  CHECK(detect_repetition(short_p + "\n\n" + short_p).empty());
  // Whitespace differences do not matter; a repeated run is one block.
  const auto run = detect_repetition(p1 + "\n\n" + p2 + "\n\n  " + p1 + "\n" + "\n" + p2);
  REQUIRE(run.size() == 1);
  CHECK(run[0].block == p1 + "\n\n" + p2);
  CHECK(run[0].count == 2);
  const auto triple = detect_repetition(p1 + "\n\n" + p1 + "\n\n" + p1);
  REQUIRE(triple.size() == 1);
  CHECK(triple[0].count == 3);
}

TEST_CASE("repetition agrees with a brute-force paragraph scan") {
  std::mt19937_64 rng(11);
  const std::vector<std::string> pool = {words("a", 31), words("b", 45), words("c", 5),
                                         words("d", 60), words("e", 12)};
  for (int round = 0; round < 200; ++round) {
    std::vector<std::size_t> seq;
    const std::size_t n = 1 + rng() % 8;
    for (std::size_t i = 0; i < n; ++i) seq.push_back(rng() % pool.size());
    std::string text;
    for (std::size_t i = 0; i < n; ++i) text += (i ? "\n\n" : "") + pool[seq[i]];
    const auto reps = detect_repetition(text);
    std::map<std::size_t, std::size_t> counts;
    for (auto s : seq) ++counts[s];
    for (const auto &[idx, c] : counts) {
      if (c < 2 || count_words(pool[idx]) < 30) continue;
      // Every long duplicated paragraph is covered by a reported block.
      bool covered = false;
      for (const auto &r : reps) covered |= r.block.find(pool[idx]) != std::string::npos;
      CHECK(covered);
    }
    for (const auto &r : reps) {
      CHECK(r.count >= 2);
      CHECK(count_words(r.block) >= 30);
      std::size_t hits = 0;
      for (std::size_t at = text.find(r.block); at != std::string::npos;
           at = text.find(r.block, at + r.block.size())) {
        ++hits;
      }
      CHECK(hits >= r.count);
    }
    bool any_long_dup = false;
    for (const auto &[idx, c] : counts) any_long_dup |= c >= 2 && count_words(pool[idx]) >= 30;
    if (!any_long_dup) CHECK(reps.empty());
  }
}

TEST_CASE("empty text sets only the empty flag") {
  CHECK(quality_flags("") == std::set<QualityFlag>{QualityFlag::kEmpty});
  CHECK(quality_flags(" \n ") == std::set<QualityFlag>{QualityFlag::kEmpty});
}

TEST_CASE("generate with the stub model gives clean output") {
  const auto grid = ParameterGrid::standard();
  StubBackend stub(grid, 7);
  const auto cfg = stub_config("stub");
  for (const auto &g : all_genres()) {
    const auto r = generate(grid.assemble_prompt(grid.at(4321), g.id), cfg, stub);
    CHECK(r.quality_flags.empty());
    CHECK_FALSE(r.text.empty());
    CHECK(r.latency_ms > 0);
    CHECK(r.attempts == 1);
    CHECK(r.story_id == 4321);
    CHECK(r.genre_id == g.id);
  }
}

TEST_CASE("stub output is a function of seed, model, genre and story") {
  const auto grid = ParameterGrid::standard();
  StubBackend a(grid, 7), b(grid, 7), c(grid, 8);
  const auto cfg = stub_config("stub");
  std::size_t differs = 0;
  for (StoryId id = 0; id < 200; id += 7) {
    const auto prompt = grid.assemble_prompt(grid.at(id), GenreId::kInit);
    CHECK(a.complete(prompt, cfg) == b.complete(prompt, cfg));
    differs += a.complete(prompt, cfg) != c.complete(prompt, cfg);
  }
  CHECK(differs > 0);
}

TEST_CASE("refusals are flagged and never retried") {
  const auto grid = ParameterGrid::standard();
  ScriptedBackend backend({[] { return std::string("I cannot provide advice on self-harm."); }});
  auto cfg = stub_config("m");
  cfg.max_retries = 5;
  const auto r = generate(grid.assemble_prompt(grid.at(0), GenreId::kGP), cfg, backend);
  CHECK(r.quality_flags.count(QualityFlag::kRefusal) == 1);
  CHECK(backend.calls == 1);
}

TEST_CASE("transport failures are retried then reported") {
  const auto grid = ParameterGrid::standard();
  const auto prompt = grid.assemble_prompt(grid.at(0), GenreId::kGP);
  auto cfg = stub_config("m");
  cfg.max_retries = 2;
  ScriptedBackend down({transport_failure});
  CHECK(code_of([&] { generate(prompt, cfg, down); }) == ErrorCode::kTransportFailure);
  CHECK(down.calls == 3);

  ScriptedBackend flaky({transport_failure, transport_failure, [] { return std::string("ok"); }});
  const auto r = generate(prompt, cfg, flaky);
  CHECK(r.text == "ok");
  CHECK(r.attempts == 3);

  ScriptedBackend garbled(
      {[]() -> std::string { throw Error(ErrorCode::kMalformedResponse, "bad json"); }});
  CHECK(code_of([&] { generate(prompt, cfg, garbled); }) == ErrorCode::kMalformedResponse);
  CHECK(garbled.calls == 1);
}

TEST_CASE("http backend against a local chat-completions server") {
  httplib::Server server;
  std::atomic<int> requests{0};
  std::string seen_auth;
  nlohmann::json seen_body;
  std::mutex mu;
  server.Post("/v1/chat/completions", [&](const httplib::Request &req, httplib::Response &res) {
    const int n = ++requests;
    {
      std::lock_guard lock(mu);
      seen_auth = req.get_header_value("Authorization");
      seen_body = nlohmann::json::parse(req.body);
    }
    if (n <= 2) {
      res.status = 503;
      return;
    }
    nlohmann::json reply = {
        {"choices", {{{"message", {{"role", "assistant"}, {"content", "Dear Dr Smith,"}}}}}}};
    res.set_content(reply.dump(), "application/json");
  });
  server.Post("/garbled", [](const httplib::Request &, httplib::Response &res) {
    res.set_content("{\"choices\": []}", "application/json");
  });
  const int port = server.bind_to_any_port("127.0.0.1");
  std::thread t([&] { server.listen_after_bind(); });
  server.wait_until_ready();

  ::setenv("SYNTHEHR_TEST_TOKEN", "secret-123", 1);
  ModelConfig cfg;
  cfg.model_id = "mistral";
  cfg.endpoint_url = "http://127.0.0.1:" + std::to_string(port) + "/v1/chat/completions";
  cfg.token_env = "SYNTHEHR_TEST_TOKEN";
  cfg.max_retries = 2;
  cfg.backoff = std::chrono::milliseconds(1);
  cfg.timeout = std::chrono::milliseconds(2000);
  cfg.request_params = {{"temperature", 0.2}};
  const auto grid = ParameterGrid::standard();
  const auto prompt = grid.assemble_prompt(grid.at(3), GenreId::kGP);
  HttpBackend http;
  const auto r = generate(prompt, cfg, http);
  CHECK(r.text == "Dear Dr Smith,");
  CHECK(r.attempts == 3);
  CHECK(requests == 3);
  {
    std::lock_guard lock(mu);
    CHECK(seen_auth == "Bearer secret-123");
    CHECK(seen_body["model"] == "mistral");
    CHECK(seen_body["temperature"] == 0.2);
    CHECK(seen_body["max_tokens"] == kDefaultMaxTokens);
    CHECK(seen_body["messages"][0]["content"] == prompt.system);
    CHECK(seen_body["messages"][1]["content"] == prompt.user);
  }

  cfg.endpoint_url = "http://127.0.0.1:" + std::to_string(port) + "/garbled";
  CHECK(code_of([&] { generate(prompt, cfg, http); }) == ErrorCode::kMalformedResponse);

  server.stop();
  t.join();
  ::unsetenv("SYNTHEHR_TEST_TOKEN");

  // Nothing listens on the port any more.
  cfg.endpoint_url = "http://127.0.0.1:" + std::to_string(port) + "/v1/chat/completions";
  cfg.timeout = std::chrono::milliseconds(300);
  CHECK(code_of([&] { generate(prompt, cfg, http); }) == ErrorCode::kTransportFailure);
}

TEST_CASE("model config validation") {
  auto cfg = stub_config("llama");
  CHECK_NOTHROW(cfg.validate());
  cfg.model_id = "";
  CHECK(code_of([&] { cfg.validate(); }) == ErrorCode::kInvalidConfig);
  cfg.model_id = "a:b";
  CHECK(code_of([&] { cfg.validate(); }) == ErrorCode::kInvalidConfig);
  cfg.model_id = "ok";
  cfg.max_retries = -1;
  CHECK(code_of([&] { cfg.validate(); }) == ErrorCode::kInvalidConfig);
  const auto p = effective_request_params(stub_config("x"));
  CHECK(p["temperature"] == kDefaultTemperature);
  CHECK(p["max_tokens"] == kDefaultMaxTokens);
}

TEST_CASE("run_batch arity, resumability and manifest") {
  TempDir dir("batch");
  const auto grid = ParameterGrid::standard();
  const std::vector<StoryParameters> stories = {grid.at(0), grid.at(9999)};
  std::vector<GenreId> genres;
  for (const auto &g : all_genres()) genres.push_back(g.id);
  const std::vector<ModelConfig> models = {stub_config("stub-a"), stub_config("stub-b")};
  auto store = CorpusStore::open(dir.path(), grid);
  BatchOptions opts;
  opts.seed = 3;
  const auto m = run_batch(stories, genres, models, *store, opts);
  CHECK(m.total == 16);
  CHECK(m.generated == 16);
  CHECK(m.skipped == 0);
  CHECK(m.failures.empty());
  CHECK(m.latency.n == 16);
  CHECK(store->size() == 16);
  const auto manifest = nlohmann::json::parse(testing::slurp(dir / "manifest.json"));
  CHECK(manifest["total"] == 16);
  CHECK(manifest["models"][0]["request_params"]["temperature"] == kDefaultTemperature);
  CHECK(manifest["grid"]["size"] == 12960);
  CHECK(manifest["seed"] == 3);
  CHECK(manifest["shards"].size() == 8);

  std::map<std::string, std::string> before;
  for (const auto &s : store->shard_paths()) before[s] = testing::slurp(dir / s);
  before["manifest.json"] = testing::slurp(dir / "manifest.json");
  before["index.json"] = testing::slurp(dir / "index.json");
  const auto again = run_batch(stories, genres, models, *store, opts);
  CHECK(again.total == 16);
  CHECK(again.generated == 0);
  CHECK(again.skipped == 16);
  for (const auto &[s, bytes] : before) CHECK(testing::slurp(dir / s) == bytes);
}

TEST_CASE("run_batch records per-call failures and respects parallelism") {
  TempDir dir("batch-fail");
  const auto grid = testing::small_grid();
  auto store = CorpusStore::open(dir.path(), grid);
  std::atomic<int> in_flight{0}, peak{0};

  class Probe : public Backend {
   public:
    Probe(std::atomic<int> &in, std::atomic<int> &pk) : in_(in), peak_(pk) {}
    std::string complete(const PromptPair &p, const ModelConfig &) override {
      const int now = ++in_;
      int prev = peak_.load();
      while (now > prev && !peak_.compare_exchange_weak(prev, now)) {
      }
      std::this_thread::sleep_for(std::chrono::milliseconds(2));
      --in_;
      if (p.story_id == 5) throw Error(ErrorCode::kTransportFailure, "story 5 always fails");
      if (p.story_id == 6) return "I cannot write this.";
      return "The patient is well.";
    }

   private:
    std::atomic<int> &in_, &peak_;
  };

  auto cfg = stub_config("probe");
  cfg.parallelism = 3;
  cfg.max_retries = 1;
  BatchOptions opts;
  opts.backend_factory = [&](const ModelConfig &) { return std::make_unique<Probe>(in_flight, peak); };
  const auto m = run_batch(grid.enumerate(), {GenreId::kInit, GenreId::kGP}, {cfg}, *store, opts);
  CHECK(m.total == 24);
  CHECK(m.generated == 22);
  REQUIRE(m.failures.size() == 2);
  CHECK(m.failures[0].code == "transport-failure");
  CHECK(m.flag_counts.at("refusal") == 2);
  CHECK(peak <= 3);
  CHECK(peak >= 1);

  // Resume picks up only the failed triples.
  opts.backend_factory = [](const ModelConfig &) {
    return std::make_unique<ScriptedBackend>(
        std::vector<std::function<std::string()>>{[] { return std::string("Recovered."); }});
  };
  const auto resumed =
      run_batch(grid.enumerate(), {GenreId::kInit, GenreId::kGP}, {cfg}, *store, opts);
  CHECK(resumed.generated == 2);
  CHECK(resumed.skipped == 22);
  CHECK(store->get({"probe", GenreId::kGP, 5}).text == "Recovered.");
}
