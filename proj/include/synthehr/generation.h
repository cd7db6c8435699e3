#ifndef SYNTHEHR_GENERATION_H_
#define SYNTHEHR_GENERATION_H_

#include <chrono>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"
#include "synthehr/corpus_store.h"
#include "synthehr/grid.h"
#include "synthehr/text.h"

namespace synthehr {

// Endpoint settings for one model. An endpoint_url of "stub" selects the
// offline template model.
struct ModelConfig {
  std::string model_id;
  std::string endpoint_url;
  // Sent verbatim in the request body; temperature and max_tokens are always
  // present (defaults below) so the manifest records what was used.
  nlohmann::json request_params = nlohmann::json::object();
  std::chrono::milliseconds timeout{120000};
  int max_retries = 3;
  std::chrono::milliseconds backoff{500};  // doubled after every failed attempt
  int parallelism = 4;
  // Environment variable holding the bearer token for this endpoint.
  std::string token_env = "SYNTHEHR_API_TOKEN";

  bool is_stub() const { return endpoint_url == "stub"; }
  // Throws kInvalidConfig: empty or non [A-Za-z0-9._-] model id, negative
  // retries, parallelism < 1.
  void validate() const;
};

inline constexpr double kDefaultTemperature = 0.7;
inline constexpr int kDefaultMaxTokens = 2048;

// Fills temperature/max_tokens when absent.
nlohmann::json effective_request_params(const ModelConfig &config);

struct QualityMarkers {
  std::vector<std::string> refusal = {"I cannot", "I can't provide", "I'm not able to",
                                      "as an AI"};
  std::vector<std::string> disclaimer = {"this report is fictional", "this is a fictional",
                                         "as a language model"};
  std::size_t refusal_window = 300;       // characters
  std::size_t repetition_min_words = 30;
};

// Earliest refusal marker (as configured) found as whole words within the
// first `refusal_window` characters, ignoring case and apostrophe style.
std::optional<std::string> detect_refusal(std::string_view text,
                                          const QualityMarkers &markers = {});

// Every case-insensitive whole-word match of a disclaimer marker.
std::vector<Span> detect_disclaimer(std::string_view text, const QualityMarkers &markers = {});

struct RepeatedBlock {
  std::string block;  // paragraphs joined by a blank line, whitespace-normalized
  std::size_t count = 0;
};

// Maximal runs of consecutive paragraphs that occur verbatim (after
// whitespace normalization) at least twice and hold at least
// `repetition_min_words` words.
std::vector<RepeatedBlock> detect_repetition(std::string_view text,
                                             const QualityMarkers &markers = {});

std::set<QualityFlag> quality_flags(std::string_view text, const QualityMarkers &markers = {});

struct GenerationResult {
  StoryId story_id = 0;
  GenreId genre_id = GenreId::kInit;
  std::string model_id;
  std::string text;
  double latency_ms = 0;
  std::string created_at;
  std::set<QualityFlag> quality_flags;
  int attempts = 0;
};

// One completion call. Throws Error with kTransportFailure for failures worth
// retrying and kMalformedResponse for a reply that cannot be read.
class Backend {
 public:
  virtual ~Backend() = default;
  virtual std::string complete(const PromptPair &prompt, const ModelConfig &config) = 0;
};

// Deterministic offline model: assembles a genre-shaped document from
// phrase banks, seeded by (seed, model, genre, story).
class StubBackend : public Backend {
 public:
  StubBackend(const ParameterGrid &grid, std::uint64_t seed) : grid_(grid), seed_(seed) {}
  std::string complete(const PromptPair &prompt, const ModelConfig &config) override;

 private:
  ParameterGrid grid_;
  std::uint64_t seed_;
};

// Chat-completions POST: {model, messages: [system, user], ...request_params}.
// Reads choices[0].message.content. The bearer token comes from the
// environment variable named by config.token_env, if set.
class HttpBackend : public Backend {
 public:
  std::string complete(const PromptPair &prompt, const ModelConfig &config) override;
};

std::unique_ptr<Backend> make_backend(const ModelConfig &config, const ParameterGrid &grid,
                                      std::uint64_t seed);

// Calls the backend, retrying transport failures up to config.max_retries
// times with exponential backoff. A malformed response is not retried. A
// refusal is a successful call and is flagged, never retried.
GenerationResult generate(const PromptPair &prompt, const ModelConfig &config, Backend &backend,
                          const QualityMarkers &markers = {});

struct LatencyStats {
  std::size_t n = 0;
  double mean_ms = 0, median_ms = 0, min_ms = 0, max_ms = 0, p95_ms = 0;
  nlohmann::json to_json() const;
};

struct BatchFailure {
  DocKey key;
  std::string code;
  std::string message;
};

struct BatchManifest {
  std::size_t total = 0;      // requested triples
  std::size_t generated = 0;  // newly stored this run
  std::size_t skipped = 0;    // already present
  std::vector<BatchFailure> failures;
  std::map<std::string, std::size_t> flag_counts;
  LatencyStats latency;
  double wall_clock_s = 0;
  std::string started_at;
  std::string finished_at;
  nlohmann::json models = nlohmann::json::array();
  nlohmann::json grid;
  std::vector<std::string> shards;
  std::uint64_t seed = 0;

  nlohmann::json to_json() const;
};

struct BatchOptions {
  QualityMarkers markers;
  std::uint64_t seed = 0;
  // Overrides backend construction; tests use it to inject failures.
  std::function<std::unique_ptr<Backend>(const ModelConfig &)> backend_factory;
};

// Generates every (story, genre, model) triple missing from the store, with at
// most config.parallelism requests in flight per model. Per-call errors are
// recorded in the manifest and skipped; a store write failure aborts.
// Writes manifest.json in the store root, unless the run added nothing and
// one already exists.
BatchManifest run_batch(const std::vector<StoryParameters> &stories,
                        const std::vector<GenreId> &genres,
                        const std::vector<ModelConfig> &configs, CorpusStore &store,
                        const BatchOptions &options = {});

}  // namespace synthehr

#endif  // SYNTHEHR_GENERATION_H_
