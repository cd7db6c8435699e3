#include "synthehr/generation.h"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <mutex>
#include <random>
#include <thread>

#include "httplib.h"
#include "synthehr/error.h"

namespace synthehr {

namespace {

bool is_word_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '\'' ||
         (static_cast<unsigned char>(c) & 0x80);
}

// ASCII lower case with typographic apostrophes folded to '\''. `origin`
// maps each output byte back to its input offset.
std::string fold(std::string_view s, std::vector<std::size_t> *origin = nullptr) {
  std::string out;
  out.reserve(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s.compare(i, 3, "\xE2\x80\x99") == 0) {
      out.push_back('\'');
      if (origin) origin->push_back(i);
      i += 2;
      continue;
    }
    out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(s[i]))));
    if (origin) origin->push_back(i);
  }
  if (origin) origin->push_back(s.size());
  return out;
}

// Whole-word occurrences of `needle` in `hay`; both already folded.
std::vector<std::size_t> find_words(std::string_view hay, std::string_view needle) {
  std::vector<std::size_t> out;
  if (needle.empty()) return out;
  for (std::size_t at = hay.find(needle); at != std::string_view::npos;
       at = hay.find(needle, at + 1)) {
    const std::size_t end = at + needle.size();
    const bool left = at == 0 || !is_word_char(hay[at - 1]) || !is_word_char(needle.front());
    const bool right = end == hay.size() || !is_word_char(hay[end]) || !is_word_char(needle.back());
    if (left && right) out.push_back(at);
  }
  return out;
}

std::vector<std::string> paragraphs(std::string_view text) {
  std::vector<std::string> out;
  std::string current;
  std::size_t pos = 0;
  auto flush = [&] {
    const std::string norm = normalize_whitespace(current);
    if (!norm.empty()) out.push_back(norm);
    current.clear();
  };
  while (pos <= text.size()) {
    std::size_t nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    const std::string_view line = text.substr(pos, nl - pos);
    if (trim(line).empty()) {
      flush();
    } else {
      current.append(line);
      current.push_back('\n');
    }
    pos = nl + 1;
  }
  flush();
  return out;
}

}  // namespace

void ModelConfig::validate() const {
  if (model_id.empty() ||
      !std::all_of(model_id.begin(), model_id.end(), [](char c) {
        return std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || c == '.';
      })) {
    throw Error(ErrorCode::kInvalidConfig, "model id '" + model_id + "' must be non-empty [A-Za-z0-9._-]");
  }
  if (max_retries < 0) throw Error(ErrorCode::kInvalidConfig, "max_retries must be >= 0");
  if (parallelism < 1) throw Error(ErrorCode::kInvalidConfig, "parallelism must be >= 1");
  if (endpoint_url.empty()) {
    throw Error(ErrorCode::kInvalidConfig, "model '" + model_id + "' has no endpoint");
  }
}

nlohmann::json effective_request_params(const ModelConfig &config) {
  nlohmann::json p = config.request_params.is_object() ? config.request_params
                                                       : nlohmann::json::object();
  if (!p.contains("temperature")) p["temperature"] = kDefaultTemperature;
  if (!p.contains("max_tokens")) p["max_tokens"] = kDefaultMaxTokens;
  return p;
}

std::optional<std::string> detect_refusal(std::string_view text, const QualityMarkers &markers) {
  std::vector<std::size_t> origin;
  const std::string hay = fold(text, &origin);
  std::optional<std::string> best;
  std::size_t best_at = std::string::npos;
  for (const auto &m : markers.refusal) {
    const std::string needle = fold(m);
    for (std::size_t at : find_words(hay, needle)) {
      if (origin[at + needle.size()] > markers.refusal_window) break;
      if (at < best_at) {
        best_at = at;
        best = m;
      }
      break;
    }
  }
  return best;
}

std::vector<Span> detect_disclaimer(std::string_view text, const QualityMarkers &markers) {
  std::vector<std::size_t> origin;
  const std::string hay = fold(text, &origin);
  std::vector<Span> out;
  for (const auto &m : markers.disclaimer) {
    const std::string needle = fold(m);
    for (std::size_t at : find_words(hay, needle)) {
      out.push_back({origin[at], origin[at + needle.size()]});
    }
  }
  std::sort(out.begin(), out.end(),
            [](const Span &a, const Span &b) { return a.begin < b.begin; });
  return out;
}

std::vector<RepeatedBlock> detect_repetition(std::string_view text,
                                             const QualityMarkers &markers) {
  const auto paras = paragraphs(text);
  const std::size_t n = paras.size();
  auto join = [&](std::size_t from, std::size_t len) {
    std::string s;
    for (std::size_t k = 0; k < len; ++k) {
      if (k) s += "\n\n";
      s += paras[from + k];
    }
    return s;
  };
  std::vector<std::pair<std::size_t, std::size_t>> runs;  // (start, length)
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (paras[i] != paras[j]) continue;
      if (i > 0 && paras[i - 1] == paras[j - 1] && j - 1 > i) continue;  // not maximal
      std::size_t len = 1;
      while (j + len < n && i + len < j && paras[i + len] == paras[j + len]) ++len;
      runs.emplace_back(i, len);
    }
  }
  std::vector<RepeatedBlock> out;
  std::set<std::string> seen;
  for (const auto &[start, len] : runs) {
    std::string block = join(start, len);
    if (count_words(block) < markers.repetition_min_words || !seen.insert(block).second) continue;
    std::size_t count = 0;
    for (std::size_t k = 0; k + len <= n;) {
      if (std::equal(paras.begin() + k, paras.begin() + k + len, paras.begin() + start)) {
        ++count;
        k += len;
      } else {
        ++k;
      }
    }
    if (count >= 2) out.push_back({std::move(block), count});
  }
  return out;
}

std::set<QualityFlag> quality_flags(std::string_view text, const QualityMarkers &markers) {
  std::set<QualityFlag> flags;
  if (trim(text).empty()) {
    flags.insert(QualityFlag::kEmpty);
    return flags;
  }
  if (detect_refusal(text, markers)) flags.insert(QualityFlag::kRefusal);
  if (!detect_disclaimer(text, markers).empty()) flags.insert(QualityFlag::kDisclaimer);
  if (!detect_repetition(text, markers).empty()) flags.insert(QualityFlag::kRepetition);
  return flags;
}

std::string HttpBackend::complete(const PromptPair &prompt, const ModelConfig &config) {
  // Split "scheme://host[:port]/path".
  const std::string &url = config.endpoint_url;
  const std::size_t scheme_end = url.find("://");
  if (scheme_end == std::string::npos) {
    throw Error(ErrorCode::kInvalidConfig, "endpoint url '" + url + "' has no scheme");
  }
  const std::size_t path_start = url.find('/', scheme_end + 3);
  const std::string base = url.substr(0, path_start);
  const std::string path = path_start == std::string::npos ? "/" : url.substr(path_start);

  httplib::Client client(base);
  const auto secs = std::chrono::duration_cast<std::chrono::seconds>(config.timeout);
  const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(config.timeout - secs);
  client.set_connection_timeout(secs.count(), usecs.count());
  client.set_read_timeout(secs.count(), usecs.count());
  client.set_write_timeout(secs.count(), usecs.count());

  httplib::Headers headers;
  if (const char *token = std::getenv(config.token_env.c_str()); token && *token) {
    headers.emplace("Authorization", std::string("Bearer ") + token);
  }
  nlohmann::json body = effective_request_params(config);
  body["model"] = config.model_id;
  body["messages"] = nlohmann::json::array({{{"role", "system"}, {"content", prompt.system}},
                                            {{"role", "user"}, {"content", prompt.user}}});

  const auto res = client.Post(path, headers, body.dump(), "application/json");
  if (!res) {
    throw Error(ErrorCode::kTransportFailure,
                "request to " + base + " failed: " + httplib::to_string(res.error()));
  }
  if (res->status != 200) {
    throw Error(ErrorCode::kTransportFailure,
                "endpoint returned HTTP " + std::to_string(res->status));
  }
  try {
    const auto j = nlohmann::json::parse(res->body);
    return j.at("choices").at(0).at("message").at("content").get<std::string>();
  } catch (const nlohmann::json::exception &e) {
    throw Error(ErrorCode::kMalformedResponse, std::string("unreadable completion: ") + e.what());
  }
}

std::unique_ptr<Backend> make_backend(const ModelConfig &config, const ParameterGrid &grid,
                                      std::uint64_t seed) {
  if (config.is_stub()) return std::make_unique<StubBackend>(grid, seed);
  return std::make_unique<HttpBackend>();
}

GenerationResult generate(const PromptPair &prompt, const ModelConfig &config, Backend &backend,
                          const QualityMarkers &markers) {
  GenerationResult r;
  r.story_id = prompt.story_id;
  r.genre_id = prompt.genre_id;
  r.model_id = config.model_id;
  auto delay = config.backoff;
  for (int attempt = 0;; ++attempt) {
    r.attempts = attempt + 1;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      r.text = backend.complete(prompt, config);
    } catch (const Error &e) {
      if (e.code() != ErrorCode::kTransportFailure || attempt >= config.max_retries) {
        if (e.code() == ErrorCode::kTransportFailure) {
          throw Error(e.code(), std::string(e.what()) + " (after " +
                                    std::to_string(attempt + 1) + " attempts)");
        }
        throw;
      }
      std::this_thread::sleep_for(delay);
      delay *= 2;
      continue;
    }
    const auto t1 = std::chrono::steady_clock::now();
    r.latency_ms = std::max(1e-3, std::chrono::duration<double, std::milli>(t1 - t0).count());
    break;
  }
  r.created_at = utc_timestamp();
  r.quality_flags = quality_flags(r.text, markers);
  return r;
}

nlohmann::json LatencyStats::to_json() const {
  return {{"n", n},           {"mean_ms", mean_ms}, {"median_ms", median_ms},
          {"min_ms", min_ms}, {"max_ms", max_ms},   {"p95_ms", p95_ms}};
}

nlohmann::json BatchManifest::to_json() const {
  nlohmann::json fails = nlohmann::json::array();
  for (const auto &f : failures) {
    fails.push_back({{"key", synthehr::to_string(f.key)}, {"code", f.code}, {"message", f.message}});
  }
  return {{"started_at", started_at},
          {"finished_at", finished_at},
          {"wall_clock_s", wall_clock_s},
          {"total", total},
          {"generated", generated},
          {"skipped", skipped},
          {"failed", failures.size()},
          {"failures", std::move(fails)},
          {"flag_counts", flag_counts},
          {"latency", latency.to_json()},
          {"models", models},
          {"grid", grid},
          {"shards", shards},
          {"seed", seed}};
}

namespace {

LatencyStats latency_stats(std::vector<double> xs) {
  LatencyStats s;
  s.n = xs.size();
  if (xs.empty()) return s;
  std::sort(xs.begin(), xs.end());
  double sum = 0;
  for (double x : xs) sum += x;
  auto q = [&](double p) {
    const double pos = p * double(xs.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, xs.size() - 1);
    return xs[lo] + (pos - double(lo)) * (xs[hi] - xs[lo]);
  };
  s.mean_ms = sum / double(xs.size());
  s.median_ms = q(0.5);
  s.p95_ms = q(0.95);
  s.min_ms = xs.front();
  s.max_ms = xs.back();
  return s;
}

}  // namespace

BatchManifest run_batch(const std::vector<StoryParameters> &stories,
                        const std::vector<GenreId> &genres,
                        const std::vector<ModelConfig> &configs, CorpusStore &store,
                        const BatchOptions &options) {
  const auto wall0 = std::chrono::steady_clock::now();
  BatchManifest m;
  m.started_at = utc_timestamp();
  m.seed = options.seed;
  m.grid = store.grid().describe();
  for (const auto &c : configs) {
    c.validate();
    m.models.push_back({{"model_id", c.model_id},
                        {"endpoint", c.endpoint_url},
                        {"request_params", effective_request_params(c)},
                        {"timeout_ms", c.timeout.count()},
                        {"max_retries", c.max_retries},
                        {"parallelism", c.parallelism}});
  }

  std::mutex mu;
  std::vector<double> latencies;
  std::exception_ptr fatal;
  std::atomic<bool> abort{false};
  const ParameterGrid &grid = store.grid();

  std::vector<std::thread> workers;
  std::vector<std::vector<DocKey>> todo(configs.size());
  std::vector<std::unique_ptr<std::atomic<std::size_t>>> cursors;
  for (std::size_t ci = 0; ci < configs.size(); ++ci) {
    for (const auto &s : stories) {
      for (auto g : genres) {
        DocKey key{configs[ci].model_id, g, s.id};
        ++m.total;
        if (store.contains(key)) {
          ++m.skipped;
        } else {
          todo[ci].push_back(std::move(key));
        }
      }
    }
    cursors.push_back(std::make_unique<std::atomic<std::size_t>>(0));
  }

  for (std::size_t ci = 0; ci < configs.size(); ++ci) {
    const ModelConfig &config = configs[ci];
    const int n = std::min<int>(config.parallelism, std::max<std::size_t>(1, todo[ci].size()));
    for (int w = 0; w < n; ++w) {
      workers.emplace_back([&, ci] {
        std::unique_ptr<Backend> backend =
            options.backend_factory ? options.backend_factory(configs[ci])
                                    : make_backend(configs[ci], grid, options.seed);
        auto &cursor = *cursors[ci];
        while (!abort) {
          const std::size_t i = cursor++;
          if (i >= todo[ci].size()) break;
          const DocKey &key = todo[ci][i];
          const StoryParameters params = grid.at(key.story_id);
          try {
            const auto r = generate(grid.assemble_prompt(params, key.genre), configs[ci],
                                    *backend, options.markers);
            DocumentRecord rec{key, params, r.text, r.quality_flags, r.latency_ms, r.created_at};
            try {
              store.put(rec);
            } catch (const Error &e) {
              if (e.code() == ErrorCode::kDuplicateKey) continue;
              throw;
            }
            std::lock_guard lock(mu);
            ++m.generated;
            latencies.push_back(r.latency_ms);
            for (auto f : r.quality_flags) ++m.flag_counts[std::string(quality_flag_name(f))];
          } catch (const Error &e) {
            std::lock_guard lock(mu);
            if (e.code() == ErrorCode::kStoreWrite || e.code() == ErrorCode::kInvalidArgument) {
              if (!fatal) fatal = std::current_exception();
              abort = true;
              break;
            }
            m.failures.push_back({key, std::string(error_code_name(e.code())), e.what()});
          } catch (...) {
            std::lock_guard lock(mu);
            if (!fatal) fatal = std::current_exception();
            abort = true;
            break;
          }
        }
      });
    }
  }
  for (auto &t : workers) t.join();
  store.write_index();
  if (fatal) std::rethrow_exception(fatal);

  std::sort(m.failures.begin(), m.failures.end(),
            [](const BatchFailure &a, const BatchFailure &b) { return a.key < b.key; });
  m.latency = latency_stats(std::move(latencies));
  m.shards = store.shard_paths();
  m.finished_at = utc_timestamp();
  m.wall_clock_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - wall0).count();

  const auto path = store.root() / "manifest.json";
  // Nothing new: keep the manifest of the run that produced the documents.
  if (m.generated == 0 && m.failures.empty() && std::filesystem::exists(path)) return m;
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << m.to_json().dump(2) << "\n";
  if (!out) throw Error(ErrorCode::kStoreWrite, "cannot write " + path.string());
  return m;
}

}  // namespace synthehr
