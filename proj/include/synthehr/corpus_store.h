#ifndef SYNTHEHR_CORPUS_STORE_H_
#define SYNTHEHR_CORPUS_STORE_H_

#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"
#include "synthehr/grid.h"

namespace synthehr {

class Annotator;

enum class QualityFlag { kRefusal, kDisclaimer, kRepetition, kEmpty };

std::string_view quality_flag_name(QualityFlag f);
std::optional<QualityFlag> parse_quality_flag(std::string_view s);

// Identity of a generated document. Ordering is (model, genre, story), which
// is the iteration order of the store.
struct DocKey {
  std::string model;
  GenreId genre = GenreId::kInit;
  StoryId story_id = 0;

  auto operator<=>(const DocKey &) const = default;
  bool operator==(const DocKey &) const = default;
};

// "<model>:<Genre>:<story_id>"
std::string to_string(const DocKey &key);
std::optional<DocKey> parse_doc_key(std::string_view s);

struct DocumentRecord {
  DocKey key;
  StoryParameters parameters;
  std::string text;
  std::set<QualityFlag> quality_flags;
  double latency_ms = 0.0;
  std::string created_at;  // ISO-8601 UTC

  bool operator==(const DocumentRecord &) const = default;
};

// One JSONL line. Parameters are written as value keys per dimension so a
// record is readable without the grid.
nlohmann::json to_json(const DocumentRecord &r, const ParameterGrid &grid);
DocumentRecord record_from_json(const nlohmann::json &j, const ParameterGrid &grid);

// Restricts records by model, genre and parameter values. Empty lists mean
// no restriction.
struct RecordFilter {
  std::vector<std::string> models;
  std::vector<GenreId> genres;
  std::map<Dimension, std::vector<std::string>> parameters;  // value keys

  bool matches(const DocKey &key, const ParameterGrid &grid) const;
  // Parses "dimension=key1,key2" and adds it. Throws kUnknownDimension or
  // kInvalidArgument when a value key is not in the grid.
  void add_assignment(std::string_view assignment, const ParameterGrid &grid);
};

struct CorpusStats {
  std::size_t n_texts = 0;
  std::size_t n_sentences = 0;
  std::size_t n_words = 0;
  double length_median = 0;
  double length_mean = 0;
  double length_q1 = 0;
  double length_q3 = 0;
  std::size_t length_min = 0;
  std::size_t length_max = 0;

  nlohmann::json to_json() const;
};

// Inclusive linear-interpolation quantile of sorted data, p in [0, 1].
double quantile_linear(const std::vector<std::size_t> &sorted, double p);

// Statistics over the given texts. Sentences are prose and list-item spans of
// the annotator's segmenter; headings are not counted. Throws kEmptySelection
// on an empty input.
CorpusStats compute_stats(const std::vector<std::string_view> &texts, const Annotator &annotator);

// Append-only document store. Layout under the root directory:
//   shards/<model>/<Genre>.jsonl   one record per line
//   index.json                     shard list with record counts and the grid
// The in-memory key index is rebuilt from the shards on open. put() may be
// called concurrently for distinct keys.
class CorpusStore {
 public:
  static std::unique_ptr<CorpusStore> open(const std::filesystem::path &root,
                                           const ParameterGrid &grid);
  ~CorpusStore();

  // Throws kDuplicateKey if the key is present, kStoreWrite on I/O failure.
  void put(const DocumentRecord &record);
  // Throws kNotFound.
  DocumentRecord get(const DocKey &key) const;
  bool contains(const DocKey &key) const;
  std::size_t size() const;

  // Keys in key order, restricted by `filter`.
  std::vector<DocKey> keys(const RecordFilter &filter = {}) const;
  // Visits matching records in key order.
  void iterate(const RecordFilter &filter,
               const std::function<void(const DocumentRecord &)> &visit) const;
  std::vector<DocumentRecord> records(const RecordFilter &filter = {}) const;

  CorpusStats stats(const RecordFilter &filter, const Annotator &annotator) const;

  // Rewrites index.json. Called by put() batches and on destruction.
  void write_index() const;

  const std::filesystem::path &root() const { return root_; }
  const ParameterGrid &grid() const { return grid_; }
  // Relative shard paths, sorted.
  std::vector<std::string> shard_paths() const;

 private:
  struct Location {
    std::string shard;  // relative path
    std::uint64_t offset = 0;
    std::uint64_t length = 0;
  };

  CorpusStore(std::filesystem::path root, ParameterGrid grid);
  void load_shard(const std::filesystem::path &file);
  DocumentRecord read_at(const Location &loc) const;

  std::filesystem::path root_;
  ParameterGrid grid_;
  mutable std::mutex mu_;
  std::map<DocKey, Location> index_;
  std::map<std::string, std::uint64_t> shard_sizes_;
};

std::string utc_timestamp();

}  // namespace synthehr

#endif  // SYNTHEHR_CORPUS_STORE_H_
