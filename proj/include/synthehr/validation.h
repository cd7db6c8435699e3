#ifndef SYNTHEHR_VALIDATION_H_
#define SYNTHEHR_VALIDATION_H_

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "json.hpp"
#include "synthehr/corpus_store.h"
#include "synthehr/sfl.h"

namespace synthehr {

// Uniform integer in [0, n) by rejection; unlike the standard distributions
// its output is the same on every standard library.
std::uint64_t uniform_below(std::mt19937_64 &rng, std::uint64_t n);

// Records excluded from sampling and analysis: refusals and empty outputs.
bool analysable(const DocumentRecord &r);

// Uniform sample without replacement of `per_cell` analysable documents in
// each (model, genre) cell present under `filter`. Cells are drawn in key
// order from one generator seeded with `seed`; the result is in key order.
// Throws kInsufficientPopulation when a cell is too small, kEmptySelection
// when no cell exists.
std::vector<DocKey> sample_for_validation(const CorpusStore &store, std::size_t per_cell,
                                          std::uint64_t seed, const RecordFilter &filter = {});

struct SampleBatch {
  std::string batch_id;
  std::uint64_t seed = 0;
  std::size_t per_cell = 0;
  std::vector<DocKey> keys;

  nlohmann::json to_json() const;
  static SampleBatch from_json(const nlohmann::json &j);
};

std::optional<Gender> story_gender(const DocumentRecord &r, const ParameterGrid &grid);
AnnotationSet annotate_record(const Annotator &annotator, const DocumentRecord &r,
                              const ParameterGrid &grid);

enum class DecisionKind { kAccept, kReject, kRelabel };
std::string_view decision_kind_name(DecisionKind k);
std::optional<DecisionKind> parse_decision_kind(std::string_view s);

struct Decision {
  DecisionKind kind = DecisionKind::kAccept;
  std::optional<std::string> label;  // relabel only
};

struct DecisionEntry {
  std::string annotation_id;
  Decision decision;
  std::string reviewer;
  std::string timestamp;
  std::optional<std::string> token;

  nlohmann::json to_json() const;
  static DecisionEntry from_json(const nlohmann::json &j);
};

// Review state after a decision.
Review review_after(const Decision &d);

// Applies a decision log, in order, to automatic annotation sets. Entries
// whose annotation no longer exists are skipped. The last decision for an
// annotation wins.
void apply_log(std::vector<AnnotationSet> &sets, const std::vector<DecisionEntry> &log);

struct DecisionOutcome {
  std::string annotation_id;
  Layer layer = Layer::kProcess;
  Review review;
  std::string effective_label;
  bool replayed = false;  // token seen before; nothing was written
  nlohmann::json to_json() const;
};

// Annotations and review state under one directory:
//   annotations.jsonl   automatic annotation sets, one per line, key order
//   decisions.jsonl     append-only decision log
//   batches/<id>.json   validation samples
// Review state is always the annotation file with the log replayed on top.
// Writers are serialized; reads take the same lock.
class AnnotationStore {
 public:
  static std::unique_ptr<AnnotationStore> open(const std::filesystem::path &dir);

  // Replaces the automatic annotations. Statuses in `sets` are ignored; the
  // decision log is kept and replayed.
  void write_annotations(std::vector<AnnotationSet> sets);

  bool contains(std::string_view doc_key) const;
  // Reviewed annotation set. Throws kNotFound.
  AnnotationSet get(std::string_view doc_key) const;
  std::vector<AnnotationSet> all() const;
  std::vector<std::string> doc_keys() const;

  // Throws kUnknownAnnotation, kInvalidLabel, kInvalidArgument (label on a
  // non-relabel decision) or kTokenConflict (token reused for a different
  // request).
  DecisionOutcome apply_decision(std::string_view annotation_id, const Decision &decision,
                                 const std::string &reviewer,
                                 const std::optional<std::string> &token = {});
  std::vector<DecisionEntry> decision_log() const;

  void save_batch(const SampleBatch &batch);
  // Throws kUnknownBatch.
  SampleBatch batch(const std::string &batch_id) const;
  std::vector<std::string> batch_ids() const;

  const std::filesystem::path &dir() const { return dir_; }

 private:
  explicit AnnotationStore(std::filesystem::path dir) : dir_(std::move(dir)) {}
  void load();
  void rebuild_reviewed();
  DecisionOutcome outcome_for(const std::string &id) const;

  std::filesystem::path dir_;
  mutable std::mutex mu_;
  std::vector<AnnotationSet> auto_;      // key order
  std::vector<AnnotationSet> reviewed_;  // auto_ with the log applied
  std::map<std::string, std::size_t, std::less<>> by_key_;
  std::vector<DecisionEntry> log_;
  std::map<std::string, std::size_t> tokens_;  // token -> log index
};

// Orders document key strings by parsed DocKey when both parse.
bool doc_key_less(std::string_view a, std::string_view b);

}  // namespace synthehr

#endif  // SYNTHEHR_VALIDATION_H_
