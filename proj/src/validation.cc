#include "synthehr/validation.h"

#include <algorithm>
#include <fstream>

#include "synthehr/error.h"

namespace synthehr {

namespace fs = std::filesystem;

std::uint64_t uniform_below(std::mt19937_64 &rng, std::uint64_t n) {
  if (n == 0) throw Error(ErrorCode::kInvalidArgument, "uniform_below(0)");
  // Largest multiple of n that fits; values at or above it are redrawn.
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % n;
  std::uint64_t x;
  do {
    x = rng();
  } while (x >= limit);
  return x % n;
}

bool analysable(const DocumentRecord &r) {
  return !r.quality_flags.count(QualityFlag::kRefusal) && !r.quality_flags.count(QualityFlag::kEmpty);
}

std::vector<DocKey> sample_for_validation(const CorpusStore &store, std::size_t per_cell,
                                          std::uint64_t seed, const RecordFilter &filter) {
  std::map<std::pair<std::string, GenreId>, std::vector<DocKey>> cells;
  store.iterate(filter, [&](const DocumentRecord &r) {
    if (analysable(r)) cells[{r.key.model, r.key.genre}].push_back(r.key);
  });
  if (cells.empty()) throw Error(ErrorCode::kEmptySelection, "no documents to sample from");
  std::mt19937_64 rng(seed);
  std::vector<DocKey> out;
  for (auto &[cell, keys] : cells) {
    if (keys.size() < per_cell) {
      throw Error(ErrorCode::kInsufficientPopulation,
                  "cell " + cell.first + "/" + std::string(genre_code(cell.second)) + " has " +
                      std::to_string(keys.size()) + " documents, " + std::to_string(per_cell) +
                      " requested");
    }
    // Partial Fisher-Yates.
    for (std::size_t i = 0; i < per_cell; ++i) {
      const std::size_t j = i + uniform_below(rng, keys.size() - i);
      std::swap(keys[i], keys[j]);
    }
    out.insert(out.end(), keys.begin(), keys.begin() + static_cast<std::ptrdiff_t>(per_cell));
  }
  std::sort(out.begin(), out.end());
  return out;
}

nlohmann::json SampleBatch::to_json() const {
  nlohmann::json keys_json = nlohmann::json::array();
  for (const auto &k : keys) keys_json.push_back(to_string(k));
  return {{"batch_id", batch_id}, {"seed", seed}, {"per_cell", per_cell}, {"keys", keys_json}};
}

SampleBatch SampleBatch::from_json(const nlohmann::json &j) {
  SampleBatch b;
  try {
    b.batch_id = j.at("batch_id").get<std::string>();
    b.seed = j.at("seed").get<std::uint64_t>();
    b.per_cell = j.at("per_cell").get<std::size_t>();
    for (const auto &k : j.at("keys")) {
      const auto key = parse_doc_key(k.get<std::string>());
      if (!key) throw Error(ErrorCode::kInvalidConfig, "bad key in batch " + b.batch_id);
      b.keys.push_back(*key);
    }
  } catch (const nlohmann::json::exception &e) {
    throw Error(ErrorCode::kInvalidConfig, std::string("malformed batch: ") + e.what());
  }
  return b;
}

std::optional<Gender> story_gender(const DocumentRecord &r, const ParameterGrid &grid) {
  const std::string &g = grid.value(r.parameters, Dimension::kGender).key;
  if (g == "female") return Gender::kFemale;
  if (g == "male") return Gender::kMale;
  return std::nullopt;
}

AnnotationSet annotate_record(const Annotator &annotator, const DocumentRecord &r,
                              const ParameterGrid &grid) {
  return annotator.annotate(r.text, to_string(r.key), story_gender(r, grid));
}

namespace {

constexpr std::array<std::string_view, 3> kDecisionNames = {"accept", "reject", "relabel"};

template <typename F>
auto with_annotation(AnnotationSet &set, Layer layer, std::size_t index, F &&f) {
  switch (layer) {
    case Layer::kProcess:
      if (index >= set.processes.size()) break;
      return f(set.processes[index]);
    case Layer::kModality:
      if (index >= set.modalities.size()) break;
      return f(set.modalities[index]);
    case Layer::kTheme:
      if (index >= set.themes.size()) break;
      return f(set.themes[index]);
  }
  throw Error(ErrorCode::kUnknownAnnotation, "no annotation at that index");
}

void write_atomic(const fs::path &path, const std::string &content) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out << content;
    if (!out) throw Error(ErrorCode::kStoreWrite, "cannot write " + tmp.string());
  }
  fs::rename(tmp, path);
}

void reset_reviews(AnnotationSet &s) {
  for (auto &a : s.processes) a.review = {};
  for (auto &a : s.modalities) a.review = {};
  for (auto &a : s.themes) a.review = {};
}

bool valid_batch_id(std::string_view id) {
  return !id.empty() && std::all_of(id.begin(), id.end(), [](char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || c == '.';
  }) && id != "." && id != "..";
}

}  // namespace

std::string_view decision_kind_name(DecisionKind k) {
  return kDecisionNames[static_cast<std::size_t>(k)];
}

std::optional<DecisionKind> parse_decision_kind(std::string_view s) {
  for (std::size_t i = 0; i < kDecisionNames.size(); ++i) {
    if (kDecisionNames[i] == s) return static_cast<DecisionKind>(i);
  }
  return std::nullopt;
}

nlohmann::json DecisionEntry::to_json() const {
  nlohmann::json j = {{"annotation_id", annotation_id},
                      {"decision", decision_kind_name(decision.kind)},
                      {"reviewer", reviewer},
                      {"timestamp", timestamp}};
  if (decision.label) j["label"] = *decision.label;
  if (token) j["token"] = *token;
  return j;
}

DecisionEntry DecisionEntry::from_json(const nlohmann::json &j) {
  DecisionEntry e;
  e.annotation_id = j.at("annotation_id").get<std::string>();
  const auto kind = parse_decision_kind(j.at("decision").get<std::string>());
  if (!kind) throw Error(ErrorCode::kInvalidConfig, "unknown decision in log");
  e.decision.kind = *kind;
  if (j.contains("label")) e.decision.label = j["label"].get<std::string>();
  e.reviewer = j.at("reviewer").get<std::string>();
  e.timestamp = j.at("timestamp").get<std::string>();
  if (j.contains("token")) e.token = j["token"].get<std::string>();
  return e;
}

Review review_after(const Decision &d) {
  switch (d.kind) {
    case DecisionKind::kAccept: return {ReviewStatus::kAccepted, std::nullopt};
    case DecisionKind::kReject: return {ReviewStatus::kRejected, std::nullopt};
    case DecisionKind::kRelabel: return {ReviewStatus::kRelabeled, d.label};
  }
  return {};
}

void apply_log(std::vector<AnnotationSet> &sets, const std::vector<DecisionEntry> &log) {
  std::map<std::string, std::size_t, std::less<>> index;
  for (std::size_t i = 0; i < sets.size(); ++i) index[sets[i].doc_key] = i;
  for (const auto &e : log) {
    const auto ref = parse_annotation_id(e.annotation_id);
    if (!ref) continue;
    const auto it = index.find(ref->doc_key);
    if (it == index.end()) continue;
    try {
      with_annotation(sets[it->second], ref->layer, ref->index,
                      [&](auto &a) { a.review = review_after(e.decision); });
    } catch (const Error &) {
      // annotation removed by a later re-annotation
    }
  }
}

nlohmann::json DecisionOutcome::to_json() const {
  nlohmann::json j = {{"annotation_id", annotation_id},
                      {"layer", layer_name(layer)},
                      {"status", review_status_name(review.status)},
                      {"effective_label", effective_label},
                      {"replayed", replayed}};
  j["relabel"] = review.relabel ? nlohmann::json(*review.relabel) : nlohmann::json(nullptr);
  return j;
}

bool doc_key_less(std::string_view a, std::string_view b) {
  const auto ka = parse_doc_key(a), kb = parse_doc_key(b);
  if (ka && kb) return *ka < *kb;
  if (ka.has_value() != kb.has_value()) return ka.has_value();
  return a < b;
}

std::unique_ptr<AnnotationStore> AnnotationStore::open(const fs::path &dir) {
  std::error_code ec;
  fs::create_directories(dir / "batches", ec);
  if (ec) throw Error(ErrorCode::kStoreWrite, "cannot create " + dir.string());
  std::unique_ptr<AnnotationStore> s(new AnnotationStore(dir));
  s->load();
  return s;
}

void AnnotationStore::load() {
  auto_.clear();
  log_.clear();
  tokens_.clear();
  {
    std::ifstream in(dir_ / "annotations.jsonl", std::ios::binary);
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      try {
        auto set = annotation_set_from_json(nlohmann::json::parse(line));
        reset_reviews(set);
        auto_.push_back(std::move(set));
      } catch (const nlohmann::json::exception &e) {
        throw Error(ErrorCode::kInvalidConfig, std::string("bad annotations.jsonl: ") + e.what());
      }
    }
  }
  {
    const fs::path path = dir_ / "decisions.jsonl";
    std::ifstream in(path, std::ios::binary);
    std::string line;
    std::uint64_t good_end = 0;
    while (std::getline(in, line)) {
      if (in.eof()) break;  // torn last line
      good_end += line.size() + 1;
      if (line.empty()) continue;
      try {
        log_.push_back(DecisionEntry::from_json(nlohmann::json::parse(line)));
      } catch (const nlohmann::json::exception &e) {
        throw Error(ErrorCode::kInvalidConfig, std::string("bad decisions.jsonl: ") + e.what());
      }
      if (log_.back().token) tokens_[*log_.back().token] = log_.size() - 1;
    }
    in.close();
    if (fs::exists(path) && fs::file_size(path) != good_end) fs::resize_file(path, good_end);
  }
  std::sort(auto_.begin(), auto_.end(), [](const AnnotationSet &a, const AnnotationSet &b) {
    return doc_key_less(a.doc_key, b.doc_key);
  });
  rebuild_reviewed();
}

void AnnotationStore::rebuild_reviewed() {
  by_key_.clear();
  for (std::size_t i = 0; i < auto_.size(); ++i) by_key_[auto_[i].doc_key] = i;
  reviewed_ = auto_;
  apply_log(reviewed_, log_);
}

void AnnotationStore::write_annotations(std::vector<AnnotationSet> sets) {
  for (auto &s : sets) reset_reviews(s);
  std::sort(sets.begin(), sets.end(), [](const AnnotationSet &a, const AnnotationSet &b) {
    return doc_key_less(a.doc_key, b.doc_key);
  });
  for (std::size_t i = 1; i < sets.size(); ++i) {
    if (sets[i].doc_key == sets[i - 1].doc_key) {
      throw Error(ErrorCode::kDuplicateKey, "two annotation sets for " + sets[i].doc_key);
    }
  }
  std::string content;
  for (const auto &s : sets) content += to_json(s).dump() + "\n";
  std::lock_guard lock(mu_);
  write_atomic(dir_ / "annotations.jsonl", content);
  auto_ = std::move(sets);
  rebuild_reviewed();
}

bool AnnotationStore::contains(std::string_view doc_key) const {
  std::lock_guard lock(mu_);
  return by_key_.find(doc_key) != by_key_.end();
}

AnnotationSet AnnotationStore::get(std::string_view doc_key) const {
  std::lock_guard lock(mu_);
  const auto it = by_key_.find(doc_key);
  if (it == by_key_.end()) {
    throw Error(ErrorCode::kNotFound, "no annotations for " + std::string(doc_key));
  }
  return reviewed_[it->second];
}

std::vector<AnnotationSet> AnnotationStore::all() const {
  std::lock_guard lock(mu_);
  return reviewed_;
}

std::vector<std::string> AnnotationStore::doc_keys() const {
  std::lock_guard lock(mu_);
  std::vector<std::string> out;
  for (const auto &s : auto_) out.push_back(s.doc_key);
  return out;
}

DecisionOutcome AnnotationStore::outcome_for(const std::string &id) const {
  const auto ref = parse_annotation_id(id);
  DecisionOutcome o;
  o.annotation_id = id;
  o.layer = ref->layer;
  auto set = reviewed_[by_key_.find(ref->doc_key)->second];
  with_annotation(set, ref->layer, ref->index, [&](auto &a) {
    o.review = a.review;
    o.effective_label = synthehr::effective_label(a);
  });
  return o;
}

DecisionOutcome AnnotationStore::apply_decision(std::string_view annotation_id,
                                                const Decision &decision,
                                                const std::string &reviewer,
                                                const std::optional<std::string> &token) {
  const std::string id(annotation_id);
  const auto ref = parse_annotation_id(id);
  if (!ref) throw Error(ErrorCode::kUnknownAnnotation, "malformed annotation id '" + id + "'");

  std::lock_guard lock(mu_);
  if (token) {
    if (const auto it = tokens_.find(*token); it != tokens_.end()) {
      const DecisionEntry &prev = log_[it->second];
      if (prev.annotation_id != id || prev.decision.kind != decision.kind ||
          prev.decision.label != decision.label) {
        throw Error(ErrorCode::kTokenConflict,
                    "decision token '" + *token + "' was used for a different request");
      }
      DecisionOutcome o = outcome_for(id);
      // Report what this token decided, even if a later decision changed it.
      o.review = review_after(prev.decision);
      auto set = auto_[by_key_.find(ref->doc_key)->second];
      with_annotation(set, ref->layer, ref->index, [&](auto &a) {
        a.review = o.review;
        o.effective_label = synthehr::effective_label(a);
      });
      o.replayed = true;
      return o;
    }
  }
  const auto it = by_key_.find(ref->doc_key);
  if (it == by_key_.end()) {
    throw Error(ErrorCode::kUnknownAnnotation, "unknown annotation '" + id + "'");
  }
  try {
    with_annotation(reviewed_[it->second], ref->layer, ref->index, [](auto &) { return 0; });
  } catch (const Error &) {
    throw Error(ErrorCode::kUnknownAnnotation, "unknown annotation '" + id + "'");
  }
  if (decision.kind == DecisionKind::kRelabel) {
    if (!decision.label || !valid_label(ref->layer, *decision.label)) {
      throw Error(ErrorCode::kInvalidLabel,
                  "'" + decision.label.value_or("") + "' is not a " +
                      std::string(layer_name(ref->layer)) + " label");
    }
  } else if (decision.label) {
    throw Error(ErrorCode::kInvalidArgument, "only relabel decisions take a label");
  }
  if (reviewer.empty()) throw Error(ErrorCode::kInvalidArgument, "reviewer is required");

  DecisionEntry e{id, decision, reviewer, utc_timestamp(), token};
  {
    std::ofstream out(dir_ / "decisions.jsonl", std::ios::binary | std::ios::app);
    out << e.to_json().dump() << "\n";
    out.flush();
    if (!out) throw Error(ErrorCode::kStoreWrite, "cannot append to decision log");
  }
  log_.push_back(e);
  if (token) tokens_[*token] = log_.size() - 1;
  with_annotation(reviewed_[it->second], ref->layer, ref->index,
                  [&](auto &a) { a.review = review_after(decision); });
  return outcome_for(id);
}

std::vector<DecisionEntry> AnnotationStore::decision_log() const {
  std::lock_guard lock(mu_);
  return log_;
}

void AnnotationStore::save_batch(const SampleBatch &batch) {
  if (!valid_batch_id(batch.batch_id)) {
    throw Error(ErrorCode::kInvalidArgument, "batch id must be [A-Za-z0-9._-]");
  }
  std::lock_guard lock(mu_);
  write_atomic(dir_ / "batches" / (batch.batch_id + ".json"), batch.to_json().dump(2) + "\n");
}

SampleBatch AnnotationStore::batch(const std::string &batch_id) const {
  const fs::path path = dir_ / "batches" / (batch_id + ".json");
  if (!valid_batch_id(batch_id) || !fs::exists(path)) {
    throw Error(ErrorCode::kUnknownBatch, "unknown batch '" + batch_id + "'");
  }
  std::ifstream in(path, std::ios::binary);
  try {
    return SampleBatch::from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::exception &e) {
    throw Error(ErrorCode::kInvalidConfig, std::string("malformed batch file: ") + e.what());
  }
}

std::vector<std::string> AnnotationStore::batch_ids() const {
  std::vector<std::string> out;
  for (const auto &entry : fs::directory_iterator(dir_ / "batches")) {
    if (entry.path().extension() == ".json") out.push_back(entry.path().stem().string());
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace synthehr
