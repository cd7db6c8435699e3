#include "synthehr/corpus_store.h"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <numeric>

#include "synthehr/error.h"
#include "synthehr/sfl.h"

namespace synthehr {

namespace fs = std::filesystem;

namespace {

constexpr std::array<std::string_view, 4> kFlagNames = {"refusal", "disclaimer", "repetition",
                                                        "empty"};

bool valid_model_id(std::string_view id) {
  if (id.empty()) return false;
  return std::all_of(id.begin(), id.end(), [](char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || c == '.';
  });
}

std::string shard_path(const DocKey &key) {
  return "shards/" + key.model + "/" + std::string(genre_code(key.genre)) + ".jsonl";
}

}  // namespace

std::string_view quality_flag_name(QualityFlag f) {
  return kFlagNames[static_cast<std::size_t>(f)];
}

std::optional<QualityFlag> parse_quality_flag(std::string_view s) {
  for (std::size_t i = 0; i < kFlagNames.size(); ++i) {
    if (kFlagNames[i] == s) return static_cast<QualityFlag>(i);
  }
  return std::nullopt;
}

std::string to_string(const DocKey &key) {
  return key.model + ":" + std::string(genre_code(key.genre)) + ":" +
         std::to_string(key.story_id);
}

std::optional<DocKey> parse_doc_key(std::string_view s) {
  const std::size_t a = s.find(':');
  if (a == std::string_view::npos) return std::nullopt;
  const std::size_t b = s.find(':', a + 1);
  if (b == std::string_view::npos) return std::nullopt;
  DocKey key;
  key.model = std::string(s.substr(0, a));
  if (!valid_model_id(key.model)) return std::nullopt;
  const auto genre = parse_genre(s.substr(a + 1, b - a - 1));
  if (!genre) return std::nullopt;
  key.genre = *genre;
  const std::string_view digits = s.substr(b + 1);
  if (digits.empty()) return std::nullopt;
  const auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), key.story_id);
  if (ec != std::errc() || ptr != digits.data() + digits.size()) return std::nullopt;
  return key;
}

std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

nlohmann::json to_json(const DocumentRecord &r, const ParameterGrid &grid) {
  nlohmann::json params = nlohmann::json::object();
  for (auto d : all_dimensions()) {
    params[std::string(dimension_name(d))] = grid.value(r.parameters, d).key;
  }
  nlohmann::json flags = nlohmann::json::array();
  for (auto f : r.quality_flags) flags.push_back(quality_flag_name(f));
  return {{"model", r.key.model},
          {"genre", genre_code(r.key.genre)},
          {"story_id", r.key.story_id},
          {"parameters", std::move(params)},
          {"text", r.text},
          {"quality_flags", std::move(flags)},
          {"latency_ms", r.latency_ms},
          {"created_at", r.created_at}};
}

DocumentRecord record_from_json(const nlohmann::json &j, const ParameterGrid &grid) {
  DocumentRecord r;
  try {
    r.key.model = j.at("model").get<std::string>();
    const auto genre = parse_genre(j.at("genre").get<std::string>());
    if (!genre) throw Error(ErrorCode::kInvalidConfig, "unknown genre in record");
    r.key.genre = *genre;
    r.key.story_id = j.at("story_id").get<StoryId>();
    std::array<std::uint16_t, kDimensionCount> coords{};
    const auto &params = j.at("parameters");
    for (auto d : all_dimensions()) {
      const auto key = params.at(std::string(dimension_name(d))).get<std::string>();
      const auto index = grid.find_value(d, key);
      if (!index) {
        throw Error(ErrorCode::kInvalidConfig,
                    "record parameter '" + key + "' is not in the current grid");
      }
      coords[static_cast<std::size_t>(d)] = *index;
    }
    if (grid.index_of(coords) != r.key.story_id) {
      throw Error(ErrorCode::kInvalidConfig,
                  "record " + to_string(r.key) + " parameters do not match its story id");
    }
    r.parameters = grid.at(r.key.story_id);
    r.text = j.at("text").get<std::string>();
    for (const auto &f : j.at("quality_flags")) {
      const auto flag = parse_quality_flag(f.get<std::string>());
      if (!flag) throw Error(ErrorCode::kInvalidConfig, "unknown quality flag");
      r.quality_flags.insert(*flag);
    }
    r.latency_ms = j.at("latency_ms").get<double>();
    r.created_at = j.at("created_at").get<std::string>();
  } catch (const nlohmann::json::exception &e) {
    throw Error(ErrorCode::kInvalidConfig, std::string("malformed record: ") + e.what());
  }
  return r;
}

bool RecordFilter::matches(const DocKey &key, const ParameterGrid &grid) const {
  if (!models.empty() && std::find(models.begin(), models.end(), key.model) == models.end()) {
    return false;
  }
  if (!genres.empty() && std::find(genres.begin(), genres.end(), key.genre) == genres.end()) {
    return false;
  }
  if (parameters.empty()) return true;
  if (key.story_id >= grid.size()) return false;
  const StoryParameters p = grid.at(key.story_id);
  for (const auto &[dim, allowed] : parameters) {
    const auto &value = grid.value(p, dim).key;
    if (std::find(allowed.begin(), allowed.end(), value) == allowed.end()) return false;
  }
  return true;
}

void RecordFilter::add_assignment(std::string_view assignment, const ParameterGrid &grid) {
  const std::size_t eq = assignment.find('=');
  const auto dim = parse_dimension(assignment.substr(0, eq));
  if (!dim) {
    throw Error(ErrorCode::kUnknownDimension,
                "unknown dimension '" + std::string(assignment.substr(0, eq)) + "'");
  }
  if (eq == std::string_view::npos) {
    throw Error(ErrorCode::kInvalidArgument, "filter needs dimension=value[,value]");
  }
  auto &allowed = parameters[*dim];
  std::string_view rest = assignment.substr(eq + 1);
  while (true) {
    const std::size_t comma = rest.find(',');
    const std::string value(trim(rest.substr(0, comma)));
    if (!grid.find_value(*dim, value)) {
      throw Error(ErrorCode::kInvalidArgument, "'" + value + "' is not a value of " +
                                                   std::string(dimension_name(*dim)));
    }
    allowed.push_back(value);
    if (comma == std::string_view::npos) break;
    rest.remove_prefix(comma + 1);
  }
}

nlohmann::json CorpusStats::to_json() const {
  return {{"n_texts", n_texts},           {"n_sentences", n_sentences},
          {"n_words", n_words},           {"length_median", length_median},
          {"length_mean", length_mean},   {"length_q1", length_q1},
          {"length_q3", length_q3},       {"length_min", length_min},
          {"length_max", length_max}};
}

double quantile_linear(const std::vector<std::size_t> &sorted, double p) {
  if (sorted.empty()) throw Error(ErrorCode::kEmptySelection, "quantile of empty data");
  const double pos = p * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return static_cast<double>(sorted[lo]) +
         frac * (static_cast<double>(sorted[hi]) - static_cast<double>(sorted[lo]));
}

CorpusStats compute_stats(const std::vector<std::string_view> &texts, const Annotator &annotator) {
  if (texts.empty()) throw Error(ErrorCode::kEmptySelection, "no texts match the selection");
  CorpusStats s;
  std::vector<std::size_t> lengths;
  lengths.reserve(texts.size());
  for (auto text : texts) {
    const std::size_t words = count_words(text);
    lengths.push_back(words);
    s.n_words += words;
    for (const auto &sent : annotator.segment_sentences(text)) {
      if (sent.kind != SentenceKind::kHeading) ++s.n_sentences;
    }
  }
  std::sort(lengths.begin(), lengths.end());
  s.n_texts = texts.size();
  s.length_min = lengths.front();
  s.length_max = lengths.back();
  s.length_mean = static_cast<double>(s.n_words) / static_cast<double>(s.n_texts);
  s.length_q1 = quantile_linear(lengths, 0.25);
  s.length_median = quantile_linear(lengths, 0.5);
  s.length_q3 = quantile_linear(lengths, 0.75);
  return s;
}

CorpusStore::CorpusStore(fs::path root, ParameterGrid grid)
    : root_(std::move(root)), grid_(std::move(grid)) {}

CorpusStore::~CorpusStore() {
  try {
    write_index();
  } catch (...) {
  }
}

std::unique_ptr<CorpusStore> CorpusStore::open(const fs::path &root, const ParameterGrid &grid) {
  std::error_code ec;
  fs::create_directories(root / "shards", ec);
  if (ec) throw Error(ErrorCode::kStoreWrite, "cannot create store at " + root.string());
  std::unique_ptr<CorpusStore> store(new CorpusStore(root, grid));
  std::vector<fs::path> files;
  for (const auto &entry : fs::recursive_directory_iterator(root / "shards")) {
    if (entry.is_regular_file() && entry.path().extension() == ".jsonl") {
      files.push_back(entry.path());
    }
  }
  std::sort(files.begin(), files.end());
  for (const auto &f : files) store->load_shard(f);
  return store;
}

void CorpusStore::load_shard(const fs::path &file) {
  const std::string rel = fs::relative(file, root_).generic_string();
  std::ifstream in(file, std::ios::binary);
  std::uint64_t offset = 0;
  std::uint64_t good_end = 0;
  std::string line;
  while (std::getline(in, line)) {
    const bool terminated = !in.eof();
    const std::uint64_t length = line.size();
    if (!terminated) break;  // torn final write; truncated below
    if (!line.empty()) {
      DocumentRecord r = record_from_json(nlohmann::json::parse(line), grid_);
      if (rel != shard_path(r.key)) {
        throw Error(ErrorCode::kInvalidConfig, "record " + to_string(r.key) + " in wrong shard");
      }
      if (!index_.emplace(r.key, Location{rel, offset, length}).second) {
        throw Error(ErrorCode::kDuplicateKey, "duplicate record " + to_string(r.key));
      }
    }
    offset += length + 1;
    good_end = offset;
  }
  in.close();
  if (fs::file_size(file) != good_end) fs::resize_file(file, good_end);
  shard_sizes_[rel] = good_end;
}

void CorpusStore::put(const DocumentRecord &record) {
  if (!valid_model_id(record.key.model)) {
    throw Error(ErrorCode::kInvalidArgument, "invalid model id '" + record.key.model + "'");
  }
  if (record.key.story_id >= grid_.size() || grid_.at(record.key.story_id) != record.parameters) {
    throw Error(ErrorCode::kInvalidArgument,
                "record parameters do not match story id " + std::to_string(record.key.story_id));
  }
  const std::string line = to_json(record, grid_).dump() + "\n";
  const std::string rel = shard_path(record.key);
  std::lock_guard lock(mu_);
  if (index_.count(record.key) > 0) {
    throw Error(ErrorCode::kDuplicateKey, "document " + to_string(record.key) + " already stored");
  }
  const fs::path file = root_ / rel;
  std::error_code ec;
  fs::create_directories(file.parent_path(), ec);
  std::ofstream out(file, std::ios::binary | std::ios::app);
  if (!out) throw Error(ErrorCode::kStoreWrite, "cannot open shard " + file.string());
  out.write(line.data(), static_cast<std::streamsize>(line.size()));
  out.flush();
  if (!out) throw Error(ErrorCode::kStoreWrite, "write failed for shard " + file.string());
  std::uint64_t &size = shard_sizes_[rel];
  index_.emplace(record.key, Location{rel, size, line.size() - 1});
  size += line.size();
}

DocumentRecord CorpusStore::read_at(const Location &loc) const {
  std::ifstream in(root_ / loc.shard, std::ios::binary);
  in.seekg(static_cast<std::streamoff>(loc.offset));
  std::string line(loc.length, '\0');
  in.read(line.data(), static_cast<std::streamsize>(loc.length));
  if (!in) throw Error(ErrorCode::kNotFound, "shard " + loc.shard + " is shorter than its index");
  return record_from_json(nlohmann::json::parse(line), grid_);
}

DocumentRecord CorpusStore::get(const DocKey &key) const {
  Location loc;
  {
    std::lock_guard lock(mu_);
    const auto it = index_.find(key);
    if (it == index_.end()) throw Error(ErrorCode::kNotFound, "no document " + to_string(key));
    loc = it->second;
  }
  return read_at(loc);
}

bool CorpusStore::contains(const DocKey &key) const {
  std::lock_guard lock(mu_);
  return index_.count(key) > 0;
}

std::size_t CorpusStore::size() const {
  std::lock_guard lock(mu_);
  return index_.size();
}

std::vector<DocKey> CorpusStore::keys(const RecordFilter &filter) const {
  std::lock_guard lock(mu_);
  std::vector<DocKey> out;
  for (const auto &[key, loc] : index_) {
    if (filter.matches(key, grid_)) out.push_back(key);
  }
  return out;
}

void CorpusStore::iterate(const RecordFilter &filter,
                          const std::function<void(const DocumentRecord &)> &visit) const {
  for (const auto &key : keys(filter)) visit(get(key));
}

std::vector<DocumentRecord> CorpusStore::records(const RecordFilter &filter) const {
  std::vector<DocumentRecord> out;
  iterate(filter, [&](const DocumentRecord &r) { out.push_back(r); });
  return out;
}

CorpusStats CorpusStore::stats(const RecordFilter &filter, const Annotator &annotator) const {
  const auto recs = records(filter);
  std::vector<std::string_view> texts;
  texts.reserve(recs.size());
  for (const auto &r : recs) texts.push_back(r.text);
  return compute_stats(texts, annotator);
}

std::vector<std::string> CorpusStore::shard_paths() const {
  std::lock_guard lock(mu_);
  std::vector<std::string> out;
  for (const auto &[path, size] : shard_sizes_) out.push_back(path);
  return out;
}

void CorpusStore::write_index() const {
  nlohmann::json shards = nlohmann::json::array();
  {
    std::lock_guard lock(mu_);
    std::map<std::string, std::size_t> counts;
    for (const auto &[key, loc] : index_) ++counts[loc.shard];
    for (const auto &[path, size] : shard_sizes_) {
      shards.push_back({{"path", path}, {"records", counts[path]}, {"bytes", size}});
    }
  }
  const nlohmann::json index = {{"shards", std::move(shards)}, {"grid", grid_.describe()}};
  const fs::path tmp = root_ / "index.json.tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out << index.dump(2) << "\n";
    if (!out) throw Error(ErrorCode::kStoreWrite, "cannot write index");
  }
  fs::rename(tmp, root_ / "index.json");
}

}  // namespace synthehr
