#ifndef SYNTHEHR_ANALYTICS_H_
#define SYNTHEHR_ANALYTICS_H_

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "synthehr/corpus_store.h"
#include "synthehr/sfl.h"

namespace synthehr {

enum class TableLayer { kProcess, kModality, kModalityRequirement, kTheme };

std::string_view table_layer_name(TableLayer l);
std::optional<TableLayer> parse_table_layer(std::string_view s);
// Row labels in display order. kTheme holds the textual subtypes only;
// interpersonal Themes are counted by interpersonal_theme_counts().
const std::vector<std::string> &table_labels(TableLayer l);

struct Column {
  std::string model;
  GenreId genre = GenreId::kInit;
  auto operator<=>(const Column &) const = default;
  bool operator==(const Column &) const = default;
};

// Percent with one decimal, rounded half up from the exact fraction.
double local_rate(std::size_t n, std::size_t total);

struct FrequencyTable {
  TableLayer layer = TableLayer::kProcess;
  // Every label of the layer has a cell in every column, zeros included.
  std::map<std::pair<std::string, Column>, std::size_t> cells;
  std::map<Column, std::size_t> totals;

  std::vector<Column> columns() const;
  std::size_t count(const std::string &label, const Column &c) const;
  double rate(const std::string &label, const Column &c) const;
  bool operator==(const FrequencyTable &) const = default;
};

// Builds a table from explicit counts; columns with a zero total are dropped.
FrequencyTable table_from_counts(TableLayer layer,
                                 const std::map<std::pair<std::string, Column>, std::size_t> &counts);

// Counts annotations by (label, column); the column comes from the set's
// document key. With validated_only, only accepted and relabeled annotations
// count, under their effective label. Throws kEmptyLayer if nothing counts.
FrequencyTable frequency_table(const std::vector<AnnotationSet> &sets, TableLayer layer,
                               bool validated_only);

std::map<Column, std::size_t> interpersonal_theme_counts(const std::vector<AnnotationSet> &sets,
                                                         bool validated_only);

struct Keyword {
  std::string term;     // match pattern; spaces match any whitespace run
  std::string display;  // table label
  bool case_sensitive = false;
};

// Parses the keyword file format: "term[<TAB>display[<TAB>case-sensitive]]",
// '#' comments.
std::vector<Keyword> parse_keywords(std::string_view content);
const std::vector<Keyword> &builtin_keywords();
std::vector<Keyword> load_keywords(const std::filesystem::path &path);

// Non-overlapping whole-word occurrences. Word characters are letters and
// digits, so hyphens, parentheses and punctuation are boundaries.
std::size_t count_occurrences(std::string_view text, const Keyword &keyword);

struct KeywordCount {
  std::string keyword;  // display label
  std::string model;
  std::size_t count = 0;  // occurrences
  std::size_t docs = 0;   // documents with at least one occurrence
  bool operator==(const KeywordCount &) const = default;
};

struct TextDoc {
  std::string model;
  std::string_view text;
};

// One row per (keyword, model), keywords in lexicon order, models sorted.
std::vector<KeywordCount> keyword_counts(const std::vector<TextDoc> &docs,
                                         const std::vector<Keyword> &lexicon);
// Over analysable store records matching `filter`.
std::vector<KeywordCount> keyword_counts(const CorpusStore &store, const RecordFilter &filter,
                                         const std::vector<Keyword> &lexicon);

struct StratumCount {
  std::string keyword;
  Dimension dimension = Dimension::kAge;
  std::vector<std::string> values;
  std::string model;
  std::size_t count = 0;
  std::size_t docs = 0;
  std::size_t population = 0;  // documents in the stratum
};

struct BiasResult {
  StratumCount baseline;
  StratumCount comparison;
  double ratio = 1.0;  // comparison / baseline; +inf when only baseline is 0
};

double bias_ratio(std::size_t baseline, std::size_t comparison);

// Throws kUnknownDimension for a name that is not a grid dimension,
// kInvalidArgument for unknown values, kEmptySelection for an empty stratum.
BiasResult stratified_bias(const CorpusStore &store, const Keyword &keyword,
                           std::string_view dimension, const std::string &baseline_value,
                           const std::vector<std::string> &comparison_values,
                           const std::string &model);

struct ReportInputs {
  std::vector<FrequencyTable> tables;
  std::map<Column, std::size_t> interpersonal;  // shown under the theme table
  std::map<Column, CorpusStats> stats;
  std::vector<KeywordCount> keywords;
  std::vector<BiasResult> audits;
  std::string provenance;  // e.g. manifest digest
};

std::string render_markdown(const ReportInputs &in);
// One row per cell: layer,label,genre,model,n,rate
std::string render_csv(const std::vector<FrequencyTable> &tables);
std::vector<FrequencyTable> parse_csv(std::string_view csv);
std::string render_keywords_csv(const std::vector<KeywordCount> &counts);
std::string render_audits_csv(const std::vector<BiasResult> &audits);

// 64-bit FNV-1a of a file's bytes, as hex.
std::string file_digest(const std::filesystem::path &path);

}  // namespace synthehr

#endif  // SYNTHEHR_ANALYTICS_H_
