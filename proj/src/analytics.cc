#include "synthehr/analytics.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include "embedded_lexicons.h"
#include "synthehr/error.h"
#include "synthehr/validation.h"

namespace synthehr {

namespace {

constexpr std::array<std::string_view, 4> kTableLayerNames = {"process", "modality",
                                                              "modality-requirement", "theme"};

bool requirement_leaf(std::string_view label) {
  return label == "obligation" || label == "advisability" || label == "permission";
}

// Row label of one annotation in the given table, if it belongs there.
std::optional<std::string> row_label(TableLayer layer, const std::string &leaf) {
  switch (layer) {
    case TableLayer::kProcess: return leaf;
    case TableLayer::kModality:
      return requirement_leaf(leaf) ? std::string("requirement") : leaf;
    case TableLayer::kModalityRequirement:
      if (requirement_leaf(leaf)) return leaf;
      return std::nullopt;
    case TableLayer::kTheme:
      if (leaf == "interpersonal") return std::nullopt;
      return leaf;
  }
  return std::nullopt;
}

template <typename A>
std::optional<std::string> counted_label(const A &a, bool validated_only) {
  if (!validated_only) return a.label_name();
  if (a.review.status == ReviewStatus::kAccepted || a.review.status == ReviewStatus::kRelabeled) {
    return effective_label(a);
  }
  return std::nullopt;
}

std::optional<Column> column_of(const AnnotationSet &s) {
  const auto key = parse_doc_key(s.doc_key);
  if (!key) return std::nullopt;
  return Column{key->model, key->genre};
}

// Display order: models sorted, genres by code (Care, GP, Init, Ref).
bool display_less(const Column &a, const Column &b) {
  if (a.model != b.model) return a.model < b.model;
  return genre_code(a.genre) < genre_code(b.genre);
}

std::string fmt_rate(double r) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.1f", r);
  return buf;
}

std::string fmt_ratio(double r) {
  if (std::isinf(r)) return "inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", r);
  return buf;
}

std::string fmt_num(double v) {
  char buf[32];
  if (v == std::floor(v)) {
    std::snprintf(buf, sizeof buf, "%.0f", v);
  } else {
    std::snprintf(buf, sizeof buf, "%.2f", v);
  }
  return buf;
}

// Word bytes: ASCII letters and digits, and non-ASCII bytes outside the
// U+2000..U+206F punctuation block (curly quotes, dashes).
bool word_byte_at(std::string_view s, std::size_t i) {
  const auto c = static_cast<unsigned char>(s[i]);
  if (c < 0x80) return std::isalnum(c) != 0;
  // Find the lead byte of the sequence containing i.
  std::size_t lead = i;
  while (lead > 0 && (static_cast<unsigned char>(s[lead]) & 0xC0) == 0x80 && i - lead < 3) --lead;
  if (static_cast<unsigned char>(s[lead]) == 0xE2 && lead + 1 < s.size()) {
    const auto c1 = static_cast<unsigned char>(s[lead + 1]);
    if (c1 == 0x80 || c1 == 0x81) return false;
  }
  return true;
}

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }

char fold_char(char c, bool case_sensitive) {
  return case_sensitive ? c : static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
}

}  // namespace

std::string_view table_layer_name(TableLayer l) {
  return kTableLayerNames[static_cast<std::size_t>(l)];
}

std::optional<TableLayer> parse_table_layer(std::string_view s) {
  for (std::size_t i = 0; i < kTableLayerNames.size(); ++i) {
    if (kTableLayerNames[i] == s) return static_cast<TableLayer>(i);
  }
  return std::nullopt;
}

const std::vector<std::string> &table_labels(TableLayer l) {
  static const std::array<std::vector<std::string>, 4> labels = {{
      {"material", "mental", "verbal", "relational", "existential"},
      {"likelihood", "requirement", "volition"},
      {"obligation", "advisability", "permission"},
      {"extending", "arguing", "structuring"},
  }};
  return labels[static_cast<std::size_t>(l)];
}

double local_rate(std::size_t n, std::size_t total) {
  if (total == 0) return 0.0;
  // round(1000 n / total) / 10, half up, in integers.
  const unsigned long long tenths =
      (2000ULL * n + total) / (2ULL * total);
  return static_cast<double>(tenths) / 10.0;
}

std::vector<Column> FrequencyTable::columns() const {
  std::vector<Column> out;
  for (const auto &[c, t] : totals) out.push_back(c);
  std::sort(out.begin(), out.end(), display_less);
  return out;
}

std::size_t FrequencyTable::count(const std::string &label, const Column &c) const {
  const auto it = cells.find({label, c});
  return it == cells.end() ? 0 : it->second;
}

double FrequencyTable::rate(const std::string &label, const Column &c) const {
  const auto it = totals.find(c);
  return it == totals.end() ? 0.0 : local_rate(count(label, c), it->second);
}

FrequencyTable table_from_counts(
    TableLayer layer, const std::map<std::pair<std::string, Column>, std::size_t> &counts) {
  FrequencyTable t;
  t.layer = layer;
  const auto &labels = table_labels(layer);
  for (const auto &[lc, n] : counts) {
    if (std::find(labels.begin(), labels.end(), lc.first) == labels.end()) {
      throw Error(ErrorCode::kInvalidLabel, "'" + lc.first + "' is not a row of the " +
                                                std::string(table_layer_name(layer)) + " table");
    }
    t.totals[lc.second] += n;
  }
  for (auto it = t.totals.begin(); it != t.totals.end();) {
    it = it->second == 0 ? t.totals.erase(it) : std::next(it);
  }
  for (const auto &[c, total] : t.totals) {
    for (const auto &label : labels) {
      const auto found = counts.find({label, c});
      t.cells[{label, c}] = found == counts.end() ? 0 : found->second;
    }
  }
  return t;
}

FrequencyTable frequency_table(const std::vector<AnnotationSet> &sets, TableLayer layer,
                               bool validated_only) {
  std::map<std::pair<std::string, Column>, std::size_t> counts;
  auto add = [&](const Column &c, const std::optional<std::string> &leaf) {
    if (!leaf) return;
    if (const auto row = row_label(layer, *leaf)) ++counts[{*row, c}];
  };
  for (const auto &s : sets) {
    const auto col = column_of(s);
    if (!col) continue;
    switch (layer) {
      case TableLayer::kProcess:
        for (const auto &a : s.processes) add(*col, counted_label(a, validated_only));
        break;
      case TableLayer::kModality:
      case TableLayer::kModalityRequirement:
        for (const auto &a : s.modalities) add(*col, counted_label(a, validated_only));
        break;
      case TableLayer::kTheme:
        for (const auto &a : s.themes) add(*col, counted_label(a, validated_only));
        break;
    }
  }
  FrequencyTable t = table_from_counts(layer, counts);
  if (t.totals.empty()) {
    throw Error(ErrorCode::kEmptyLayer, std::string("no ") +
                                            (validated_only ? "validated " : "") +
                                            std::string(table_layer_name(layer)) +
                                            " annotations to count");
  }
  return t;
}

std::map<Column, std::size_t> interpersonal_theme_counts(const std::vector<AnnotationSet> &sets,
                                                         bool validated_only) {
  std::map<Column, std::size_t> out;
  for (const auto &s : sets) {
    const auto col = column_of(s);
    if (!col) continue;
    for (const auto &a : s.themes) {
      if (counted_label(a, validated_only) == "interpersonal") ++out[*col];
    }
  }
  return out;
}

std::vector<Keyword> parse_keywords(std::string_view content) {
  std::vector<Keyword> out;
  std::istringstream in{std::string(content)};
  std::string line;
  while (std::getline(in, line)) {
    if (trim(line).empty() || trim(line).front() == '#') continue;
    std::vector<std::string> cols;
    std::size_t start = 0;
    while (true) {
      const std::size_t tab = line.find('\t', start);
      cols.emplace_back(trim(std::string_view(line).substr(start, tab - start)));
      if (tab == std::string::npos) break;
      start = tab + 1;
    }
    Keyword k;
    k.term = normalize_whitespace(cols[0]);
    k.display = cols.size() > 1 && !cols[1].empty() ? cols[1] : k.term;
    if (cols.size() > 2 && !cols[2].empty()) {
      if (cols[2] != "case-sensitive") {
        throw Error(ErrorCode::kInvalidConfig, "unknown keyword option '" + cols[2] + "'");
      }
      k.case_sensitive = true;
    }
    out.push_back(std::move(k));
  }
  return out;
}

const std::vector<Keyword> &builtin_keywords() {
  static const std::vector<Keyword> k = parse_keywords(embedded::kKeywords);
  return k;
}

std::vector<Keyword> load_keywords(const std::filesystem::path &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kInvalidConfig, "cannot read keyword file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  auto k = parse_keywords(ss.str());
  if (k.empty()) throw Error(ErrorCode::kInvalidConfig, "keyword file is empty");
  return k;
}

std::size_t count_occurrences(std::string_view text, const Keyword &keyword) {
  const std::string &term = keyword.term;
  if (term.empty()) return 0;
  std::size_t count = 0;
  std::size_t i = 0;
  while (i < text.size()) {
    std::size_t t = i, k = 0;
    bool ok = true;
    while (k < term.size()) {
      if (term[k] == ' ') {
        if (t >= text.size() || !is_space(text[t])) {
          ok = false;
          break;
        }
        while (t < text.size() && is_space(text[t])) ++t;
        ++k;
        continue;
      }
      if (t >= text.size() ||
          fold_char(text[t], keyword.case_sensitive) != fold_char(term[k], keyword.case_sensitive)) {
        ok = false;
        break;
      }
      ++t;
      ++k;
    }
    const bool left_ok = i == 0 || !word_byte_at(text, i - 1) || !word_byte_at(term, 0);
    const bool right_ok =
        t >= text.size() || !word_byte_at(text, t) || !word_byte_at(term, term.size() - 1);
    if (ok && left_ok && right_ok) {
      ++count;
      i = t;
    } else {
      ++i;
    }
  }
  return count;
}

std::vector<KeywordCount> keyword_counts(const std::vector<TextDoc> &docs,
                                         const std::vector<Keyword> &lexicon) {
  if (lexicon.empty()) throw Error(ErrorCode::kInvalidArgument, "keyword lexicon is empty");
  std::set<std::string> models;
  for (const auto &d : docs) models.insert(d.model);
  std::vector<KeywordCount> out;
  for (const auto &k : lexicon) {
    for (const auto &m : models) out.push_back({k.display, m, 0, 0});
  }
  std::map<std::string, std::size_t> model_index;
  for (const auto &m : models) model_index.emplace(m, model_index.size());
  for (const auto &d : docs) {
    const std::size_t mi = model_index[d.model];
    for (std::size_t ki = 0; ki < lexicon.size(); ++ki) {
      const std::size_t n = count_occurrences(d.text, lexicon[ki]);
      auto &row = out[ki * models.size() + mi];
      row.count += n;
      row.docs += n > 0;
    }
  }
  return out;
}

std::vector<KeywordCount> keyword_counts(const CorpusStore &store, const RecordFilter &filter,
                                         const std::vector<Keyword> &lexicon) {
  std::vector<DocumentRecord> recs;
  store.iterate(filter, [&](const DocumentRecord &r) {
    if (analysable(r)) recs.push_back(r);
  });
  std::vector<TextDoc> docs;
  docs.reserve(recs.size());
  for (const auto &r : recs) docs.push_back({r.key.model, r.text});
  return keyword_counts(docs, lexicon);
}

double bias_ratio(std::size_t baseline, std::size_t comparison) {
  if (baseline == 0) return comparison == 0 ? 1.0 : std::numeric_limits<double>::infinity();
  return static_cast<double>(comparison) / static_cast<double>(baseline);
}

BiasResult stratified_bias(const CorpusStore &store, const Keyword &keyword,
                           std::string_view dimension, const std::string &baseline_value,
                           const std::vector<std::string> &comparison_values,
                           const std::string &model) {
  const auto dim = parse_dimension(dimension);
  if (!dim) {
    throw Error(ErrorCode::kUnknownDimension, "unknown dimension '" + std::string(dimension) + "'");
  }
  const ParameterGrid &grid = store.grid();
  auto stratum = [&](std::vector<std::string> values) {
    if (values.empty()) throw Error(ErrorCode::kEmptySelection, "empty stratum");
    for (const auto &v : values) {
      if (!grid.find_value(*dim, v)) {
        throw Error(ErrorCode::kInvalidArgument,
                    "'" + v + "' is not a value of " + std::string(dimension_name(*dim)));
      }
    }
    StratumCount s;
    s.keyword = keyword.display;
    s.dimension = *dim;
    s.model = model;
    RecordFilter f;
    f.models = {model};
    f.parameters[*dim] = values;
    s.values = std::move(values);
    store.iterate(f, [&](const DocumentRecord &r) {
      if (!analysable(r)) return;
      ++s.population;
      const std::size_t n = count_occurrences(r.text, keyword);
      s.count += n;
      s.docs += n > 0;
    });
    if (s.population == 0) {
      throw Error(ErrorCode::kEmptySelection, "no " + model + " documents in the stratum");
    }
    return s;
  };
  BiasResult r;
  r.baseline = stratum({baseline_value});
  r.comparison = stratum(comparison_values);
  r.ratio = bias_ratio(r.baseline.count, r.comparison.count);
  return r;
}

std::string render_markdown(const ReportInputs &in) {
  std::ostringstream out;
  out << "# Corpus report\n\n";
  if (!in.provenance.empty()) out << "Manifest: `" << in.provenance << "`\n\n";

  if (!in.stats.empty()) {
    std::vector<Column> cols;
    for (const auto &[c, s] : in.stats) cols.push_back(c);
    std::sort(cols.begin(), cols.end(), display_less);
    out << "## Corpus data\n\n|  |";
    for (const auto &c : cols) out << " " << c.model << " " << genre_code(c.genre) << " |";
    out << "\n|---|";
    for (std::size_t i = 0; i < cols.size(); ++i) out << "---:|";
    out << "\n";
    auto row = [&](const char *name, auto &&cell) {
      out << "| " << name << " |";
      for (const auto &c : cols) out << " " << cell(in.stats.at(c)) << " |";
      out << "\n";
    };
    row("Texts", [](const CorpusStats &s) { return std::to_string(s.n_texts); });
    row("#Sentences", [](const CorpusStats &s) { return std::to_string(s.n_sentences); });
    row("#Words", [](const CorpusStats &s) { return std::to_string(s.n_words); });
    row("Median/Mean TL", [](const CorpusStats &s) {
      return fmt_num(s.length_median) + " / " + fmt_num(std::round(s.length_mean));
    });
    row("TL IQR", [](const CorpusStats &s) {
      return fmt_num(s.length_q1) + " - " + fmt_num(s.length_q3);
    });
    row("Max TL", [](const CorpusStats &s) { return std::to_string(s.length_max); });
    out << "\n";
  }

  static const std::map<TableLayer, std::pair<const char *, const char *>> titles = {
      {TableLayer::kProcess, {"Process types", "CLAUSES"}},
      {TableLayer::kModality, {"Modality types", "MODALS"}},
      {TableLayer::kModalityRequirement, {"Requirement subtypes", "REQUIREMENT"}},
      {TableLayer::kTheme, {"Textual Themes", "INFORMATION"}},
  };
  for (const auto &t : in.tables) {
    const auto cols = t.columns();
    const auto &[title, head] = titles.at(t.layer);
    out << "## " << title << "\n\n| " << head << " |";
    for (const auto &c : cols) out << " " << c.model << " " << genre_code(c.genre) << " N | % |";
    out << "\n|---|";
    for (std::size_t i = 0; i < cols.size(); ++i) out << "---:|---:|";
    out << "\n";
    for (const auto &label : table_labels(t.layer)) {
      out << "| " << label << " |";
      for (const auto &c : cols) out << " " << t.count(label, c) << " | " << fmt_rate(t.rate(label, c)) << " |";
      out << "\n";
    }
    out << "| **TOTAL** |";
    for (const auto &c : cols) out << " **" << t.totals.at(c) << "** | 100 |";
    out << "\n\n";
    if (t.layer == TableLayer::kTheme && !in.interpersonal.empty()) {
      out << "Interpersonal Themes (not part of the table):";
      for (const auto &c : cols) {
        const auto it = in.interpersonal.find(c);
        out << " " << c.model << " " << genre_code(c.genre) << " "
            << (it == in.interpersonal.end() ? 0 : it->second) << ";";
      }
      out << "\n\n";
    }
  }

  if (!in.keywords.empty()) {
    std::vector<std::string> models, order;
    std::map<std::pair<std::string, std::string>, std::size_t> counts;
    for (const auto &k : in.keywords) {
      if (std::find(models.begin(), models.end(), k.model) == models.end()) models.push_back(k.model);
      if (std::find(order.begin(), order.end(), k.keyword) == order.end()) order.push_back(k.keyword);
      counts[{k.keyword, k.model}] = k.count;
    }
    std::sort(models.begin(), models.end());
    // Sorted by the first model's counts, lexicon order on ties.
    std::stable_sort(order.begin(), order.end(), [&](const auto &a, const auto &b) {
      return counts[{a, models.front()}] > counts[{b, models.front()}];
    });
    out << "## Keyword mentions\n\n| Keyword |";
    for (const auto &m : models) out << " " << m << " |";
    out << "\n|---|";
    for (std::size_t i = 0; i < models.size(); ++i) out << "---:|";
    out << "\n";
    for (const auto &k : order) {
      out << "| " << k << " |";
      for (const auto &m : models) out << " " << counts[{k, m}] << " |";
      out << "\n";
    }
    out << "\n";
  }

  if (!in.audits.empty()) {
    out << "## Stratified audits\n\n"
        << "| Keyword | Model | Dimension | Baseline | n | Comparison | n | Ratio |\n"
        << "|---|---|---|---|---:|---|---:|---:|\n";
    auto join = [](const std::vector<std::string> &v) {
      std::string s;
      for (const auto &x : v) s += (s.empty() ? "" : ", ") + x;
      return s;
    };
    for (const auto &a : in.audits) {
      out << "| " << a.baseline.keyword << " | " << a.baseline.model << " | "
          << dimension_name(a.baseline.dimension) << " | " << join(a.baseline.values) << " | "
          << a.baseline.count << " | " << join(a.comparison.values) << " | " << a.comparison.count
          << " | " << fmt_ratio(a.ratio) << " |\n";
    }
    out << "\n";
  }
  return out.str();
}

std::string render_csv(const std::vector<FrequencyTable> &tables) {
  std::ostringstream out;
  out << "layer,label,genre,model,n,rate\n";
  for (const auto &t : tables) {
    for (const auto &c : t.columns()) {
      for (const auto &label : table_labels(t.layer)) {
        out << table_layer_name(t.layer) << ',' << label << ',' << genre_code(c.genre) << ','
            << c.model << ',' << t.count(label, c) << ',' << fmt_rate(t.rate(label, c)) << '\n';
      }
    }
  }
  return out.str();
}

std::vector<FrequencyTable> parse_csv(std::string_view csv) {
  std::istringstream in{std::string(csv)};
  std::string line;
  if (!std::getline(in, line) || trim(line) != "layer,label,genre,model,n,rate") {
    throw Error(ErrorCode::kInvalidArgument, "not a frequency-table CSV");
  }
  std::vector<TableLayer> order;
  std::map<TableLayer, std::map<std::pair<std::string, Column>, std::size_t>> counts;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    std::vector<std::string> f;
    std::stringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) f.push_back(cell);
    if (f.size() != 6) throw Error(ErrorCode::kInvalidArgument, "bad CSV row: " + line);
    const auto layer = parse_table_layer(f[0]);
    const auto genre = parse_genre(f[2]);
    if (!layer || !genre) throw Error(ErrorCode::kInvalidArgument, "bad CSV row: " + line);
    if (std::find(order.begin(), order.end(), *layer) == order.end()) order.push_back(*layer);
    counts[*layer][{f[1], Column{f[3], *genre}}] = std::stoull(f[4]);
  }
  std::vector<FrequencyTable> out;
  for (auto l : order) out.push_back(table_from_counts(l, counts[l]));
  return out;
}

std::string render_keywords_csv(const std::vector<KeywordCount> &counts) {
  std::ostringstream out;
  out << "keyword,model,count,docs\n";
  for (const auto &k : counts) {
    out << k.keyword << ',' << k.model << ',' << k.count << ',' << k.docs << '\n';
  }
  return out.str();
}

std::string render_audits_csv(const std::vector<BiasResult> &audits) {
  std::ostringstream out;
  out << "keyword,model,dimension,baseline,baseline_count,baseline_docs,comparison,"
         "comparison_count,comparison_docs,ratio\n";
  auto join = [](const std::vector<std::string> &v) {
    std::string s;
    for (const auto &x : v) s += (s.empty() ? "" : ";") + x;
    return s;
  };
  for (const auto &a : audits) {
    out << a.baseline.keyword << ',' << a.baseline.model << ','
        << dimension_name(a.baseline.dimension) << ',' << join(a.baseline.values) << ','
        << a.baseline.count << ',' << a.baseline.docs << ',' << join(a.comparison.values) << ','
        << a.comparison.count << ',' << a.comparison.docs << ',' << fmt_ratio(a.ratio) << '\n';
  }
  return out.str();
}

std::string file_digest(const std::filesystem::path &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return {};
  std::uint64_t h = 1469598103934665603ULL;
  char buf[8192];
  while (in.read(buf, sizeof buf) || in.gcount() > 0) {
    for (std::streamsize i = 0; i < in.gcount(); ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 1099511628211ULL;
    }
  }
  char out[40];
  std::snprintf(out, sizeof out, "fnv1a64:%016llx", static_cast<unsigned long long>(h));
  return out;
}

}  // namespace synthehr
