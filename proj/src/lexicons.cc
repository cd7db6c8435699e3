#include <fstream>
#include <sstream>

#include "embedded_lexicons.h"
#include "synthehr/error.h"
#include "synthehr/sfl.h"

namespace synthehr {

namespace {

bool is_vowel(char c) {
  return c == 'a' || c == 'e' || c == 'i' || c == 'o' || c == 'u';
}

bool ends_with(std::string_view s, std::string_view suffix) {
  return s.size() >= suffix.size() && s.substr(s.size() - suffix.size()) == suffix;
}

std::string third_singular(const std::string &lemma) {
  if (ends_with(lemma, "s") || ends_with(lemma, "x") || ends_with(lemma, "z") ||
      ends_with(lemma, "ch") || ends_with(lemma, "sh") || ends_with(lemma, "o")) {
    return lemma + "es";
  }
  if (lemma.size() > 1 && lemma.back() == 'y' && !is_vowel(lemma[lemma.size() - 2])) {
    return lemma.substr(0, lemma.size() - 1) + "ies";
  }
  return lemma + "s";
}

std::string regular_past(const std::string &lemma) {
  if (lemma.back() == 'e') return lemma + "d";
  if (lemma.size() > 1 && lemma.back() == 'y' && !is_vowel(lemma[lemma.size() - 2])) {
    return lemma.substr(0, lemma.size() - 1) + "ied";
  }
  return lemma + "ed";
}

std::string regular_ing(const std::string &lemma) {
  if (ends_with(lemma, "ie")) return lemma.substr(0, lemma.size() - 2) + "ying";
  if (lemma.back() == 'e' && !ends_with(lemma, "ee") && !ends_with(lemma, "ye") &&
      !ends_with(lemma, "oe") && lemma.size() > 2) {
    return lemma.substr(0, lemma.size() - 1) + "ing";
  }
  return lemma + "ing";
}

// Splits `content` into non-comment, non-blank lines of tab-separated fields.
std::vector<std::vector<std::string>> rows(std::string_view content) {
  std::vector<std::vector<std::string>> out;
  std::size_t pos = 0;
  while (pos <= content.size()) {
    std::size_t eol = content.find('\n', pos);
    if (eol == std::string_view::npos) eol = content.size();
    std::string_view line = trim(content.substr(pos, eol - pos));
    pos = eol + 1;
    if (line.empty() || line.front() == '#') continue;
    std::vector<std::string> fields;
    std::size_t start = 0;
    while (true) {
      const std::size_t tab = line.find('\t', start);
      fields.emplace_back(trim(line.substr(start, tab == std::string_view::npos
                                                      ? std::string_view::npos
                                                      : tab - start)));
      if (tab == std::string_view::npos) break;
      start = tab + 1;
    }
    out.push_back(std::move(fields));
  }
  return out;
}

std::vector<std::string> split_words(std::string_view phrase) {
  std::vector<std::string> words;
  std::istringstream in{std::string(phrase)};
  for (std::string w; in >> w;) words.push_back(to_lower(w));
  return words;
}

std::string read_file(const std::filesystem::path &path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kInvalidConfig, "cannot read lexicon " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

}  // namespace

void Lexicons::add_verb(std::string lemma, std::vector<ProcessType> labels,
                        std::string past, std::string participle, std::string ing) {
  const std::size_t index = verbs_.size();
  auto add = [&](const std::string &form, VerbForm kind) {
    auto &entries = forms_[form];
    for (const auto &e : entries) {
      if (e.verb == index && e.form == kind) return;
    }
    entries.push_back({index, kind});
  };
  add(lemma, VerbForm::kBase);
  if (lemma != "be" && lemma != "have") {
    add(third_singular(lemma), VerbForm::kThirdSingular);
    const std::string p = past.empty() ? regular_past(lemma) : past;
    const std::string pp = participle.empty() ? regular_past(lemma) : participle;
    if (p == pp) {
      add(p, VerbForm::kPastOrParticiple);
    } else {
      add(p, VerbForm::kPast);
      add(pp, VerbForm::kParticiple);
    }
    add(ing.empty() ? regular_ing(lemma) : ing, VerbForm::kIng);
  }
  verbs_.push_back({std::move(lemma), std::move(labels)});
}

const std::vector<Lexicons::FormEntry> *Lexicons::lookup_form(std::string_view form) const {
  const auto it = forms_.find(std::string(form));
  return it == forms_.end() ? nullptr : &it->second;
}

std::optional<ProcessType> Lexicons::phrasal(std::string_view lemma,
                                             std::string_view particle) const {
  const auto it = phrasal_.find({std::string(lemma), std::string(particle)});
  if (it == phrasal_.end()) return std::nullopt;
  return it->second;
}

std::optional<std::string_view> Lexicons::agent(std::string_view head) const {
  const auto it = agents_.find(std::string(head));
  if (it == agents_.end()) return std::nullopt;
  return std::string_view(it->second);
}

Lexicons Lexicons::parse(std::string_view verbs, std::string_view phrasal,
                         std::string_view modality, std::string_view themes,
                         std::string_view agents, std::string_view abbreviations) {
  Lexicons lex;
  auto parse_labels = [](const std::string &field) {
    std::vector<ProcessType> labels;
    std::size_t start = 0;
    while (start <= field.size()) {
      std::size_t comma = field.find(',', start);
      if (comma == std::string::npos) comma = field.size();
      const auto label = parse_process_type(trim(std::string_view(field).substr(start, comma - start)));
      if (!label) throw Error(ErrorCode::kInvalidConfig, "bad process label '" + field + "'");
      labels.push_back(*label);
      start = comma + 1;
    }
    return labels;
  };
  auto column = [](const std::vector<std::string> &row, std::size_t i) {
    return i < row.size() && row[i] != "-" ? row[i] : std::string();
  };

  for (const auto &row : rows(verbs)) {
    if (row.size() < 2) throw Error(ErrorCode::kInvalidConfig, "verb row needs a label");
    lex.add_verb(to_lower(row[0]), parse_labels(row[1]), column(row, 2), column(row, 3),
                 column(row, 4));
  }
  for (const auto &row : rows(phrasal)) {
    const auto words = split_words(row.at(0));
    const auto label = parse_process_type(row.at(1));
    if (words.size() != 2 || !label) {
      throw Error(ErrorCode::kInvalidConfig, "bad phrasal verb row '" + row[0] + "'");
    }
    lex.phrasal_[{words[0], words[1]}] = *label;
  }
  for (const auto &row : rows(modality)) {
    if (row.size() < 2) throw Error(ErrorCode::kInvalidConfig, "modality row needs a label");
    if (row[1] != "none" && !valid_label(Layer::kModality, row[1])) {
      throw Error(ErrorCode::kInvalidConfig, "bad modality label '" + row[1] + "'");
    }
    lex.modality_.push_back({split_words(row[0]), row[1], row.size() > 2 ? row[2] : ""});
  }
  for (const auto &row : rows(themes)) {
    if (row.size() < 2 || !valid_label(Layer::kTheme, row[1])) {
      throw Error(ErrorCode::kInvalidConfig, "bad theme row '" + row.at(0) + "'");
    }
    lex.themes_.push_back({split_words(row[0]), row[1], ""});
  }
  for (const auto &row : rows(agents)) {
    if (row.size() < 2) throw Error(ErrorCode::kInvalidConfig, "agent row needs a role");
    lex.agents_[to_lower(row[0])] = row[1];
  }
  for (const auto &row : rows(abbreviations)) lex.abbreviations_.insert(to_lower(row.at(0)));
  return lex;
}

const Lexicons &Lexicons::builtin() {
  static const Lexicons lex =
      parse(embedded::kVerbs, embedded::kPhrasalVerbs, embedded::kModality,
            embedded::kThemes, embedded::kAgents, embedded::kAbbreviations);
  return lex;
}

Lexicons Lexicons::load_directory(const std::filesystem::path &dir) {
  return parse(read_file(dir / "verbs.tsv"), read_file(dir / "phrasal_verbs.tsv"),
               read_file(dir / "modality.tsv"), read_file(dir / "themes.tsv"),
               read_file(dir / "agents.tsv"), read_file(dir / "abbreviations.txt"));
}

}  // namespace synthehr
