#include <algorithm>
#include <array>

#include "synthehr/sfl.h"

namespace synthehr {

namespace {

using VerbForm = Lexicons::VerbForm;

bool in(std::string_view w, std::initializer_list<std::string_view> set) {
  return std::find(set.begin(), set.end(), w) != set.end();
}

bool ends_with(std::string_view s, std::string_view suffix) {
  return s.size() >= suffix.size() && s.substr(s.size() - suffix.size()) == suffix;
}

bool is_modal(std::string_view w) {
  return in(w, {"can", "could", "may", "might", "must", "shall", "should", "will", "would", "ought"});
}
bool is_finite_be(std::string_view w) { return in(w, {"am", "is", "are", "was", "were"}); }
bool is_be(std::string_view w) { return is_finite_be(w) || in(w, {"be", "been", "being"}); }
bool is_finite_have(std::string_view w) { return in(w, {"have", "has", "had"}); }
bool is_do(std::string_view w) { return in(w, {"do", "does", "did"}); }
bool is_aux(std::string_view w) {
  return is_modal(w) || is_be(w) || is_finite_have(w) || is_do(w);
}

bool is_determiner(std::string_view w) {
  return in(w, {"the", "a", "an", "this", "these", "those", "her", "his", "their", "my",
                "our", "your", "its", "any", "some", "no", "each", "every", "all", "both",
                "such", "that"});
}

bool is_subject_pronoun(std::string_view w) {
  return in(w, {"i", "you", "he", "she", "it", "we", "they", "there", "this", "one"});
}

bool is_plural_pronoun(std::string_view w) { return in(w, {"i", "we", "you", "they"}); }

bool is_relative(std::string_view w) { return in(w, {"who", "which", "that"}); }

bool is_preposition(std::string_view w) {
  return in(w, {"by", "with", "at", "for", "under", "in", "on", "from", "as", "to",
                "through", "during", "within", "over", "into", "about", "of", "upon",
                "after", "before", "without", "between", "against", "towards", "despite"});
}

bool is_boundary_word(std::string_view w) {
  return in(w, {"and", "or", "but", "because", "although", "though", "while", "whereas",
                "if", "unless", "when", "whenever", "since", "so", "that", "which", "who",
                "whom", "whose", "where"});
}

bool is_boundary_punct(std::string_view w) {
  return in(w, {",", ";", ":", "(", ")", "\"", "“", "”", "–", "—"});
}

bool is_adverb(std::string_view w) {
  if (in(w, {"not", "never", "also", "currently", "previously", "further", "still",
             "already", "always", "often", "recently", "now", "then", "just", "only",
             "even", "again", "otherwise", "later", "soon", "well", "better", "sometimes",
             "perhaps", "ever", "very"})) {
    return true;
  }
  return w.size() > 4 && ends_with(w, "ly") &&
         !in(w, {"family", "daily", "early", "reply", "apply", "supply", "elderly",
                 "lonely", "friendly", "likely", "unlikely", "italy", "july", "rally",
                 "monthly", "weekly", "yearly", "nightly", "holy", "ugly"});
}

bool has_adjective_suffix(std::string_view w) {
  for (std::string_view s : {"ive", "al", "ous", "ful", "ic", "able", "ible", "ent", "ant",
                             "ary", "less"}) {
    if (w.size() > s.size() + 2 && ends_with(w, s)) return true;
  }
  return false;
}

// Past forms that usually modify a noun when they follow a coordinator.
bool is_participial_adjective(std::string_view w) {
  return in(w, {"increased", "decreased", "elevated", "inflated", "documented",
                "supervised", "continued", "scheduled", "validated", "recommended",
                "structured", "untreated", "repeated", "attached", "reduced",
                "improved", "impaired", "prescribed", "established", "limited",
                "depressed", "elevated", "marked", "planned"});
}

bool is_closed_class(std::string_view w) {
  return is_determiner(w) || is_preposition(w) || is_boundary_word(w) || is_aux(w) ||
         is_adverb(w) || in(w, {"to", "not", "nor", "than", "please", "'s", "me", "him",
                                "us", "them", "herself", "himself", "themselves"});
}

struct Group {
  std::size_t finite = 0;  // token index of the finite element
  std::size_t head = 0;    // token index of the lexical or copular head
  std::size_t last = 0;    // last token index covered by the group
  std::string lemma;
  bool lexical = false;    // finite element is the lexical verb itself
  VerbForm form = VerbForm::kBase;
};

class SentenceParser {
 public:
  SentenceParser(const Lexicons &lex, std::vector<Token> tokens, std::size_t start)
      : lex_(lex), t_(std::move(tokens)), start_(start) {}

  const std::vector<Token> &tokens() const { return t_; }
  std::size_t start() const { return start_; }

  bool word(std::size_t i) const { return i < t_.size() && t_[i].is_word(); }
  const std::string &norm(std::size_t i) const {
    static const std::string empty;
    return i < t_.size() ? t_[i].norm : empty;
  }

  std::optional<std::string> lemma_of(std::size_t i,
                                      std::initializer_list<VerbForm> forms) const {
    if (!word(i)) return std::nullopt;
    const auto *entries = lex_.lookup_form(t_[i].norm);
    if (entries == nullptr) return std::nullopt;
    for (VerbForm f : forms) {
      for (const auto &e : *entries) {
        if (e.form == f) return lex_.verbs()[e.verb].lemma;
      }
    }
    return std::nullopt;
  }

  bool any_verb_form(std::size_t i) const {
    return lemma_of(i, {VerbForm::kBase, VerbForm::kThirdSingular, VerbForm::kPast,
                        VerbForm::kParticiple, VerbForm::kPastOrParticiple,
                        VerbForm::kIng})
        .has_value();
  }

  // Index of the nearest token left of `i` that is not an adverb, or npos.
  std::size_t left_non_adverb(std::size_t i) const {
    while (i > start_) {
      --i;
      if (!(word(i) && is_adverb(t_[i].norm))) return i;
    }
    return npos;
  }

  bool noun_ish(std::size_t i) const {
    if (i == npos || !word(i)) return false;
    const std::string &w = t_[i].norm;
    if (is_closed_class(w)) return false;
    if (i > start_ && norm(i - 1) == "to" && any_verb_form(i)) return false;
    if (lemma_of(i, {VerbForm::kIng})) return false;
    return true;
  }

  bool pronoun_subject(std::size_t i) const {
    return i != npos && word(i) && (is_subject_pronoun(t_[i].norm) || is_relative(t_[i].norm));
  }

  // Parses an auxiliary-led verb group starting at `i`.
  Group parse_aux_group(std::size_t i) const {
    Group g;
    g.finite = g.head = g.last = i;
    enum class Kind { kModal, kDo, kHave, kBe } kind;
    auto classify = [](std::string_view w) {
      if (is_modal(w)) return Kind::kModal;
      if (is_do(w)) return Kind::kDo;
      if (is_finite_have(w) || w == "have") return Kind::kHave;
      return Kind::kBe;
    };
    kind = classify(t_[i].norm);
    g.lemma = kind == Kind::kHave ? "have" : kind == Kind::kBe ? "be" : t_[i].norm;
    std::size_t j = i + 1;
    while (true) {
      while (word(j) && is_adverb(t_[j].norm)) ++j;
      if (!word(j)) return g;
      const std::string &w = t_[j].norm;
      if (kind == Kind::kModal || kind == Kind::kDo) {
        if (w == "be") { kind = Kind::kBe; g.head = g.last = j; g.lemma = "be"; ++j; continue; }
        if (w == "have") { kind = Kind::kHave; g.head = g.last = j; g.lemma = "have"; ++j; continue; }
        if (is_closed_class(w) && !lemma_of(j, {VerbForm::kBase})) return g;
        g.head = g.last = j;
        g.lemma = lemma_of(j, {VerbForm::kBase}).value_or(w);
        return g;
      }
      if (kind == Kind::kHave) {
        if (w == "been") { kind = Kind::kBe; g.head = g.last = j; g.lemma = "be"; ++j; continue; }
        if (auto lemma = lemma_of(j, {VerbForm::kParticiple, VerbForm::kPastOrParticiple})) {
          g.head = g.last = j;
          g.lemma = *lemma;
          return g;
        }
        if (!is_closed_class(w) && (ends_with(w, "ed") || ends_with(w, "en")) &&
            !lex_.lookup_form(w)) {
          g.head = g.last = j;
          g.lemma = w;
        }
        return g;
      }
      // be
      if (w == "being" || w == "been") { g.head = g.last = j; ++j; continue; }
      if (auto lemma = lemma_of(j, {VerbForm::kParticiple, VerbForm::kPastOrParticiple,
                                    VerbForm::kIng})) {
        g.head = g.last = j;
        g.lemma = *lemma;
      }
      return g;
    }
  }

  bool sentence_initial(std::size_t i) const {
    std::size_t k = start_;
    while (k < i && (!word(k) || norm(k) == "please")) ++k;
    return k == i;
  }

  std::vector<Group> find_groups() const {
    std::vector<Group> groups;
    std::optional<VerbForm> last_lexical;
    std::optional<std::size_t> last_head;
    for (std::size_t i = start_; i < t_.size(); ++i) {
      if (!word(i)) continue;
      const std::string &w = t_[i].norm;
      const std::size_t prev = i > start_ ? i - 1 : npos;
      const bool after_to = prev != npos && norm(prev) == "to";

      const bool aux_start = (is_modal(w) || is_finite_be(w) || is_finite_have(w) ||
                              is_do(w)) &&
                             !after_to;
      if (aux_start) {
        Group g = parse_aux_group(i);
        last_lexical.reset();
        last_head = g.head;
        i = g.last;
        groups.push_back(std::move(g));
        continue;
      }
      if (after_to) continue;

      const std::size_t left = left_non_adverb(i);
      const std::string &next = norm(i + 1);
      const bool next_word = word(i + 1);
      const bool coord = prev != npos && (norm(prev) == "and" || norm(prev) == "or" ||
                                          norm(prev) == ",");
      const bool v_and_v = coord && last_head && prev > start_ && *last_head == prev - 1;

      auto coordinated = [&](VerbForm f) {
        if (!coord || v_and_v || !last_lexical) return false;
        const bool same = *last_lexical == f ||
                          ((*last_lexical == VerbForm::kPast ||
                            *last_lexical == VerbForm::kPastOrParticiple) &&
                           (f == VerbForm::kPast || f == VerbForm::kPastOrParticiple));
        return same && next_word && !in(next, {"of", "and", "or"});
      };

      std::optional<Group> found;
      auto accept = [&](const std::string &lemma, VerbForm f) {
        Group g;
        g.finite = g.head = g.last = i;
        g.lemma = lemma;
        g.lexical = true;
        g.form = f;
        found = g;
      };

      if (auto lemma = lemma_of(i, {VerbForm::kThirdSingular})) {
        const bool subject = pronoun_subject(left) || noun_ish(left);
        if ((subject && next_word && !in(next, {"of", "and", "or"})) ||
            coordinated(VerbForm::kThirdSingular)) {
          accept(*lemma, VerbForm::kThirdSingular);
        }
      }
      if (!found) {
        if (auto lemma = lemma_of(i, {VerbForm::kPast, VerbForm::kPastOrParticiple})) {
          bool finite = false;
          if (pronoun_subject(left)) {
            finite = true;
          } else if (noun_ish(left) && !coord) {
            const bool to_infinitive = next == "to" && lemma_of(i + 2, {VerbForm::kBase});
            finite = !is_preposition(next) || to_infinitive;
          } else if (coordinated(VerbForm::kPast) && !is_participial_adjective(w)) {
            finite = is_determiner(next) || is_subject_pronoun(next) ||
                     has_adjective_suffix(next);
          }
          if (finite) accept(*lemma, VerbForm::kPast);
        }
      }
      if (!found) {
        if (auto lemma = lemma_of(i, {VerbForm::kBase})) {
          bool finite = false;
          if (left != npos && word(left) &&
              (is_plural_pronoun(norm(left)) || is_relative(norm(left)))) {
            finite = true;
          } else if (noun_ish(left) && !coord) {
            finite = (ends_with(norm(left), "s") && next_word && !is_preposition(next)) ||
                     is_determiner(next) || next == ":" || has_adjective_suffix(next);
          } else if (sentence_initial(i)) {
            finite = !(next_word && (is_aux(next) || is_preposition(next) || next == "'s"));
          } else if (coordinated(VerbForm::kBase)) {
            finite = true;
          }
          if (finite) accept(*lemma, VerbForm::kBase);
        }
      }
      if (found) {
        last_lexical = found->form;
        last_head = found->head;
        groups.push_back(std::move(*found));
      }
    }
    return groups;
  }

  static constexpr std::size_t npos = static_cast<std::size_t>(-1);

 private:
  const Lexicons &lex_;
  std::vector<Token> t_;
  std::size_t start_;
};

bool parenthetical_starter(const SentenceParser &p, std::size_t i) {
  if (!p.word(i)) return false;
  const std::string &w = p.norm(i);
  return in(w, {"who", "which", "including", "involving", "a", "an", "the"}) ||
         ends_with(w, "ing") || ends_with(w, "ed");
}

// Index of the subject head for the group whose first token is `first`.
std::optional<std::size_t> find_subject(const SentenceParser &p, std::size_t first,
                                        std::size_t floor) {
  std::size_t k = first;
  while (k > floor) {
    --k;
    const std::string &w = p.norm(k);
    if (p.word(k) && is_adverb(w)) continue;
    if (w == ")" || w == "]") {
      const std::string open = w == ")" ? "(" : "[";
      while (k > floor && p.norm(k) != open) --k;
      continue;
    }
    if (w == ",") {
      // Walk back over comma-delimited segments looking for one that opens a
      // parenthetical; the subject sits just before it.
      std::size_t c = k;
      bool found = false;
      while (true) {
        std::size_t prev = c;
        while (prev > floor && p.norm(prev - 1) != ",") --prev;
        if (prev <= floor) break;
        c = prev - 1;
        if (parenthetical_starter(p, c + 1)) {
          found = true;
          break;
        }
      }
      if (!found || c <= floor) return std::nullopt;
      k = c;
      continue;
    }
    if (!p.word(k)) return std::nullopt;
    if (is_relative(w)) {
      std::size_t a = k;
      while (a > floor) {
        --a;
        if (p.word(a) && !is_adverb(p.norm(a))) return a;
      }
      return k;
    }
    if (is_subject_pronoun(w) || p.noun_ish(k)) return k;
    return std::nullopt;
  }
  return std::nullopt;
}

std::size_t skip_lead(const std::vector<Token> &t, std::size_t i, std::size_t end) {
  while (i < end) {
    const std::string &w = t[i].norm;
    if (!t[i].is_word() && t[i].kind != TokenKind::kNumber) {
      ++i;
      continue;
    }
    if (t[i].kind == TokenKind::kNumber && i + 1 < end &&
        (t[i + 1].norm == "." || t[i + 1].norm == ")")) {
      i += 2;
      continue;
    }
    (void)w;
    break;
  }
  return i;
}

}  // namespace

std::vector<SentenceSpan> Annotator::segment_sentences(std::string_view text) const {
  return synthehr::segment_sentences(text, lex_->abbreviations());
}

std::vector<ClauseSpan> Annotator::segment_clauses(std::string_view text,
                                                   const SentenceSpan &sentence,
                                                   std::size_t sentence_index) const {
  std::vector<ClauseSpan> out;
  if (sentence.kind == SentenceKind::kHeading) return out;
  std::vector<Token> tokens = tokenize(text, sentence.span);
  if (tokens.empty()) return out;
  const std::size_t start = skip_lead(tokens, 0, tokens.size());
  if (start >= tokens.size()) return out;
  SentenceParser p(*lex_, std::move(tokens), start);
  const auto &t = p.tokens();
  const std::vector<Group> groups = p.find_groups();

  auto make = [&](std::size_t from, std::size_t to, std::size_t finite, std::size_t head,
                  const std::string &lemma, std::size_t subject_floor) {
    ClauseSpan c;
    c.sentence = sentence_index;
    c.span = {t[from].span.begin, t[to].span.end};
    c.finite_span = t[finite].span;
    c.finite_verb = std::string(text.substr(c.finite_span.begin, c.finite_span.size()));
    c.verb_span = t[head].span;
    c.verb_lemma = lemma;
    if (auto s = find_subject(p, finite, subject_floor)) {
      c.subject_head = t[*s].norm;
      c.subject_span = t[*s].span;
    }
    return c;
  };

  if (groups.empty()) {
    for (std::size_t i = start; i < t.size(); ++i) {
      if (!p.word(i) || is_closed_class(t[i].norm)) continue;
      if (auto lemma = p.lemma_of(i, {VerbForm::kBase, VerbForm::kThirdSingular,
                                      VerbForm::kPast, VerbForm::kParticiple,
                                      VerbForm::kPastOrParticiple, VerbForm::kIng})) {
        ClauseSpan c = make(0, t.size() - 1, i, i, *lemma, i);
        out.push_back(std::move(c));
        break;
      }
    }
    return out;
  }

  // Clause k starts at the last boundary token between group k-1 and group k.
  std::vector<std::size_t> starts = {0};
  for (std::size_t k = 1; k < groups.size(); ++k) {
    std::size_t begin = groups[k].finite;
    for (std::size_t i = groups[k].finite; i > groups[k - 1].last + 1;) {
      --i;
      const std::string &w = t[i].norm;
      if (!t[i].is_word() && is_boundary_punct(w)) {
        begin = i + 1;
        break;
      }
      if (t[i].is_word() && is_boundary_word(w)) {
        begin = i;
        break;
      }
    }
    if (begin <= groups[k - 1].last) begin = groups[k - 1].last + 1;
    starts.push_back(begin);
  }
  for (std::size_t k = 0; k < groups.size(); ++k) {
    const std::size_t to = k + 1 < groups.size() ? starts[k + 1] - 1 : t.size() - 1;
    out.push_back(make(starts[k], to, groups[k].finite, groups[k].head, groups[k].lemma, start));
  }
  return out;
}

AgentRole Annotator::agent_role(std::optional<std::string_view> subject_head,
                                std::optional<Gender> patient_gender) const {
  if (!subject_head) return AgentRole::kOtherUnknown;
  const std::string head = to_lower(*subject_head);
  // Initials such as "j.a." name the patient.
  if (head.size() >= 3 && head.find('.') != std::string::npos &&
      std::all_of(head.begin(), head.end(), [](char c) { return c == '.' || std::isalpha(static_cast<unsigned char>(c)); })) {
    return AgentRole::kPatient;
  }
  const auto role = lex_->agent(head);
  if (!role) return AgentRole::kOtherUnknown;
  if (*role == "patient") return AgentRole::kPatient;
  if (*role == "patient-female") {
    return !patient_gender || *patient_gender == Gender::kFemale ? AgentRole::kPatient
                                                                  : AgentRole::kOtherUnknown;
  }
  if (*role == "patient-male") {
    return !patient_gender || *patient_gender == Gender::kMale ? AgentRole::kPatient
                                                                : AgentRole::kOtherUnknown;
  }
  if (*role == "clinician") return AgentRole::kClinician;
  if (*role == "team-or-family") return AgentRole::kTeamOrFamily;
  return AgentRole::kOtherUnknown;
}

ProcessAnnotation Annotator::classify_process(std::string_view text, const ClauseSpan &clause,
                                              std::optional<Gender> patient_gender) const {
  ProcessAnnotation a;
  a.span = clause.verb_span;
  a.trigger = clause.verb_lemma;

  std::vector<ProcessType> labels;
  for (const auto &v : lex_->verbs()) {
    if (v.lemma == clause.verb_lemma) {
      labels = v.labels;
      break;
    }
  }
  // Phrasal verbs: lemma plus the following word.
  const auto after = tokenize(text, {clause.verb_span.end, clause.span.end});
  if (!after.empty() && after.front().is_word()) {
    if (auto label = lex_->phrasal(clause.verb_lemma, after.front().norm)) {
      labels = {*label};
      a.trigger = clause.verb_lemma + " " + after.front().norm;
    }
  }

  const bool expletive = clause.subject_head && *clause.subject_head == "there";
  auto has = [&](ProcessType t) {
    return std::find(labels.begin(), labels.end(), t) != labels.end();
  };
  if (expletive && (has(ProcessType::kExistential) || has(ProcessType::kRelational))) {
    a.label = ProcessType::kExistential;
  } else if (has(ProcessType::kVerbal)) {
    a.label = ProcessType::kVerbal;
  } else if (has(ProcessType::kMental)) {
    a.label = ProcessType::kMental;
  } else if (has(ProcessType::kRelational)) {
    a.label = ProcessType::kRelational;
  } else {
    a.label = ProcessType::kMaterial;
  }
  a.agent_role = agent_role(clause.subject_head, patient_gender);
  return a;
}

std::optional<ModalityAnnotation> Annotator::classify_modality(std::string_view text,
                                                               const ClauseSpan &clause) const {
  const std::vector<Token> t = tokenize(text, clause.span);
  const bool animate_subject = clause.subject_head &&
                               (agent_role(*clause.subject_head) != AgentRole::kOtherUnknown ||
                                in(*clause.subject_head, {"they", "you", "one"}));
  auto constraint_holds = [&](const Lexicons::Marker &m, std::size_t end) {
    if (m.constraint.empty()) return true;
    if (m.constraint.rfind("next=", 0) == 0) {
      return end < t.size() && t[end].norm == m.constraint.substr(5);
    }
    if (m.constraint == "subject=animate") return animate_subject;
    if (m.constraint == "subject=you") return clause.subject_head && *clause.subject_head == "you";
    return false;
  };

  for (std::size_t i = 0; i < t.size(); ++i) {
    if (!t[i].is_word()) continue;
    bool consumed = false;
    for (const auto &m : lex_->modality_markers()) {
      if (i + m.words.size() > t.size()) continue;
      bool match = true;
      for (std::size_t w = 0; w < m.words.size() && match; ++w) {
        match = t[i + w].norm == m.words[w];
      }
      if (!match) continue;
      const std::size_t end = i + m.words.size();
      if (m.label == "none") {
        i = end - 1;
        consumed = true;
        break;
      }
      if (!constraint_holds(m, end)) continue;
      ModalityAnnotation a;
      a.span = {t[i].span.begin, t[end - 1].span.end};
      for (std::size_t w = 0; w < m.words.size(); ++w) {
        if (w > 0) a.trigger.push_back(' ');
        a.trigger += m.words[w];
      }
      if (m.label == "likelihood") {
        a.type = ModalityType::kLikelihood;
      } else if (m.label == "volition") {
        a.type = ModalityType::kVolition;
      } else {
        a.type = ModalityType::kRequirement;
        a.requirement_subtype = m.label == "obligation"     ? RequirementSubtype::kObligation
                                : m.label == "advisability" ? RequirementSubtype::kAdvisability
                                                            : RequirementSubtype::kPermission;
      }
      return a;
    }
    (void)consumed;
  }
  return std::nullopt;
}

std::optional<ThemeAnnotation> Annotator::classify_theme(std::string_view text,
                                                         const SentenceSpan &sentence,
                                                         const ClauseSpan *first_clause) const {
  if (sentence.kind == SentenceKind::kHeading) return std::nullopt;
  const std::vector<Token> t = tokenize(text, sentence.span);
  const std::size_t i = skip_lead(t, 0, t.size());
  if (i >= t.size()) return std::nullopt;
  for (const auto &m : lex_->theme_markers()) {
    if (i + m.words.size() > t.size()) continue;
    bool match = true;
    for (std::size_t w = 0; w < m.words.size() && match; ++w) {
      match = t[i + w].norm == m.words[w];
    }
    if (!match) continue;
    const Span span{t[i].span.begin, t[i + m.words.size() - 1].span.end};
    if (first_clause != nullptr) {
      const std::size_t limit = first_clause->subject_span
                                    ? first_clause->subject_span->begin
                                    : first_clause->finite_span.begin;
      if (span.end > limit) return std::nullopt;
    }
    ThemeAnnotation a;
    a.span = span;
    a.trigger = std::string(text.substr(span.begin, span.size()));
    if (m.label == "interpersonal") {
      a.layer = ThemeLayer::kInterpersonal;
    } else {
      a.layer = ThemeLayer::kTextual;
      a.textual_subtype = m.label == "extending" ? TextualSubtype::kExtending
                          : m.label == "arguing" ? TextualSubtype::kArguing
                                                 : TextualSubtype::kStructuring;
    }
    return a;
  }
  return std::nullopt;
}

AnnotationSet Annotator::annotate(std::string_view text, std::string doc_key,
                                  std::optional<Gender> patient_gender) const {
  AnnotationSet set;
  set.doc_key = std::move(doc_key);
  set.sentences = segment_sentences(text);
  for (std::size_t s = 0; s < set.sentences.size(); ++s) {
    const SentenceSpan &sentence = set.sentences[s];
    const std::size_t first = set.clauses.size();
    for (auto &clause : segment_clauses(text, sentence, s)) {
      const std::size_t index = set.clauses.size();
      ProcessAnnotation p = classify_process(text, clause, patient_gender);
      p.clause = index;
      set.processes.push_back(std::move(p));
      if (auto m = classify_modality(text, clause)) {
        m->clause = index;
        set.modalities.push_back(std::move(*m));
      }
      set.clauses.push_back(std::move(clause));
    }
    const ClauseSpan *first_clause = set.clauses.size() > first ? &set.clauses[first] : nullptr;
    if (auto theme = classify_theme(text, sentence, first_clause)) {
      theme->sentence = s;
      set.themes.push_back(std::move(*theme));
    }
  }
  return set;
}

}  // namespace synthehr
