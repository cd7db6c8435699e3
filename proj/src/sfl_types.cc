#include <array>
#include <charconv>

#include "synthehr/error.h"
#include "synthehr/sfl.h"

namespace synthehr {

namespace {

constexpr std::array<std::string_view, 5> kProcessNames = {
    "material", "mental", "verbal", "relational", "existential"};
constexpr std::array<std::string_view, 4> kAgentNames = {
    "patient", "clinician", "team-or-family", "other-unknown"};
constexpr std::array<std::string_view, 4> kStatusNames = {
    "auto", "accepted", "rejected", "relabeled"};

template <std::size_t N>
std::optional<std::size_t> index_of(const std::array<std::string_view, N> &names,
                                    std::string_view s) {
  for (std::size_t i = 0; i < N; ++i) {
    if (names[i] == s) return i;
  }
  return std::nullopt;
}

nlohmann::json span_json(const Span &s) { return nlohmann::json::array({s.begin, s.end}); }
Span span_from(const nlohmann::json &j) { return {j.at(0).get<std::size_t>(), j.at(1).get<std::size_t>()}; }

nlohmann::json review_json(const Review &r) {
  nlohmann::json j = {{"status", review_status_name(r.status)}};
  if (r.relabel) j["relabel"] = *r.relabel;
  return j;
}

Review review_from(const nlohmann::json &j) {
  Review r;
  r.status = parse_review_status(j.at("status").get<std::string>()).value();
  if (j.contains("relabel")) r.relabel = j["relabel"].get<std::string>();
  return r;
}

ModalityAnnotation modality_from_label(std::string_view label) {
  ModalityAnnotation m;
  if (label == "likelihood") m.type = ModalityType::kLikelihood;
  else if (label == "volition") m.type = ModalityType::kVolition;
  else {
    m.type = ModalityType::kRequirement;
    if (label == "obligation") m.requirement_subtype = RequirementSubtype::kObligation;
    else if (label == "advisability") m.requirement_subtype = RequirementSubtype::kAdvisability;
    else m.requirement_subtype = RequirementSubtype::kPermission;
  }
  return m;
}

ThemeAnnotation theme_from_label(std::string_view label) {
  ThemeAnnotation t;
  if (label == "interpersonal") {
    t.layer = ThemeLayer::kInterpersonal;
  } else {
    t.layer = ThemeLayer::kTextual;
    if (label == "extending") t.textual_subtype = TextualSubtype::kExtending;
    else if (label == "arguing") t.textual_subtype = TextualSubtype::kArguing;
    else t.textual_subtype = TextualSubtype::kStructuring;
  }
  return t;
}

}  // namespace

std::string_view process_type_name(ProcessType t) {
  return kProcessNames[static_cast<std::size_t>(t)];
}

std::optional<ProcessType> parse_process_type(std::string_view s) {
  if (auto i = index_of(kProcessNames, s)) return static_cast<ProcessType>(*i);
  return std::nullopt;
}

std::string_view agent_role_name(AgentRole r) {
  return kAgentNames[static_cast<std::size_t>(r)];
}

std::string_view modality_type_name(ModalityType t) {
  switch (t) {
    case ModalityType::kLikelihood: return "likelihood";
    case ModalityType::kRequirement: return "requirement";
    case ModalityType::kVolition: return "volition";
  }
  return "likelihood";
}

std::string_view requirement_subtype_name(RequirementSubtype s) {
  switch (s) {
    case RequirementSubtype::kObligation: return "obligation";
    case RequirementSubtype::kAdvisability: return "advisability";
    case RequirementSubtype::kPermission: return "permission";
  }
  return "obligation";
}

std::string_view textual_subtype_name(TextualSubtype s) {
  switch (s) {
    case TextualSubtype::kExtending: return "extending";
    case TextualSubtype::kArguing: return "arguing";
    case TextualSubtype::kStructuring: return "structuring";
  }
  return "extending";
}

std::string_view review_status_name(ReviewStatus s) {
  return kStatusNames[static_cast<std::size_t>(s)];
}

std::optional<ReviewStatus> parse_review_status(std::string_view s) {
  if (auto i = index_of(kStatusNames, s)) return static_cast<ReviewStatus>(*i);
  return std::nullopt;
}

std::string_view layer_name(Layer l) {
  switch (l) {
    case Layer::kProcess: return "process";
    case Layer::kModality: return "modality";
    case Layer::kTheme: return "theme";
  }
  return "process";
}

std::optional<Layer> parse_layer(std::string_view s) {
  if (s == "process") return Layer::kProcess;
  if (s == "modality") return Layer::kModality;
  if (s == "theme") return Layer::kTheme;
  return std::nullopt;
}

char layer_tag(Layer l) {
  switch (l) {
    case Layer::kProcess: return 'P';
    case Layer::kModality: return 'M';
    case Layer::kTheme: return 'T';
  }
  return 'P';
}

const std::vector<std::string_view> &layer_labels(Layer l) {
  static const std::vector<std::string_view> process(kProcessNames.begin(), kProcessNames.end());
  static const std::vector<std::string_view> modality = {
      "likelihood", "obligation", "advisability", "permission", "volition"};
  static const std::vector<std::string_view> theme = {
      "extending", "arguing", "structuring", "interpersonal"};
  switch (l) {
    case Layer::kProcess: return process;
    case Layer::kModality: return modality;
    case Layer::kTheme: return theme;
  }
  return process;
}

bool valid_label(Layer l, std::string_view label) {
  for (auto v : layer_labels(l)) {
    if (v == label) return true;
  }
  return false;
}

std::string ModalityAnnotation::label_name() const {
  if (type == ModalityType::kRequirement && requirement_subtype) {
    return std::string(requirement_subtype_name(*requirement_subtype));
  }
  return std::string(modality_type_name(type));
}

std::string ThemeAnnotation::label_name() const {
  if (layer == ThemeLayer::kTextual && textual_subtype) {
    return std::string(textual_subtype_name(*textual_subtype));
  }
  return "interpersonal";
}

std::string annotation_id(std::string_view doc_key, Layer layer, std::size_t index) {
  std::string id(doc_key);
  id.push_back(':');
  id.push_back(layer_tag(layer));
  id += std::to_string(index);
  return id;
}

std::optional<AnnotationRef> parse_annotation_id(std::string_view id) {
  const std::size_t colon = id.rfind(':');
  if (colon == std::string_view::npos || colon + 2 > id.size()) return std::nullopt;
  AnnotationRef ref;
  ref.doc_key = std::string(id.substr(0, colon));
  switch (id[colon + 1]) {
    case 'P': ref.layer = Layer::kProcess; break;
    case 'M': ref.layer = Layer::kModality; break;
    case 'T': ref.layer = Layer::kTheme; break;
    default: return std::nullopt;
  }
  const std::string_view digits = id.substr(colon + 2);
  if (digits.empty()) return std::nullopt;
  const auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), ref.index);
  if (ec != std::errc() || ptr != digits.data() + digits.size()) return std::nullopt;
  return ref;
}

std::string effective_label(const ProcessAnnotation &a) {
  return a.review.relabel ? *a.review.relabel : a.label_name();
}
std::string effective_label(const ModalityAnnotation &a) {
  return a.review.relabel ? *a.review.relabel : a.label_name();
}
std::string effective_label(const ThemeAnnotation &a) {
  return a.review.relabel ? *a.review.relabel : a.label_name();
}

nlohmann::json to_json(const AnnotationSet &set) {
  using nlohmann::json;
  json sentences = json::array();
  for (const auto &s : set.sentences) {
    sentences.push_back({{"span", span_json(s.span)}, {"kind", sentence_kind_name(s.kind)}});
  }
  json clauses = json::array();
  for (const auto &c : set.clauses) {
    json j = {{"sentence", c.sentence},
              {"span", span_json(c.span)},
              {"finite_span", span_json(c.finite_span)},
              {"finite_verb", c.finite_verb},
              {"verb_span", span_json(c.verb_span)},
              {"verb_lemma", c.verb_lemma}};
    if (c.subject_head) {
      j["subject_head"] = *c.subject_head;
      j["subject_span"] = span_json(*c.subject_span);
    }
    clauses.push_back(std::move(j));
  }
  json processes = json::array();
  for (std::size_t i = 0; i < set.processes.size(); ++i) {
    const auto &p = set.processes[i];
    processes.push_back({{"id", annotation_id(set.doc_key, Layer::kProcess, i)},
                         {"clause", p.clause},
                         {"span", span_json(p.span)},
                         {"trigger", p.trigger},
                         {"label", p.label_name()},
                         {"agent_role", agent_role_name(p.agent_role)},
                         {"review", review_json(p.review)}});
  }
  json modalities = json::array();
  for (std::size_t i = 0; i < set.modalities.size(); ++i) {
    const auto &m = set.modalities[i];
    json j = {{"id", annotation_id(set.doc_key, Layer::kModality, i)},
              {"clause", m.clause},
              {"span", span_json(m.span)},
              {"trigger", m.trigger},
              {"type", modality_type_name(m.type)},
              {"label", m.label_name()},
              {"review", review_json(m.review)}};
    if (m.requirement_subtype) {
      j["requirement_subtype"] = requirement_subtype_name(*m.requirement_subtype);
    }
    modalities.push_back(std::move(j));
  }
  json themes = json::array();
  for (std::size_t i = 0; i < set.themes.size(); ++i) {
    const auto &t = set.themes[i];
    json j = {{"id", annotation_id(set.doc_key, Layer::kTheme, i)},
              {"sentence", t.sentence},
              {"span", span_json(t.span)},
              {"trigger", t.trigger},
              {"layer", t.layer == ThemeLayer::kTextual ? "textual" : "interpersonal"},
              {"label", t.label_name()},
              {"review", review_json(t.review)}};
    if (t.textual_subtype) j["textual_subtype"] = textual_subtype_name(*t.textual_subtype);
    themes.push_back(std::move(j));
  }
  return {{"doc_key", set.doc_key}, {"sentences", std::move(sentences)},
          {"clauses", std::move(clauses)}, {"processes", std::move(processes)},
          {"modalities", std::move(modalities)}, {"themes", std::move(themes)}};
}

AnnotationSet annotation_set_from_json(const nlohmann::json &j) {
  AnnotationSet set;
  set.doc_key = j.at("doc_key").get<std::string>();
  for (const auto &s : j.at("sentences")) {
    const auto kind = s.at("kind").get<std::string>();
    set.sentences.push_back({span_from(s.at("span")),
                             kind == "heading"     ? SentenceKind::kHeading
                             : kind == "list-item" ? SentenceKind::kListItem
                                                   : SentenceKind::kProse});
  }
  for (const auto &c : j.at("clauses")) {
    ClauseSpan clause;
    clause.sentence = c.at("sentence").get<std::size_t>();
    clause.span = span_from(c.at("span"));
    clause.finite_span = span_from(c.at("finite_span"));
    clause.finite_verb = c.at("finite_verb").get<std::string>();
    clause.verb_span = span_from(c.at("verb_span"));
    clause.verb_lemma = c.at("verb_lemma").get<std::string>();
    if (c.contains("subject_head")) {
      clause.subject_head = c["subject_head"].get<std::string>();
      clause.subject_span = span_from(c.at("subject_span"));
    }
    set.clauses.push_back(std::move(clause));
  }
  for (const auto &p : j.at("processes")) {
    ProcessAnnotation a;
    a.clause = p.at("clause").get<std::size_t>();
    a.span = span_from(p.at("span"));
    a.trigger = p.at("trigger").get<std::string>();
    a.label = parse_process_type(p.at("label").get<std::string>()).value();
    const auto role = p.at("agent_role").get<std::string>();
    a.agent_role = static_cast<AgentRole>(index_of(kAgentNames, role).value());
    a.review = review_from(p.at("review"));
    set.processes.push_back(std::move(a));
  }
  for (const auto &m : j.at("modalities")) {
    ModalityAnnotation a = modality_from_label(m.at("label").get<std::string>());
    a.clause = m.at("clause").get<std::size_t>();
    a.span = span_from(m.at("span"));
    a.trigger = m.at("trigger").get<std::string>();
    a.review = review_from(m.at("review"));
    set.modalities.push_back(std::move(a));
  }
  for (const auto &t : j.at("themes")) {
    ThemeAnnotation a = theme_from_label(t.at("label").get<std::string>());
    a.sentence = t.at("sentence").get<std::size_t>();
    a.span = span_from(t.at("span"));
    a.trigger = t.at("trigger").get<std::string>();
    a.review = review_from(t.at("review"));
    set.themes.push_back(std::move(a));
  }
  return set;
}

}  // namespace synthehr
