#ifndef SYNTHEHR_SFL_H_
#define SYNTHEHR_SFL_H_

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "json.hpp"
#include "synthehr/text.h"

namespace synthehr {

// Clause-level Systemic Functional annotation on three layers: transitivity
// (process types), modality, and textual/interpersonal Themes.

enum class ProcessType { kMaterial, kMental, kVerbal, kRelational, kExistential };
enum class AgentRole { kPatient, kClinician, kTeamOrFamily, kOtherUnknown };
enum class ModalityType { kLikelihood, kRequirement, kVolition };
enum class RequirementSubtype { kObligation, kAdvisability, kPermission };
enum class ThemeLayer { kTextual, kInterpersonal };
enum class TextualSubtype { kExtending, kArguing, kStructuring };
enum class ReviewStatus { kAuto, kAccepted, kRejected, kRelabeled };
enum class Layer { kProcess, kModality, kTheme };
enum class Gender { kFemale, kMale };

std::string_view process_type_name(ProcessType t);
std::optional<ProcessType> parse_process_type(std::string_view s);
std::string_view agent_role_name(AgentRole r);
std::string_view modality_type_name(ModalityType t);
std::string_view requirement_subtype_name(RequirementSubtype s);
std::string_view textual_subtype_name(TextualSubtype s);
std::string_view review_status_name(ReviewStatus s);
std::optional<ReviewStatus> parse_review_status(std::string_view s);
std::string_view layer_name(Layer l);
std::optional<Layer> parse_layer(std::string_view s);
char layer_tag(Layer l);  // 'P', 'M', 'T' in annotation ids

// Flat label vocabulary per layer, as used by relabel decisions and gold
// files. Modality uses the leaf of the network: likelihood, obligation,
// advisability, permission, volition. Themes: extending, arguing,
// structuring, interpersonal.
const std::vector<std::string_view> &layer_labels(Layer l);
bool valid_label(Layer l, std::string_view label);

struct Review {
  ReviewStatus status = ReviewStatus::kAuto;
  std::optional<std::string> relabel;  // set iff status == kRelabeled
  bool operator==(const Review &) const = default;
};

struct ClauseSpan {
  std::size_t sentence = 0;  // index into AnnotationSet::sentences
  Span span;
  Span finite_span;          // finite element of the verb group
  std::string finite_verb;
  Span verb_span;            // lexical (or copular) head of the verb group
  std::string verb_lemma;
  std::optional<std::string> subject_head;
  std::optional<Span> subject_span;
  bool operator==(const ClauseSpan &) const = default;
};

struct ProcessAnnotation {
  std::size_t clause = 0;
  Span span;             // the verb head
  std::string trigger;   // verb lemma
  ProcessType label = ProcessType::kMaterial;
  AgentRole agent_role = AgentRole::kOtherUnknown;
  Review review;
  std::string label_name() const { return std::string(process_type_name(label)); }
  bool operator==(const ProcessAnnotation &) const = default;
};

struct ModalityAnnotation {
  std::size_t clause = 0;
  Span span;             // the marker
  std::string trigger;   // marker as listed in the lexicon
  ModalityType type = ModalityType::kLikelihood;
  std::optional<RequirementSubtype> requirement_subtype;  // iff kRequirement
  Review review;
  std::string label_name() const;  // leaf label
  bool operator==(const ModalityAnnotation &) const = default;
};

struct ThemeAnnotation {
  std::size_t sentence = 0;
  Span span;
  std::string trigger;
  ThemeLayer layer = ThemeLayer::kTextual;
  std::optional<TextualSubtype> textual_subtype;  // iff kTextual
  Review review;
  std::string label_name() const;
  bool operator==(const ThemeAnnotation &) const = default;
};

struct AnnotationSet {
  std::string doc_key;
  std::vector<SentenceSpan> sentences;
  std::vector<ClauseSpan> clauses;
  std::vector<ProcessAnnotation> processes;
  std::vector<ModalityAnnotation> modalities;
  std::vector<ThemeAnnotation> themes;

  bool empty() const { return sentences.empty(); }
  bool operator==(const AnnotationSet &) const = default;
};

// "<doc_key>:<P|M|T><index>".
std::string annotation_id(std::string_view doc_key, Layer layer, std::size_t index);
struct AnnotationRef {
  std::string doc_key;
  Layer layer;
  std::size_t index;
};
std::optional<AnnotationRef> parse_annotation_id(std::string_view id);

// Label of an annotation as reviewed: the relabel when relabeled, else the
// automatic label.
std::string effective_label(const ProcessAnnotation &a);
std::string effective_label(const ModalityAnnotation &a);
std::string effective_label(const ThemeAnnotation &a);

nlohmann::json to_json(const AnnotationSet &set);
AnnotationSet annotation_set_from_json(const nlohmann::json &j);

// Word lists driving the rule-based classifiers. The built-in set is compiled
// from the files under data/lexicons; a directory with the same file names
// can replace it.
class Lexicons {
 public:
  enum class VerbForm { kBase, kThirdSingular, kPast, kParticiple, kPastOrParticiple, kIng };

  struct VerbEntry {
    std::string lemma;
    std::vector<ProcessType> labels;
  };
  struct FormEntry {
    std::size_t verb;  // index into verbs()
    VerbForm form;
  };
  struct Marker {
    std::vector<std::string> words;
    std::string label;       // modality leaf label, theme label, or "none"
    std::string constraint;  // "", "next=to", "subject=animate", "subject=you"
  };

  static const Lexicons &builtin();
  static Lexicons load_directory(const std::filesystem::path &dir);
  // Parses the file contents directly; used for the embedded copy.
  static Lexicons parse(std::string_view verbs, std::string_view phrasal,
                        std::string_view modality, std::string_view themes,
                        std::string_view agents, std::string_view abbreviations);

  const std::vector<VerbEntry> &verbs() const { return verbs_; }
  // All analyses of a lower-cased surface form.
  const std::vector<FormEntry> *lookup_form(std::string_view form) const;
  std::optional<ProcessType> phrasal(std::string_view lemma, std::string_view particle) const;
  const std::vector<Marker> &modality_markers() const { return modality_; }
  const std::vector<Marker> &theme_markers() const { return themes_; }
  // Role for a subject head; "patient-female"/"patient-male" distinguish
  // gendered pronouns.
  std::optional<std::string_view> agent(std::string_view head) const;
  const std::unordered_set<std::string> &abbreviations() const { return abbreviations_; }

 private:
  void add_verb(std::string lemma, std::vector<ProcessType> labels,
                std::string past, std::string participle, std::string ing);

  std::vector<VerbEntry> verbs_;
  std::unordered_map<std::string, std::vector<FormEntry>> forms_;
  std::map<std::pair<std::string, std::string>, ProcessType> phrasal_;
  std::vector<Marker> modality_;
  std::vector<Marker> themes_;
  std::unordered_map<std::string, std::string> agents_;
  std::unordered_set<std::string> abbreviations_;
};

// Rule-based annotator. All methods are const and thread-safe.
class Annotator {
 public:
  explicit Annotator(const Lexicons &lexicons = Lexicons::builtin())
      : lex_(&lexicons) {}

  std::vector<SentenceSpan> segment_sentences(std::string_view text) const;

  // One clause per finite verb group. `first_index` is the sentence's index,
  // stored in each ClauseSpan. Headings yield no clauses.
  std::vector<ClauseSpan> segment_clauses(std::string_view text,
                                          const SentenceSpan &sentence,
                                          std::size_t sentence_index = 0) const;

  ProcessAnnotation classify_process(std::string_view text, const ClauseSpan &clause,
                                     std::optional<Gender> patient_gender = {}) const;
  std::optional<ModalityAnnotation> classify_modality(std::string_view text,
                                                      const ClauseSpan &clause) const;
  // `first_clause` is the first clause of the sentence, if any; the connector
  // must end before its subject (or verb when there is no subject).
  std::optional<ThemeAnnotation> classify_theme(std::string_view text,
                                                const SentenceSpan &sentence,
                                                const ClauseSpan *first_clause) const;

  AgentRole agent_role(std::optional<std::string_view> subject_head,
                       std::optional<Gender> patient_gender = {}) const;

  // Segmentation plus all three classifiers; every annotation is kAuto.
  AnnotationSet annotate(std::string_view text, std::string doc_key,
                         std::optional<Gender> patient_gender = {}) const;

 private:
  const Lexicons *lex_;
};

}  // namespace synthehr

#endif  // SYNTHEHR_SFL_H_
