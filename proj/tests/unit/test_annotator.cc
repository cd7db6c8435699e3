#include <random>
#include <string>

#include "doctest.h"
#include "gold_eval.h"
#include "synthehr/error.h"
#include "synthehr/sfl.h"

using namespace synthehr;

namespace {

const Annotator &annotator() {
  static const Annotator a;
  return a;
}

std::vector<ClauseSpan> clauses(const std::string &text) {
  const auto sents = annotator().segment_sentences(text);
  std::vector<ClauseSpan> out;
  for (std::size_t i = 0; i < sents.size(); ++i) {
    for (auto &c : annotator().segment_clauses(text, sents[i], i)) out.push_back(std::move(c));
  }
  return out;
}

std::vector<std::string> finite_verbs(const std::string &text) {
  std::vector<std::string> out;
  for (const auto &c : clauses(text)) out.push_back(c.finite_verb);
  return out;
}

ProcessAnnotation process(const std::string &text, std::optional<Gender> g = {}) {
  const auto cs = clauses(text);
  REQUIRE(!cs.empty());
  return annotator().classify_process(text, cs.front(), g);
}

std::string modality(const std::string &text) {
  for (const auto &c : clauses(text)) {
    if (auto m = annotator().classify_modality(text, c)) return m->label_name();
  }
  return "none";
}

std::string theme(const std::string &text) {
  const AnnotationSet set = annotator().annotate(text, "d");
  return set.themes.empty() ? "none" : set.themes.front().label_name();
}

std::string fixtures() { return SYNTHEHR_FIXTURES; }

}  // namespace

TEST_CASE("clause segmentation examples") {
  CHECK(finite_verbs("She reported low mood, and she denied suicidal ideation.") ==
        std::vector<std::string>{"reported", "denied"});
  const auto imperative = clauses("Monitor medication adherence.");
  REQUIRE(imperative.size() == 1);
  CHECK(imperative[0].finite_verb == "Monitor");
  CHECK_FALSE(imperative[0].subject_head.has_value());
  const std::string rel = "The patient, who lives alone, has a history of depression.";
  CHECK(finite_verbs(rel) == std::vector<std::string>{"lives", "has"});
  CHECK(clauses(rel)[1].subject_head == "patient");
  CHECK(finite_verbs("**Heading only**").empty());
}

TEST_CASE("clause spans lie inside their sentence") {
  const std::string text = testing::read_text(fixtures() + "/mistral_gp.md");
  const auto set = annotator().annotate(text, "m:GP:0");
  for (const auto &c : set.clauses) {
    const auto &s = set.sentences[c.sentence].span;
    CHECK(s.contains(c.span));
    CHECK(c.span.contains(c.finite_span));
    CHECK(c.span.contains(c.verb_span));
    CHECK_FALSE(c.finite_verb.empty());
  }
  for (std::size_t i = 1; i < set.clauses.size(); ++i) {
    CHECK(set.clauses[i - 1].span.end <= set.clauses[i].span.begin);
  }
}

TEST_CASE("process types") {
  CHECK(process("The patient has a history of depression.").label == ProcessType::kRelational);
  CHECK(process("There were signs of grandiosity.").label == ProcessType::kExistential);
  CHECK(process("She also experienced a sense of grandiosity.").label == ProcessType::kMental);
  const auto writing = process("I am writing to provide an update on our patient.");
  CHECK(writing.label == ProcessType::kVerbal);
  CHECK(writing.trigger == "write");
  CHECK(writing.agent_role == AgentRole::kClinician);
  const auto team = process("The team will monitor medication levels.");
  CHECK(team.label == ProcessType::kMaterial);
  CHECK(team.agent_role == AgentRole::kTeamOrFamily);
  CHECK(process("I'm writing to inform you of the plan.").label == ProcessType::kVerbal);
  CHECK(process("The plan remains unchanged.").label == ProcessType::kRelational);
  CHECK(process("She will frobnicate daily.").label == ProcessType::kMaterial);
  CHECK(process("I look forward to working together.").label == ProcessType::kMental);
}

TEST_CASE("agent roles follow the subject lexicon and story gender") {
  CHECK(process("She attends clinic.", Gender::kFemale).agent_role == AgentRole::kPatient);
  CHECK(process("She attends clinic.", Gender::kMale).agent_role == AgentRole::kOtherUnknown);
  CHECK(process("He attends clinic.", Gender::kMale).agent_role == AgentRole::kPatient);
  CHECK(process("J.A. reported insomnia.").agent_role == AgentRole::kPatient);
  CHECK(process("We reviewed the plan.").agent_role == AgentRole::kTeamOrFamily);
  CHECK(process("Her family visited.").agent_role == AgentRole::kTeamOrFamily);
  CHECK(process("Dr Smith reviewed the plan.").agent_role == AgentRole::kOtherUnknown);
}

TEST_CASE("modality examples") {
  CHECK(modality("It is essential to consider these factors.") == "obligation");
  CHECK(modality("Her Bipolar II Disorder is likely to continue.") == "likelihood");
  CHECK(modality("I will adhere to my medication regimen.") == "volition");
  CHECK(modality("I recommend that you refer her to a pain management specialist.") ==
        "advisability");
  CHECK(modality("The patient described her week.") == "none");
  CHECK(modality("The medication will be reviewed.") == "none");
  CHECK(modality("You can attend the group.") == "permission");
  CHECK(modality("I can suggest a format.") == "volition");
  CHECK(modality("The symptoms can worsen.") == "likelihood");
  CHECK(modality("To Whom It May Concern, she attends.") == "none");
  CHECK(modality("She needs to attend.") == "obligation");
  CHECK(modality("She needs support.") == "none");
  CHECK(modality("She should probably rest.") == "advisability");
}

TEST_CASE("theme examples") {
  CHECK(theme("However, due to the side effects, the medication regimen was altered.") ==
        "arguing");
  CHECK(theme("Additionally, the patient reported chronic pain.") == "extending");
  CHECK(theme("In conclusion, the plan remains unchanged.") == "structuring");
  CHECK(theme("Unfortunately, her symptoms worsened.") == "interpersonal");
  CHECK(theme("The patient, however, declined.") == "none");
  CHECK(theme("She also attends.") == "none");
  CHECK(theme("- Finally, review the plan.") == "structuring");
}

TEST_CASE("annotation ids round-trip") {
  const std::string id = annotation_id("mistral:GP:17", Layer::kModality, 4);
  CHECK(id == "mistral:GP:17:M4");
  const auto ref = parse_annotation_id(id).value();
  CHECK(ref.doc_key == "mistral:GP:17");
  CHECK(ref.layer == Layer::kModality);
  CHECK(ref.index == 4);
  CHECK_FALSE(parse_annotation_id("nocolon").has_value());
  CHECK_FALSE(parse_annotation_id("a:X1").has_value());
  CHECK_FALSE(parse_annotation_id("a:P").has_value());
  CHECK_FALSE(parse_annotation_id("a:P1x").has_value());
}

TEST_CASE("labels per layer") {
  CHECK(valid_label(Layer::kProcess, "mental"));
  CHECK_FALSE(valid_label(Layer::kTheme, "obligation"));
  CHECK(valid_label(Layer::kModality, "permission"));
  CHECK(valid_label(Layer::kTheme, "interpersonal"));
}

TEST_CASE("document annotation invariants on fixtures") {
  for (const char *name : {"mistral_init.md", "mistral_gp.md", "mistral_ref.md",
                           "mistral_care.md", "quoted_examples.md"}) {
    const std::string text = testing::read_text(fixtures() + "/" + name);
    const AnnotationSet a = annotator().annotate(text, name, Gender::kFemale);
    const AnnotationSet b = annotator().annotate(text, name, Gender::kFemale);
    CHECK(a == b);
    CHECK(to_json(a).dump() == to_json(b).dump());
    CHECK(annotation_set_from_json(to_json(a)) == a);
    CHECK(a.processes.size() == a.clauses.size());
    std::vector<int> per_clause(a.clauses.size(), 0);
    for (const auto &m : a.modalities) {
      CHECK(++per_clause[m.clause] == 1);
      CHECK(a.clauses[m.clause].span.contains(m.span));
      CHECK(m.requirement_subtype.has_value() == (m.type == ModalityType::kRequirement));
    }
    for (std::size_t i = 0; i < a.processes.size(); ++i) {
      const auto &p = a.processes[i];
      CHECK(p.clause == i);
      CHECK(a.clauses[i].span.contains(p.span));
      CHECK(p.review.status == ReviewStatus::kAuto);
      if (p.label == ProcessType::kExistential) CHECK(a.clauses[i].subject_head == "there");
    }
    std::vector<int> per_sentence(a.sentences.size(), 0);
    for (const auto &t : a.themes) {
      CHECK(++per_sentence[t.sentence] == 1);
      CHECK(a.sentences[t.sentence].span.contains(t.span));
      CHECK(t.textual_subtype.has_value() == (t.layer == ThemeLayer::kTextual));
      for (const auto &c : a.clauses) {
        if (c.sentence == t.sentence && c.subject_span) {
          CHECK(t.span.end <= c.subject_span->begin);
          break;
        }
      }
    }
  }
}

TEST_CASE("whole sample letter carries the expected feature mix") {
  const std::string text = testing::read_text(fixtures() + "/mistral_gp.md");
  const auto set = annotator().annotate(text, "m:GP:0", Gender::kFemale);
  auto has_process = [&](ProcessType t) {
    return std::any_of(set.processes.begin(), set.processes.end(),
                       [&](const auto &p) { return p.label == t; });
  };
  CHECK(has_process(ProcessType::kVerbal));
  CHECK(std::any_of(set.modalities.begin(), set.modalities.end(),
                    [](const auto &m) { return m.type == ModalityType::kRequirement; }));
  CHECK(std::any_of(set.themes.begin(), set.themes.end(),
                    [](const auto &t) { return t.label_name() == "arguing"; }));
  const std::string examples = testing::read_text(fixtures() + "/quoted_examples.md");
  const auto ex = annotator().annotate(examples, "x", Gender::kFemale);
  CHECK(std::any_of(ex.processes.begin(), ex.processes.end(),
                    [](const auto &p) { return p.label == ProcessType::kExistential; }));
  CHECK(annotator().annotate("", "empty").empty());
}

TEST_CASE("arguing theme offsets select exactly However") {
  const std::string text = testing::read_text(fixtures() + "/mistral_ref.md") +
                           "\n\nHowever, the plan stands.";
  const auto set = annotator().annotate(text, "r");
  bool found = false;
  for (const auto &t : set.themes) {
    if (t.label_name() == "arguing" && t.trigger == "However") {
      CHECK(text.substr(t.span.begin, t.span.size()) == "However");
      found = true;
    }
  }
  CHECK(found);
}

TEST_CASE("annotator is robust to arbitrary input") {
  std::mt19937_64 rng(7);
  const std::string alphabet = "abcdefghij ,.;:!?\"'()-*\n\t1234567890ABCDEF";
  for (int round = 0; round < 300; ++round) {
    std::string text;
    const std::size_t n = rng() % 200;
    for (std::size_t i = 0; i < n; ++i) text.push_back(alphabet[rng() % alphabet.size()]);
    const auto set = annotator().annotate(text, "fuzz");
    for (const auto &s : set.sentences) CHECK(s.span.end <= text.size());
    for (const auto &c : set.clauses) CHECK(c.span.end <= text.size());
  }
}

TEST_CASE("gold fixture agreement") {
  const auto report = testing::evaluate_gold(annotator(), fixtures());
  for (const auto &line : report.misses) MESSAGE(line);
  for (std::size_t l = 0; l < 3; ++l) {
    const auto &s = report.layers[l];
    INFO(layer_name(static_cast<Layer>(l)) << " tp=" << s.tp << " fp=" << s.fp << " fn=" << s.fn
                                           << " f1=" << s.f1());
    CHECK(s.f1() >= 0.85);
  }
  REQUIRE(report.anchors.size() == 7);
  for (const auto &a : report.anchors) {
    INFO(a.description);
    CHECK(a.correct);
  }
}
