#include <string>

#include "doctest.h"
#include "synthehr/sfl.h"
#include "synthehr/text.h"

using namespace synthehr;

namespace {

std::vector<std::string> sentences(std::string_view text) {
  std::vector<std::string> out;
  for (const auto &s : Annotator().segment_sentences(text)) {
    out.emplace_back(text.substr(s.span.begin, s.span.size()));
  }
  return out;
}

std::vector<std::string> norms(std::string_view text) {
  std::vector<std::string> out;
  for (const auto &t : tokenize(text, {0, text.size()})) out.push_back(t.norm);
  return out;
}

}  // namespace

TEST_CASE("sentence splitting basics") {
  CHECK(sentences("She sleeps. He waits.") == std::vector<std::string>{"She sleeps.", "He waits."});
  CHECK(sentences("Dr. Smith reviewed the plan.").size() == 1);
  CHECK(sentences("Use mood stabilizers (e.g. lithium) daily. Review weekly.").size() == 2);
  CHECK(sentences("J.A. reported insomnia. She slept.").size() == 2);
  CHECK(sentences("It rose to 5.5 mg. Then it fell.").size() == 2);
  CHECK(sentences("Is she safe? Yes!").size() == 2);
  CHECK(sentences("He said \"stop.\" She left.").size() == 2);
  CHECK(sentences("").empty());
  CHECK(sentences("   \n\n ").empty());
}

TEST_CASE("headings and list items") {
  const std::string text = "**1. Psychiatric Assessment**\nThe patient is well.";
  const auto spans = Annotator().segment_sentences(text);
  REQUIRE(spans.size() == 2);
  CHECK(spans[0].kind == SentenceKind::kHeading);
  CHECK(spans[1].kind == SentenceKind::kProse);

  const std::string list = "Goals:\n\n- Reduce relapse. Improve sleep.\n2. Attend clinic.\n# Plan";
  const auto items = Annotator().segment_sentences(list);
  REQUIRE(items.size() == 5);
  CHECK(items[0].kind == SentenceKind::kProse);
  CHECK(items[1].kind == SentenceKind::kListItem);
  CHECK(items[2].kind == SentenceKind::kListItem);
  CHECK(items[3].kind == SentenceKind::kListItem);
  CHECK(items[4].kind == SentenceKind::kHeading);

  const std::string lead = "**Presenting Symptoms:** The patient is low. She sleeps.";
  const auto l = Annotator().segment_sentences(lead);
  REQUIRE(l.size() == 3);
  CHECK(l[0].kind == SentenceKind::kHeading);
  CHECK(lead.substr(l[0].span.begin, l[0].span.size()) == "**Presenting Symptoms:**");
}

TEST_CASE("sentence spans are ordered, disjoint and cover all non-space bytes") {
  for (std::string_view text :
       {"**Head**\n\nFirst one. Second one.\n- item a\n- item b. more\n\n1. x\n2) y",
        "no terminal punctuation at all", "A.  B.\n\nC"}) {
    const auto spans = Annotator().segment_sentences(text);
    std::vector<bool> covered(text.size(), false);
    std::size_t last_end = 0;
    for (const auto &s : spans) {
      CHECK(s.span.begin >= last_end);
      CHECK(s.span.end <= text.size());
      CHECK(s.span.begin < s.span.end);
      for (std::size_t i = s.span.begin; i < s.span.end; ++i) covered[i] = true;
      last_end = s.span.end;
    }
    for (std::size_t i = 0; i < text.size(); ++i) {
      if (!std::isspace(static_cast<unsigned char>(text[i]))) CHECK(covered[i]);
    }
  }
}

TEST_CASE("tokenizer contractions and initials") {
  CHECK(norms("I'm fine") == std::vector<std::string>{"i", "am", "fine"});
  CHECK(norms("can't") == std::vector<std::string>{"can", "not"});
  CHECK(norms("won’t") == std::vector<std::string>{"will", "not"});
  CHECK(norms("it's") == std::vector<std::string>{"it", "is"});
  CHECK(norms("patient's") == std::vector<std::string>{"patient", "'s"});
  CHECK(norms("J.A. left") == std::vector<std::string>{"j.a.", "left"});
  CHECK(norms("self-harm, (CBT)") ==
        std::vector<std::string>{"self-harm", ",", "(", "cbt", ")"});
  const std::string s = "“Thank you”";
  const auto t = tokenize(s, {0, s.size()});
  REQUIRE(t.size() == 4);
  CHECK(t[0].kind == TokenKind::kPunct);
  CHECK(s.substr(t[1].span.begin, t[1].span.size()) == "Thank");
}

TEST_CASE("word counting strips markdown") {
  CHECK(count_words("") == 0);
  CHECK(count_words("one two three") == 3);
  CHECK(count_words("**Bold heading**\n- item one\n12. item two\n# Title") == 7);
  CHECK(count_words("a - b * c") == 3);
  CHECK(count_words("word *emph* `code`") == 3);
}
