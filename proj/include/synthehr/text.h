#ifndef SYNTHEHR_TEXT_H_
#define SYNTHEHR_TEXT_H_

#include <cstddef>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

namespace synthehr {

// Half-open byte range [begin, end) into a document.
struct Span {
  std::size_t begin = 0;
  std::size_t end = 0;

  std::size_t size() const { return end - begin; }
  bool contains(const Span &other) const {
    return begin <= other.begin && other.end <= end;
  }
  bool overlaps(const Span &other) const {
    return begin < other.end && other.begin < end;
  }
  bool operator==(const Span &) const = default;
};

enum class SentenceKind { kProse, kHeading, kListItem };

std::string_view sentence_kind_name(SentenceKind kind);

struct SentenceSpan {
  Span span;
  SentenceKind kind = SentenceKind::kProse;
  bool operator==(const SentenceSpan &) const = default;
};

enum class TokenKind { kWord, kNumber, kPunct };

struct Token {
  Span span;
  TokenKind kind = TokenKind::kPunct;
  // Lower-cased, with typographic apostrophes folded to ASCII. Contractions
  // are split and expanded: "can't" -> "can" + "not", "I'm" -> "i" + "'m".
  std::string norm;

  bool is_word() const { return kind == TokenKind::kWord; }
};

// Tokenizes text[range). Words keep internal hyphens, apostrophes and
// initials ("J.A.", "e.g."); possessive "'s" is split off as its own token.
std::vector<Token> tokenize(std::string_view text, Span range);

// Sentence segmentation. Markdown headings (a line that is entirely bold, or
// starts with '#') and bold lead-ins ("**Label:** text") become heading spans;
// each list item ("- ", "* ", "1. ", "2) ") starts a run of list-item spans.
// Prose splits on . ! ? followed by whitespace, unless the period closes an
// abbreviation, a single-letter initial, or is followed by a lower-case
// letter. Spans are trimmed and cover every non-whitespace byte.
std::vector<SentenceSpan> segment_sentences(
    std::string_view text, const std::unordered_set<std::string> &abbreviations);

// Whitespace-delimited prose word count: markdown emphasis markers, heading
// hashes, bullet markers and numbered-list prefixes are removed first, and
// tokens with no letter or digit are not counted.
std::size_t count_words(std::string_view text);

std::string to_lower(std::string_view s);
std::string_view trim(std::string_view s);
std::string normalize_whitespace(std::string_view s);

}  // namespace synthehr

#endif  // SYNTHEHR_TEXT_H_
