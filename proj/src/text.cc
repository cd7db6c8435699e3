#include "synthehr/text.h"

#include <algorithm>
#include <cctype>
#include <optional>

namespace synthehr {

namespace {

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }
bool is_digit(char c) { return std::isdigit(static_cast<unsigned char>(c)) != 0; }
bool is_ascii_alpha(char c) { return std::isalpha(static_cast<unsigned char>(c)) != 0; }
bool is_lower(char c) { return std::islower(static_cast<unsigned char>(c)) != 0; }

// Length of a typographic punctuation sequence at `i` (curly quotes, dashes,
// ellipsis), or 0.
std::size_t utf8_punct_len(std::string_view s, std::size_t i) {
  if (i + 2 < s.size() && static_cast<unsigned char>(s[i]) == 0xE2 &&
      static_cast<unsigned char>(s[i + 1]) == 0x80) {
    switch (static_cast<unsigned char>(s[i + 2])) {
      case 0x93: case 0x94: case 0x98: case 0x99:
      case 0x9C: case 0x9D: case 0xA6:
        return 3;
      default:
        break;
    }
  }
  return 0;
}

bool is_right_single_quote(std::string_view s, std::size_t i) {
  return i + 2 < s.size() && static_cast<unsigned char>(s[i]) == 0xE2 &&
         static_cast<unsigned char>(s[i + 1]) == 0x80 &&
         static_cast<unsigned char>(s[i + 2]) == 0x99;
}

bool is_letter_at(std::string_view s, std::size_t i) {
  if (i >= s.size()) return false;
  const auto c = static_cast<unsigned char>(s[i]);
  if (c >= 0x80) return utf8_punct_len(s, i) == 0;
  return std::isalpha(c) != 0;
}

bool is_alnum_at(std::string_view s, std::size_t i) {
  return i < s.size() && (is_letter_at(s, i) || is_digit(s[i]));
}

// Closing characters that may sit between a terminal mark and whitespace.
std::size_t closer_len(std::string_view s, std::size_t i) {
  if (i >= s.size()) return 0;
  const char c = s[i];
  if (c == '"' || c == '\'' || c == ')' || c == ']' || c == '*') return 1;
  if (i + 2 < s.size() && static_cast<unsigned char>(c) == 0xE2 &&
      static_cast<unsigned char>(s[i + 1]) == 0x80 &&
      (static_cast<unsigned char>(s[i + 2]) == 0x9D ||
       static_cast<unsigned char>(s[i + 2]) == 0x99)) {
    return 3;
  }
  return 0;
}

std::string fold(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (is_right_single_quote(s, i) ||
        (i + 2 < s.size() && static_cast<unsigned char>(s[i]) == 0xE2 &&
         static_cast<unsigned char>(s[i + 1]) == 0x80 &&
         static_cast<unsigned char>(s[i + 2]) == 0x98)) {
      out.push_back('\'');
      i += 2;
    } else {
      out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(s[i]))));
    }
  }
  return out;
}

bool ends_with(std::string_view s, std::string_view suffix) {
  return s.size() >= suffix.size() && s.substr(s.size() - suffix.size()) == suffix;
}

// Byte length of a trailing apostrophe + `suffix` (ASCII or typographic).
std::size_t clitic_len(std::string_view raw, std::string_view suffix) {
  if (raw.size() > suffix.size() + 1 && ends_with(raw, suffix)) {
    const std::size_t at = raw.size() - suffix.size() - 1;
    if (raw[at] == '\'') return suffix.size() + 1;
  }
  if (raw.size() > suffix.size() + 3 && ends_with(raw, suffix) &&
      is_right_single_quote(raw, raw.size() - suffix.size() - 3)) {
    return suffix.size() + 3;
  }
  return 0;
}

bool pronoun_takes_is(std::string_view w) {
  return w == "it" || w == "she" || w == "he" || w == "that" || w == "there" ||
         w == "what" || w == "who" || w == "this";
}

void push_word(std::string_view text, std::size_t begin, std::size_t end,
               std::vector<Token> &out) {
  const std::string_view raw = text.substr(begin, end - begin);
  const TokenKind kind = is_digit(raw.front()) ? TokenKind::kNumber : TokenKind::kWord;

  // n't contractions: "can't" -> "can" + "not".
  if (const std::size_t n = [&] {
        if (raw.size() > 3 && (ends_with(raw, "n't") || ends_with(raw, "N'T"))) return std::size_t{3};
        if (raw.size() > 5 && ends_with(raw, "t") && is_right_single_quote(raw, raw.size() - 4) &&
            (raw[raw.size() - 5] == 'n' || raw[raw.size() - 5] == 'N')) {
          return std::size_t{5};
        }
        return std::size_t{0};
      }();
      n > 0) {
    const std::size_t split = end - n;
    std::string base = fold(text.substr(begin, split - begin));
    if (base == "ca") base = "can";
    else if (base == "wo") base = "will";
    else if (base == "sha") base = "shall";
    out.push_back({{begin, split}, kind, std::move(base)});
    out.push_back({{split, end}, TokenKind::kWord, "not"});
    return;
  }

  static constexpr std::pair<std::string_view, std::string_view> kClitics[] = {
      {"s", "'s"}, {"S", "'s"}, {"m", "am"}, {"re", "are"}, {"ve", "have"},
      {"ll", "will"}, {"d", "would"}};
  for (auto [suffix, norm] : kClitics) {
    const std::size_t n = clitic_len(raw, suffix);
    if (n == 0) continue;
    const std::size_t split = end - n;
    std::string base = fold(text.substr(begin, split - begin));
    std::string clitic_norm(norm);
    if (clitic_norm == "'s" && pronoun_takes_is(base)) clitic_norm = "is";
    out.push_back({{begin, split}, kind, std::move(base)});
    out.push_back({{split, end}, TokenKind::kWord, std::move(clitic_norm)});
    return;
  }
  out.push_back({{begin, end}, kind, fold(raw)});
}

bool looks_like_initials(std::string_view w) {
  // "J.A", "e.g": alternating single letters and periods.
  if (w.size() < 3) return false;
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (i % 2 == 0 ? !is_ascii_alpha(w[i]) : w[i] != '.') return false;
  }
  return true;
}

// Marker length of a list item at the start of `line` ("- ", "12. "), or 0.
std::size_t list_marker_len(std::string_view line) {
  if (line.size() >= 2 && (line[0] == '-' || line[0] == '*' || line[0] == '+') &&
      is_space(line[1])) {
    return 1;
  }
  std::size_t i = 0;
  while (i < line.size() && i < 3 && is_digit(line[i])) ++i;
  if (i > 0 && i + 1 < line.size() && (line[i] == '.' || line[i] == ')') &&
      is_space(line[i + 1])) {
    return i + 1;
  }
  return 0;
}

struct Block {
  SentenceKind kind;
  std::size_t begin;
  std::size_t end;
  std::size_t scan_from;  // first byte eligible for sentence breaks
};

void split_block(std::string_view text, const Block &block,
                 const std::unordered_set<std::string> &abbreviations,
                 std::vector<SentenceSpan> &out) {
  std::size_t start = block.begin;
  auto emit = [&](std::size_t b, std::size_t e) {
    while (b < e && is_space(text[b])) ++b;
    while (e > b && is_space(text[e - 1])) --e;
    if (b < e) out.push_back({{b, e}, block.kind});
  };
  for (std::size_t i = block.scan_from; i < block.end; ++i) {
    const char c = text[i];
    if (c != '.' && c != '!' && c != '?') continue;
    std::size_t j = i + 1;
    while (j < block.end) {
      const std::size_t n = closer_len(text, j);
      if (n == 0) break;
      j += n;
    }
    if (j < block.end && !is_space(text[j])) continue;
    if (c == '.') {
      std::size_t w = i;
      while (w > block.begin && (is_ascii_alpha(text[w - 1]) || text[w - 1] == '.')) --w;
      const std::string word = to_lower(text.substr(w, i - w));
      if (abbreviations.count(word) > 0) continue;
      if (word.size() == 1 && std::isupper(static_cast<unsigned char>(text[w]))) continue;
      if (looks_like_initials(word)) continue;
    }
    std::size_t k = j;
    while (k < block.end && is_space(text[k])) ++k;
    while (k < block.end && (text[k] == '"' || text[k] == '(' || text[k] == '*')) ++k;
    if (k < block.end && is_lower(text[k])) continue;
    emit(start, j);
    start = j;
  }
  emit(start, block.end);
}

}  // namespace

std::string_view sentence_kind_name(SentenceKind kind) {
  switch (kind) {
    case SentenceKind::kProse: return "prose";
    case SentenceKind::kHeading: return "heading";
    case SentenceKind::kListItem: return "list-item";
  }
  return "prose";
}

std::string to_lower(std::string_view s) {
  std::string out(s);
  for (auto &c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
  while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
  return s;
}

std::string normalize_whitespace(std::string_view s) {
  std::string out;
  bool pending = false;
  for (char c : s) {
    if (is_space(c)) {
      pending = !out.empty();
    } else {
      if (pending) out.push_back(' ');
      pending = false;
      out.push_back(c);
    }
  }
  return out;
}

std::vector<Token> tokenize(std::string_view text, Span range) {
  std::vector<Token> out;
  std::size_t i = range.begin;
  const std::size_t end = std::min(range.end, text.size());
  while (i < end) {
    if (is_space(text[i])) {
      ++i;
      continue;
    }
    if (const std::size_t n = utf8_punct_len(text, i); n > 0) {
      out.push_back({{i, i + n}, TokenKind::kPunct, fold(text.substr(i, n))});
      i += n;
      continue;
    }
    if (!is_alnum_at(text, i)) {
      out.push_back({{i, i + 1}, TokenKind::kPunct, std::string(1, text[i])});
      ++i;
      continue;
    }
    const std::size_t begin = i;
    bool dotted = false;
    while (i < end) {
      if (is_alnum_at(text, i)) {
        const auto c = static_cast<unsigned char>(text[i]);
        i += c >= 0xF0 ? 4 : c >= 0xE0 ? 3 : c >= 0xC0 ? 2 : 1;
        continue;
      }
      if ((text[i] == '-' || text[i] == '\'') && is_alnum_at(text, i + 1)) {
        ++i;
        continue;
      }
      if (is_right_single_quote(text, i) && is_alnum_at(text, i + 3)) {
        i += 3;
        continue;
      }
      // Initials and dotted abbreviations: "J.A.", "e.g.".
      if (text[i] == '.' && i - begin == 1 && is_ascii_alpha(text[begin]) &&
          i + 1 < end && is_ascii_alpha(text[i + 1]) &&
          (i + 2 >= end || text[i + 2] == '.')) {
        dotted = true;
        ++i;
        continue;
      }
      if (text[i] == '.' && dotted && i + 1 < end && is_ascii_alpha(text[i + 1]) &&
          (i + 2 >= end || text[i + 2] == '.')) {
        ++i;
        continue;
      }
      if (text[i] == '.' && dotted) {
        ++i;
        dotted = false;
      }
      break;
    }
    push_word(text, begin, std::min(i, end), out);
  }
  return out;
}

std::vector<SentenceSpan> segment_sentences(
    std::string_view text, const std::unordered_set<std::string> &abbreviations) {
  std::vector<Block> blocks;
  std::optional<Block> current;
  auto close = [&] {
    if (current) blocks.push_back(*current);
    current.reset();
  };

  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t eol = text.find('\n', pos);
    if (eol == std::string_view::npos) eol = text.size();
    std::size_t b = pos;
    while (b < eol && is_space(text[b])) ++b;
    std::size_t e = eol;
    while (e > b && is_space(text[e - 1])) --e;
    const std::string_view line = text.substr(b, e - b);
    pos = eol + 1;

    if (line.empty()) {
      close();
      continue;
    }
    if (line.front() == '#') {
      close();
      blocks.push_back({SentenceKind::kHeading, b, e, e});
      continue;
    }
    if (line.size() > 4 && line.substr(0, 2) == "**") {
      const std::size_t closing = line.find("**", 2);
      if (closing != std::string_view::npos) {
        const std::string_view rest = trim(line.substr(closing + 2));
        if (rest.empty() || rest == ":") {
          close();
          blocks.push_back({SentenceKind::kHeading, b, e, e});
          continue;
        }
        close();
        const std::size_t head_end = b + closing + 2;
        blocks.push_back({SentenceKind::kHeading, b, head_end, head_end});
        current = Block{SentenceKind::kProse, head_end, e, head_end};
        continue;
      }
    }
    if (const std::size_t marker = list_marker_len(line); marker > 0) {
      close();
      current = Block{SentenceKind::kListItem, b, e, b + marker};
      continue;
    }
    if (current) {
      current->end = e;
    } else {
      current = Block{SentenceKind::kProse, b, e, b};
    }
  }
  close();

  std::vector<SentenceSpan> out;
  for (const auto &block : blocks) {
    if (block.kind == SentenceKind::kHeading) {
      out.push_back({{block.begin, block.end}, SentenceKind::kHeading});
    } else {
      split_block(text, block, abbreviations, out);
    }
  }
  return out;
}

std::size_t count_words(std::string_view text) {
  std::size_t count = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t eol = text.find('\n', pos);
    if (eol == std::string_view::npos) eol = text.size();
    std::string_view line = trim(text.substr(pos, eol - pos));
    pos = eol + 1;
    while (!line.empty() && line.front() == '#') line.remove_prefix(1);
    if (const std::size_t marker = list_marker_len(line); marker > 0) {
      line.remove_prefix(marker);
    }
    bool in_token = false;
    bool has_alnum = false;
    for (std::size_t i = 0; i <= line.size(); ++i) {
      const bool space = i == line.size() || is_space(line[i]);
      if (space) {
        if (in_token && has_alnum) ++count;
        in_token = false;
        has_alnum = false;
        continue;
      }
      if (line[i] == '*' || line[i] == '`') continue;
      in_token = true;
      if (is_alnum_at(line, i)) has_alnum = true;
    }
  }
  return count;
}

}  // namespace synthehr
