#pragma once

// Text normalization: raw message text -> token stream that is robust to
// casing, diacritics, leetspeak, elongation and separator obfuscation, with
// every token carrying its span in the raw text.
//
// Pipeline, applied in this order:
//   1. Unicode compatibility decomposition, non-spacing marks removed
//   2. lowercase
//   3. leet substitution for letter-adjacent digits and symbols
//   4. runs of 3+ identical letters collapsed to 2
//   5. single characters joined across a uniform separator ("k-i-k-e")
//   6. split on whitespace and punctuation
//
// Spans are half-open ranges of code point indices into the raw text.

#include <algorithm>
#include <array>
#include <cstddef>
#include <cstdint>
#include <iterator>
#include <string>
#include <string_view>
#include <vector>

#include "toxlex/detail/unicode_tables.hpp"
#include "toxlex/detail/utf8.hpp"
#include "toxlex/error.hpp"

namespace toxlex {

enum class CharClass : std::uint8_t {
  kLetter = 0,
  kDigit = 1,
  kSeparator = 2,
  kSymbol = 3,  // emoji and other non-ASCII symbols; one token per character
  kIgnorable = 4,
  kOther = 5,  // word characters without case or leet behaviour
  kSpace = 6,
};

struct CharSpan {
  std::size_t start = 0;
  std::size_t end = 0;

  std::size_t size() const { return end - start; }
  bool operator==(const CharSpan&) const = default;
  auto operator<=>(const CharSpan&) const = default;
};

struct Token {
  std::string normalized;
  CharSpan original_span;

  bool operator==(const Token&) const = default;
};

struct NormalizedText {
  std::string raw;
  std::vector<Token> tokens;
};

// Redaction placeholders survive normalization as single opaque tokens.
inline constexpr std::array<std::string_view, 5> kPlaceholders = {
    "⟨USER⟩", "⟨URL⟩", "⟨EMAIL⟩", "⟨PHONE⟩", "⟨ID⟩"};

inline bool is_placeholder_token(std::string_view normalized) {
  return normalized.starts_with("⟨");
}

// Leet substitutions, published so other front ends can mirror them.
inline constexpr std::array<std::pair<char, char>, 9> kLeetMap = {{
    {'0', 'o'}, {'1', 'i'}, {'3', 'e'}, {'4', 'a'}, {'5', 's'}, {'7', 't'}, {'@', 'a'}, {'$', 's'}, {'!', 'i'},
}};

inline char leet_substitute(char32_t c) {
  for (auto [from, to] : kLeetMap)
    if (c == static_cast<char32_t>(from)) return to;
  return 0;
}

inline bool is_leet_symbol(char32_t c) { return c == '@' || c == '$' || c == '!'; }

// Class of a character as the tokenizer sees it after folding.
inline CharClass classify(char32_t c) {
  if (c < 0x80) {
    if ((c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z')) return CharClass::kLetter;
    if (c >= '0' && c <= '9') return CharClass::kDigit;
    if (c == ' ' || (c >= '\t' && c <= '\r')) return CharClass::kSpace;
    return CharClass::kSeparator;
  }
  const auto& ranges = detail::kClassRanges;
  auto it = std::upper_bound(std::begin(ranges), std::end(ranges), c,
                             [](char32_t v, const detail::ClassRange& r) { return v < r.first; });
  if (it != std::begin(ranges)) {
    --it;
    if (c <= it->last) return static_cast<CharClass>(it->cls);
  }
  return CharClass::kOther;
}

// Steps 1 and 2 for a single code point. Returns the folded characters; an
// empty result means the character is dropped.
inline std::u32string_view fold_char(const char32_t& c) {
  if (c < 0x80) {
    static constexpr auto kLower = [] {
      std::array<char32_t, 128> t{};
      for (char32_t i = 0; i < 128; ++i) t[i] = (i >= 'A' && i <= 'Z') ? i + 32 : i;
      return t;
    }();
    return {&kLower[c], 1};
  }
  const auto& table = detail::kFoldTable;
  auto it = std::lower_bound(std::begin(table), std::end(table), c,
                             [](const detail::FoldEntry& e, char32_t v) { return e.code < v; });
  if (it != std::end(table) && it->code == c) return {detail::kFoldPool + it->offset, it->length};
  if (classify(c) == CharClass::kIgnorable) return {};
  return {&c, 1};
}

namespace detail {

struct Folded {
  char32_t c;
  std::uint32_t src;
  CharClass cls;
  bool dropped = false;
};

inline bool is_word(CharClass k) {
  return k == CharClass::kLetter || k == CharClass::kDigit || k == CharClass::kOther;
}

inline bool breaks_chunk(const Folded& f) {
  return (f.cls == CharClass::kSpace || f.cls == CharClass::kSeparator) && !is_leet_symbol(f.c);
}

// Step 3 over f[begin, end), which must be one chunk.
inline void apply_leet(std::vector<Folded>& f, std::size_t begin, std::size_t end) {
  auto eligible = [&](std::size_t i) {
    return is_leet_symbol(f[i].c) || (f[i].cls == CharClass::kDigit && leet_substitute(f[i].c) != 0);
  };
  std::size_t i = begin;
  while (i < end) {
    if (!eligible(i)) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < end && eligible(j)) ++j;
    const bool followed = j < end && f[j].cls == CharClass::kLetter;
    const bool preceded = i > begin && f[i - 1].cls == CharClass::kLetter;
    if (followed) {
      for (std::size_t k = i; k < j; ++k) f[k].c = leet_substitute(f[k].c), f[k].cls = CharClass::kLetter;
    } else if (preceded) {
      for (std::size_t k = i; k < j && f[k].cls == CharClass::kDigit; ++k)
        f[k].c = leet_substitute(f[k].c), f[k].cls = CharClass::kLetter;
    }
    i = j;
  }
}

// Step 4; marks the surplus letters as dropped.
inline void collapse_repeats(std::vector<Folded>& f, std::size_t begin, std::size_t end) {
  std::size_t i = begin;
  while (i < end) {
    std::size_t j = i + 1;
    if (f[i].cls == CharClass::kLetter && !f[i].dropped) {
      while (j < end && f[j].cls == CharClass::kLetter && f[j].c == f[i].c) ++j;
      for (std::size_t k = i + 2; k < j; ++k) f[k].dropped = true;
    }
    i = j;
  }
}

struct FineToken {
  std::size_t first;  // index into folded chars
  std::size_t last;   // inclusive
  std::u32string text;
};

inline std::u32string kept_text(const std::vector<Folded>& f, std::size_t first, std::size_t last) {
  std::u32string s;
  for (std::size_t k = first; k <= last; ++k)
    if (!f[k].dropped) s.push_back(f[k].c);
  return s;
}

inline void emit(std::vector<Token>& out, const std::vector<Folded>& f, std::size_t first, std::size_t last,
                 std::u32string_view text) {
  out.push_back(Token{encode_utf8(text), CharSpan{f[first].src, f[last].src + std::size_t{1}}});
}

// Steps 3 to 6 over one placeholder-free piece of folded text.
inline void tokenize_piece(std::vector<Folded>& f, std::vector<Token>& out) {
  const std::size_t n = f.size();
  for (std::size_t i = 0; i < n;) {
    if (breaks_chunk(f[i])) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < n && !breaks_chunk(f[j])) ++j;
    apply_leet(f, i, j);
    collapse_repeats(f, i, j);
    i = j;
  }

  std::vector<FineToken> fine;
  for (std::size_t i = 0; i < n;) {
    if (f[i].cls == CharClass::kSymbol) {
      fine.push_back({i, i, std::u32string(1, f[i].c)});
      ++i;
    } else if (is_word(f[i].cls)) {
      std::size_t j = i;
      while (j < n && is_word(f[j].cls)) ++j;
      fine.push_back({i, j - 1, kept_text(f, i, j - 1)});
      i = j;
    } else {
      ++i;
    }
  }

  auto single = [&](std::size_t t) {
    return fine[t].text.size() == 1 &&
           (classify(fine[t].text[0]) == CharClass::kLetter || classify(fine[t].text[0]) == CharClass::kDigit);
  };
  // Separator character between token t and t+1, or 0 when the gap is not a
  // single non-space separator.
  auto gap = [&](std::size_t t) -> char32_t {
    const std::size_t a = fine[t].last + 1;
    if (fine[t + 1].first != a + 1) return 0;
    return f[a].cls == CharClass::kSeparator ? f[a].c : 0;
  };

  for (std::size_t t = 0; t < fine.size();) {
    std::size_t u = t;
    if (single(t) && t + 1 < fine.size()) {
      const char32_t g = gap(t);
      while (g != 0 && u + 1 < fine.size() && single(u + 1) && gap(u) == g) ++u;
    }
    if (u - t + 1 >= 3) {
      std::vector<Folded> joined;
      for (std::size_t k = t; k <= u; ++k) {
        const char32_t c = fine[k].text[0];
        joined.push_back({c, 0, classify(c)});
      }
      apply_leet(joined, 0, joined.size());
      collapse_repeats(joined, 0, joined.size());
      emit(out, f, fine[t].first, fine[u].last, kept_text(joined, 0, joined.size() - 1));
      t = u + 1;
    } else {
      emit(out, f, fine[t].first, fine[t].last, fine[t].text);
      ++t;
    }
  }
}

inline char32_t ascii_upper(char32_t c) { return (c >= 'a' && c <= 'z') ? c - 32 : c; }

// Length of the placeholder starting at raw[i], or 0.
inline std::size_t placeholder_at(const std::u32string& raw, std::size_t i) {
  if (raw[i] != 0x27E8) return 0;
  for (std::string_view p : kPlaceholders) {
    const std::u32string u = decode_utf8(p);
    if (i + u.size() > raw.size()) continue;
    bool eq = true;
    for (std::size_t k = 0; k < u.size() && eq; ++k) eq = ascii_upper(raw[i + k]) == u[k];
    if (eq) return u.size();
  }
  return 0;
}

}  // namespace detail

inline NormalizedText normalize_text(std::string_view raw) {
  NormalizedText out;
  out.raw = std::string(raw);
  const std::u32string cps = detail::decode_utf8(raw);

  std::vector<detail::Folded> piece;
  auto flush = [&] {
    detail::tokenize_piece(piece, out.tokens);
    piece.clear();
  };

  for (std::size_t i = 0; i < cps.size();) {
    if (const std::size_t len = detail::placeholder_at(cps, i); len != 0) {
      flush();
      std::u32string lowered;
      for (std::size_t k = 0; k < len; ++k) {
        const char32_t c = cps[i + k];
        lowered.push_back((c >= 'A' && c <= 'Z') ? c + 32 : c);
      }
      out.tokens.push_back(Token{detail::encode_utf8(lowered), CharSpan{i, i + len}});
      i += len;
      continue;
    }
    for (char32_t c : fold_char(cps[i]))
      piece.push_back({c, static_cast<std::uint32_t>(i), classify(c)});
    ++i;
  }
  flush();
  return out;
}

// Normalizes one lexicon word with the same pipeline as message text, so
// matching is closed under normalization. The word must yield exactly one
// token.
inline std::string normalize_pattern_token(std::string_view word) {
  NormalizedText n = normalize_text(word);
  if (n.tokens.empty()) throw SyntaxError("pattern word '" + std::string(word) + "' is empty after normalization");
  if (n.tokens.size() > 1)
    throw SyntaxError("pattern word '" + std::string(word) + "' normalizes to more than one token");
  return std::move(n.tokens.front().normalized);
}

}  // namespace toxlex
