#pragma once

// Pattern mini-language for lexicon entries.
//
//   blood libel              PHRASE: consecutive tokens
//   filthy/degenerate jew    '/' separates alternatives within a slot
//   gas/kill + jews          COMBO: left group, then right group within a window
//   gas/kill + jews ~5       window override (1-10 tokens between the groups)
//
// Words pass through normalize_text; a word that splits into several tokens
// ("bagel-eating") becomes several slots unless it is one of several
// alternatives, where it must stay a single token.

#include <algorithm>
#include <cctype>
#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "toxlex/error.hpp"
#include "toxlex/textnorm.hpp"

namespace toxlex {

enum class PatternKind { kPhrase, kCombo };

// Sorted, de-duplicated normalized tokens.
using Slot = std::vector<std::string>;

inline constexpr int kDefaultWindow = 3;
inline constexpr int kMinWindow = 1;
inline constexpr int kMaxWindow = 10;

struct Pattern {
  PatternKind kind = PatternKind::kPhrase;
  std::vector<Slot> left;   // the whole phrase for PHRASE
  std::vector<Slot> right;  // empty for PHRASE
  int window = kDefaultWindow;

  bool operator==(const Pattern&) const = default;

  // Stable textual form; two patterns are the same iff their canonical forms are.
  std::string canonical() const {
    auto group = [](const std::vector<Slot>& slots) {
      std::string s;
      for (const Slot& slot : slots) {
        if (!s.empty()) s += ' ';
        for (std::size_t i = 0; i < slot.size(); ++i) {
          if (i) s += '/';
          s += slot[i];
        }
      }
      return s;
    };
    std::string out = group(left);
    if (kind == PatternKind::kCombo) {
      out += " + " + group(right);
      if (window != kDefaultWindow) out += " ~" + std::to_string(window);
    }
    return out;
  }
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

inline std::vector<Slot> parse_group(std::string_view text, std::string_view whole) {
  // Glue "a / b" into "a/b" before splitting on whitespace.
  std::string glued;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      std::size_t j = i;
      while (j < text.size() && std::isspace(static_cast<unsigned char>(text[j]))) ++j;
      const bool next_slash = j < text.size() && text[j] == '/';
      const bool prev_slash = !glued.empty() && glued.back() == '/';
      if (!next_slash && !prev_slash && !glued.empty() && j < text.size()) glued += ' ';
      i = j - 1;
    } else {
      glued += c;
    }
  }

  std::vector<Slot> slots;
  std::size_t pos = 0;
  while (pos < glued.size()) {
    std::size_t end = glued.find(' ', pos);
    if (end == std::string::npos) end = glued.size();
    std::string_view word(glued.data() + pos, end - pos);
    pos = end + 1;

    std::vector<std::string_view> alts;
    std::size_t a = 0;
    while (true) {
      std::size_t b = word.find('/', a);
      alts.push_back(word.substr(a, b == std::string_view::npos ? std::string_view::npos : b - a));
      if (b == std::string_view::npos) break;
      a = b + 1;
    }
    for (std::string_view alt : alts)
      if (alt.empty()) throw SyntaxError("empty alternative in pattern '" + std::string(whole) + "'");

    if (alts.size() == 1) {
      NormalizedText n = normalize_text(alts.front());
      if (n.tokens.empty())
        throw SyntaxError("word '" + std::string(alts.front()) + "' is empty after normalization in pattern '" +
                          std::string(whole) + "'");
      for (Token& t : n.tokens) slots.push_back(Slot{std::move(t.normalized)});
    } else {
      Slot slot;
      for (std::string_view alt : alts) slot.push_back(normalize_pattern_token(alt));
      std::sort(slot.begin(), slot.end());
      slot.erase(std::unique(slot.begin(), slot.end()), slot.end());
      slots.push_back(std::move(slot));
    }
  }
  if (slots.empty()) throw SyntaxError("empty slot group in pattern '" + std::string(whole) + "'");
  return slots;
}

}  // namespace detail

inline Pattern parse_pattern(std::string_view text) {
  std::string_view body = detail::trim(text);
  if (body.empty()) throw SyntaxError("empty pattern");

  Pattern p;
  bool has_window = false;
  if (std::size_t tilde = body.rfind('~'); tilde != std::string_view::npos) {
    std::string_view num = detail::trim(body.substr(tilde + 1));
    if (num.empty() || !std::all_of(num.begin(), num.end(), [](char c) { return c >= '0' && c <= '9'; }))
      throw SyntaxError("window suffix must be '~N' in pattern '" + std::string(text) + "'");
    if (num.size() > 2 || std::stoi(std::string(num)) < kMinWindow || std::stoi(std::string(num)) > kMaxWindow)
      throw RangeError("window " + std::string(num) + " outside 1-10 in pattern '" + std::string(text) + "'");
    p.window = std::stoi(std::string(num));
    has_window = true;
    body = detail::trim(body.substr(0, tilde));
  }

  const std::size_t plus = body.find('+');
  if (plus != std::string_view::npos && body.find('+', plus + 1) != std::string_view::npos)
    throw SyntaxError("more than one '+' in pattern '" + std::string(text) + "'");

  if (plus == std::string_view::npos) {
    if (has_window) throw SyntaxError("window suffix without '+' in pattern '" + std::string(text) + "'");
    p.kind = PatternKind::kPhrase;
    p.left = detail::parse_group(body, text);
  } else {
    p.kind = PatternKind::kCombo;
    p.left = detail::parse_group(detail::trim(body.substr(0, plus)), text);
    p.right = detail::parse_group(detail::trim(body.substr(plus + 1)), text);
  }
  return p;
}

}  // namespace toxlex
