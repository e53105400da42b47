#pragma once

// Pseudonymization of authors and redaction of personal data in message
// text, applied before anything is stored or reported.
//
// Detectors only fire on whole tokens: a match must start and end at a
// whitespace or punctuation boundary, so redaction never splits a word and
// never creates a token that was not in the original text.

#include <openssl/evp.h>
#include <openssl/hmac.h>

#include <array>
#include <cctype>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "toxlex/detail/utf8.hpp"
#include "toxlex/error.hpp"
#include "toxlex/textnorm.hpp"

namespace toxlex {

inline constexpr std::size_t kMinSecretBytes = 16;
inline constexpr std::size_t kPseudonymLength = 16;

using Secret = std::vector<std::uint8_t>;

inline Secret secret_from_hex(std::string_view hex) {
  auto nibble = [](char c) -> int {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    return -1;
  };
  if (hex.size() % 2 != 0) throw ConfigError("secret hex string has odd length");
  Secret out;
  for (std::size_t i = 0; i < hex.size(); i += 2) {
    const int hi = nibble(hex[i]);
    const int lo = nibble(hex[i + 1]);
    if (hi < 0 || lo < 0) throw ConfigError("secret is not a hex string");
    out.push_back(static_cast<std::uint8_t>(hi * 16 + lo));
  }
  if (out.size() < kMinSecretBytes)
    throw ConfigError("secret must be at least " + std::to_string(kMinSecretBytes) + " bytes");
  return out;
}

// HMAC-SHA256 over "platform:author_id", hex, first 16 characters.
inline std::string pseudonymize_author(std::string_view platform, std::string_view author_id,
                                       std::span<const std::uint8_t> secret) {
  if (secret.size() < kMinSecretBytes)
    throw ConfigError("secret must be at least " + std::to_string(kMinSecretBytes) + " bytes");
  std::string message;
  message.reserve(platform.size() + 1 + author_id.size());
  message.append(platform).append(":").append(author_id);

  std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
  unsigned int length = 0;
  if (!HMAC(EVP_sha256(), secret.data(), static_cast<int>(secret.size()),
            reinterpret_cast<const unsigned char*>(message.data()), message.size(), digest.data(), &length))
    throw Error("HMAC computation failed");

  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < length && out.size() < kPseudonymLength; ++i) {
    out += kHex[digest[i] >> 4];
    out += kHex[digest[i] & 0xF];
  }
  return out;
}

enum class Detector { kUserMention, kUrl, kEmail, kPhone, kLongDigitId };

struct RedactionRule {
  std::string name;
  Detector detector;
  std::string placeholder;
};

struct RedactionRuleSet {
  std::vector<RedactionRule> rules;

  // Throws ConfigError for placeholders outside the closed set.
  void validate() const {
    for (const RedactionRule& r : rules) {
      bool known = false;
      for (std::string_view p : kPlaceholders) known = known || p == r.placeholder;
      if (!known) throw ConfigError("rule '" + r.name + "' uses unknown placeholder '" + r.placeholder + "'");
    }
  }

  static RedactionRuleSet defaults() {
    return {{
        {"url", Detector::kUrl, std::string(kPlaceholders[1])},
        {"email", Detector::kEmail, std::string(kPlaceholders[2])},
        {"user", Detector::kUserMention, std::string(kPlaceholders[0])},
        {"phone", Detector::kPhone, std::string(kPlaceholders[3])},
        {"id", Detector::kLongDigitId, std::string(kPlaceholders[4])},
    }};
  }
};

struct Redaction {
  std::string rule;
  CharSpan original_span;

  bool operator==(const Redaction&) const = default;
};

struct RedactedMessage {
  std::string text;
  std::vector<Redaction> redactions;
};

namespace detail {

struct Unit {
  char32_t c = 0;
  std::size_t begin = 0;  // code point range in the input
  std::size_t end = 0;
  int placeholder = -1;   // index into kPlaceholders, -1 for plain text
  int rule = -1;          // rule that produced it, -1 when it came from the input
};

class Scanner {
 public:
  explicit Scanner(const std::vector<Unit>& u) : u_(u) {}

  std::size_t match(Detector d, std::size_t i) const {
    if (!left_ok(i)) return 0;
    std::size_t end = 0;
    switch (d) {
      case Detector::kUserMention: end = user(i); break;
      case Detector::kUrl: end = url(i); break;
      case Detector::kEmail: end = email(i); break;
      case Detector::kPhone: end = phone(i); break;
      case Detector::kLongDigitId: end = digits_run(i); break;
    }
    if (end == 0 || !right_ok(end)) return 0;
    return end - i;
  }

 private:
  bool plain(std::size_t i) const { return i < u_.size() && u_[i].placeholder < 0; }
  char32_t at(std::size_t i) const { return plain(i) ? u_[i].c : 0; }

  static bool ascii_alnum(char32_t c) { return c < 0x80 && std::isalnum(static_cast<int>(c)); }
  static bool ascii_digit(char32_t c) { return c >= '0' && c <= '9'; }
  static bool ascii_alpha(char32_t c) { return c < 0x80 && std::isalpha(static_cast<int>(c)); }

  // How the tokenizer will see the character.
  static CharClass visible_class(char32_t c) {
    const char32_t copy = c;
    auto f = fold_char(copy);
    return f.empty() ? CharClass::kIgnorable : classify(f[0]);
  }
  static bool visible_leet_symbol(char32_t c) {
    const char32_t copy = c;
    auto f = fold_char(copy);
    return f.size() == 1 && is_leet_symbol(f[0]);
  }
  static bool is_boundary(char32_t c) {
    const CharClass k = visible_class(c);
    return (k == CharClass::kSpace || k == CharClass::kSeparator) && !visible_leet_symbol(c);
  }

  bool left_ok(std::size_t i) const {
    std::size_t j = i;
    while (j > 0 && plain(j - 1) && visible_class(u_[j - 1].c) == CharClass::kIgnorable) --j;
    if (j == 0 || !plain(j - 1)) return true;
    return is_boundary(u_[j - 1].c);
  }

  bool right_ok(std::size_t e) const {
    auto skip = [&](std::size_t j) {
      while (plain(j) && visible_class(u_[j].c) == CharClass::kIgnorable) ++j;
      return j;
    };
    std::size_t j = skip(e);
    while (plain(j) && visible_leet_symbol(u_[j].c)) j = skip(j + 1);
    if (j >= u_.size() || !plain(j)) return true;
    return is_boundary(u_[j].c);
  }

  std::size_t user(std::size_t i) const {
    if (at(i) != '@') return 0;
    std::size_t j = i + 1;
    while (plain(j) && (ascii_alnum(at(j)) || at(j) == '_')) ++j;
    if (j == i + 1 || j - i - 1 > 30) return 0;
    return j;
  }

  bool starts_with_ci(std::size_t i, std::string_view s) const {
    for (std::size_t k = 0; k < s.size(); ++k) {
      const char32_t c = at(i + k);
      if (c >= 0x80 || std::tolower(static_cast<int>(c)) != s[k]) return false;
    }
    return true;
  }

  std::size_t url(std::size_t i) const {
    std::size_t j = 0;
    if (starts_with_ci(i, "https://")) j = i + 8;
    else if (starts_with_ci(i, "http://")) j = i + 7;
    else if (starts_with_ci(i, "www.")) j = i + 4;
    else return 0;
    const std::size_t body = j;
    while (plain(j) && visible_class(at(j)) != CharClass::kSpace && at(j) != '<' && at(j) != '>' && at(j) != '"')
      ++j;
    static constexpr std::u32string_view kTrailing = U".,;:!?)]}'\"";
    while (j > body && kTrailing.find(at(j - 1)) != std::u32string_view::npos) --j;
    return j > body ? j : 0;
  }

  std::size_t email(std::size_t i) const {
    if (!ascii_alnum(at(i))) return 0;
    std::size_t j = i;
    while (plain(j) && (ascii_alnum(at(j)) || at(j) == '.' || at(j) == '_' || at(j) == '%' || at(j) == '+' ||
                        at(j) == '-'))
      ++j;
    if (at(j) != '@') return 0;
    const std::size_t domain = ++j;
    while (plain(j) && (ascii_alnum(at(j)) || at(j) == '.' || at(j) == '-')) ++j;
    while (j > domain && (at(j - 1) == '.' || at(j - 1) == '-')) --j;
    // At least two labels, none empty, alphabetic TLD of 2+ letters.
    std::size_t labels = 1;
    std::size_t label_len = 0;
    std::size_t tld_alpha = 0;
    for (std::size_t k = domain; k < j; ++k) {
      if (at(k) == '.') {
        if (label_len == 0) return 0;
        ++labels;
        label_len = 0;
        tld_alpha = 0;
      } else {
        ++label_len;
        tld_alpha = ascii_alpha(at(k)) && tld_alpha == label_len - 1 ? tld_alpha + 1 : 0;
      }
    }
    if (labels < 2 || label_len == 0 || tld_alpha < 2 || tld_alpha != label_len) return 0;
    return j;
  }

  std::size_t digits_run(std::size_t i) const {
    std::size_t j = i;
    while (ascii_digit(at(j))) ++j;
    return j - i >= 10 ? j : 0;
  }

  std::size_t count_digits(std::size_t i, std::size_t n) const {
    std::size_t j = i;
    while (j < i + n && ascii_digit(at(j))) ++j;
    return j - i;
  }

  std::size_t phone(std::size_t i) const {
    if (at(i) == '+') {
      // International form: +, then digits with single spaces, dots, dashes
      // or parentheses between them; 7-15 digits in total.
      if (!ascii_digit(at(i + 1))) return 0;
      auto is_sep = [](char32_t c) { return c == ' ' || c == '-' || c == '.' || c == '(' || c == ')'; };
      std::size_t j = i + 1;
      std::size_t digits = 0;
      std::size_t last_digit_end = 0;
      while (plain(j)) {
        if (ascii_digit(at(j))) {
          ++digits;
          last_digit_end = ++j;
          continue;
        }
        std::size_t k = j;
        while (plain(k) && is_sep(at(k))) ++k;
        if (k == j || k - j > 2 || !ascii_digit(at(k))) break;
        j = k;
      }
      return digits >= 7 && digits <= 15 ? last_digit_end : 0;
    }
    if (at(i) == '(') {
      // (ddd) ddd-dddd
      if (count_digits(i + 1, 3) != 3 || at(i + 4) != ')') return 0;
      std::size_t j = i + 5;
      if (at(j) == ' ') ++j;
      if (count_digits(j, 3) != 3 || (at(j + 3) != '-' && at(j + 3) != '.')) return 0;
      if (count_digits(j + 4, 4) != 4 || ascii_digit(at(j + 8))) return 0;
      return j + 8;
    }
    // ddd-dddd or ddd-ddd-dddd, with '-' or '.'
    if (count_digits(i, 3) != 3 || ascii_digit(at(i + 3))) return 0;
    const char32_t sep = at(i + 3);
    if (sep != '-' && sep != '.') return 0;
    if (count_digits(i + 4, 4) == 4 && !ascii_digit(at(i + 8))) return i + 8;
    if (count_digits(i + 4, 3) == 3 && at(i + 7) == sep && count_digits(i + 8, 4) == 4 && !ascii_digit(at(i + 12)))
      return i + 12;
    return 0;
  }

  const std::vector<Unit>& u_;
};

}  // namespace detail

// Replaces personal data with placeholders. Rules run in order at each
// position, left to right; the pass repeats until nothing changes, which
// makes the result a fixed point.
inline RedactedMessage redact(std::string_view text, const RedactionRuleSet& rules = RedactionRuleSet::defaults()) {
  const std::u32string cps = detail::decode_utf8(text);

  std::vector<detail::Unit> units;
  units.reserve(cps.size());
  for (std::size_t i = 0; i < cps.size();) {
    if (const std::size_t len = detail::placeholder_at(cps, i); len != 0) {
      int which = 0;
      for (std::size_t p = 0; p < kPlaceholders.size(); ++p) {
        const std::u32string lit = detail::decode_utf8(kPlaceholders[p]);
        bool eq = lit.size() == len;
        for (std::size_t k = 0; eq && k < len; ++k) eq = detail::ascii_upper(cps[i + k]) == lit[k];
        if (eq) which = static_cast<int>(p);
      }
      units.push_back({0, i, i + len, which, -1});
      i += len;
    } else {
      units.push_back({cps[i], i, i + 1, -1, -1});
      ++i;
    }
  }

  auto placeholder_index = [](std::string_view p) {
    for (std::size_t k = 0; k < kPlaceholders.size(); ++k)
      if (kPlaceholders[k] == p) return static_cast<int>(k);
    throw ConfigError("unknown placeholder '" + std::string(p) + "'");
  };

  bool changed = true;
  while (changed) {
    changed = false;
    std::vector<detail::Unit> next;
    next.reserve(units.size());
    detail::Scanner scan(units);
    for (std::size_t i = 0; i < units.size();) {
      if (units[i].placeholder >= 0) {
        next.push_back(units[i++]);
        continue;
      }
      std::size_t len = 0;
      std::size_t r = 0;
      for (; r < rules.rules.size(); ++r)
        if ((len = scan.match(rules.rules[r].detector, i)) != 0) break;
      if (len == 0) {
        next.push_back(units[i++]);
        continue;
      }
      next.push_back({0, units[i].begin, units[i + len - 1].end, placeholder_index(rules.rules[r].placeholder),
                      static_cast<int>(r)});
      i += len;
      changed = true;
    }
    units = std::move(next);
  }

  RedactedMessage out;
  for (const detail::Unit& u : units) {
    if (u.placeholder < 0) {
      detail::append_utf8(out.text, u.c);
    } else if (u.rule < 0) {
      out.text += detail::encode_utf8(std::u32string_view(cps).substr(u.begin, u.end - u.begin));
    } else {
      out.text += kPlaceholders[static_cast<std::size_t>(u.placeholder)];
      out.redactions.push_back({rules.rules[static_cast<std::size_t>(u.rule)].name, {u.begin, u.end}});
    }
  }
  return out;
}

}  // namespace toxlex
