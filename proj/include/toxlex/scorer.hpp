#pragma once

// Message scoring: matches -> 0-100 toxicity, the two binary flags, and the
// explanation spans that justify them.

#include <algorithm>
#include <cstdint>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "toxlex/detail/utf8.hpp"
#include "toxlex/error.hpp"
#include "toxlex/labels.hpp"
#include "toxlex/matcher.hpp"
#include "toxlex/textnorm.hpp"

namespace toxlex {

struct ScoreConfig {
  int points_per_level = 25;
  int antisemitic_threshold = 50;
  int violent_min_level = 2;
  int cap = 100;

  void validate() const {
    if (points_per_level <= 0 || points_per_level > 100)
      throw ConfigError("points_per_level must be in 1-100, got " + std::to_string(points_per_level));
    if (antisemitic_threshold < 0 || antisemitic_threshold > 100)
      throw ConfigError("antisemitic_threshold must be in 0-100, got " + std::to_string(antisemitic_threshold));
    if (violent_min_level < 0 || violent_min_level > 4)
      throw ConfigError("violent_min_level must be in 0-4, got " + std::to_string(violent_min_level));
    if (cap <= 0 || cap > 100) throw ConfigError("cap must be in 1-100, got " + std::to_string(cap));
  }
};

struct Explanation {
  std::string entry_id;
  std::vector<std::string> matched_surface;  // raw text under each span
  std::vector<CharSpan> char_spans;
  int consensus_score = 0;
  LabelSet labels;

  bool operator==(const Explanation&) const = default;
};

struct MessageScore {
  int toxicity = 0;
  bool antisemitic = false;
  bool violent = false;
  std::vector<Explanation> explanations;
  std::uint64_t lexicon_version = 0;

  bool operator==(const MessageScore&) const = default;
};

// Aggregates already-found matches. The capped sum counts each distinct
// entry once, however often it matched; every occurrence still gets an
// explanation.
inline MessageScore score_matches(const CompiledLexicon& compiled, const NormalizedText& text,
                                  std::span<const Match> matches, const ScoreConfig& config) {
  MessageScore out;
  out.lexicon_version = compiled.source_version();

  const std::vector<std::size_t> bytes =
      matches.empty() ? std::vector<std::size_t>{} : detail::code_point_offsets(text.raw);
  auto slice = [&](CharSpan s) {
    if (s.start >= s.end || s.end >= bytes.size()) throw IntegrityError("match span outside message text");
    return text.raw.substr(bytes[s.start], bytes[s.end] - bytes[s.start]);
  };

  std::vector<std::uint32_t> distinct;
  distinct.reserve(matches.size());
  for (const Match& m : matches) {
    const CompiledEntry& e = compiled.entry(m.entry_index);
    Explanation x;
    x.entry_id = e.id;
    x.char_spans = m.char_spans;
    for (CharSpan s : m.char_spans) x.matched_surface.push_back(slice(s));
    x.consensus_score = e.score;
    x.labels = e.labels;
    out.explanations.push_back(std::move(x));
    distinct.push_back(m.entry_index);
    if (e.labels.test(Label::kKill) && e.score >= config.violent_min_level) out.violent = true;
  }
  std::sort(distinct.begin(), distinct.end());
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());

  long total = 0;
  for (std::uint32_t e : distinct) total += static_cast<long>(compiled.entry(e).score) * config.points_per_level;
  out.toxicity = static_cast<int>(std::min<long>(total, config.cap));
  out.antisemitic = out.toxicity >= config.antisemitic_threshold;

  std::sort(out.explanations.begin(), out.explanations.end(), [](const Explanation& a, const Explanation& b) {
    if (a.char_spans != b.char_spans) return a.char_spans < b.char_spans;
    return a.entry_id < b.entry_id;
  });
  return out;
}

inline MessageScore score_text(const CompiledLexicon& compiled, const NormalizedText& text,
                               const ScoreConfig& config) {
  const std::vector<Match> matches = compiled.find_matches(text);
  return score_matches(compiled, text, matches, config);
}

inline MessageScore score_message(const CompiledLexicon& compiled, std::string_view raw, const ScoreConfig& config) {
  return score_text(compiled, normalize_text(raw), config);
}

enum class HighlightFormat { kPlain, kAnsi, kHtml };

namespace detail {

inline void append_html_escaped(std::string& out, std::string_view s) {
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      case '\'': out += "&#39;"; break;
      default: out += c;
    }
  }
}

}  // namespace detail

inline constexpr std::string_view kHighlightOpen = "«";
inline constexpr std::string_view kHighlightClose = "»";

// Wraps every explained span of `raw`. Overlapping spans are merged into one
// region that shows the union of their labels.
inline std::string render_highlights(std::string_view raw, const MessageScore& score, HighlightFormat format) {
  const std::vector<std::size_t> bytes = detail::code_point_offsets(raw);
  const std::size_t length = bytes.size() - 1;

  struct Region {
    CharSpan span;
    std::set<std::string> entries;
    int score = 0;
    LabelSet labels;
  };
  std::vector<Region> spans;
  for (const Explanation& x : score.explanations) {
    if (x.matched_surface.size() != x.char_spans.size()) throw IntegrityError("explanation surface/span mismatch");
    for (std::size_t k = 0; k < x.char_spans.size(); ++k) {
      const CharSpan s = x.char_spans[k];
      if (s.start >= s.end || s.end > length)
        throw IntegrityError("span [" + std::to_string(s.start) + "," + std::to_string(s.end) +
                             ") out of bounds for a text of " + std::to_string(length) + " characters");
      if (raw.substr(bytes[s.start], bytes[s.end] - bytes[s.start]) != x.matched_surface[k])
        throw IntegrityError("span text does not match the scored message");
      spans.push_back(Region{s, {x.entry_id}, x.consensus_score, x.labels});
    }
  }
  std::sort(spans.begin(), spans.end(), [](const Region& a, const Region& b) { return a.span < b.span; });

  std::vector<Region> merged;
  for (Region& r : spans) {
    if (!merged.empty() && r.span.start < merged.back().span.end) {
      Region& m = merged.back();
      m.span.end = std::max(m.span.end, r.span.end);
      m.entries.insert(r.entries.begin(), r.entries.end());
      m.score = std::max(m.score, r.score);
      m.labels |= r.labels;
    } else {
      merged.push_back(std::move(r));
    }
  }

  std::string out;
  std::size_t at = 0;
  auto text = [&](std::size_t from, std::size_t to) {
    std::string_view piece = raw.substr(bytes[from], bytes[to] - bytes[from]);
    if (format == HighlightFormat::kHtml) {
      detail::append_html_escaped(out, piece);
    } else {
      out += piece;
    }
  };
  for (const Region& r : merged) {
    text(at, r.span.start);
    switch (format) {
      case HighlightFormat::kPlain:
        out += kHighlightOpen;
        text(r.span.start, r.span.end);
        out += kHighlightClose;
        break;
      case HighlightFormat::kAnsi:
        out += r.score >= 3 ? "\x1b[1;31m" : "\x1b[1;33m";
        text(r.span.start, r.span.end);
        out += "\x1b[0m";
        break;
      case HighlightFormat::kHtml: {
        std::string ids;
        for (const std::string& id : r.entries) ids += (ids.empty() ? "" : " ") + id;
        std::string labels;
        for (const std::string& c : r.labels.codes()) labels += (labels.empty() ? "" : " ") + c;
        out += "<mark data-entry=\"";
        detail::append_html_escaped(out, ids);
        out += "\" data-score=\"" + std::to_string(r.score) + "\" data-labels=\"" + labels + "\">";
        text(r.span.start, r.span.end);
        out += "</mark>";
        break;
      }
    }
    at = r.span.end;
  }
  text(at, length);
  return out;
}

// Wire format shared by the CLI and the service.
inline nlohmann::json to_json(const MessageScore& s) {
  nlohmann::json explanations = nlohmann::json::array();
  for (const Explanation& x : s.explanations) {
    nlohmann::json spans = nlohmann::json::array();
    for (CharSpan c : x.char_spans) spans.push_back({c.start, c.end});
    explanations.push_back({{"entry_id", x.entry_id},
                            {"spans", spans},
                            {"surface", x.matched_surface},
                            {"score", x.consensus_score},
                            {"labels", x.labels.codes()}});
  }
  return {{"toxicity", s.toxicity},
          {"antisemitic", s.antisemitic},
          {"violent", s.violent},
          {"lexicon_version", s.lexicon_version},
          {"explanations", explanations}};
}

}  // namespace toxlex
