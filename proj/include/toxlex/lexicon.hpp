#pragma once

// The curated lexicon: one row per word or word combination, two annotator
// scores on the 0-4 scale, and 14 category flags.
//
// On-disk form is UTF-8 TSV with a fixed header:
//
//   id WORD TRANSLATION LANG SCORE_A SCORE_B HATE SHIT ... SLUR CONTEXT
//
// The id column is optional on input. Label columns hold 1/0, score cells are
// empty for an annotator who has not scored the entry yet.

#include <algorithm>
#include <array>
#include <cctype>
#include <chrono>
#include <cstdint>
#include <istream>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "toxlex/error.hpp"
#include "toxlex/labels.hpp"
#include "toxlex/pattern.hpp"

namespace toxlex {

enum class Language { kEn, kDe };

inline std::string_view language_code(Language l) { return l == Language::kEn ? "en" : "de"; }

inline std::optional<Language> language_from_code(std::string_view s) {
  if (s == "en") return Language::kEn;
  if (s == "de") return Language::kDe;
  return std::nullopt;
}

inline constexpr int kMinScore = 0;
inline constexpr int kMaxScore = 4;

struct Annotation {
  std::string annotator_id;
  int score = 0;
  LabelSet labels;
  std::chrono::sys_seconds timestamp{};
};

class Consensus {
 public:
  enum class State { kScored, kDisputed, kUnscored };

  static Consensus scored(int s) { return Consensus(State::kScored, s); }
  static Consensus disputed() { return Consensus(State::kDisputed, 0); }
  static Consensus unscored() { return Consensus(State::kUnscored, 0); }

  State state() const { return state_; }
  bool is_scored() const { return state_ == State::kScored; }
  bool is_disputed() const { return state_ == State::kDisputed; }
  bool is_unscored() const { return state_ == State::kUnscored; }
  int score() const { return score_; }

  bool operator==(const Consensus&) const = default;

  std::string to_string() const {
    switch (state_) {
      case State::kScored:
        return std::to_string(score_);
      case State::kDisputed:
        return "DISPUTED";
      case State::kUnscored:
        break;
    }
    return "UNSCORED";
  }

 private:
  Consensus(State st, int s) : state_(st), score_(s) {}
  State state_ = State::kUnscored;
  int score_ = 0;
};

// Mean rounded half up when no two scores differ by more than one point,
// DISPUTED otherwise.
inline Consensus merge_scores(std::span<const int> scores) {
  if (scores.empty()) throw PreconditionError("merge_annotations needs at least one annotation");
  const auto [lo, hi] = std::minmax_element(scores.begin(), scores.end());
  if (*hi - *lo > 1) return Consensus::disputed();
  long sum = 0;
  for (int s : scores) sum += s;
  const long n = static_cast<long>(scores.size());
  return Consensus::scored(static_cast<int>((2 * sum + n) / (2 * n)));
}

inline Consensus merge_annotations(std::span<const Annotation> annotations) {
  std::vector<int> scores;
  scores.reserve(annotations.size());
  for (const Annotation& a : annotations) scores.push_back(a.score);
  return merge_scores(scores);
}

enum class EntryStatus { kOk, kDisputed, kProvisional };

inline std::string_view status_name(EntryStatus s) {
  switch (s) {
    case EntryStatus::kOk:
      return "OK";
    case EntryStatus::kDisputed:
      return "DISPUTED";
    case EntryStatus::kProvisional:
      break;
  }
  return "PROVISIONAL";
}

inline std::optional<EntryStatus> status_from_name(std::string_view s) {
  if (s == "OK") return EntryStatus::kOk;
  if (s == "DISPUTED") return EntryStatus::kDisputed;
  if (s == "PROVISIONAL") return EntryStatus::kProvisional;
  return std::nullopt;
}

// Entries carry at most this many annotations, one per score column.
inline constexpr std::size_t kMaxAnnotators = 2;

struct LexiconEntry {
  std::string id;
  std::string pattern;  // source text in the pattern mini-language
  Pattern parsed;
  Language language = Language::kEn;
  std::optional<std::string> translation;
  std::vector<Annotation> annotations;
  Consensus consensus = Consensus::unscored();
  LabelSet labels;

  PatternKind kind() const { return parsed.kind; }

  EntryStatus status() const {
    if (consensus.is_unscored()) return EntryStatus::kProvisional;
    if (consensus.is_disputed()) return EntryStatus::kDisputed;
    return EntryStatus::kOk;
  }

  // Re-derives consensus and label union from the annotations.
  void refresh() {
    consensus = annotations.empty() ? Consensus::unscored() : merge_annotations(annotations);
    labels = LabelSet{};
    for (const Annotation& a : annotations) labels |= a.labels;
  }

  // Score per TSV column; annotators named "A" and "B" keep their column,
  // anyone else fills the first free one.
  std::array<std::optional<int>, kMaxAnnotators> column_scores() const {
    std::array<std::optional<int>, kMaxAnnotators> cols;
    std::vector<const Annotation*> rest;
    for (const Annotation& a : annotations) {
      if (a.annotator_id == "A" && !cols[0]) {
        cols[0] = a.score;
      } else if (a.annotator_id == "B" && !cols[1]) {
        cols[1] = a.score;
      } else {
        rest.push_back(&a);
      }
    }
    for (const Annotation* a : rest)
      for (auto& c : cols)
        if (!c) {
          c = a->score;
          break;
        }
    return cols;
  }

  // Equality over everything the TSV form carries.
  bool same_content(const LexiconEntry& o) const {
    return id == o.id && pattern == o.pattern && language == o.language && translation == o.translation &&
           column_scores() == o.column_scores() && consensus == o.consensus && labels == o.labels;
  }
};

class Lexicon {
 public:
  Lexicon() = default;

  const std::map<std::string, LexiconEntry, std::less<>>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }
  std::uint64_t version() const { return version_; }

  std::set<Language> languages() const {
    std::set<Language> out;
    for (const auto& [id, e] : entries_) out.insert(e.language);
    return out;
  }

  const LexiconEntry* find(std::string_view id) const {
    auto it = entries_.find(id);
    return it == entries_.end() ? nullptr : &it->second;
  }

  bool contains_pattern(std::string_view canonical, Language lang) const {
    return keys_.count({std::string(canonical), lang}) != 0;
  }

  bool contains_pattern_any_language(std::string_view canonical) const {
    return contains_pattern(canonical, Language::kEn) || contains_pattern(canonical, Language::kDe);
  }

  // Adds an entry without touching the version. Throws on a duplicate id or
  // a duplicate (pattern, language).
  void add(LexiconEntry e) {
    if (entries_.count(e.id)) throw SchemaError("duplicate entry id '" + e.id + "'");
    auto key = std::make_pair(e.parsed.canonical(), e.language);
    if (keys_.count(key))
      throw SchemaError("duplicate pattern '" + key.first + "' for language " +
                        std::string(language_code(e.language)));
    keys_.insert(std::move(key));
    entries_.emplace(e.id, std::move(e));
  }

  void set_version(std::uint64_t v) { version_ = v; }

  LexiconEntry& mutable_entry(std::string_view id) {
    auto it = entries_.find(id);
    if (it == entries_.end()) throw NotFoundError("unknown entry id '" + std::string(id) + "'");
    return it->second;
  }

 private:
  std::map<std::string, LexiconEntry, std::less<>> entries_;
  std::set<std::pair<std::string, Language>> keys_;
  std::uint64_t version_ = 1;
};

namespace detail {

inline std::vector<std::string_view> split_tabs(std::string_view line) {
  std::vector<std::string_view> cells;
  std::size_t pos = 0;
  while (true) {
    std::size_t tab = line.find('\t', pos);
    if (tab == std::string_view::npos) {
      cells.push_back(line.substr(pos));
      break;
    }
    cells.push_back(line.substr(pos, tab - pos));
    pos = tab + 1;
  }
  return cells;
}

inline std::string upper_ascii(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return out;
}

// "en:blood_libel" style id for files without an id column.
inline std::string derive_id(const Pattern& p, Language lang) {
  std::string id(language_code(lang));
  id += ':';
  bool sep = false;
  for (unsigned char c : p.canonical()) {
    if (std::isalnum(c) || c >= 0x80) {
      if (sep && id.back() != ':') id += '_';
      id += static_cast<char>(c);
      sep = false;
    } else {
      sep = true;
    }
  }
  return id;
}

}  // namespace detail

inline Lexicon parse_lexicon(std::istream& in) {
  enum Column { kId, kWord, kTranslation, kLang, kScoreA, kScoreB };
  std::string line;
  std::size_t line_no = 0;

  if (!std::getline(in, line)) throw SchemaError("missing header row", 1);
  ++line_no;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line.starts_with("\xEF\xBB\xBF")) line.erase(0, 3);

  const auto header = detail::split_tabs(line);
  std::array<std::optional<std::size_t>, 6> fixed;
  std::array<std::optional<std::size_t>, kLabelCount> label_col;
  for (std::size_t c = 0; c < header.size(); ++c) {
    const std::string name = detail::upper_ascii(detail::trim(header[c]));
    std::optional<std::size_t>* slot = nullptr;
    if (name == "ID") slot = &fixed[kId];
    else if (name == "WORD") slot = &fixed[kWord];
    else if (name == "TRANSLATION") slot = &fixed[kTranslation];
    else if (name == "LANG") slot = &fixed[kLang];
    else if (name == "SCORE_A") slot = &fixed[kScoreA];
    else if (name == "SCORE_B") slot = &fixed[kScoreB];
    else if (auto l = label_from_code(name)) slot = &label_col[static_cast<std::size_t>(*l)];
    else throw SchemaError("unknown column '" + std::string(header[c]) + "'", line_no, c + 1);
    if (*slot) throw SchemaError("duplicate column '" + std::string(header[c]) + "'", line_no, c + 1);
    *slot = c;
  }
  static constexpr std::array<std::string_view, 6> kFixedNames = {"id", "WORD", "TRANSLATION", "LANG", "SCORE_A",
                                                                  "SCORE_B"};
  for (std::size_t f = kWord; f < fixed.size(); ++f)
    if (!fixed[f]) throw SchemaError("missing column " + std::string(kFixedNames[f]), line_no);
  for (std::size_t l = 0; l < kLabelCount; ++l)
    if (!label_col[l]) throw SchemaError("missing label column " + std::string(kLabelCodes[l]), line_no);

  Lexicon lex;
  std::set<std::string> derived_ids;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (detail::trim(line).empty()) continue;
    const auto cells = detail::split_tabs(line);
    if (cells.size() != header.size())
      throw ParseError("expected " + std::to_string(header.size()) + " cells, found " + std::to_string(cells.size()),
                       line_no, std::min(cells.size(), header.size()) + 1);
    auto cell = [&](std::size_t col) { return detail::trim(cells[col]); };

    LexiconEntry e;
    e.pattern = std::string(cell(*fixed[kWord]));
    try {
      e.parsed = parse_pattern(e.pattern);
    } catch (const ParseError& err) {
      if (dynamic_cast<const RangeError*>(&err)) throw RangeError(err.what(), line_no, *fixed[kWord] + 1);
      throw SyntaxError(err.what(), line_no, *fixed[kWord] + 1);
    }

    const std::string_view lang = cell(*fixed[kLang]);
    auto language = language_from_code(lang);
    if (!language) throw ParseError("unknown language '" + std::string(lang) + "'", line_no, *fixed[kLang] + 1);
    e.language = *language;

    if (auto t = cell(*fixed[kTranslation]); !t.empty()) e.translation = std::string(t);

    LabelSet labels;
    for (std::size_t l = 0; l < kLabelCount; ++l) {
      const std::string_view v = cell(*label_col[l]);
      if (v == "1") labels.set(static_cast<Label>(l));
      else if (v != "0" && !v.empty())
        throw ParseError("label cell must be 1 or 0, found '" + std::string(v) + "'", line_no, *label_col[l] + 1);
    }

    for (std::size_t k = 0; k < kMaxAnnotators; ++k) {
      const std::size_t col = *fixed[kScoreA + k];
      const std::string_view v = cell(col);
      if (v.empty()) continue;
      if (!std::all_of(v.begin(), v.end(), [](char c) { return c >= '0' && c <= '9'; }) ||
          (v.size() > 1 && v[0] == '-'))
        throw ParseError("score must be an integer, found '" + std::string(v) + "'", line_no, col + 1);
      const int score = v.size() > 3 ? 9999 : std::stoi(std::string(v));
      if (score < kMinScore || score > kMaxScore)
        throw RangeError("score " + std::string(v) + " outside 0-4", line_no, col + 1);
      e.annotations.push_back(Annotation{k == 0 ? "A" : "B", score, labels, {}});
    }
    if (e.annotations.empty() && !labels.empty())
      throw ParseError("labels set on an entry without scores", line_no, *label_col[0] + 1);
    e.refresh();

    if (fixed[kId]) {
      e.id = std::string(cell(*fixed[kId]));
      if (e.id.empty()) throw ParseError("empty id", line_no, *fixed[kId] + 1);
    } else {
      std::string base = detail::derive_id(e.parsed, e.language);
      e.id = base;
      for (int n = 2; derived_ids.count(e.id); ++n) e.id = base + "~" + std::to_string(n);
      derived_ids.insert(e.id);
    }

    try {
      lex.add(std::move(e));
    } catch (const SchemaError& err) {
      throw SchemaError(err.what(), line_no);
    }
  }
  lex.set_version(1);
  return lex;
}

inline Lexicon parse_lexicon(std::string_view text) {
  std::istringstream in{std::string(text)};
  return parse_lexicon(in);
}

inline std::string lexicon_header() {
  std::string h = "id\tWORD\tTRANSLATION\tLANG\tSCORE_A\tSCORE_B";
  for (std::string_view code : kLabelCodes) {
    h += '\t';
    h += code;
  }
  return h;
}

inline std::string serialize_lexicon(const Lexicon& lex) {
  std::string out = lexicon_header() + "\n";
  for (const auto& [id, e] : lex.entries()) {
    out += e.id + '\t' + e.pattern + '\t' + e.translation.value_or("") + '\t' + std::string(language_code(e.language));
    for (const auto& s : e.column_scores()) {
      out += '\t';
      if (s) out += std::to_string(*s);
    }
    for (std::size_t l = 0; l < kLabelCount; ++l) {
      out += '\t';
      out += e.labels.test(static_cast<Label>(l)) ? '1' : '0';
    }
    out += '\n';
  }
  return out;
}

// Returns a new lexicon version in which `annotation` replaces any earlier
// annotation by the same annotator on `entry_id`.
inline Lexicon upsert_annotation(const Lexicon& lex, std::string_view entry_id, const Annotation& annotation) {
  if (annotation.score < kMinScore || annotation.score > kMaxScore)
    throw RangeError("score " + std::to_string(annotation.score) + " outside 0-4");
  if (annotation.annotator_id.empty()) throw PreconditionError("annotation needs an annotator id");
  if (!lex.find(entry_id)) throw NotFoundError("unknown entry id '" + std::string(entry_id) + "'");

  Lexicon next = lex;
  LexiconEntry& e = next.mutable_entry(entry_id);
  auto same = std::find_if(e.annotations.begin(), e.annotations.end(),
                           [&](const Annotation& a) { return a.annotator_id == annotation.annotator_id; });
  if (same != e.annotations.end()) {
    *same = annotation;
  } else {
    if (e.annotations.size() >= kMaxAnnotators)
      throw PreconditionError("entry '" + e.id + "' already has " + std::to_string(kMaxAnnotators) + " annotators");
    e.annotations.push_back(annotation);
  }
  e.refresh();
  next.set_version(lex.version() + 1);
  return next;
}

}  // namespace toxlex
