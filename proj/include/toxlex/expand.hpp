#pragma once

// Weak-supervision lexicon expansion. The scorer's own antisemitic flag is
// the noisy label; unigrams and bigrams that show up disproportionately in
// flagged messages are ranked for a human to annotate.
//
// Co-occurrence is counted per message (presence, not frequency), and the
// statistic is smoothed pointwise association:
//
//   ln( ((f + 1) / (f + c + 2)) / ((F + 1) / (N + 2)) )
//
// with f / c the flagged / clean messages containing the term, F flagged
// messages overall and N all messages.

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstdio>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "toxlex/detail/utf8.hpp"
#include "toxlex/error.hpp"
#include "toxlex/lexicon.hpp"
#include "toxlex/matcher.hpp"
#include "toxlex/scorer.hpp"
#include "toxlex/stopwords_data.hpp"
#include "toxlex/textnorm.hpp"

namespace toxlex {

struct Candidate {
  std::string term;  // one token, or two separated by a space
  std::uint64_t flagged_count = 0;
  std::uint64_t clean_count = 0;
  double association = 0.0;

  bool operator==(const Candidate&) const = default;
};

struct ExpandConfig {
  std::uint64_t min_support = 5;
  std::size_t top_k = 50;
};

class Stopwords {
 public:
  Stopwords() = default;

  // Reads one word per line; '#' starts a comment line. Words are stored
  // normalized so lookups agree with message tokens.
  static Stopwords parse(std::string_view text) {
    Stopwords s;
    std::istringstream in{std::string(text)};
    std::string line;
    while (std::getline(in, line)) {
      std::string_view w = detail::trim(line);
      if (w.empty() || w.front() == '#') continue;
      for (Token& t : normalize_text(w).tokens) s.words_.insert(std::move(t.normalized));
    }
    return s;
  }

  static Stopwords load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read stopword file '" + path + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    return parse(buf.str());
  }

  // English and German lists shipped with the library.
  static const Stopwords& builtin() {
    static const Stopwords s = [] {
      Stopwords en = parse(detail::kStopwordsEn);
      en.merge(parse(detail::kStopwordsDe));
      return en;
    }();
    return s;
  }

  void merge(const Stopwords& o) { words_.insert(o.words_.begin(), o.words_.end()); }
  bool contains(std::string_view w) const { return words_.find(w) != words_.end(); }
  std::size_t size() const { return words_.size(); }

 private:
  std::set<std::string, std::less<>> words_;
};

namespace detail {

inline std::size_t code_point_count(std::string_view s) { return code_point_offsets(s).size() - 1; }

}  // namespace detail

// Mergeable term counts. Memory grows with the vocabulary, not the corpus.
class ExpandAccumulator {
 public:
  struct Counts {
    std::uint64_t flagged = 0;
    std::uint64_t clean = 0;
  };

  void add_message(bool flagged, std::span<const std::string> terms) {
    ++messages_;
    if (flagged) ++flagged_;
    for (const std::string& t : terms) {
      Counts& c = terms_[t];
      (flagged ? c.flagged : c.clean) += 1;
    }
  }

  void merge(const ExpandAccumulator& o) {
    messages_ += o.messages_;
    flagged_ += o.flagged_;
    for (const auto& [t, c] : o.terms_) {
      Counts& mine = terms_[t];
      mine.flagged += c.flagged;
      mine.clean += c.clean;
    }
  }

  std::uint64_t messages() const { return messages_; }
  std::uint64_t flagged() const { return flagged_; }
  const std::unordered_map<std::string, Counts>& terms() const { return terms_; }

  std::vector<Candidate> rank(const ExpandConfig& config) const {
    std::vector<Candidate> out;
    if (flagged_ == 0) return out;
    const double base = (static_cast<double>(flagged_) + 1.0) / (static_cast<double>(messages_) + 2.0);
    for (const auto& [t, c] : terms_) {
      if (c.flagged + c.clean < config.min_support) continue;
      const double p = (static_cast<double>(c.flagged) + 1.0) / (static_cast<double>(c.flagged + c.clean) + 2.0);
      out.push_back(Candidate{t, c.flagged, c.clean, std::log(p / base)});
    }
    std::sort(out.begin(), out.end(), [](const Candidate& a, const Candidate& b) {
      if (a.association != b.association) return a.association > b.association;
      return a.term < b.term;
    });
    if (out.size() > config.top_k) out.resize(config.top_k);
    return out;
  }

 private:
  std::uint64_t messages_ = 0;
  std::uint64_t flagged_ = 0;
  std::unordered_map<std::string, Counts> terms_;
};

class CandidateExtractor {
 public:
  CandidateExtractor(const CompiledLexicon& compiled, const ScoreConfig& config,
                     const Stopwords& stopwords = Stopwords::builtin())
      : compiled_(&compiled), config_(config), stopwords_(&stopwords) {
    config_.validate();
  }

  // Distinct candidate terms present in one normalized message.
  std::vector<std::string> terms(const NormalizedText& text) const {
    std::set<std::string> found;
    const std::vector<Token>& toks = text.tokens;
    for (std::size_t i = 0; i < toks.size(); ++i) {
      if (!usable(toks[i].normalized)) continue;
      const std::string& a = toks[i].normalized;
      if (!known({&a, 1})) found.insert(a);
      if (i + 1 < toks.size() && usable(toks[i + 1].normalized)) {
        const std::string pair[2] = {a, toks[i + 1].normalized};
        if (!known(pair)) found.insert(a + " " + pair[1]);
      }
    }
    return {found.begin(), found.end()};
  }

  void add(ExpandAccumulator& acc, std::string_view raw) const {
    const NormalizedText text = normalize_text(raw);
    const bool flagged = score_text(*compiled_, text, config_).antisemitic;
    const std::vector<std::string> t = terms(text);
    acc.add_message(flagged, t);
  }

 private:
  bool usable(const std::string& token) const {
    return !is_placeholder_token(token) && detail::code_point_count(token) >= 2 && !stopwords_->contains(token);
  }
  bool known(std::span<const std::string> seq) const { return compiled_->contains_sequence(seq); }

  const CompiledLexicon* compiled_;
  ScoreConfig config_;
  const Stopwords* stopwords_;
};

// `next` yields std::optional<std::string> message texts, nullopt at the
// end. Result is independent of message order.
template <class NextFn>
  requires std::invocable<NextFn&>
std::vector<Candidate> suggest_candidates(NextFn&& next, const CompiledLexicon& compiled, const ScoreConfig& score,
                                          const ExpandConfig& config = {},
                                          const Stopwords& stopwords = Stopwords::builtin()) {
  CandidateExtractor extractor(compiled, score, stopwords);
  ExpandAccumulator acc;
  while (std::optional<std::string> text = next()) extractor.add(acc, *text);
  return acc.rank(config);
}

inline std::vector<Candidate> suggest_candidates(std::span<const std::string> messages,
                                                 const CompiledLexicon& compiled, const ScoreConfig& score,
                                                 const ExpandConfig& config = {},
                                                 const Stopwords& stopwords = Stopwords::builtin()) {
  std::size_t i = 0;
  return suggest_candidates(
      [&]() -> std::optional<std::string> {
        return i < messages.size() ? std::optional<std::string>(messages[i++]) : std::nullopt;
      },
      compiled, score, config, stopwords);
}

struct EnqueueResult {
  Lexicon lexicon;
  std::vector<std::string> added;    // new entry ids
  std::vector<std::string> skipped;  // candidate terms already present
};

// Adds each candidate as an unscored, label-free entry. Such entries are
// PROVISIONAL and never compile into the matcher. The version moves by one
// if anything was added.
inline EnqueueResult enqueue_candidates(std::span<const Candidate> candidates, const Lexicon& lexicon,
                                        Language language = Language::kEn) {
  EnqueueResult r{lexicon, {}, {}};
  for (const Candidate& c : candidates) {
    Pattern p;
    try {
      p = parse_pattern(c.term);
    } catch (const ParseError&) {
      r.skipped.push_back(c.term);
      continue;
    }
    if (r.lexicon.contains_pattern_any_language(p.canonical())) {
      r.skipped.push_back(c.term);
      continue;
    }
    LexiconEntry e;
    e.pattern = p.canonical();
    e.parsed = std::move(p);
    e.language = language;
    std::string base = "cand-" + detail::derive_id(e.parsed, language);
    std::replace(base.begin(), base.end(), ':', '-');
    e.id = base;
    for (int n = 2; r.lexicon.find(e.id); ++n) e.id = base + "~" + std::to_string(n);
    e.refresh();
    r.added.push_back(e.id);
    r.lexicon.add(std::move(e));
  }
  if (!r.added.empty()) r.lexicon.set_version(lexicon.version() + 1);
  return r;
}

// CSV form used by the CLI: term,flagged_count,clean_count,association
inline std::string render_candidates_csv(std::span<const Candidate> candidates) {
  std::string out = "term,flagged_count,clean_count,association\n";
  for (const Candidate& c : candidates) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6f", c.association);
    out += c.term + "," + std::to_string(c.flagged_count) + "," + std::to_string(c.clean_count) + "," + buf + "\n";
  }
  return out;
}

}  // namespace toxlex
