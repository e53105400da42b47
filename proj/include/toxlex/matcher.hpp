#pragma once

// Multi-pattern matching over normalized token streams.
//
// Every PHRASE pattern and every COMBO group is expanded into its token
// sequences (one per choice of alternatives) and inserted into an
// Aho-Corasick automaton whose alphabet is the lexicon's token vocabulary.
// A single left-to-right pass over the message reports every phrase
// occurrence; COMBO entries are then assembled from their left and right
// group occurrences.

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <deque>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "toxlex/error.hpp"
#include "toxlex/labels.hpp"
#include "toxlex/lexicon.hpp"
#include "toxlex/pattern.hpp"
#include "toxlex/textnorm.hpp"

namespace toxlex {

// Half-open range of token indices.
struct TokenRange {
  std::size_t begin = 0;
  std::size_t end = 0;

  bool operator==(const TokenRange&) const = default;
  auto operator<=>(const TokenRange&) const = default;
};

struct Match {
  std::string entry_id;
  std::uint32_t entry_index = 0;
  std::vector<TokenRange> token_ranges;  // one for PHRASE, two for COMBO
  std::vector<CharSpan> char_spans;      // parallel to token_ranges

  bool operator==(const Match&) const = default;
};

// Ordering used for find_matches output: first token, entry id, then the
// remaining ranges.
inline bool match_less(const Match& a, const Match& b) {
  if (a.token_ranges.front().begin != b.token_ranges.front().begin)
    return a.token_ranges.front().begin < b.token_ranges.front().begin;
  if (a.entry_id != b.entry_id) return a.entry_id < b.entry_id;
  return a.token_ranges < b.token_ranges;
}

struct CompiledEntry {
  std::string id;
  Pattern pattern;
  int score = 0;
  LabelSet labels;
};

// Cap on token sequences a single pattern group may expand into.
inline constexpr std::size_t kMaxExpansions = 4096;

class CompiledLexicon {
 public:
  enum class Role : std::uint8_t { kPhrase, kLeft, kRight };

  CompiledLexicon() : CompiledLexicon(std::vector<CompiledEntry>{}, 0) {}

  // Entries are re-ordered by id. Throws CompileError for patterns that
  // cannot be compiled.
  CompiledLexicon(std::vector<CompiledEntry> entries, std::uint64_t source_version)
      : source_version_(source_version) {
    std::sort(entries.begin(), entries.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
    for (std::size_t i = 1; i < entries.size(); ++i)
      if (entries[i].id == entries[i - 1].id) throw CompileError("duplicate entry id '" + entries[i].id + "'");
    entries_ = std::move(entries);
    nodes_.push_back(Node{});
    for (std::uint32_t e = 0; e < entries_.size(); ++e) {
      const Pattern& p = entries_[e].pattern;
      if (p.kind == PatternKind::kPhrase) {
        insert_group(e, Role::kPhrase, p.left);
      } else {
        insert_group(e, Role::kLeft, p.left);
        insert_group(e, Role::kRight, p.right);
      }
    }
    link();
  }

  std::uint64_t source_version() const { return source_version_; }
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  const CompiledEntry& entry(std::uint32_t i) const { return entries_[i]; }
  const std::vector<CompiledEntry>& entries() const { return entries_; }
  std::size_t node_count() const { return nodes_.size(); }

  const CompiledEntry* find(std::string_view id) const {
    auto it = std::lower_bound(entries_.begin(), entries_.end(), id,
                               [](const CompiledEntry& e, std::string_view v) { return e.id < v; });
    return it != entries_.end() && it->id == id ? &*it : nullptr;
  }

  // True when `tokens` is exactly one expansion of some phrase or group.
  bool contains_sequence(std::span<const std::string> tokens) const {
    std::uint32_t state = 0;
    for (const std::string& t : tokens) {
      auto id = token_id(t);
      if (id == kNoToken) return false;
      auto next = child(state, id);
      if (next == kNoNode) return false;
      state = next;
    }
    return !tokens.empty() && !nodes_[state].outputs.empty();
  }

  std::vector<Match> find_matches(const NormalizedText& text) const;

 private:
  static constexpr std::uint32_t kNoToken = std::numeric_limits<std::uint32_t>::max();
  static constexpr std::uint32_t kNoNode = std::numeric_limits<std::uint32_t>::max();

  struct Output {
    std::uint32_t entry;
    Role role;
    std::uint32_t length;
  };

  struct Node {
    std::uint32_t fail = 0;
    std::uint32_t dict = kNoNode;  // nearest proper suffix node with outputs
    std::vector<Output> outputs;
  };

  struct StringHash {
    using is_transparent = void;
    std::size_t operator()(std::string_view s) const { return std::hash<std::string_view>{}(s); }
  };

  static std::uint64_t edge_key(std::uint32_t node, std::uint32_t token) {
    return (static_cast<std::uint64_t>(node) << 32) | token;
  }

  std::uint32_t token_id(std::string_view t) const {
    auto it = vocab_.find(t);
    return it == vocab_.end() ? kNoToken : it->second;
  }

  std::uint32_t child(std::uint32_t node, std::uint32_t token) const {
    auto it = edges_.find(edge_key(node, token));
    return it == edges_.end() ? kNoNode : it->second;
  }

  std::uint32_t intern(const std::string& t) {
    auto [it, inserted] = vocab_.try_emplace(t, static_cast<std::uint32_t>(vocab_.size()));
    return it->second;
  }

  void insert_group(std::uint32_t entry, Role role, const std::vector<Slot>& slots) {
    std::size_t expansions = 1;
    for (const Slot& s : slots) {
      if (s.empty()) throw CompileError("entry '" + entries_[entry].id + "' has an empty slot");
      for (const std::string& alt : s) {
        if (alt.empty()) throw CompileError("entry '" + entries_[entry].id + "' has an empty token");
        if (is_placeholder_token(alt))
          throw CompileError("entry '" + entries_[entry].id + "' uses redaction placeholder '" + alt + "'");
      }
      expansions *= s.size();
      if (expansions > kMaxExpansions)
        throw CompileError("entry '" + entries_[entry].id + "' expands to more than " +
                           std::to_string(kMaxExpansions) + " sequences");
    }
    if (slots.empty()) throw CompileError("entry '" + entries_[entry].id + "' is empty after normalization");

    // Depth-first walk over the choice tree, sharing trie prefixes.
    std::function<void(std::size_t, std::uint32_t)> walk = [&](std::size_t depth, std::uint32_t node) {
      if (depth == slots.size()) {
        nodes_[node].outputs.push_back(Output{entry, role, static_cast<std::uint32_t>(slots.size())});
        return;
      }
      for (const std::string& alt : slots[depth]) {
        const std::uint32_t tok = intern(alt);
        std::uint32_t next = child(node, tok);
        if (next == kNoNode) {
          next = static_cast<std::uint32_t>(nodes_.size());
          nodes_.push_back(Node{});
          edges_.emplace(edge_key(node, tok), next);
          children_.resize(nodes_.size());
          children_[node].emplace_back(tok, next);
        }
        walk(depth + 1, next);
      }
    };
    children_.resize(nodes_.size());
    walk(0, 0);
  }

  // Breadth-first construction of failure and dictionary links.
  void link() {
    children_.resize(nodes_.size());
    std::deque<std::uint32_t> queue;
    for (auto [tok, c] : children_[0]) {
      nodes_[c].fail = 0;
      queue.push_back(c);
    }
    while (!queue.empty()) {
      const std::uint32_t n = queue.front();
      queue.pop_front();
      for (auto [tok, c] : children_[n]) {
        std::uint32_t f = nodes_[n].fail;
        std::uint32_t target = child(f, tok);
        while (target == kNoNode && f != 0) {
          f = nodes_[f].fail;
          target = child(f, tok);
        }
        nodes_[c].fail = (target == kNoNode || target == c) ? 0 : target;
        const std::uint32_t fl = nodes_[c].fail;
        nodes_[c].dict = !nodes_[fl].outputs.empty() ? fl : nodes_[fl].dict;
        queue.push_back(c);
      }
    }
    children_.clear();
    children_.shrink_to_fit();
  }

  std::vector<CompiledEntry> entries_;
  std::uint64_t source_version_ = 0;
  std::unordered_map<std::string, std::uint32_t, StringHash, std::equal_to<>> vocab_;
  std::unordered_map<std::uint64_t, std::uint32_t> edges_;
  std::vector<Node> nodes_;
  std::vector<std::vector<std::pair<std::uint32_t, std::uint32_t>>> children_;  // build only
};

inline std::vector<Match> CompiledLexicon::find_matches(const NormalizedText& text) const {
  std::vector<Match> out;
  if (entries_.empty() || text.tokens.empty()) return out;

  struct Occurrence {
    std::uint32_t entry;
    Role role;
    TokenRange range;
  };
  std::vector<Occurrence> groups;

  const auto& tokens = text.tokens;
  auto span_of = [&](TokenRange r) {
    return CharSpan{tokens[r.begin].original_span.start, tokens[r.end - 1].original_span.end};
  };

  std::uint32_t state = 0;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    const std::uint32_t tok = token_id(tokens[i].normalized);
    if (tok == kNoToken) {
      state = 0;
      continue;
    }
    std::uint32_t next = child(state, tok);
    while (next == kNoNode && state != 0) {
      state = nodes_[state].fail;
      next = child(state, tok);
    }
    state = next == kNoNode ? 0 : next;

    for (std::uint32_t n = nodes_[state].outputs.empty() ? nodes_[state].dict : state; n != kNoNode;
         n = nodes_[n].dict) {
      for (const Output& o : nodes_[n].outputs) {
        const TokenRange r{i + 1 - o.length, i + 1};
        if (o.role == Role::kPhrase) {
          out.push_back(Match{entries_[o.entry].id, o.entry, {r}, {span_of(r)}});
        } else {
          groups.push_back(Occurrence{o.entry, o.role, r});
        }
      }
    }
  }

  if (!groups.empty()) {
    // Placeholder tokens stand for redacted content; a combination never
    // spans one.
    std::vector<std::size_t> barriers(tokens.size() + 1, 0);
    for (std::size_t i = 0; i < tokens.size(); ++i)
      barriers[i + 1] = barriers[i] + (is_placeholder_token(tokens[i].normalized) ? 1 : 0);

    std::sort(groups.begin(), groups.end(), [](const Occurrence& a, const Occurrence& b) {
      if (a.entry != b.entry) return a.entry < b.entry;
      if (a.role != b.role) return a.role < b.role;
      return a.range < b.range;
    });
    for (std::size_t i = 0; i < groups.size();) {
      std::size_t j = i;
      while (j < groups.size() && groups[j].entry == groups[i].entry) ++j;
      const std::uint32_t e = groups[i].entry;
      const auto window = static_cast<std::size_t>(entries_[e].pattern.window);
      const auto mid = std::partition_point(groups.begin() + static_cast<std::ptrdiff_t>(i),
                                            groups.begin() + static_cast<std::ptrdiff_t>(j),
                                            [](const Occurrence& o) { return o.role == Role::kLeft; });
      for (auto l = groups.begin() + static_cast<std::ptrdiff_t>(i); l != mid; ++l) {
        for (auto r = mid; r != groups.begin() + static_cast<std::ptrdiff_t>(j); ++r) {
          if (r->range.begin < l->range.end) continue;
          if (r->range.begin - l->range.end > window) break;
          if (barriers[r->range.begin] != barriers[l->range.end]) continue;
          out.push_back(
              Match{entries_[e].id, e, {l->range, r->range}, {span_of(l->range), span_of(r->range)}});
        }
      }
      i = j;
    }
  }

  std::sort(out.begin(), out.end(), match_less);
  return out;
}

inline std::vector<Match> find_matches(const CompiledLexicon& compiled, const NormalizedText& text) {
  return compiled.find_matches(text);
}

// Entries that take part in matching: scored, not disputed, score above 0.
inline CompiledLexicon compile(const Lexicon& lex) {
  std::vector<CompiledEntry> entries;
  for (const auto& [id, e] : lex.entries()) {
    if (!e.consensus.is_scored() || e.consensus.score() == 0) continue;
    entries.push_back(CompiledEntry{e.id, e.parsed, e.consensus.score(), e.labels});
  }
  return CompiledLexicon(std::move(entries), lex.version());
}

// One entry per keyword, id = the keyword text as given; used to count raw
// keyword prevalence independent of scores.
inline CompiledLexicon compile_keywords(std::span<const std::string> keywords) {
  std::vector<CompiledEntry> entries;
  std::vector<std::string> seen;
  for (const std::string& k : keywords) {
    if (std::find(seen.begin(), seen.end(), k) != seen.end()) continue;
    seen.push_back(k);
    Pattern p;
    try {
      p = parse_pattern(k);
    } catch (const ParseError& err) {
      throw CompileError("keyword '" + k + "': " + err.what());
    }
    entries.push_back(CompiledEntry{k, std::move(p), 0, {}});
  }
  return CompiledLexicon(std::move(entries), 0);
}

}  // namespace toxlex
