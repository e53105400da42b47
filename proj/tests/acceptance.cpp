// Acceptance suite: one PASS/FAIL line per release criterion. Exit status
// is nonzero if any criterion fails.

#include <chrono>
#include <cstdio>
#include <functional>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

#include "support/fixtures.hpp"
#include "support/oracle.hpp"
#include "toxlex/service.hpp"

using namespace toxlex;
using nlohmann::json;
using Clock = std::chrono::steady_clock;

namespace {

// A criterion returns an empty string on success, otherwise the reason.
// `detail` collects the numbers printed next to the verdict.
struct Criterion {
  std::string name;
  std::function<std::string(std::string& detail)> run;
};

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

std::string matcher_equivalence(std::string& detail) {
  oracle::Generator g(1001);
  int mismatches = 0;
  std::string first;
  std::size_t total_matches = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const CompiledLexicon c(g.entries(200), 1);
    const NormalizedText text = normalize_text(g.text(200));
    const auto fast = c.find_matches(text);
    const auto slow = oracle::naive_matches(c, text);
    total_matches += slow.size();
    if (fast != slow) {
      ++mismatches;
      if (first.empty()) first = "trial " + std::to_string(trial);
    }
  }
  detail = "1000 trials, " + std::to_string(total_matches) + " matches, " + std::to_string(mismatches) + " mismatches";
  return mismatches == 0 ? "" : "first mismatch at " + first;
}

std::string scoring_oracle(std::string& detail) {
  oracle::Generator g(1002);
  int failures = 0;
  std::string first;
  for (int trial = 0; trial < 10000; ++trial) {
    ScoreConfig cfg;
    if (g.chance(0.3)) {
      cfg.points_per_level = g.uniform(1, 100);
      cfg.antisemitic_threshold = g.uniform(0, 100);
      cfg.violent_min_level = g.uniform(0, 4);
    }
    const CompiledLexicon c(g.entries(40), 1);
    const NormalizedText text = normalize_text(g.text(40));
    // Random subset of the true matches, so match sets vary independently
    // of the text.
    std::vector<Match> all = c.find_matches(text), subset;
    for (const Match& m : all)
      if (g.chance(0.7)) subset.push_back(m);

    const MessageScore s = score_matches(c, text, subset, cfg);
    const oracle::NaiveScore n = oracle::naive_score(c, subset, cfg);
    bool ok = s.toxicity == n.toxicity && s.antisemitic == n.antisemitic && s.violent == n.violent &&
              s.explanations.size() == n.explanations;
    // Invariants stated independently of the oracle.
    ok = ok && s.toxicity >= 0 && s.toxicity <= cfg.cap;
    ok = ok && s.antisemitic == (s.toxicity >= cfg.antisemitic_threshold);
    std::vector<Match> doubled = subset;
    doubled.insert(doubled.end(), subset.begin(), subset.end());
    std::sort(doubled.begin(), doubled.end(), match_less);
    ok = ok && score_matches(c, text, doubled, cfg).toxicity == s.toxicity;
    if (!ok) {
      ++failures;
      if (first.empty()) first = "trial " + std::to_string(trial);
    }
  }
  detail = "10000 trials, " + std::to_string(failures) + " failures";
  return failures == 0 ? "" : "first failure at " + first;
}

std::string normalization(std::string& detail) {
  auto words = [](std::string_view raw) {
    std::vector<std::string> out;
    for (const Token& t : normalize_text(raw).tokens) out.push_back(t.normalized);
    return out;
  };
  const std::vector<std::pair<std::string, std::vector<std::string>>> examples = {
      {"K1KE", {"kike"}},       {"LÜGENPRESSE", {"lugenpresse"}}, {"k-i-k-e-s", {"kikes"}},
      {"soooo bad", {"soo", "bad"}}, {"killl", {"kill"}}};
  for (const auto& [in, want] : examples)
    if (words(in) != want) return "example '" + in + "' normalized differently";

  oracle::Generator g(1003);
  for (int trial = 0; trial < 10000; ++trial) {
    const std::string raw = g.noise(40);
    const auto off = detail::code_point_offsets(raw);
    for (const Token& t : normalize_text(raw).tokens) {
      const std::string slice =
          raw.substr(off[t.original_span.start], off[t.original_span.end] - off[t.original_span.start]);
      const auto again = normalize_text(slice);
      if (again.tokens.size() != 1 || again.tokens[0].normalized != t.normalized)
        return "offset soundness broken on trial " + std::to_string(trial);
    }
  }
  detail = std::to_string(examples.size()) + " examples, 10000 offset-soundness strings";
  return "";
}

// Pseudo-words from two disjoint syllable sets: lexicon terms never occur
// in filler by accident.
class SyntheticVocabulary {
 public:
  explicit SyntheticVocabulary(std::uint64_t seed) : rng_(seed) {}

  std::string term() { return make({"zor", "kav", "qui", "xel", "vra", "jot", "wum", "dyx"}, 2, 3); }
  std::string filler() { return make({"la", "mo", "ne", "ri", "ta", "so", "pe", "du", "bi", "fa"}, 2, 4); }
  std::mt19937_64& rng() { return rng_; }

 private:
  std::string make(const std::vector<std::string>& syl, int lo, int hi) {
    const int n = std::uniform_int_distribution<int>(lo, hi)(rng_);
    std::string w;
    for (int i = 0; i < n; ++i) w += syl[rng_() % syl.size()];
    return w;
  }
  std::mt19937_64 rng_;
};

std::string throughput(std::string& detail) {
  SyntheticVocabulary v(1004);
  std::vector<std::string> term_pool;
  for (int i = 0; i < 3000; ++i) term_pool.push_back(v.term());
  auto pick = [&] { return term_pool[v.rng()() % term_pool.size()]; };

  // 2,000 entries, a fifth of them COMBO.
  std::string tsv = lexicon_header() + "\n";
  std::vector<std::string> phrases;
  std::set<std::string> seen;
  while (phrases.size() < 2000) {
    std::string pattern;
    if (v.rng()() % 5 == 0) {
      pattern = pick() + "/" + pick() + " + " + pick() + " ~3";
    } else {
      const int n = static_cast<int>(v.rng()() % 3) + 1;
      for (int k = 0; k < n; ++k) pattern += (k ? " " : "") + pick();
    }
    if (!seen.insert(pattern).second) continue;
    phrases.push_back(pattern);
    const int score = static_cast<int>(v.rng()() % 4) + 1;
    tsv += "g" + std::to_string(phrases.size()) + "\t" + pattern + "\t\ten\t" + std::to_string(score) + "\t" + std::to_string(score) +
           "\t1\t0\t0\t0\t0\t0\t0\t0\t0\t0\t" + (v.rng()() % 4 == 0 ? "1" : "0") + "\t0\t0\t0\n";
  }
  const Lexicon lex = parse_lexicon(tsv);
  if (lex.size() != 2000) return "generated lexicon has " + std::to_string(lex.size()) + " entries";

  auto t0 = Clock::now();
  const CompiledLexicon compiled = compile(lex);
  const double compile_s = seconds_since(t0);

  // 100,000 messages, every tenth carrying a lexicon phrase.
  std::vector<std::string> messages;
  messages.reserve(100000);
  std::size_t chars = 0;
  for (int i = 0; i < 100000; ++i) {
    std::string m;
    while (m.size() < 110 + v.rng()() % 20) m += (m.empty() ? "" : " ") + v.filler();
    if (i % 10 == 0) {
      std::string p = phrases[v.rng()() % phrases.size()];
      if (p.find('+') != std::string::npos) {
        // Plant the first alternative of each group.
        const std::string left = p.substr(0, p.find('/')), right = p.substr(p.find('+') + 2, p.find(" ~") - p.find('+') - 2);
        p = left + " " + right;
      }
      m.insert(m.size() / 2, " " + p + " ");
    }
    chars += detail::code_point_offsets(m).size() - 1;
    messages.push_back(std::move(m));
  }

  t0 = Clock::now();
  std::size_t flagged_terms = 0;
  for (const std::string& m : messages) flagged_terms += score_message(compiled, m, ScoreConfig{}).toxicity > 0;
  const double score_s = seconds_since(t0);

  detail = "compile 2000 entries " + fmt("%.3f", compile_s) + " s, score 100000 msgs (mean " +
           fmt("%.1f", double(chars) / 100000.0) + " chars, " + std::to_string(flagged_terms) + " with hits) " +
           fmt("%.2f", score_s) + " s";
  if (flagged_terms < 10000) return "planted terms were not found in every tenth message";
  if (compile_s >= 1.0) return "compile took " + fmt("%.3f", compile_s) + " s";
  if (score_s >= 60.0) return "scoring took " + fmt("%.2f", score_s) + " s";
  return "";
}

std::string seeded_corpus(std::string& detail) {
  const CompiledLexicon compiled = compile(fixtures::demo_lexicon());
  const auto kw = fixtures::keywords();

  // Through the ingest path, as the CLI runs it.
  std::string jsonl;
  const auto texts = fixtures::seeded_texts();
  for (std::size_t i = 0; i < texts.size(); ++i)
    jsonl += json{{"id", std::to_string(i)}, {"text", texts[i]}, {"author", "u" + std::to_string(i % 37)}}.dump() + "\n";
  std::istringstream in(jsonl);
  MessageReader reader(in, Platform::kGeneric, {secret_from_hex(oracle::hex_secret(0)), RedactionRuleSet::defaults()});
  const CorpusReport r = analyze([&] { return reader.next(); }, compiled, ScoreConfig{}, kw);
  reader.finish();

  const auto kikes = std::find_if(r.keyword_prevalence.begin(), r.keyword_prevalence.end(),
                                  [](const KeywordPrevalence& k) { return k.keyword == "kikes"; });
  if (kikes == r.keyword_prevalence.end()) return "keyword 'kikes' missing from the report";
  detail = std::to_string(r.count) + " messages, mean " + fmt("%.10g", *r.mean_toxicity) + ", anti-Semitic " +
           fmt("%.10g", *r.pct_antisemitic) + "%, violent " + fmt("%.10g", *r.pct_violent) + "%, kikes " +
           std::to_string(kikes->count) + " " + prevalence_dots(kikes->bucket);
  if (r.count != 1000) return "wrong message count";
  if (*r.mean_toxicity != 10.0 || *r.pct_antisemitic != 10.0 || *r.pct_violent != 5.0) return "aggregate mismatch";
  if (kikes->count != 500 || prevalence_dots(kikes->bucket) != "●●○") return "prevalence mismatch";
  return "";
}

std::string privacy(std::string& detail) {
  oracle::Generator g(1005);
  for (int trial = 0; trial < 10000; ++trial) {
    const std::string once = redact(g.pii_text(8)).text;
    if (redact(once).text != once) return "redaction not idempotent on trial " + std::to_string(trial);
  }

  const Secret a = secret_from_hex("000102030405060708090a0b0c0d0e0f");
  const Secret b = secret_from_hex("0f0e0d0c0b0a09080706050403020100");
  if (pseudonymize_author("twitter", "12345", a) != "f301125888747bb5" ||
      pseudonymize_author("gab", "12345", a) != "bedbbcfe2535c65e" ||
      pseudonymize_author("twitter", "12345", b) != "7c9139826da6d3d7")
    return "pseudonym vectors changed";
  if (pseudonymize_author("twitter", "12345", a) != pseudonymize_author("twitter", "12345", a))
    return "pseudonyms not deterministic";

  // One record per adapter, each carrying a handle, a URL and an email.
  const std::string pii = "@john_doe says visit https://evil.example/p?q=1 or write jd@mail.example";
  const std::vector<std::pair<Platform, json>> records = {
      {Platform::kTwitter, {{"id_str", "1"}, {"full_text", pii}, {"user", {{"id_str", "7"}}}}},
      {Platform::kFacebook, {{"id", "2"}, {"message", pii}, {"from", {{"id", "7"}}}}},
      {Platform::kGab, {{"id", 3}, {"content", "<p>" + pii + "</p>"}, {"account", {{"id", 7}}}}},
      {Platform::kChan, {{"no", 4}, {"com", pii + "<br>"}, {"id", "7"}}},
      {Platform::kGeneric, {{"id", "5"}, {"text", pii}, {"author", "7"}}}};
  std::set<std::string> authors;
  for (const auto& [platform, record] : records) {
    std::istringstream in(record.dump() + "\n");
    MessageReader reader(in, platform, {a, RedactionRuleSet::defaults()});
    const auto m = reader.next();
    if (!m) return "fixture for " + std::string(platform_name(platform)) + " did not parse";
    for (const char* raw : {"john_doe", "evil.example", "jd@", "mail.example", "https"})
      if (m->text.find(raw) != std::string::npos)
        return std::string(platform_name(platform)) + " ingest leaked '" + raw + "'";
    authors.insert(m->author_pseudonym);
  }
  if (authors.size() != records.size()) return "same author id collided across platforms";
  detail = "10000 idempotence strings, 3 frozen vectors, " + std::to_string(records.size()) + " ingest fixtures";
  return "";
}

std::string lexicon_round_trip(std::string& detail) {
  std::ifstream in(fixtures::data_path("demo_lexicon.tsv"));
  std::stringstream buf;
  buf << in.rdbuf();
  const std::string original = buf.str();
  const Lexicon lex = parse_lexicon(original);
  const std::string once = serialize_lexicon(lex);
  const Lexicon back = parse_lexicon(once);
  if (back.size() != lex.size()) return "entry count changed";
  for (const auto& [id, e] : lex.entries())
    if (!back.find(id) || !back.find(id)->same_content(e)) return "entry '" + id + "' changed";
  if (serialize_lexicon(back) != once) return "serialization not stable";

  auto merged = [](std::vector<int> s) {
    std::vector<Annotation> as;
    for (std::size_t i = 0; i < s.size(); ++i) as.push_back({i ? "B" : "A", s[i], {}, {}});
    return merge_annotations(as);
  };
  if (merged({4, 4}) != Consensus::scored(4)) return "[4,4] did not merge to 4";
  if (merged({2, 3}) != Consensus::scored(3)) return "[2,3] did not merge to 3";
  if (merged({1, 4}) != Consensus::disputed()) return "[1,4] was not DISPUTED";
  detail = std::to_string(lex.size()) + " demo entries round-trip, 3 merge examples";
  return "";
}

std::string service_integration(std::string& detail) {
  ServiceConfig cfg;
  cfg.port = 0;
  Service svc(fixtures::demo_lexicon(), cfg);
  const int port = svc.start();
  auto call = [&](const std::string& method, const std::string& path, const json& body) -> json {
    httplib::Client c("127.0.0.1", port);
    c.set_read_timeout(30);
    auto res = method == "PUT" ? c.Put(path, body.dump(), "application/json")
                               : c.Post(path, body.dump(), "application/json");
    if (!res || res->status != 200) throw std::runtime_error(method + " " + path + " failed");
    return json::parse(res->body);
  };

  // Read-your-writes: en-soros goes from consensus 1 to 3.
  if (call("POST", "/v1/score", {{"text", "soros"}})["toxicity"] != 25) return "baseline score is not 25";
  const std::uint64_t v0 = svc.snapshot()->lexicon.version();
  call("PUT", "/v1/lexicon/en-soros/annotation", {{"annotator", "A"}, {"score", 2}, {"labels", {"PLOT"}}});
  const json w = call("PUT", "/v1/lexicon/en-soros/annotation", {{"annotator", "B"}, {"score", 3}, {"labels", {"PLOT"}}});
  if (w["lexicon_version"] != v0 + 2 || w["entry"]["consensus"] != 3) return "annotation write not reflected";
  const json s = call("POST", "/v1/score", {{"text", "soros"}});
  if (s["toxicity"] != 75 || s["lexicon_version"] != w["lexicon_version"]) return "score did not see the write";

  // Storm: 100 score requests while annotations are written.
  std::map<std::uint64_t, int> expected{{w["lexicon_version"].get<std::uint64_t>(), 75}};
  std::vector<std::pair<std::uint64_t, int>> seen;
  std::mutex mu;
  std::string error;
  std::thread writer([&] {
    try {
      for (int i = 0; i < 40; ++i) {
        const json r = call("PUT", "/v1/lexicon/en-soros/annotation",
                            {{"annotator", i % 2 ? "B" : "A"}, {"score", (i / 2) % 5}, {"labels", {"PLOT"}}});
        const json c = r["entry"]["consensus"];
        std::lock_guard lock(mu);
        expected[r["lexicon_version"]] = c.is_number() ? 25 * c.get<int>() : 0;
      }
    } catch (const std::exception& e) {
      std::lock_guard lock(mu);
      error = e.what();
    }
  });
  std::vector<std::thread> readers;
  for (int t = 0; t < 10; ++t)
    readers.emplace_back([&] {
      for (int i = 0; i < 10; ++i) {
        try {
          const json r = call("POST", "/v1/score", {{"text", "soros"}});
          std::lock_guard lock(mu);
          seen.emplace_back(r["lexicon_version"], r["toxicity"]);
        } catch (const std::exception& e) {
          std::lock_guard lock(mu);
          error = e.what();
        }
      }
    });
  for (auto& r : readers) r.join();
  writer.join();
  svc.stop();
  if (!error.empty()) return error;
  if (seen.size() != 100) return "only " + std::to_string(seen.size()) + " storm responses";
  std::set<std::uint64_t> versions;
  for (const auto& [version, toxicity] : seen) {
    if (!expected.count(version)) return "response carried unpublished version " + std::to_string(version);
    if (expected[version] != toxicity) return "version " + std::to_string(version) + " scored inconsistently";
    versions.insert(version);
  }
  detail = "read-your-writes ok, 100 storm requests over " + std::to_string(versions.size()) +
           " versions, all consistent";
  return "";
}

}  // namespace

int main() {
  const std::vector<Criterion> criteria = {
      {"matcher oracle equivalence", matcher_equivalence},
      {"scoring formula oracle", scoring_oracle},
      {"normalization suite", normalization},
      {"throughput", throughput},
      {"seeded corpus report exactness", seeded_corpus},
      {"privacy", privacy},
      {"lexicon round-trip", lexicon_round_trip},
      {"service integration", service_integration},
  };
  int failed = 0;
  for (const Criterion& c : criteria) {
    std::string detail, reason;
    const auto t0 = Clock::now();
    try {
      reason = c.run(detail);
    } catch (const std::exception& e) {
      reason = std::string("exception: ") + e.what();
    }
    const std::string took = fmt("%.2f", seconds_since(t0)) + " s";
    if (reason.empty()) {
      std::printf("PASS  %s: %s [%s]\n", c.name.c_str(), detail.c_str(), took.c_str());
    } else {
      ++failed;
      std::printf("FAIL  %s: %s%s%s [%s]\n", c.name.c_str(), reason.c_str(), detail.empty() ? "" : "; ",
                  detail.c_str(), took.c_str());
    }
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
