#pragma once

// Corpus ingestion and cross-platform reporting.
//
// Input is line-delimited JSON, one message per line. Each platform adapter
// maps its native field layout onto Message; authors are pseudonymized and
// text is redacted on the way in. analyze() is a single streaming pass whose
// state is a handful of integer sums, so reports merge exactly.

#include <algorithm>
#include <array>
#include <cctype>
#include <chrono>
#include <cmath>
#include <concepts>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <istream>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "json.hpp"

#include "toxlex/error.hpp"
#include "toxlex/matcher.hpp"
#include "toxlex/privacy.hpp"
#include "toxlex/scorer.hpp"

namespace toxlex {

enum class Platform { kTwitter, kFacebook, kGab, kChan, kGeneric };

inline std::string_view platform_name(Platform p) {
  switch (p) {
    case Platform::kTwitter: return "twitter";
    case Platform::kFacebook: return "facebook";
    case Platform::kGab: return "gab";
    case Platform::kChan: return "chan";
    case Platform::kGeneric: break;
  }
  return "generic";
}

inline std::optional<Platform> platform_from_name(std::string_view s) {
  for (Platform p : {Platform::kTwitter, Platform::kFacebook, Platform::kGab, Platform::kChan, Platform::kGeneric})
    if (platform_name(p) == s) return p;
  return std::nullopt;
}

struct Message {
  std::string id;
  Platform platform = Platform::kGeneric;
  std::optional<std::chrono::sys_seconds> timestamp;
  std::optional<std::string> language;
  std::string text;
  std::string author_pseudonym;
};

struct PrivacyConfig {
  Secret secret;
  RedactionRuleSet rules = RedactionRuleSet::defaults();
};

namespace detail {

inline int two_digits(std::string_view s, std::size_t at) {
  if (at + 2 > s.size() || !std::isdigit(static_cast<unsigned char>(s[at])) ||
      !std::isdigit(static_cast<unsigned char>(s[at + 1])))
    return -1;
  return (s[at] - '0') * 10 + (s[at + 1] - '0');
}

inline std::optional<std::chrono::sys_seconds> make_time(int y, int mo, int d, int h, int mi, int sec,
                                                         int offset_minutes) {
  using namespace std::chrono;
  const year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)}, day{static_cast<unsigned>(d)}};
  if (!ymd.ok() || h < 0 || h > 23 || mi < 0 || mi > 59 || sec < 0 || sec > 60) return std::nullopt;
  return sys_days{ymd} + hours{h} + minutes{mi} + seconds{sec} - minutes{offset_minutes};
}

// Parses "+hh:mm", "+hhmm", "Z" or "" into minutes east of UTC.
inline std::optional<int> parse_offset(std::string_view s) {
  if (s.empty() || s == "Z" || s == "z") return 0;
  if (s[0] != '+' && s[0] != '-') return std::nullopt;
  const int sign = s[0] == '-' ? -1 : 1;
  s.remove_prefix(1);
  int h = two_digits(s, 0);
  int m = 0;
  if (s.size() == 5 && s[2] == ':') m = two_digits(s, 3);
  else if (s.size() == 4) m = two_digits(s, 2);
  else if (s.size() != 2) return std::nullopt;
  if (h < 0 || m < 0) return std::nullopt;
  return sign * (h * 60 + m);
}

// ISO 8601 ("2020-11-03T12:00:00Z", fractional seconds ignored) or the
// Twitter v1.1 form ("Wed Oct 10 20:19:24 +0000 2018").
inline std::optional<std::chrono::sys_seconds> parse_timestamp(std::string_view s) {
  if (s.size() >= 19 && s[4] == '-' && s[7] == '-' && (s[10] == 'T' || s[10] == ' ') && s[13] == ':' &&
      s[16] == ':') {
    const int y1 = two_digits(s, 0), y2 = two_digits(s, 2);
    if (y1 < 0 || y2 < 0) return std::nullopt;
    std::string_view rest = s.substr(19);
    if (!rest.empty() && rest[0] == '.') {
      std::size_t k = 1;
      while (k < rest.size() && std::isdigit(static_cast<unsigned char>(rest[k]))) ++k;
      rest.remove_prefix(k);
    }
    auto off = parse_offset(rest);
    if (!off) return std::nullopt;
    return make_time(y1 * 100 + y2, two_digits(s, 5), two_digits(s, 8), two_digits(s, 11), two_digits(s, 14),
                     two_digits(s, 17), *off);
  }
  if (s.size() == 30 && s[3] == ' ' && s[7] == ' ' && s[10] == ' ' && s[19] == ' ' && s[25] == ' ') {
    static constexpr std::array<std::string_view, 12> kMonths = {"Jan", "Feb", "Mar", "Apr", "May", "Jun",
                                                                 "Jul", "Aug", "Sep", "Oct", "Nov", "Dec"};
    int mo = 0;
    for (int k = 0; k < 12; ++k)
      if (s.substr(4, 3) == kMonths[static_cast<std::size_t>(k)]) mo = k + 1;
    const int y1 = two_digits(s, 26), y2 = two_digits(s, 28);
    auto off = parse_offset(s.substr(20, 5));
    if (mo == 0 || y1 < 0 || y2 < 0 || !off || s[13] != ':' || s[16] != ':') return std::nullopt;
    return make_time(y1 * 100 + y2, mo, two_digits(s, 8), two_digits(s, 11), two_digits(s, 14), two_digits(s, 17),
                     *off);
  }
  return std::nullopt;
}

// Markup in Gab and imageboard posts: tags dropped, <br> and </p> become
// newlines, common entities decoded.
inline std::string strip_html(std::string_view in) {
  std::string out;
  for (std::size_t i = 0; i < in.size();) {
    if (in[i] == '<') {
      const std::size_t close = in.find('>', i);
      if (close == std::string_view::npos) {
        out.append(in.substr(i));
        break;
      }
      std::string tag(in.substr(i + 1, close - i - 1));
      for (char& c : tag) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
      if (tag.starts_with("br") || tag == "/p") out += '\n';
      i = close + 1;
    } else if (in[i] == '&') {
      const std::size_t semi = in.find(';', i);
      if (semi == std::string_view::npos || semi - i > 10) {
        out += in[i++];
        continue;
      }
      const std::string_view ent = in.substr(i + 1, semi - i - 1);
      if (ent == "amp") out += '&';
      else if (ent == "lt") out += '<';
      else if (ent == "gt") out += '>';
      else if (ent == "quot") out += '"';
      else if (ent == "apos") out += '\'';
      else if (ent == "nbsp") out += ' ';
      else if (ent.size() > 1 && ent[0] == '#') {
        char32_t cp = 0;
        bool ok = true;
        const bool hex = ent[1] == 'x' || ent[1] == 'X';
        for (char c : ent.substr(hex ? 2 : 1)) {
          const int v = std::isdigit(static_cast<unsigned char>(c)) ? c - '0'
                        : hex && std::isxdigit(static_cast<unsigned char>(c))
                            ? std::tolower(static_cast<unsigned char>(c)) - 'a' + 10
                            : -1;
          if (v < 0 || cp > 0x10FFFF) ok = false;
          else cp = cp * (hex ? 16 : 10) + static_cast<char32_t>(v);
        }
        if (!ok || cp == 0 || cp > 0x10FFFF) {
          out.append(in.substr(i, semi - i + 1));
        } else {
          append_utf8(out, cp);
        }
      } else {
        out.append(in.substr(i, semi - i + 1));
      }
      i = semi + 1;
    } else {
      out += in[i++];
    }
  }
  return out;
}

inline const nlohmann::json* field(const nlohmann::json& obj, std::initializer_list<std::string_view> path) {
  const nlohmann::json* cur = &obj;
  for (std::string_view key : path) {
    if (!cur->is_object()) return nullptr;
    auto it = cur->find(std::string(key));
    if (it == cur->end() || it->is_null()) return nullptr;
    cur = &*it;
  }
  return cur;
}

// String or integer field, rendered as a string.
inline std::optional<std::string> id_field(const nlohmann::json& obj, std::initializer_list<std::string_view> path) {
  const nlohmann::json* v = field(obj, path);
  if (!v) return std::nullopt;
  if (v->is_string()) return v->get<std::string>();
  if (v->is_number_integer()) return std::to_string(v->get<long long>());
  if (v->is_number_unsigned()) return std::to_string(v->get<unsigned long long>());
  return std::nullopt;
}

struct RawFields {
  std::optional<std::string> id;
  std::optional<std::string> text;
  const nlohmann::json* timestamp = nullptr;
  std::optional<std::string> author;
  std::optional<std::string> language;
};

inline RawFields extract(Platform p, const nlohmann::json& j) {
  RawFields f;
  auto str = [&](std::initializer_list<std::string_view> path) -> std::optional<std::string> {
    const nlohmann::json* v = field(j, path);
    if (v && v->is_string()) return v->get<std::string>();
    return std::nullopt;
  };
  switch (p) {
    case Platform::kTwitter:
      f.id = id_field(j, {"id_str"});
      if (!f.id) f.id = id_field(j, {"id"});
      f.text = str({"full_text"});
      if (!f.text) f.text = str({"text"});
      f.timestamp = field(j, {"created_at"});
      f.author = id_field(j, {"user", "id_str"});
      if (!f.author) f.author = id_field(j, {"user", "id"});
      f.language = str({"lang"});
      break;
    case Platform::kFacebook:
      f.id = id_field(j, {"id"});
      f.text = str({"message"});
      f.timestamp = field(j, {"created_time"});
      f.author = id_field(j, {"from", "id"});
      break;
    case Platform::kGab:
      f.id = id_field(j, {"id"});
      if (auto c = str({"content"})) f.text = strip_html(*c);
      f.timestamp = field(j, {"created_at"});
      f.author = id_field(j, {"account", "id"});
      f.language = str({"language"});
      break;
    case Platform::kChan:
      f.id = id_field(j, {"no"});
      if (auto c = str({"com"})) f.text = strip_html(*c);
      f.timestamp = field(j, {"time"});
      f.author = id_field(j, {"id"});
      if (!f.author) f.author = str({"name"});
      break;
    case Platform::kGeneric:
      f.id = id_field(j, {"id"});
      f.text = str({"text"});
      f.timestamp = field(j, {"timestamp"});
      f.author = id_field(j, {"author"});
      f.language = str({"lang"});
      break;
  }
  return f;
}

}  // namespace detail

// Streams Messages out of a line-delimited file. Malformed lines are counted
// and skipped; finish() raises FormatError when they are the majority.
class MessageReader {
 public:
  MessageReader(std::istream& in, Platform platform, PrivacyConfig privacy)
      : in_(&in), platform_(platform), privacy_(std::move(privacy)) {
    if (privacy_.secret.size() < kMinSecretBytes)
      throw ConfigError("ingest needs a secret of at least " + std::to_string(kMinSecretBytes) + " bytes");
    privacy_.rules.validate();
  }

  MessageReader(const std::string& path, Platform platform, PrivacyConfig privacy)
      : owned_(std::make_unique<std::ifstream>(path)), platform_(platform), privacy_(std::move(privacy)) {
    if (!*owned_) throw IoError("cannot read '" + path + "'");
    in_ = owned_.get();
    if (privacy_.secret.size() < kMinSecretBytes)
      throw ConfigError("ingest needs a secret of at least " + std::to_string(kMinSecretBytes) + " bytes");
    privacy_.rules.validate();
  }

  std::optional<Message> next() {
    std::string line;
    while (std::getline(*in_, line)) {
      ++line_no_;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (detail::trim(line).empty()) continue;
      ++records_;
      if (auto m = convert(line)) return m;
      ++malformed_;
      if (first_malformed_line_ == 0) first_malformed_line_ = line_no_;
    }
    if (in_->bad()) throw IoError("read error at line " + std::to_string(line_no_));
    return std::nullopt;
  }

  // Raises FormatError if more than half of the records were malformed.
  void finish() const {
    if (records_ > 0 && malformed_ * 2 > records_)
      throw FormatError(std::to_string(malformed_) + " of " + std::to_string(records_) +
                        " records do not fit the '" + std::string(platform_name(platform_)) +
                        "' adapter (first at line " + std::to_string(first_malformed_line_) + ")");
  }

  std::size_t records() const { return records_; }
  std::size_t skipped() const { return malformed_; }
  Platform platform() const { return platform_; }

 private:
  std::optional<Message> convert(const std::string& line) const {
    nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object()) return std::nullopt;
    detail::RawFields f = detail::extract(platform_, j);
    if (!f.id || f.id->empty() || !f.text) return std::nullopt;

    Message m;
    m.id = std::move(*f.id);
    m.platform = platform_;
    if (f.timestamp) {
      if (f.timestamp->is_string()) {
        m.timestamp = detail::parse_timestamp(f.timestamp->get<std::string>());
        if (!m.timestamp) return std::nullopt;
      } else if (f.timestamp->is_number_integer()) {
        m.timestamp = std::chrono::sys_seconds{std::chrono::seconds{f.timestamp->get<long long>()}};
      } else {
        return std::nullopt;
      }
    }
    m.language = std::move(f.language);
    m.text = redact(*f.text, privacy_.rules).text;
    if (detail::trim(m.text).empty()) return std::nullopt;
    m.author_pseudonym = f.author ? pseudonymize_author(platform_name(platform_), *f.author, privacy_.secret) : "";
    return m;
  }

  std::unique_ptr<std::ifstream> owned_;
  std::istream* in_ = nullptr;
  Platform platform_;
  PrivacyConfig privacy_;
  std::size_t line_no_ = 0;
  std::size_t records_ = 0;
  std::size_t malformed_ = 0;
  std::size_t first_malformed_line_ = 0;
};

inline MessageReader ingest(const std::string& path, Platform platform, PrivacyConfig privacy) {
  return MessageReader(path, platform, std::move(privacy));
}

// Order-of-magnitude class: none, dozens, hundreds, thousands.
inline int prevalence_bucket(std::uint64_t count) {
  if (count < 10) return 0;
  if (count < 100) return 1;
  if (count < 1000) return 2;
  return 3;
}

inline std::string prevalence_dots(int bucket) {
  std::string out;
  for (int k = 0; k < 3; ++k) out += k < bucket ? "●" : "○";
  return out;
}

struct KeywordPrevalence {
  std::string keyword;
  std::uint64_t count = 0;
  int bucket = 0;

  bool operator==(const KeywordPrevalence&) const = default;
};

struct CorpusReport {
  std::string label;
  std::string source;
  std::uint64_t count = 0;
  // Unset when the corpus is empty.
  std::optional<double> mean_toxicity;
  std::optional<double> pct_antisemitic;
  std::optional<double> pct_violent;
  std::vector<KeywordPrevalence> keyword_prevalence;

  bool operator==(const CorpusReport&) const = default;
};

// Exact, mergeable corpus aggregates.
class CorpusAccumulator {
 public:
  explicit CorpusAccumulator(std::size_t keywords = 0) : keyword_counts_(keywords, 0) {}

  void add(const MessageScore& s) {
    ++count_;
    toxicity_sum_ += static_cast<std::uint64_t>(s.toxicity);
    antisemitic_ += s.antisemitic ? 1 : 0;
    violent_ += s.violent ? 1 : 0;
  }

  void add_keyword_hits(std::size_t keyword, std::uint64_t n) { keyword_counts_[keyword] += n; }

  void merge(const CorpusAccumulator& o) {
    count_ += o.count_;
    toxicity_sum_ += o.toxicity_sum_;
    antisemitic_ += o.antisemitic_;
    violent_ += o.violent_;
    for (std::size_t k = 0; k < keyword_counts_.size() && k < o.keyword_counts_.size(); ++k)
      keyword_counts_[k] += o.keyword_counts_[k];
  }

  std::uint64_t count() const { return count_; }
  std::uint64_t toxicity_sum() const { return toxicity_sum_; }
  std::uint64_t antisemitic() const { return antisemitic_; }
  std::uint64_t violent() const { return violent_; }

  CorpusReport report(std::string label, std::string source, std::span<const std::string> keywords) const {
    CorpusReport r;
    r.label = std::move(label);
    r.source = std::move(source);
    r.count = count_;
    if (count_ > 0) {
      const auto n = static_cast<double>(count_);
      r.mean_toxicity = static_cast<double>(toxicity_sum_) / n;
      r.pct_antisemitic = 100.0 * static_cast<double>(antisemitic_) / n;
      r.pct_violent = 100.0 * static_cast<double>(violent_) / n;
    }
    for (std::size_t k = 0; k < keywords.size() && k < keyword_counts_.size(); ++k)
      r.keyword_prevalence.push_back({keywords[k], keyword_counts_[k], prevalence_bucket(keyword_counts_[k])});
    return r;
  }

 private:
  std::uint64_t count_ = 0;
  std::uint64_t toxicity_sum_ = 0;
  std::uint64_t antisemitic_ = 0;
  std::uint64_t violent_ = 0;
  std::vector<std::uint64_t> keyword_counts_;
};

// Scores messages and counts keyword hits into an accumulator. Keywords
// are matched with their own automaton, so entries that never affect the
// score (neutral reference terms) still count.
class CorpusAnalyzer {
 public:
  CorpusAnalyzer(const CompiledLexicon& compiled, const ScoreConfig& config, std::span<const std::string> keywords)
      : compiled_(&compiled), config_(config), keyword_matcher_(compile_keywords(keywords)) {
    config_.validate();
    for (const std::string& k : keywords)
      if (std::find(keywords_.begin(), keywords_.end(), k) == keywords_.end()) keywords_.push_back(k);
  }

  CorpusAccumulator make_accumulator() const { return CorpusAccumulator(keywords_.size()); }

  void add(CorpusAccumulator& acc, const Message& m) const {
    const NormalizedText text = normalize_text(m.text);
    acc.add(score_text(*compiled_, text, config_));
    if (keywords_.empty()) return;
    for (const Match& hit : keyword_matcher_.find_matches(text)) {
      // Keyword entries are ordered by id; map back to input order.
      const std::string& id = keyword_matcher_.entry(hit.entry_index).id;
      const auto pos = std::find(keywords_.begin(), keywords_.end(), id) - keywords_.begin();
      acc.add_keyword_hits(static_cast<std::size_t>(pos), 1);
    }
  }

  const std::vector<std::string>& keywords() const { return keywords_; }

 private:
  const CompiledLexicon* compiled_;
  ScoreConfig config_;
  CompiledLexicon keyword_matcher_;
  std::vector<std::string> keywords_;
};

// Single streaming pass. `next` yields std::optional<Message>, nullopt at
// the end.
template <class NextFn>
  requires std::invocable<NextFn&>
CorpusReport analyze(NextFn&& next, const CompiledLexicon& compiled, const ScoreConfig& config,
                     std::span<const std::string> keywords, std::string label = "corpus",
                     std::string source = "generic") {
  CorpusAnalyzer analyzer(compiled, config, keywords);
  CorpusAccumulator acc = analyzer.make_accumulator();
  while (std::optional<Message> m = next()) analyzer.add(acc, *m);
  return acc.report(std::move(label), std::move(source), analyzer.keywords());
}

inline CorpusReport analyze(std::span<const Message> messages, const CompiledLexicon& compiled,
                            const ScoreConfig& config, std::span<const std::string> keywords,
                            std::string label = "corpus", std::string source = "generic") {
  std::size_t i = 0;
  return analyze([&]() -> std::optional<Message> { return i < messages.size() ? std::optional(messages[i++]) : std::nullopt; },
                 compiled, config, keywords, std::move(label), std::move(source));
}

// Same result as analyze(), scoring fixed-size batches on `threads` workers
// and merging their accumulators.
template <class NextFn>
  requires std::invocable<NextFn&>
CorpusReport analyze_parallel(NextFn&& next, const CompiledLexicon& compiled, const ScoreConfig& config,
                              std::span<const std::string> keywords, std::size_t threads,
                              std::string label = "corpus", std::string source = "generic",
                              std::size_t batch_size = 4096) {
  threads = std::max<std::size_t>(threads, 1);
  CorpusAnalyzer analyzer(compiled, config, keywords);
  CorpusAccumulator total = analyzer.make_accumulator();
  std::vector<Message> batch;
  bool done = false;
  while (!done) {
    batch.clear();
    while (batch.size() < batch_size * threads) {
      std::optional<Message> m = next();
      if (!m) {
        done = true;
        break;
      }
      batch.push_back(std::move(*m));
    }
    std::vector<CorpusAccumulator> parts(threads, analyzer.make_accumulator());
    std::vector<std::thread> workers;
    for (std::size_t t = 0; t < threads; ++t)
      workers.emplace_back([&, t] {
        for (std::size_t i = t; i < batch.size(); i += threads) analyzer.add(parts[t], batch[i]);
      });
    for (std::thread& w : workers) w.join();
    for (const CorpusAccumulator& p : parts) total.merge(p);
  }
  return total.report(std::move(label), std::move(source), analyzer.keywords());
}

enum class ReportFormat { kText, kCsv, kJson };

namespace detail {

inline std::string fixed1(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.1f", v);
  return buf;
}

inline std::string raw_number(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

inline std::string csv_cell(std::string_view s) {
  if (s.find_first_of(",\"\n") == std::string_view::npos) return std::string(s);
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace detail

inline nlohmann::json to_json(const CorpusReport& r) {
  auto opt = [](const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); };
  nlohmann::json kw = nlohmann::json::array();
  for (const KeywordPrevalence& k : r.keyword_prevalence)
    kw.push_back({{"keyword", k.keyword}, {"count", k.count}, {"bucket", k.bucket}});
  return {{"label", r.label},
          {"source", r.source},
          {"count", r.count},
          {"mean_toxicity", opt(r.mean_toxicity)},
          {"pct_antisemitic", opt(r.pct_antisemitic)},
          {"pct_violent", opt(r.pct_violent)},
          {"keyword_prevalence", kw}};
}

inline std::string render_report(const CorpusReport& r, ReportFormat format) {
  std::string out;
  switch (format) {
    case ReportFormat::kText: {
      out += "SOURCE " + r.source + "\n";
      out += "LABEL " + r.label + "\n";
      out += "SAMPLE " + std::to_string(r.count) + " messages\n";
      if (r.count == 0) {
        out += "TOXICITY n/a\nANTI-SEMITIC n/a\nVIOLENT n/a\n";
      } else {
        out += "TOXICITY " + std::to_string(std::lround(*r.mean_toxicity)) + "/100\n";
        out += "ANTI-SEMITIC " + detail::fixed1(*r.pct_antisemitic) + "%\n";
        out += "VIOLENT " + detail::fixed1(*r.pct_violent) + "%\n";
      }
      if (!r.keyword_prevalence.empty()) {
        out += "\nKEYWORD PREVALENCE\n";
        for (const KeywordPrevalence& k : r.keyword_prevalence)
          out += k.keyword + " " + prevalence_dots(k.bucket) + " (" + std::to_string(k.count) + ")\n";
      }
      break;
    }
    case ReportFormat::kCsv: {
      auto opt = [](const std::optional<double>& v) { return v ? detail::raw_number(*v) : std::string(); };
      out += "corpus,label,count,mean_toxicity,pct_antisemitic,pct_violent\n";
      out += detail::csv_cell(r.source) + "," + detail::csv_cell(r.label) + "," + std::to_string(r.count) + "," +
             opt(r.mean_toxicity) + "," + opt(r.pct_antisemitic) + "," + opt(r.pct_violent) + "\n";
      if (!r.keyword_prevalence.empty()) {
        out += "\nkeyword,count,bucket\n";
        for (const KeywordPrevalence& k : r.keyword_prevalence)
          out += detail::csv_cell(k.keyword) + "," + std::to_string(k.count) + "," + std::to_string(k.bucket) + "\n";
      }
      break;
    }
    case ReportFormat::kJson:
      out = to_json(r).dump(2) + "\n";
      break;
  }
  return out;
}

}  // namespace toxlex
