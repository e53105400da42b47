// toxlex command-line front end.
//
//   toxlex score    --lexicon L (--text T | --file F [--lines]) [--format json|plain|ansi|html]
//   toxlex analyze  --lexicon L --input F --adapter A [--keywords K] [--format text|csv|json]
//   toxlex anonymize --input F --adapter A          (or --text T)
//   toxlex suggest  --lexicon L --input F --adapter A [--enqueue]
//   toxlex lexicon validate --lexicon L
//   toxlex serve    --lexicon L [--port P] [--static DIR] [--write-back]
//
// Exit codes: 0 ok, 1 error, 2 `score` found an anti-Semitic message.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "toxlex/toxlex.hpp"

namespace {

using namespace toxlex;

constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitFlagged = 2;

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::string env_or(const char* name, const std::string& fallback) {
  const char* v = std::getenv(name);
  return v && *v ? std::string(v) : fallback;
}

// Optional JSON config file:
//   {"privacy": {"secret": "<hex>"},
//    "score": {"points_per_level": 25, "antisemitic_threshold": 50, "violent_min_level": 2}}
struct Settings {
  std::string config_path;
  std::string lexicon_path;
  std::optional<int> points, threshold, violent_level;

  nlohmann::json config() const {
    if (config_path.empty()) return nlohmann::json::object();
    nlohmann::json j = nlohmann::json::parse(read_file(config_path), nullptr, false);
    if (j.is_discarded() || !j.is_object()) throw ConfigError("config file '" + config_path + "' is not a JSON object");
    return j;
  }

  ScoreConfig score_config() const {
    ScoreConfig c;
    const nlohmann::json j = config();
    if (auto s = j.find("score"); s != j.end() && s->is_object()) {
      c.points_per_level = s->value("points_per_level", c.points_per_level);
      c.antisemitic_threshold = s->value("antisemitic_threshold", c.antisemitic_threshold);
      c.violent_min_level = s->value("violent_min_level", c.violent_min_level);
    }
    if (points) c.points_per_level = *points;
    if (threshold) c.antisemitic_threshold = *threshold;
    if (violent_level) c.violent_min_level = *violent_level;
    c.validate();
    return c;
  }

  // TOXLEX_SECRET wins over the config file. The value is never echoed.
  Secret secret() const {
    std::string hex = env_or("TOXLEX_SECRET", "");
    if (hex.empty()) {
      const nlohmann::json j = config();
      if (auto p = j.find("privacy"); p != j.end() && p->is_object())
        if (auto s = p->find("secret"); s != p->end() && s->is_string()) hex = s->get<std::string>();
    }
    if (hex.empty()) throw ConfigError("no secret: set TOXLEX_SECRET or privacy.secret in the config file");
    return secret_from_hex(hex);
  }

  std::string lexicon() const {
    const std::string path = lexicon_path.empty() ? env_or("TOXLEX_LEXICON", "") : lexicon_path;
    if (path.empty()) throw ConfigError("no lexicon: pass --lexicon or set TOXLEX_LEXICON");
    return path;
  }

  Lexicon load_lexicon() const {
    const std::string path = lexicon();
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read lexicon '" + path + "'");
    try {
      return parse_lexicon(in);
    } catch (const ParseError& e) {
      throw ParseError(path + ": " + e.what());
    }
  }
};

Platform parse_platform(const std::string& name) {
  auto p = platform_from_name(name);
  if (!p) throw ConfigError("unknown adapter '" + name + "' (twitter, facebook, gab, chan, generic)");
  return *p;
}

std::vector<std::string> read_keywords(const std::string& path) {
  std::vector<std::string> out;
  if (path.empty()) return out;
  std::istringstream in(read_file(path));
  std::string line;
  while (std::getline(in, line)) {
    std::string_view k = detail::trim(line);
    if (!k.empty() && k.front() != '#') out.emplace_back(k);
  }
  return out;
}

void add_common(CLI::App* cmd, Settings& s) {
  cmd->add_option("--lexicon,-l", s.lexicon_path, "Lexicon TSV (default: $TOXLEX_LEXICON)");
  cmd->add_option("--config", s.config_path, "JSON config file");
  cmd->add_option("--points-per-level", s.points, "Toxicity points per consensus level");
  cmd->add_option("--threshold", s.threshold, "Anti-Semitic flag threshold (0-100)");
  cmd->add_option("--violent-level", s.violent_level, "Minimum KILL consensus for the violent flag");
}

struct ScoreArgs {
  std::string text;
  std::string file;
  bool lines = false;
  std::string format = "json";
};

int run_score(const Settings& s, const ScoreArgs& a) {
  const Lexicon lex = s.load_lexicon();
  const CompiledLexicon compiled = compile(lex);
  const ScoreConfig config = s.score_config();

  std::vector<std::string> messages;
  if (!a.file.empty()) {
    std::string content = a.file == "-" ? std::string(std::istreambuf_iterator<char>(std::cin), {}) : read_file(a.file);
    if (a.lines) {
      std::istringstream in(content);
      for (std::string line; std::getline(in, line);) messages.push_back(line);
    } else {
      messages.push_back(std::move(content));
    }
  } else {
    messages.push_back(a.text);
  }

  bool flagged = false;
  for (const std::string& m : messages) {
    const MessageScore score = score_message(compiled, m, config);
    flagged = flagged || score.antisemitic;
    if (a.format == "json") {
      std::cout << score_record(score) << "\n";
    } else {
      const HighlightFormat f = a.format == "ansi"   ? HighlightFormat::kAnsi
                                : a.format == "html" ? HighlightFormat::kHtml
                                                     : HighlightFormat::kPlain;
      std::cout << score.toxicity << "/100" << (score.antisemitic ? " ANTI-SEMITIC" : "")
                << (score.violent ? " VIOLENT" : "") << "\t" << render_highlights(m, score, f) << "\n";
    }
  }
  return flagged ? kExitFlagged : kExitOk;
}

struct AnalyzeArgs {
  std::string input;
  std::string adapter = "generic";
  std::string keywords;
  std::string format = "text";
  std::string label;
  unsigned threads = 1;
};

int run_analyze(const Settings& s, const AnalyzeArgs& a) {
  const CompiledLexicon compiled = compile(s.load_lexicon());
  const ScoreConfig config = s.score_config();
  const Platform platform = parse_platform(a.adapter);
  const std::vector<std::string> keywords = read_keywords(a.keywords);

  MessageReader reader(a.input, platform, PrivacyConfig{s.secret(), RedactionRuleSet::defaults()});
  auto next = [&] { return reader.next(); };
  const std::string label = a.label.empty() ? a.input : a.label;
  const CorpusReport report =
      a.threads > 1
          ? analyze_parallel(next, compiled, config, keywords, a.threads, label, std::string(platform_name(platform)))
          : analyze(next, compiled, config, keywords, label, std::string(platform_name(platform)));
  std::cerr << "read " << reader.records() << " records, skipped " << reader.skipped() << " malformed\n";
  reader.finish();

  const ReportFormat f = a.format == "csv" ? ReportFormat::kCsv : a.format == "json" ? ReportFormat::kJson
                                                                                     : ReportFormat::kText;
  std::cout << render_report(report, f);
  return kExitOk;
}

struct AnonymizeArgs {
  std::string input;
  std::string adapter = "generic";
  std::string text;
};

int run_anonymize(const Settings& s, const AnonymizeArgs& a) {
  if (a.input.empty()) {
    std::cout << redact(a.text).text << "\n";
    return kExitOk;
  }
  MessageReader reader(a.input, parse_platform(a.adapter), PrivacyConfig{s.secret(), RedactionRuleSet::defaults()});
  while (std::optional<Message> m = reader.next()) {
    nlohmann::json j = {{"id", m->id},
                        {"platform", platform_name(m->platform)},
                        {"text", m->text},
                        {"author", m->author_pseudonym}};
    if (m->timestamp) j["timestamp"] = m->timestamp->time_since_epoch().count();
    if (m->language) j["lang"] = *m->language;
    std::cout << j.dump() << "\n";
  }
  std::cerr << "read " << reader.records() << " records, skipped " << reader.skipped() << " malformed\n";
  reader.finish();
  return kExitOk;
}

struct SuggestArgs {
  std::string input;
  std::string adapter = "generic";
  std::uint64_t min_support = 5;
  std::size_t top_k = 50;
  bool enqueue = false;
  std::string lang = "en";
};

int run_suggest(const Settings& s, const SuggestArgs& a) {
  const Lexicon lex = s.load_lexicon();
  const CompiledLexicon compiled = compile(lex);
  MessageReader reader(a.input, parse_platform(a.adapter), PrivacyConfig{s.secret(), RedactionRuleSet::defaults()});
  const std::vector<Candidate> cands = suggest_candidates(
      [&]() -> std::optional<std::string> {
        auto m = reader.next();
        return m ? std::optional<std::string>(std::move(m->text)) : std::nullopt;
      },
      compiled, s.score_config(), ExpandConfig{a.min_support, a.top_k});
  std::cerr << "read " << reader.records() << " records, skipped " << reader.skipped() << " malformed\n";
  reader.finish();
  std::cout << render_candidates_csv(cands);

  if (a.enqueue) {
    auto lang = language_from_code(a.lang);
    if (!lang) throw ConfigError("unknown language '" + a.lang + "'");
    EnqueueResult r = enqueue_candidates(cands, lex, *lang);
    if (!r.added.empty()) {
      const std::string path = s.lexicon();
      const std::string tmp = path + ".tmp";
      {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        out << serialize_lexicon(r.lexicon);
        if (!out) throw IoError("cannot write '" + tmp + "'");
      }
      std::filesystem::rename(tmp, path);
    }
    std::cerr << "enqueued " << r.added.size() << " provisional entries, skipped " << r.skipped.size()
              << " already present\n";
  }
  return kExitOk;
}

int run_validate(const Settings& s) {
  const Lexicon lex = s.load_lexicon();
  const CompiledLexicon compiled = compile(lex);
  std::size_t ok = 0, disputed = 0, provisional = 0, phrase = 0, combo = 0;
  for (const auto& [id, e] : lex.entries()) {
    switch (e.status()) {
      case EntryStatus::kOk: ++ok; break;
      case EntryStatus::kDisputed: ++disputed; break;
      case EntryStatus::kProvisional: ++provisional; break;
    }
    (e.kind() == PatternKind::kPhrase ? phrase : combo) += 1;
  }
  std::cout << lex.size() << " entries (" << phrase << " phrase, " << combo << " combo)\n"
            << ok << " ok, " << disputed << " disputed, " << provisional << " provisional\n"
            << compiled.size() << " compiled into " << compiled.node_count() << " automaton states\n";
  return kExitOk;
}

struct ServeArgs {
  std::string host = "127.0.0.1";
  int port = 8080;
  std::string static_dir;
  bool write_back = false;
};

int run_serve(const Settings& s, const ServeArgs& a) {
  ServiceConfig c;
  c.host = a.host;
  c.port = a.port;
  c.lexicon_path = s.lexicon();
  c.write_back = a.write_back;
  c.score = s.score_config();
  c.static_dir = a.static_dir;
  Service service(s.load_lexicon(), c);
  std::cerr << "listening on " << c.host << ":" << c.port << "\n";
  service.run();
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Lexicon-based detection of anti-Semitic and toxic messages"};
  app.require_subcommand(1);
  Settings settings;

  ScoreArgs score;
  auto* score_cmd = app.add_subcommand("score", "Score one message (or one per line)");
  add_common(score_cmd, settings);
  auto* text_opt = score_cmd->add_option("--text,-t", score.text, "Message text");
  auto* file_opt = score_cmd->add_option("--file,-f", score.file, "Read the message from a file ('-' for stdin)");
  text_opt->excludes(file_opt);
  score_cmd->add_flag("--lines", score.lines, "Treat every line of --file as a message");
  score_cmd->add_option("--format", score.format, "json, plain, ansi or html")
      ->check(CLI::IsMember({"json", "plain", "ansi", "html"}));

  AnalyzeArgs analyze_args;
  auto* analyze_cmd = app.add_subcommand("analyze", "Corpus report over a line-delimited dump");
  add_common(analyze_cmd, settings);
  analyze_cmd->add_option("--input,-i", analyze_args.input, "Input file")->required();
  analyze_cmd->add_option("--adapter,-a", analyze_args.adapter, "twitter, facebook, gab, chan or generic");
  analyze_cmd->add_option("--keywords,-k", analyze_args.keywords, "Keyword list, one per line");
  analyze_cmd->add_option("--format", analyze_args.format, "text, csv or json")
      ->check(CLI::IsMember({"text", "csv", "json"}));
  analyze_cmd->add_option("--label", analyze_args.label, "Corpus label (default: input path)");
  analyze_cmd->add_option("--threads", analyze_args.threads, "Scoring threads")->check(CLI::Range(1u, 256u));

  AnonymizeArgs anon;
  auto* anon_cmd = app.add_subcommand("anonymize", "Pseudonymize authors and redact message text");
  anon_cmd->add_option("--config", settings.config_path, "JSON config file");
  auto* anon_in = anon_cmd->add_option("--input,-i", anon.input, "Input file");
  auto* anon_text = anon_cmd->add_option("--text,-t", anon.text, "Redact a single text");
  anon_in->excludes(anon_text);
  anon_cmd->add_option("--adapter,-a", anon.adapter, "twitter, facebook, gab, chan or generic");

  SuggestArgs suggest;
  auto* suggest_cmd = app.add_subcommand("suggest", "Rank candidate terms for annotation");
  add_common(suggest_cmd, settings);
  suggest_cmd->add_option("--input,-i", suggest.input, "Input file")->required();
  suggest_cmd->add_option("--adapter,-a", suggest.adapter, "twitter, facebook, gab, chan or generic");
  suggest_cmd->add_option("--min-support", suggest.min_support, "Minimum messages containing a term");
  suggest_cmd->add_option("--top-k", suggest.top_k, "Number of candidates");
  suggest_cmd->add_flag("--enqueue", suggest.enqueue, "Add candidates to the lexicon as provisional entries");
  suggest_cmd->add_option("--lang", suggest.lang, "Language of enqueued entries");

  auto* lexicon_cmd = app.add_subcommand("lexicon", "Lexicon maintenance");
  lexicon_cmd->require_subcommand(1);
  auto* validate_cmd = lexicon_cmd->add_subcommand("validate", "Parse and compile a lexicon file");
  add_common(validate_cmd, settings);

  ServeArgs serve;
  auto* serve_cmd = app.add_subcommand("serve", "Run the HTTP service");
  add_common(serve_cmd, settings);
  serve_cmd->add_option("--host", serve.host, "Listen address");
  serve_cmd->add_option("--port,-p", serve.port, "Listen port");
  serve_cmd->add_option("--static", serve.static_dir, "Directory served at /");
  serve_cmd->add_flag("--write-back", serve.write_back, "Save accepted annotations to the lexicon file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitError;
  }

  try {
    if (score_cmd->parsed()) {
      if (score.file.empty() && text_opt->count() == 0) throw ConfigError("score needs --text or --file");
      return run_score(settings, score);
    }
    if (analyze_cmd->parsed()) return run_analyze(settings, analyze_args);
    if (anon_cmd->parsed()) {
      if (anon.input.empty() && anon_text->count() == 0) throw ConfigError("anonymize needs --input or --text");
      return run_anonymize(settings, anon);
    }
    if (suggest_cmd->parsed()) return run_suggest(settings, suggest);
    if (validate_cmd->parsed()) return run_validate(settings);
    if (serve_cmd->parsed()) return run_serve(settings, serve);
  } catch (const std::exception& e) {
    std::cerr << "toxlex: " << e.what() << "\n";
    return kExitError;
  }
  return kExitError;
}
