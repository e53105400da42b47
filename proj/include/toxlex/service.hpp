#pragma once

// HTTP service for real-time scoring and lexicon curation.
//
// Requests score against an immutable snapshot (lexicon plus its compiled
// matcher). Annotation writes are serialized by a writer lock: the writer
// derives the next lexicon, compiles it, and publishes the new snapshot with
// a pointer swap. A request holds one snapshot for its whole lifetime, so
// the version it reports always agrees with the matches it returns.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <thread>
#include <utility>
#include <vector>

#include "httplib.h"
#include "json.hpp"

#include "toxlex/error.hpp"
#include "toxlex/expand.hpp"
#include "toxlex/lexicon.hpp"
#include "toxlex/matcher.hpp"
#include "toxlex/scorer.hpp"

namespace toxlex {

inline constexpr std::size_t kMaxBatch = 1000;

struct ServiceConfig {
  std::string host = "127.0.0.1";
  int port = 8080;  // 0 picks a free port
  std::string lexicon_path;
  bool write_back = false;  // persist accepted annotations to lexicon_path
  ScoreConfig score;
  std::string static_dir;  // UI bundle, served at / when set
};

struct Snapshot {
  Lexicon lexicon;
  CompiledLexicon compiled;
};

inline nlohmann::json to_json(const LexiconEntry& e) {
  nlohmann::json annotations = nlohmann::json::array();
  for (const Annotation& a : e.annotations)
    annotations.push_back({{"annotator", a.annotator_id},
                           {"score", a.score},
                           {"labels", a.labels.codes()},
                           {"timestamp", a.timestamp.time_since_epoch().count()}});
  nlohmann::json consensus = nullptr;
  if (e.consensus.is_scored()) consensus = e.consensus.score();
  else if (e.consensus.is_disputed()) consensus = "DISPUTED";
  return {{"id", e.id},
          {"pattern", e.pattern},
          {"kind", e.kind() == PatternKind::kPhrase ? "PHRASE" : "COMBO"},
          {"language", language_code(e.language)},
          {"translation", e.translation ? nlohmann::json(*e.translation) : nlohmann::json(nullptr)},
          {"annotations", annotations},
          {"consensus", consensus},
          {"status", status_name(e.status())},
          {"labels", e.labels.codes()}};
}

// The exact bytes of a score record; shared with the CLI.
inline std::string score_record(const MessageScore& s) { return to_json(s).dump(); }

class Service {
 public:
  Service(Lexicon lexicon, ServiceConfig config) : config_(std::move(config)) {
    config_.score.validate();
    CompiledLexicon compiled = compile(lexicon);
    snapshot_ = std::make_shared<const Snapshot>(Snapshot{std::move(lexicon), std::move(compiled)});
    routes();
  }

  std::shared_ptr<const Snapshot> snapshot() const {
    std::lock_guard lock(snapshot_mutex_);
    return snapshot_;
  }

  // Applies one annotation and publishes the recompiled snapshot. Throws
  // VersionConflict when `expected_version` is stale.
  std::shared_ptr<const Snapshot> annotate(std::string_view entry_id, const Annotation& annotation,
                                           std::optional<std::uint64_t> expected_version = std::nullopt) {
    std::lock_guard writer(writer_mutex_);
    auto current = snapshot();
    if (expected_version && *expected_version != current->lexicon.version())
      throw VersionConflict("lexicon is at version " + std::to_string(current->lexicon.version()) +
                            ", request expected " + std::to_string(*expected_version));
    Lexicon next = upsert_annotation(current->lexicon, entry_id, annotation);
    return publish(std::move(next));
  }

  EnqueueResult enqueue(std::span<const Candidate> candidates, Language language) {
    std::lock_guard writer(writer_mutex_);
    auto current = snapshot();
    EnqueueResult r = enqueue_candidates(candidates, current->lexicon, language);
    if (!r.added.empty()) publish(r.lexicon);
    return r;
  }

  httplib::Server& server() { return server_; }

  // Binds and serves on a background thread; returns the bound port.
  int start() {
    int port = config_.port;
    if (port == 0) {
      port = server_.bind_to_any_port(config_.host);
    } else if (!server_.bind_to_port(config_.host, port)) {
      port = -1;
    }
    if (port < 0) throw IoError("cannot listen on " + config_.host + ":" + std::to_string(config_.port));
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
    return port;
  }

  // Blocks until stop() is called from elsewhere.
  void run() {
    if (!server_.listen(config_.host, config_.port))
      throw IoError("cannot listen on " + config_.host + ":" + std::to_string(config_.port));
  }

  void stop() {
    server_.stop();
    if (thread_.joinable()) thread_.join();
  }

  ~Service() { stop(); }

  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

 private:
  std::shared_ptr<const Snapshot> publish(Lexicon next) {
    CompiledLexicon compiled = compile(next);
    if (config_.write_back && !config_.lexicon_path.empty()) persist(next);
    auto snap = std::make_shared<const Snapshot>(Snapshot{std::move(next), std::move(compiled)});
    std::lock_guard lock(snapshot_mutex_);
    snapshot_ = snap;
    return snap;
  }

  void persist(const Lexicon& lex) const {
    const std::string tmp = config_.lexicon_path + ".tmp";
    {
      std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
      out << serialize_lexicon(lex);
      if (!out) throw IoError("cannot write '" + tmp + "'");
    }
    std::error_code ec;
    std::filesystem::rename(tmp, config_.lexicon_path, ec);
    if (ec) throw IoError("cannot replace '" + config_.lexicon_path + "': " + ec.message());
  }

  static void reply(httplib::Response& res, int status, const nlohmann::json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
  }

  static void fail(httplib::Response& res, int status, const std::string& message) {
    reply(res, status, {{"error", message}});
  }

  static std::optional<nlohmann::json> body_json(const httplib::Request& req, httplib::Response& res) {
    nlohmann::json j = nlohmann::json::parse(req.body, nullptr, false);
    if (j.is_discarded()) {
      fail(res, 400, "request body is not valid JSON");
      return std::nullopt;
    }
    return j;
  }

  static std::optional<std::string> text_of(const nlohmann::json& j) {
    if (j.is_string()) return j.get<std::string>();
    if (j.is_object()) {
      auto it = j.find("text");
      if (it != j.end() && it->is_string()) return it->get<std::string>();
    }
    return std::nullopt;
  }

  nlohmann::json score_json(const Snapshot& snap, const std::string& text, const nlohmann::json& request) const {
    const MessageScore s = score_message(snap.compiled, text, config_.score);
    nlohmann::json out = to_json(s);
    if (request.is_object()) {
      auto h = request.find("highlight");
      if (h != request.end() && h->is_string()) {
        const std::string f = h->get<std::string>();
        if (f == "html") out["highlight"] = render_highlights(text, s, HighlightFormat::kHtml);
        else if (f == "plain") out["highlight"] = render_highlights(text, s, HighlightFormat::kPlain);
        else if (f == "ansi") out["highlight"] = render_highlights(text, s, HighlightFormat::kAnsi);
        else throw PreconditionError("unknown highlight format '" + f + "'");
      }
    }
    return out;
  }

  void routes() {
    server_.set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
      try {
        std::rethrow_exception(ep);
      } catch (const NotFoundError& e) {
        fail(res, 404, e.what());
      } catch (const VersionConflict& e) {
        fail(res, 409, e.what());
      } catch (const ParseError& e) {
        fail(res, 400, e.what());
      } catch (const PreconditionError& e) {
        fail(res, 400, e.what());
      } catch (const std::exception& e) {
        fail(res, 500, e.what());
      } catch (...) {
        fail(res, 500, "internal error");
      }
    });

    server_.Post("/v1/score", [this](const httplib::Request& req, httplib::Response& res) {
      auto j = body_json(req, res);
      if (!j) return;
      auto text = j->is_object() ? text_of(*j) : std::nullopt;
      if (!text) return fail(res, 400, "expected {\"text\": string}");
      auto snap = snapshot();
      reply(res, 200, score_json(*snap, *text, *j));
    });

    server_.Post("/v1/score/batch", [this](const httplib::Request& req, httplib::Response& res) {
      auto j = body_json(req, res);
      if (!j) return;
      const nlohmann::json* items = &*j;
      if (j->is_object() && j->contains("texts")) items = &(*j)["texts"];
      if (!items->is_array()) return fail(res, 400, "expected an array of texts");
      if (items->size() > kMaxBatch)
        return fail(res, 413, "batch of " + std::to_string(items->size()) + " exceeds the limit of " +
                                  std::to_string(kMaxBatch));
      std::vector<std::string> texts;
      for (const nlohmann::json& item : *items) {
        auto t = text_of(item);
        if (!t) return fail(res, 400, "batch item " + std::to_string(texts.size()) + " has no text");
        texts.push_back(std::move(*t));
      }
      auto snap = snapshot();
      nlohmann::json out = nlohmann::json::array();
      for (std::size_t i = 0; i < texts.size(); ++i) out.push_back(score_json(*snap, texts[i], (*items)[i]));
      reply(res, 200, out);
    });

    server_.Get("/v1/lexicon", [this](const httplib::Request& req, httplib::Response& res) {
      auto snap = snapshot();
      std::optional<Language> lang;
      std::optional<EntryStatus> status;
      if (req.has_param("lang")) {
        lang = language_from_code(req.get_param_value("lang"));
        if (!lang) return fail(res, 400, "unknown language '" + req.get_param_value("lang") + "'");
      }
      if (req.has_param("status")) {
        status = status_from_name(detail::upper_ascii(req.get_param_value("status")));
        if (!status) return fail(res, 400, "unknown status '" + req.get_param_value("status") + "'");
      }
      const std::string prefix = req.has_param("prefix") ? req.get_param_value("prefix") : "";
      nlohmann::json entries = nlohmann::json::array();
      for (const auto& [id, e] : snap->lexicon.entries()) {
        if (lang && e.language != *lang) continue;
        if (status && e.status() != *status) continue;
        if (!prefix.empty() && !e.pattern.starts_with(prefix) && !id.starts_with(prefix)) continue;
        entries.push_back(to_json(e));
      }
      reply(res, 200, {{"lexicon_version", snap->lexicon.version()}, {"entries", entries}});
    });

    server_.Get(R"(/v1/lexicon/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
      auto snap = snapshot();
      const LexiconEntry* e = snap->lexicon.find(req.matches[1].str());
      if (!e) return fail(res, 404, "unknown entry id '" + req.matches[1].str() + "'");
      reply(res, 200, {{"lexicon_version", snap->lexicon.version()}, {"entry", to_json(*e)}});
    });

    server_.Put(R"(/v1/lexicon/([^/]+)/annotation)", [this](const httplib::Request& req, httplib::Response& res) {
      auto j = body_json(req, res);
      if (!j) return;
      if (!j->is_object()) return fail(res, 400, "expected an object");
      auto annotator = j->find("annotator");
      auto score = j->find("score");
      if (annotator == j->end() || !annotator->is_string() || annotator->get<std::string>().empty())
        return fail(res, 400, "annotator must be a non-empty string");
      if (score == j->end() || !score->is_number_integer()) return fail(res, 400, "score must be an integer");
      Annotation a;
      a.annotator_id = annotator->get<std::string>();
      const long long s = score->get<long long>();
      if (s < kMinScore || s > kMaxScore) return fail(res, 400, "score " + std::to_string(s) + " outside 0-4");
      a.score = static_cast<int>(s);
      if (auto labels = j->find("labels"); labels != j->end()) {
        if (!labels->is_array()) return fail(res, 400, "labels must be an array of codes");
        for (const nlohmann::json& l : *labels) {
          auto code = l.is_string() ? label_from_code(detail::upper_ascii(l.get<std::string>())) : std::nullopt;
          if (!code) return fail(res, 400, "unknown label " + l.dump());
          a.labels.set(*code);
        }
      }
      a.timestamp = std::chrono::time_point_cast<std::chrono::seconds>(std::chrono::system_clock::now());
      std::optional<std::uint64_t> expected;
      if (auto v = j->find("expected_version"); v != j->end() && !v->is_null()) {
        if (!v->is_number_unsigned() && !v->is_number_integer())
          return fail(res, 400, "expected_version must be an integer");
        expected = v->get<std::uint64_t>();
      }
      auto snap = annotate(req.matches[1].str(), a, expected);
      reply(res, 200,
            {{"lexicon_version", snap->lexicon.version()},
             {"entry", to_json(*snap->lexicon.find(req.matches[1].str()))}});
    });

    server_.Get("/v1/candidates", [this](const httplib::Request&, httplib::Response& res) {
      auto snap = snapshot();
      nlohmann::json entries = nlohmann::json::array();
      for (const auto& [id, e] : snap->lexicon.entries())
        if (e.status() == EntryStatus::kProvisional) entries.push_back(to_json(e));
      reply(res, 200, {{"lexicon_version", snap->lexicon.version()}, {"entries", entries}});
    });

    // Body: {"terms": [...], "lang": "en"}
    server_.Post("/v1/candidates", [this](const httplib::Request& req, httplib::Response& res) {
      auto j = body_json(req, res);
      if (!j) return;
      if (!j->is_object() || !j->contains("terms") || !(*j)["terms"].is_array())
        return fail(res, 400, "expected {\"terms\": [string]}");
      Language lang = Language::kEn;
      if (auto l = j->find("lang"); l != j->end()) {
        auto parsed = l->is_string() ? language_from_code(l->get<std::string>()) : std::nullopt;
        if (!parsed) return fail(res, 400, "unknown language");
        lang = *parsed;
      }
      std::vector<Candidate> cands;
      for (const nlohmann::json& t : (*j)["terms"]) {
        if (!t.is_string()) return fail(res, 400, "terms must be strings");
        cands.push_back(Candidate{t.get<std::string>(), 0, 0, 0.0});
      }
      EnqueueResult r = enqueue(cands, lang);
      reply(res, 200, {{"lexicon_version", snapshot()->lexicon.version()},
                       {"added", r.added},
                       {"skipped", r.skipped}});
    });

    server_.Get("/v1/health", [this](const httplib::Request&, httplib::Response& res) {
      auto snap = snapshot();
      reply(res, 200,
            {{"status", "ok"},
             {"lexicon_version", snap->lexicon.version()},
             {"entry_count", snap->lexicon.size()},
             {"compiled_count", snap->compiled.size()}});
    });

    if (!config_.static_dir.empty() && !server_.set_mount_point("/", config_.static_dir))
      throw ConfigError("static asset directory '" + config_.static_dir + "' does not exist");
  }

  ServiceConfig config_;
  mutable std::mutex snapshot_mutex_;
  std::mutex writer_mutex_;
  std::shared_ptr<const Snapshot> snapshot_;
  httplib::Server server_;
  std::thread thread_;
};

}  // namespace toxlex
