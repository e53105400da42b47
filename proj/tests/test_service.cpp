#include <gtest/gtest.h>

#include <cstdio>
#include <filesystem>
#include <map>
#include <mutex>
#include <thread>

#include "support/fixtures.hpp"
#include "toxlex/service.hpp"

using namespace toxlex;
using nlohmann::json;

namespace {

class ServiceTest : public ::testing::Test {
 protected:
  void SetUp() override {
    ServiceConfig cfg;
    cfg.port = 0;
    service_ = std::make_unique<Service>(fixtures::demo_lexicon(), cfg);
    port_ = service_->start();
  }
  void TearDown() override { service_->stop(); }

  httplib::Client client() const {
    httplib::Client c("127.0.0.1", port_);
    c.set_read_timeout(30);
    return c;
  }

  json post(const std::string& path, const json& body, int expect = 200) {
    auto res = client().Post(path, body.dump(), "application/json");
    EXPECT_TRUE(res);
    if (!res) return {};
    EXPECT_EQ(res->status, expect) << path << " " << res->body;
    return json::parse(res->body);
  }
  json put(const std::string& path, const json& body, int expect = 200) {
    auto res = client().Put(path, body.dump(), "application/json");
    EXPECT_TRUE(res);
    if (!res) return {};
    EXPECT_EQ(res->status, expect) << path << " " << res->body;
    return json::parse(res->body);
  }
  json get(const std::string& path, int expect = 200) {
    auto res = client().Get(path);
    EXPECT_TRUE(res);
    if (!res) return {};
    EXPECT_EQ(res->status, expect) << path << " " << res->body;
    return json::parse(res->body);
  }

  std::unique_ptr<Service> service_;
  int port_ = 0;
};

std::string run_cli(const std::string& args) {
  std::string out;
  FILE* p = popen((std::string(TOXLEX_CLI_PATH) + " " + args).c_str(), "r");
  if (!p) return out;
  char buf[4096];
  std::size_t n;
  while ((n = fread(buf, 1, sizeof buf, p)) > 0) out.append(buf, n);
  pclose(p);
  return out;
}

}  // namespace

TEST_F(ServiceTest, ScoreClean) {
  const json r = post("/v1/score", {{"text", "hello"}});
  EXPECT_EQ(r["toxicity"], 0);
  EXPECT_EQ(r["antisemitic"], false);
  EXPECT_TRUE(r["explanations"].empty());
}

TEST_F(ServiceTest, ScoreWithHighlight) {
  const json r = post("/v1/score", {{"text", "gas the jews"}, {"highlight", "plain"}});
  EXPECT_EQ(r["toxicity"], 100);
  EXPECT_EQ(r["violent"], true);
  EXPECT_EQ(r["highlight"], "«gas» the «jews»");
  post("/v1/score", {{"text", "x"}, {"highlight", "pdf"}}, 400);
}

TEST_F(ServiceTest, ScoreBodyMatchesCliRecord) {
  for (const std::string text : {"hello", "gas the jews", "K1KE and soros", "b-e-a-t a jew"}) {
    auto res = client().Post("/v1/score", json{{"text", text}}.dump(), "application/json");
    ASSERT_TRUE(res);
    const std::string cli =
        run_cli("score --lexicon " + fixtures::data_path("demo_lexicon.tsv") + " --text '" + text + "'");
    EXPECT_EQ(res->body + "\n", cli) << text;
  }
}

TEST_F(ServiceTest, Batch) {
  const json r = post("/v1/score/batch", json::array({"hello", json{{"text", "holohoax"}}}));
  ASSERT_EQ(r.size(), 2u);
  EXPECT_EQ(r[0]["toxicity"], 0);
  EXPECT_EQ(r[1]["toxicity"], 100);
  EXPECT_EQ(post("/v1/score/batch", {{"texts", {"a", "b", "c"}}}).size(), 3u);
  EXPECT_TRUE(post("/v1/score/batch", json::array()).empty());
}

TEST_F(ServiceTest, BatchLimit) {
  json big = json::array();
  for (int i = 0; i < 1000; ++i) big.push_back("hello");
  EXPECT_EQ(post("/v1/score/batch", big).size(), 1000u);
  big.push_back("one too many");
  EXPECT_TRUE(post("/v1/score/batch", big, 413).contains("error"));
}

TEST_F(ServiceTest, BadRequests) {
  auto res = client().Post("/v1/score", "{not json", "application/json");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 400);
  post("/v1/score", {{"txt", "hello"}}, 400);
  post("/v1/score/batch", json::array({1, 2}), 400);
  put("/v1/lexicon/en-soros/annotation", {{"annotator", "A"}, {"score", 7}}, 400);
  put("/v1/lexicon/en-soros/annotation", {{"annotator", ""}, {"score", 1}}, 400);
  put("/v1/lexicon/en-soros/annotation", {{"annotator", "A"}, {"score", 1}, {"labels", {"NOPE"}}}, 400);
  put("/v1/lexicon/en-soros/annotation", {{"annotator", "C"}, {"score", 1}}, 400);
  get("/v1/lexicon?status=maybe", 400);
  get("/v1/lexicon?lang=fr", 400);
}

TEST_F(ServiceTest, NotFound) {
  get("/v1/lexicon/no-such-entry", 404);
  put("/v1/lexicon/no-such-entry/annotation", {{"annotator", "A"}, {"score", 1}}, 404);
}

TEST_F(ServiceTest, VersionConflict) {
  const std::uint64_t v = get("/v1/health")["lexicon_version"];
  put("/v1/lexicon/en-soros/annotation", {{"annotator", "A"}, {"score", 1}, {"expected_version", v + 5}}, 409);
  const json ok = put("/v1/lexicon/en-soros/annotation", {{"annotator", "A"}, {"score", 1}, {"expected_version", v}});
  EXPECT_EQ(ok["lexicon_version"], v + 1);
  put("/v1/lexicon/en-soros/annotation", {{"annotator", "A"}, {"score", 1}, {"expected_version", v}}, 409);
}

TEST_F(ServiceTest, ReadYourWrites) {
  EXPECT_EQ(post("/v1/score", {{"text", "soros"}})["toxicity"], 25);
  const json e0 = get("/v1/lexicon/en-soros")["entry"];
  EXPECT_EQ(e0["consensus"], 1);

  put("/v1/lexicon/en-soros/annotation", {{"annotator", "A"}, {"score", 2}, {"labels", {"PLOT"}}});
  const json w = put("/v1/lexicon/en-soros/annotation", {{"annotator", "B"}, {"score", 3}, {"labels", {"PLOT"}}});
  EXPECT_EQ(w["entry"]["consensus"], 3);
  EXPECT_EQ(w["entry"]["status"], "OK");

  const json s = post("/v1/score", {{"text", "soros"}});
  EXPECT_EQ(s["toxicity"], 75);
  EXPECT_EQ(s["lexicon_version"], w["lexicon_version"]);
}

TEST_F(ServiceTest, DisputedEntryStopsScoring) {
  const json w = put("/v1/lexicon/en-soros/annotation", {{"annotator", "A"}, {"score", 4}});
  EXPECT_EQ(w["entry"]["consensus"], "DISPUTED");
  EXPECT_EQ(post("/v1/score", {{"text", "soros"}})["toxicity"], 0);
}

TEST_F(ServiceTest, LexiconFilters) {
  const json all = get("/v1/lexicon");
  EXPECT_EQ(all["entries"].size(), service_->snapshot()->lexicon.size());
  const json disputed = get("/v1/lexicon?status=DISPUTED");
  ASSERT_EQ(disputed["entries"].size(), 1u);
  EXPECT_EQ(disputed["entries"][0]["id"], "en-qanon");
  EXPECT_EQ(disputed["entries"][0]["consensus"], "DISPUTED");
  const json provisional = get("/v1/lexicon?status=provisional");
  EXPECT_EQ(provisional["entries"].size(), 2u);
  for (const json& e : provisional["entries"]) {
    EXPECT_EQ(e["status"], "PROVISIONAL");
    EXPECT_TRUE(e["consensus"].is_null());
  }
  const json german = get("/v1/lexicon?lang=de");
  EXPECT_FALSE(german["entries"].empty());
  for (const json& e : german["entries"]) EXPECT_EQ(e["language"], "de");
  const json pre = get("/v1/lexicon?prefix=kike");
  EXPECT_GE(pre["entries"].size(), 3u);
  for (const json& e : pre["entries"]) EXPECT_EQ(e["pattern"].get<std::string>().rfind("kike", 0), 0u);
}

TEST_F(ServiceTest, Candidates) {
  const std::size_t before = get("/v1/candidates")["entries"].size();
  const std::uint64_t v = get("/v1/health")["lexicon_version"];
  const json r = post("/v1/candidates", {{"terms", {"zyklon", "globalist", "holohoax"}}});
  EXPECT_EQ(r["added"].size(), 2u);
  EXPECT_EQ(r["skipped"], json::array({"holohoax"}));
  EXPECT_EQ(r["lexicon_version"], v + 1);
  const json after = get("/v1/candidates");
  EXPECT_EQ(after["entries"].size(), before + 2);
  // Provisional entries do not score until annotated.
  EXPECT_EQ(post("/v1/score", {{"text", "zyklon"}})["toxicity"], 0);
  put("/v1/lexicon/cand-en-zyklon/annotation", {{"annotator", "A"}, {"score", 4}, {"labels", {"HATE"}}});
  EXPECT_EQ(post("/v1/score", {{"text", "zyklon"}})["toxicity"], 100);
  post("/v1/candidates", {{"terms", "zyklon"}}, 400);
}

TEST_F(ServiceTest, HealthTracksVersion) {
  const json h0 = get("/v1/health");
  EXPECT_EQ(h0["status"], "ok");
  EXPECT_EQ(h0["entry_count"], 49);
  EXPECT_EQ(h0["compiled_count"], service_->snapshot()->compiled.size());
  put("/v1/lexicon/en-soros/annotation", {{"annotator", "A"}, {"score", 1}});
  EXPECT_EQ(get("/v1/health")["lexicon_version"], h0["lexicon_version"].get<std::uint64_t>() + 1);
}

TEST_F(ServiceTest, StormSeesWholeVersions) {
  // Expected toxicity of "soros" at every version the writer publishes.
  std::map<std::uint64_t, int> expected;
  std::mutex mu;
  expected[service_->snapshot()->lexicon.version()] = 25;

  std::vector<std::pair<std::uint64_t, int>> seen;
  std::thread writer([&] {
    for (int i = 0; i < 30; ++i) {
      const int s = i % 5;
      for (const char* who : {"A", "B"}) {
        const json w = put("/v1/lexicon/en-soros/annotation", {{"annotator", who}, {"score", s}, {"labels", {"PLOT"}}});
        const json c = w["entry"]["consensus"];
        std::lock_guard lock(mu);
        expected[w["lexicon_version"]] = c.is_number() ? 25 * c.get<int>() : 0;
      }
    }
  });
  std::vector<std::thread> readers;
  for (int t = 0; t < 10; ++t)
    readers.emplace_back([&] {
      for (int i = 0; i < 10; ++i) {
        const json r = post("/v1/score", {{"text", "soros"}});
        std::lock_guard lock(mu);
        seen.emplace_back(r["lexicon_version"], r["toxicity"]);
      }
    });
  for (auto& r : readers) r.join();
  writer.join();

  ASSERT_EQ(seen.size(), 100u);
  for (const auto& [version, toxicity] : seen) {
    ASSERT_TRUE(expected.count(version)) << version;
    EXPECT_EQ(toxicity, expected[version]) << "version " << version;
  }
}

TEST(ServicePersistence, WriteBack) {
  const auto dir = std::filesystem::temp_directory_path() / ("toxlex_svc_" + std::to_string(::getpid()));
  std::filesystem::create_directories(dir);
  const std::string path = (dir / "lex.tsv").string();
  std::filesystem::copy_file(fixtures::data_path("demo_lexicon.tsv"), path,
                             std::filesystem::copy_options::overwrite_existing);
  ServiceConfig cfg;
  cfg.port = 0;
  cfg.lexicon_path = path;
  cfg.write_back = true;
  {
    Service svc(fixtures::demo_lexicon(), cfg);
    svc.annotate("en-soros", Annotation{"A", 2, {}, {}});
  }
  std::ifstream in(path);
  const Lexicon reloaded = parse_lexicon(in);
  EXPECT_EQ(reloaded.find("en-soros")->consensus, merge_scores(std::vector<int>{2, 1}));
  std::filesystem::remove_all(dir);
}
