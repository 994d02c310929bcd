#include <filesystem>
#include <fstream>

#include <gtest/gtest.h>
#include <httplib.h>

#include "spforge/dsl.hpp"
#include "spforge/executor.hpp"
#include "spforge/service.hpp"

using namespace spforge;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

const json kRecord = {
    {"id", "ex1"},
    {"document",
     {"The mayor of the city, who was elected last year, announced a new budget on Monday.",
      "The budget includes funding for schools and roads.",
      "Critics said the plan was too expensive.",
      "Officials expect the council to vote next week."}},
    {"summary", {"The mayor announced a budget for schools.", "Critics said the plan was expensive."}}};

class Down : public ModuleBackend {
 public:
  CandidateSet execute(const ModuleRequest&) override { throw BackendUnavailable("down"); }
  std::string name() const override { return "down"; }
};

struct TempDir {
  fs::path path = fs::temp_directory_path() / ("spforge-test-" + make_uuid());
  TempDir() { fs::create_directories(path); }
  ~TempDir() { fs::remove_all(path); }
};

ServiceConfig config_in(const fs::path& dir) {
  ServiceConfig c;
  c.data_dir = dir;
  c.search.generations = 2;
  return c;
}

Response call(Service& s, std::string_view method, std::string_view path, const json& body = json::object()) {
  return s.handle(method, path, body.dump());
}

}  // namespace

TEST(Service, HealthAndRouting) {
  Service s(std::make_shared<ReferenceBackend>(), {});
  EXPECT_EQ(call(s, "GET", "/v1/health").status, 200);
  EXPECT_EQ(call(s, "GET", "/v1/health").body["backend"], "reference");
  EXPECT_EQ(call(s, "POST", "/v1/health").status, 405);
  EXPECT_EQ(call(s, "GET", "/v1/rouge").status, 405);
  EXPECT_EQ(call(s, "POST", "/v1/nothing").status, 404);
  EXPECT_EQ(s.handle("POST", "/v1/rouge", "{not json").status, 400);
  EXPECT_EQ(call(s, "POST", "/v1/rouge", json{{"candidate", "x"}}).status, 400);
}

TEST(Service, ValidateReportsArity) {
  Service s(std::make_shared<ReferenceBackend>(), {});
  const auto r = call(s, "POST", "/v1/programs/validate", json{{"dsl", "fusion ( <D1> )"}, {"doc_size", 3}});
  ASSERT_EQ(r.status, 200);
  EXPECT_FALSE(r.body["wellformed"]);
  EXPECT_EQ(r.body["diagnostics"][0]["code"], "ArityMismatch");
  const auto ok = call(s, "POST", "/v1/programs/validate", json{{"dsl", "( <D1> )"}, {"doc_size", 3}});
  EXPECT_TRUE(ok.body["wellformed"]);
}

TEST(Service, RougeIdentity) {
  Service s(std::make_shared<ReferenceBackend>(), {});
  const auto r = call(s, "POST", "/v1/rouge", json{{"candidate", {"a b.", "c d."}}, {"reference", {"a b.", "c d."}}});
  ASSERT_EQ(r.status, 200);
  for (const char* m : {"rouge1", "rouge2", "rougeL", "rougeLsum"}) EXPECT_DOUBLE_EQ(r.body[m]["f1"].get<double>(), 1.0);
}

TEST(Service, SearchReturnsLoadableRecord) {
  Service s(std::make_shared<ReferenceBackend>(), {});
  const auto r = call(s, "POST", "/v1/search", json{{"record", kRecord}, {"config", {{"generations", 2}}}});
  ASSERT_EQ(r.status, 200) << r.body.dump();
  const auto rec = program_record_from_json(r.body);
  EXPECT_EQ(rec.program.trees.size(), 2u);
  EXPECT_EQ(r.body["config"]["generations"], 2);
  auto no_summary = kRecord;
  no_summary.erase("summary");
  EXPECT_EQ(call(s, "POST", "/v1/search", json{{"record", no_summary}}).status, 400);
}

TEST(Service, ExecuteProgram) {
  Service s(std::make_shared<ReferenceBackend>(), {});
  const auto r = call(s, "POST", "/v1/programs/execute",
                      json{{"document", kRecord["document"]}, {"dsl", "compression ( <D1> ) ; ( <D3> )"}});
  ASSERT_EQ(r.status, 200) << r.body.dump();
  EXPECT_EQ(r.body["summary"].size(), 2u);
  EXPECT_EQ(r.body["summary"][1], kRecord["document"][2]);
  const auto bad = call(s, "POST", "/v1/programs/execute", json{{"document", "A b. C d."}, {"dsl", "fusion ( <D1> "}});
  EXPECT_EQ(bad.status, 400);
  EXPECT_FALSE(bad.body["diagnostics"].empty());
  const auto no_target = call(s, "POST", "/v1/programs/execute",
                              json{{"document", kRecord["document"]}, {"dsl", "( <D1> )"}, {"selection", "best_vs_target"}});
  EXPECT_EQ(no_target.status, 400);
}

TEST(Service, BackendFailureIs502) {
  Service s(std::make_shared<Down>(), {});
  const auto r = call(s, "POST", "/v1/programs/execute",
                      json{{"document", kRecord["document"]}, {"dsl", "compression ( <D1> )"}});
  EXPECT_EQ(r.status, 502);
  EXPECT_EQ(call(s, "POST", "/v1/modules/execute", json{{"kind", "compression"}, {"inputs", {"a b"}}}).status, 502);
}

TEST(Service, ModuleWireContract) {
  Service s(std::make_shared<ReferenceBackend>(), {});
  const auto r = call(s, "POST", "/v1/modules/execute",
                      json{{"kind", "fusion"}, {"inputs", {"The mayor spoke.", "Critics objected."}}, {"max_candidates", 2}});
  ASSERT_EQ(r.status, 200);
  EXPECT_LE(r.body["candidates"].size(), 2u);
  EXPECT_EQ(call(s, "POST", "/v1/modules/execute", json{{"kind", "fusion"}, {"inputs", {"x"}}}).status, 400);
  const auto b = call(s, "POST", "/v1/modules/execute_batch",
                      json{{"requests", {{{"kind", "compression"}, {"inputs", {"Police left the scene quickly."}}},
                                         {{"kind", "compression"}, {"inputs", {"Hi"}}}}}});
  ASSERT_EQ(b.status, 200);
  ASSERT_EQ(b.body["results"].size(), 2u);
  EXPECT_TRUE(b.body["results"][0].contains("candidates"));
  EXPECT_TRUE(b.body["results"][1].contains("error"));
}

TEST(Sessions, BuildUndoReplayExport) {
  TempDir dir;
  auto backend = std::make_shared<ReferenceBackend>();
  std::string id;
  json exported;
  {
    Service s(backend, config_in(dir.path));
    const auto created = call(s, "POST", "/v1/sessions", json{{"record", kRecord}});
    ASSERT_EQ(created.status, 201) << created.body.dump();
    id = created.body["id"];
    EXPECT_EQ(created.body["trees"].size(), 2u);
    const auto base = "/v1/sessions/" + id;

    const auto props = call(s, "POST", base + "/proposals", json{{"tree", 0}, {"kind", "compression"}, {"operands", {"D1"}}});
    ASSERT_EQ(props.status, 200) << props.body.dump();
    EXPECT_FALSE(props.body["candidates"].empty());

    auto e1 = call(s, "POST", base + "/edges", json{{"tree", 0}, {"kind", "compression"}, {"operands", {"D1"}}, {"candidate", 0}});
    ASSERT_EQ(e1.status, 200) << e1.body.dump();
    EXPECT_EQ(e1.body["node"], "N1");
    EXPECT_EQ(e1.body["trees"][0]["text"], props.body["candidates"][0]);
    EXPECT_EQ(e1.body["trees"][0]["dsl"], "compression ( <D1> )");

    // recompression
    auto bad = call(s, "POST", base + "/edges", json{{"tree", 0}, {"kind", "compression"}, {"operands", {"N1"}}});
    EXPECT_EQ(bad.status, 400);
    EXPECT_EQ(bad.body["rule"], 1);
    // out of document order
    bad = call(s, "POST", base + "/edges", json{{"tree", 0}, {"kind", "fusion"}, {"operands", {"D2", "N1"}}});
    EXPECT_EQ(bad.body["rule"], 5);
    // D1 already under N1
    bad = call(s, "POST", base + "/edges", json{{"tree", 0}, {"kind", "fusion"}, {"operands", {"N1", "D1"}}});
    EXPECT_EQ(bad.body["rule"], 3);
    bad = call(s, "POST", base + "/edges", json{{"tree", 0}, {"kind", "fusion"}, {"operands", {"N1"}}});
    EXPECT_EQ(bad.body["rule"], 6);

    ASSERT_EQ(call(s, "POST", base + "/edges", json{{"tree", 0}, {"kind", "paraphrase"}, {"operands", {"D2"}}}).status, 200);
    // two intermediates sharing nothing are fine, but N1 with a paraphrase of D1 is not
    ASSERT_EQ(call(s, "POST", base + "/edges", json{{"tree", 0}, {"kind", "paraphrase"}, {"operands", {"D1"}}}).status, 200);
    bad = call(s, "POST", base + "/edges", json{{"tree", 0}, {"kind", "fusion"}, {"operands", {"N1", "N3"}}});
    EXPECT_EQ(bad.body["rule"], 4);
    const auto undone = call(s, "POST", base + "/undo");
    ASSERT_EQ(undone.status, 200);
    EXPECT_EQ(undone.body["nodes"].size(), 2u);

    auto f = call(s, "POST", base + "/edges", json{{"tree", 0}, {"kind", "fusion"}, {"operands", {"N1", "N2"}}});
    ASSERT_EQ(f.status, 200) << f.body.dump();
    EXPECT_EQ(f.body["node"], "N3");
    EXPECT_EQ(f.body["trees"][0]["dsl"], "fusion ( compression ( <D1> ) paraphrase ( <D2> ) )");
    // consumed
    bad = call(s, "POST", base + "/edges", json{{"tree", 0}, {"kind", "paraphrase"}, {"operands", {"N1"}}});
    EXPECT_EQ(bad.body["rule"], 0);
    // wrong tree
    bad = call(s, "POST", base + "/edges", json{{"tree", 1}, {"kind", "compression"}, {"operands", {"N3"}}});
    EXPECT_EQ(bad.body["rule"], 0);

    ASSERT_EQ(call(s, "POST", base + "/leaf", json{{"tree", 1}, {"sentence", "D3"}}).status, 200);
    ASSERT_EQ(call(s, "POST", base + "/phase", json{{"phase", "training"}}).status, 200);
    EXPECT_EQ(call(s, "POST", base + "/phase", json{{"phase", "later"}}).status, 400);

    const auto ex = call(s, "POST", base + "/export");
    ASSERT_EQ(ex.status, 200) << ex.body.dump();
    exported = ex.body;
    EXPECT_EQ(exported["dsl"], "fusion ( compression ( <D1> ) paraphrase ( <D2> ) ) ; ( <D3> )");
    EXPECT_EQ(exported["config"]["phase"], "training");
    EXPECT_NO_THROW(program_record_from_json(exported));
  }
  EXPECT_TRUE(fs::exists(dir.path / (id + ".jsonl")));

  // a fresh service reads the session back from disk
  Service again(backend, config_in(dir.path));
  const auto state = call(again, "GET", "/v1/sessions/" + id);
  ASSERT_EQ(state.status, 200) << state.body.dump();
  EXPECT_EQ(state.body["phase"], "training");
  EXPECT_EQ(call(again, "POST", "/v1/sessions/" + id + "/export").body, exported);

  // the exported texts are what the executor makes of the same skeleton
  Document doc{"ex1", kRecord["document"].get<std::vector<std::string>>()};
  const auto r = execute_skeleton(parse(exported["dsl"].get<std::string>(), doc.size()), doc, *backend, ExecutionConfig{});
  EXPECT_EQ(json(r.summary), exported["summary"]);

  EXPECT_EQ(call(again, "GET", "/v1/sessions/" + make_uuid()).status, 404);
  EXPECT_EQ(call(again, "GET", "/v1/sessions/not-a-uuid").status, 404);
  EXPECT_EQ(call(again, "POST", "/v1/sessions/" + id).status, 405);
  EXPECT_EQ(call(again, "POST", "/v1/sessions/" + id + "/dance").status, 404);
}

TEST(Sessions, UndoNeedsHistory) {
  Service s(std::make_shared<ReferenceBackend>(), {});
  const auto id = call(s, "POST", "/v1/sessions", json{{"record", kRecord}}).body["id"].get<std::string>();
  EXPECT_EQ(call(s, "POST", "/v1/sessions/" + id + "/undo").status, 400);
  EXPECT_EQ(call(s, "POST", "/v1/sessions/" + id + "/export").status, 400);
}

TEST(Sessions, ReplayMatchesLiveState) {
  ReferenceBackend b;
  Session live("s1", record_from_json(kRecord));
  live.record_edge(0, ModuleKind::compression, {"D1"}, 1, b, 5);
  live.record_edge(1, ModuleKind::paraphrase, {"D3"}, 0, b, 5);
  live.undo();
  live.select_leaf(1, "D4");
  const auto copy = Session::replay(live.events());
  EXPECT_EQ(copy.state(), live.state());
  auto broken = live.events();
  broken.push_back(json{{"type", "edge"}, {"tree", 0}, {"kind", "compression"}, {"operands", {"N1"}}, {"text", "x"}});
  EXPECT_THROW(Session::replay(broken), InputError);
}

TEST(HttpServer, ServesOverSockets) {
  Service s(std::make_shared<ReferenceBackend>(), {});
  HttpServer server(s, "127.0.0.1", 0);
  server.start();
  ASSERT_GT(server.port(), 0);
  httplib::Client client("127.0.0.1", server.port());
  auto health = client.Get("/v1/health");
  ASSERT_TRUE(health);
  EXPECT_EQ(health->status, 200);
  auto v = client.Post("/v1/programs/validate", json{{"dsl", "( <D9> )"}, {"doc_size", 2}}.dump(), "application/json");
  ASSERT_TRUE(v);
  EXPECT_EQ(v->status, 200);
  EXPECT_FALSE(json::parse(v->body)["wellformed"]);
  auto missing = client.Get("/v1/sessions/00000000-0000-4000-8000-000000000000");
  ASSERT_TRUE(missing);
  EXPECT_EQ(missing->status, 404);
  server.stop();
}
