#include <gtest/gtest.h>

#include <condition_variable>
#include <future>
#include <thread>

#include "planverify/scenario.hpp"
#include "planverify/service.hpp"
#include "support/json_schema.hpp"
#include "support/util.hpp"

using namespace planverify;

namespace {

std::string confirm_all_body() {
  json sel = json::array();
  for (int i = 1; i <= 5; ++i) sel.push_back({{"draft_id", "R" + std::to_string(i)}, {"action", "accept"}});
  return json{{"selections", sel}}.dump();
}

std::string create_body() { return json{{"prompt", scenario::kPrompt}}.dump(); }

// Holds replanner calls until released.
class GatedClient : public LlmClient {
 public:
  explicit GatedClient(MockScript script) : inner_(std::move(script)) {}

  std::string complete(const std::string& prompt, const LlmConfig& config) override {
    if (prompt_template_name(prompt) == "replanner") {
      std::unique_lock lock(mu_);
      waiting_ = true;
      cv_.notify_all();
      cv_.wait(lock, [this] { return open_; });
    }
    return inner_.complete(prompt, config);
  }

  void wait_until_blocked() {
    std::unique_lock lock(mu_);
    cv_.wait(lock, [this] { return waiting_; });
  }

  void release() {
    std::lock_guard lock(mu_);
    open_ = true;
    cv_.notify_all();
  }

 private:
  MockLlmClient inner_;
  std::mutex mu_;
  std::condition_variable cv_;
  bool waiting_ = false, open_ = false;
};

}  // namespace

TEST(Service, FullFlowSurvivesRestart) {
  auto dir = testutil::scratch_dir("service_flow");
  schema::Validator v(PV_SCHEMAS);
  json before;
  {
    SessionStore store(dir);
    MockLlmClient client(scenario::script(scenario::Script::Success));
    Service svc(store, client);
    auto created = svc.handle("POST", "/sessions", create_body());
    ASSERT_EQ(created.status, 201) << created.body.dump();
    std::string id = created.body["id"];
    EXPECT_EQ(created.body["status"], "awaiting_confirmation");
    EXPECT_TRUE(v.validate(created.body, "session.schema.json").empty());
    EXPECT_EQ(svc.handle("GET", "/sessions/" + id + "/report", "").status, 404);

    auto confirmed = svc.handle("POST", "/sessions/" + id + "/rules/confirm", confirm_all_body());
    ASSERT_EQ(confirmed.status, 200) << confirmed.body.dump();
    EXPECT_EQ(confirmed.body["confirmed"].size(), 5u);

    auto soft = svc.handle("POST", "/sessions/" + id + "/strictness", R"({"constraint_id":"R4","weight":0.5})");
    ASSERT_EQ(soft.status, 200);
    EXPECT_EQ(soft.body["confirmed"][3]["strictness"], 0.5);

    auto ran = svc.handle("POST", "/sessions/" + id + "/run", R"({"seed": 5, "max_iterations": 3})");
    ASSERT_EQ(ran.status, 200) << ran.body.dump();
    EXPECT_TRUE(v.validate(ran.body, "session.schema.json").empty());
    auto report = svc.handle("GET", "/sessions/" + id + "/report", "");
    ASSERT_EQ(report.status, 200);
    auto errs = v.validate(report.body, "report.schema.json");
    EXPECT_TRUE(errs.empty()) << (errs.empty() ? "" : errs[0]);

    auto answer = svc.handle("POST", "/sessions/" + id + "/ask", R"({"question":"R4?"})");
    ASSERT_EQ(answer.status, 200);
    EXPECT_TRUE(v.validate(answer.body, "answer.schema.json").empty());

    before = svc.handle("GET", "/sessions/" + id, "").body;
  }
  SessionStore reopened(dir);
  MockScript offline;
  offline.offline = true;
  MockLlmClient client(offline);
  Service svc(reopened, client);
  auto after = svc.handle("GET", "/sessions/" + before["id"].get<std::string>(), "");
  ASSERT_EQ(after.status, 200);
  EXPECT_EQ(after.body.dump(), before.dump());
  auto list = svc.handle("GET", "/sessions", "");
  EXPECT_EQ(list.body["sessions"], json::array({before["id"]}));
  // ids keep counting after a reload
  EXPECT_NE(reopened.allocate_id(), before["id"].get<std::string>());
}

TEST(Service, Errors) {
  SessionStore store;
  MockLlmClient client(scenario::script(scenario::Script::Success));
  Service svc(store, client);
  schema::Validator v(PV_SCHEMAS);
  auto id = svc.handle("POST", "/sessions", create_body()).body["id"].get<std::string>();
  auto base = "/sessions/" + id;

  auto expect = [&](const ApiResponse& r, int status, const char* code) {
    EXPECT_EQ(r.status, status) << r.body.dump();
    EXPECT_EQ(r.body["code"], code);
    auto errs = v.validate(r.body, "error.schema.json");
    EXPECT_TRUE(errs.empty()) << (errs.empty() ? "" : errs[0]);
  };
  expect(svc.handle("GET", "/sessions/nope", ""), 404, "not_found");
  expect(svc.handle("GET", "/sessions/..%2F", ""), 404, "not_found");
  expect(svc.handle("GET", "/elsewhere", ""), 404, "not_found");
  expect(svc.handle("GET", base + "/bogus", ""), 404, "not_found");
  expect(svc.handle("DELETE", base, ""), 405, "method_not_allowed");
  expect(svc.handle("POST", "/sessions", "{not json"), 400, "bad_request");
  expect(svc.handle("POST", "/sessions", R"({"prompt":"x","extra":1})"), 400, "bad_request");
  expect(svc.handle("POST", "/sessions", R"({"prompt":" "})"), 422, "invalid_argument");
  expect(svc.handle("POST", base + "/run", "{}"), 409, "invalid_state");
  expect(svc.handle("POST", base + "/rules/confirm", R"({"selections":[{"draft_id":"R9"}]})"), 422, "unknown_draft");
  expect(svc.handle("POST", base + "/rules/confirm", R"({"selections":[{"draft_id":"R1","action":"maybe"}]})"), 400,
         "bad_request");
  ASSERT_EQ(svc.handle("POST", base + "/rules/confirm", confirm_all_body()).status, 200);
  expect(svc.handle("POST", base + "/strictness", R"({"constraint_id":"R4","weight":1.5})"), 422, "weight_out_of_range");
  expect(svc.handle("POST", base + "/strictness", R"({"constraint_id":"R8","weight":0.5})"), 422,
         "unknown_constraint");
  expect(svc.handle("POST", base + "/strictness", R"({"constraint_id":"R4","weight":"high"})"), 400, "bad_request");
  expect(svc.handle("POST", base + "/run", R"({"max_iterations":0})"), 422, "invalid_argument");
  // the failed calls left the session as it was
  EXPECT_EQ(store.get(id)->confirmed[3].strictness.value(), 1.0);
}

TEST(Service, LlmDownIs503) {
  SessionStore store;
  MockScript offline;
  offline.offline = true;
  MockLlmClient client(offline);
  Service svc(store, client);
  auto r = svc.handle("POST", "/sessions", create_body());
  EXPECT_EQ(r.status, 503);
  EXPECT_EQ(r.body["code"], "llm_unavailable");
  EXPECT_TRUE(store.ids().empty());
}

TEST(Service, ConcurrentMutationIsRejected) {
  SessionStore store;
  GatedClient client(scenario::script(scenario::Script::Failure));
  Service svc(store, client);
  auto id = svc.handle("POST", "/sessions", create_body()).body["id"].get<std::string>();
  ASSERT_EQ(svc.handle("POST", "/sessions/" + id + "/rules/confirm", confirm_all_body()).status, 200);

  auto first = std::async(std::launch::async, [&] { return svc.handle("POST", "/sessions/" + id + "/run", "{}"); });
  client.wait_until_blocked();
  auto second = svc.handle("POST", "/sessions/" + id + "/run", "{}");
  EXPECT_EQ(second.status, 409);
  EXPECT_EQ(second.body["code"], "session_busy");
  // reads still see the last stored state
  EXPECT_EQ(svc.handle("GET", "/sessions/" + id, "").body["status"], "running");
  client.release();
  auto done = first.get();
  EXPECT_EQ(done.status, 200);
  EXPECT_EQ(done.body["iterations"].size(), 3u);
  EXPECT_EQ(done.body["status"], "exhausted_invalid");
}

TEST(Service, OverHttp) {
  SessionStore store;
  MockLlmClient client(scenario::script(scenario::Script::Success));
  Service svc(store, client);
  httplib::Server server;
  svc.mount(server);
  int port = server.bind_to_any_port("127.0.0.1");
  std::thread t([&] { server.listen_after_bind(); });
  server.wait_until_ready();

  httplib::Client http("127.0.0.1", port);
  auto created = http.Post("/sessions", create_body(), "application/json");
  ASSERT_TRUE(created);
  EXPECT_EQ(created->status, 201);
  auto id = json::parse(created->body)["id"].get<std::string>();
  auto confirmed = http.Post("/sessions/" + id + "/rules/confirm", confirm_all_body(), "application/json");
  EXPECT_EQ(confirmed->status, 200);
  auto ran = http.Post("/sessions/" + id + "/run", "{}", "application/json");
  EXPECT_EQ(json::parse(ran->body)["status"], "valid");
  auto missing = http.Get("/sessions/zzz");
  EXPECT_EQ(missing->status, 404);
  EXPECT_EQ(missing->get_header_value("Content-Type"), "application/json");

  server.stop();
  t.join();
}

TEST(Service, BindAddress) {
  ::unsetenv("PLANVERIFY_BIND_ADDR");
  EXPECT_EQ(bind_address_from_environment(), (std::pair<std::string, int>{"127.0.0.1", 8080}));
  ::setenv("PLANVERIFY_BIND_ADDR", "0.0.0.0:9001", 1);
  EXPECT_EQ(bind_address_from_environment(), (std::pair<std::string, int>{"0.0.0.0", 9001}));
  ::setenv("PLANVERIFY_BIND_ADDR", "nowhere", 1);
  EXPECT_THROW(bind_address_from_environment(), Error);
  ::unsetenv("PLANVERIFY_BIND_ADDR");
}

TEST(Store, SafeIds) {
  EXPECT_TRUE(is_safe_session_id("s000001"));
  EXPECT_FALSE(is_safe_session_id("../etc"));
  EXPECT_FALSE(is_safe_session_id(""));
  EXPECT_FALSE(is_safe_session_id(std::string(65, 'a')));
}

TEST(Store, NoTempFilesLeft) {
  auto dir = testutil::scratch_dir("store_tmp");
  SessionStore store(dir);
  MockLlmClient client(scenario::script(scenario::Script::Success));
  auto s = create_session(store.allocate_id(), scenario::kPrompt, client);
  store.put(s);
  store.put(s);
  std::size_t files = 0;
  for (const auto& e : std::filesystem::directory_iterator(dir)) {
    EXPECT_EQ(e.path().extension(), ".json");
    ++files;
  }
  EXPECT_EQ(files, 1u);
  EXPECT_EQ(*store.get(s.id), s);
}
