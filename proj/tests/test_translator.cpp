#include <gtest/gtest.h>

#include <atomic>
#include <thread>

#include "planverify/llm_http.hpp"
#include "planverify/scenario.hpp"
#include "planverify/translator.hpp"

using namespace planverify;

namespace {

MockLlmClient scenario_mock() { return MockLlmClient(scenario::script(scenario::Script::Success)); }

TranslatorOptions escort_options() {
  TranslatorOptions o;
  o.vocabulary = EscortDomain{}.vocabulary();
  return o;
}

MockScript one_rule(std::string tmpl, std::string match, std::vector<std::string> responses) {
  MockScript s;
  s.rules.push_back({std::move(tmpl), std::move(match), std::move(responses)});
  return s;
}

}  // namespace

TEST(Extract, ScenarioGivesFiveDrafts) {
  auto client = scenario_mock();
  auto drafts = extract_rules(scenario::kPrompt, client, escort_options());
  ASSERT_EQ(drafts.size(), 5u);
  const char* formulas[] = {"G !unescorted_move", "G escorted_count <= 1", "G !alone_together_P2_P3",
                            "G !alone_together_P3_P4", "F (at_P2_L2 & at_P3_L2 & at_P4_L2)"};
  auto expected = scenario::rules();
  for (std::size_t i = 0; i < drafts.size(); ++i) {
    EXPECT_EQ(drafts[i].id, "R" + std::to_string(i + 1));
    EXPECT_EQ(drafts[i].source_text, scenario::clauses()[i]);
    EXPECT_EQ(ltl::render_formula(drafts[i].proposed.formula), formulas[i]);
    EXPECT_FALSE(drafts[i].proposed.confirmed);
    EXPECT_EQ(drafts[i].proposed.formula, expected[i].formula);
  }
  EXPECT_EQ(client.count_calls("extractor"), 1u);
  EXPECT_EQ(client.count_calls("mapper"), 5u);
  EXPECT_EQ(client.count_calls("ltl-translator"), 5u);
  EXPECT_EQ(client.count_calls("repair"), 0u);
}

TEST(Extract, EmptyPromptRejected) {
  auto client = scenario_mock();
  try {
    extract_rules("  \n", client);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::InvalidArgument);
  }
  EXPECT_TRUE(client.calls().empty());
}

TEST(Extract, NoConstraintsIsEmpty) {
  auto client = scenario_mock();
  EXPECT_TRUE(extract_rules("Tell me a joke about hospitals.", client).empty());
}

TEST(Extract, OfflineSurfacesError) {
  MockScript s;
  s.offline = true;
  MockLlmClient client(s);
  try {
    extract_rules(scenario::kPrompt, client);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::LlmUnavailable);
  }
}

TEST(MapCategory, Examples) {
  auto client = scenario_mock();
  EXPECT_EQ(map_category("P2 and P3 may not stay together without P1", client), ConstraintCategory::Global);
  EXPECT_EQ(map_category("P1 accompanies one person per trip", client), ConstraintCategory::Global);
  EXPECT_EQ(map_category("dinner must be ready by 6:00 PM Wednesday", client), ConstraintCategory::FixedTimeBlock);
}

TEST(MapCategory, OneRepairThenSuccess) {
  MockLlmClient client(one_rule("mapper", "", {"I think it is global.", "```category\nglobal\n```"}));
  EXPECT_EQ(map_category("the door stays locked", client), ConstraintCategory::Global);
  auto calls = client.calls();
  ASSERT_EQ(calls.size(), 2u);
  EXPECT_EQ(calls[1].template_name, "repair");
  EXPECT_EQ(repaired_template_name(calls[1].prompt), "mapper");
}

TEST(MapCategory, GivesUpAfterOneRepair) {
  MockLlmClient client(one_rule("mapper", "", {"```category\nsometimes\n```"}));
  try {
    map_category("whatever", client);
    FAIL();
  } catch (const UnparseableLlmOutput& e) {
    ASSERT_TRUE(e.line().has_value());
    EXPECT_EQ(*e.line(), 2u);
  }
  EXPECT_EQ(client.calls().size(), 2u);
}

TEST(ToLtl, CompilesThroughTemplates) {
  auto client = scenario_mock();
  ConstraintDraft d{"R4", "P3 and P4 may not stay together without P1", {}};
  d.proposed.id = "R4";
  d.proposed.category = ConstraintCategory::Global;
  auto spec = to_ltl(d, client, escort_options());
  EXPECT_EQ(ltl::render_formula(spec.formula), "G !alone_together_P3_P4");
  EXPECT_EQ(spec.nl_text, describe(spec.params));
}

TEST(ToLtl, Conditional) {
  MockLlmClient client(one_rule("ltl-translator", "", {"```params\ntrigger: trigger\nresponse: response\n```"}));
  ConstraintDraft d{"R1", "if trigger then response", {}};
  d.proposed.category = ConstraintCategory::Conditional;
  EXPECT_EQ(to_ltl(d, client).formula, ltl::parse_formula("G (trigger -> F response)"));
}

TEST(ToLtl, UnknownEntity) {
  MockLlmClient client(one_rule("ltl-translator", "", {"```params\ncondition: !alone_together_P3_P9\n```"}));
  ConstraintDraft d{"R1", "P3 and P9", {}};
  d.proposed.category = ConstraintCategory::Global;
  try {
    to_ltl(d, client, escort_options());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ParamMismatch);
    EXPECT_NE(std::string(e.what()).find("alone_together_P3_P9"), std::string::npos);
  }
}

TEST(ToLtl, RawFormulaIsNotAccepted) {
  // a model that answers with a formula instead of parameters
  MockLlmClient client(one_rule("ltl-translator", "", {"```params\nformula: G (a & b)\n```"}));
  ConstraintDraft d{"R1", "a and b", {}};
  d.proposed.category = ConstraintCategory::Exclusive;
  EXPECT_THROW(to_ltl(d, client), Error);
}

TEST(BackTranslate, FallbackAndGate) {
  auto spec = make_spec("R1", ExclusiveParams{"oven_on", "house_empty"});
  MockScript offline;
  offline.offline = true;
  MockLlmClient down(offline);
  EXPECT_EQ(back_translate(spec, down), describe(spec));

  MockLlmClient good(one_rule("back-translator", "", {"Never leave oven_on while house_empty."}));
  EXPECT_EQ(back_translate(spec, good), "Never leave oven_on while house_empty.");

  MockLlmClient lossy(one_rule("back-translator", "", {"Never leave the oven on."}));
  EXPECT_EQ(back_translate(spec, lossy), describe(spec));
}

TEST(ParsePlan, Examples) {
  EscortDomain d;
  auto plan = parse_plan(scenario::kSolutionPlan, d);
  EXPECT_EQ(plan.actions.size(), 7u);
  EXPECT_EQ(plan.actions[1], Action::move("P1", "L2", "L1"));
  EXPECT_TRUE(parse_plan("", d).actions.empty());
  EXPECT_EQ(parse_plan("```plan\n1. escort P3 L1 L2 # first\n\n2) Move P1 L2 L1\n```\n", d).actions.size(), 2u);
  try {
    parse_plan("escort P9 L1 L2", d);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::UnknownEntity);
    EXPECT_NE(std::string(e.what()).find("P9"), std::string::npos);
  }
  try {
    parse_plan("escort P2 L1 L2\nfly P2 L2 L1\n", d);
    FAIL();
  } catch (const UnparseableLlmOutput& e) {
    EXPECT_EQ(e.line(), 2u);
  }
  EXPECT_THROW(parse_plan("escort P2 L1", d), UnparseableLlmOutput);
}

TEST(RequestPlan, ReformatsOnce) {
  MockScript s;
  s.plans = {"escort P3 L1 L2 then go home", "```plan\nescort P3 L1 L2\n```"};
  MockLlmClient client(s);
  auto body = request_plan(client, prompts::fill("planner", {{"schema", "x"}, {"prompt", "p"}, {"rules", ""}}), "x", {});
  EXPECT_EQ(body, "escort P3 L1 L2\n");
  EXPECT_EQ(client.count_calls("plan-parser"), 1u);
}

TEST(Prompts, SlotsMustBeFilled) {
  EXPECT_THROW(prompts::fill("mapper", {}), Error);
  EXPECT_THROW(prompts::fill("nope", {}), Error);
  auto text = prompts::fill("mapper", {{"rule", "{{rule}} stays literal"}});
  EXPECT_NE(text.find("{{rule}} stays literal"), std::string::npos);
  for (const auto& [name, body] : prompts::templates()) EXPECT_EQ(body.rfind("### template: " + name, 0), 0u);
}

TEST(Mock, Deterministic) {
  auto a = scenario_mock(), b = scenario_mock();
  auto da = extract_rules(scenario::kPrompt, a), db = extract_rules(scenario::kPrompt, b);
  EXPECT_EQ(da, db);
  auto ca = a.calls(), cb = b.calls();
  ASSERT_EQ(ca.size(), cb.size());
  for (std::size_t i = 0; i < ca.size(); ++i) {
    EXPECT_EQ(ca[i].prompt, cb[i].prompt);
    EXPECT_EQ(ca[i].response, cb[i].response);
  }
}

TEST(Mock, MatchesOnlyInputSection) {
  // the match is looked up in the input section only
  MockLlmClient client(one_rule("mapper", "close the windows", {"```category\nconditional\n```"}));
  EXPECT_EQ(client.complete(prompts::fill("mapper", {{"rule", "lock the door"}}), {}), "");
}

TEST(Mock, ScriptJsonRoundTrip) {
  auto s = scenario::script(scenario::Script::Success);
  auto back = mock_script_from_json(mock_script_to_json(s));
  EXPECT_EQ(mock_script_to_json(back), mock_script_to_json(s));
  EXPECT_THROW(mock_script_from_json({{"rulez", nlohmann::json::array()}}), Error);
}

// A local stand-in for a chat-completion provider.
class FakeProvider : public ::testing::Test {
 protected:
  void SetUp() override {
    server_.Post("/v1/chat/completions", [this](const httplib::Request& req, httplib::Response& res) {
      ++hits_;
      last_auth_ = req.get_header_value("Authorization");
      auto body = nlohmann::json::parse(req.body);
      last_model_ = body["model"];
      if (fail_first_ && hits_ == 1) {
        res.status = 500;
        return;
      }
      nlohmann::json out = {{"choices", {{{"message", {{"content", "echo: " + body["messages"][0]["content"].get<std::string>()}}}}}}};
      res.set_content(out.dump(), "application/json");
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  void TearDown() override {
    server_.stop();
    thread_.join();
  }

  std::string url() const { return "http://127.0.0.1:" + std::to_string(port_) + "/v1/chat/completions"; }

  httplib::Server server_;
  std::thread thread_;
  int port_ = 0;
  std::atomic<int> hits_{0};
  bool fail_first_ = false;
  std::string last_auth_, last_model_;
};

TEST_F(FakeProvider, CompletesAndRetries) {
  HttpLlmClient client(url(), "k123");
  EXPECT_EQ(client.complete("hello", {}), "echo: hello");
  EXPECT_EQ(last_auth_, "Bearer k123");
  EXPECT_EQ(last_model_, "gpt-4");
  fail_first_ = true;
  hits_ = 0;
  EXPECT_EQ(client.complete("again", {}), "echo: again");
  EXPECT_EQ(hits_.load(), 2);
}

TEST_F(FakeProvider, RetryBoundIsRespected) {
  server_.Post("/down", [this](const httplib::Request&, httplib::Response& res) {
    ++hits_;
    res.status = 503;
  });
  HttpLlmClient client("http://127.0.0.1:" + std::to_string(port_) + "/down", "k");
  LlmConfig cfg;
  cfg.max_retries = 2;
  hits_ = 0;
  try {
    client.complete("x", cfg);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::LlmUnavailable);
  }
  EXPECT_EQ(hits_.load(), 3);
}

TEST(HttpClient, UnreachableAndUnconfigured) {
  HttpLlmClient client("http://127.0.0.1:1/v1", "k");
  LlmConfig cfg;
  cfg.timeout_seconds = 2;
  EXPECT_THROW(client.complete("x", cfg), Error);
  ::unsetenv("PLANVERIFY_LLM_URL");
  ::unsetenv("PLANVERIFY_LLM_KEY");
  try {
    HttpLlmClient::from_environment();
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::LlmUnavailable);
  }
}
