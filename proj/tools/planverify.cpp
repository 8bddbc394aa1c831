// planverify command line: verify, loop, eval, serve.
//
// Exit codes: 0 success / valid, 1 bad input, 2 invalid plan or failing
// formula, 3 LLM not reachable (loop and serve only).

#include <filesystem>
#include <iostream>
#include <memory>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "planverify.hpp"

namespace pv = planverify;

namespace {

constexpr int kOk = 0;
constexpr int kBadInput = 1;
constexpr int kInvalid = 2;
constexpr int kLlmDown = 3;

std::unique_ptr<pv::LlmClient> make_client(bool live, const std::string& mock_script) {
  if (live) return std::make_unique<pv::HttpLlmClient>(pv::HttpLlmClient::from_environment());
  if (mock_script == "success") return std::make_unique<pv::MockLlmClient>(pv::scenario::script(pv::scenario::Script::Success));
  if (mock_script == "failure") return std::make_unique<pv::MockLlmClient>(pv::scenario::script(pv::scenario::Script::Failure));
  return std::make_unique<pv::MockLlmClient>(pv::load_mock_script(mock_script));
}

int report_error(const std::exception& e) {
  std::cerr << "error: " << e.what() << "\n";
  if (auto* err = dynamic_cast<const pv::Error*>(&e); err && err->code() == pv::ErrorCode::LlmUnavailable)
    return kLlmDown;
  return kBadInput;
}

int cmd_verify(const std::string& plan_path, const std::string& rules_path, std::uint64_t seed,
               const std::string& format, const std::string& domain_mode) {
  std::optional<pv::Trace> trace;
  std::vector<pv::ConstraintSpec> rules;
  try {
    rules = pv::parse_rules_document(pv::read_file(rules_path));
    for (auto& r : rules) r.confirmed = true;
    auto text = pv::read_file(plan_path);
    pv::EscortDomain domain;
    if (domain_mode == "labeled")
      trace = pv::parse_trace_text(text);
    else
      trace = pv::derive_trace(pv::parse_plan_document(text, domain), domain);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kBadInput;
  }
  auto report = pv::verify(*trace, rules, seed);
  if (format == "machine")
    std::cout << pv::to_json(report).dump(2) << "\n";
  else
    std::cout << pv::render_feedback(report, pv::Audience::User);
  return report.plan_valid ? kOk : kInvalid;
}

void print_session(const pv::Session& s) {
  std::cout << "session " << s.id << ": " << pv::to_string(s.status) << "\n";
  std::cout << "rules:\n";
  for (const auto& c : s.confirmed)
    std::cout << "  " << c.id << " [" << c.strictness.percent() << "%] " << pv::ltl::render_formula(c.formula)
              << "  -- " << c.nl_text << "\n";
  for (const auto& it : s.iterations) {
    std::cout << "iteration " << it.index + 1 << " (run " << it.run << ", seed " << it.seed << ")\n";
    for (const auto& step : it.plan) std::cout << "    " << step << "\n";
    std::cout << it.feedback;
  }
}

int cmd_loop(const std::string& prompt_path, bool live, const std::string& mock_script, std::uint64_t seed,
             std::size_t max_iter, const std::string& format) {
  std::string prompt;
  try {
    prompt = pv::read_file(prompt_path);
  } catch (const std::exception& e) {
    return report_error(e);
  }
  try {
    auto client = make_client(live, mock_script);
    auto session = pv::create_session("s000001", prompt, *client);
    std::vector<pv::RuleSelection> all;
    for (const auto& d : session.drafts) all.push_back({d.id, pv::RuleSelection::Kind::Accept, ""});
    session = pv::confirm_rules(std::move(session), all, *client);
    session = pv::run_iterations(std::move(session), *client, {max_iter, seed});
    if (format == "machine")
      std::cout << pv::to_json(session).dump(2) << "\n";
    else
      print_session(session);
    return session.status == pv::SessionStatus::Valid ? kOk : kInvalid;
  } catch (const std::exception& e) {
    return report_error(e);
  }
}

int cmd_eval(const std::string& formula_text, const std::string& trace_path) {
  try {
    auto formula = pv::ltl::parse_formula(formula_text);
    auto trace = pv::parse_trace_text(pv::read_file(trace_path));
    auto verdict = pv::ltl::check(formula, trace);
    if (verdict.holds) {
      std::cout << "holds\n";
      return kOk;
    }
    std::cout << "fails at step " << *verdict.violation_index << "\n";
    return kInvalid;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kBadInput;
  }
}

int cmd_serve(std::string store_dir, std::string bind, bool live, const std::string& mock_script) {
  try {
    if (store_dir.empty()) {
      const char* env = std::getenv("PLANVERIFY_STORE_DIR");
      store_dir = env && *env ? env : "sessions";
    }
    auto [host, port] = pv::bind_address_from_environment();
    if (!bind.empty()) {
      auto colon = bind.rfind(':');
      if (colon == std::string::npos) throw pv::Error(pv::ErrorCode::InvalidArgument, "--bind needs host:port");
      host = bind.substr(0, colon);
      port = std::stoi(bind.substr(colon + 1));
    }
    auto client = make_client(live, mock_script);
    pv::SessionStore store{std::filesystem::path(store_dir)};
    pv::Service service(store, *client);
    httplib::Server server;
    service.mount(server);
    std::cerr << "listening on " << host << ":" << port << ", store " << store_dir << "\n";
    if (!server.listen(host, port)) {
      std::cerr << "error: cannot bind " << host << ":" << port << "\n";
      return kBadInput;
    }
    return kOk;
  } catch (const std::exception& e) {
    return report_error(e);
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Check plans against temporal rules and run the verify/replan loop"};
  app.require_subcommand(1);

  std::string plan_path, rules_path, format = "text", domain_mode = "escort";
  std::uint64_t seed = 0;
  auto* verify = app.add_subcommand("verify", "Check a plan file against a rules file");
  verify->add_option("--plan", plan_path, "Plan file")->required();
  verify->add_option("--rules", rules_path, "Rules file (JSON)")->required();
  verify->add_option("--seed", seed, "Sampling seed");
  verify->add_option("--format", format, "text or machine")->check(CLI::IsMember({"text", "machine"}));
  verify->add_option("--domain", domain_mode, "escort (action lines) or labeled (one state per line)")
      ->check(CLI::IsMember({"escort", "labeled"}));

  std::string prompt_path, mock_script = "success";
  bool live = false, mock = false;
  std::size_t max_iter = 3;
  auto* loop = app.add_subcommand("loop", "Extract rules, confirm all of them and run the loop");
  loop->add_option("--prompt", prompt_path, "Prompt file")->required();
  auto* live_flag = loop->add_flag("--live", live, "Use the HTTP LLM from PLANVERIFY_LLM_URL / _KEY");
  loop->add_flag("--mock", mock, "Use the scripted mock (default)")->excludes(live_flag);
  loop->add_option("--mock-script", mock_script, "success, failure or a script file");
  loop->add_option("--seed", seed, "Loop seed");
  loop->add_option("--max-iter", max_iter, "Iteration bound")->check(CLI::PositiveNumber);
  loop->add_option("--format", format, "text or machine")->check(CLI::IsMember({"text", "machine"}));

  std::string formula_text, trace_path;
  auto* eval = app.add_subcommand("eval", "Evaluate a formula over a trace file");
  eval->add_option("--formula", formula_text, "Formula text")->required();
  eval->add_option("--trace", trace_path, "Trace file")->required();

  std::string store_dir, bind;
  bool serve_live = false;
  auto* serve = app.add_subcommand("serve", "Run the HTTP API");
  serve->add_option("--store", store_dir, "Session directory (default $PLANVERIFY_STORE_DIR)");
  serve->add_option("--bind", bind, "host:port (default $PLANVERIFY_BIND_ADDR or 127.0.0.1:8080)");
  serve->add_flag("--live", serve_live, "Use the HTTP LLM");
  serve->add_option("--mock-script", mock_script, "success, failure or a script file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? kOk : kBadInput;
  }

  if (*verify) return cmd_verify(plan_path, rules_path, seed, format, domain_mode);
  if (*loop) return cmd_loop(prompt_path, live, mock_script, seed, max_iter, format);
  if (*eval) return cmd_eval(formula_text, trace_path);
  return cmd_serve(store_dir, bind, serve_live, mock_script);
}
