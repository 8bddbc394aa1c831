#pragma once

// Provider-agnostic LLM client contract and a scripted offline mock.

#include <algorithm>
#include <cstddef>
#include <fstream>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "json.hpp"
#include "planverify/error.hpp"

namespace planverify {

struct LlmConfig {
  std::string model = "gpt-4";
  double temperature = 0.0;
  int max_output_tokens = 1024;
  int timeout_seconds = 60;
  /// Extra transport attempts after the first one fails.
  int max_retries = 1;
};

/// complete() either returns the model's text or throws Error with
/// LlmUnavailable. Implementations enforce the timeout themselves.
class LlmClient {
 public:
  virtual ~LlmClient() = default;
  virtual std::string complete(const std::string& prompt, const LlmConfig& config) = 0;
};

// Every prompt starts with `### template: <name>`; the text a mock may key
// on sits between `### input` and `### end input`.
inline std::string prompt_template_name(std::string_view prompt) {
  constexpr std::string_view tag = "### template: ";
  if (!prompt.starts_with(tag)) return {};
  auto rest = prompt.substr(tag.size());
  return std::string(rest.substr(0, rest.find('\n')));
}

inline std::string prompt_input_section(std::string_view prompt) {
  std::string out;
  std::size_t pos = 0;
  constexpr std::string_view open = "### input\n";
  constexpr std::string_view close = "### end input";
  while ((pos = prompt.find(open, pos)) != std::string_view::npos) {
    pos += open.size();
    auto end = prompt.find(close, pos);
    out += std::string(prompt.substr(pos, end == std::string_view::npos ? end : end - pos));
    if (end == std::string_view::npos) break;
    pos = end;
  }
  return out;
}

/// For `repair` prompts, the template being repaired.
inline std::string repaired_template_name(std::string_view prompt) {
  constexpr std::string_view tag = "### repairs: ";
  auto pos = prompt.find(tag);
  if (pos == std::string_view::npos) return {};
  auto rest = prompt.substr(pos + tag.size());
  return std::string(rest.substr(0, rest.find('\n')));
}

struct MockRule {
  std::string template_name;
  /// Substring searched for in the prompt's input section; empty matches all.
  std::string match;
  /// Served in order; the last one repeats.
  std::vector<std::string> responses;
};

struct MockScript {
  std::vector<MockRule> rules;
  /// Planner outputs in call order; the last one repeats.
  std::vector<std::string> plans;
  /// Every call fails as if the provider were unreachable.
  bool offline = false;
};

inline MockScript mock_script_from_json(const nlohmann::json& doc) {
  MockScript script;
  for (const auto& [key, value] : doc.items()) {
    (void)value;
    if (key != "rules" && key != "plans" && key != "offline")
      throw Error(ErrorCode::InvalidArgument, "unknown mock script field '" + key + "'");
  }
  for (const auto& r : doc.value("rules", nlohmann::json::array())) {
    MockRule rule;
    rule.template_name = r.at("template").get<std::string>();
    rule.match = r.value("match", "");
    rule.responses = r.at("responses").get<std::vector<std::string>>();
    if (rule.responses.empty())
      throw Error(ErrorCode::InvalidArgument, "mock rule without responses");
    script.rules.push_back(std::move(rule));
  }
  script.plans = doc.value("plans", std::vector<std::string>{});
  script.offline = doc.value("offline", false);
  return script;
}

inline nlohmann::json mock_script_to_json(const MockScript& script) {
  nlohmann::json rules = nlohmann::json::array();
  for (const auto& r : script.rules)
    rules.push_back({{"template", r.template_name}, {"match", r.match}, {"responses", r.responses}});
  return {{"rules", rules}, {"plans", script.plans}, {"offline", script.offline}};
}

inline MockScript load_mock_script(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open mock script " + path);
  try {
    return mock_script_from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidArgument, path + ": " + e.what());
  }
}

/// Deterministic client: the response depends only on the script and the
/// sequence of prompts seen so far. Thread-safe.
class MockLlmClient : public LlmClient {
 public:
  struct Call {
    std::string template_name;
    std::string prompt;
    std::string response;
  };

  explicit MockLlmClient(MockScript script)
      : script_(std::move(script)), served_(script_.rules.size(), 0) {}

  std::string complete(const std::string& prompt, const LlmConfig&) override {
    std::lock_guard lock(mu_);
    auto name = prompt_template_name(prompt);
    if (script_.offline) {
      calls_.push_back({name, prompt, ""});
      throw Error(ErrorCode::LlmUnavailable, "mock LLM is offline");
    }
    auto response = respond(name, prompt);
    calls_.push_back({name, prompt, response});
    return response;
  }

  std::vector<Call> calls() const {
    std::lock_guard lock(mu_);
    return calls_;
  }

  std::size_t count_calls(std::string_view template_name) const {
    std::lock_guard lock(mu_);
    return static_cast<std::size_t>(std::count_if(
        calls_.begin(), calls_.end(), [&](const Call& c) { return c.template_name == template_name; }));
  }

 private:
  std::optional<std::string> from_rules(const std::string& name, const std::string& input) {
    for (std::size_t i = 0; i < script_.rules.size(); ++i) {
      const auto& rule = script_.rules[i];
      if (rule.template_name != name) continue;
      if (!rule.match.empty() && input.find(rule.match) == std::string::npos) continue;
      auto k = std::min(served_[i]++, rule.responses.size() - 1);
      return rule.responses[k];
    }
    return std::nullopt;
  }

  std::string respond(const std::string& name, const std::string& prompt) {
    const auto input = prompt_input_section(prompt);
    if (auto r = from_rules(name, input)) return *r;
    auto effective = name == "repair" ? repaired_template_name(prompt) : name;
    if (effective != name)
      if (auto r = from_rules(effective, input)) return *r;
    if (effective == "planner" || effective == "replanner" || effective == "plan-parser") {
      if (script_.plans.empty()) return "```plan\n```";
      auto k = std::min(plans_served_++, script_.plans.size() - 1);
      return script_.plans[k];
    }
    if (effective == "extractor") return "```rules\n```";
    return "";
  }

  MockScript script_;
  std::vector<std::size_t> served_;
  std::size_t plans_served_ = 0;
  std::vector<Call> calls_;
  mutable std::mutex mu_;
};

}  // namespace planverify
