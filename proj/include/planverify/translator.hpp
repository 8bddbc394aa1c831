#pragma once

// LLM-backed rule translation. The model only ever proposes a category and
// template parameters; formulas are produced by the template compiler and
// checked against the parser before they reach a ConstraintSpec.

#include <cctype>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "planverify/error.hpp"
#include "planverify/llm.hpp"
#include "planverify/ltl.hpp"
#include "planverify/plan_model.hpp"
#include "planverify/templates.hpp"

namespace planverify {

struct ConstraintDraft {
  std::string id;
  /// Clause taken from the user's prompt, plus any regeneration feedback.
  std::string source_text;
  ConstraintSpec proposed;

  friend bool operator==(const ConstraintDraft&, const ConstraintDraft&) = default;
};

struct TranslatorOptions {
  LlmConfig llm;
  /// Names a rule may mention. Unset means any identifier is accepted.
  std::optional<std::set<std::string>> vocabulary;
};

namespace prompts {

inline const std::map<std::string, std::string>& templates() {
  static const std::map<std::string, std::string> table = {
      {"extractor",
       "### template: extractor\n"
       "Read the planning request below and list every constraint the plan must respect,\n"
       "including the final goal. Keep each constraint as one short clause, close to the\n"
       "user's wording. Answer with a single fenced block and nothing else:\n"
       "```rules\n"
       "- <constraint>\n"
       "```\n"
       "If the request has no constraints, answer with an empty block.\n"
       "### input\n{{prompt}}\n### end input\n"},
      {"mapper",
       "### template: mapper\n"
       "Classify the constraint into exactly one category:\n"
       "  fixed_time_block   an event may only happen inside a time window\n"
       "  sequential_order   one event must happen before another\n"
       "  concurrent_events  two events always happen together\n"
       "  conditional        whenever one event happens another must follow\n"
       "  exclusive          two conditions may never hold at once\n"
       "  global             a condition that must hold in every state\n"
       "  eventual_goal      a condition that must hold at some point\n"
       "Examples:\n"
       "  \"the meeting has to happen between 9:00 and 10:00\" -> fixed_time_block\n"
       "  \"preheat the oven before baking\" -> sequential_order\n"
       "  \"the lights are on exactly when someone is home\" -> concurrent_events\n"
       "  \"if it rains, close the windows afterwards\" -> conditional\n"
       "  \"never run the dryer and the oven at the same time\" -> exclusive\n"
       "  \"the door must stay locked\" -> global\n"
       "  \"all boxes must end up in the truck\" -> eventual_goal\n"
       "Answer with a single fenced block:\n"
       "```category\n<category>\n```\n"
       "### input\n{{rule}}\n### end input\n"},
      {"ltl-translator",
       "### template: ltl-translator\n"
       "Fill the parameters of the {{category}} template for the constraint below.\n"
       "Parameters: {{keys}}\n"
       "Propositions are identifiers; conditions and goals use the formula syntax\n"
       "(! & | -> <-> X G F U W, comparisons such as escorted_count <= 1).\n"
       "Known propositions and variables: {{vocabulary}}\n"
       "Answer with a single fenced block, one `key: value` per line:\n"
       "```params\n<key>: <value>\n```\n"
       "### input\n{{rule}}\n### end input\n"},
      {"back-translator",
       "### template: back-translator\n"
       "Explain the rule below to a non-expert in one plain English sentence. Mention every\n"
       "proposition, variable and number exactly as written.\n"
       "Category: {{category}}\nParameters: {{params}}\n"
       "### input\n{{formula}}\n### end input\n"},
      {"planner",
       "### template: planner\n"
       "You are a planner. Produce a plan for the request below.\n"
       "{{schema}}\n"
       "Answer with a single fenced block:\n```plan\n<one step per line>\n```\n"
       "### input\n{{prompt}}\n{{rules}}### end input\n"},
      {"replanner",
       "### template: replanner\n"
       "Your previous plan was checked against the user's rules and rejected.\n"
       "Produce a corrected plan. {{schema}}\n"
       "Answer with a single fenced block:\n```plan\n<one step per line>\n```\n"
       "### input\n{{prompt}}\n{{rules}}Previous plan:\n{{plan}}\nChecker feedback:\n{{feedback}}"
       "### end input\n"},
      {"plan-parser",
       "### template: plan-parser\n"
       "Rewrite the plan below in the required format. {{schema}}\n"
       "Answer with a single fenced block:\n```plan\n<one step per line>\n```\n"
       "### input\n{{plan}}\n### end input\n"},
      {"repair",
       "### template: repair\n### repairs: {{template}}\n"
       "Your previous answer could not be parsed: {{error}}\n"
       "Answer the original request again and follow its answer format exactly.\n"
       "Previous answer:\n{{response}}\n"
       "Original request:\n{{original}}"},
  };
  return table;
}

/// Substitutes every `{{slot}}` of a named template; a slot without a value
/// is an error. Values are inserted verbatim and never rescanned.
inline std::string fill(const std::string& name, const std::map<std::string, std::string>& slots) {
  auto it = templates().find(name);
  if (it == templates().end()) throw Error(ErrorCode::InvalidArgument, "no prompt template " + name);
  const std::string& text = it->second;
  std::string out;
  std::size_t pos = 0;
  while (true) {
    auto open = text.find("{{", pos);
    if (open == std::string::npos) break;
    auto close = text.find("}}", open);
    auto slot = text.substr(open + 2, close - open - 2);
    auto value = slots.find(slot);
    if (value == slots.end())
      throw Error(ErrorCode::InvalidArgument, "template " + name + " slot {{" + slot + "}} not filled");
    out.append(text, pos, open - pos);
    out += value->second;
    pos = close + 2;
  }
  out.append(text, pos);
  return out;
}

inline const char* kEscortSchema =
    "Steps are `escort <person> <from> <to>` (the escort walks with one person) or "
    "`move <person> <from> <to>` (a person walks alone).";
inline const char* kLabeledSchema =
    "Each step is one state: the propositions that hold, separated by spaces, and "
    "`name=value` for integer variables; `-` is a state where nothing holds.";

}  // namespace prompts

namespace detail {

inline std::string trim(std::string_view s) {
  auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

struct NumberedLine {
  std::size_t number;
  std::string text;
};

inline std::vector<NumberedLine> split_lines(std::string_view text) {
  std::vector<NumberedLine> lines;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) lines.push_back({++n, line});
  return lines;
}

/// Lines strictly inside the first ```tag fence.
inline std::optional<std::vector<NumberedLine>> fenced(std::string_view text, std::string_view tag) {
  auto lines = split_lines(text);
  const std::string opener = "```" + std::string(tag);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (trim(lines[i].text) != opener) continue;
    std::vector<NumberedLine> body;
    for (std::size_t j = i + 1; j < lines.size(); ++j) {
      if (trim(lines[j].text) == "```") return body;
      body.push_back(lines[j]);
    }
    return std::nullopt;
  }
  return std::nullopt;
}

inline std::vector<NumberedLine> require_fenced(std::string_view text, std::string_view tag) {
  auto body = fenced(text, tag);
  if (!body) throw UnparseableLlmOutput("expected a ```" + std::string(tag) + " block");
  return *body;
}

/// Calls the model and parses; a response that fails the schema gets one
/// repair attempt, then the error propagates.
template <class Parse>
auto complete_structured(LlmClient& client, const std::string& template_name,
                         const std::string& prompt, const LlmConfig& config, Parse parse) {
  auto raw = client.complete(prompt, config);
  try {
    return parse(raw);
  } catch (const UnparseableLlmOutput& e) {
    auto repair = prompts::fill(
        "repair", {{"template", template_name}, {"error", e.what()}, {"response", raw}, {"original", prompt}});
    return parse(client.complete(repair, config));
  }
}

inline std::string join(const std::set<std::string>& names, std::string_view sep) {
  std::string out;
  for (const auto& n : names) out += (out.empty() ? "" : std::string(sep)) + n;
  return out;
}

inline std::string strip_list_marker(std::string s) {
  s = trim(s);
  if (!s.empty() && (s[0] == '-' || s[0] == '*')) return trim(s.substr(1));
  std::size_t i = 0;
  while (i < s.size() && std::isdigit(static_cast<unsigned char>(s[i]))) ++i;
  if (i > 0 && i < s.size() && (s[i] == '.' || s[i] == ')')) return trim(s.substr(i + 1));
  return s;
}

}  // namespace detail

inline ConstraintCategory map_category(const std::string& rule_text, LlmClient& client,
                                       const TranslatorOptions& options = {}) {
  auto prompt = prompts::fill("mapper", {{"rule", rule_text}});
  return detail::complete_structured(client, "mapper", prompt, options.llm, [](const std::string& raw) {
    for (const auto& line : detail::require_fenced(raw, "category")) {
      auto text = detail::trim(line.text);
      if (text.empty()) continue;
      if (auto c = parse_category(text)) return *c;
      throw UnparseableLlmOutput("'" + text + "' is not one of the seven categories", line.number);
    }
    throw UnparseableLlmOutput("empty category block");
  });
}

/// Asks the model for the template parameters of `draft.proposed.category`
/// and compiles them.
inline ConstraintSpec to_ltl(const ConstraintDraft& draft, LlmClient& client,
                             const TranslatorOptions& options = {}) {
  const auto category = draft.proposed.category;
  std::string keys;
  for (const auto& k : param_keys(category)) keys += (keys.empty() ? "" : ", ") + k;
  auto prompt = prompts::fill(
      "ltl-translator",
      {{"category", std::string(to_string(category))},
       {"keys", keys},
       {"vocabulary", options.vocabulary ? detail::join(*options.vocabulary, ", ") : "(any identifier)"},
       {"rule", draft.source_text}});
  auto fields = detail::complete_structured(
      client, "ltl-translator", prompt, options.llm, [](const std::string& raw) {
        std::map<std::string, std::string> out;
        for (const auto& line : detail::require_fenced(raw, "params")) {
          auto text = detail::trim(line.text);
          if (text.empty()) continue;
          auto colon = text.find(':');
          if (colon == std::string::npos)
            throw UnparseableLlmOutput("expected `key: value`", line.number);
          out[detail::trim(text.substr(0, colon))] = detail::trim(text.substr(colon + 1));
        }
        return out;
      });

  auto params = params_from_fields(category, fields);
  if (options.vocabulary) {
    for (const auto& name : param_names(params))
      if (!options.vocabulary->count(name))
        throw Error(ErrorCode::ParamMismatch, "unknown entity '" + name + "' in rule " + draft.id);
  }
  auto spec = make_spec(draft.id, std::move(params));
  if (!(ltl::parse_formula(ltl::render_formula(spec.formula)) == spec.formula))
    throw Error(ErrorCode::ParamMismatch, "compiled formula does not round-trip for rule " + draft.id);
  return spec;
}

/// Extracts constraint clauses and turns each into an unconfirmed draft
/// with ids R1..Rn in prompt order.
inline std::vector<ConstraintDraft> extract_rules(const std::string& prompt, LlmClient& client,
                                                  const TranslatorOptions& options = {}) {
  if (detail::trim(prompt).empty())
    throw Error(ErrorCode::InvalidArgument, "prompt must not be empty");
  auto request = prompts::fill("extractor", {{"prompt", prompt}});
  auto clauses = detail::complete_structured(
      client, "extractor", request, options.llm, [](const std::string& raw) {
        std::vector<std::string> out;
        for (const auto& line : detail::require_fenced(raw, "rules")) {
          auto clause = detail::strip_list_marker(line.text);
          if (!clause.empty()) out.push_back(clause);
        }
        return out;
      });

  std::vector<ConstraintDraft> drafts;
  for (std::size_t i = 0; i < clauses.size(); ++i) {
    ConstraintDraft d;
    d.id = "R" + std::to_string(i + 1);
    d.source_text = clauses[i];
    d.proposed.id = d.id;
    d.proposed.category = map_category(d.source_text, client, options);
    d.proposed = to_ltl(d, client, options);
    drafts.push_back(std::move(d));
  }
  return drafts;
}

namespace detail {

// The paraphrase must name every parameter: literal values verbatim and,
// for formula-valued parameters, every proposition and variable in them.
inline bool faithful(const std::string& text, const ConstraintSpec& spec) {
  if (trim(text).empty()) return false;
  for (const auto& [key, value] : params_to_fields(spec.params)) {
    if (key == "condition" || key == "goal") {
      for (const auto& name : ltl::names(ltl::parse_formula(value)))
        if (text.find(name) == std::string::npos) return false;
    } else if (text.find(value) == std::string::npos) {
      return false;
    }
  }
  return true;
}

}  // namespace detail

/// The model's paraphrase when it passes the faithfulness gate, otherwise
/// the fixed template sentence. Never throws for model failures.
inline std::string back_translate(const ConstraintSpec& spec, LlmClient& client,
                                  const TranslatorOptions& options = {}) {
  std::string params;
  for (const auto& [k, v] : params_to_fields(spec.params))
    params += (params.empty() ? "" : "; ") + k + " = " + v;
  try {
    auto prompt = prompts::fill("back-translator", {{"category", std::string(to_string(spec.category))},
                                                    {"params", params},
                                                    {"formula", ltl::render_formula(spec.formula)}});
    auto text = detail::trim(client.complete(prompt, options.llm));
    if (detail::faithful(text, spec)) return text;
  } catch (const Error&) {
  }
  return describe(spec);
}

/// Plan body: the ```plan block when present, else the whole text.
inline std::vector<detail::NumberedLine> plan_lines(std::string_view text) {
  if (auto body = detail::fenced(text, "plan")) return *body;
  return detail::split_lines(text);
}

/// Parses the line-oriented action schema (`escort P3 L1 L2`,
/// `move P1 L2 L1`, `#` comments, optional `1.` numbering).
inline PlanSteps parse_plan(std::string_view text, const EscortDomain& domain = {}) {
  PlanSteps plan;
  plan.initial = domain.initial_state();
  for (const auto& line : plan_lines(text)) {
    auto body = line.text.substr(0, line.text.find('#'));
    body = detail::strip_list_marker(body);
    if (body.empty()) continue;
    std::istringstream tokens(body);
    std::vector<std::string> words;
    for (std::string w; tokens >> w;) words.push_back(w);
    if (words.size() != 4)
      throw UnparseableLlmOutput("expected `<escort|move> <person> <from> <to>`, got '" + body + "'",
                                 line.number);
    std::string kind = words[0];
    for (auto& c : kind) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    if (kind != "escort" && kind != "move")
      throw UnparseableLlmOutput("unknown action '" + words[0] + "'", line.number);
    if (!domain.is_person(words[1]))
      throw Error(ErrorCode::UnknownEntity,
                  "line " + std::to_string(line.number) + ": unknown person '" + words[1] + "'");
    for (int k : {2, 3})
      if (!domain.is_location(words[k]))
        throw Error(ErrorCode::UnknownEntity,
                    "line " + std::to_string(line.number) + ": unknown location '" + words[k] + "'");
    plan.actions.push_back(kind == "escort" ? Action::escort(words[1], words[2], words[3])
                                            : Action::move(words[1], words[2], words[3]));
  }
  return plan;
}

/// Pre-labelled plans: each body line is one state in trace text format.
inline Trace parse_labeled_plan(std::string_view text) {
  std::string body;
  for (const auto& line : plan_lines(text)) body += line.text + "\n";
  try {
    return parse_trace_text(body);
  } catch (const Error& e) {
    throw UnparseableLlmOutput(e.what());
  }
}

/// Requests a plan and returns the body of its ```plan block. A response
/// without the block gets one reformatting attempt.
inline std::string request_plan(LlmClient& client, const std::string& prompt, const std::string& schema,
                                const LlmConfig& config) {
  auto body_of = [](const std::string& raw) {
    std::string out;
    for (const auto& line : detail::require_fenced(raw, "plan")) out += line.text + "\n";
    return out;
  };
  auto raw = client.complete(prompt, config);
  try {
    return body_of(raw);
  } catch (const UnparseableLlmOutput&) {
    return body_of(client.complete(prompts::fill("plan-parser", {{"schema", schema}, {"plan", raw}}), config));
  }
}

}  // namespace planverify
