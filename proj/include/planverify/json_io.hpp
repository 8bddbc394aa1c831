#pragma once

// Document form of rules, reports and sessions. Field names are part of the
// service API and the CLI machine format; see schemas/ for the contracts.
// Readers reject unknown fields.

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <initializer_list>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "planverify/checker.hpp"
#include "planverify/error.hpp"
#include "planverify/loop.hpp"
#include "planverify/templates.hpp"

namespace planverify {

using json = nlohmann::json;

namespace detail {

inline void only_keys(const json& j, std::initializer_list<std::string_view> allowed, std::string_view what) {
  if (!j.is_object()) throw Error(ErrorCode::InvalidArgument, std::string(what) + " must be an object");
  for (const auto& [key, value] : j.items()) {
    (void)value;
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end())
      throw Error(ErrorCode::InvalidArgument, "unknown field '" + key + "' in " + std::string(what));
  }
}

template <class T>
T field(const json& j, const char* key, std::string_view what) {
  if (!j.contains(key))
    throw Error(ErrorCode::InvalidArgument, "missing field '" + std::string(key) + "' in " + std::string(what));
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw Error(ErrorCode::InvalidArgument, "field '" + std::string(key) + "' in " + std::string(what) +
                                                " has the wrong type");
  }
}

template <class T>
T field_or(const json& j, const char* key, T fallback, std::string_view what) {
  if (!j.contains(key) || j.at(key).is_null()) return fallback;
  return field<T>(j, key, what);
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Constraints

inline json params_to_json(const TemplateParams& params) {
  json out = json::object();
  for (const auto& [k, v] : params_to_fields(params)) {
    if (k == "start" || k == "end")
      out[k] = std::stoll(v);
    else
      out[k] = v;
  }
  return out;
}

inline json to_json(const ConstraintSpec& c) {
  return {{"id", c.id},
          {"category", std::string(to_string(c.category))},
          {"params", params_to_json(c.params)},
          {"formula", ltl::render_formula(c.formula)},
          {"nl_text", c.nl_text},
          {"strictness", c.strictness.value()},
          {"confirmed", c.confirmed}};
}

/// Recompiles the formula from category and params. A `formula` field, when
/// given, must be the compiled formula.
inline ConstraintSpec spec_from_json(const json& j) {
  const std::string what = "rule";
  detail::only_keys(j, {"id", "category", "params", "formula", "nl_text", "strictness", "confirmed"}, what);
  auto id = detail::field<std::string>(j, "id", what);
  const std::string where = "rule " + id;
  auto category_text = detail::field<std::string>(j, "category", where);
  auto category = parse_category(category_text);
  if (!category) throw Error(ErrorCode::InvalidArgument, where + ": unknown category '" + category_text + "'");
  std::map<std::string, std::string> fields;
  const json& params = j.contains("params") ? j.at("params") : json::object();
  if (!params.is_object()) throw Error(ErrorCode::InvalidArgument, where + ": params must be an object");
  for (const auto& [k, v] : params.items()) {
    if (v.is_string())
      fields[k] = v.get<std::string>();
    else if (v.is_number_integer())
      fields[k] = v.dump();
    else
      throw Error(ErrorCode::InvalidArgument, where + ": parameter '" + k + "' must be a string or integer");
  }
  ConstraintSpec spec;
  try {
    spec = make_spec(id, params_from_fields(*category, fields),
                     StrictnessWeight(detail::field_or<double>(j, "strictness", 1.0, where)),
                     detail::field_or<bool>(j, "confirmed", false, where));
  } catch (const Error& e) {
    throw Error(e.code(), where + ": " + e.what());
  }
  if (j.contains("formula") && !j.at("formula").is_null()) {
    auto text = detail::field<std::string>(j, "formula", where);
    ltl::Formula given = [&] {
      try {
        return ltl::parse_formula(text);
      } catch (const SyntaxError& e) {
        throw Error(ErrorCode::SyntaxError, where + ": " + e.what());
      }
    }();
    if (!(given == spec.formula))
      throw Error(ErrorCode::ParamMismatch, where + ": formula '" + text + "' differs from the compiled '" +
                                                ltl::render_formula(spec.formula) + "'");
  }
  if (j.contains("nl_text") && !j.at("nl_text").is_null())
    spec.nl_text = detail::field<std::string>(j, "nl_text", where);
  return spec;
}

inline json to_json(const ConstraintDraft& d) {
  return {{"id", d.id}, {"source_text", d.source_text}, {"proposed", to_json(d.proposed)}};
}

inline ConstraintDraft draft_from_json(const json& j) {
  detail::only_keys(j, {"id", "source_text", "proposed"}, "draft");
  return {detail::field<std::string>(j, "id", "draft"), detail::field<std::string>(j, "source_text", "draft"),
          spec_from_json(j.at("proposed"))};
}

// ---------------------------------------------------------------------------
// Reports

inline json to_json(const VerificationReport& r) {
  json results = json::array();
  for (const auto& c : r.results) {
    json verdict = nullptr;
    if (c.verdict) {
      verdict = {{"holds", c.verdict->holds}, {"violation_index", nullptr}};
      if (c.verdict->violation_index) verdict["violation_index"] = *c.verdict->violation_index;
    }
    results.push_back({{"id", c.id},
                       {"sampled", c.sampled},
                       {"hardness", to_string(c.hardness)},
                       {"weight", c.weight},
                       {"formula", c.formula},
                       {"description", c.description},
                       {"verdict", verdict}});
  }
  json draws = json::array();
  for (const auto& d : r.sampling.draws)
    draws.push_back({{"id", d.id}, {"weight", d.weight}, {"draw", d.draw}, {"included", d.included}});
  return {{"plan_valid", r.plan_valid},
          {"results", results},
          {"soft_violations", r.soft_violations},
          {"seed", r.seed},
          {"trace_len", r.trace_len},
          {"sampling", {{"seed", r.sampling.seed}, {"included", r.sampling.included}, {"draws", draws}}}};
}

inline VerificationReport report_from_json(const json& j) {
  const char* what = "report";
  detail::only_keys(j, {"plan_valid", "results", "soft_violations", "seed", "trace_len", "sampling"}, what);
  VerificationReport r;
  r.plan_valid = detail::field<bool>(j, "plan_valid", what);
  r.soft_violations = detail::field<std::vector<std::string>>(j, "soft_violations", what);
  r.seed = detail::field<std::uint64_t>(j, "seed", what);
  r.trace_len = detail::field<std::size_t>(j, "trace_len", what);
  for (const auto& c : j.at("results")) {
    detail::only_keys(c, {"id", "sampled", "hardness", "weight", "formula", "description", "verdict"}, "result");
    ConstraintResult res;
    res.id = detail::field<std::string>(c, "id", "result");
    res.sampled = detail::field<bool>(c, "sampled", "result");
    res.hardness = detail::field<std::string>(c, "hardness", "result") == "hard" ? Hardness::Hard : Hardness::Soft;
    res.weight = detail::field<double>(c, "weight", "result");
    res.formula = detail::field<std::string>(c, "formula", "result");
    res.description = detail::field<std::string>(c, "description", "result");
    if (c.contains("verdict") && !c.at("verdict").is_null()) {
      const auto& v = c.at("verdict");
      ltl::Verdict verdict;
      verdict.holds = detail::field<bool>(v, "holds", "verdict");
      if (v.contains("violation_index") && !v.at("violation_index").is_null())
        verdict.violation_index = v.at("violation_index").get<std::size_t>();
      res.verdict = verdict;
    }
    r.results.push_back(std::move(res));
  }
  const auto& s = j.at("sampling");
  detail::only_keys(s, {"seed", "included", "draws"}, "sampling");
  r.sampling.seed = detail::field<std::uint64_t>(s, "seed", "sampling");
  r.sampling.included = detail::field<std::vector<std::string>>(s, "included", "sampling");
  for (const auto& d : s.at("draws"))
    r.sampling.draws.push_back({detail::field<std::string>(d, "id", "draw"), detail::field<double>(d, "weight", "draw"),
                                detail::field<double>(d, "draw", "draw"), detail::field<bool>(d, "included", "draw")});
  return r;
}

// ---------------------------------------------------------------------------
// Sessions

inline json to_json(const Iteration& it) {
  return {{"index", it.index},
          {"run", it.run},
          {"seed", it.seed},
          {"plan_text", it.plan_text},
          {"plan", it.plan},
          {"trace_len", it.trace_len},
          {"report", it.report ? to_json(*it.report) : json(nullptr)},
          {"feedback", it.feedback},
          {"llm_feedback", it.llm_feedback},
          {"error", it.error ? json(*it.error) : json(nullptr)}};
}

inline Iteration iteration_from_json(const json& j) {
  const char* what = "iteration";
  detail::only_keys(j, {"index", "run", "seed", "plan_text", "plan", "trace_len", "report", "feedback",
                        "llm_feedback", "error"},
                    what);
  Iteration it;
  it.index = detail::field<std::size_t>(j, "index", what);
  it.run = detail::field<std::size_t>(j, "run", what);
  it.seed = detail::field<std::uint64_t>(j, "seed", what);
  it.plan_text = detail::field<std::string>(j, "plan_text", what);
  it.plan = detail::field<std::vector<std::string>>(j, "plan", what);
  it.trace_len = detail::field<std::size_t>(j, "trace_len", what);
  if (!j.at("report").is_null()) it.report = report_from_json(j.at("report"));
  it.feedback = detail::field<std::string>(j, "feedback", what);
  it.llm_feedback = detail::field<std::string>(j, "llm_feedback", what);
  if (j.contains("error") && !j.at("error").is_null()) it.error = j.at("error").get<std::string>();
  return it;
}

inline json to_json(const EscortDomain& d, DomainMode mode) {
  return {{"mode", to_string(mode)},
          {"escort", d.escort},
          {"persons", d.persons},
          {"locations", d.locations},
          {"initial_location", d.initial_location},
          {"step_minutes", d.step_minutes}};
}

inline json to_json(const Session& s) {
  json drafts = json::array(), confirmed = json::array(), iterations = json::array();
  for (const auto& d : s.drafts) drafts.push_back(to_json(d));
  for (const auto& c : s.confirmed) confirmed.push_back(to_json(c));
  for (const auto& it : s.iterations) iterations.push_back(to_json(it));
  return {{"id", s.id},
          {"prompt", s.prompt},
          {"domain", to_json(s.domain, s.mode)},
          {"status", to_string(s.status)},
          {"drafts", drafts},
          {"confirmed", confirmed},
          {"current_plan", s.current_plan},
          {"config", {{"max_iterations", s.config.max_iterations}, {"seed", s.config.seed}}},
          {"runs", s.runs},
          {"iterations", iterations}};
}

inline SessionStatus status_from_string(const std::string& s) {
  for (auto st : {SessionStatus::Drafting, SessionStatus::AwaitingConfirmation, SessionStatus::Running,
                  SessionStatus::Valid, SessionStatus::ExhaustedInvalid})
    if (s == to_string(st)) return st;
  throw Error(ErrorCode::InvalidArgument, "unknown session status '" + s + "'");
}

inline Session session_from_json(const json& j) {
  const char* what = "session";
  detail::only_keys(j, {"id", "prompt", "domain", "status", "drafts", "confirmed", "current_plan", "config", "runs",
                        "iterations"},
                    what);
  Session s;
  s.id = detail::field<std::string>(j, "id", what);
  s.prompt = detail::field<std::string>(j, "prompt", what);
  const auto& d = j.at("domain");
  detail::only_keys(d, {"mode", "escort", "persons", "locations", "initial_location", "step_minutes"}, "domain");
  auto mode = detail::field<std::string>(d, "mode", "domain");
  if (mode != "escort" && mode != "labeled")
    throw Error(ErrorCode::InvalidArgument, "unknown domain mode '" + mode + "'");
  s.mode = mode == "escort" ? DomainMode::Escort : DomainMode::Labeled;
  s.domain.escort = detail::field<std::string>(d, "escort", "domain");
  s.domain.persons = detail::field<std::vector<std::string>>(d, "persons", "domain");
  s.domain.locations = detail::field<std::vector<std::string>>(d, "locations", "domain");
  s.domain.initial_location = detail::field<std::string>(d, "initial_location", "domain");
  s.domain.step_minutes = detail::field<std::int64_t>(d, "step_minutes", "domain");
  s.domain.validate();
  s.status = status_from_string(detail::field<std::string>(j, "status", what));
  for (const auto& x : j.at("drafts")) s.drafts.push_back(draft_from_json(x));
  for (const auto& x : j.at("confirmed")) s.confirmed.push_back(spec_from_json(x));
  s.current_plan = detail::field<std::string>(j, "current_plan", what);
  const auto& c = j.at("config");
  detail::only_keys(c, {"max_iterations", "seed"}, "config");
  s.config.max_iterations = detail::field<std::size_t>(c, "max_iterations", "config");
  s.config.seed = detail::field<std::uint64_t>(c, "seed", "config");
  s.runs = detail::field<std::size_t>(j, "runs", what);
  for (const auto& x : j.at("iterations")) s.iterations.push_back(iteration_from_json(x));
  return s;
}

// ---------------------------------------------------------------------------
// Files

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// Rules file: `{"rules": [ {id, category, params, formula?, strictness?,
/// confirmed?}, ... ]}`. Ids must be unique.
inline std::vector<ConstraintSpec> parse_rules_document(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::InvalidArgument, std::string("rules file is not valid JSON: ") + e.what());
  }
  detail::only_keys(doc, {"rules"}, "rules file");
  if (!doc.contains("rules") || !doc.at("rules").is_array())
    throw Error(ErrorCode::InvalidArgument, "rules file needs a \"rules\" array");
  std::vector<ConstraintSpec> rules;
  std::size_t index = 0;
  for (const auto& r : doc.at("rules")) {
    try {
      rules.push_back(spec_from_json(r));
    } catch (const Error& e) {
      throw Error(e.code(), "rules[" + std::to_string(index) + "]: " + e.what());
    }
    for (std::size_t k = 0; k + 1 < rules.size(); ++k)
      if (rules[k].id == rules.back().id)
        throw Error(ErrorCode::InvalidArgument, "duplicate rule id '" + rules.back().id + "'");
    ++index;
  }
  return rules;
}

inline json rules_to_json(const std::vector<ConstraintSpec>& rules) {
  json arr = json::array();
  for (const auto& r : rules) arr.push_back(to_json(r));
  return {{"rules", arr}};
}

/// Plan file: optional `initial <person>=<location> ...` line followed by
/// one action per line. Without it everyone starts at the initial location.
inline PlanSteps parse_plan_document(const std::string& text, const EscortDomain& domain) {
  std::string actions;
  std::optional<std::map<std::string, std::string>> where;
  std::size_t lineno = 0;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) {
    ++lineno;
    auto body = detail::trim(line.substr(0, line.find('#')));
    if (body.starts_with("initial ") || body == "initial") {
      if (where) throw Error(ErrorCode::InvalidArgument, "line " + std::to_string(lineno) + ": second initial line");
      where.emplace();
      std::istringstream tokens(body.substr(7));
      for (std::string tok; tokens >> tok;) {
        auto eq = tok.find('=');
        auto person = tok.substr(0, eq), loc = eq == std::string::npos ? "" : tok.substr(eq + 1);
        if (!domain.is_person(person) || !domain.is_location(loc))
          throw Error(ErrorCode::UnknownEntity, "line " + std::to_string(lineno) + ": bad placement '" + tok + "'");
        (*where)[person] = loc;
      }
      actions += "\n";
      continue;
    }
    actions += line + "\n";
  }
  PlanSteps plan = parse_plan(actions, domain);
  if (where) {
    for (const auto& p : domain.everyone())
      if (!where->count(p)) (*where)[p] = domain.initial_location;
    plan.initial = domain.label(*where, 0, 0, false);
  }
  return plan;
}

}  // namespace planverify
