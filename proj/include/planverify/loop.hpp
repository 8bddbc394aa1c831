#pragma once

// Session orchestration: drafting, confirmation, strictness edits and the
// bounded verify / feedback / replan loop.

#include <algorithm>
#include <cstdint>
#include <initializer_list>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "planverify/checker.hpp"
#include "planverify/error.hpp"
#include "planverify/flexibility.hpp"
#include "planverify/llm.hpp"
#include "planverify/plan_model.hpp"
#include "planverify/templates.hpp"
#include "planverify/translator.hpp"

namespace planverify {

enum class SessionStatus { Drafting, AwaitingConfirmation, Running, Valid, ExhaustedInvalid };

inline const char* to_string(SessionStatus s) {
  switch (s) {
    case SessionStatus::Drafting: return "drafting";
    case SessionStatus::AwaitingConfirmation: return "awaiting_confirmation";
    case SessionStatus::Running: return "running";
    case SessionStatus::Valid: return "valid";
    case SessionStatus::ExhaustedInvalid: return "exhausted_invalid";
  }
  return "unknown";
}

/// How plan text becomes a trace: through the escort domain, or read
/// directly as one labelled state per line.
enum class DomainMode { Escort, Labeled };

inline const char* to_string(DomainMode m) { return m == DomainMode::Escort ? "escort" : "labeled"; }

struct LoopConfig {
  std::size_t max_iterations = 3;
  std::uint64_t seed = 0;

  friend bool operator==(const LoopConfig&, const LoopConfig&) = default;
};

struct Iteration {
  /// Position in the session history.
  std::size_t index = 0;
  /// 1-based run this iteration belongs to.
  std::size_t run = 0;
  std::uint64_t seed = 0;
  std::string plan_text;
  /// Normalised steps: action lines, or state lines in labelled mode.
  std::vector<std::string> plan;
  std::size_t trace_len = 0;
  std::optional<VerificationReport> report;
  std::string feedback;
  std::string llm_feedback;
  /// Set when the plan could not be obtained, parsed or executed.
  std::optional<std::string> error;

  friend bool operator==(const Iteration&, const Iteration&) = default;
};

struct Session {
  std::string id;
  std::string prompt;
  DomainMode mode = DomainMode::Escort;
  EscortDomain domain;
  SessionStatus status = SessionStatus::Drafting;
  std::vector<ConstraintDraft> drafts;
  std::vector<ConstraintSpec> confirmed;
  /// Plan the next run starts from.
  std::string current_plan;
  LoopConfig config;
  std::size_t runs = 0;
  std::vector<Iteration> iterations;

  const ConstraintDraft* find_draft(const std::string& draft_id) const {
    for (const auto& d : drafts)
      if (d.id == draft_id) return &d;
    return nullptr;
  }

  const VerificationReport* latest_report() const {
    for (auto it = iterations.rbegin(); it != iterations.rend(); ++it)
      if (it->report) return &*it->report;
    return nullptr;
  }

  friend bool operator==(const Session&, const Session&) = default;
};

struct SessionOptions {
  DomainMode mode = DomainMode::Escort;
  EscortDomain domain;
  LlmConfig llm;
};

namespace detail {

inline TranslatorOptions translator_options(const Session& s, const LlmConfig& llm) {
  TranslatorOptions opts;
  opts.llm = llm;
  if (s.mode == DomainMode::Escort) opts.vocabulary = s.domain.vocabulary();
  return opts;
}

inline const char* plan_schema(const Session& s) {
  return s.mode == DomainMode::Escort ? prompts::kEscortSchema : prompts::kLabeledSchema;
}

inline std::string rules_block(const Session& s) {
  if (s.confirmed.empty()) return "";
  std::string out = "Rules:\n";
  for (const auto& c : s.confirmed) out += "- " + c.id + ": " + c.nl_text + "\n";
  return out;
}

inline void require_status(const Session& s, std::initializer_list<SessionStatus> allowed,
                           const char* what) {
  if (std::find(allowed.begin(), allowed.end(), s.status) == allowed.end())
    throw Error(ErrorCode::InvalidState,
                std::string(what) + " is not allowed while the session is " + to_string(s.status));
}

}  // namespace detail

/// Extracts draft rules from the prompt and asks for an initial, unverified
/// plan. Translator errors propagate; nothing is returned in that case.
inline Session create_session(std::string id, std::string prompt, LlmClient& client,
                              const SessionOptions& options = {}) {
  Session s;
  s.id = std::move(id);
  s.prompt = std::move(prompt);
  s.mode = options.mode;
  s.domain = options.domain;
  s.domain.validate();
  s.status = SessionStatus::Drafting;
  s.drafts = extract_rules(s.prompt, client, detail::translator_options(s, options.llm));
  s.current_plan = request_plan(client,
                                prompts::fill("planner", {{"schema", detail::plan_schema(s)},
                                                          {"prompt", s.prompt},
                                                          {"rules", ""}}),
                                detail::plan_schema(s), options.llm);
  s.status = SessionStatus::AwaitingConfirmation;
  return s;
}

struct RuleSelection {
  enum class Kind { Accept, Reject, Regenerate };
  std::string draft_id;
  Kind kind = Kind::Accept;
  /// Regeneration feedback appended to the draft's source text.
  std::string feedback;
};

/// Applies checkbox decisions. Accepted drafts become confirmed specs (an
/// already confirmed rule keeps its strictness), rejected ones are dropped
/// from the confirmed set and regenerated ones are re-translated and must
/// be confirmed again. `submit` moves the session to Running.
inline Session confirm_rules(Session s, const std::vector<RuleSelection>& selections, LlmClient& client,
                             bool submit = true, const LlmConfig& llm = {}) {
  detail::require_status(s,
                         {SessionStatus::AwaitingConfirmation, SessionStatus::Running,
                          SessionStatus::Valid, SessionStatus::ExhaustedInvalid},
                         "confirming rules");
  for (const auto& sel : selections)
    if (!s.find_draft(sel.draft_id))
      throw Error(ErrorCode::UnknownDraft, "no draft with id '" + sel.draft_id + "'");

  auto unconfirm = [&](const std::string& id) {
    std::erase_if(s.confirmed, [&](const ConstraintSpec& c) { return c.id == id; });
  };
  for (const auto& sel : selections) {
    auto draft = std::find_if(s.drafts.begin(), s.drafts.end(),
                              [&](const ConstraintDraft& d) { return d.id == sel.draft_id; });
    switch (sel.kind) {
      case RuleSelection::Kind::Accept: {
        ConstraintSpec spec = draft->proposed;
        spec.confirmed = true;
        auto existing = std::find_if(s.confirmed.begin(), s.confirmed.end(),
                                     [&](const ConstraintSpec& c) { return c.id == spec.id; });
        if (existing != s.confirmed.end()) {
          spec.strictness = existing->strictness;
          *existing = std::move(spec);
        } else {
          s.confirmed.push_back(std::move(spec));
        }
        break;
      }
      case RuleSelection::Kind::Reject: unconfirm(sel.draft_id); break;
      case RuleSelection::Kind::Regenerate: {
        ConstraintDraft next = *draft;
        next.source_text = draft->source_text + "\nUser feedback: " + sel.feedback;
        auto opts = detail::translator_options(s, llm);
        next.proposed.category = map_category(next.source_text, client, opts);
        next.proposed = to_ltl(next, client, opts);
        *draft = std::move(next);
        unconfirm(sel.draft_id);
        break;
      }
    }
  }
  std::sort(s.confirmed.begin(), s.confirmed.end(),
            [](const ConstraintSpec& a, const ConstraintSpec& b) { return a.id < b.id; });
  if (submit) s.status = SessionStatus::Running;
  return s;
}

/// Adds a user-written rule as a new unconfirmed draft.
inline Session add_rule(Session s, const std::string& text, LlmClient& client, const LlmConfig& llm = {}) {
  detail::require_status(s,
                         {SessionStatus::AwaitingConfirmation, SessionStatus::Running,
                          SessionStatus::Valid, SessionStatus::ExhaustedInvalid},
                         "adding a rule");
  if (detail::trim(text).empty()) throw Error(ErrorCode::InvalidArgument, "rule text is empty");
  std::size_t n = s.drafts.size() + 1;
  while (s.find_draft("R" + std::to_string(n))) ++n;
  ConstraintDraft d;
  d.id = "R" + std::to_string(n);
  d.source_text = detail::trim(text);
  d.proposed.id = d.id;
  auto opts = detail::translator_options(s, llm);
  d.proposed.category = map_category(d.source_text, client, opts);
  d.proposed = to_ltl(d, client, opts);
  s.drafts.push_back(std::move(d));
  return s;
}

inline Session adjust_strictness(Session s, const std::string& constraint_id, double weight) {
  auto it = std::find_if(s.confirmed.begin(), s.confirmed.end(),
                         [&](const ConstraintSpec& c) { return c.id == constraint_id; });
  if (it == s.confirmed.end())
    throw Error(ErrorCode::UnknownConstraint, "no confirmed constraint '" + constraint_id + "'");
  it->strictness = StrictnessWeight(weight);
  return s;
}

namespace detail {

struct PreparedPlan {
  std::vector<std::string> steps;
  Trace trace;
};

inline PreparedPlan prepare(const Session& s, const std::string& plan_text) {
  if (s.mode == DomainMode::Labeled) {
    Trace t = parse_labeled_plan(plan_text);
    std::vector<std::string> steps;
    std::string rendered = render_trace_text(t);
    for (const auto& line : split_lines(rendered)) steps.push_back(line.text);
    return {std::move(steps), std::move(t)};
  }
  PlanSteps plan = parse_plan(plan_text, s.domain);
  std::vector<std::string> steps;
  for (const auto& a : plan.actions) steps.push_back(a.to_string());
  return {std::move(steps), derive_trace(plan, s.domain)};
}

}  // namespace detail

/// Runs up to `config.max_iterations` verify/replan rounds starting from
/// the session's current plan. Iteration k of a run samples with
/// derive_seed(config.seed, k). A plan that cannot be obtained or parsed
/// still consumes its iteration.
inline Session run_iterations(Session s, LlmClient& client, const LoopConfig& config,
                              const LlmConfig& llm = {}) {
  detail::require_status(s, {SessionStatus::Running, SessionStatus::Valid, SessionStatus::ExhaustedInvalid},
                         "running the loop");
  if (s.confirmed.empty()) throw Error(ErrorCode::NoConstraints, "confirm at least one rule before running");
  if (config.max_iterations < 1) throw Error(ErrorCode::InvalidArgument, "max_iterations must be at least 1");

  s.config = config;
  s.status = SessionStatus::Running;
  const std::size_t run = ++s.runs;
  std::optional<std::string> plan_text = s.current_plan;
  std::string pending_error;

  for (std::size_t k = 0; k < config.max_iterations; ++k) {
    Iteration it;
    it.index = s.iterations.size();
    it.run = run;
    it.seed = derive_seed(config.seed, k);
    if (!plan_text) {
      it.error = pending_error;
      it.llm_feedback = "No usable plan was received: " + pending_error + "\n";
      it.feedback = "The planner did not return a usable plan.\n";
    } else {
      it.plan_text = *plan_text;
      s.current_plan = *plan_text;
      try {
        auto prepared = detail::prepare(s, *plan_text);
        it.plan = std::move(prepared.steps);
        it.trace_len = prepared.trace.size();
        it.report = verify(prepared.trace, s.confirmed, it.seed);
        it.feedback = render_feedback(*it.report, Audience::User);
        it.llm_feedback = render_feedback(*it.report, Audience::Llm);
      } catch (const Error& e) {
        it.error = e.what();
        it.feedback = std::string("The plan could not be checked: ") + e.what() + "\n";
        it.llm_feedback = std::string("The plan could not be executed: ") + e.what() +
                          "\nRegenerate the whole plan in the required format.\n";
      }
    }
    const bool valid = it.report && it.report->plan_valid;
    const std::string feedback = it.llm_feedback;
    const std::string previous = it.plan_text;
    s.iterations.push_back(std::move(it));
    if (valid) {
      s.status = SessionStatus::Valid;
      return s;
    }
    if (k + 1 == config.max_iterations) break;
    try {
      plan_text = request_plan(client,
                               prompts::fill("replanner", {{"schema", detail::plan_schema(s)},
                                                           {"prompt", s.prompt},
                                                           {"rules", detail::rules_block(s)},
                                                           {"plan", previous},
                                                           {"feedback", feedback}}),
                               detail::plan_schema(s), llm);
    } catch (const Error& e) {
      plan_text.reset();
      pending_error = e.what();
    }
  }
  s.status = SessionStatus::ExhaustedInvalid;
  return s;
}

/// Replaces the current plan with a fresh one from the planner, keeping
/// rules, weights and history.
inline Session restart_plan(Session s, LlmClient& client, const LlmConfig& llm = {}) {
  detail::require_status(s,
                         {SessionStatus::AwaitingConfirmation, SessionStatus::Running,
                          SessionStatus::Valid, SessionStatus::ExhaustedInvalid},
                         "restarting the plan");
  s.current_plan = request_plan(client,
                                prompts::fill("planner", {{"schema", detail::plan_schema(s)},
                                                          {"prompt", s.prompt},
                                                          {"rules", detail::rules_block(s)}}),
                                detail::plan_schema(s), llm);
  if (s.status != SessionStatus::AwaitingConfirmation) s.status = SessionStatus::Running;
  return s;
}

/// Plain-text explanation of the checker's state for the input panel.
/// Mentioning a rule id narrows the answer to that rule.
inline std::string answer_question(const Session& s, const std::string& question) {
  std::ostringstream out;
  const VerificationReport* report = s.latest_report();
  std::vector<const ConstraintSpec*> focus;
  for (const auto& c : s.confirmed)
    if (question.find(c.id) != std::string::npos) focus.push_back(&c);
  if (focus.empty())
    for (const auto& c : s.confirmed) focus.push_back(&c);

  out << "Session " << s.id << " is " << to_string(s.status) << " after " << s.iterations.size()
      << " iteration(s).\n";
  if (s.confirmed.empty()) out << "No rules are confirmed yet, so nothing is checked.\n";
  for (const auto* c : focus) {
    auto hard = classify(c->strictness) == Hardness::Hard;
    out << c->id << " (" << (hard ? "hard" : "soft") << ", strictness " << c->strictness.percent()
        << "%): " << c->nl_text << " Checked as " << ltl::render_formula(c->formula) << ".";
    if (!hard)
      out << " A soft rule is checked in a run with probability equal to its strictness; "
             "if it fails the plan stays valid and you are notified.";
    if (report) {
      if (const auto* r = report->find(c->id)) {
        if (!r->sampled)
          out << " In the last check it was not sampled.";
        else if (r->verdict->holds)
          out << " In the last check it held.";
        else
          out << " In the last check it was violated at step " << *r->verdict->violation_index << ".";
      }
    }
    out << "\n";
  }
  if (report) {
    out << "Last check: plan " << (report->plan_valid ? "valid" : "invalid") << ", seed "
        << report->seed << ", sampled rules:";
    for (const auto& id : report->sampling.included) out << " " << id;
    out << ".\n";
  }
  return out.str();
}

}  // namespace planverify
