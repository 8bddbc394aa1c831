#pragma once

// The plan checker: verifies a trace against the sampled constraint set and
// renders the result for the user and for the planner.

#include <algorithm>
#include <cstdint>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "planverify/error.hpp"
#include "planverify/flexibility.hpp"
#include "planverify/ltl.hpp"
#include "planverify/plan_model.hpp"
#include "planverify/templates.hpp"

namespace planverify {

struct ConstraintResult {
  std::string id;
  bool sampled = false;
  /// Present iff sampled.
  std::optional<ltl::Verdict> verdict;
  Hardness hardness = Hardness::Hard;
  double weight = 1.0;
  std::string formula;
  std::string description;

  bool violated() const { return verdict && !verdict->holds; }

  friend bool operator==(const ConstraintResult&, const ConstraintResult&) = default;
};

struct VerificationReport {
  bool plan_valid = true;
  /// Ordered by constraint id.
  std::vector<ConstraintResult> results;
  std::vector<std::string> soft_violations;
  std::uint64_t seed = 0;
  std::size_t trace_len = 0;
  SampledSet sampling;

  const ConstraintResult* find(const std::string& id) const {
    for (const auto& r : results)
      if (r.id == id) return &r;
    return nullptr;
  }

  friend bool operator==(const VerificationReport&, const VerificationReport&) = default;
};

/// A plan is invalid iff some sampled hard constraint fails. Sampled soft
/// failures are listed in `soft_violations` without affecting validity.
inline VerificationReport verify(const Trace& trace, const std::vector<ConstraintSpec>& constraints,
                                 std::uint64_t seed) {
  if (trace.size() == 0) throw Error(ErrorCode::EmptyTrace, "cannot verify an empty trace");
  SampledSet active = sample_active_set(constraints, seed);

  std::vector<const ConstraintSpec*> order;
  for (const auto& c : constraints) order.push_back(&c);
  std::sort(order.begin(), order.end(), [](auto* a, auto* b) { return a->id < b->id; });

  VerificationReport report;
  report.seed = seed;
  report.trace_len = trace.size();
  ltl::TraceEvaluator ev(trace);
  for (const auto* c : order) {
    ConstraintResult r;
    r.id = c->id;
    r.hardness = classify(c->strictness);
    r.weight = c->strictness.value();
    r.formula = ltl::render_formula(c->formula);
    r.description = c->nl_text;
    r.sampled = active.contains(c->id);
    if (r.sampled) {
      r.verdict = ltl::check(ev, c->formula);
      if (!r.verdict->holds) {
        if (r.hardness == Hardness::Hard)
          report.plan_valid = false;
        else
          report.soft_violations.push_back(r.id);
      }
    }
    report.results.push_back(std::move(r));
  }
  report.sampling = std::move(active);
  return report;
}

enum class Audience { User, Llm };

/// Template text only; identical reports give identical text.
inline std::string render_feedback(const VerificationReport& report, Audience audience) {
  std::ostringstream out;
  if (audience == Audience::User) {
    if (report.plan_valid) {
      out << "Plan is valid.\n";
    } else {
      out << "Plan is invalid.\n";
      for (const auto& r : report.results)
        if (r.violated() && r.hardness == Hardness::Hard)
          out << "Rule " << r.id << " is violated at step " << *r.verdict->violation_index
              << ": " << r.description << "\n";
    }
    for (const auto& r : report.results)
      if (r.violated() && r.hardness == Hardness::Soft)
        out << "Notice: soft rule " << r.id << " is violated at step "
            << *r.verdict->violation_index << " (strictness " << r.weight * 100
            << "%): " << r.description << "\n";
    std::size_t skipped = 0;
    for (const auto& r : report.results) skipped += !r.sampled;
    if (skipped) {
      out << "Not checked this run:";
      for (const auto& r : report.results)
        if (!r.sampled) out << " " << r.id;
      out << "\n";
    }
    return out.str();
  }

  out << "VERIFICATION RESULT: " << (report.plan_valid ? "VALID" : "INVALID") << "\n";
  out << "Trace length: " << report.trace_len << " states (step 0 is the initial state)\n";
  bool any = false;
  for (const auto& r : report.results) {
    if (!r.violated()) continue;
    if (!any) out << "Violated constraints:\n";
    any = true;
    out << "- " << r.id << " [" << to_string(r.hardness) << "]: " << r.formula
        << " violated at step " << *r.verdict->violation_index << "\n";
  }
  if (!any) out << "Violated constraints: none\n";
  if (!report.plan_valid)
    out << "Regenerate the plan so that every constraint listed above holds. "
           "Emit the whole corrected plan inside a ```plan block, one step per line, "
           "in the same format as before.\n";
  return out.str();
}

}  // namespace planverify
