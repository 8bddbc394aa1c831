#pragma once

// The reference escort scenario: prompt, rules, two known plans and the
// mock scripts that drive the loop offline.

#include <string>
#include <vector>

#include "planverify/llm.hpp"
#include "planverify/templates.hpp"

namespace planverify::scenario {

inline const char* kPrompt =
    "I am P1 and I work as an escort at a clinic. A family of three, P2, P3 and P4,\n"
    "is sitting with me in the waiting room L1, and all of them have an appointment\n"
    "in the examination room L2. Every family member walks with P1. P1 accompanies\n"
    "one person per trip and can walk back on their own. P2 and P3 may not stay\n"
    "together without P1, and P3 and P4 may not stay together without P1 either.\n"
    "P2, P3 and P4 all finish in L2. Please plan the trips.\n";

/// A shortest plan satisfying every rule: P3 goes first and is brought
/// back once.
inline const char* kSolutionPlan =
    "escort P3 L1 L2\n"
    "move P1 L2 L1\n"
    "escort P2 L1 L2\n"
    "escort P3 L2 L1\n"
    "escort P4 L1 L2\n"
    "move P1 L2 L1\n"
    "escort P3 L1 L2\n";

/// Takes P2 first and leaves P3 with P4 in L1; violates only R4, at step 1.
inline const char* kP2FirstPlan =
    "escort P2 L1 L2\n"
    "move P1 L2 L1\n"
    "escort P4 L1 L2\n"
    "move P1 L2 L1\n"
    "escort P3 L1 L2\n";

inline std::vector<std::string> clauses() {
  return {
      "every family member walks with P1",
      "P1 accompanies one person per trip",
      "P2 and P3 may not stay together without P1",
      "P3 and P4 may not stay together without P1",
      "P2, P3 and P4 all finish in L2",
  };
}

/// R1..R5 as confirmed hard rules.
inline std::vector<ConstraintSpec> rules() {
  auto f = [](const char* text) { return ltl::parse_formula(text); };
  return {
      make_spec("R1", GlobalParams{f("!unescorted_move")}, StrictnessWeight(1.0), true),
      make_spec("R2", GlobalParams{f("escorted_count <= 1")}, StrictnessWeight(1.0), true),
      make_spec("R3", GlobalParams{f("!alone_together_P2_P3")}, StrictnessWeight(1.0), true),
      make_spec("R4", GlobalParams{f("!alone_together_P3_P4")}, StrictnessWeight(1.0), true),
      make_spec("R5", EventualGoalParams{f("at_P2_L2 & at_P3_L2 & at_P4_L2")}, StrictnessWeight(1.0), true),
  };
}

inline std::string fence(const std::string& tag, const std::string& body) {
  return "```" + tag + "\n" + body + "```\n";
}

enum class Script { Success, Failure };

/// Success: the first plan is P2-first and the first replan is the
/// solution. Failure: the planner never leaves the P2-first plan.
inline MockScript script(Script kind) {
  MockScript s;
  std::string listed;
  for (const auto& c : clauses()) listed += "- " + c + "\n";
  s.rules = {
      {"extractor", "examination room", {fence("rules", listed)}},
      {"mapper", "finish in L2", {fence("category", "eventual_goal\n")}},
      {"mapper", "without P1", {fence("category", "global\n")}},
      {"mapper", "walks with P1", {fence("category", "global\n")}},
      {"mapper", "per trip", {fence("category", "global\n")}},
      {"mapper", "dinner", {fence("category", "fixed_time_block\n")}},
      {"ltl-translator", "finish in L2", {fence("params", "goal: at_P2_L2 & at_P3_L2 & at_P4_L2\n")}},
      // Regeneration feedback is appended to the clause, so it has to win
      // over the clause's own pair.
      {"ltl-translator", "about P3 and P4", {fence("params", "condition: !alone_together_P3_P4\n")}},
      {"ltl-translator", "P2 and P3", {fence("params", "condition: !alone_together_P2_P3\n")}},
      {"ltl-translator", "P3 and P4", {fence("params", "condition: !alone_together_P3_P4\n")}},
      {"ltl-translator", "walks with P1", {fence("params", "condition: !unescorted_move\n")}},
      {"ltl-translator", "per trip", {fence("params", "condition: escorted_count <= 1\n")}},
      {"ltl-translator", "dinner", {fence("params", "event: dinner_ready\nstart: 0\nend: 3960\n")}},
  };
  s.plans.push_back(fence("plan", kP2FirstPlan));
  if (kind == Script::Success) s.plans.push_back(fence("plan", kSolutionPlan));
  return s;
}

}  // namespace planverify::scenario
