#pragma once

// Temporal-constraint template: seven rule categories, their compilation to
// LTL and a fixed English phrasing for each.

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <type_traits>
#include <utility>
#include <variant>
#include <vector>

#include "planverify/error.hpp"
#include "planverify/flexibility.hpp"
#include "planverify/ltl.hpp"
#include "planverify/plan_model.hpp"

namespace planverify {

enum class ConstraintCategory {
  FixedTimeBlock,
  SequentialOrder,
  ConcurrentEvents,
  Conditional,
  Exclusive,
  Global,
  EventualGoal,
};

inline constexpr ConstraintCategory kAllCategories[] = {
    ConstraintCategory::FixedTimeBlock, ConstraintCategory::SequentialOrder,
    ConstraintCategory::ConcurrentEvents, ConstraintCategory::Conditional,
    ConstraintCategory::Exclusive,       ConstraintCategory::Global,
    ConstraintCategory::EventualGoal,
};

inline std::string_view to_string(ConstraintCategory c) {
  switch (c) {
    case ConstraintCategory::FixedTimeBlock: return "fixed_time_block";
    case ConstraintCategory::SequentialOrder: return "sequential_order";
    case ConstraintCategory::ConcurrentEvents: return "concurrent_events";
    case ConstraintCategory::Conditional: return "conditional";
    case ConstraintCategory::Exclusive: return "exclusive";
    case ConstraintCategory::Global: return "global";
    case ConstraintCategory::EventualGoal: return "eventual_goal";
  }
  return "unknown";
}

/// Accepts `fixed_time_block`, `FixedTimeBlock`, `fixed time block` and the
/// like: case, spaces, dashes and underscores are ignored.
inline std::optional<ConstraintCategory> parse_category(std::string_view text) {
  auto squash = [](std::string_view s) {
    std::string out;
    for (char c : s)
      if (std::isalnum(static_cast<unsigned char>(c)))
        out += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
  };
  const auto wanted = squash(text);
  for (auto c : kAllCategories)
    if (squash(to_string(c)) == wanted) return c;
  return std::nullopt;
}

struct FixedTimeBlockParams {
  std::string event;
  std::int64_t start = 0;
  std::int64_t end = 0;
  friend bool operator==(const FixedTimeBlockParams&, const FixedTimeBlockParams&) = default;
};
struct SequentialOrderParams {
  std::string first;
  std::string second;
  friend bool operator==(const SequentialOrderParams&, const SequentialOrderParams&) = default;
};
struct ConcurrentEventsParams {
  std::string a;
  std::string b;
  friend bool operator==(const ConcurrentEventsParams&, const ConcurrentEventsParams&) = default;
};
struct ConditionalParams {
  std::string trigger;
  std::string response;
  friend bool operator==(const ConditionalParams&, const ConditionalParams&) = default;
};
struct ExclusiveParams {
  std::string a;
  std::string b;
  friend bool operator==(const ExclusiveParams&, const ExclusiveParams&) = default;
};
struct GlobalParams {
  ltl::Formula condition;
  friend bool operator==(const GlobalParams&, const GlobalParams&) = default;
};
struct EventualGoalParams {
  ltl::Formula goal;
  friend bool operator==(const EventualGoalParams&, const EventualGoalParams&) = default;
};

// Alternatives are in ConstraintCategory order.
using TemplateParams =
    std::variant<FixedTimeBlockParams, SequentialOrderParams, ConcurrentEventsParams,
                 ConditionalParams, ExclusiveParams, GlobalParams, EventualGoalParams>;

inline ConstraintCategory category_of(const TemplateParams& p) {
  return static_cast<ConstraintCategory>(p.index());
}

namespace detail {

inline void require_prop(const std::string& key, const std::string& value) {
  if (!is_identifier(value) || ltl::is_reserved(value))
    throw Error(ErrorCode::ParamMismatch, "parameter '" + key + "' is not a proposition: '" + value + "'");
}

inline std::string quoted(const std::string& s) { return "‘" + s + "’"; }

}  // namespace detail

/// Compiles a category and its parameters into a formula.
inline ltl::Formula instantiate(ConstraintCategory category, const TemplateParams& params) {
  using namespace ltl;
  if (category_of(params) != category)
    throw Error(ErrorCode::ParamMismatch, "parameters do not belong to category " +
                                              std::string(to_string(category)));
  return std::visit(
      [](const auto& p) -> Formula {
        using P = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<P, FixedTimeBlockParams>) {
          planverify::detail::require_prop("event", p.event);
          if (p.start > p.end)
            throw Error(ErrorCode::ParamMismatch, "time block starts after it ends");
          return globally(implies(atom(p.event), conjunction(cmp(kTimestampVar, CmpOp::Ge, p.start),
                                                             cmp(kTimestampVar, CmpOp::Le, p.end))));
        } else if constexpr (std::is_same_v<P, SequentialOrderParams>) {
          planverify::detail::require_prop("first", p.first);
          planverify::detail::require_prop("second", p.second);
          return weak_until(negation(atom(p.second)), atom(p.first));
        } else if constexpr (std::is_same_v<P, ConcurrentEventsParams>) {
          planverify::detail::require_prop("a", p.a);
          planverify::detail::require_prop("b", p.b);
          return globally(iff(atom(p.a), atom(p.b)));
        } else if constexpr (std::is_same_v<P, ConditionalParams>) {
          planverify::detail::require_prop("trigger", p.trigger);
          planverify::detail::require_prop("response", p.response);
          return globally(implies(atom(p.trigger), finally(atom(p.response))));
        } else if constexpr (std::is_same_v<P, ExclusiveParams>) {
          planverify::detail::require_prop("a", p.a);
          planverify::detail::require_prop("b", p.b);
          return globally(negation(conjunction(atom(p.a), atom(p.b))));
        } else if constexpr (std::is_same_v<P, GlobalParams>) {
          return globally(p.condition);
        } else {
          return finally(p.goal);
        }
      },
      params);
}

inline ltl::Formula instantiate(const TemplateParams& params) {
  return instantiate(category_of(params), params);
}

/// Deterministic English rendering from a fixed phrase table.
inline std::string describe(const TemplateParams& params) {
  using detail::quoted;
  return std::visit(
      [](const auto& p) -> std::string {
        using P = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<P, FixedTimeBlockParams>) {
          return quoted(p.event) + " may only occur between minute " + std::to_string(p.start) +
                 " and minute " + std::to_string(p.end) + ".";
        } else if constexpr (std::is_same_v<P, SequentialOrderParams>) {
          return quoted(p.second) + " must not occur before " + quoted(p.first) + " has occurred.";
        } else if constexpr (std::is_same_v<P, ConcurrentEventsParams>) {
          return quoted(p.a) + " and " + quoted(p.b) + " must always occur together.";
        } else if constexpr (std::is_same_v<P, ConditionalParams>) {
          return "Whenever " + quoted(p.trigger) + " occurs, " + quoted(p.response) +
                 " must eventually follow.";
        } else if constexpr (std::is_same_v<P, ExclusiveParams>) {
          return quoted(p.a) + " and " + quoted(p.b) + " must never hold at the same time.";
        } else if constexpr (std::is_same_v<P, GlobalParams>) {
          return "At all times: " + ltl::render_formula(p.condition) + ".";
        } else {
          return "Eventually " + quoted(ltl::render_formula(p.goal)) + " must hold.";
        }
      },
      params);
}

/// Parameters as ordered key/value text, the form used by rules files and
/// the translator's structured LLM output.
inline std::vector<std::pair<std::string, std::string>> params_to_fields(const TemplateParams& params) {
  return std::visit(
      [](const auto& p) -> std::vector<std::pair<std::string, std::string>> {
        using P = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<P, FixedTimeBlockParams>)
          return {{"event", p.event}, {"start", std::to_string(p.start)}, {"end", std::to_string(p.end)}};
        else if constexpr (std::is_same_v<P, SequentialOrderParams>)
          return {{"first", p.first}, {"second", p.second}};
        else if constexpr (std::is_same_v<P, ConcurrentEventsParams> ||
                           std::is_same_v<P, ExclusiveParams>)
          return {{"a", p.a}, {"b", p.b}};
        else if constexpr (std::is_same_v<P, ConditionalParams>)
          return {{"trigger", p.trigger}, {"response", p.response}};
        else if constexpr (std::is_same_v<P, GlobalParams>)
          return {{"condition", ltl::render_formula(p.condition)}};
        else
          return {{"goal", ltl::render_formula(p.goal)}};
      },
      params);
}

inline std::vector<std::string> param_keys(ConstraintCategory c) {
  switch (c) {
    case ConstraintCategory::FixedTimeBlock: return {"event", "start", "end"};
    case ConstraintCategory::SequentialOrder: return {"first", "second"};
    case ConstraintCategory::ConcurrentEvents:
    case ConstraintCategory::Exclusive: return {"a", "b"};
    case ConstraintCategory::Conditional: return {"trigger", "response"};
    case ConstraintCategory::Global: return {"condition"};
    case ConstraintCategory::EventualGoal: return {"goal"};
  }
  return {};
}

/// Inverse of params_to_fields. Unknown or missing keys raise ParamMismatch;
/// formula-valued fields go through the parser.
inline TemplateParams params_from_fields(ConstraintCategory category,
                                         const std::map<std::string, std::string>& fields) {
  const auto keys = param_keys(category);
  for (const auto& [k, v] : fields) {
    (void)v;
    if (std::find(keys.begin(), keys.end(), k) == keys.end())
      throw Error(ErrorCode::ParamMismatch, "unexpected parameter '" + k + "' for category " +
                                                std::string(to_string(category)));
  }
  auto get = [&](const std::string& k) -> const std::string& {
    auto it = fields.find(k);
    if (it == fields.end())
      throw Error(ErrorCode::ParamMismatch, "missing parameter '" + k + "' for category " +
                                                std::string(to_string(category)));
    return it->second;
  };
  auto integer = [&](const std::string& k) {
    const auto& s = get(k);
    std::int64_t v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size())
      throw Error(ErrorCode::ParamMismatch, "parameter '" + k + "' is not an integer: '" + s + "'");
    return v;
  };
  auto formula = [&](const std::string& k) {
    try {
      return ltl::parse_formula(get(k));
    } catch (const SyntaxError& e) {
      throw Error(ErrorCode::ParamMismatch, "parameter '" + k + "': " + e.what());
    }
  };
  switch (category) {
    case ConstraintCategory::FixedTimeBlock:
      return FixedTimeBlockParams{get("event"), integer("start"), integer("end")};
    case ConstraintCategory::SequentialOrder: return SequentialOrderParams{get("first"), get("second")};
    case ConstraintCategory::ConcurrentEvents: return ConcurrentEventsParams{get("a"), get("b")};
    case ConstraintCategory::Conditional: return ConditionalParams{get("trigger"), get("response")};
    case ConstraintCategory::Exclusive: return ExclusiveParams{get("a"), get("b")};
    case ConstraintCategory::Global: return GlobalParams{formula("condition")};
    case ConstraintCategory::EventualGoal: return EventualGoalParams{formula("goal")};
  }
  throw Error(ErrorCode::ParamMismatch, "unknown category");
}

/// Every proposition or variable name the parameters mention.
inline std::set<std::string> param_names(const TemplateParams& params) {
  return std::visit(
      [](const auto& p) -> std::set<std::string> {
        using P = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<P, FixedTimeBlockParams>)
          return {p.event, kTimestampVar};
        else if constexpr (std::is_same_v<P, SequentialOrderParams>)
          return {p.first, p.second};
        else if constexpr (std::is_same_v<P, ConcurrentEventsParams> ||
                           std::is_same_v<P, ExclusiveParams>)
          return {p.a, p.b};
        else if constexpr (std::is_same_v<P, ConditionalParams>)
          return {p.trigger, p.response};
        else if constexpr (std::is_same_v<P, GlobalParams>)
          return ltl::names(p.condition);
        else
          return ltl::names(p.goal);
      },
      params);
}

struct ConstraintSpec {
  std::string id;
  ConstraintCategory category = ConstraintCategory::Global;
  TemplateParams params = GlobalParams{ltl::atom("unset")};
  ltl::Formula formula = ltl::atom("unset");
  std::string nl_text;
  StrictnessWeight strictness;
  bool confirmed = false;

  friend bool operator==(const ConstraintSpec&, const ConstraintSpec&) = default;
};

/// Builds a constraint whose formula and sentence are derived from the params.
inline ConstraintSpec make_spec(std::string id, TemplateParams params,
                                StrictnessWeight strictness = StrictnessWeight(1.0),
                                bool confirmed = false) {
  ConstraintSpec spec;
  spec.id = std::move(id);
  spec.category = category_of(params);
  spec.formula = instantiate(spec.category, params);
  spec.nl_text = describe(params);
  spec.params = std::move(params);
  spec.strictness = strictness;
  spec.confirmed = confirmed;
  return spec;
}

inline std::string describe(const ConstraintSpec& spec) { return describe(spec.params); }

}  // namespace planverify
