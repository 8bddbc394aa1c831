#pragma once

// States, traces, actions and the two-location escort domain that turns an
// action sequence into a proposition-labelled trace.

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "planverify/error.hpp"

namespace planverify {

/// True for `[A-Za-z_][A-Za-z0-9_]*`.
inline bool is_identifier(std::string_view s) {
  if (s.empty()) return false;
  auto head = static_cast<unsigned char>(s.front());
  if (!(std::isalpha(head) || head == '_')) return false;
  return std::all_of(s.begin() + 1, s.end(), [](char c) {
    auto u = static_cast<unsigned char>(c);
    return std::isalnum(u) || u == '_';
  });
}

struct State {
  std::size_t index = 0;
  std::set<std::string> props;
  std::map<std::string, std::int64_t> vars;

  bool has(const std::string& prop) const { return props.count(prop) != 0; }

  std::optional<std::int64_t> var(const std::string& name) const {
    auto it = vars.find(name);
    if (it == vars.end()) return std::nullopt;
    return it->second;
  }

  friend bool operator==(const State&, const State&) = default;
};

/// Non-empty finite sequence of states. Indices are rewritten to match
/// positions on construction.
class Trace {
 public:
  explicit Trace(std::vector<State> states) : states_(std::move(states)) {
    if (states_.empty()) throw Error(ErrorCode::EmptyTrace, "trace must contain at least one state");
    for (std::size_t i = 0; i < states_.size(); ++i) {
      auto& s = states_[i];
      s.index = i;
      for (const auto& p : s.props) {
        if (!is_identifier(p))
          throw Error(ErrorCode::InvalidArgument, "invalid proposition name '" + p + "'");
        if (s.vars.count(p))
          throw Error(ErrorCode::InvalidArgument,
                      "'" + p + "' is both a proposition and a variable in state " +
                          std::to_string(i));
      }
      for (const auto& [name, value] : s.vars) {
        (void)value;
        if (!is_identifier(name))
          throw Error(ErrorCode::InvalidArgument, "invalid variable name '" + name + "'");
      }
    }
  }

  std::size_t size() const noexcept { return states_.size(); }
  const State& operator[](std::size_t i) const { return states_[i]; }
  const State& at(std::size_t i) const {
    if (i >= states_.size())
      throw Error(ErrorCode::IndexOutOfRange,
                  "index " + std::to_string(i) + " outside trace of length " +
                      std::to_string(states_.size()));
    return states_[i];
  }
  const std::vector<State>& states() const noexcept { return states_; }
  auto begin() const { return states_.begin(); }
  auto end() const { return states_.end(); }

  friend bool operator==(const Trace&, const Trace&) = default;

 private:
  std::vector<State> states_;
};

struct Action {
  enum class Kind { Escort, Move };

  Kind kind = Kind::Move;
  std::string person;
  std::string from;
  std::string to;

  static Action escort(std::string person, std::string from, std::string to) {
    return {Kind::Escort, std::move(person), std::move(from), std::move(to)};
  }
  static Action move(std::string person, std::string from, std::string to) {
    return {Kind::Move, std::move(person), std::move(from), std::move(to)};
  }

  /// Line form used by plan files and the planner output schema.
  std::string to_string() const {
    return std::string(kind == Kind::Escort ? "escort " : "move ") + person + " " + from + " " + to;
  }

  friend bool operator==(const Action&, const Action&) = default;
};

struct PlanSteps {
  std::vector<Action> actions;
  State initial;

  friend bool operator==(const PlanSteps&, const PlanSteps&) = default;
};

inline std::string at_prop(const std::string& person, const std::string& location) {
  return "at_" + person + "_" + location;
}

inline std::string alone_together_prop(const std::string& a, const std::string& b) {
  return "alone_together_" + a + "_" + b;
}

inline constexpr const char* kTimestampVar = "timestamp";
inline constexpr const char* kEscortedCountVar = "escorted_count";
inline constexpr const char* kUnescortedMoveProp = "unescorted_move";

/// The patient-navigation fixture: one escort, several family members and
/// two rooms. Persons other than the escort may walk on their own; such a
/// step is labelled `unescorted_move` so a rule can forbid it.
struct EscortDomain {
  std::string escort = "P1";
  std::vector<std::string> persons = {"P2", "P3", "P4"};
  std::vector<std::string> locations = {"L1", "L2"};
  std::string initial_location = "L1";
  std::int64_t step_minutes = 1;

  void validate() const {
    if (std::find(persons.begin(), persons.end(), escort) != persons.end())
      throw Error(ErrorCode::InvalidArgument, "escort must not be listed among persons");
    if (locations.size() != 2)
      throw Error(ErrorCode::InvalidArgument, "escort domain needs exactly two locations");
    if (!is_location(initial_location))
      throw Error(ErrorCode::InvalidArgument, "initial location is not a domain location");
    for (const auto& id : everyone())
      if (!is_identifier(id)) throw Error(ErrorCode::InvalidArgument, "bad identifier " + id);
  }

  bool is_person(const std::string& id) const {
    return id == escort || std::find(persons.begin(), persons.end(), id) != persons.end();
  }
  bool is_location(const std::string& id) const {
    return std::find(locations.begin(), locations.end(), id) != locations.end();
  }

  /// Escort first, then the family members in declaration order.
  std::vector<std::string> everyone() const {
    std::vector<std::string> all{escort};
    all.insert(all.end(), persons.begin(), persons.end());
    return all;
  }

  State initial_state() const {
    std::map<std::string, std::string> where;
    for (const auto& p : everyone()) where[p] = initial_location;
    return label(where, 0, 0, false);
  }

  /// Builds a state from a person→location map, recomputing every derived
  /// proposition from scratch.
  State label(const std::map<std::string, std::string>& where, std::int64_t timestamp,
              std::int64_t escorted_count, bool unescorted_move) const {
    State s;
    for (const auto& p : everyone()) s.props.insert(at_prop(p, where.at(p)));
    const auto& escort_at = where.at(escort);
    for (std::size_t i = 0; i < persons.size(); ++i) {
      for (std::size_t j = i + 1; j < persons.size(); ++j) {
        const auto& li = where.at(persons[i]);
        if (li == where.at(persons[j]) && li != escort_at)
          s.props.insert(alone_together_prop(persons[i], persons[j]));
      }
    }
    if (unescorted_move) s.props.insert(kUnescortedMoveProp);
    s.vars[kTimestampVar] = timestamp;
    s.vars[kEscortedCountVar] = escorted_count;
    return s;
  }

  /// Reads the location of every person back out of a labelled state.
  std::map<std::string, std::string> locations_of(const State& s) const {
    std::map<std::string, std::string> where;
    for (const auto& p : everyone()) {
      std::optional<std::string> found;
      for (const auto& l : locations) {
        if (s.has(at_prop(p, l))) {
          if (found)
            throw Error(ErrorCode::InvalidArgument, p + " is at more than one location");
          found = l;
        }
      }
      if (!found) throw Error(ErrorCode::InvalidArgument, p + " has no location in state");
      where[p] = *found;
    }
    return where;
  }

  /// Every proposition and variable name a state of this domain can carry.
  std::set<std::string> vocabulary() const {
    std::set<std::string> names{kTimestampVar, kEscortedCountVar, kUnescortedMoveProp};
    for (const auto& p : everyone())
      for (const auto& l : locations) names.insert(at_prop(p, l));
    for (std::size_t i = 0; i < persons.size(); ++i)
      for (std::size_t j = i + 1; j < persons.size(); ++j)
        names.insert(alone_together_prop(persons[i], persons[j]));
    return names;
  }

  friend bool operator==(const EscortDomain&, const EscortDomain&) = default;
};

inline State apply_action(const State& state, const Action& action, const EscortDomain& domain) {
  if (!domain.is_person(action.person))
    throw Error(ErrorCode::UnknownEntity, "unknown person '" + action.person + "'");
  for (const auto* loc : {&action.from, &action.to})
    if (!domain.is_location(*loc))
      throw Error(ErrorCode::UnknownEntity, "unknown location '" + *loc + "'");
  if (action.from == action.to)
    throw InapplicableAction(action.to_string() + ": source and destination are the same");

  auto where = domain.locations_of(state);
  if (where.at(action.person) != action.from)
    throw InapplicableAction(action.to_string() + ": " + action.person + " is not at " +
                             action.from);

  bool unescorted = false;
  std::int64_t escorted = 0;
  if (action.kind == Action::Kind::Escort) {
    if (action.person == domain.escort)
      throw InapplicableAction(action.to_string() + ": the escort cannot escort themselves");
    if (where.at(domain.escort) != action.from)
      throw InapplicableAction(action.to_string() + ": escort " + domain.escort +
                               " is not at " + action.from);
    where[domain.escort] = action.to;
    escorted = 1;
  } else {
    unescorted = action.person != domain.escort;
  }
  where[action.person] = action.to;

  auto now = state.var(kTimestampVar).value_or(0) + domain.step_minutes;
  State next = domain.label(where, now, escorted, unescorted);
  next.index = state.index + 1;
  return next;
}

inline Trace derive_trace(const PlanSteps& plan, const EscortDomain& domain) {
  std::vector<State> states{plan.initial};
  states.reserve(plan.actions.size() + 1);
  for (std::size_t i = 0; i < plan.actions.size(); ++i) {
    try {
      states.push_back(apply_action(states.back(), plan.actions[i], domain));
    } catch (const InapplicableAction& e) {
      throw InapplicableAction(e.what(), i);
    }
  }
  return Trace(std::move(states));
}

// Trace text format: one state per line, whitespace-separated tokens.
// `name=int` sets a variable, a bare identifier is a proposition and a lone
// `-` is a state with nothing in it. `#` starts a comment.

inline Trace parse_trace_text(std::string_view text) {
  std::vector<State> states;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream tokens(line);
    std::string tok;
    State s;
    bool any = false;
    while (tokens >> tok) {
      any = true;
      if (tok == "-") continue;
      auto where = "line " + std::to_string(lineno) + ": ";
      if (auto eq = tok.find('='); eq != std::string::npos) {
        auto name = tok.substr(0, eq);
        auto digits = std::string_view(tok).substr(eq + 1);
        std::int64_t value = 0;
        auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), value);
        if (!is_identifier(name) || ec != std::errc{} || ptr != digits.data() + digits.size())
          throw Error(ErrorCode::InvalidArgument, where + "bad variable assignment '" + tok + "'");
        s.vars[name] = value;
      } else {
        if (!is_identifier(tok))
          throw Error(ErrorCode::InvalidArgument, where + "bad proposition '" + tok + "'");
        s.props.insert(tok);
      }
    }
    if (any) states.push_back(std::move(s));
  }
  return Trace(std::move(states));
}

inline std::string render_trace_text(const Trace& trace) {
  std::string out;
  for (const auto& s : trace) {
    std::string line;
    for (const auto& p : s.props) line += (line.empty() ? "" : " ") + p;
    for (const auto& [k, v] : s.vars)
      line += (line.empty() ? "" : " ") + k + "=" + std::to_string(v);
    out += (line.empty() ? "-" : line) + "\n";
  }
  return out;
}

}  // namespace planverify
