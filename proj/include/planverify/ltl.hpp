#pragma once

// Finite-trace LTL: formula AST, concrete syntax, evaluation and violation
// localisation.
//
// Concrete syntax, loosest binding first:
//
//   f <-> g          right-associative
//   f -> g           right-associative
//   f | g            left-associative
//   f U g, f W g     right-associative
//   f & g            left-associative
//   !f  X f  G f  F f
//   name  |  var OP int  |  ( f )          OP in < <= = >= >
//
// so `a U b & c` reads as `a U (b & c)` and `!b W a` as `(!b) W a`.
// The single capital letters X G F U W are reserved and cannot name atoms.

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdint>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "planverify/error.hpp"
#include "planverify/plan_model.hpp"

namespace planverify::ltl {

enum class Op {
  Atom,
  Cmp,
  Not,
  And,
  Or,
  Implies,
  Iff,
  Next,
  Globally,
  Finally,
  Until,
  WeakUntil,
};

enum class CmpOp { Lt, Le, Eq, Ge, Gt };

inline std::string_view to_string(CmpOp op) {
  switch (op) {
    case CmpOp::Lt: return "<";
    case CmpOp::Le: return "<=";
    case CmpOp::Eq: return "=";
    case CmpOp::Ge: return ">=";
    case CmpOp::Gt: return ">";
  }
  return "?";
}

inline bool is_unary(Op op) {
  return op == Op::Not || op == Op::Next || op == Op::Globally || op == Op::Finally;
}
inline bool is_binary(Op op) {
  return op == Op::And || op == Op::Or || op == Op::Implies || op == Op::Iff ||
         op == Op::Until || op == Op::WeakUntil;
}

struct Node;

/// Immutable formula handle. Copies share structure; equality is structural.
class Formula {
 public:
  static Formula atom(std::string name);
  static Formula cmp(std::string var, CmpOp op, std::int64_t constant);
  static Formula unary(Op op, Formula operand);
  static Formula binary(Op op, Formula lhs, Formula rhs);

  Op op() const;
  /// Atom name or compared variable.
  const std::string& name() const;
  CmpOp cmp_op() const;
  std::int64_t constant() const;
  /// Operand of a unary node, left operand of a binary one.
  const Formula& lhs() const;
  const Formula& rhs() const;

  const Node* node() const noexcept { return node_.get(); }

  friend bool operator==(const Formula& a, const Formula& b);

 private:
  explicit Formula(std::shared_ptr<const Node> n) : node_(std::move(n)) {}
  std::shared_ptr<const Node> node_;
};

struct Node {
  Op op;
  std::string name;
  CmpOp cmp = CmpOp::Eq;
  std::int64_t constant = 0;
  std::optional<Formula> lhs;
  std::optional<Formula> rhs;
};

inline Formula Formula::atom(std::string name) {
  return Formula(std::make_shared<const Node>(Node{Op::Atom, std::move(name), CmpOp::Eq, 0, std::nullopt, std::nullopt}));
}
inline Formula Formula::cmp(std::string var, CmpOp op, std::int64_t constant) {
  return Formula(std::make_shared<const Node>(Node{Op::Cmp, std::move(var), op, constant, std::nullopt, std::nullopt}));
}
inline Formula Formula::unary(Op op, Formula operand) {
  if (!is_unary(op)) throw Error(ErrorCode::InvalidArgument, "not a unary operator");
  return Formula(std::make_shared<const Node>(Node{op, {}, CmpOp::Eq, 0, std::move(operand), {}}));
}
inline Formula Formula::binary(Op op, Formula lhs, Formula rhs) {
  if (!is_binary(op)) throw Error(ErrorCode::InvalidArgument, "not a binary operator");
  return Formula(
      std::make_shared<const Node>(Node{op, {}, CmpOp::Eq, 0, std::move(lhs), std::move(rhs)}));
}

inline Op Formula::op() const { return node_->op; }
inline const std::string& Formula::name() const { return node_->name; }
inline CmpOp Formula::cmp_op() const { return node_->cmp; }
inline std::int64_t Formula::constant() const { return node_->constant; }
inline const Formula& Formula::lhs() const { return *node_->lhs; }
inline const Formula& Formula::rhs() const { return *node_->rhs; }

inline bool operator==(const Formula& a, const Formula& b) {
  if (a.node_ == b.node_) return true;
  if (a.op() != b.op()) return false;
  switch (a.op()) {
    case Op::Atom: return a.name() == b.name();
    case Op::Cmp:
      return a.name() == b.name() && a.cmp_op() == b.cmp_op() && a.constant() == b.constant();
    default: break;
  }
  if (!(a.lhs() == b.lhs())) return false;
  return is_unary(a.op()) || a.rhs() == b.rhs();
}

inline Formula atom(std::string name) { return Formula::atom(std::move(name)); }
inline Formula cmp(std::string var, CmpOp op, std::int64_t c) {
  return Formula::cmp(std::move(var), op, c);
}
inline Formula negation(Formula f) { return Formula::unary(Op::Not, std::move(f)); }
inline Formula next(Formula f) { return Formula::unary(Op::Next, std::move(f)); }
inline Formula globally(Formula f) { return Formula::unary(Op::Globally, std::move(f)); }
inline Formula finally(Formula f) { return Formula::unary(Op::Finally, std::move(f)); }
inline Formula conjunction(Formula a, Formula b) {
  return Formula::binary(Op::And, std::move(a), std::move(b));
}
inline Formula disjunction(Formula a, Formula b) {
  return Formula::binary(Op::Or, std::move(a), std::move(b));
}
inline Formula implies(Formula a, Formula b) {
  return Formula::binary(Op::Implies, std::move(a), std::move(b));
}
inline Formula iff(Formula a, Formula b) { return Formula::binary(Op::Iff, std::move(a), std::move(b)); }
inline Formula until(Formula a, Formula b) {
  return Formula::binary(Op::Until, std::move(a), std::move(b));
}
inline Formula weak_until(Formula a, Formula b) {
  return Formula::binary(Op::WeakUntil, std::move(a), std::move(b));
}

/// Atom and variable names occurring in `f`.
inline void collect_names(const Formula& f, std::set<std::string>& out) {
  if (f.op() == Op::Atom || f.op() == Op::Cmp) {
    out.insert(f.name());
    return;
  }
  collect_names(f.lhs(), out);
  if (is_binary(f.op())) collect_names(f.rhs(), out);
}

inline std::set<std::string> names(const Formula& f) {
  std::set<std::string> out;
  collect_names(f, out);
  return out;
}

/// Height of the tree; a leaf has depth 1.
inline std::size_t depth(const Formula& f) {
  if (f.op() == Op::Atom || f.op() == Op::Cmp) return 1;
  std::size_t d = depth(f.lhs());
  if (is_binary(f.op())) d = std::max(d, depth(f.rhs()));
  return d + 1;
}

inline bool is_reserved(std::string_view word) {
  return word == "X" || word == "G" || word == "F" || word == "U" || word == "W";
}

// ---------------------------------------------------------------------------
// Parsing

namespace detail {

enum class Tok {
  Ident,
  Int,
  LParen,
  RParen,
  Not,
  And,
  Or,
  Implies,
  Iff,
  Lt,
  Le,
  Eq,
  Ge,
  Gt,
  End,
};

struct Token {
  Tok kind;
  std::string text;
  std::size_t offset;
};

class Parser {
 public:
  explicit Parser(std::string_view src) : src_(src) { advance(); }

  Formula parse() {
    Formula f = parse_iff();
    if (tok_.kind != Tok::End) fail({"<->", "->", "|", "U", "W", "&", "end of input"});
    return f;
  }

 private:
  static bool is_word(const Token& t, std::string_view w) {
    return t.kind == Tok::Ident && t.text == w;
  }

  [[noreturn]] void fail(std::vector<std::string> expected) const {
    std::string found = tok_.kind == Tok::End ? "end of input" : "'" + tok_.text + "'";
    throw SyntaxError(tok_.offset, std::move(expected), found);
  }

  void advance() {
    while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_]))) ++pos_;
    std::size_t start = pos_;
    if (pos_ >= src_.size()) {
      tok_ = {Tok::End, "", start};
      return;
    }
    char c = src_[pos_];
    auto rest = src_.substr(pos_);
    auto emit = [&](Tok k, std::size_t len) {
      tok_ = {k, std::string(src_.substr(start, len)), start};
      pos_ += len;
    };
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::size_t len = 1;
      while (pos_ + len < src_.size() &&
             (std::isalnum(static_cast<unsigned char>(src_[pos_ + len])) || src_[pos_ + len] == '_'))
        ++len;
      return emit(Tok::Ident, len);
    }
    if (std::isdigit(static_cast<unsigned char>(c)) ||
        (c == '-' && rest.size() > 1 && std::isdigit(static_cast<unsigned char>(rest[1])))) {
      std::size_t len = 1;
      while (pos_ + len < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_ + len])))
        ++len;
      return emit(Tok::Int, len);
    }
    if (rest.starts_with("<->")) return emit(Tok::Iff, 3);
    if (rest.starts_with("->")) return emit(Tok::Implies, 2);
    if (rest.starts_with("<=")) return emit(Tok::Le, 2);
    if (rest.starts_with(">=")) return emit(Tok::Ge, 2);
    switch (c) {
      case '(': return emit(Tok::LParen, 1);
      case ')': return emit(Tok::RParen, 1);
      case '!': return emit(Tok::Not, 1);
      case '&': return emit(Tok::And, 1);
      case '|': return emit(Tok::Or, 1);
      case '<': return emit(Tok::Lt, 1);
      case '>': return emit(Tok::Gt, 1);
      case '=': return emit(Tok::Eq, 1);
      default: break;
    }
    tok_ = {Tok::End, std::string(1, c), start};
    throw SyntaxError(start, {"identifier", "operator", "(", ")"}, "'" + std::string(1, c) + "'");
  }

  Formula parse_iff() {
    Formula lhs = parse_implies();
    if (tok_.kind == Tok::Iff) {
      advance();
      return iff(std::move(lhs), parse_iff());
    }
    return lhs;
  }

  Formula parse_implies() {
    Formula lhs = parse_or();
    if (tok_.kind == Tok::Implies) {
      advance();
      return implies(std::move(lhs), parse_implies());
    }
    return lhs;
  }

  Formula parse_or() {
    Formula lhs = parse_temporal();
    while (tok_.kind == Tok::Or) {
      advance();
      lhs = disjunction(std::move(lhs), parse_temporal());
    }
    return lhs;
  }

  Formula parse_temporal() {
    Formula lhs = parse_and();
    if (is_word(tok_, "U") || is_word(tok_, "W")) {
      Op op = tok_.text == "U" ? Op::Until : Op::WeakUntil;
      advance();
      return Formula::binary(op, std::move(lhs), parse_temporal());
    }
    return lhs;
  }

  Formula parse_and() {
    Formula lhs = parse_unary();
    while (tok_.kind == Tok::And) {
      advance();
      lhs = conjunction(std::move(lhs), parse_unary());
    }
    return lhs;
  }

  Formula parse_unary() {
    if (tok_.kind == Tok::Not) {
      advance();
      return negation(parse_unary());
    }
    if (is_word(tok_, "X") || is_word(tok_, "G") || is_word(tok_, "F")) {
      Op op = tok_.text == "X" ? Op::Next : tok_.text == "G" ? Op::Globally : Op::Finally;
      advance();
      return Formula::unary(op, parse_unary());
    }
    return parse_primary();
  }

  Formula parse_primary() {
    if (tok_.kind == Tok::LParen) {
      advance();
      Formula inner = parse_iff();
      if (tok_.kind != Tok::RParen) fail({"<->", "->", "|", "U", "W", "&", ")"});
      advance();
      return inner;
    }
    if (tok_.kind != Tok::Ident || is_reserved(tok_.text))
      fail({"(", "!", "X", "G", "F", "identifier"});
    std::string name = tok_.text;
    advance();
    std::optional<CmpOp> op;
    switch (tok_.kind) {
      case Tok::Lt: op = CmpOp::Lt; break;
      case Tok::Le: op = CmpOp::Le; break;
      case Tok::Eq: op = CmpOp::Eq; break;
      case Tok::Ge: op = CmpOp::Ge; break;
      case Tok::Gt: op = CmpOp::Gt; break;
      default: return atom(std::move(name));
    }
    advance();
    if (tok_.kind != Tok::Int) fail({"integer"});
    std::int64_t value = 0;
    const char* first = tok_.text.data();
    const char* last = first + tok_.text.size();
    auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc{} || ptr != last)
      throw SyntaxError(tok_.offset, {"64-bit integer"}, "'" + tok_.text + "'");
    advance();
    return cmp(std::move(name), *op, value);
  }

  std::string_view src_;
  std::size_t pos_ = 0;
  Token tok_{Tok::End, "", 0};
};

enum Level : int {
  kIff = 1,
  kImplies = 2,
  kOr = 3,
  kTemporal = 4,
  kAnd = 5,
  kUnary = 6,
  kLeaf = 7,
};

inline void render(const Formula& f, int min_level, std::string& out) {
  int level = kLeaf;
  std::string_view symbol;
  int left_min = 0, right_min = 0;
  switch (f.op()) {
    case Op::Atom:
    case Op::Cmp: break;
    case Op::Not:
    case Op::Next:
    case Op::Globally:
    case Op::Finally: level = kUnary; break;
    case Op::Iff: level = kIff, symbol = " <-> ", left_min = kImplies, right_min = kIff; break;
    case Op::Implies: level = kImplies, symbol = " -> ", left_min = kOr, right_min = kImplies; break;
    case Op::Or: level = kOr, symbol = " | ", left_min = kOr, right_min = kTemporal; break;
    case Op::Until: level = kTemporal, symbol = " U ", left_min = kAnd, right_min = kTemporal; break;
    case Op::WeakUntil:
      level = kTemporal, symbol = " W ", left_min = kAnd, right_min = kTemporal;
      break;
    case Op::And: level = kAnd, symbol = " & ", left_min = kAnd, right_min = kUnary; break;
  }
  bool wrap = level < min_level;
  if (wrap) out += '(';
  switch (f.op()) {
    case Op::Atom: out += f.name(); break;
    case Op::Cmp:
      out += f.name();
      out += ' ';
      out += to_string(f.cmp_op());
      out += ' ';
      out += std::to_string(f.constant());
      break;
    case Op::Not:
      out += '!';
      render(f.lhs(), kUnary, out);
      break;
    case Op::Next:
    case Op::Globally:
    case Op::Finally:
      out += f.op() == Op::Next ? "X " : f.op() == Op::Globally ? "G " : "F ";
      render(f.lhs(), kUnary, out);
      break;
    default:
      render(f.lhs(), left_min, out);
      out += symbol;
      render(f.rhs(), right_min, out);
      break;
  }
  if (wrap) out += ')';
}

}  // namespace detail

/// Throws SyntaxError carrying the byte offset and the expected tokens.
inline Formula parse_formula(std::string_view text) { return detail::Parser(text).parse(); }

/// Canonical text with only the parentheses the grammar needs.
inline std::string render_formula(const Formula& f) {
  std::string out;
  detail::render(f, 0, out);
  return out;
}

// ---------------------------------------------------------------------------
// Evaluation

struct Verdict {
  bool holds = true;
  std::optional<std::size_t> violation_index;

  friend bool operator==(const Verdict&, const Verdict&) = default;
};

inline bool compare(std::int64_t lhs, CmpOp op, std::int64_t rhs) {
  switch (op) {
    case CmpOp::Lt: return lhs < rhs;
    case CmpOp::Le: return lhs <= rhs;
    case CmpOp::Eq: return lhs == rhs;
    case CmpOp::Ge: return lhs >= rhs;
    case CmpOp::Gt: return lhs > rhs;
  }
  return false;
}

/// Computes the truth value of every subformula at every position of one
/// trace with a single backward pass per temporal node. Results are cached
/// per node, so shared subtrees are evaluated once.
class TraceEvaluator {
 public:
  explicit TraceEvaluator(const Trace& trace) : trace_(trace) {}

  const std::vector<char>& values(const Formula& f) {
    if (auto it = cache_.find(f.node()); it != cache_.end()) return it->second;
    std::vector<char> v = compute(f);
    return cache_.emplace(f.node(), std::move(v)).first->second;
  }

  bool at(const Formula& f, std::size_t i) {
    if (i >= trace_.size())
      throw Error(ErrorCode::IndexOutOfRange,
                  "position " + std::to_string(i) + " outside trace of length " +
                      std::to_string(trace_.size()));
    return values(f)[i] != 0;
  }

  const Trace& trace() const noexcept { return trace_; }

 private:
  std::vector<char> compute(const Formula& f) {
    const std::size_t n = trace_.size();
    std::vector<char> v(n, 0);
    switch (f.op()) {
      case Op::Atom:
        for (std::size_t i = 0; i < n; ++i) v[i] = trace_[i].has(f.name());
        return v;
      case Op::Cmp:
        for (std::size_t i = 0; i < n; ++i) {
          auto value = trace_[i].var(f.name());
          v[i] = value && compare(*value, f.cmp_op(), f.constant());
        }
        return v;
      default: break;
    }
    const std::vector<char>& a = values(f.lhs());
    if (is_unary(f.op())) {
      switch (f.op()) {
        case Op::Not:
          for (std::size_t i = 0; i < n; ++i) v[i] = !a[i];
          break;
        case Op::Next:
          for (std::size_t i = 0; i + 1 < n; ++i) v[i] = a[i + 1];
          break;
        case Op::Globally:
          v[n - 1] = a[n - 1];
          for (std::size_t i = n - 1; i-- > 0;) v[i] = a[i] && v[i + 1];
          break;
        case Op::Finally:
          v[n - 1] = a[n - 1];
          for (std::size_t i = n - 1; i-- > 0;) v[i] = a[i] || v[i + 1];
          break;
        default: break;
      }
      return v;
    }
    const std::vector<char>& b = values(f.rhs());
    switch (f.op()) {
      case Op::And:
        for (std::size_t i = 0; i < n; ++i) v[i] = a[i] && b[i];
        break;
      case Op::Or:
        for (std::size_t i = 0; i < n; ++i) v[i] = a[i] || b[i];
        break;
      case Op::Implies:
        for (std::size_t i = 0; i < n; ++i) v[i] = !a[i] || b[i];
        break;
      case Op::Iff:
        for (std::size_t i = 0; i < n; ++i) v[i] = (a[i] != 0) == (b[i] != 0);
        break;
      case Op::Until:
        v[n - 1] = b[n - 1];
        for (std::size_t i = n - 1; i-- > 0;) v[i] = b[i] || (a[i] && v[i + 1]);
        break;
      case Op::WeakUntil:
        v[n - 1] = b[n - 1] || a[n - 1];
        for (std::size_t i = n - 1; i-- > 0;) v[i] = b[i] || (a[i] && v[i + 1]);
        break;
      default: break;
    }
    return v;
  }

  const Trace& trace_;
  // Node-based map: references to cached vectors survive rehashing.
  std::unordered_map<const Node*, std::vector<char>> cache_;
};

inline bool eval_at(const Formula& f, const Trace& trace, std::size_t i) {
  return TraceEvaluator(trace).at(f, i);
}

namespace detail {

// Earliest index that decisively witnesses `f` failing at `i`. Requires
// that `f` is false at `i`.
inline std::size_t locate(TraceEvaluator& ev, const Formula& f, std::size_t i) {
  const std::size_t last = ev.trace().size() - 1;
  switch (f.op()) {
    case Op::Atom:
    case Op::Cmp:
    case Op::Not:
    case Op::Next: return i;
    case Op::Globally: {
      const auto& inner = ev.values(f.lhs());
      std::size_t j = i;
      while (inner[j]) ++j;
      return j;
    }
    case Op::Finally:
    case Op::Until:
    case Op::WeakUntil: return last;
    case Op::And: {
      std::size_t best = last;
      if (!ev.values(f.lhs())[i]) best = std::min(best, locate(ev, f.lhs(), i));
      if (!ev.values(f.rhs())[i]) best = std::min(best, locate(ev, f.rhs(), i));
      return best;
    }
    case Op::Or:
      // Refuted only once both sides are.
      return std::max(locate(ev, f.lhs(), i), locate(ev, f.rhs(), i));
    case Op::Implies: return locate(ev, f.rhs(), i);
    case Op::Iff:
      return ev.values(f.lhs())[i] ? locate(ev, f.rhs(), i) : locate(ev, f.lhs(), i);
  }
  return i;
}

}  // namespace detail

/// Evaluates `f` at position 0. When it fails, localisation follows
/// bad-prefix reasoning: safety parts report the earliest failing state,
/// eventualities report the last state.
inline Verdict check(TraceEvaluator& ev, const Formula& f) {
  if (ev.at(f, 0)) return {true, std::nullopt};
  return {false, detail::locate(ev, f, 0)};
}

inline Verdict check(const Formula& f, const Trace& trace) {
  TraceEvaluator ev(trace);
  return check(ev, f);
}

}  // namespace planverify::ltl
