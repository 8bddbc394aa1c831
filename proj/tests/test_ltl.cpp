#include <gtest/gtest.h>

#include "planverify/ltl.hpp"
#include "planverify/scenario.hpp"
#include "planverify/translator.hpp"
#include "support/gen.hpp"
#include "support/naive_ltl.hpp"

using namespace planverify;
using namespace planverify::ltl;

namespace {

Trace trace(const char* text) { return parse_trace_text(text); }

Formula p = atom("p"), q = atom("q"), r = atom("r");

}  // namespace

TEST(Parse, Precedence) {
  EXPECT_EQ(parse_formula("G !(alone_together_P2_P3)"), globally(negation(atom("alone_together_P2_P3"))));
  EXPECT_EQ(parse_formula("!b W a"), weak_until(negation(atom("b")), atom("a")));
  EXPECT_EQ(parse_formula("a U b & c"), until(atom("a"), conjunction(atom("b"), atom("c"))));
  EXPECT_EQ(parse_formula("p | q U r"), disjunction(p, until(q, r)));
  EXPECT_EQ(parse_formula("p -> q -> r"), implies(p, implies(q, r)));
  EXPECT_EQ(parse_formula("p <-> q <-> r"), iff(p, iff(q, r)));
  EXPECT_EQ(parse_formula("p & q & r"), conjunction(conjunction(p, q), r));
  EXPECT_EQ(parse_formula("p | q | r"), disjunction(disjunction(p, q), r));
  EXPECT_EQ(parse_formula("p U q W r"), until(p, weak_until(q, r)));
  EXPECT_EQ(parse_formula("p -> q | r <-> p"), iff(implies(p, disjunction(q, r)), p));
  EXPECT_EQ(parse_formula("X X !G F p"), next(next(negation(globally(finally(p))))));
}

TEST(Parse, Comparisons) {
  EXPECT_EQ(parse_formula("timestamp >= 540"), cmp("timestamp", CmpOp::Ge, 540));
  EXPECT_EQ(parse_formula("x=-3"), cmp("x", CmpOp::Eq, -3));
  EXPECT_EQ(parse_formula("G (escorted_count <= 1)"), globally(cmp("escorted_count", CmpOp::Le, 1)));
  EXPECT_EQ(parse_formula("y < 0 & y > -9"), conjunction(cmp("y", CmpOp::Lt, 0), cmp("y", CmpOp::Gt, -9)));
  EXPECT_EQ(parse_formula("x = 9223372036854775807").constant(), INT64_MAX);
  EXPECT_THROW(parse_formula("x = 9223372036854775808"), SyntaxError);
}

TEST(Parse, Errors) {
  try {
    parse_formula("G (p -> F q");
    FAIL();
  } catch (const SyntaxError& e) {
    EXPECT_EQ(e.offset(), 11u);
    EXPECT_EQ(e.code(), ErrorCode::SyntaxError);
    EXPECT_NE(std::find(e.expected().begin(), e.expected().end(), ")"), e.expected().end());
  }
  for (const char* bad : {"", "p &", "& p", "G", "p q", "(p", "p)", "U", "x <", "x < y", "3", "p $ q", "p - q"})
    EXPECT_THROW(parse_formula(bad), SyntaxError) << bad;
}

TEST(Render, Examples) {
  EXPECT_EQ(render_formula(globally(p)), "G p");
  EXPECT_EQ(render_formula(implies(atom("a"), finally(atom("b")))), "a -> F b");
  EXPECT_EQ(render_formula(weak_until(negation(q), p)), "!q W p");
  EXPECT_EQ(render_formula(globally(implies(p, conjunction(cmp("t", CmpOp::Ge, 1), cmp("t", CmpOp::Le, 5))))),
            "G (p -> t >= 1 & t <= 5)");
  EXPECT_EQ(render_formula(conjunction(p, disjunction(q, r))), "p & (q | r)");
  EXPECT_EQ(render_formula(implies(implies(p, q), r)), "(p -> q) -> r");
  EXPECT_EQ(render_formula(until(until(p, q), r)), "(p U q) U r");
  EXPECT_EQ(render_formula(conjunction(p, conjunction(q, r))), "p & (q & r)");
  EXPECT_EQ(render_formula(negation(conjunction(p, q))), "!(p & q)");
}

TEST(Render, RandomRoundTrip) {
  gen::Random rnd(101);
  for (int k = 0; k < 2000; ++k) {
    auto f = rnd.formula(6);
    auto text = render_formula(f);
    EXPECT_EQ(parse_formula(text), f) << text;
    EXPECT_EQ(render_formula(parse_formula(text)), text);
  }
}

TEST(Formula, NamesAndDepth) {
  auto f = parse_formula("G (a -> F b) & x > 1");
  EXPECT_EQ(names(f), (std::set<std::string>{"a", "b", "x"}));
  EXPECT_EQ(depth(atom("a")), 1u);
  EXPECT_EQ(depth(f), 5u);
  EXPECT_FALSE(parse_formula("a & b") == parse_formula("b & a"));
}

TEST(Eval, Examples) {
  EXPECT_TRUE(eval_at(globally(p), trace("p\np\n"), 0));
  EXPECT_FALSE(eval_at(next(p), trace("p\n"), 0));
  EXPECT_TRUE(eval_at(until(p, q), trace("p\np\nq\n"), 0));
  EXPECT_FALSE(eval_at(until(p, q), trace("p\np\n-\n"), 0));
  EXPECT_TRUE(eval_at(weak_until(p, q), trace("p\np\np\n"), 0));
  EXPECT_FALSE(eval_at(weak_until(p, q), trace("p\n-\nq\n"), 0));
  EXPECT_TRUE(eval_at(finally(q), trace("-\n-\nq\n"), 1));
  EXPECT_FALSE(eval_at(finally(q), trace("q\n-\n-\n"), 1));
}

TEST(Eval, MissingVariableIsFalse) {
  auto t = trace("x=1\n-\n");
  EXPECT_TRUE(eval_at(cmp("x", CmpOp::Eq, 1), t, 0));
  EXPECT_FALSE(eval_at(cmp("x", CmpOp::Eq, 1), t, 1));
  EXPECT_FALSE(eval_at(cmp("x", CmpOp::Lt, 100), t, 1));
  EXPECT_TRUE(eval_at(negation(cmp("x", CmpOp::Lt, 100)), t, 1));
}

TEST(Eval, IndexOutOfRange) {
  auto t = trace("p\n");
  try {
    eval_at(p, t, 1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::IndexOutOfRange);
  }
}

TEST(Check, Localization) {
  auto t = trace("p\np\n-\np\n-\n");
  EXPECT_EQ(check(globally(p), t), (Verdict{false, 2}));
  EXPECT_EQ(check(finally(q), t), (Verdict{false, 4}));
  EXPECT_EQ(check(until(p, q), t), (Verdict{false, 4}));
  EXPECT_EQ(check(weak_until(p, q), t), (Verdict{false, 4}));
  EXPECT_EQ(check(q, t), (Verdict{false, 0}));
  EXPECT_EQ(check(next(q), t), (Verdict{false, 0}));
  EXPECT_EQ(check(conjunction(globally(p), finally(q)), t), (Verdict{false, 2}));
  EXPECT_EQ(check(conjunction(finally(q), globally(p)), t), (Verdict{false, 2}));
  EXPECT_EQ(check(disjunction(globally(p), q), t), (Verdict{false, 2}));
  EXPECT_EQ(check(implies(p, globally(p)), t), (Verdict{false, 2}));
  EXPECT_EQ(check(iff(p, globally(p)), t), (Verdict{false, 2}));
  EXPECT_EQ(check(iff(q, p), t), (Verdict{false, 0}));
  EXPECT_EQ(check(disjunction(p, negation(p)), t), (Verdict{true, std::nullopt}));
}

TEST(Check, EscortStepOne) {
  EscortDomain d;
  auto t = derive_trace(parse_plan("escort P2 L1 L2\n", d), d);
  EXPECT_EQ(check(parse_formula("G !(alone_together_P3_P4)"), t), (Verdict{false, 1}));
  auto f = parse_formula("F at_P3_L2");
  EXPECT_EQ(check(f, t), (Verdict{false, t.size() - 1}));
}

// Every G-failure index is the first failing position; other indices are
// in range; holds agrees with eval_at.
TEST(Check, VerdictInvariants) {
  gen::Random rnd(7);
  for (int k = 0; k < 3000; ++k) {
    auto f = rnd.formula(4);
    Trace t(rnd.trace(6));
    auto v = check(f, t);
    EXPECT_EQ(v.holds, eval_at(f, t, 0));
    EXPECT_EQ(v.holds, !v.violation_index.has_value());
    if (v.violation_index) {
      EXPECT_LT(*v.violation_index, t.size());
      if (f.op() == Op::Globally) {
        for (std::size_t j = 0; j < *v.violation_index; ++j)
          EXPECT_TRUE(oracle::naive_eval(f.lhs(), t.states(), j));
        EXPECT_FALSE(oracle::naive_eval(f.lhs(), t.states(), *v.violation_index));
      }
    }
  }
}

TEST(Eval, AgreesWithNaiveOnRandomInputs) {
  gen::Random rnd(2024);
  for (int k = 0; k < 3000; ++k) {
    auto f = rnd.formula(5);
    Trace t(rnd.trace(7));
    TraceEvaluator ev(t);
    for (std::size_t i = 0; i < t.size(); ++i)
      ASSERT_EQ(ev.at(f, i), oracle::naive_eval(f, t.states(), i)) << render_formula(f) << " @" << i;
  }
}

TEST(Eval, SharedSubtreesAreSafe) {
  auto g = globally(p);
  auto f = conjunction(g, disjunction(g, until(g, g)));
  auto t = trace("p\np\n");
  TraceEvaluator ev(t);
  EXPECT_TRUE(ev.at(f, 0));
  EXPECT_TRUE(ev.at(f, 1));
}
