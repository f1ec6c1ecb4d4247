#include <gtest/gtest.h>

#include <random>

#include "c2wfomc/parser.hpp"

using namespace c2wfomc;

namespace {

const char* const kHeadsTails =
    "predicate heads/1 tails/1\n"
    "weight heads 2 1\n"
    "sentence forall x. (heads(x) | tails(x)) & (~heads(x) | ~tails(x))\n";

Vocabulary pqr() {
  Vocabulary v;
  v.add_predicate({"p", 1});
  v.add_predicate({"q", 1});
  v.add_predicate({"r", 2});
  v.add_predicate({"s", 0});
  return v;
}

// Random well-formed formula over p/1, q/1, r/2, s/0 with variables x, y.
class FormulaGen {
 public:
  explicit FormulaGen(std::uint64_t seed) : rng_(seed) {}

  Formula gen(int depth) {
    int choice = pick(depth <= 0 ? 4 : 11);
    auto var = [&] { return Term::variable(pick(2) ? "x" : "y"); };
    switch (choice) {
      case 0: return atom("p", {var()});
      case 1: return atom("r", {var(), var()});
      case 2: return pick(2) ? atom("s", std::vector<Term>{}) : equality(var(), var());
      case 3: {
        static const Comparator kCmp[] = {Comparator::Eq, Comparator::Le, Comparator::Ge, Comparator::Lt,
                                          Comparator::Gt};
        return cardinality(pick(2) ? "q" : "r", kCmp[pick(5)], AffineBound{pick(3) - 1, pick(5) - 2});
      }
      case 4: return negate(gen(depth - 1));
      case 5: return conj(gen(depth - 1), gen(depth - 1));
      case 6: return disj(gen(depth - 1), gen(depth - 1));
      case 7: return implies(gen(depth - 1), gen(depth - 1));
      case 8: return iff(gen(depth - 1), gen(depth - 1));
      case 9: return pick(2) ? forall(pick(2) ? "x" : "y", gen(depth - 1)) : exists(pick(2) ? "x" : "y", gen(depth - 1));
      default: {
        static const Comparator kCmp[] = {Comparator::Eq, Comparator::Le, Comparator::Ge};
        return count_exists(kCmp[pick(3)], static_cast<std::uint32_t>(pick(4)), pick(2) ? "x" : "y", gen(depth - 1));
      }
    }
  }

 private:
  int pick(int n) { return std::uniform_int_distribution<int>(0, n - 1)(rng_); }
  std::mt19937_64 rng_;
};

}  // namespace

TEST(ParseProblem, HeadsTailsSentence) {
  ProblemFile pf = parse_problem(kHeadsTails);
  ASSERT_EQ(pf.sentences.size(), 1u);
  Formula expected =
      forall("x", conj(disj(atom("heads", {"x"}), atom("tails", {"x"})),
                       disj(negate(atom("heads", {"x"})), negate(atom("tails", {"x"})))));
  EXPECT_EQ(pf.sentences[0], expected);
  EXPECT_EQ(pf.weights.get("heads").positive, 2);
  EXPECT_EQ(pf.weights.get("tails").positive, 1);
}

TEST(ParseProblem, CountingQuantifierUnderForall) {
  ProblemFile pf = parse_problem("predicate e/2\nsentence forall x. exists[=2] y. e(x,y)\n");
  Formula expected = forall("x", count_exists(Comparator::Eq, 2, "y", atom("e", {"x", "y"})));
  EXPECT_EQ(pf.sentences.at(0), expected);
}

TEST(ParseProblem, AffineCardinality) {
  ProblemFile pf = parse_problem("predicate xi/2\ncardinality |xi| = 2*n\n");
  ASSERT_EQ(pf.cardinality.size(), 1u);
  EXPECT_EQ(pf.cardinality[0], cardinality("xi", Comparator::Eq, AffineBound{2, 0}));
  pf = parse_problem("predicate xi/2\ncardinality |xi| >= n - 1 | |xi| < 3\n");
  EXPECT_EQ(pf.cardinality[0], disj(cardinality("xi", Comparator::Ge, AffineBound{1, -1}),
                                    cardinality("xi", Comparator::Lt, AffineBound{0, 3})));
}

TEST(ParseProblem, SectionsAndComments) {
  ProblemFile pf = parse_problem(
      "# a comment\r\n"
      "domain 4\r\n"
      "predicate sm/1 fr/2   # trailing comment\r\n"
      "constant alice\r\n"
      "weight fr 0.25 -1\r\n"
      "psi fr sm\r\n"
      "mln 3/2: sm(x) & fr(x,y) => sm(y)\r\n"
      "mln hard: fr(x,y) => fr(y,x)\r\n"
      "multiplier factorial(2)^-n\r\n"
      "multiplier binomial(n,3)^-1\r\n"
      "multiplier 1/7\r\n");
  EXPECT_EQ(pf.domain_size, 4u);
  EXPECT_EQ(pf.weights.get("fr").positive, Rational(1, 4));
  EXPECT_EQ(pf.weights.get("fr").negative, -1);
  EXPECT_EQ(pf.psi, (std::vector<std::string>{"fr", "sm"}));
  ASSERT_EQ(pf.mln.size(), 2u);
  EXPECT_EQ(*pf.mln[0].multiplier, Rational(3, 2));
  EXPECT_FALSE(pf.mln[1].multiplier.has_value());
  EXPECT_EQ(free_variables(pf.mln[0].formula), (std::set<std::string>{"x", "y"}));
  ASSERT_EQ(pf.multiplier.size(), 3u);
  EXPECT_EQ(pf.multiplier[0].evaluate(3), Rational(1, 8));
  EXPECT_EQ(pf.multiplier[1].evaluate(5), Rational(1, 10));
  EXPECT_EQ(pf.multiplier[2].evaluate(9), Rational(1, 7));
  EXPECT_TRUE(pf.vocabulary.has_constant("alice"));
}

TEST(ParseProblem, ErrorsCarryLineAndColumn) {
  try {
    parse_problem("predicate p/1\nsentence forall x. q(x)\n");
    FAIL() << "undeclared predicate accepted";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 2);
    EXPECT_EQ(e.column(), 20);
    EXPECT_NE(std::string(e.what()).find("undeclared"), std::string::npos);
  }
  EXPECT_THROW(parse_problem("predicate p/1\nsentence forall x. p(x,x)\n"), ParseError);       // arity
  EXPECT_THROW(parse_problem("predicate @p/1\n"), ParseError);                                  // reserved
  EXPECT_THROW(parse_problem("predicate p/1\nsentence forall x. p(x) $\n"), ParseError);       // lexical
  EXPECT_THROW(parse_problem("predicate p/1\nsentence forall x. (p(x)\n"), ParseError);        // syntax
  EXPECT_THROW(parse_problem("predicate p/1\nweight q 1 2\n"), ParseError);                    // weight target
  EXPECT_THROW(parse_problem("predicate p/1\nsentence p(x)\n"), ParseError);                   // free variable
  EXPECT_THROW(parse_problem("predicate p/1\nsentence forall z. p(z)\n"), ParseError);         // third variable
  EXPECT_THROW(parse_problem("predicate r/3\n"), ParseError);                                   // arity > 2
  EXPECT_THROW(parse_problem("predicate p/1\nweight p 1/0 1\n"), ParseError);                  // zero denominator
  EXPECT_THROW(parse_problem("predicate p/1\nfrobnicate\n"), ParseError);                      // keyword
}

TEST(PrintFormula, Examples) {
  EXPECT_EQ(print_formula(forall("x", negate(atom("e", {"x", "x"})))), "forall x. ~e(x,x)");
  EXPECT_EQ(print_formula(cardinality("R", Comparator::Ge, AffineBound{0, 3})), "|R| >= 3");
  Vocabulary v = pqr();
  Formula nested = iff(atom("p", {"x"}), exists("y", iff(atom("r", {"x", "y"}), atom("q", {"y"}))));
  std::string text = print_formula(forall("x", nested));
  EXPECT_EQ(parse_formula(text, v), forall("x", nested));
  EXPECT_EQ(print_formula(iff(exists("y", atom("r", {"x", "y"})), atom("p", {"x"}))),
            "(exists y. r(x,y)) <=> p(x)");
}

TEST(Precedence, NotAndOrImpliesIff) {
  Vocabulary v = pqr();
  auto P = atom("p", {"x"}), Q = atom("q", {"x"}), S = atom("s", std::vector<Term>{});
  EXPECT_EQ(parse_formula("~p(x) & q(x) | s", v, true), disj(conj(negate(P), Q), S));
  EXPECT_EQ(parse_formula("p(x) | q(x) => s <=> p(x)", v, true), iff(implies(disj(P, Q), S), P));
  EXPECT_EQ(parse_formula("p(x) => q(x) => s", v, true), implies(P, implies(Q, S)));
  EXPECT_EQ(parse_formula("p(x) & forall y. r(x,y) | q(y)", v, true),
            conj(P, forall("y", disj(atom("r", {"x", "y"}), atom("q", {"y"})))));
}

TEST(RoundTrip, ThousandRandomFormulas) {
  Vocabulary v = pqr();
  FormulaGen gen(20240611);
  for (int i = 0; i < 1000; ++i) {
    Formula f = gen.gen(5);
    std::string text = print_formula(f);
    Formula back = parse_formula(text, v, /*allow_free=*/true);
    ASSERT_EQ(back, f) << text;
    // precedence-free rendering must denote the same tree
    ASSERT_EQ(parse_formula(print_formula_fully_parenthesized(f), v, true), f) << text;
  }
}

TEST(RoundTrip, WholeProblem) {
  const char* text =
      "domain 3\n"
      "predicate e/2 xi/2 p/1\n"
      "constant a\n"
      "weight p 3/2 -1\n"
      "sentence forall x. ~e(x,x)\n"
      "sentence forall x. exists[<=2] y. e(x,y)\n"
      "cardinality |xi| = 2*n\n"
      "psi xi\n"
      "mln 2: p(x) => e(x,x)\n"
      "mln hard: ~p(x)\n"
      "multiplier factorial(2)^-n\n";
  ProblemFile a = parse_problem(text);
  ProblemFile b = parse_problem(print_problem(a));
  EXPECT_EQ(print_problem(a), print_problem(b));
  EXPECT_EQ(a.sentences, b.sentences);
  EXPECT_EQ(a.cardinality, b.cardinality);
  EXPECT_EQ(a.weights, b.weights);
  EXPECT_EQ(a.multiplier, b.multiplier);
  EXPECT_EQ(a.vocabulary, b.vocabulary);
}
