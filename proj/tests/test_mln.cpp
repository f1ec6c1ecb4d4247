#include <gtest/gtest.h>

#include "c2wfomc/mln.hpp"
#include "c2wfomc/oracle.hpp"
#include "c2wfomc/parser.hpp"

using namespace c2wfomc;

namespace {

MlnProblem single_soft(Rational m) {
  MlnProblem p;
  p.vocabulary.add_predicate({"sm", 1});
  p.formulas.push_back({atom("sm", {"x"}), m});
  p.background = top();
  return p;
}

MlnProblem smokers() {
  return mln_problem(parse_problem(
      "predicate smokes/1 friends/2 cancer/1\n"
      "constant alice bob\n"
      "mln 3/2: smokes(x) & friends(x,y) => smokes(y)\n"
      "mln 2: smokes(x) => cancer(x)\n"
      "mln hard: friends(x,y) => friends(y,x)\n"));
}

Rational oracle_marginal(const MlnProblem& p, const Formula& q, std::uint64_t n) {
  return brute_mln_partition(p.formulas, p.vocabulary, n, q) / brute_mln_partition(p.formulas, p.vocabulary, n);
}

}  // namespace

TEST(MlnEncode, IndicatorPerSoftFormula) {
  MlnProblem p = smokers();
  EncodedMln e = encode_mln(p.formulas, p.vocabulary);
  ASSERT_EQ(e.indicators.size(), 2u);
  EXPECT_EQ(e.weights.get(e.indicators[0]).positive, Rational(3, 2));
  EXPECT_EQ(e.weights.get(e.indicators[0]).negative, 1);
  EXPECT_EQ(e.vocabulary.find(e.indicators[0])->arity, 2);
  EXPECT_EQ(e.vocabulary.find(e.indicators[1])->arity, 1);
  EXPECT_TRUE(is_sentence(e.sentence));
}

TEST(MlnEncode, RejectsNonPositiveMultiplier) {
  EXPECT_THROW(encode_mln(single_soft(0).formulas, single_soft(0).vocabulary), std::invalid_argument);
  EXPECT_THROW(encode_mln(single_soft(-2).formulas, single_soft(-2).vocabulary), std::invalid_argument);
}

TEST(PartitionFunction, Examples) {
  MlnProblem p = single_soft(2);
  EXPECT_EQ(partition_function(p, 1), 3);
  EXPECT_EQ(partition_function(p, 2), 9);
  MlnProblem hard;
  hard.vocabulary.add_predicate({"sm", 1});
  hard.formulas.push_back({negate(atom("sm", {"x"})), std::nullopt});
  hard.background = top();
  EXPECT_EQ(partition_function(hard, 2), 1);
}

TEST(PartitionFunction, MatchesOracleOnSmallDomains) {
  MlnProblem p = smokers();
  p.vocabulary = Vocabulary();
  p.vocabulary.add_predicate({"smokes", 1});
  p.vocabulary.add_predicate({"friends", 2});
  p.vocabulary.add_predicate({"cancer", 1});
  for (std::uint64_t n = 0; n <= 3; ++n) EXPECT_EQ(partition_function(p, n), brute_mln_partition(p.formulas, p.vocabulary, n)) << n;

  MlnProblem c;
  c.vocabulary.add_predicate({"a", 1});
  c.vocabulary.add_predicate({"e", 2});
  c.formulas.push_back({parse_formula("exists[=1] y. e(x,y)", c.vocabulary, true), Rational(3)});
  c.formulas.push_back({parse_formula("a(x) <=> e(x,x)", c.vocabulary, true), Rational(1, 2)});
  c.background = top();
  for (std::uint64_t n = 0; n <= 3; ++n) EXPECT_EQ(partition_function(c, n), brute_mln_partition(c.formulas, c.vocabulary, n)) << n;
}

TEST(Marginal, Examples) {
  MlnProblem p = single_soft(2);
  EXPECT_EQ(marginal(p, parse_formula("forall x. sm(x)", p.vocabulary), 1), Rational(2, 3));
  EXPECT_EQ(marginal(p, top(), 3), 1);
  EXPECT_EQ(marginal(p, bottom(), 3), 0);
}

TEST(Marginal, ComplementSumsToOneAndMatchesOracle) {
  MlnProblem p = smokers();
  for (const char* q : {"exists x. smokes(x)", "forall x. (smokes(x) => cancer(x))", "exists[=1] x. cancer(x)",
                        "smokes(alice)", "friends(alice,bob) & ~cancer(bob)"}) {
    Formula f = parse_formula(q, p.vocabulary);
    for (std::uint64_t n = 2; n <= 3; ++n) {
      Rational a = marginal(p, f, n), b = marginal(p, negate(f), n);
      EXPECT_EQ(a + b, 1) << q;
      EXPECT_GE(a, 0);
      EXPECT_LE(a, 1);
      EXPECT_EQ(a, oracle_marginal(p, f, n)) << q << " n=" << n;
    }
  }
}

TEST(Marginal, ScalingIndicatorWeightPairLeavesMarginalsUnchanged) {
  // Scaling both weights of every indicator by c multiplies each world by c^(#groundings).
  MlnProblem p = smokers();
  Vocabulary v;
  for (const auto& pred : p.vocabulary.predicates()) v.add_predicate(pred);
  EncodedMln e = encode_mln(p.formulas, v);
  const Rational c(5, 3);
  WeightMap scaled = e.weights;
  for (const auto& ind : e.indicators)
    scaled.set(ind, c * e.weights.get(ind).positive, c * e.weights.get(ind).negative);
  const std::uint64_t n = 2;
  auto z = [&](const Formula& f, const WeightMap& w) { return count(compile(f, e.vocabulary, w), n); };
  EXPECT_EQ(z(e.sentence, scaled), z(e.sentence, e.weights) * pow(c, n * n + n));
  for (const char* q : {"exists x. smokes(x)", "forall x. cancer(x)"}) {
    Formula f = parse_formula(q, v);
    Rational plain = z(conj(e.sentence, f), e.weights) / z(e.sentence, e.weights);
    EXPECT_EQ(plain, z(conj(e.sentence, f), scaled) / z(e.sentence, scaled)) << q;
    EXPECT_EQ(plain, marginal(p, f, n)) << q;
  }
}

TEST(Marginal, ScalingMultiplierAloneChangesMarginals) {
  // The multiplier alone does not have this invariance: sm(x) with multiplier m gives m/(1+m).
  MlnProblem a = single_soft(2), b = single_soft(6);
  Formula q = parse_formula("forall x. sm(x)", a.vocabulary);
  EXPECT_EQ(marginal(a, q, 1), Rational(2, 3));
  EXPECT_EQ(marginal(b, q, 1), Rational(6, 7));
}

TEST(Marginal, UndefinedWhenPartitionFunctionIsZero) {
  MlnProblem p = single_soft(2);
  p.formulas.push_back({parse_formula("sm(x) & ~sm(x)", p.vocabulary, true), std::nullopt});
  EXPECT_EQ(partition_function(p, 2), 0);
  EXPECT_THROW(marginal(p, top(), 2), UndefinedDistribution);
}

TEST(Marginal, TooManyConstantsForDomain) {
  MlnProblem p = smokers();
  EXPECT_THROW(marginal(p, parse_formula("smokes(alice) | smokes(bob)", p.vocabulary), 1), std::invalid_argument);
}

TEST(GroundQuery, MarkersAndMultiplier) {
  MlnProblem p = smokers();
  FreshNames names(p.vocabulary);
  GroundedQuery g = ground_query(parse_formula("smokes(alice) & friends(alice,bob)", p.vocabulary), p.vocabulary, names);
  EXPECT_TRUE(is_sentence(g.sentence));
  ValidationOptions vo;
  vo.allow_constants = false;
  vo.allow_reserved = true;
  EXPECT_TRUE(validate_c2(g.sentence, g.vocabulary, vo).ok()) << print_formula(g.sentence);
  Rational mult = 1;
  for (const auto& f : g.multiplier) mult *= f.evaluate(4);
  EXPECT_EQ(mult, Rational(1, 12));  // 1 / (4 * 3)
}

TEST(ExpApproximation, SignificantDigits) {
  EXPECT_EQ(exp_approximation(0, 10), 1);
  EXPECT_EQ(exp_approximation(1, 6), Rational(67957, 25000));
  Rational e = exp_approximation(Rational(-1, 2), 12);
  EXPECT_NEAR(e.get_d(), 0.6065306597126334, 1e-12);
}
