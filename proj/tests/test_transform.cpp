#include <gtest/gtest.h>

#include "c2wfomc/oracle.hpp"
#include "c2wfomc/parser.hpp"
#include "c2wfomc/transform.hpp"
#include "c2wfomc/wmc.hpp"
#include "support/corpus.hpp"

using namespace c2wfomc;

namespace {

Vocabulary pqr() { return testsupport::corpus_vocabulary(); }

Formula conjoin(const std::vector<Formula>& fs) {
  Formula out = top();
  for (const auto& f : fs) out = conj(out, f);
  return out;
}

Rational factors_at(const std::vector<MultiplierFactor>& fs, std::uint64_t n) {
  Rational v = 1;
  for (const auto& f : fs) v *= f.evaluate(n);
  return v;
}

// Oracle count of an encoding (sentences and cardinality atoms) in the state's vocabulary.
Rational encoded_count(const Encoding& enc, RewriteState& st, std::uint64_t n, std::size_t cap = kDefaultAtomCap) {
  std::vector<Formula> all = enc.sentences;
  all.insert(all.end(), enc.cardinality.begin(), enc.cardinality.end());
  return brute_wfomc(conjoin(all), st.vocabulary(), st.weights(), n, cap) * factors_at(enc.factors, n);
}

}  // namespace

TEST(EliminateBounded, SyntacticCases) {
  Vocabulary v = pqr();
  auto P = [&](const char* s) { return parse_formula(s, v, true); };
  EXPECT_EQ(eliminate_bounded_counting(P("exists[>=1] y. r(x,y)")), P("exists y. r(x,y)"));
  EXPECT_EQ(eliminate_bounded_counting(P("exists[=0] y. r(x,y)")), P("forall y. ~r(x,y)"));
  EXPECT_EQ(eliminate_bounded_counting(P("exists[>=0] y. r(x,y)")), top());
  EXPECT_EQ(eliminate_bounded_counting(P("exists[=3] y. r(x,y)"), 2), bottom());
  EXPECT_EQ(eliminate_bounded_counting(P("exists[<=2] y. r(x,y)"), 2), top());
  EXPECT_EQ(eliminate_bounded_counting(P("exists[=2] y. r(x,y)")), P("exists[=2] y. r(x,y)"));
}

TEST(EliminateBounded, OnlyExactCountingRemains) {
  testsupport::CorpusGenerator gen(21);
  for (int i = 0; i < 60; ++i) {
    auto item = gen.next();
    Formula g = eliminate_bounded_counting(item.sentence);
    std::function<void(const Formula&)> walk = [&](const Formula& f) {
      if (f.is<node::Counting>()) {
        EXPECT_EQ(f.as<node::Counting>().cmp, Comparator::Eq);
        EXPECT_GE(f.as<node::Counting>().k, 1u);
      }
      for (const auto& c : children(f)) walk(c);
    };
    walk(g);
    for (std::uint64_t n = 1; n <= 3; ++n)
      ASSERT_EQ(brute_wfomc(g, item.vocabulary, item.weights, n), brute_wfomc(item.sentence, item.vocabulary, item.weights, n))
          << item.text;
  }
}

TEST(Extract, OpenCountingGetsUnaryName) {
  Vocabulary v = pqr();
  Formula f = parse_formula("forall x. (p(x) | exists[=1] y. r(x,y))", v);
  RewriteState st(v, {});
  Extraction ex = extract_exact_counting(f, st);
  ASSERT_TRUE(ex.changed);
  EXPECT_EQ(ex.definitions.size(), 2u);  // B <=> r and A <=> exists[=1] B
  EXPECT_EQ(print_formula(ex.host), "forall x. p(x) | @A1(x)");

  RewriteState fast(v, {}, CompileOptions{true});
  Extraction ex2 = extract_exact_counting(f, fast);
  ASSERT_EQ(ex2.definitions.size(), 1u);
  EXPECT_EQ(print_formula(ex2.definitions[0]), "forall x. @A1(x) <=> (exists[=1] y. r(x,y))");
}

TEST(Extract, ClosedCountingBecomesCardinality) {
  Vocabulary v = pqr();
  RewriteState st(v, {});
  Extraction ex = extract_exact_counting(parse_formula("exists[=2] x. p(x)", v), st);
  ASSERT_TRUE(ex.changed);
  EXPECT_EQ(ex.host, cardinality("@xi1", Comparator::Eq, AffineBound{0, 2}));
  ASSERT_EQ(ex.definitions.size(), 1u);
  EXPECT_EQ(print_formula(ex.definitions[0]), "forall x. @xi1(x) <=> p(x)");
}

TEST(Extract, InnermostFirstAndNoOpWithoutCounting) {
  Vocabulary v = pqr();
  RewriteState st(v, {});
  Formula nested = parse_formula("exists[=1] x. exists[=1] y. r(x,y)", v);
  Extraction ex = extract_exact_counting(nested, st);
  ASSERT_TRUE(ex.changed);
  EXPECT_EQ(print_formula(ex.host), "exists[=1] x. @A1(x)");
  Extraction none = extract_exact_counting(parse_formula("forall x. p(x)", v), st);
  EXPECT_FALSE(none.changed);
}

TEST(Extract, DefinitionsPreserveCount) {
  Vocabulary v = pqr();
  for (const char* s : {"forall x. (p(x) | exists[=1] y. (r(x,y) & q(y)))", "exists[=1] x. (p(x) & ~q(x))",
                        "forall x. (q(x) <=> exists[=2] y. r(y,x))"}) {
    Formula f = parse_formula(s, v);
    RewriteState st(v, {});
    Extraction ex = extract_exact_counting(f, st);
    std::vector<Formula> all = ex.definitions;
    all.push_back(ex.host);
    for (std::uint64_t n = 1; n <= 2; ++n)
      EXPECT_EQ(brute_wfomc(conjoin(all), st.vocabulary(), st.weights(), n), brute_wfomc(f, v, {}, n)) << s;
  }
}

TEST(SplitIff, ShapeAndCount) {
  Vocabulary v = pqr();
  RewriteState st(v, {}, CompileOptions{true});
  Extraction ex = extract_exact_counting(parse_formula("forall x. exists[=1] y. r(x,y)", v), st);
  ASSERT_EQ(ex.definitions.size(), 1u);
  Vocabulary before = st.vocabulary();
  auto [forward, backward] = split_iff_counting(ex.definitions[0], st);
  // the fresh N is fixed by the forward half
  for (std::uint64_t n = 1; n <= 3; ++n)
    EXPECT_EQ(brute_wfomc(conj(forward, backward), st.vocabulary(), st.weights(), n),
              brute_wfomc(ex.definitions[0], before, st.weights(), n));
  EXPECT_THROW(split_iff_counting(parse_formula("forall x. p(x)", v), st), std::logic_error);
}

TEST(RemoveNegation, PreservesWeightedCount) {
  Vocabulary v = pqr();
  struct Case {
    const char* host;
    const char* negated;
  };
  const Case cases[] = {
      {"forall x. (p(x) | ~(exists y. r(x,y)))", "~(exists y. r(x,y))"},
      {"forall x. (p(x) | ~(exists y. r(x,y)))", "~(exists y. r(x,y))"},
      {"forall x. forall y. (~(r(x,y) & q(y)) | p(x))", "~(r(x,y) & q(y))"},
      {"~(exists x. p(x)) | exists x. q(x)", "~(exists x. p(x))"},
  };
  for (const auto& c : cases) {
    Formula host = parse_formula(c.host, v);
    Formula neg = parse_formula(c.negated, v, true);
    WeightMap w;
    w.set("p", 2, Rational(1, 3));
    RewriteState st(v, w);
    Formula out = remove_negation(host, neg, st);
    for (std::uint64_t n = 1; n <= 2; ++n)
      EXPECT_EQ(brute_wfomc(out, st.vocabulary(), st.weights(), n), brute_wfomc(host, v, w, n)) << c.host;
  }
}

TEST(RemoveNegation, TautologyUnderNegation) {
  Vocabulary v;
  v.add_predicate({"u", 1});
  Formula host = parse_formula("forall x. ~(u(x) | ~u(x))", v);
  Formula neg = parse_formula("~(u(x) | ~u(x))", v, true);
  RewriteState st(v, {});
  Formula out = remove_negation(host, neg, st);
  for (std::uint64_t n = 0; n <= 3; ++n)
    EXPECT_EQ(brute_wfomc(out, st.vocabulary(), st.weights(), n), brute_wfomc(host, v, {}, n));
}

TEST(RemoveNegation, RejectsMissingOrPositive) {
  Vocabulary v = pqr();
  RewriteState st(v, {});
  Formula host = parse_formula("forall x. p(x)", v);
  EXPECT_THROW(remove_negation(host, parse_formula("~q(x)", v, true), st), std::invalid_argument);
  EXPECT_THROW(remove_negation(host, parse_formula("p(x)", v, true), st), std::invalid_argument);
}

TEST(ForallExact, FunctionalityHasNoExtraPredicates) {
  Vocabulary v;
  v.add_predicate({"R", 2});
  RewriteState st(v, {});
  Encoding enc = encode_forall_exact("R", 1, st);
  EXPECT_TRUE(enc.introduced.empty());
  EXPECT_TRUE(enc.factors.empty());
  ASSERT_EQ(enc.cardinality.size(), 1u);
  EXPECT_EQ(enc.cardinality[0], cardinality("R", Comparator::Eq, AffineBound{1, 0}));
  for (std::uint64_t n = 1; n <= 4; ++n) {
    Integer nn = pow(Integer(n), n);
    EXPECT_EQ(encoded_count(enc, st, n), Rational(nn));
  }
}

TEST(ForallExact, TwoSuccessors) {
  Vocabulary v;
  v.add_predicate({"R", 2});
  RewriteState st(v, {});
  Encoding enc = encode_forall_exact("R", 2, st);
  EXPECT_EQ(enc.introduced.size(), 2u);
  EXPECT_EQ(enc.sentences.size(), 4u);  // two existentials, one exclusion, one definition
  ASSERT_EQ(enc.factors.size(), 1u);
  EXPECT_EQ(enc.factors[0].kind, MultiplierFactor::Kind::FactorialPowNegDomain);
  Formula original = parse_formula("forall x. exists[=2] y. R(x,y)", v);
  for (std::uint64_t n = 1; n <= 2; ++n) EXPECT_EQ(encoded_count(enc, st, n), brute_wfomc(original, v, {}, n)) << n;
  EXPECT_EQ(st.implied_lower_bounds().at("R"), (AffineBound{2, 0}));
}

TEST(ExactForall, StructureAndCount) {
  Vocabulary v;
  v.add_predicate({"R", 2});
  for (std::uint32_t k : {0u, 1u, 2u}) {
    RewriteState st(v, {});
    Encoding enc = encode_exact_forall("R", k, st);
    ASSERT_EQ(enc.introduced.size(), 1u);
    EXPECT_EQ(enc.sentences.size(), 2u);
    EXPECT_TRUE(enc.factors.empty());
    Formula original = count_exists(Comparator::Eq, k, "x", forall("y", atom("R", {"x", "y"})));
    for (std::uint64_t n = 1; n <= 3; ++n)
      EXPECT_EQ(encoded_count(enc, st, n), brute_wfomc(original, v, {}, n)) << "k=" << k << " n=" << n;
  }
}

TEST(GuardedCounting, EmptyGuardIsFunctionality) {
  Vocabulary v;
  v.add_predicate({"R", 2});
  RewriteState st(v, {});
  Encoding enc = encode_guarded_counting(bottom(), "R", 1, st);
  EXPECT_EQ(encoded_count(enc, st, 3), 27);
  EXPECT_EQ(st.min_domain(), 1u);
}

TEST(GuardedCounting, MatchesOracleWithGuard) {
  Vocabulary v;
  v.add_predicate({"R", 2});
  v.add_predicate({"G", 1});
  WeightMap w;
  w.set("R", Rational(1, 2), 1);
  w.set("G", 3, -1);
  for (std::uint32_t k : {1u, 2u}) {
    RewriteState st(v, w);
    Formula guard = atom("G", {"x"});
    Encoding enc = encode_guarded_counting(guard, "R", k, st);
    EXPECT_EQ(st.min_domain(), k);
    Formula original = forall("x", disj(guard, count_exists(Comparator::Eq, k, "y", atom("R", {"x", "y"}))));
    for (std::uint64_t n = k; n <= 2; ++n)
      EXPECT_EQ(encoded_count(enc, st, n), brute_wfomc(original, v, w, n)) << "k=" << k << " n=" << n;
  }
}

TEST(Skolemize, ForallExistsCancels) {
  Vocabulary v;
  v.add_predicate({"r", 2});
  Formula f = parse_formula("forall x. exists y. r(x,y)", v);
  RewriteState st(v, {});
  auto pieces = skolemize(f, st);
  for (Formula p : pieces) {
    while (p.is<node::Quantified>() && p.as<node::Quantified>().quantifier == Quantifier::Forall)
      p = Formula(p.as<node::Quantified>().body);
    EXPECT_FALSE(contains_quantifier(p)) << print_formula(p);
  }
  EXPECT_EQ(brute_wfomc(conjoin(pieces), st.vocabulary(), st.weights(), 2), 9);
}

TEST(Skolemize, ClosedExistential) {
  Vocabulary v;
  v.add_predicate({"u", 1});
  RewriteState st(v, {});
  auto pieces = skolemize(parse_formula("exists x. u(x)", v), st);
  EXPECT_EQ(brute_wfomc(conjoin(pieces), st.vocabulary(), st.weights(), 3), 7);
}

TEST(Skolemize, SeparateSignedPredicatePerExistential) {
  Vocabulary v;
  v.add_predicate({"r", 2});
  RewriteState st(v, {});
  Formula f = parse_formula("forall x. ((exists y. r(x,y)) & (exists y. r(y,x)))", v);
  auto pieces = skolemize(f, st);
  int signed_preds = 0;
  for (const auto& p : st.vocabulary().predicates())
    if (st.weights().get(p.name).negative == -1 && st.weights().get(p.name).positive == 1) ++signed_preds;
  EXPECT_GE(signed_preds, 2);
  for (std::uint64_t n = 1; n <= 2; ++n)
    EXPECT_EQ(brute_wfomc(conjoin(pieces), st.vocabulary(), st.weights(), n), brute_wfomc(f, v, {}, n));
}

TEST(UniversalCnf, ClauseCount) {
  Vocabulary v = pqr();
  RewriteState st(v, {});
  auto clauses = to_universal_cnf(parse_formula("forall x. forall y. (p(x) <=> (q(y) | r(x,y)))", v), st);
  EXPECT_EQ(clauses.size(), 3u);
  for (const auto& c : clauses) EXPECT_TRUE(c.universal);
}

TEST(UniversalCnf, CnfInputKeepsItsClauses) {
  Vocabulary v = pqr();
  RewriteState st(v, {});
  auto clauses = to_universal_cnf(parse_formula("forall x. forall y. ((p(x) | r(x,y)) & (~q(y) | p(y)))", v), st);
  ASSERT_EQ(clauses.size(), 2u);
  EXPECT_EQ(clauses[0].literals.size(), 2u);
  EXPECT_EQ(clauses[1].literals.size(), 2u);
  EXPECT_THROW(to_universal_cnf(parse_formula("forall x. exists y. r(x,y)", v), st), std::logic_error);
}

TEST(UniversalCnf, DeepBiconditionalsGetNamed) {
  Vocabulary v = pqr();
  RewriteState st(v, {});
  // parity of nine distinct atoms: 256 clauses without naming
  std::string s = "p(x)";
  for (const char* a : {"q(x)", "p(y)", "q(y)", "r(x,y)", "r(y,x)", "x = y", "r(x,x)", "r(y,y)"})
    s = "(" + s + " <=> " + a + ")";
  Formula f = parse_formula("forall x. forall y. " + s, v);
  auto clauses = to_universal_cnf(f, st);
  EXPECT_LT(clauses.size(), 256u);
  EXPECT_GT(st.vocabulary().predicates().size(), v.predicates().size());
  Cnf c;
  c.vocabulary = st.vocabulary();
  c.clauses = clauses;
  for (std::uint64_t n = 1; n <= 2; ++n)
    EXPECT_EQ(brute_wfomc(cnf_to_formula(c), st.vocabulary(), st.weights(), n), brute_wfomc(f, v, {}, n));
}

TEST(Compile, TwoRegularCountingSentence) {
  ProblemFile pf = parse_problem(
      "predicate e/2\n"
      "sentence forall x. ~e(x,x)\n"
      "sentence forall x. forall y. (e(x,y) => e(y,x))\n"
      "sentence forall x. exists[=2] y. e(x,y)\n");
  CompiledProblem cp = compile(pf);
  const Integer expected[] = {1, 3, 12, 70, 465};
  for (std::uint64_t n = 3; n <= 7; ++n) EXPECT_EQ(count(cp, n), Rational(expected[n - 3])) << n;
  EXPECT_EQ(count(cp, 1), 0);
  EXPECT_EQ(count(cp, 0), 1);
}

TEST(Compile, FunctionalityAndPureFo2) {
  ProblemFile fn = parse_problem("predicate f/2\nsentence forall x. exists[=1] y. f(x,y)\n");
  CompiledProblem cp = compile(fn);
  for (std::uint64_t n = 1; n <= 6; ++n) EXPECT_EQ(count(cp, n), Rational(pow(Integer(n), n)));

  ProblemFile fo2 = parse_problem(
      "predicate heads/1 tails/1\nweight heads 2 1\n"
      "sentence forall x. (heads(x) | tails(x)) & (~heads(x) | ~tails(x))\n");
  CompiledProblem c2 = compile(fo2);
  EXPECT_TRUE(c2.multiplier.empty());
  EXPECT_EQ(c2.card_condition, top());
  EXPECT_EQ(count(c2, 2), 9);
}

TEST(Compile, RejectsNonC2Input) {
  Vocabulary v;
  v.add_predicate({"t", 3});
  EXPECT_THROW(compile(top(), v, {}), std::invalid_argument);
  Vocabulary c;
  c.add_predicate({"p", 1});
  c.add_constant("a");
  EXPECT_THROW(compile(parse_formula("p(a)", c), c, {}), std::invalid_argument);
}

TEST(Compile, CorpusMatchesOracle) {
  testsupport::CorpusGenerator gen(31);
  TableOptions mv{Backend::Multivariate};
  for (int i = 0; i < 25; ++i) {
    auto item = gen.next();
    for (CompileOptions opts : {CompileOptions{}, CompileOptions{true, true}}) {
      CompiledProblem cp = compile(item.sentence, item.vocabulary, item.weights, opts);
      for (std::uint64_t n = 1; n <= 2; ++n)
        ASSERT_EQ(count(cp, n, mv), brute_wfomc(item.sentence, item.vocabulary, item.weights, n))
            << item.text << " n=" << n << " fast/faithful=" << opts.atomic_fast_path;
    }
  }
}

TEST(Compile, FunctionalityDivisibility) {
  // Raw counts of the encoding are whole multiples of (k!)^n and binom(n,k).
  Vocabulary v;
  v.add_predicate({"R", 2});
  v.add_predicate({"G", 1});
  for (const char* s : {"forall x. exists[=2] y. R(x,y)", "forall x. (G(x) | exists[=2] y. R(x,y))"}) {
    CompiledProblem cp = compile(parse_formula(s, v), v, {});
    for (std::uint64_t n = 2; n <= 4; ++n) {
      Rational mult = cp.multiplier_value(n);
      Rational raw = count(cp, n) / mult;
      ASSERT_EQ(raw.get_den(), 1) << s;
      for (const auto& f : cp.multiplier) {
        Rational inv = 1 / f.evaluate(n);
        ASSERT_EQ(inv.get_den(), 1);
        EXPECT_EQ(Integer(raw.get_num() % inv.get_num()), 0) << s << " n=" << n << " " << f.describe();
      }
    }
  }
}

TEST(Compile, DeterministicAndValidOutput) {
  testsupport::CorpusGenerator gen(41);
  for (int i = 0; i < 30; ++i) {
    auto item = gen.next();
    CompiledProblem a = compile(item.sentence, item.vocabulary, item.weights);
    CompiledProblem b = compile(item.sentence, item.vocabulary, item.weights);
    EXPECT_EQ(a, b);
    EXPECT_EQ(describe_trace(a), describe_trace(b));
    ValidationOptions vo;
    vo.allow_reserved = true;
    EXPECT_TRUE(validate_c2(cnf_to_formula(a.cnf), a.cnf.vocabulary, vo).ok()) << item.text;
  }
}

TEST(Compile, FaithfulNegationAgrees) {
  Vocabulary v = pqr();
  for (const char* s : {"forall x. (p(x) | ~(exists[=1] y. r(x,y)))", "forall x. (q(x) <=> exists[=1] y. r(x,y))",
                        "~(exists[=1] x. p(x)) | forall x. q(x)"}) {
    Formula f = parse_formula(s, v);
    CompiledProblem sign = compile(f, v, {});
    CompiledProblem faithful = compile(f, v, {}, CompileOptions{false, true});
    for (std::uint64_t n = 1; n <= 3; ++n) {
      Rational want = brute_wfomc(f, v, {}, n);
      EXPECT_EQ(count(sign, n), want) << s;
      EXPECT_EQ(count(faithful, n), want) << s;
    }
  }
}
