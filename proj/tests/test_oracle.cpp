#include <gtest/gtest.h>

#include <functional>
#include <map>

#include "c2wfomc/mln.hpp"
#include "c2wfomc/oracle.hpp"
#include "c2wfomc/parser.hpp"
#include "support/corpus.hpp"

using namespace c2wfomc;

namespace {

ProblemFile heads_tails() {
  return parse_problem(
      "predicate heads/1 tails/1\n"
      "weight heads 2 1\n"
      "sentence forall x. (heads(x) | tails(x)) & (~heads(x) | ~tails(x))\n");
}

// Second evaluator: plain recursion, counting quantifiers expanded as a disjunction over
// witness subsets of exactly the required size.
bool naive(const World& w, const Formula& f, std::map<std::string, std::uint64_t>& env) {
  const std::uint64_t n = w.grounding->domain_size();
  auto value = [&](const Term& t) { return t.is_variable() ? env.at(t.name) : w.grounding->constant_element(t.name); };
  switch (f.kind()) {
    case Formula::Kind::Top: return true;
    case Formula::Kind::Bottom: return false;
    case Formula::Kind::Atom: {
      const auto& a = f.as<node::Atom>();
      std::vector<std::uint64_t> args;
      for (const auto& t : a.args) args.push_back(value(t));
      return w.get(a.predicate, args);
    }
    case Formula::Kind::Equality: {
      const auto& e = f.as<node::Equality>();
      return value(e.lhs) == value(e.rhs);
    }
    case Formula::Kind::Not: return !naive(w, f.as<node::Not>().body, env);
    case Formula::Kind::Binary: {
      const auto& b = f.as<node::Binary>();
      bool l = naive(w, b.lhs, env), r = naive(w, b.rhs, env);
      switch (b.op) {
        case Connective::And: return l && r;
        case Connective::Or: return l || r;
        case Connective::Implies: return !l || r;
        case Connective::Iff: return l == r;
      }
      return false;
    }
    case Formula::Kind::Quantified: {
      const auto& q = f.as<node::Quantified>();
      auto saved = env.count(q.var) ? std::optional(env[q.var]) : std::nullopt;
      bool universal = q.quantifier == Quantifier::Forall;
      bool result = universal;
      for (std::uint64_t e = 0; e < n; ++e) {
        env[q.var] = e;
        bool v = naive(w, q.body, env);
        if (universal && !v) result = false;
        if (!universal && v) result = true;
      }
      if (saved) env[q.var] = *saved; else env.erase(q.var);
      return result;
    }
    case Formula::Kind::Counting: {
      const auto& c = f.as<node::Counting>();
      auto saved = env.count(c.var) ? std::optional(env[c.var]) : std::nullopt;
      std::vector<bool> holds(n);
      for (std::uint64_t e = 0; e < n; ++e) {
        env[c.var] = e;
        holds[e] = naive(w, c.body, env);
      }
      if (saved) env[c.var] = *saved; else env.erase(c.var);
      // exists[=j]: some subset S of size j with holds exactly on S
      auto exactly = [&](std::uint64_t j) {
        for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << n); ++mask) {
          if (static_cast<std::uint64_t>(__builtin_popcountll(mask)) != j) continue;
          bool match = true;
          for (std::uint64_t e = 0; e < n; ++e) match = match && (holds[e] == (((mask >> e) & 1) != 0));
          if (match) return true;
        }
        return false;
      };
      bool any = false;
      for (std::uint64_t j = 0; j <= n; ++j) {
        bool ok = c.cmp == Comparator::Eq ? j == c.k : c.cmp == Comparator::Le ? j <= c.k : j >= c.k;
        if (ok && exactly(j)) any = true;
      }
      return any;
    }
    case Formula::Kind::Cardinality: {
      const auto& ca = f.as<node::Cardinality>();
      return holds(static_cast<std::int64_t>(cardinality(ca.predicate, w)), ca.cmp, ca.bound.resolve(n));
    }
  }
  return false;
}

}  // namespace

TEST(Cardinality, CountsTrueAtomsOfOnePredicate) {
  Vocabulary v;
  v.add_predicate({"fr", 2});
  v.add_predicate({"sm", 1});
  auto g = std::make_shared<const Grounding>(v, 5);
  World w(g);
  EXPECT_EQ(cardinality("fr", w), 0u);
  w.set("sm", {0});
  EXPECT_EQ(cardinality("fr", w), 0u);
  w.set("fr", {0, 1});
  w.set("fr", {0, 4});
  EXPECT_EQ(cardinality("fr", w), 2u);
  EXPECT_EQ(cardinality("sm", w), 1u);
}

TEST(Satisfies, ExistsAndForallOverNamedDomain) {
  Vocabulary v;
  v.add_predicate({"sm", 1});
  v.add_constant("alice");
  v.add_constant("bob");
  auto g = std::make_shared<const Grounding>(v, 2);
  World w(g);
  w.set("sm", {g->constant_element("bob")});
  EXPECT_TRUE(satisfies(w, parse_formula("exists x. sm(x)", v)));
  EXPECT_FALSE(satisfies(w, parse_formula("forall x. sm(x)", v)));
  EXPECT_TRUE(satisfies(w, parse_formula("sm(bob) & ~sm(alice)", v)));
  EXPECT_THROW(satisfies(w, atom("sm", {"x"})), std::invalid_argument);
}

TEST(Satisfies, ExactlyZeroIsForallNot) {
  Vocabulary v;
  v.add_predicate({"u", 1});
  auto g = std::make_shared<const Grounding>(v, 2);
  Formula a = parse_formula("exists[=0] y. u(y)", v), b = parse_formula("forall y. ~u(y)", v);
  Formula eq = parse_formula("exists[=1] y. u(y)", v);
  Formula both = parse_formula("(exists[<=1] y. u(y)) & (exists[>=1] y. u(y))", v);
  for (int mask = 0; mask < 4; ++mask) {
    World w(g);
    w.truth = {static_cast<bool>(mask & 2), static_cast<bool>(mask & 1)};
    EXPECT_EQ(satisfies(w, a), satisfies(w, b));
    EXPECT_EQ(satisfies(w, eq), satisfies(w, both));
  }
}

TEST(Satisfies, AgreesWithNaiveEvaluatorOnCorpus) {
  testsupport::CorpusGenerator gen(7);
  std::mt19937_64 rng(99);
  for (int i = 0; i < 150; ++i) {
    auto item = gen.next();
    for (std::uint64_t n = 1; n <= 3; ++n) {
      auto g = std::make_shared<const Grounding>(item.vocabulary, n);
      for (int trial = 0; trial < 12; ++trial) {
        World w(g);
        for (std::size_t a = 0; a < w.truth.size(); ++a) w.truth[a] = rng() & 1;
        std::map<std::string, std::uint64_t> env;
        ASSERT_EQ(satisfies(w, item.sentence), naive(w, item.sentence, env)) << item.text << " n=" << n;
      }
    }
  }
}

TEST(WorldWeight, ProductOverAtoms) {
  ProblemFile pf = heads_tails();
  auto g = std::make_shared<const Grounding>(pf.vocabulary, 2);
  World w(g);
  w.set("heads", {0});
  w.set("heads", {1});
  EXPECT_EQ(world_weight(w, pf.weights), 4);
  EXPECT_EQ(world_weight(w, WeightMap{}), 1);
  WeightMap signed_w;
  signed_w.set("tails", 1, -1);
  EXPECT_EQ(world_weight(w, signed_w), 1);  // both tails atoms false: (-1)^2
  w.set("tails", {0});
  EXPECT_EQ(world_weight(w, signed_w), -1);
}

TEST(BruteWfomc, Examples) {
  ProblemFile pf = heads_tails();
  EXPECT_EQ(brute_wfomc(pf.theory(), pf.vocabulary, pf.weights, 2), 9);
  EXPECT_EQ(brute_wfomc(bottom(), pf.vocabulary, pf.weights, 2), 0);
  Vocabulary one;
  one.add_predicate({"u", 1});
  EXPECT_EQ(brute_wfomc(top(), one, WeightMap{}, 3), 8);
  EXPECT_EQ(brute_wfomc(parse_formula("exists x. u(x)", one), one, WeightMap{}, 3), 7);
  EXPECT_EQ(brute_wfomc(top(), one, WeightMap{}, 0), 1);
}

TEST(BruteWfomc, SkolemizedExistsCancels) {
  // forall x exists y r(x,y) vs its Skolem form with z weighted (1,-1)
  ProblemFile pf = parse_problem(
      "predicate r/2 z/1\n"
      "weight z 1 -1\n"
      "sentence forall x. forall y. (z(x) | ~r(x,y))\n");
  EXPECT_EQ(brute_wfomc(pf.theory(), pf.vocabulary, pf.weights, 2), 9);
  Vocabulary v;
  v.add_predicate({"r", 2});
  EXPECT_EQ(brute_wfomc(parse_formula("forall x. exists y. r(x,y)", v), v, WeightMap{}, 2), 9);
}

TEST(BruteWfomc, RefusesAboveCap) {
  Vocabulary v;
  v.add_predicate({"a", 2});
  v.add_predicate({"b", 2});
  v.add_predicate({"c", 2});
  EXPECT_THROW(brute_wfomc(top(), v, WeightMap{}, 5), OracleLimitError);
  EXPECT_NO_THROW(brute_wfomc(top(), v, WeightMap{}, 2));
}

TEST(BruteWmcTable, HeadsTailsBothPredicates) {
  ProblemFile pf = parse_problem(
      "predicate heads/1 tails/1\n"
      "sentence forall x. (heads(x) | tails(x)) & (~heads(x) | ~tails(x))\n");
  WmcTable t = brute_wmc_table({"heads", "tails"}, pf.theory(), pf.vocabulary, pf.weights, 4);
  EXPECT_EQ(t.at({0, 0}), 0);
  EXPECT_EQ(t.at({1, 3}), 4);
  EXPECT_EQ(t.at({2, 2}), 6);
  EXPECT_EQ(t.total(), 16);
  // heads alone: the (heads)-only reading keeps 4 at heads = 1
  WmcTable h = brute_wmc_table({"heads"}, pf.theory(), pf.vocabulary, pf.weights, 4);
  EXPECT_EQ(h.at({1}), 4);
  EXPECT_EQ(h.at({0}), 1);
}

TEST(BruteWmcTable, SumsToWfomcOnCorpus) {
  testsupport::CorpusGenerator gen(11);
  for (int i = 0; i < 40; ++i) {
    auto item = gen.next();
    for (std::uint64_t n = 1; n <= 2; ++n) {
      WmcTable t = brute_wmc_table({"p", "r"}, item.sentence, item.vocabulary, item.weights, n);
      EXPECT_EQ(t.total(), brute_wfomc(item.sentence, item.vocabulary, item.weights, n)) << item.text;
      EXPECT_EQ(t.bounds(), (std::vector<std::uint64_t>{n, n * n}));
    }
  }
}

TEST(BruteWfomc, ConjunctionShrinksUnitCount) {
  testsupport::CorpusGenerator gen(12);
  for (int i = 0; i < 30; ++i) {
    auto a = gen.next();
    auto b = gen.next();
    for (std::uint64_t n = 1; n <= 2; ++n)
      EXPECT_LE(brute_wfomc(conj(a.sentence, b.sentence), a.vocabulary, {}, n),
                brute_wfomc(a.sentence, a.vocabulary, {}, n));
  }
}

TEST(BruteMln, GroundingCountsAndEmptyDomain) {
  Vocabulary v;
  v.add_predicate({"sm", 1});
  std::vector<MlnFormula> mln{{atom("sm", {"x"}), Rational(2)}};
  EXPECT_EQ(brute_mln_partition(mln, v, 1), 3);
  EXPECT_EQ(brute_mln_partition(mln, v, 2), 9);
  EXPECT_EQ(brute_mln_partition(mln, v, 0), 1);
  std::vector<MlnFormula> hard{{negate(atom("sm", {"x"})), std::nullopt}};
  EXPECT_EQ(brute_mln_partition(hard, v, 2), 1);
}
