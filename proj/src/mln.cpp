#include "c2wfomc/mln.hpp"

#include <mpfr.h>

#include <functional>
#include <future>
#include <map>
#include <memory>

namespace c2wfomc {

namespace {

Formula universal_closure(const Formula& f) {
  auto fv = free_variables(f);
  Formula out = f;
  for (auto it = fv.rbegin(); it != fv.rend(); ++it) out = forall(*it, out);
  return out;
}

}  // namespace

EncodedMln encode_mln(const std::vector<MlnFormula>& mln, const Vocabulary& vocabulary, const WeightMap& weights) {
  EncodedMln out{top(), vocabulary, weights, {}};
  FreshNames names(vocabulary);
  std::vector<Formula> parts;
  ValidationOptions vo;
  vo.allow_constants = false;
  vo.require_sentence = false;
  for (std::size_t j = 0; j < mln.size(); ++j) {
    const auto& m = mln[j];
    auto report = validate_c2(m.formula, vocabulary, vo);
    if (!report.ok())
      throw std::invalid_argument("mln formula " + std::to_string(j + 1) + ": " + report.describe());
    if (!m.multiplier) {
      parts.push_back(universal_closure(m.formula));
      continue;
    }
    if (*m.multiplier <= 0)
      throw std::invalid_argument("mln formula " + std::to_string(j + 1) + ": multiplier must be positive, got " +
                                  to_string(*m.multiplier));
    auto fv = free_variables(m.formula);
    Predicate xi = names.fresh_predicate("xi", static_cast<int>(fv.size()));
    out.vocabulary.add_predicate(xi);
    out.weights.set(xi.name, *m.multiplier, 1);
    out.indicators.push_back(xi.name);
    std::vector<Term> args;
    for (const auto& v : fv) args.push_back(Term::variable(v));
    parts.push_back(universal_closure(iff(atom(xi.name, args), m.formula)));
  }
  out.sentence = conj_all(parts);
  return out;
}

MlnProblem mln_problem(const ProblemFile& problem) {
  MlnProblem out;
  for (const auto& e : problem.mln) out.formulas.push_back({e.formula, e.multiplier});
  out.vocabulary = problem.vocabulary;
  out.weights = problem.weights;
  out.background = problem.theory();
  out.multiplier = problem.multiplier;
  return out;
}

namespace {

Rational count_theory(const Formula& theory, const Vocabulary& vocab, const WeightMap& weights,
                      std::vector<MultiplierFactor> extra, std::uint64_t n, const MlnOptions& options) {
  CompiledProblem cp = compile(theory, vocab, weights, options.compile);
  cp.extra_multiplier = std::move(extra);
  return count(cp, n, options.table);
}

}  // namespace

Rational partition_function(const MlnProblem& mln, std::uint64_t n, const MlnOptions& options) {
  EncodedMln enc = encode_mln(mln.formulas, mln.vocabulary, mln.weights);
  return count_theory(conj(enc.sentence, mln.background), enc.vocabulary, enc.weights, mln.multiplier, n, options);
}

GroundedQuery ground_query(const Formula& query, const Vocabulary& vocabulary, FreshNames& names) {
  GroundedQuery out{query, vocabulary, {}};
  std::map<std::string, std::string> marker;  // constant -> marker predicate
  std::vector<std::string> order;
  std::map<std::string, std::string> defined;  // atom pattern -> definitional predicate
  std::vector<Formula> extra;

  auto marker_of = [&](const std::string& c) {
    auto it = marker.find(c);
    if (it != marker.end()) return it->second;
    std::string m = names.fresh_predicate("C", 1).name;
    out.vocabulary.add_predicate({m, 1});
    marker.emplace(c, m);
    order.push_back(c);
    return m;
  };

  std::function<Formula(const Formula&)> rewrite = [&](const Formula& f) -> Formula {
    if (f.is<node::Equality>()) {
      const auto& e = f.as<node::Equality>();
      if (e.lhs.is_variable() && e.rhs.is_variable()) return f;
      if (!e.lhs.is_variable() && !e.rhs.is_variable()) return e.lhs.name == e.rhs.name ? top() : bottom();
      const Term& c = e.lhs.is_variable() ? e.rhs : e.lhs;
      const Term& v = e.lhs.is_variable() ? e.lhs : e.rhs;
      return atom(marker_of(c.name), {v});
    }
    if (f.is<node::Atom>()) {
      const auto& a = f.as<node::Atom>();
      bool ground = false;
      for (const auto& t : a.args) ground |= !t.is_variable();
      if (!ground) return f;
      // Canonical definition: argument i ranges over x (i = 0) or y (i = 1); constant positions
      // are guarded by their marker, variable positions become arguments of the new predicate.
      static const char* const kVars[] = {"x", "y"};
      std::vector<Term> canonical, def_args, use_args;
      std::vector<Formula> guards;
      std::map<std::string, std::string> slot;  // term name -> canonical variable
      for (const auto& t : a.args) {
        std::string k = (t.is_variable() ? "v:" : "c:") + t.name;
        auto it = slot.find(k);
        if (it == slot.end()) {
          it = slot.emplace(k, kVars[slot.size()]).first;
          if (t.is_variable()) {
            def_args.push_back(Term::variable(it->second));
            use_args.push_back(t);
          } else {
            guards.push_back(atom(marker_of(t.name), {Term::variable(it->second)}));
          }
        }
        canonical.push_back(Term::variable(it->second));
      }
      // Variable slots are positional in the pattern, so distinct occurrences with different
      // variable names share one definition.
      std::string pattern = a.predicate;
      for (const auto& t : a.args) pattern += t.is_variable() ? "|_" + slot.at("v:" + t.name) : "|" + t.name;
      auto it = defined.find(pattern);
      std::string name;
      if (it != defined.end()) {
        name = it->second;
      } else {
        name = names.fresh_predicate("g", static_cast<int>(def_args.size())).name;
        out.vocabulary.add_predicate({name, static_cast<int>(def_args.size())});
        defined.emplace(pattern, name);
        Formula body = implies(conj_all(guards), iff(atom(a.predicate, canonical), atom(name, def_args)));
        extra.push_back(universal_closure(body));
      }
      return atom(name, use_args);
    }
    auto kids = children(f);
    if (kids.empty()) return f;
    for (auto& k : kids) k = rewrite(k);
    return with_children(f, kids);
  };

  Formula q = rewrite(query);
  if (order.empty()) return out;
  for (std::size_t i = 0; i < order.size(); ++i) {
    const std::string& mi = marker.at(order[i]);
    extra.push_back(cardinality(mi, Comparator::Eq, AffineBound{0, 1}));
    for (std::size_t j = i + 1; j < order.size(); ++j)
      extra.push_back(forall("x", disj(negate(atom(mi, {"x"})), negate(atom(marker.at(order[j]), {"x"})))));
  }
  extra.insert(extra.begin(), q);
  out.sentence = conj_all(extra);
  auto c = static_cast<std::uint32_t>(order.size());
  Integer fact = 1;
  for (std::uint32_t i = 2; i <= c; ++i) fact *= i;
  out.multiplier.push_back({MultiplierFactor::Kind::BinomialInv, c, 1});
  out.multiplier.push_back({MultiplierFactor::Kind::Constant, 0, Rational(1) / Rational(fact)});
  return out;
}

Rational marginal(const MlnProblem& mln, const Formula& query, std::uint64_t n, const MlnOptions& options) {
  EncodedMln enc = encode_mln(mln.formulas, mln.vocabulary, mln.weights);
  ValidationOptions vo;
  auto report = validate_c2(query, mln.vocabulary, vo);
  if (!report.ok()) throw std::invalid_argument("query: " + report.describe());

  FreshNames names(enc.vocabulary);
  GroundedQuery gq = ground_query(query, enc.vocabulary, names);
  std::uint64_t constants = 0;
  for (const auto& f : gq.multiplier)
    if (f.kind == MultiplierFactor::Kind::BinomialInv) constants = f.k;
  if (constants > n)
    throw std::invalid_argument("query names " + std::to_string(constants) + " constants but the domain has " +
                                std::to_string(n) + " elements");

  Formula base = conj(enc.sentence, mln.background);
  std::vector<MultiplierFactor> num_mult = mln.multiplier;
  num_mult.insert(num_mult.end(), gq.multiplier.begin(), gq.multiplier.end());

  auto z_task = [&] { return count_theory(base, enc.vocabulary, enc.weights, mln.multiplier, n, options); };
  auto q_task = [&] { return count_theory(conj(base, gq.sentence), gq.vocabulary, enc.weights, num_mult, n, options); };
  Rational z, zq;
  if (options.table.workers > 1) {
    auto fz = std::async(std::launch::async, z_task);
    zq = q_task();
    z = fz.get();
  } else {
    z = z_task();
    if (z == 0) throw UndefinedDistribution("partition function is zero; marginals are undefined");
    zq = q_task();
  }
  if (z == 0) throw UndefinedDistribution("partition function is zero; marginals are undefined");
  return zq / z;
}

Rational exp_approximation(const Rational& w, unsigned digits) {
  if (digits == 0) throw std::invalid_argument("exp_approximation needs at least one digit");
  // Bits for `digits` decimal digits plus guard bits; mpfr_exp is correctly rounded.
  mpfr_prec_t prec = static_cast<mpfr_prec_t>(digits * 3.33) + 64;
  mpfr_t x;
  mpfr_init2(x, prec);
  mpfr_set_q(x, w.get_mpq_t(), MPFR_RNDN);
  mpfr_exp(x, x, MPFR_RNDN);
  mpfr_exp_t exp10 = 0;
  char* s = mpfr_get_str(nullptr, &exp10, 10, digits, x, MPFR_RNDN);
  mpfr_clear(x);
  std::string mantissa(s);
  mpfr_free_str(s);
  // value = 0.mantissa * 10^exp10
  Integer num(mantissa);
  long shift = static_cast<long>(exp10) - static_cast<long>(mantissa.size());
  Integer ten_pow;
  mpz_ui_pow_ui(ten_pow.get_mpz_t(), 10, static_cast<unsigned long>(shift < 0 ? -shift : shift));
  Rational out = shift < 0 ? Rational(num, ten_pow) : Rational(num * ten_pow);
  out.canonicalize();
  return out;
}

}  // namespace c2wfomc
