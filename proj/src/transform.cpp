#include "c2wfomc/transform.hpp"

#include <algorithm>
#include <deque>
#include <functional>
#include <set>
#include <sstream>
#include <stdexcept>

namespace c2wfomc {

using Kind = Formula::Kind;

Rational CompiledProblem::multiplier_value(std::uint64_t n) const {
  Rational v = 1;
  for (const auto& f : multiplier) v *= f.evaluate(n);
  for (const auto& f : extra_multiplier) v *= f.evaluate(n);
  return v;
}

RewriteState::RewriteState(Vocabulary vocabulary, WeightMap weights, CompileOptions options)
    : vocab_(std::move(vocabulary)), weights_(std::move(weights)), options_(options), names_(vocab_) {}

std::string RewriteState::fresh(std::string_view base, int arity, Rational positive, Rational negative) {
  Predicate p = names_.fresh_predicate(base, arity);
  vocab_.add_predicate(p);
  if (positive != 1 || negative != 1) weights_.set(p.name, std::move(positive), std::move(negative));
  return p.name;
}

void RewriteState::record(std::string rule, std::vector<std::string> predicates, const std::vector<Formula>& formulas,
                          std::optional<MultiplierFactor> factor) {
  TraceStep step{std::move(rule), std::move(predicates), {}, std::move(factor)};
  for (const auto& f : formulas) step.formulas.push_back(print_formula(f));
  trace_.push_back(std::move(step));
}

void RewriteState::record_clauses(std::string rule, std::vector<std::string> predicates,
                                  const std::vector<Clause>& clauses) {
  TraceStep step{std::move(rule), std::move(predicates), {}, std::nullopt};
  for (const auto& c : clauses) step.formulas.push_back(print_clause(c));
  trace_.push_back(std::move(step));
}

namespace {

Formula ax(const std::string& p, const char* v = "x") { return atom(p, {std::string_view(v)}); }
Formula axy(const std::string& p) { return atom(p, {"x", "y"}); }
Formula nullary(const std::string& p) { return atom(p, std::vector<Term>{}); }

// Simplifying connectives.
Formula sconj(const Formula& a, const Formula& b) {
  if (a.is<node::Bottom>() || b.is<node::Bottom>()) return bottom();
  if (a.is<node::Top>()) return b;
  if (b.is<node::Top>()) return a;
  return conj(a, b);
}
Formula sdisj(const Formula& a, const Formula& b) {
  if (a.is<node::Top>() || b.is<node::Top>()) return top();
  if (a.is<node::Bottom>()) return b;
  if (b.is<node::Bottom>()) return a;
  return disj(a, b);
}
Formula snot(const Formula& a) {
  if (a.is<node::Top>()) return bottom();
  if (a.is<node::Bottom>()) return top();
  if (a.is<node::Not>()) return a.as<node::Not>().body;
  return negate(a);
}
Formula sdisj_all(const std::vector<Formula>& parts) {
  Formula out = bottom();
  for (const auto& p : parts) out = sdisj(out, p);
  return out;
}

std::string key_of(const Formula& f) { return print_formula_fully_parenthesized(f); }

// Wraps a body in universal quantifiers over the given variables (x before y).
Formula close_over(const std::set<std::string>& vars, Formula body) {
  for (auto it = vars.rbegin(); it != vars.rend(); ++it) body = forall(*it, body);
  return body;
}

bool is_card_boolean(const Formula& f) {
  switch (f.kind()) {
    case Kind::Top:
    case Kind::Bottom:
    case Kind::Cardinality:
      return true;
    case Kind::Not:
    case Kind::Binary: {
      for (const auto& c : children(f))
        if (!is_card_boolean(c)) return false;
      return true;
    }
    default:
      return false;
  }
}

bool is_literal_node(const Formula& f) {
  auto k = f.kind();
  return k == Kind::Atom || k == Kind::Equality || k == Kind::Cardinality;
}

// ---------------------------------------------------------------------------------------------
// CNF with opaque subformulas and definitional naming past a clause limit.

struct LitF {
  Formula atom;
  bool positive = true;
};
using ClauseF = std::vector<LitF>;
using CnfF = std::vector<ClauseF>;

Formula lit_formula(const LitF& l) { return l.positive ? l.atom : negate(l.atom); }

// Normalizes a clause: drops duplicates, detects tautologies (returns false).
bool tidy(ClauseF& c) {
  ClauseF out;
  for (const auto& l : c) {
    if (l.atom.is<node::Equality>()) {
      const auto& e = l.atom.as<node::Equality>();
      if (e.lhs == e.rhs) {
        if (l.positive) return false;
        continue;
      }
    }
    bool dup = false;
    for (const auto& m : out) {
      if (m.atom == l.atom) {
        if (m.positive != l.positive) return false;
        dup = true;
        break;
      }
    }
    if (!dup) out.push_back(l);
  }
  c = std::move(out);
  return true;
}

class CnfBuilder {
 public:
  using Opaque = std::function<bool(const Formula&)>;
  // `define` receives the definitional sentence of each named subformula.
  CnfBuilder(RewriteState& st, Opaque opaque, std::function<void(Formula)> define, std::string rule)
      : st_(st), opaque_(std::move(opaque)), define_(std::move(define)), rule_(std::move(rule)) {}

  CnfF build(const Formula& f, bool pos) {
    switch (f.kind()) {
      case Kind::Top:
        return pos ? CnfF{} : CnfF{ClauseF{}};
      case Kind::Bottom:
        return pos ? CnfF{ClauseF{}} : CnfF{};
      case Kind::Not:
        return build(f.as<node::Not>().body, !pos);
      case Kind::Binary:
        return binary(f, pos);
      default:
        if (is_literal_node(f) || opaque_(f)) return {{LitF{f, pos}}};
        throw std::logic_error("unexpected quantified subformula in clause conversion: " + print_formula(f));
    }
  }

  // Replaces f by a fresh atom over its free variables, emitting the definition.
  Formula name(const Formula& f) {
    auto fv = free_variables(f);
    Formula canon = f;
    bool swapped = false;
    if (fv == std::set<std::string>{"y"}) {
      canon = swap_xy(f);
      swapped = true;
      fv = {"x"};
    }
    std::string key = "def|" + key_of(canon);
    auto& memo = st_.name_memo();
    std::string pred;
    if (auto it = memo.find(key); it != memo.end()) {
      pred = it->second;
    } else {
      pred = st_.fresh("t", static_cast<int>(fv.size()));
      memo.emplace(key, pred);
      std::vector<Term> args;
      for (const auto& v : fv) args.push_back(Term::variable(v));
      Formula def = close_over(fv, iff(atom(pred, args), canon));
      st_.record(rule_, {pred}, {def});
      define_(def);
    }
    std::vector<Term> args;
    for (const auto& v : fv) args.push_back(Term::variable(swapped ? std::string("y") : v));
    return atom(pred, args);
  }

 private:
  CnfF binary(const Formula& f, bool pos) {
    const auto& b = f.as<node::Binary>();
    // Each case is a conjunction of disjunctions of children with given polarities.
    struct Part {
      bool lp, rp;
    };
    std::vector<Part> parts;
    bool conjunctive_split = false;  // children combined by union (and) rather than cross (or)
    switch (b.op) {
      case Connective::And:
        if (pos) conjunctive_split = true;
        parts = {{pos, pos}};
        break;
      case Connective::Or:
        if (!pos) conjunctive_split = true;
        parts = {{pos, pos}};
        break;
      case Connective::Implies:
        if (!pos) conjunctive_split = true;
        parts = {{!pos, pos}};
        break;
      case Connective::Iff:
        parts = pos ? std::vector<Part>{{false, true}, {true, false}} : std::vector<Part>{{true, true}, {false, false}};
        break;
    }
    if (conjunctive_split) {
      CnfF a = build(b.lhs, parts[0].lp), c = build(b.rhs, parts[0].rp);
      a.insert(a.end(), c.begin(), c.end());
      return a;
    }
    std::size_t estimate = 0;
    std::vector<std::pair<CnfF, CnfF>> built;
    for (const auto& p : parts) {
      built.emplace_back(build(b.lhs, p.lp), build(b.rhs, p.rp));
      estimate += built.back().first.size() * built.back().second.size();
    }
    if (estimate > st_.options().clause_limit) {
      // A side whose name is the other side is the definition being expanded: keep it.
      Formula l = b.lhs, r = b.rhs;
      if (!is_plain(l)) {
        Formula n = name(l);
        if (!(n == b.rhs)) l = n;
      }
      if (!is_plain(r)) {
        Formula n = name(r);
        if (!(n == b.lhs)) r = n;
      }
      if (!l.same_node(b.lhs) || !r.same_node(b.rhs)) return build(binary_node(b.op, l, r), pos);
    }
    CnfF out;
    for (auto& [a, c] : built) {
      for (const auto& ca : a)
        for (const auto& cc : c) {
          ClauseF merged = ca;
          merged.insert(merged.end(), cc.begin(), cc.end());
          if (tidy(merged)) out.push_back(std::move(merged));
        }
    }
    return out;
  }

  static Formula binary_node(Connective op, Formula l, Formula r) { return c2wfomc::binary(op, std::move(l), std::move(r)); }

  bool is_plain(const Formula& f) const {
    if (f.is<node::Not>()) return is_plain(f.as<node::Not>().body);
    return is_literal_node(f) || opaque_(f) || f.is<node::Top>() || f.is<node::Bottom>();
  }

  RewriteState& st_;
  Opaque opaque_;
  std::function<void(Formula)> define_;
  std::string rule_;
};

CnfF finalize(CnfF cnf) {
  CnfF out;
  for (auto& c : cnf)
    if (tidy(c)) out.push_back(std::move(c));
  return out;
}

// ---------------------------------------------------------------------------------------------

Formula expand_at_most(std::uint32_t k, const std::string& var, const Formula& body) {
  Formula out = forall(var, negate(body));
  for (std::uint32_t j = 1; j <= k; ++j) out = disj(out, count_exists(Comparator::Eq, j, var, body));
  return out;
}

Formula eliminate_rec(const Formula& f, std::optional<std::uint64_t> hint) {
  auto kids = children(f);
  for (auto& k : kids) k = eliminate_rec(k, hint);
  Formula g = kids.empty() ? f : with_children(f, kids);
  if (!g.is<node::Counting>()) return g;
  const auto& c = g.as<node::Counting>();
  switch (c.cmp) {
    case Comparator::Eq:
      if (c.k == 0) return forall(c.var, negate(c.body));
      if (hint && c.k > *hint) return bottom();
      return g;
    case Comparator::Le:
      if (hint && c.k >= *hint) return top();
      return expand_at_most(c.k, c.var, c.body);
    case Comparator::Ge:
      if (c.k == 0) return top();
      if (hint && c.k > *hint) return bottom();
      if (c.k == 1) return exists(c.var, c.body);
      return negate(expand_at_most(c.k - 1, c.var, c.body));
    default:
      throw std::logic_error("counting quantifier with unsupported comparator");
  }
}

// Finds the innermost-leftmost counting node satisfying `want`; returns false if none.
bool find_counting(const Formula& f, const std::function<bool(const Formula&)>& want, Formula& out) {
  for (const auto& c : children(f))
    if (find_counting(c, want, out)) return true;
  if (f.is<node::Counting>() && want(f)) {
    out = f;
    return true;
  }
  return false;
}

Formula replace_node(const Formula& f, const Formula& target, const Formula& with) {
  if (f == target) return with;
  auto kids = children(f);
  if (kids.empty()) return f;
  bool changed = false;
  for (auto& k : kids) {
    Formula r = replace_node(k, target, with);
    if (!r.same_node(k)) changed = true;
    k = r;
  }
  return changed ? with_children(f, kids) : f;
}

Extraction extract_where(const Formula& f, RewriteState& st, const std::function<bool(const Formula&)>& want) {
  Extraction ex{f, {}, false};
  Formula target;
  if (!find_counting(f, want, target)) return ex;
  const auto& c = target.as<node::Counting>();
  auto fv = free_variables(target);
  if (fv.empty()) {
    Formula body = c.var == "x" ? c.body : swap_xy(c.body);
    std::string key = "closed|" + key_of(body);
    auto& memo = st.name_memo();
    std::string xi;
    if (auto it = memo.find(key); it != memo.end()) {
      xi = it->second;
    } else {
      xi = st.fresh("xi", 1);
      memo.emplace(key, xi);
      ex.definitions.push_back(forall("x", iff(ax(xi), body)));
    }
    Formula card = cardinality(xi, c.cmp, AffineBound{0, static_cast<std::int64_t>(c.k)});
    ex.host = replace_node(f, target, card);
    auto shown = ex.definitions;
    shown.push_back(card);
    st.record("extract-closed", {xi}, shown);
    ex.changed = true;
    return ex;
  }
  const std::string u = *fv.begin();
  Formula canon = u == "x" ? target : swap_xy(target);  // free variable x, counting over y
  const auto& cc = canon.as<node::Counting>();
  std::string key = "count|" + key_of(canon);
  auto& memo = st.name_memo();
  std::string a;
  std::vector<std::string> introduced;
  if (auto it = memo.find(key); it != memo.end()) {
    a = it->second;
  } else {
    a = st.fresh("A", 1);
    memo.emplace(key, a);
    introduced.push_back(a);
    Formula counted = cc.body;
    bool atomic = counted.is<node::Atom>() && counted.as<node::Atom>().args.size() == 2 &&
                  counted.as<node::Atom>().args[0].name == "x" && counted.as<node::Atom>().args[1].name == "y";
    if (!atomic || (!st.options().atomic_fast_path && !is_reserved_name(counted.as<node::Atom>().predicate))) {
      std::string bkey = "B|" + key_of(counted);
      std::string b;
      if (auto jt = memo.find(bkey); jt != memo.end()) {
        b = jt->second;
      } else {
        b = st.fresh("B", 2);
        memo.emplace(bkey, b);
        introduced.push_back(b);
        ex.definitions.push_back(forall("x", forall("y", iff(axy(b), counted))));
      }
      counted = axy(b);
    }
    ex.definitions.push_back(forall("x", iff(ax(a), count_exists(Comparator::Eq, cc.k, "y", counted))));
  }
  ex.host = replace_node(f, target, ax(a, u.c_str()));
  st.record("extract", introduced, ex.definitions);
  ex.changed = true;
  return ex;
}

}  // namespace

Formula eliminate_bounded_counting(const Formula& f, std::optional<std::uint64_t> domain_hint) {
  return eliminate_rec(f, domain_hint);
}

Extraction extract_exact_counting(const Formula& f, RewriteState& state) {
  return extract_where(f, state, [](const Formula&) { return true; });
}

std::pair<Formula, Formula> split_iff_counting(const Formula& definition, RewriteState& state) {
  auto fail = [&] { throw std::logic_error("split_iff_counting: unexpected shape " + print_formula(definition)); };
  if (!definition.is<node::Quantified>()) fail();
  const auto& q = definition.as<node::Quantified>();
  if (q.quantifier != Quantifier::Forall || q.var != "x" || !q.body.is<node::Binary>()) fail();
  const auto& b = q.body.as<node::Binary>();
  if (b.op != Connective::Iff || !b.lhs.is<node::Atom>() || !b.rhs.is<node::Counting>()) fail();
  const auto& c = b.rhs.as<node::Counting>();
  if (c.cmp != Comparator::Eq || c.var != "y" || !c.body.is<node::Atom>()) fail();
  std::string nb = state.fresh("N", 1);
  Formula forward = conj(forall("x", iff(b.lhs, negate(ax(nb)))), forall("x", disj(ax(nb), b.rhs)));
  Formula backward = forall("x", disj(b.lhs, negate(b.rhs)));
  state.record("split-iff", {nb}, {forward, backward});
  return {forward, backward};
}

Formula remove_negation(const Formula& host, const Formula& negated, RewriteState& state) {
  if (!negated.is<node::Not>()) throw std::invalid_argument("remove_negation expects a negation");
  const Formula& psi = negated.as<node::Not>().body;
  auto fv = free_variables(psi);
  std::string a = state.fresh("C", static_cast<int>(fv.size()));
  std::string b = state.fresh("D", static_cast<int>(fv.size()), 1, -1);
  std::vector<Term> args;
  for (const auto& v : fv) args.push_back(Term::variable(v));
  Formula fa = atom(a, args), fb = atom(b, args);
  Formula replaced = replace_node(host, negated, fa);
  if (replaced.same_node(host)) throw std::invalid_argument("negated subformula does not occur in host");
  Formula companion = close_over(fv, conj(conj(disj(psi, fa), disj(fa, fb)), disj(psi, fb)));
  state.record("remove-negation", {a, b}, {companion});
  return conj(replaced, companion);
}

Encoding encode_forall_exact(const std::string& r, std::uint32_t k, RewriteState& state) {
  if (k == 0) throw std::logic_error("encode_forall_exact requires k >= 1");
  Encoding enc;
  AffineBound bound{static_cast<std::int64_t>(k), 0};
  enc.cardinality.push_back(cardinality(r, Comparator::Eq, bound));
  auto& lb = state.implied_lower_bounds();
  if (auto it = lb.find(r); it == lb.end() || it->second.per_element < bound.per_element) lb[r] = bound;
  if (k == 1) {
    enc.sentences.push_back(forall("x", exists("y", axy(r))));
    state.record("functionality", {}, {enc.sentences[0], enc.cardinality[0]});
    return enc;
  }
  std::vector<Formula> fs;
  for (std::uint32_t i = 0; i < k; ++i) {
    enc.introduced.push_back(state.fresh("f", 2));
    fs.push_back(axy(enc.introduced.back()));
    enc.sentences.push_back(forall("x", exists("y", fs.back())));
  }
  for (std::uint32_t i = 0; i < k; ++i)
    for (std::uint32_t j = i + 1; j < k; ++j)
      enc.sentences.push_back(forall("x", forall("y", disj(negate(fs[i]), negate(fs[j])))));
  enc.sentences.push_back(forall("x", forall("y", iff(axy(r), disj_all(fs)))));
  enc.factors.push_back(MultiplierFactor{MultiplierFactor::Kind::FactorialPowNegDomain, k, Rational(1)});
  auto shown = enc.sentences;
  shown.push_back(enc.cardinality[0]);
  state.record("forall-exact", enc.introduced, shown, enc.factors.back());
  return enc;
}

Encoding encode_exact_forall(const std::string& r, std::uint32_t k, RewriteState& state) {
  Encoding enc;
  std::string u = state.fresh("U", 1);
  enc.introduced.push_back(u);
  enc.cardinality.push_back(cardinality(u, Comparator::Eq, AffineBound{0, static_cast<std::int64_t>(k)}));
  enc.sentences.push_back(forall("x", forall("y", disj(negate(ax(u)), axy(r)))));
  enc.sentences.push_back(forall("x", disj(ax(u), exists("y", negate(axy(r))))));
  auto shown = enc.sentences;
  shown.push_back(enc.cardinality[0]);
  state.record("exact-forall", enc.introduced, shown);
  return enc;
}

Encoding encode_guarded_counting(const Formula& guard, const std::string& r, std::uint32_t k, RewriteState& state) {
  if (k == 0) throw std::logic_error("encode_guarded_counting requires k >= 1");
  Encoding enc;
  std::string u = state.fresh("U", 1);
  std::string b = state.fresh("B", 2);
  enc.introduced = {u, b};
  enc.cardinality.push_back(cardinality(u, Comparator::Eq, AffineBound{0, static_cast<std::int64_t>(k)}));
  Formula phi3 = forall("x", forall("y", disj(disj(snot(guard), negate(axy(b))), atom(u, {"y"}))));
  Formula phi4 = forall("x", forall("y", sdisj(guard, iff(axy(r), axy(b)))));
  enc.sentences = {phi3, phi4};
  enc.factors.push_back(MultiplierFactor{MultiplierFactor::Kind::BinomialInv, k, Rational(1)});
  state.min_domain() = std::max<std::uint64_t>(state.min_domain(), k);
  state.record("guarded-counting", enc.introduced,
               {forall("x", count_exists(Comparator::Eq, k, "y", axy(b))), enc.cardinality[0], phi3, phi4},
               enc.factors.back());
  Encoding inner = encode_forall_exact(b, k, state);
  enc.sentences.insert(enc.sentences.end(), inner.sentences.begin(), inner.sentences.end());
  enc.cardinality.insert(enc.cardinality.end(), inner.cardinality.begin(), inner.cardinality.end());
  enc.introduced.insert(enc.introduced.end(), inner.introduced.begin(), inner.introduced.end());
  enc.factors.insert(enc.factors.end(), inner.factors.begin(), inner.factors.end());
  return enc;
}

namespace {

// ---------------------------------------------------------------------------------------------
// Quantifier elimination below the universal prefix.

class Skolemizer {
 public:
  explicit Skolemizer(RewriteState& st) : st_(st) {}

  std::vector<Formula> run(const Formula& f) {
    universal(f, {});
    return std::move(out_);
  }

 private:
  void piece(const std::set<std::string>& prefix, Formula body) {
    if (prefix == std::set<std::string>{"y"}) {
      out_.push_back(forall("x", swap_xy(body)));
      return;
    }
    out_.push_back(close_over(prefix, body));
  }

  Formula name_quantified(const Formula& q) {
    CnfBuilder cb(
        st_, [](const Formula&) { return true; }, [this](Formula def) { universal(def, {}); }, "name");
    return cb.name(q);
  }

  void universal(Formula m, std::set<std::string> prefix) {
    while (m.is<node::Quantified>() && m.as<node::Quantified>().quantifier == Quantifier::Forall &&
           !prefix.count(m.as<node::Quantified>().var)) {
      prefix.insert(m.as<node::Quantified>().var);
      m = Formula(m.as<node::Quantified>().body);
    }
    CnfBuilder cb(
        st_, [](const Formula& g) { return g.is<node::Quantified>(); },
        [this](Formula def) { universal(def, {}); }, "name");
    CnfF cnf = finalize(cb.build(m, true));
    for (auto& clause : cnf) {
      std::vector<Formula> plain;
      std::optional<std::pair<Quantifier, node::Quantified>> kept;
      for (const auto& l : clause) {
        if (!l.atom.is<node::Quantified>()) {
          plain.push_back(lit_formula(l));
          continue;
        }
        node::Quantified q = l.atom.as<node::Quantified>();
        if (!l.positive) {
          q.quantifier = q.quantifier == Quantifier::Forall ? Quantifier::Exists : Quantifier::Forall;
          q.body = snot(q.body);
        }
        bool inlinable = !kept && prefix.size() < 2;
        if (inlinable && prefix.count(q.var)) {
          // Closed subformula rebinding the prefix variable: rename its bound variable.
          Formula closed = Formula::make(q);
          if (!free_variables(closed).empty()) {
            inlinable = false;
          } else {
            q = swap_xy(closed).as<node::Quantified>();
          }
        }
        if (inlinable) {
          kept.emplace(q.quantifier, q);
        } else {
          Formula lit = Formula::make(q);
          plain.push_back(name_quantified(lit));
        }
      }
      if (!kept) {
        piece(prefix, sdisj_all(plain));
        continue;
      }
      const auto& q = kept->second;
      auto inner = prefix;
      inner.insert(q.var);
      if (q.quantifier == Quantifier::Forall) {
        plain.push_back(q.body);
        universal(sdisj_all(plain), inner);
        continue;
      }
      // exists: G | exists v phi  ->  (Z | ~g) for each g in G, and forall v (Z | ~phi)
      std::string z = st_.fresh("Z", static_cast<int>(prefix.size()), 1, -1);
      std::vector<Term> args;
      for (const auto& v : prefix) args.push_back(Term::variable(v));
      Formula za = atom(z, args);
      std::vector<Formula> shown;
      for (const auto& g : plain) {
        Formula c = sdisj(za, snot(g));
        piece(prefix, c);
        shown.push_back(close_over(prefix, c));
      }
      Formula rest = sdisj(za, snot(q.body));
      shown.push_back(close_over(inner, rest));
      st_.record("skolemize", {z}, shown);
      universal(rest, inner);
    }
  }

  RewriteState& st_;
  std::vector<Formula> out_;
};

Literal to_literal(const LitF& l) {
  Literal out;
  out.positive = l.positive;
  if (l.atom.is<node::Equality>()) {
    const auto& e = l.atom.as<node::Equality>();
    out.args = {e.lhs.name, e.rhs.name};
    return out;
  }
  if (!l.atom.is<node::Atom>()) throw std::logic_error("non-atomic literal in clause: " + print_formula(l.atom));
  const auto& a = l.atom.as<node::Atom>();
  out.predicate = a.predicate;
  for (const auto& t : a.args) {
    if (!t.is_variable()) throw std::invalid_argument("constants are not supported by the lifted pipeline");
    out.args.push_back(t.name);
  }
  return out;
}

void collect_psi(const Formula& f, std::vector<std::string>& out) {
  if (f.is<node::Cardinality>()) {
    const auto& p = f.as<node::Cardinality>().predicate;
    if (std::find(out.begin(), out.end(), p) == out.end()) out.push_back(p);
    return;
  }
  for (const auto& c : children(f)) collect_psi(c, out);
}

// ---------------------------------------------------------------------------------------------
// Counting-quantifier dispatch.

class Compiler {
 public:
  explicit Compiler(RewriteState& st) : st_(st) {}

  void push(const Formula& f) { work_.push_back(f); }

  void run() {
    while (!work_.empty() || !pending_.empty()) {
      if (work_.empty()) {
        flush_guarded();
        continue;
      }
      Formula s = work_.front();
      work_.pop_front();
      process(s);
    }
  }

  std::vector<Formula> card;
  std::vector<Formula> fo2;
  std::vector<MultiplierFactor> factors;

 private:
  void apply(const Encoding& enc) {
    for (const auto& s : enc.sentences)
      if (!s.is<node::Top>()) push(s);
    for (const auto& c : enc.cardinality)
      if (!c.is<node::Top>()) card.push_back(c);
    factors.insert(factors.end(), enc.factors.begin(), enc.factors.end());
  }

  void process(Formula s) {
    if (s.is<node::Top>()) return;
    if (s.is<node::Binary>() && s.as<node::Binary>().op == Connective::And) {
      push(s.as<node::Binary>().lhs);
      push(s.as<node::Binary>().rhs);
      return;
    }
    if (!contains_counting(s)) {
      if (is_card_boolean(s))
        card.push_back(s);
      else
        fo2.push_back(s);
      return;
    }
    if (s.is<node::Counting>()) {
      closed_counting(s);
      return;
    }
    Formula e = eliminate_bounded_counting(s, st_.options().domain_hint);
    if (!(e == s)) {
      st_.record("normalize-counting", {}, {e});
      push(e);
      return;
    }
    if (s.is<node::Quantified>() && s.as<node::Quantified>().quantifier == Quantifier::Forall) {
      if (s.as<node::Quantified>().var == "y") s = swap_xy(s);
      universal_counting(s);
      return;
    }
    extract_one(s, [](const Formula&) { return true; });
  }

  void extract_one(const Formula& s, const std::function<bool(const Formula&)>& want) {
    Extraction ex = extract_where(s, st_, want);
    if (!ex.changed) throw std::logic_error("no counting subformula to extract in " + print_formula(s));
    push(ex.host);
    for (const auto& d : ex.definitions) push(d);
  }

  void closed_counting(const Formula& s) {
    const auto& c = s.as<node::Counting>();
    Formula body = c.var == "x" ? c.body : swap_xy(c.body);
    if (c.cmp == Comparator::Eq && body.is<node::Quantified>()) {
      const auto& q = body.as<node::Quantified>();
      if (q.quantifier == Quantifier::Forall && q.var == "y" && q.body.is<node::Atom>() &&
          q.body.as<node::Atom>().args.size() == 2 && q.body.as<node::Atom>().args[0].name == "x" &&
          q.body.as<node::Atom>().args[1].name == "y") {
        apply(encode_exact_forall(q.body.as<node::Atom>().predicate, c.k, st_));
        return;
      }
    }
    std::string xi = st_.fresh("xi", 1);
    Formula cardatom = cardinality(xi, c.cmp, AffineBound{0, static_cast<std::int64_t>(c.k)});
    Formula def = forall("x", iff(ax(xi), body));
    st_.record("closed-counting", {xi}, {cardatom, def});
    card.push_back(cardatom);
    push(def);
  }

  // s = forall x M with M containing counting quantifiers.
  void universal_counting(const Formula& s) {
    const Formula& m = s.as<node::Quantified>().body;
    // Pattern: forall x exists[=k] y psi(x,y).
    if (m.is<node::Counting>() && free_variables(m) == std::set<std::string>{"x"} &&
        m.as<node::Counting>().var == "y" && !contains_counting(m.as<node::Counting>().body)) {
      const auto& c = m.as<node::Counting>();
      apply(encode_forall_exact(counted_predicate(c.body), c.k, st_));
      return;
    }
    // Anything not directly under the Boolean structure of M is extracted first.
    auto nested = [&](const Formula& c) {
      return free_variables(c) != std::set<std::string>{"x"} || c.as<node::Counting>().var != "y" ||
             !top_level_in(m, c) || contains_counting(c.as<node::Counting>().body);
    };
    Formula probe;
    if (find_counting(m, nested, probe)) {
      extract_one(s, nested);
      return;
    }
    if (st_.options().faithful_negation && m.is<node::Binary>() && m.as<node::Binary>().op == Connective::Iff &&
        m.as<node::Binary>().lhs.is<node::Atom>() && m.as<node::Binary>().rhs.is<node::Counting>()) {
      Formula def = forall("x", iff(m.as<node::Binary>().lhs, atomic_counting(m.as<node::Binary>().rhs)));
      auto [fwd, bwd] = split_iff_counting(def, st_);
      push(fwd);
      push(bwd);
      return;
    }
    CnfBuilder cb(
        st_, [](const Formula& g) { return g.is<node::Quantified>() || g.is<node::Counting>(); },
        [this](Formula def) { push(def); }, "name");
    CnfF cnf = finalize(cb.build(m, true));
    for (const auto& clause : cnf) dispatch_clause(clause);
  }

  static bool top_level_in(const Formula& m, const Formula& target) {
    if (m == target) return true;
    if (m.is<node::Not>()) return top_level_in(m.as<node::Not>().body, target);
    if (m.is<node::Binary>())
      return top_level_in(m.as<node::Binary>().lhs, target) || top_level_in(m.as<node::Binary>().rhs, target);
    return false;
  }

  // The binary predicate a counting body is expressed with, naming it when needed.
  std::string counted_predicate(const Formula& psi) {
    if (psi.is<node::Atom>()) {
      const auto& a = psi.as<node::Atom>();
      if (a.args.size() == 2 && a.args[0].name == "x" && a.args[1].name == "y" &&
          (st_.options().atomic_fast_path || is_reserved_name(a.predicate)))
        return a.predicate;
    }
    std::string key = "B|" + key_of(psi);
    auto& memo = st_.name_memo();
    if (auto it = memo.find(key); it != memo.end()) return it->second;
    std::string b = st_.fresh("B", 2);
    memo.emplace(key, b);
    Formula def = forall("x", forall("y", iff(axy(b), psi)));
    st_.record("name-counted", {b}, {def});
    push(def);
    return b;
  }

  Formula atomic_counting(const Formula& c) {
    const auto& cc = c.as<node::Counting>();
    return count_exists(Comparator::Eq, cc.k, "y", axy(counted_predicate(cc.body)));
  }

  Formula guard_formula(const Formula& g) {
    if (!contains_quantifier(g)) return g;
    std::string key = "G|" + key_of(g);
    auto& memo = st_.name_memo();
    if (auto it = memo.find(key); it != memo.end()) return ax(it->second);
    std::string name = st_.fresh("G", 1);
    memo.emplace(key, name);
    Formula def = forall("x", iff(ax(name), g));
    st_.record("name-guard", {name}, {def});
    push(def);
    return ax(name);
  }

  // Requests for the same counting literal are merged: (G1 | C) & (G2 | C) == (G1 & G2) | C, so
  // each literal costs one encoding however many clauses it occurs in.
  void guarded(const Formula& g, const Formula& c) {
    std::string key = key_of(c);
    auto it = std::find_if(pending_.begin(), pending_.end(), [&](const auto& e) { return e.first == key; });
    if (it == pending_.end()) {
      pending_.push_back({key, {c, g}});
    } else {
      it->second.second = sconj(it->second.second, g);
    }
  }

  void flush_guarded() {
    auto batch = std::move(pending_);
    pending_.clear();
    for (const auto& [key, request] : batch) {
      const auto& [c, g] = request;
      const auto& cc = c.as<node::Counting>();
      std::string r = counted_predicate(cc.body);
      if (g.is<node::Bottom>()) {
        apply(encode_forall_exact(r, cc.k, st_));
        continue;
      }
      apply(encode_guarded_counting(guard_formula(g), r, cc.k, st_));
    }
  }

  void dispatch_clause(const ClauseF& clause) {
    std::vector<Formula> rest, pos, neg;
    for (const auto& l : clause) {
      if (l.atom.is<node::Counting>())
        (l.positive ? pos : neg).push_back(l.atom);
      else
        rest.push_back(lit_formula(l));
    }
    Formula g = sdisj_all(rest);
    if (pos.empty() && neg.empty()) {
      push(forall("x", g));
      return;
    }
    if (neg.empty() && pos.size() == 1) {
      guarded(g, pos[0]);
      return;
    }
    if (pos.empty() && neg.size() == 1) {
      negative(g, neg[0]);
      return;
    }
    if (neg.empty() && same_body(pos)) {
      selectors(g, pos);
      return;
    }
    // Mixed clause: name every counting literal but the first.
    std::vector<Formula> lits = rest;
    bool first = true;
    for (const auto& l : clause) {
      if (!l.atom.is<node::Counting>()) continue;
      if (first) {
        lits.push_back(lit_formula(l));
        first = false;
        continue;
      }
      Extraction ex = extract_where(l.atom, st_, [](const Formula&) { return true; });
      for (const auto& d : ex.definitions) push(d);
      lits.push_back(l.positive ? ex.host : negate(ex.host));
    }
    push(forall("x", sdisj_all(lits)));
  }

  static bool same_body(const std::vector<Formula>& cs) {
    for (const auto& c : cs)
      if (!(c.as<node::Counting>().body == cs[0].as<node::Counting>().body)) return false;
    return true;
  }

  void negative(const Formula& g, const Formula& c) {
    if (st_.options().faithful_negation) {
      Formula host = forall("x", sdisj(g, negate(atomic_counting(c))));
      Formula negated = negate(atomic_counting(c));
      push(remove_negation(host, negated, st_));
      return;
    }
    // Per element: B true (weight 1) always; B false (weight -1) exactly when ~G and C.
    std::string b = st_.fresh("S", 1, 1, -1);
    std::vector<Formula> shown;
    if (!g.is<node::Bottom>()) {
      Formula side = forall("x", sdisj(ax(b), snot(g)));
      shown.push_back(side);
      push(side);
    }
    shown.push_back(forall("x", disj(ax(b), c)));
    st_.record("negation-sign", {b}, shown);
    guarded(ax(b), c);
  }

  void selectors(const Formula& g, std::vector<Formula> cs) {
    std::vector<Formula> uniq;
    for (const auto& c : cs) {
      bool seen = false;
      for (const auto& u : uniq) seen = seen || u == c;
      if (!seen) uniq.push_back(c);
    }
    if (uniq.size() == 1) {
      guarded(g, uniq[0]);
      return;
    }
    std::vector<Formula> sel, shown;
    std::vector<std::string> names;
    for (std::size_t j = 0; j < uniq.size(); ++j) {
      names.push_back(st_.fresh("P", 1));
      sel.push_back(ax(names.back()));
    }
    std::vector<Formula> cover = {g};
    cover.insert(cover.end(), sel.begin(), sel.end());
    shown.push_back(forall("x", sdisj_all(cover)));
    push(shown.back());
    if (!g.is<node::Bottom>()) {
      for (const auto& s : sel) {
        shown.push_back(forall("x", sdisj(negate(s), snot(g))));
        push(shown.back());
      }
    }
    st_.record("selectors", names, shown);
    for (std::size_t j = 0; j < uniq.size(); ++j) guarded(negate(sel[j]), uniq[j]);
  }

  RewriteState& st_;
  std::deque<Formula> work_;
  std::vector<std::pair<std::string, std::pair<Formula, Formula>>> pending_;  // counting literal -> guard
};

}  // namespace

std::vector<Formula> skolemize(const Formula& f, RewriteState& state) { return Skolemizer(state).run(f); }

std::vector<Clause> to_universal_cnf(const Formula& piece, RewriteState& state) {
  std::set<std::string> prefix;
  Formula body = piece;
  while (body.is<node::Quantified>() && body.as<node::Quantified>().quantifier == Quantifier::Forall) {
    prefix.insert(body.as<node::Quantified>().var);
    body = Formula(body.as<node::Quantified>().body);
  }
  if (contains_quantifier(body) || contains_counting(body))
    throw std::logic_error("to_universal_cnf expects a quantifier-free body: " + print_formula(piece));
  for (const auto& v : free_variables(body))
    if (!prefix.count(v)) throw std::logic_error("free variable " + v + " in clause piece");
  if (prefix == std::set<std::string>{"y"}) {
    body = swap_xy(body);
    prefix = {"x"};
  }
  std::vector<Clause> out;
  std::vector<Formula> defs;
  CnfBuilder cb(
      state, [](const Formula&) { return false; }, [&defs](Formula d) { defs.push_back(d); }, "cnf-name");
  CnfF cnf = finalize(cb.build(body, true));
  for (const auto& c : cnf) {
    Clause cl;
    cl.universal = !prefix.empty();
    for (const auto& l : c) cl.literals.push_back(to_literal(l));
    out.push_back(std::move(cl));
  }
  for (std::size_t i = 0; i < defs.size(); ++i) {
    auto more = to_universal_cnf(defs[i], state);
    out.insert(out.end(), more.begin(), more.end());
  }
  return out;
}

CompiledProblem compile(const Formula& theory, const Vocabulary& vocabulary, const WeightMap& weights,
                        CompileOptions options) {
  ValidationOptions vo;
  vo.allow_constants = false;
  vo.allow_reserved = true;
  auto report = validate_c2(theory, vocabulary, vo);
  if (!report.ok()) throw std::invalid_argument("invalid input: " + report.describe());
  for (const auto& p : vocabulary.predicates())
    if (p.arity > 2) throw std::invalid_argument("predicate arity above 2: " + p.name);

  RewriteState st(vocabulary, weights, options);
  Compiler comp(st);
  comp.push(theory);
  comp.run();

  CompiledProblem cp;
  std::vector<Formula> card = comp.card;
  // Cardinality atoms below quantifiers or mixed with ordinary atoms become nullary switches.
  std::vector<Formula> pieces;
  for (const auto& s : comp.fo2) {
    Formula g = s;
    if (contains_cardinality(g)) {
      std::function<Formula(const Formula&)> lift = [&](const Formula& f) -> Formula {
        if (f.is<node::Cardinality>()) {
          std::string key = "card|" + key_of(f);
          auto& memo = st.name_memo();
          std::string c;
          if (auto it = memo.find(key); it != memo.end()) {
            c = it->second;
          } else {
            c = st.fresh("c", 0);
            memo.emplace(key, c);
            Formula cond = iff(cardinality(c, Comparator::Eq, AffineBound{0, 1}), f);
            card.push_back(cond);
            st.record("cardinality-switch", {c}, {cond});
          }
          return nullary(c);
        }
        auto kids = children(f);
        if (kids.empty()) return f;
        for (auto& k : kids) k = lift(k);
        return with_children(f, kids);
      };
      g = lift(g);
    }
    auto sk = skolemize(g, st);
    pieces.insert(pieces.end(), sk.begin(), sk.end());
  }
  std::vector<Clause> clauses;
  for (const auto& p : pieces) {
    auto cl = to_universal_cnf(p, st);
    clauses.insert(clauses.end(), cl.begin(), cl.end());
  }
  st.record_clauses("clauses", {}, clauses);

  Formula cond = top();
  for (const auto& c : card) cond = sconj(cond, c);
  cp.cnf.vocabulary = st.vocabulary();
  cp.cnf.clauses = std::move(clauses);
  cp.weights = st.weights();
  cp.card_condition = cond;
  collect_psi(cond, cp.psi);
  cp.multiplier = comp.factors;
  cp.trace = st.trace();
  cp.min_domain = st.min_domain();
  cp.implied_lower_bounds = st.implied_lower_bounds();
  cp.source = theory;
  cp.source_vocabulary = vocabulary;
  cp.source_weights = weights;
  cp.options = options;
  return cp;
}

CompiledProblem compile(const ProblemFile& problem, CompileOptions options) {
  CompiledProblem cp = compile(problem.theory(), problem.vocabulary, problem.weights, options);
  cp.extra_multiplier = problem.multiplier;
  return cp;
}

std::string describe_trace(const CompiledProblem& cp) {
  std::ostringstream out;
  std::size_t i = 0;
  for (const auto& step : cp.trace) {
    out << ++i << ". " << step.rule;
    if (!step.predicates.empty()) {
      out << " [";
      for (std::size_t j = 0; j < step.predicates.size(); ++j) out << (j ? ", " : "") << step.predicates[j];
      out << "]";
    }
    if (step.factor) out << " factor " << step.factor->describe();
    out << "\n";
    for (const auto& f : step.formulas) out << "     " << f << "\n";
  }
  out << "cardinality: " << print_formula(cp.card_condition) << "\n";
  out << "multiplier:";
  if (cp.multiplier.empty() && cp.extra_multiplier.empty()) out << " 1";
  for (const auto& f : cp.multiplier) out << " " << f.describe();
  for (const auto& f : cp.extra_multiplier) out << " " << f.describe();
  out << "\n";
  return out.str();
}

}  // namespace c2wfomc
