#include "c2wfomc/ast.hpp"

#include <sstream>
#include <stdexcept>

namespace c2wfomc {

std::string_view to_string(Comparator cmp) {
  switch (cmp) {
    case Comparator::Eq: return "=";
    case Comparator::Le: return "<=";
    case Comparator::Ge: return ">=";
    case Comparator::Lt: return "<";
    case Comparator::Gt: return ">";
  }
  return "?";
}

bool holds(std::int64_t lhs, Comparator cmp, std::int64_t rhs) {
  switch (cmp) {
    case Comparator::Eq: return lhs == rhs;
    case Comparator::Le: return lhs <= rhs;
    case Comparator::Ge: return lhs >= rhs;
    case Comparator::Lt: return lhs < rhs;
    case Comparator::Gt: return lhs > rhs;
  }
  return false;
}

Formula::Formula() : Formula(top()) {}

bool operator==(const Formula& a, const Formula& b) {
  if (a.node_ == b.node_) return true;
  return a.node_->value == b.node_->value;
}

Formula top() {
  static const Formula instance = Formula::make(node::Top{});
  return instance;
}

Formula bottom() {
  static const Formula instance = Formula::make(node::Bottom{});
  return instance;
}

Formula atom(std::string predicate, std::vector<Term> args) {
  return Formula::make(node::Atom{std::move(predicate), std::move(args)});
}

Formula atom(std::string predicate, std::initializer_list<std::string_view> variables) {
  std::vector<Term> args;
  for (auto v : variables) args.push_back(Term::variable(std::string(v)));
  return atom(std::move(predicate), std::move(args));
}

Formula equality(Term lhs, Term rhs) {
  return Formula::make(node::Equality{std::move(lhs), std::move(rhs)});
}

Formula negate(Formula f) { return Formula::make(node::Not{std::move(f)}); }

Formula binary(Connective op, Formula lhs, Formula rhs) {
  return Formula::make(node::Binary{op, std::move(lhs), std::move(rhs)});
}

Formula conj(Formula lhs, Formula rhs) { return binary(Connective::And, std::move(lhs), std::move(rhs)); }
Formula disj(Formula lhs, Formula rhs) { return binary(Connective::Or, std::move(lhs), std::move(rhs)); }
Formula implies(Formula lhs, Formula rhs) {
  return binary(Connective::Implies, std::move(lhs), std::move(rhs));
}
Formula iff(Formula lhs, Formula rhs) { return binary(Connective::Iff, std::move(lhs), std::move(rhs)); }

Formula forall(std::string var, Formula body) {
  return Formula::make(node::Quantified{Quantifier::Forall, std::move(var), std::move(body)});
}

Formula exists(std::string var, Formula body) {
  return Formula::make(node::Quantified{Quantifier::Exists, std::move(var), std::move(body)});
}

Formula count_exists(Comparator cmp, std::uint32_t k, std::string var, Formula body) {
  if (cmp != Comparator::Eq && cmp != Comparator::Le && cmp != Comparator::Ge)
    throw std::invalid_argument("counting quantifiers take =, <= or >=");
  return Formula::make(node::Counting{cmp, k, std::move(var), std::move(body)});
}

Formula cardinality(std::string predicate, Comparator cmp, AffineBound bound) {
  return Formula::make(node::Cardinality{std::move(predicate), cmp, bound});
}

Formula conj_all(const std::vector<Formula>& parts) {
  if (parts.empty()) return top();
  Formula out = parts.front();
  for (std::size_t i = 1; i < parts.size(); ++i) out = conj(out, parts[i]);
  return out;
}

Formula disj_all(const std::vector<Formula>& parts) {
  if (parts.empty()) return bottom();
  Formula out = parts.front();
  for (std::size_t i = 1; i < parts.size(); ++i) out = disj(out, parts[i]);
  return out;
}

std::vector<Formula> children(const Formula& f) {
  switch (f.kind()) {
    case Formula::Kind::Not: return {f.as<node::Not>().body};
    case Formula::Kind::Binary: {
      const auto& b = f.as<node::Binary>();
      return {b.lhs, b.rhs};
    }
    case Formula::Kind::Quantified: return {f.as<node::Quantified>().body};
    case Formula::Kind::Counting: return {f.as<node::Counting>().body};
    default: return {};
  }
}

Formula with_children(const Formula& f, const std::vector<Formula>& kids) {
  switch (f.kind()) {
    case Formula::Kind::Not: return negate(kids.at(0));
    case Formula::Kind::Binary: return binary(f.as<node::Binary>().op, kids.at(0), kids.at(1));
    case Formula::Kind::Quantified: {
      const auto& q = f.as<node::Quantified>();
      return Formula::make(node::Quantified{q.quantifier, q.var, kids.at(0)});
    }
    case Formula::Kind::Counting: {
      const auto& c = f.as<node::Counting>();
      return Formula::make(node::Counting{c.cmp, c.k, c.var, kids.at(0)});
    }
    default: return f;
  }
}

namespace {

void collect_free(const Formula& f, std::set<std::string>& bound, std::set<std::string>& out) {
  auto visit_term = [&](const Term& t) {
    if (t.is_variable() && !bound.contains(t.name)) out.insert(t.name);
  };
  switch (f.kind()) {
    case Formula::Kind::Atom:
      for (const auto& t : f.as<node::Atom>().args) visit_term(t);
      return;
    case Formula::Kind::Equality:
      visit_term(f.as<node::Equality>().lhs);
      visit_term(f.as<node::Equality>().rhs);
      return;
    case Formula::Kind::Quantified:
    case Formula::Kind::Counting: {
      const std::string& var = f.is<node::Quantified>() ? f.as<node::Quantified>().var
                                                         : f.as<node::Counting>().var;
      bool inserted = bound.insert(var).second;
      collect_free(children(f).front(), bound, out);
      if (inserted) bound.erase(var);
      return;
    }
    default:
      for (const auto& c : children(f)) collect_free(c, bound, out);
  }
}

template <class Fn>
bool any_node(const Formula& f, const Fn& pred) {
  if (pred(f)) return true;
  for (const auto& c : children(f))
    if (any_node(c, pred)) return true;
  return false;
}

}  // namespace

std::set<std::string> free_variables(const Formula& f) {
  std::set<std::string> bound, out;
  collect_free(f, bound, out);
  return out;
}

bool is_sentence(const Formula& f) { return free_variables(f).empty(); }

std::map<std::string, int> predicates_used(const Formula& f) {
  std::map<std::string, int> out;
  any_node(f, [&](const Formula& g) {
    if (g.is<node::Atom>()) {
      const auto& a = g.as<node::Atom>();
      out.emplace(a.predicate, static_cast<int>(a.args.size()));
    } else if (g.is<node::Cardinality>()) {
      out.emplace(g.as<node::Cardinality>().predicate, -1);
    }
    return false;
  });
  return out;
}

bool contains_counting(const Formula& f) {
  return any_node(f, [](const Formula& g) { return g.is<node::Counting>(); });
}

bool contains_quantifier(const Formula& f) {
  return any_node(f, [](const Formula& g) { return g.is<node::Quantified>() || g.is<node::Counting>(); });
}

bool contains_cardinality(const Formula& f) {
  return any_node(f, [](const Formula& g) { return g.is<node::Cardinality>(); });
}

bool contains_constant(const Formula& f) {
  auto has_const = [](const Term& t) { return !t.is_variable(); };
  return any_node(f, [&](const Formula& g) {
    if (g.is<node::Atom>()) {
      for (const auto& t : g.as<node::Atom>().args)
        if (has_const(t)) return true;
    } else if (g.is<node::Equality>()) {
      return has_const(g.as<node::Equality>().lhs) || has_const(g.as<node::Equality>().rhs);
    }
    return false;
  });
}

namespace {

template <class TermFn, class NameFn, class PredFn>
Formula map_formula(const Formula& f, const TermFn& term_fn, const NameFn& var_fn, const PredFn& pred_fn) {
  switch (f.kind()) {
    case Formula::Kind::Atom: {
      const auto& a = f.as<node::Atom>();
      std::vector<Term> args;
      args.reserve(a.args.size());
      for (const auto& t : a.args) args.push_back(term_fn(t));
      return atom(pred_fn(a.predicate), std::move(args));
    }
    case Formula::Kind::Equality:
      return equality(term_fn(f.as<node::Equality>().lhs), term_fn(f.as<node::Equality>().rhs));
    case Formula::Kind::Cardinality: {
      const auto& c = f.as<node::Cardinality>();
      return cardinality(pred_fn(c.predicate), c.cmp, c.bound);
    }
    case Formula::Kind::Quantified: {
      const auto& q = f.as<node::Quantified>();
      return Formula::make(node::Quantified{q.quantifier, var_fn(q.var),
                                            map_formula(q.body, term_fn, var_fn, pred_fn)});
    }
    case Formula::Kind::Counting: {
      const auto& c = f.as<node::Counting>();
      return Formula::make(
          node::Counting{c.cmp, c.k, var_fn(c.var), map_formula(c.body, term_fn, var_fn, pred_fn)});
    }
    case Formula::Kind::Not:
    case Formula::Kind::Binary: {
      std::vector<Formula> kids;
      for (const auto& c : children(f)) kids.push_back(map_formula(c, term_fn, var_fn, pred_fn));
      return with_children(f, kids);
    }
    default: return f;
  }
}

}  // namespace

Formula rename_variables(const Formula& f, const std::map<std::string, std::string>& mapping) {
  auto rename = [&](const std::string& v) {
    auto it = mapping.find(v);
    return it == mapping.end() ? v : it->second;
  };
  auto term_fn = [&](const Term& t) { return t.is_variable() ? Term::variable(rename(t.name)) : t; };
  auto pred_fn = [](const std::string& p) { return p; };
  return map_formula(f, term_fn, rename, pred_fn);
}

Formula swap_xy(const Formula& f) { return rename_variables(f, {{"x", "y"}, {"y", "x"}}); }

Formula rename_predicates(const Formula& f, const std::map<std::string, std::string>& mapping) {
  auto term_fn = [](const Term& t) { return t; };
  auto var_fn = [](const std::string& v) { return v; };
  auto pred_fn = [&](const std::string& p) {
    auto it = mapping.find(p);
    return it == mapping.end() ? p : it->second;
  };
  return map_formula(f, term_fn, var_fn, pred_fn);
}

void Vocabulary::add_predicate(Predicate p) {
  if (find(p.name)) throw std::invalid_argument("duplicate predicate '" + p.name + "'");
  if (p.arity < 0) throw std::invalid_argument("negative arity for '" + p.name + "'");
  predicates_.push_back(std::move(p));
}

void Vocabulary::add_constant(std::string name) {
  if (has_constant(name)) throw std::invalid_argument("duplicate constant '" + name + "'");
  constants_.push_back(std::move(name));
}

const Predicate* Vocabulary::find(std::string_view name) const {
  for (const auto& p : predicates_)
    if (p.name == name) return &p;
  return nullptr;
}

bool Vocabulary::has_constant(std::string_view name) const {
  for (const auto& c : constants_)
    if (c == name) return true;
  return false;
}

const WeightPair& WeightMap::get(std::string_view predicate) const {
  static const WeightPair unit{};
  auto it = entries_.find(predicate);
  return it == entries_.end() ? unit : it->second;
}

void WeightMap::set(std::string predicate, Rational positive, Rational negative) {
  positive.canonicalize();
  negative.canonicalize();
  entries_[std::move(predicate)] = WeightPair{std::move(positive), std::move(negative)};
}

std::string ValidationReport::describe() const {
  std::ostringstream out;
  for (const auto& issue : issues) out << issue.location << ": " << issue.reason << "\n";
  return out.str();
}

namespace {

std::string node_label(const Formula& f) {
  switch (f.kind()) {
    case Formula::Kind::Top: return "true";
    case Formula::Kind::Bottom: return "false";
    case Formula::Kind::Atom: return "atom " + f.as<node::Atom>().predicate;
    case Formula::Kind::Equality: return "equality";
    case Formula::Kind::Not: return "not";
    case Formula::Kind::Binary:
      switch (f.as<node::Binary>().op) {
        case Connective::And: return "and";
        case Connective::Or: return "or";
        case Connective::Implies: return "implies";
        case Connective::Iff: return "iff";
      }
      return "binary";
    case Formula::Kind::Quantified:
      return (f.as<node::Quantified>().quantifier == Quantifier::Forall ? "forall " : "exists ") +
             f.as<node::Quantified>().var;
    case Formula::Kind::Counting: {
      const auto& c = f.as<node::Counting>();
      return "exists[" + std::string(to_string(c.cmp)) + std::to_string(c.k) + "] " + c.var;
    }
    case Formula::Kind::Cardinality: return "|" + f.as<node::Cardinality>().predicate + "|";
  }
  return "?";
}

class Validator {
 public:
  Validator(const Vocabulary& v, ValidationOptions o, ValidationReport& r) : vocab_(v), opts_(o), report_(r) {}

  void run(const Formula& f, const std::string& path) {
    std::string here = path.empty() ? node_label(f) : path + " > " + node_label(f);
    switch (f.kind()) {
      case Formula::Kind::Atom: {
        const auto& a = f.as<node::Atom>();
        check_predicate(a.predicate, static_cast<int>(a.args.size()), here);
        for (const auto& t : a.args) check_term(t, here);
        return;
      }
      case Formula::Kind::Equality:
        check_term(f.as<node::Equality>().lhs, here);
        check_term(f.as<node::Equality>().rhs, here);
        return;
      case Formula::Kind::Cardinality:
        check_predicate(f.as<node::Cardinality>().predicate, -1, here);
        return;
      case Formula::Kind::Quantified: check_variable(f.as<node::Quantified>().var, here); break;
      case Formula::Kind::Counting: check_variable(f.as<node::Counting>().var, here); break;
      default: break;
    }
    for (const auto& c : children(f)) run(c, here);
  }

 private:
  void issue(const std::string& where, std::string why) { report_.issues.push_back({where, std::move(why)}); }

  void check_variable(const std::string& v, const std::string& where) {
    if (v != "x" && v != "y") issue(where, "variable '" + v + "' outside {x, y}");
  }

  void check_term(const Term& t, const std::string& where) {
    if (t.is_variable()) {
      check_variable(t.name, where);
    } else if (!opts_.allow_constants) {
      issue(where, "constant '" + t.name + "' not allowed here");
    } else if (!vocab_.has_constant(t.name)) {
      issue(where, "undeclared constant '" + t.name + "'");
    }
  }

  void check_predicate(const std::string& name, int used_arity, const std::string& where) {
    if (!opts_.allow_reserved && is_reserved_name(name)) issue(where, "reserved name '" + name + "'");
    const Predicate* p = vocab_.find(name);
    if (!p) {
      issue(where, "undeclared predicate '" + name + "'");
      return;
    }
    if (p->arity > 2) issue(where, "predicate '" + name + "' has arity " + std::to_string(p->arity) + " > 2");
    if (used_arity >= 0 && used_arity != p->arity)
      issue(where, "predicate '" + name + "' used with " + std::to_string(used_arity) +
                       " arguments, declared arity " + std::to_string(p->arity));
  }

  const Vocabulary& vocab_;
  ValidationOptions opts_;
  ValidationReport& report_;
};

}  // namespace

ValidationReport validate_c2(const Formula& f, const Vocabulary& vocabulary, ValidationOptions options) {
  ValidationReport report;
  Validator(vocabulary, options, report).run(f, "");
  if (options.require_sentence) {
    for (const auto& v : free_variables(f)) report.issues.push_back({node_label(f), "free variable '" + v + "'"});
  }
  if (!options.allow_reserved) {
    for (const auto& p : vocabulary.predicates())
      if (is_reserved_name(p.name)) report.issues.push_back({"vocabulary", "reserved name '" + p.name + "'"});
  }
  return report;
}

FreshNames::FreshNames(const Vocabulary& existing) {
  for (const auto& p : existing.predicates()) used_.insert(p.name);
}

Predicate FreshNames::fresh_predicate(std::string_view base, int arity) {
  int& counter = counters_[std::string(base)];
  std::string name;
  do {
    name = std::string(kReservedPrefix) + std::string(base) + std::to_string(++counter);
  } while (used_.contains(name));
  used_.insert(name);
  return Predicate{std::move(name), arity};
}

}  // namespace c2wfomc
