#include "c2wfomc/oracle.hpp"

#include <algorithm>
#include <map>
#include <unordered_map>

#include "c2wfomc/mln.hpp"

namespace c2wfomc {

Grounding::Grounding(const Vocabulary& vocabulary, std::uint64_t n) : vocab_(vocabulary), n_(n) {
  if (vocab_.constants().size() > n)
    throw std::invalid_argument("domain of size " + std::to_string(n) + " cannot hold " +
                                std::to_string(vocab_.constants().size()) + " constants");
  for (const auto& p : vocab_.predicates()) {
    base_.push_back(total_);
    size_.push_back(grid_bound(n, p.arity));
    total_ += static_cast<std::size_t>(size_.back());
  }
}

std::size_t Grounding::predicate_index(std::string_view name) const {
  const auto& preds = vocab_.predicates();
  for (std::size_t i = 0; i < preds.size(); ++i)
    if (preds[i].name == name) return i;
  throw std::invalid_argument("unknown predicate '" + std::string(name) + "'");
}

std::size_t Grounding::atom(std::size_t predicate, const std::vector<std::uint64_t>& args) const {
  std::size_t offset = 0;
  for (auto a : args) {
    if (a >= n_) throw std::out_of_range("element outside the domain");
    offset = offset * static_cast<std::size_t>(n_) + static_cast<std::size_t>(a);
  }
  return base_[predicate] + offset;
}

std::uint64_t Grounding::constant_element(std::string_view name) const {
  const auto& cs = vocab_.constants();
  for (std::size_t i = 0; i < cs.size(); ++i)
    if (cs[i] == name) return i;
  throw std::invalid_argument("unknown constant '" + std::string(name) + "'");
}

std::string Grounding::describe_atom(std::size_t index) const {
  for (std::size_t p = 0; p < base_.size(); ++p) {
    if (index < base_[p] || index >= base_[p] + size_[p]) continue;
    const auto& pred = vocab_.predicates()[p];
    std::size_t offset = index - base_[p];
    std::vector<std::uint64_t> args(static_cast<std::size_t>(pred.arity));
    for (std::size_t i = args.size(); i-- > 0;) {
      args[i] = offset % n_;
      offset /= static_cast<std::size_t>(n_);
    }
    std::string out = pred.name + "(";
    for (std::size_t i = 0; i < args.size(); ++i) out += (i ? "," : "") + std::to_string(args[i]);
    return out + ")";
  }
  return "?";
}

void World::set(std::string_view predicate, const std::vector<std::uint64_t>& args, bool value) {
  truth[grounding->atom(grounding->predicate_index(predicate), args)] = value;
}

bool World::get(std::string_view predicate, const std::vector<std::uint64_t>& args) const {
  return truth[grounding->atom(grounding->predicate_index(predicate), args)];
}

struct CompiledFormula::Impl {
  enum class Op { True, False, Atom, Eq, Not, And, Or, Implies, Iff, Forall, Exists, Count, Card };
  struct Arg {
    bool is_var;
    std::size_t value;  // variable slot or element
  };
  struct Node {
    Op op;
    std::size_t pred = 0;
    std::vector<Arg> args;
    int lhs = -1, rhs = -1;
    std::size_t slot = 0;
    Comparator cmp = Comparator::Eq;
    std::int64_t k = 0;
  };

  std::vector<Node> nodes;
  int root = -1;
  std::size_t slots = 0;
  std::uint64_t n = 0;
  std::size_t free_count = 0;
  const Grounding* grounding = nullptr;
  std::vector<std::size_t> base;
  std::vector<std::uint64_t> size;

  int build(const Formula& f, std::map<std::string, std::size_t>& scope) {
    Node node;
    switch (f.kind()) {
      case Formula::Kind::Top: node.op = Op::True; break;
      case Formula::Kind::Bottom: node.op = Op::False; break;
      case Formula::Kind::Atom: {
        const auto& a = f.as<node::Atom>();
        node.op = Op::Atom;
        node.pred = grounding->predicate_index(a.predicate);
        if (static_cast<int>(a.args.size()) != grounding->vocabulary().predicates()[node.pred].arity)
          throw std::invalid_argument("arity mismatch for '" + a.predicate + "'");
        for (const auto& t : a.args) node.args.push_back(arg(t, scope));
        break;
      }
      case Formula::Kind::Equality: {
        const auto& e = f.as<node::Equality>();
        node.op = Op::Eq;
        node.args = {arg(e.lhs, scope), arg(e.rhs, scope)};
        break;
      }
      case Formula::Kind::Not:
        node.op = Op::Not;
        node.lhs = build(f.as<node::Not>().body, scope);
        break;
      case Formula::Kind::Binary: {
        const auto& b = f.as<node::Binary>();
        switch (b.op) {
          case Connective::And: node.op = Op::And; break;
          case Connective::Or: node.op = Op::Or; break;
          case Connective::Implies: node.op = Op::Implies; break;
          case Connective::Iff: node.op = Op::Iff; break;
        }
        node.lhs = build(b.lhs, scope);
        node.rhs = build(b.rhs, scope);
        break;
      }
      case Formula::Kind::Quantified:
      case Formula::Kind::Counting: {
        std::string var;
        Formula body;
        if (f.is<node::Quantified>()) {
          const auto& q = f.as<node::Quantified>();
          node.op = q.quantifier == Quantifier::Forall ? Op::Forall : Op::Exists;
          var = q.var;
          body = q.body;
        } else {
          const auto& c = f.as<node::Counting>();
          node.op = Op::Count;
          node.cmp = c.cmp;
          node.k = c.k;
          var = c.var;
          body = c.body;
        }
        node.slot = slots++;
        auto saved = scope.find(var) == scope.end() ? std::nullopt : std::optional<std::size_t>(scope[var]);
        scope[var] = node.slot;
        node.lhs = build(body, scope);
        if (saved) scope[var] = *saved;
        else scope.erase(var);
        break;
      }
      case Formula::Kind::Cardinality: {
        const auto& c = f.as<node::Cardinality>();
        node.op = Op::Card;
        node.pred = grounding->predicate_index(c.predicate);
        node.cmp = c.cmp;
        node.k = c.bound.resolve(n);
        break;
      }
    }
    nodes.push_back(std::move(node));
    return static_cast<int>(nodes.size()) - 1;
  }

  Arg arg(const Term& t, const std::map<std::string, std::size_t>& scope) const {
    if (!t.is_variable()) return {false, static_cast<std::size_t>(grounding->constant_element(t.name))};
    auto it = scope.find(t.name);
    if (it == scope.end()) throw std::invalid_argument("free variable '" + t.name + "'");
    return {true, it->second};
  }

  std::size_t element(const Arg& a, const std::vector<std::uint64_t>& env) const {
    return a.is_var ? static_cast<std::size_t>(env[a.value]) : a.value;
  }

  bool eval(int idx, const std::vector<bool>& truth, std::vector<std::uint64_t>& env) const {
    const Node& node = nodes[static_cast<std::size_t>(idx)];
    switch (node.op) {
      case Op::True: return true;
      case Op::False: return false;
      case Op::Atom: {
        std::size_t offset = 0;
        for (const auto& a : node.args) offset = offset * static_cast<std::size_t>(n) + element(a, env);
        return truth[base[node.pred] + offset];
      }
      case Op::Eq: return element(node.args[0], env) == element(node.args[1], env);
      case Op::Not: return !eval(node.lhs, truth, env);
      case Op::And: return eval(node.lhs, truth, env) && eval(node.rhs, truth, env);
      case Op::Or: return eval(node.lhs, truth, env) || eval(node.rhs, truth, env);
      case Op::Implies: return !eval(node.lhs, truth, env) || eval(node.rhs, truth, env);
      case Op::Iff: return eval(node.lhs, truth, env) == eval(node.rhs, truth, env);
      case Op::Forall:
        for (std::uint64_t e = 0; e < n; ++e) {
          env[node.slot] = e;
          if (!eval(node.lhs, truth, env)) return false;
        }
        return true;
      case Op::Exists:
        for (std::uint64_t e = 0; e < n; ++e) {
          env[node.slot] = e;
          if (eval(node.lhs, truth, env)) return true;
        }
        return false;
      case Op::Count: {
        std::int64_t count = 0;
        for (std::uint64_t e = 0; e < n; ++e) {
          env[node.slot] = e;
          if (eval(node.lhs, truth, env)) ++count;
        }
        return holds(count, node.cmp, node.k);
      }
      case Op::Card: {
        std::int64_t count = 0;
        std::size_t b = base[node.pred];
        for (std::size_t i = 0; i < size[node.pred]; ++i)
          if (truth[b + i]) ++count;
        return holds(count, node.cmp, node.k);
      }
    }
    return false;
  }
};

CompiledFormula::CompiledFormula(const Formula& f, const Grounding& grounding, std::vector<std::string> free_variables)
    : impl_(std::make_unique<Impl>()) {
  impl_->grounding = &grounding;
  impl_->n = grounding.domain_size();
  for (std::size_t p = 0; p < grounding.vocabulary().predicates().size(); ++p) {
    impl_->base.push_back(grounding.base(p));
    impl_->size.push_back(grounding.size(p));
  }
  std::map<std::string, std::size_t> scope;
  for (const auto& v : free_variables) scope[v] = impl_->slots++;
  impl_->free_count = free_variables.size();
  impl_->root = impl_->build(f, scope);
}

CompiledFormula::~CompiledFormula() = default;
CompiledFormula::CompiledFormula(CompiledFormula&&) noexcept = default;
CompiledFormula& CompiledFormula::operator=(CompiledFormula&&) noexcept = default;

bool CompiledFormula::evaluate(const std::vector<bool>& truth, const std::vector<std::uint64_t>& assignment) const {
  if (assignment.size() != impl_->free_count) throw std::invalid_argument("wrong number of free-variable values");
  std::vector<std::uint64_t> env(impl_->slots, 0);
  std::copy(assignment.begin(), assignment.end(), env.begin());
  return impl_->eval(impl_->root, truth, env);
}

std::uint64_t cardinality(std::string_view predicate, const World& world) {
  const Grounding& g = *world.grounding;
  std::size_t p = g.predicate_index(predicate);
  std::uint64_t count = 0;
  for (std::size_t i = 0; i < g.size(p); ++i)
    if (world.truth[g.base(p) + i]) ++count;
  return count;
}

bool satisfies(const World& world, const Formula& f) {
  if (!is_sentence(f)) throw std::invalid_argument("satisfies expects a sentence");
  return CompiledFormula(f, *world.grounding).evaluate(world.truth);
}

namespace {

std::uint64_t satisfied_assignments(const CompiledFormula& cf, const std::vector<bool>& truth, std::size_t arity,
                                    std::uint64_t n) {
  if (arity > 0 && n == 0) return 0;
  std::vector<std::uint64_t> assignment(arity, 0);
  std::uint64_t count = 0;
  while (true) {
    if (cf.evaluate(truth, assignment)) ++count;
    std::size_t i = 0;
    while (i < assignment.size() && ++assignment[i] == n) assignment[i++] = 0;
    if (i == assignment.size()) break;
  }
  return count;
}

}  // namespace

std::uint64_t count_groundings(const World& world, const Formula& f, const std::vector<std::string>& free_variables) {
  CompiledFormula cf(f, *world.grounding, free_variables);
  return satisfied_assignments(cf, world.truth, free_variables.size(), world.grounding->domain_size());
}

Rational world_weight(const World& world, const WeightMap& weights) {
  const Grounding& g = *world.grounding;
  Rational out = 1;
  for (std::size_t p = 0; p < g.vocabulary().predicates().size(); ++p) {
    const auto& w = weights.get(g.vocabulary().predicates()[p].name);
    std::uint64_t count = cardinality(g.vocabulary().predicates()[p].name, world);
    out *= pow(w.positive, count) * pow(w.negative, g.size(p) - count);
  }
  return out;
}

namespace {

void check_cap(const Grounding& g, std::size_t cap) {
  if (g.atom_count() > cap)
    throw OracleLimitError("oracle refused: " + std::to_string(g.atom_count()) + " ground atoms exceed the cap of " +
                           std::to_string(cap));
  if (g.atom_count() > 62) throw OracleLimitError("oracle refused: too many ground atoms for enumeration");
}

struct VectorHash {
  std::size_t operator()(const std::vector<std::uint32_t>& v) const {
    std::size_t h = 1469598103934665603ull;
    for (auto x : v) h = (h ^ x) * 1099511628211ull;
    return h;
  }
};

/// Enumerates all worlds in lexicographic atom order and tallies satisfying worlds by the
/// cardinality vector of every predicate.
std::unordered_map<std::vector<std::uint32_t>, Integer, VectorHash> tally(const Formula& f, const Grounding& g,
                                                                           std::size_t cap) {
  check_cap(g, cap);
  CompiledFormula cf(f, g);
  std::size_t atoms = g.atom_count();
  std::size_t preds = g.vocabulary().predicates().size();
  std::vector<std::size_t> owner(atoms);
  for (std::size_t p = 0; p < preds; ++p)
    for (std::size_t i = 0; i < g.size(p); ++i) owner[g.base(p) + i] = p;

  std::unordered_map<std::vector<std::uint32_t>, std::uint64_t, VectorHash> counts;
  std::vector<bool> truth(atoms, false);
  std::vector<std::uint32_t> card(preds, 0);
  std::uint64_t total = std::uint64_t{1} << atoms;
  for (std::uint64_t mask = 0; mask < total; ++mask) {
    if (mask) {
      // increment as a binary counter whose most significant bit is atom 0
      for (std::size_t i = atoms; i-- > 0;) {
        if (truth[i]) {
          truth[i] = false;
          --card[owner[i]];
        } else {
          truth[i] = true;
          ++card[owner[i]];
          break;
        }
      }
    }
    if (cf.evaluate(truth)) ++counts[card];
  }
  std::unordered_map<std::vector<std::uint32_t>, Integer, VectorHash> out;
  for (const auto& [k, v] : counts) out.emplace(k, Integer(std::to_string(v)));
  return out;
}

Rational vector_weight(const std::vector<std::uint32_t>& card, const Grounding& g, const WeightMap& weights) {
  Rational w = 1;
  for (std::size_t p = 0; p < card.size(); ++p) {
    const auto& wp = weights.get(g.vocabulary().predicates()[p].name);
    w *= pow(wp.positive, card[p]) * pow(wp.negative, g.size(p) - card[p]);
  }
  return w;
}

}  // namespace

Rational brute_wfomc(const Formula& f, const Vocabulary& vocabulary, const WeightMap& weights, std::uint64_t n,
                     std::size_t atom_cap) {
  Grounding g(vocabulary, n);
  Rational sum = 0;
  for (const auto& [card, count] : tally(f, g, atom_cap)) sum += Rational(count) * vector_weight(card, g, weights);
  return sum;
}

WmcTable brute_wmc_table(const std::vector<std::string>& psi, const Formula& f, const Vocabulary& vocabulary,
                         const WeightMap& weights, std::uint64_t n, std::size_t atom_cap) {
  Grounding g(vocabulary, n);
  std::vector<std::size_t> idx;
  std::vector<std::uint64_t> bounds;
  for (const auto& name : psi) {
    idx.push_back(g.predicate_index(name));
    bounds.push_back(g.size(idx.back()));
  }
  WmcTable table(psi, bounds);
  std::vector<std::uint64_t> key(psi.size());
  for (const auto& [card, count] : tally(f, g, atom_cap)) {
    for (std::size_t i = 0; i < idx.size(); ++i) key[i] = card[idx[i]];
    table.at(key) += Rational(count) * vector_weight(card, g, weights);
  }
  return table;
}

Rational brute_mln_partition(const std::vector<MlnFormula>& mln, const Vocabulary& vocabulary, std::uint64_t n,
                             const std::optional<Formula>& query, std::size_t atom_cap) {
  auto g = std::make_shared<const Grounding>(vocabulary, n);
  check_cap(*g, atom_cap);
  struct Soft {
    CompiledFormula formula;
    std::vector<std::string> vars;
    Rational multiplier;
  };
  std::vector<Soft> soft;
  std::vector<CompiledFormula> hard;
  for (const auto& m : mln) {
    auto fv = free_variables(m.formula);
    std::vector<std::string> vars(fv.begin(), fv.end());
    if (m.multiplier) {
      soft.push_back({CompiledFormula(m.formula, *g, vars), vars, *m.multiplier});
    } else {
      Formula closed = m.formula;
      for (auto it = vars.rbegin(); it != vars.rend(); ++it) closed = forall(*it, closed);
      hard.emplace_back(closed, *g);
    }
  }
  std::optional<CompiledFormula> q;
  if (query) q.emplace(*query, *g);

  std::size_t atoms = g->atom_count();
  std::vector<bool> truth(atoms);
  // tally exponent vectors to keep the rational work proportional to distinct vectors
  std::map<std::vector<std::uint64_t>, std::uint64_t> tallies;
  for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << atoms); ++mask) {
    for (std::size_t i = 0; i < atoms; ++i) truth[i] = (mask >> (atoms - 1 - i)) & 1;
    bool ok = std::all_of(hard.begin(), hard.end(), [&](const CompiledFormula& h) { return h.evaluate(truth); });
    if (!ok || (q && !q->evaluate(truth))) continue;
    std::vector<std::uint64_t> exps;
    for (const auto& s : soft) {
      exps.push_back(satisfied_assignments(s.formula, truth, s.vars.size(), n));
    }
    ++tallies[exps];
  }
  Rational z = 0;
  for (const auto& [exps, count] : tallies) {
    Rational w = Rational(Integer(std::to_string(count)));
    for (std::size_t j = 0; j < soft.size(); ++j) w *= pow(soft[j].multiplier, exps[j]);
    z += w;
  }
  return z;
}

}  // namespace c2wfomc
