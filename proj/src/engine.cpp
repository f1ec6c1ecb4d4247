#include "c2wfomc/engine.hpp"

#include "c2wfomc/table.hpp"

#include <algorithm>
#include <atomic>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

namespace c2wfomc {

Formula literal_to_formula(const Literal& l) {
  Formula f;
  if (l.predicate.empty()) {
    f = equality(Term::variable(l.args.at(0)), Term::variable(l.args.at(1)));
  } else {
    std::vector<Term> args;
    for (const auto& a : l.args) args.push_back(Term::variable(a));
    f = atom(l.predicate, std::move(args));
  }
  return l.positive ? f : negate(f);
}

Formula clause_to_formula(const Clause& c) {
  std::vector<Formula> parts;
  for (const auto& l : c.literals) parts.push_back(literal_to_formula(l));
  Formula body = disj_all(parts);
  return c.universal ? forall("x", forall("y", body)) : body;
}

Formula cnf_to_formula(const Cnf& cnf) {
  std::vector<Formula> parts;
  for (const auto& c : cnf.clauses) parts.push_back(clause_to_formula(c));
  return conj_all(parts);
}

std::string print_clause(const Clause& c) {
  std::ostringstream out;
  if (c.universal) out << "forall x,y: ";
  if (c.literals.empty()) out << "false";
  for (std::size_t i = 0; i < c.literals.size(); ++i) {
    const auto& l = c.literals[i];
    if (i) out << " | ";
    if (l.predicate.empty()) {
      out << l.args.at(0) << (l.positive ? " = " : " != ") << l.args.at(1);
      continue;
    }
    if (!l.positive) out << "~";
    out << l.predicate << "(";
    for (std::size_t k = 0; k < l.args.size(); ++k) out << (k ? "," : "") << l.args[k];
    out << ")";
  }
  return out.str();
}

namespace {

constexpr std::size_t kMaxCellAtoms = 62;
constexpr std::size_t kMaxNullary = 24;
constexpr std::size_t kMaxBinarySymbolic = 39;

// Compiled literal. var ids: 0 = x, 1 = y.
struct CLit {
  enum Kind : std::uint8_t { Nullary, Unary, Binary, Eq } kind;
  std::size_t slot = 0;  // nullary index / unary index / binary index
  std::uint8_t v1 = 0, v2 = 0;
  bool positive = true;
};

struct CClause {
  std::vector<CLit> lits;
  bool universal = true;
};

// Polynomial in the binary symbolic predicates, exponents 0..2 packed base 3.
using PairPoly = std::map<std::uint64_t, Rational>;

struct PredSlot {
  std::string name;
  int arity = 0;
  int symbolic = -1;       // index into symbolic list
  int binary_symbolic = -1;  // index among symbolic binary predicates
  WeightPair weight;       // unused when symbolic
};

struct CellData {
  std::uint64_t bits = 0;  // cell atoms: unary predicates then binary reflexive atoms
  Rational coef;
  std::vector<std::pair<int, bool>> symbolic;  // (symbolic index, truth)
};

struct Context {
  std::uint64_t bits = 0;
  bool propositional_ok = true;
  Rational coef;
  std::vector<std::pair<int, bool>> symbolic;
  std::vector<CellData> cells;
  // Cells whose pair-table rows coincide are summed into one class.
  std::vector<std::size_t> cell_class;
  std::vector<std::vector<std::size_t>> members;
  std::vector<std::size_t> class_table;  // classes^2, index into tables
  std::size_t table(std::size_t cell_i, std::size_t cell_j) const {
    return class_table[cell_class[cell_i] * members.size() + cell_class[cell_j]];
  }
};

std::uint64_t pow3(std::size_t e) {
  std::uint64_t r = 1;
  for (std::size_t i = 0; i < e; ++i) r *= 3;
  return r;
}

// Lexicographic literal encoding for residual propositional clause sets: +-(var+1).
using PClause = std::vector<int>;

template <class T>
T ipow(T base, std::uint64_t e) {
  T out(1);
  while (e) {
    if (e & 1) out *= base;
    e >>= 1;
    if (e) base *= base;
  }
  return out;
}

// Sum over compositions of n into p parts; only classes with a positive count are visited, so
// the work per composition is proportional to its number of non-empty parts.
template <class T>
T composition_sum(std::uint64_t n, const std::vector<T>& cw, const std::vector<std::vector<T>>& r, bool prune,
                  std::uint64_t& terms) {
  const std::size_t p = cw.size();
  terms = 0;
  if (n == 0) return T(1);
  if (p == 0) return T(0);
  const T zero(0);
  std::vector<std::vector<T>> binom(n + 1, std::vector<T>(n + 1, zero));
  for (std::uint64_t a = 0; a <= n; ++a) {
    binom[a][0] = T(1);
    for (std::uint64_t b = 1; b <= a; ++b) binom[a][b] = binom[a - 1][b - 1] + (b <= a - 1 ? binom[a - 1][b] : zero);
  }
  std::vector<bool> cw_zero(p), self_zero(p);
  for (std::size_t i = 0; i < p; ++i) {
    cw_zero[i] = cw[i] == zero;
    self_zero[i] = r[i][i] == zero;
  }
  std::vector<std::pair<std::size_t, std::uint64_t>> active;  // (class, count)
  T total(0);

  std::function<void(std::size_t, std::uint64_t, const T&)> dfs = [&](std::size_t start, std::uint64_t remaining,
                                                                      const T& prod) {
    if (remaining == 0) {
      ++terms;
      total += prod;
      return;
    }
    for (std::size_t c = start; c < p; ++c) {
      if (prune) {
        if (cw_zero[c]) continue;
        bool blocked = false;
        for (const auto& [j, m] : active) blocked = blocked || r[j][c] == zero;
        if (blocked) continue;
      }
      for (std::uint64_t m = 1; m <= remaining; ++m) {
        if (m > 1 && prune && self_zero[c]) break;
        T factor = binom[remaining][m] * ipow(cw[c], m) * ipow(r[c][c], m * (m - 1) / 2);
        for (const auto& [j, mj] : active) factor *= ipow(r[j][c], mj * m);
        active.emplace_back(c, m);
        dfs(c + 1, remaining - m, prod * factor);
        active.pop_back();
      }
    }
  };
  dfs(0, n, T(1));
  return total;
}

}  // namespace

struct Fo2Engine::Impl {
  EngineOptions options;
  std::vector<std::string> symbolic;
  std::vector<PredSlot> nullary, unary, binary;
  std::vector<PredSlot> free_preds;
  std::vector<CClause> clauses;
  std::vector<Context> contexts;
  std::vector<PairPoly> tables;
  std::map<std::vector<PClause>, std::size_t> table_index;
  std::map<PairPoly, std::size_t> poly_index;  // residual sets with equal weight share one table
  std::size_t binary_symbolic_count = 0;
  std::uint64_t pair_relevant = 0;  // cell atoms that occur in clauses linking two elements
  mutable std::atomic<std::uint64_t> last_terms{0};

  std::size_t cell_atoms() const { return unary.size() + binary.size(); }

  void build(const Cnf& cnf, const WeightMap& weights) {
    std::set<std::string> used;
    for (const auto& c : cnf.clauses)
      for (const auto& l : c.literals)
        if (!l.predicate.empty()) used.insert(l.predicate);
    std::map<std::string, int> sym_index;
    for (std::size_t i = 0; i < symbolic.size(); ++i) {
      if (!cnf.vocabulary.find(symbolic[i])) throw std::invalid_argument("symbolic predicate not in vocabulary: " + symbolic[i]);
      if (!sym_index.emplace(symbolic[i], static_cast<int>(i)).second)
        throw std::invalid_argument("duplicate symbolic predicate: " + symbolic[i]);
    }
    std::map<std::string, std::pair<int, std::size_t>> where;  // name -> (arity, slot)
    for (const auto& p : cnf.vocabulary.predicates()) {
      PredSlot s{p.name, p.arity, -1, -1, weights.get(p.name)};
      if (auto it = sym_index.find(p.name); it != sym_index.end()) s.symbolic = it->second;
      if (options.factor_free_predicates && !used.count(p.name)) {
        free_preds.push_back(s);
        continue;
      }
      auto& list = p.arity == 0 ? nullary : p.arity == 1 ? unary : binary;
      if (p.arity == 2 && s.symbolic >= 0) s.binary_symbolic = static_cast<int>(binary_symbolic_count++);
      where[p.name] = {p.arity, list.size()};
      list.push_back(s);
    }
    if (p_arity_too_large(cnf)) throw std::invalid_argument("engine supports arity <= 2");
    if (cell_atoms() > kMaxCellAtoms) throw std::length_error("too many cell atoms for the cell enumerator");
    if (nullary.size() > kMaxNullary) throw std::length_error("too many nullary predicates");
    if (binary.size() * 2 > 64 || binary_symbolic_count > kMaxBinarySymbolic)
      throw std::length_error("too many binary predicates for pair tables");

    auto var_id = [](const std::string& v) -> std::uint8_t {
      if (v == "x") return 0;
      if (v == "y") return 1;
      throw std::invalid_argument("clause variable must be x or y, got " + v);
    };
    for (const auto& c : cnf.clauses) {
      CClause cc;
      cc.universal = c.universal;
      for (const auto& l : c.literals) {
        CLit cl;
        cl.positive = l.positive;
        if (l.predicate.empty()) {
          if (l.args.size() != 2) throw std::invalid_argument("equality literal needs two arguments");
          cl.kind = CLit::Eq;
          cl.v1 = var_id(l.args[0]);
          cl.v2 = var_id(l.args[1]);
        } else {
          auto it = where.find(l.predicate);
          if (it == where.end()) throw std::invalid_argument("clause uses undeclared predicate " + l.predicate);
          auto [arity, slot] = it->second;
          if (static_cast<int>(l.args.size()) != arity)
            throw std::invalid_argument("arity mismatch for " + l.predicate);
          cl.slot = slot;
          cl.kind = arity == 0 ? CLit::Nullary : arity == 1 ? CLit::Unary : CLit::Binary;
          if (arity >= 1) cl.v1 = var_id(l.args[0]);
          if (arity == 2) cl.v2 = var_id(l.args[1]);
        }
        if (!c.universal && cl.kind != CLit::Nullary)
          throw std::invalid_argument("propositional clause may only contain nullary atoms");
        cc.lits.push_back(cl);
      }
      clauses.push_back(std::move(cc));
    }
    for (const auto& c : clauses) {
      if (!c.universal) continue;
      bool side[2] = {false, false}, linking = false;
      std::uint64_t atoms = 0;
      for (const auto& l : c.lits) {
        switch (l.kind) {
          case CLit::Nullary: break;
          case CLit::Eq: linking = linking || l.v1 != l.v2; break;
          case CLit::Unary:
            side[l.v1] = true;
            atoms |= std::uint64_t{1} << l.slot;
            break;
          case CLit::Binary:
            if (l.v1 != l.v2) {
              linking = true;
            } else {
              side[l.v1] = true;
              atoms |= std::uint64_t{1} << (unary.size() + l.slot);
            }
            break;
        }
      }
      if (linking || (side[0] && side[1])) pair_relevant |= atoms;
    }

    for (std::uint64_t ctx = 0; ctx < (std::uint64_t{1} << nullary.size()); ++ctx) build_context(ctx);
  }

  static bool p_arity_too_large(const Cnf& cnf) {
    for (const auto& p : cnf.vocabulary.predicates())
      if (p.arity > 2 || p.arity < 0) return true;
    return false;
  }

  void build_context(std::uint64_t bits) {
    Context ctx;
    ctx.bits = bits;
    ctx.coef = 1;
    for (std::size_t i = 0; i < nullary.size(); ++i) {
      bool v = (bits >> i) & 1;
      if (nullary[i].symbolic >= 0)
        ctx.symbolic.emplace_back(nullary[i].symbolic, v);
      else
        ctx.coef *= v ? nullary[i].weight.positive : nullary[i].weight.negative;
    }
    for (const auto& c : clauses) {
      if (c.universal) continue;
      bool sat = false;
      for (const auto& l : c.lits) sat = sat || (((bits >> l.slot) & 1) == l.positive);
      if (!sat) ctx.propositional_ok = false;
    }
    if (!ctx.propositional_ok) return;  // contributes nothing at any domain size

    // Cell constraints as clauses over cell atoms.
    std::vector<PClause> cell_clauses;
    bool cells_impossible = false;
    for (const auto& c : clauses) {
      if (!c.universal) continue;
      PClause pc;
      bool sat = false;
      for (const auto& l : c.lits) {
        switch (l.kind) {
          case CLit::Nullary: sat = sat || (((bits >> l.slot) & 1) == l.positive); break;
          case CLit::Eq: sat = sat || l.positive; break;
          case CLit::Unary: pc.push_back(l.positive ? int(l.slot) + 1 : -(int(l.slot) + 1)); break;
          case CLit::Binary: {
            int v = int(unary.size() + l.slot) + 1;
            pc.push_back(l.positive ? v : -v);
            break;
          }
        }
      }
      if (sat) continue;
      std::sort(pc.begin(), pc.end());
      pc.erase(std::unique(pc.begin(), pc.end()), pc.end());
      bool taut = false;
      for (std::size_t i = 0; i + 1 < pc.size(); ++i)
        for (std::size_t j = i + 1; j < pc.size(); ++j) taut = taut || pc[i] == -pc[j];
      if (taut) continue;
      if (pc.empty()) cells_impossible = true;
      cell_clauses.push_back(std::move(pc));
    }
    if (!cells_impossible) enumerate_cell_models(cell_clauses, ctx);

    classify(ctx);
    contexts.push_back(std::move(ctx));
  }

  // Cells equal on the pair-relevant atoms share every pair table; groups with identical rows
  // are then merged as well.
  void classify(Context& ctx) {
    const std::size_t p = ctx.cells.size();
    std::map<std::uint64_t, std::size_t> group_of;
    std::vector<std::uint64_t> group_bits;
    std::vector<std::size_t> cell_group(p);
    for (std::size_t i = 0; i < p; ++i) {
      std::uint64_t key = ctx.cells[i].bits & pair_relevant;
      auto [it, inserted] = group_of.emplace(key, group_bits.size());
      if (inserted) group_bits.push_back(ctx.cells[i].bits);
      cell_group[i] = it->second;
    }
    const std::size_t g = group_bits.size();
    std::vector<std::size_t> gt(g * g);
    for (std::size_t i = 0; i < g; ++i)
      for (std::size_t j = i; j < g; ++j)
        gt[i * g + j] = gt[j * g + i] = pair_table_for(ctx.bits, group_bits[i], group_bits[j]);
    std::map<std::vector<std::size_t>, std::size_t> row_class;
    std::vector<std::size_t> group_class(g), reps;
    for (std::size_t i = 0; i < g; ++i) {
      std::vector<std::size_t> row(gt.begin() + i * g, gt.begin() + (i + 1) * g);
      auto [it, inserted] = row_class.emplace(std::move(row), reps.size());
      if (inserted) reps.push_back(i);
      group_class[i] = it->second;
    }
    const std::size_t c = reps.size();
    ctx.members.assign(c, {});
    ctx.cell_class.resize(p);
    for (std::size_t i = 0; i < p; ++i) {
      ctx.cell_class[i] = group_class[cell_group[i]];
      ctx.members[ctx.cell_class[i]].push_back(i);
    }
    ctx.class_table.resize(c * c);
    for (std::size_t a = 0; a < c; ++a)
      for (std::size_t b = 0; b < c; ++b) ctx.class_table[a * c + b] = gt[reps[a] * g + reps[b]];
  }

  void enumerate_cell_models(const std::vector<PClause>& cc, Context& ctx) {
    const std::size_t m = cell_atoms();
    // Clauses indexed by their highest variable so each is checked once fully assigned.
    std::vector<std::vector<const PClause*>> by_last(m);
    for (const auto& c : cc) {
      int last = 0;
      for (int l : c) last = std::max(last, std::abs(l));
      by_last[last - 1].push_back(&c);
    }
    std::uint64_t bits = 0;
    std::function<void(std::size_t)> rec = [&](std::size_t i) {
      if (i == m) {
        CellData cell;
        cell.bits = bits;
        cell.coef = 1;
        for (std::size_t k = 0; k < m; ++k) {
          const PredSlot& s = k < unary.size() ? unary[k] : binary[k - unary.size()];
          bool v = (bits >> k) & 1;
          if (s.symbolic >= 0)
            cell.symbolic.emplace_back(s.symbolic, v);
          else
            cell.coef *= v ? s.weight.positive : s.weight.negative;
        }
        if (cell.coef != 0 || !cell.symbolic.empty()) ctx.cells.push_back(std::move(cell));
        return;
      }
      for (int v = 0; v < 2; ++v) {
        if (v)
          bits |= std::uint64_t{1} << i;
        else
          bits &= ~(std::uint64_t{1} << i);
        bool ok = true;
        for (const PClause* c : by_last[i]) {
          bool sat = false;
          for (int l : *c) {
            bool val = (bits >> (std::abs(l) - 1)) & 1;
            if ((l > 0) == val) {
              sat = true;
              break;
            }
          }
          if (!sat) {
            ok = false;
            break;
          }
        }
        if (ok) rec(i + 1);
      }
      bits &= ~(std::uint64_t{1} << i);
    };
    rec(0);
  }

  // Residual clause set over pair atoms (2b = R(a,b), 2b+1 = R(b,a)) for cells ca (element a) and cb.
  std::size_t pair_table_for(std::uint64_t ctx, std::uint64_t ca, std::uint64_t cb) {
    std::vector<PClause> residual;
    bool conflict = false;
    for (const auto& c : clauses) {
      if (!c.universal) continue;
      for (int orient = 0; orient < 2 && !conflict; ++orient) {
        PClause pc;
        bool sat = false;
        for (const auto& l : c.lits) {
          if (sat) break;
          switch (l.kind) {
            case CLit::Nullary: sat = ((ctx >> l.slot) & 1) == l.positive; break;
            case CLit::Eq: sat = (l.v1 == l.v2) == l.positive; break;
            case CLit::Unary: {
              std::uint64_t cell = (l.v1 ^ orient) == 0 ? ca : cb;
              sat = ((cell >> l.slot) & 1) == l.positive;
              break;
            }
            case CLit::Binary: {
              int e1 = l.v1 ^ orient, e2 = l.v2 ^ orient;
              if (e1 == e2) {
                std::uint64_t cell = e1 == 0 ? ca : cb;
                sat = ((cell >> (unary.size() + l.slot)) & 1) == l.positive;
              } else {
                int v = int(2 * l.slot + (e1 == 0 ? 0 : 1)) + 1;
                pc.push_back(l.positive ? v : -v);
              }
              break;
            }
          }
        }
        if (sat) continue;
        std::sort(pc.begin(), pc.end());
        pc.erase(std::unique(pc.begin(), pc.end()), pc.end());
        bool taut = false;
        for (std::size_t i = 0; i + 1 < pc.size(); ++i)
          for (std::size_t j = i + 1; j < pc.size(); ++j) taut = taut || pc[i] == -pc[j];
        if (taut) continue;
        if (pc.empty()) conflict = true;
        residual.push_back(std::move(pc));
      }
      if (conflict) break;
    }
    if (conflict) residual.assign(1, PClause{});
    std::sort(residual.begin(), residual.end());
    residual.erase(std::unique(residual.begin(), residual.end()), residual.end());
    auto found = table_index.find(residual);
    if (found != table_index.end()) return found->second;
    PairPoly poly = count_pairs(residual);
    auto [it, inserted] = poly_index.emplace(poly, tables.size());
    if (inserted) tables.push_back(std::move(poly));
    table_index.emplace(std::move(residual), it->second);
    return it->second;
  }

  // Monomial weight of pair atom `var` set to `val`, as a poly multiplier.
  void multiply_atom(PairPoly& poly, std::size_t var, bool val) const {
    const PredSlot& s = binary[var / 2];
    if (s.symbolic >= 0) {
      if (!val) return;  // w-bar factor applied at evaluation time
      PairPoly out;
      std::uint64_t step = pow3(s.binary_symbolic);
      for (auto& [k, c] : poly) out[k + step] += c;
      poly.swap(out);
      return;
    }
    const Rational& w = val ? s.weight.positive : s.weight.negative;
    for (auto& [k, c] : poly) c *= w;
  }

  void multiply_free_atom(PairPoly& poly, std::size_t var) const {
    const PredSlot& s = binary[var / 2];
    if (s.symbolic >= 0) {
      PairPoly out;
      std::uint64_t step = pow3(s.binary_symbolic);
      for (auto& [k, c] : poly) {
        out[k] += c;
        out[k + step] += c;
      }
      poly.swap(out);
      return;
    }
    Rational sum = s.weight.positive + s.weight.negative;
    for (auto& [k, c] : poly) c *= sum;
  }

  PairPoly count_pairs(const std::vector<PClause>& residual) const {
    const std::size_t vars = 2 * binary.size();
    std::uint64_t all = vars == 64 ? ~std::uint64_t{0} : ((std::uint64_t{1} << vars) - 1);
    return dpll(residual, all);
  }

  PairPoly dpll(const std::vector<PClause>& cls, std::uint64_t unassigned) const {
    for (const auto& c : cls)
      if (c.empty()) return {};
    if (cls.empty()) {
      PairPoly poly{{0, Rational(1)}};
      for (std::size_t v = 0; v < 64; ++v)
        if ((unassigned >> v) & 1) multiply_free_atom(poly, v);
      return poly;
    }
    // Branch on a variable of a shortest clause.
    const PClause* best = &cls[0];
    for (const auto& c : cls)
      if (c.size() < best->size()) best = &c;
    std::size_t var = static_cast<std::size_t>(std::abs((*best)[0]) - 1);
    PairPoly total;
    for (int val = 0; val < 2; ++val) {
      std::vector<PClause> next;
      next.reserve(cls.size());
      for (const auto& c : cls) {
        PClause nc;
        bool sat = false;
        for (int l : c) {
          if (static_cast<std::size_t>(std::abs(l) - 1) == var) {
            if ((l > 0) == (val == 1)) {
              sat = true;
              break;
            }
          } else {
            nc.push_back(l);
          }
        }
        if (!sat) next.push_back(std::move(nc));
      }
      PairPoly sub = dpll(next, unassigned & ~(std::uint64_t{1} << var));
      if (sub.empty()) continue;
      multiply_atom(sub, var, val == 1);
      for (auto& [k, c] : sub) total[k] += c;
    }
    for (auto it = total.begin(); it != total.end();)
      it = it->second == 0 ? total.erase(it) : std::next(it);
    return total;
  }

  template <class V>
  V cell_value(const CellData& cell, const std::vector<std::pair<V, V>>& values, const V& coef) const {
    V out = coef;
    for (auto [s, t] : cell.symbolic) out *= t ? values[s].first : values[s].second;
    return out;
  }

  template <class V>
  V pair_value(const PairPoly& poly, const std::vector<std::pair<V, V>>& values,
               const std::vector<int>& binary_sym_to_sym, const std::function<V(const Rational&)>& conv) const {
    V total(0);
    const std::size_t bs = binary_sym_to_sym.size();
    for (const auto& [key, c] : poly) {
      V term = conv(c);
      std::uint64_t k = key;
      for (std::size_t i = 0; i < bs; ++i) {
        unsigned e = static_cast<unsigned>(k % 3);
        k /= 3;
        const auto& [a, b] = values[binary_sym_to_sym[i]];
        for (unsigned q = 0; q < e; ++q) term *= a;
        for (unsigned q = e; q < 2; ++q) term *= b;
      }
      total += term;
    }
    return total;
  }

  std::vector<int> binary_sym_map() const {
    std::vector<int> m(binary_symbolic_count, -1);
    for (const auto& s : binary)
      if (s.binary_symbolic >= 0) m[s.binary_symbolic] = s.symbolic;
    return m;
  }

  void check_values(std::size_t size) const {
    if (size != symbolic.size()) throw std::invalid_argument("wrong number of symbolic weight values");
  }
};

Fo2Engine::Fo2Engine(const Cnf& cnf, const WeightMap& weights, std::vector<std::string> symbolic,
                     EngineOptions options)
    : impl_(std::make_unique<Impl>()) {
  impl_->options = options;
  impl_->symbolic = std::move(symbolic);
  impl_->build(cnf, weights);
}

Fo2Engine::~Fo2Engine() = default;
Fo2Engine::Fo2Engine(Fo2Engine&&) noexcept = default;
Fo2Engine& Fo2Engine::operator=(Fo2Engine&&) noexcept = default;

const std::vector<std::string>& Fo2Engine::symbolic() const { return impl_->symbolic; }

Rational Fo2Engine::evaluate(std::uint64_t n, const std::vector<std::pair<Rational, Rational>>& values) const {
  const Impl& im = *impl_;
  im.check_values(values.size());
  const auto bmap = im.binary_sym_map();
  const std::function<Rational(const Rational&)> conv = [](const Rational& q) { return q; };
  Rational total = 0;
  std::uint64_t terms_all = 0;
  for (const auto& ctx : im.contexts) {
    Rational wctx = ctx.coef;
    for (auto [s, t] : ctx.symbolic) wctx *= t ? values[s].first : values[s].second;
    if (wctx == 0) continue;
    if (n == 0) {
      total += wctx;
      continue;
    }
    const std::size_t p = ctx.members.size();
    if (p == 0) continue;
    std::vector<Rational> cw(p, Rational(0));
    std::vector<std::vector<Rational>> r(p, std::vector<Rational>(p));
    for (std::size_t i = 0; i < ctx.cells.size(); ++i)
      cw[ctx.cell_class[i]] += im.cell_value(ctx.cells[i], values, ctx.cells[i].coef);
    std::vector<std::optional<Rational>> cache(im.tables.size());
    for (std::size_t i = 0; i < p; ++i)
      for (std::size_t j = i; j < p; ++j) {
        std::size_t t = ctx.class_table[i * p + j];
        if (!cache[t]) cache[t] = im.pair_value(im.tables[t], values, bmap, conv);
        r[i][j] = r[j][i] = *cache[t];
      }
    // Clear denominators so the composition sum runs over integers.
    Integer dc = 1, dr = 1;
    for (const auto& q : cw) mpz_lcm(dc.get_mpz_t(), dc.get_mpz_t(), q.get_den_mpz_t());
    for (std::size_t i = 0; i < p; ++i)
      for (std::size_t j = i; j < p; ++j) mpz_lcm(dr.get_mpz_t(), dr.get_mpz_t(), r[i][j].get_den_mpz_t());
    std::vector<Integer> icw(p);
    std::vector<std::vector<Integer>> ir(p, std::vector<Integer>(p));
    for (std::size_t i = 0; i < p; ++i) {
      Rational s = cw[i] * Rational(dc);
      icw[i] = s.get_num();
      for (std::size_t j = 0; j < p; ++j) {
        Rational t = r[i][j] * Rational(dr);
        ir[i][j] = t.get_num();
      }
    }
    std::uint64_t terms = 0;
    Integer sum = composition_sum<Integer>(n, icw, ir, im.options.prune, terms);
    terms_all += terms;
    Rational value(sum);
    Integer denom = pow(dc, n) * pow(dr, n * (n - 1) / 2);
    value /= Rational(denom);
    total += wctx * value;
  }
  for (const auto& s : im.free_preds) {
    Rational base = s.symbolic >= 0 ? values[s.symbolic].first + values[s.symbolic].second
                                    : s.weight.positive + s.weight.negative;
    total *= pow(base, grid_bound(n, s.arity));
  }
  im.last_terms = terms_all;
  total.canonicalize();
  return total;
}

std::complex<double> Fo2Engine::evaluate_complex(
    std::uint64_t n, const std::vector<std::pair<std::complex<double>, std::complex<double>>>& values) const {
  using C = std::complex<double>;
  const Impl& im = *impl_;
  im.check_values(values.size());
  const auto bmap = im.binary_sym_map();
  const std::function<C(const Rational&)> conv = [](const Rational& q) { return C(q.get_d(), 0.0); };
  C total(0);
  std::uint64_t terms_all = 0;
  for (const auto& ctx : im.contexts) {
    C wctx = conv(ctx.coef);
    for (auto [s, t] : ctx.symbolic) wctx *= t ? values[s].first : values[s].second;
    if (n == 0) {
      total += wctx;
      continue;
    }
    const std::size_t p = ctx.members.size();
    if (p == 0) continue;
    std::vector<C> cw(p, C(0));
    std::vector<std::vector<C>> r(p, std::vector<C>(p));
    for (std::size_t i = 0; i < ctx.cells.size(); ++i)
      cw[ctx.cell_class[i]] += im.cell_value(ctx.cells[i], values, conv(ctx.cells[i].coef));
    std::vector<std::optional<C>> cache(im.tables.size());
    for (std::size_t i = 0; i < p; ++i)
      for (std::size_t j = i; j < p; ++j) {
        std::size_t t = ctx.class_table[i * p + j];
        if (!cache[t]) cache[t] = im.pair_value(im.tables[t], values, bmap, conv);
        r[i][j] = r[j][i] = *cache[t];
      }
    std::uint64_t terms = 0;
    total += wctx * composition_sum<C>(n, cw, r, im.options.prune, terms);
    terms_all += terms;
  }
  for (const auto& s : im.free_preds) {
    C base = s.symbolic >= 0 ? values[s.symbolic].first + values[s.symbolic].second
                             : conv(s.weight.positive + s.weight.negative);
    total *= std::pow(base, static_cast<double>(grid_bound(n, s.arity)));
  }
  im.last_terms = terms_all;
  return total;
}

Rational Fo2Engine::evaluate_at(std::uint64_t n, const std::vector<Rational>& substitution) const {
  std::vector<std::pair<Rational, Rational>> values;
  for (const auto& t : substitution) values.emplace_back(t, Rational(1));
  return evaluate(n, values);
}

EngineStats Fo2Engine::stats() const {
  EngineStats s;
  for (const auto& c : impl_->contexts) {
    if (!c.cells.empty()) ++s.contexts;
    s.cells += c.cells.size();
    s.cell_classes += c.members.size();
  }
  s.distinct_pair_tables = impl_->tables.size();
  s.composition_terms = impl_->last_terms;
  return s;
}

std::vector<Cell> Fo2Engine::cells() const {
  const Impl& im = *impl_;
  std::vector<Cell> out;
  for (const auto& ctx : im.contexts) {
    for (const auto& cd : ctx.cells) {
      Cell c;
      c.context = ctx.bits;
      Rational w = cd.coef;
      for (std::size_t k = 0; k < im.cell_atoms(); ++k) {
        const PredSlot& s = k < im.unary.size() ? im.unary[k] : im.binary[k - im.unary.size()];
        bool v = (cd.bits >> k) & 1;
        c.atoms.emplace_back(s.name, v);
        if (s.symbolic >= 0) w *= v ? s.weight.positive : s.weight.negative;
      }
      c.weight = w;
      out.push_back(std::move(c));
    }
  }
  return out;
}

std::size_t Fo2Engine::context_of_cell(std::size_t flat_index, std::size_t* local_index) const {
  for (std::size_t c = 0; c < impl_->contexts.size(); ++c) {
    const auto& ctx = impl_->contexts[c];
    if (flat_index < ctx.cells.size()) {
      if (local_index) *local_index = flat_index;
      return c;
    }
    flat_index -= ctx.cells.size();
  }
  throw std::out_of_range("cell index out of range");
}

Rational Fo2Engine::pair_weight(std::size_t context_index, std::size_t i, std::size_t j) const {
  const Impl& im = *impl_;
  const auto& ctx = im.contexts.at(context_index);
  const std::size_t p = ctx.cells.size();
  if (i >= p || j >= p) throw std::out_of_range("cell index out of range");
  std::vector<std::pair<Rational, Rational>> values;
  for (const auto& name : im.symbolic) {
    const PredSlot* slot = nullptr;
    for (const auto& s : im.binary)
      if (s.name == name) slot = &s;
    values.emplace_back(slot ? slot->weight.positive : Rational(1), slot ? slot->weight.negative : Rational(1));
  }
  const std::function<Rational(const Rational&)> conv = [](const Rational& q) { return q; };
  return im.pair_value(im.tables[ctx.table(i, j)], values, im.binary_sym_map(), conv);
}

std::vector<Cell> enumerate_cells(const Cnf& cnf, const WeightMap& weights) {
  EngineOptions opts;
  opts.factor_free_predicates = false;
  return Fo2Engine(cnf, weights, {}, opts).cells();
}

Rational pair_table_weight(const Cell& a, const Cell& b, const Cnf& cnf, const WeightMap& weights) {
  if (a.context != b.context) throw std::invalid_argument("cells belong to different nullary contexts");
  EngineOptions opts;
  opts.factor_free_predicates = false;
  Fo2Engine engine(cnf, weights, {}, opts);
  auto all = engine.cells();
  auto locate = [&](const Cell& c) {
    for (std::size_t i = 0; i < all.size(); ++i)
      if (all[i].context == c.context && all[i].atoms == c.atoms) return i;
    throw std::invalid_argument("cell is not valid for this clause set");
  };
  std::size_t la = 0, lb = 0;
  std::size_t ctx = engine.context_of_cell(locate(a), &la);
  engine.context_of_cell(locate(b), &lb);
  return engine.pair_weight(ctx, la, lb);
}

Rational wfomc_fo2(const Cnf& cnf, const WeightMap& weights, std::uint64_t n) {
  return Fo2Engine(cnf, weights).evaluate(n, {});
}

Rational wfomc_fo2_with_symbolic_weight(const Cnf& cnf, const WeightMap& weights, std::uint64_t n,
                                        const std::vector<std::string>& psi,
                                        const std::vector<Rational>& substitution) {
  if (psi.size() != substitution.size()) throw std::invalid_argument("psi and substitution differ in length");
  return Fo2Engine(cnf, weights, psi).evaluate_at(n, substitution);
}

}  // namespace c2wfomc
