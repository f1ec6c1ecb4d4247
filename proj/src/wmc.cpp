#include "c2wfomc/wmc.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <functional>
#include <map>
#include <mutex>
#include <numbers>
#include <thread>

namespace c2wfomc {

RationalPolynomial::RationalPolynomial(std::vector<Rational> coefficients) : coeffs_(std::move(coefficients)) {
  while (!coeffs_.empty() && coeffs_.back() == 0) coeffs_.pop_back();
}

Rational RationalPolynomial::evaluate(const Rational& x) const {
  Rational acc = 0;
  for (auto it = coeffs_.rbegin(); it != coeffs_.rend(); ++it) acc = acc * x + *it;
  return acc;
}

RationalPolynomial lagrange_interpolate(const std::vector<std::pair<Integer, Rational>>& points) {
  const std::size_t m = points.size();
  if (m == 0) throw std::invalid_argument("interpolation needs at least one point");
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = i + 1; j < m; ++j)
      if (points[i].first == points[j].first)
        throw std::invalid_argument("duplicate interpolation node " + to_string(points[i].first));

  // Everything is scaled to integers: y_i by the lcm of their denominators, the basis
  // denominators d_i = prod_{j != i} (x_i - x_j) by their lcm.
  Integer ylcm = 1;
  for (const auto& [x, y] : points) mpz_lcm(ylcm.get_mpz_t(), ylcm.get_mpz_t(), y.get_den_mpz_t());
  std::vector<Integer> d(m, 1);
  Integer dlcm = 1;
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < m; ++j)
      if (j != i) d[i] *= points[i].first - points[j].first;
    mpz_lcm(dlcm.get_mpz_t(), dlcm.get_mpz_t(), d[i].get_mpz_t());
  }

  // master(x) = prod (x - x_j), coefficients low to high
  std::vector<Integer> master(m + 1, 0);
  master[0] = 1;
  for (std::size_t j = 0; j < m; ++j) {
    for (std::size_t k = j + 1; k > 0; --k) master[k] = master[k - 1] - points[j].first * master[k];
    master[0] = -points[j].first * master[0];
  }

  std::vector<Integer> acc(m, 0);
  std::vector<Integer> q(m);
  for (std::size_t i = 0; i < m; ++i) {
    Integer yi = points[i].second.get_num() * (ylcm / points[i].second.get_den());
    if (yi == 0) continue;
    Integer scale = yi * (dlcm / d[i]);
    // q = master / (x - x_i), by synthetic division from the top
    q[m - 1] = master[m];
    for (std::size_t k = m - 1; k > 0; --k) q[k - 1] = master[k] + points[i].first * q[k];
    for (std::size_t k = 0; k < m; ++k) acc[k] += scale * q[k];
  }
  Integer denom = dlcm * ylcm;
  std::vector<Rational> coeffs(m);
  for (std::size_t k = 0; k < m; ++k) {
    coeffs[k] = Rational(acc[k], denom);
    coeffs[k].canonicalize();
  }
  return RationalPolynomial(std::move(coeffs));
}

std::string_view to_string(Backend b) {
  switch (b) {
    case Backend::Interpolation:
      return "interpolation";
    case Backend::Multivariate:
      return "multivariate";
    case Backend::Dft:
      return "dft";
  }
  return "?";
}

Backend parse_backend(std::string_view text) {
  if (text == "interpolation") return Backend::Interpolation;
  if (text == "multivariate") return Backend::Multivariate;
  if (text == "dft") return Backend::Dft;
  throw std::invalid_argument("unknown backend '" + std::string(text) + "'");
}

namespace {

void parallel_for(std::size_t count, unsigned workers, const std::function<void(std::size_t)>& body) {
  workers = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(std::max<std::size_t>(count, 1))));
  if (workers == 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::exception_ptr error;
  std::mutex mu;
  std::vector<std::thread> threads;
  for (unsigned w = 0; w < workers; ++w) {
    threads.emplace_back([&, w] {
      for (std::size_t i = w; i < count; i += workers) {
        {
          std::lock_guard lock(mu);
          if (error) return;
        }
        try {
          body(i);
        } catch (...) {
          std::lock_guard lock(mu);
          if (!error) error = std::current_exception();
        }
      }
    });
  }
  for (auto& t : threads) t.join();
  if (error) std::rethrow_exception(error);
}

int arity_of(const Cnf& cnf, const std::string& p) {
  const Predicate* pred = cnf.vocabulary.find(p);
  if (!pred) throw std::invalid_argument("cardinality predicate '" + p + "' is not declared");
  return pred->arity;
}

// A table axis: one or more psi predicates sharing a single counting variable.
struct Axis {
  std::vector<std::size_t> members;
  std::uint64_t bound = 0;
};

struct GridSpec {
  std::vector<std::string> psi;
  std::vector<Axis> axes;
  bool unit = true;  // psi predicates evaluated at (t, 1) instead of (w t, w-bar)
};

std::vector<std::pair<Rational, Rational>> substitution(const GridSpec& g, const WeightMap& weights,
                                                        const std::vector<Rational>& axis_values) {
  std::vector<std::pair<Rational, Rational>> values(g.psi.size());
  for (std::size_t a = 0; a < g.axes.size(); ++a) {
    for (auto i : g.axes[a].members) {
      if (g.unit) {
        values[i] = {axis_values[a], Rational(1)};
      } else {
        const auto& w = weights.get(g.psi[i]);
        values[i] = {w.positive * axis_values[a], w.negative};
      }
    }
  }
  return values;
}

std::uint64_t grid_size(const std::vector<Axis>& axes) {
  std::uint64_t d = 1;
  for (const auto& a : axes) {
    if (a.bound + 1 > (UINT64_MAX / d)) throw std::overflow_error("table grid too large");
    d *= a.bound + 1;
  }
  return d;
}

constexpr std::uint64_t kMaxGrid = 50'000'000;

// Coefficient tensor over the axes, row-major with the first axis slowest.
std::vector<Rational> coefficient_grid(const Fo2Engine& engine, const WeightMap& weights, const GridSpec& g,
                                       std::uint64_t n, const TableOptions& options, TableReport* report) {
  const std::size_t m = g.axes.size();
  const std::uint64_t d = grid_size(g.axes);
  if (d > kMaxGrid) throw std::length_error("table grid of " + std::to_string(d) + " entries exceeds the limit");
  std::vector<Rational> grid(d);

  if (options.backend == Backend::Interpolation) {
    // Axis a gets exponent stride prod_{b<a} (M_b + 1); node t = 1..D+1, held out at D+2.
    std::vector<Integer> stride(m);
    Integer s = 1;
    for (std::size_t a = 0; a < m; ++a) {
      stride[a] = s;
      s *= g.axes[a].bound + 1;
    }
    auto eval_at = [&](const Integer& t) {
      std::vector<Rational> axis_values(m);
      for (std::size_t a = 0; a < m; ++a) axis_values[a] = pow(Rational(t), stride[a].get_ui());
      return engine.evaluate(n, substitution(g, weights, axis_values));
    };
    std::vector<std::pair<Integer, Rational>> points(d + 1);
    parallel_for(d + 1, options.workers, [&](std::size_t i) {
      Integer t = static_cast<unsigned long>(i + 1);
      points[i] = {t, eval_at(t)};
    });
    RationalPolynomial poly = lagrange_interpolate(points);
    Integer held = static_cast<unsigned long>(d + 2);
    if (poly.evaluate(Rational(held)) != eval_at(held))
      throw HeldOutMismatch("interpolant disagrees with the engine at the held-out node t = " + to_string(held));
    for (std::uint64_t idx = 0; idx < d; ++idx) {
      std::uint64_t rest = idx, e = 0;
      for (std::size_t a = m; a-- > 0;) {
        std::uint64_t c = rest % (g.axes[a].bound + 1);
        rest /= g.axes[a].bound + 1;
        e += c * stride[a].get_ui();
      }
      grid[idx] = poly.coefficient(e);
    }
    if (report) {
      report->nodes = d + 1;
      report->held_out_checked = true;
    }
    return grid;
  }

  if (options.backend != Backend::Multivariate) throw std::invalid_argument("exact table requested with dft backend");
  // Values on {0..M_1} x ... x {0..M_m}, then one univariate interpolation per axis fiber.
  auto point_of = [&](std::uint64_t idx) {
    std::vector<Rational> axis_values(m);
    for (std::size_t a = m; a-- > 0;) {
      axis_values[a] = static_cast<unsigned long>(idx % (g.axes[a].bound + 1));
      idx /= g.axes[a].bound + 1;
    }
    return axis_values;
  };
  parallel_for(d, options.workers,
               [&](std::size_t idx) { grid[idx] = engine.evaluate(n, substitution(g, weights, point_of(idx))); });
  std::uint64_t inner = d;
  for (std::size_t a = 0; a < m; ++a) {
    const std::uint64_t len = g.axes[a].bound + 1;
    inner /= len;
    const std::uint64_t outer = d / (len * inner);
    for (std::uint64_t o = 0; o < outer; ++o) {
      for (std::uint64_t in = 0; in < inner; ++in) {
        std::vector<std::pair<Integer, Rational>> pts(len);
        for (std::uint64_t k = 0; k < len; ++k)
          pts[k] = {Integer(static_cast<unsigned long>(k)), grid[(o * len + k) * inner + in]};
        RationalPolynomial p = lagrange_interpolate(pts);
        for (std::uint64_t k = 0; k < len; ++k) grid[(o * len + k) * inner + in] = p.coefficient(k);
      }
    }
  }
  // Held-out check at (M_1 + 1, ..., M_m + 1).
  std::vector<Rational> probe(m);
  for (std::size_t a = 0; a < m; ++a) probe[a] = static_cast<unsigned long>(g.axes[a].bound + 1);
  Rational direct = engine.evaluate(n, substitution(g, weights, probe));
  Rational via = 0;
  for (std::uint64_t idx = 0; idx < d; ++idx) {
    if (grid[idx] == 0) continue;
    std::uint64_t rest = idx;
    Rational term = grid[idx];
    for (std::size_t a = m; a-- > 0;) {
      term *= pow(probe[a], rest % (g.axes[a].bound + 1));
      rest /= g.axes[a].bound + 1;
    }
    via += term;
  }
  if (via != direct) throw HeldOutMismatch("multivariate interpolant disagrees with the engine at the held-out point");
  if (report) {
    report->nodes = d;
    report->held_out_checked = true;
  }
  return grid;
}

GridSpec singleton_axes(const Cnf& cnf, const std::vector<std::string>& psi, std::uint64_t n) {
  GridSpec g;
  g.psi = psi;
  for (std::size_t i = 0; i < psi.size(); ++i) g.axes.push_back({{i}, grid_bound(n, arity_of(cnf, psi[i]))});
  return g;
}

void check_distinct(const std::vector<std::string>& psi) {
  for (std::size_t i = 0; i < psi.size(); ++i)
    for (std::size_t j = i + 1; j < psi.size(); ++j)
      if (psi[i] == psi[j]) throw std::invalid_argument("predicate '" + psi[i] + "' repeated in psi");
}

bool condition_holds(const Formula& f, const std::function<std::optional<std::uint64_t>(const std::string&)>& lookup,
                     std::uint64_t n) {
  switch (f.kind()) {
    case Formula::Kind::Top:
      return true;
    case Formula::Kind::Bottom:
      return false;
    case Formula::Kind::Not:
      return !condition_holds(f.as<node::Not>().body, lookup, n);
    case Formula::Kind::Cardinality: {
      const auto& c = f.as<node::Cardinality>();
      auto v = lookup(c.predicate);
      if (!v) throw std::invalid_argument("cardinality predicate '" + c.predicate + "' is not in the table");
      return holds(static_cast<std::int64_t>(*v), c.cmp, c.bound.resolve(n));
    }
    case Formula::Kind::Binary: {
      const auto& b = f.as<node::Binary>();
      bool l = condition_holds(b.lhs, lookup, n);
      switch (b.op) {
        case Connective::And:
          return l && condition_holds(b.rhs, lookup, n);
        case Connective::Or:
          return l || condition_holds(b.rhs, lookup, n);
        case Connective::Implies:
          return !l || condition_holds(b.rhs, lookup, n);
        case Connective::Iff:
          return l == condition_holds(b.rhs, lookup, n);
      }
      return false;
    }
    default:
      throw std::invalid_argument("cardinality condition may only combine cardinality atoms: " + print_formula(f));
  }
}

template <class Table>
std::function<std::optional<std::uint64_t>(const std::string&)> lookup_for(const Table& t,
                                                                          const std::vector<std::uint64_t>& counts) {
  return [&t, &counts](const std::string& p) -> std::optional<std::uint64_t> {
    for (std::size_t i = 0; i < t.psi.size(); ++i)
      if (t.psi[i] == p) return counts[i];
    return std::nullopt;
  };
}

void conjuncts(const Formula& f, std::vector<Formula>& out) {
  if (f.is<node::Binary>() && f.as<node::Binary>().op == Connective::And) {
    conjuncts(f.as<node::Binary>().lhs, out);
    conjuncts(f.as<node::Binary>().rhs, out);
    return;
  }
  if (!f.is<node::Top>()) out.push_back(f);
}

void count_occurrences(const Formula& f, std::map<std::string, int>& occ) {
  if (f.is<node::Cardinality>()) {
    ++occ[f.as<node::Cardinality>().predicate];
    return;
  }
  for (const auto& c : children(f)) count_occurrences(c, occ);
}

}  // namespace

WmcTable wmc_table(const Cnf& cnf, const WeightMap& weights, const std::vector<std::string>& psi, std::uint64_t n,
                   const TableOptions& options, TableReport* report) {
  if (options.backend == Backend::Dft) throw std::invalid_argument("use dft_wmc_table for the dft backend");
  check_distinct(psi);
  GridSpec g = singleton_axes(cnf, psi, n);
  Fo2Engine engine(cnf, weights, psi);
  std::vector<Rational> grid = coefficient_grid(engine, weights, g, n, options, report);
  std::vector<std::uint64_t> bounds;
  for (const auto& a : g.axes) bounds.push_back(a.bound);
  WmcTable table(psi, bounds);
  // Unit-weight coefficients rescaled by prod w^{n_i} w-bar^{M_i - n_i}.
  for (std::size_t idx = 0; idx < table.size(); ++idx) {
    if (grid[idx] == 0) continue;
    auto c = table.counts(idx);
    Rational v = grid[idx];
    for (std::size_t i = 0; i < psi.size(); ++i) {
      const auto& w = weights.get(psi[i]);
      v *= pow(w.positive, c[i]) * pow(w.negative, bounds[i] - c[i]);
    }
    table.at_index(idx) = v;
  }
  return table;
}

WmcTable wmc_table(const CompiledProblem& cp, std::uint64_t n, const TableOptions& options, TableReport* report) {
  return wmc_table(cp.cnf, cp.weights, cp.psi, n, options, report);
}

ApproxTable dft_wmc_table(const Cnf& cnf, const WeightMap& weights, const std::vector<std::string>& psi,
                          std::uint64_t n, double tolerance, unsigned workers) {
  check_distinct(psi);
  GridSpec g = singleton_axes(cnf, psi, n);
  const std::size_t m = psi.size();
  const std::uint64_t d = grid_size(g.axes);
  if (d > kMaxGrid) throw std::length_error("table grid of " + std::to_string(d) + " entries exceeds the limit");
  Fo2Engine engine(cnf, weights, psi);
  using C = std::complex<double>;
  std::vector<C> values(d);
  std::vector<std::pair<double, double>> base(m);
  for (std::size_t i = 0; i < m; ++i) {
    const auto& w = weights.get(psi[i]);
    base[i] = {w.positive.get_d(), w.negative.get_d()};
  }
  parallel_for(d, workers, [&](std::size_t idx) {
    std::vector<std::pair<C, C>> sub(m);
    std::uint64_t rest = idx;
    for (std::size_t a = m; a-- > 0;) {
      const std::uint64_t len = g.axes[a].bound + 1;
      const double k = static_cast<double>(rest % len);
      rest /= len;
      C root = std::polar(1.0, -2.0 * std::numbers::pi * k / static_cast<double>(len));
      sub[a] = {base[a].first * root, C(base[a].second)};
    }
    values[idx] = engine.evaluate_complex(n, sub);
  });
  // Inverse transform, one axis at a time.
  std::uint64_t inner = d;
  for (std::size_t a = 0; a < m; ++a) {
    const std::uint64_t len = g.axes[a].bound + 1;
    inner /= len;
    const std::uint64_t outer = d / (len * inner);
    std::vector<C> fiber(len);
    for (std::uint64_t o = 0; o < outer; ++o) {
      for (std::uint64_t in = 0; in < inner; ++in) {
        for (std::uint64_t j = 0; j < len; ++j) {
          C acc = 0;
          for (std::uint64_t k = 0; k < len; ++k) {
            double ang = 2.0 * std::numbers::pi * static_cast<double>((j * k) % len) / static_cast<double>(len);
            acc += values[(o * len + k) * inner + in] * std::polar(1.0, ang);
          }
          fiber[j] = acc / static_cast<double>(len);
        }
        for (std::uint64_t j = 0; j < len; ++j) values[(o * len + j) * inner + in] = fiber[j];
      }
    }
  }
  ApproxTable out;
  out.psi = psi;
  for (const auto& ax : g.axes) out.bounds.push_back(ax.bound);
  out.values.resize(d);
  out.imaginary.resize(d);
  for (std::size_t idx = 0; idx < d; ++idx) {
    out.values[idx] = values[idx].real();
    out.imaginary[idx] = values[idx].imag();
    out.max_imaginary = std::max(out.max_imaginary, std::abs(values[idx].imag()));
    if (std::abs(values[idx].imag()) > tolerance) out.flagged.push_back(idx);
  }
  return out;
}

ApproxTable dft_wmc_table(const CompiledProblem& cp, std::uint64_t n, double tolerance, unsigned workers) {
  return dft_wmc_table(cp.cnf, cp.weights, cp.psi, n, tolerance, workers);
}

Rational apply_cardinality(const WmcTable& table, const Formula& condition, std::uint64_t n) {
  struct View {
    const std::vector<std::string>& psi;
  } view{table.psi()};
  Rational sum = 0;
  for (std::size_t idx = 0; idx < table.size(); ++idx) {
    auto counts = table.counts(idx);
    bool ok = condition_holds(condition, lookup_for(view, counts), n);
    if (ok) sum += table.at_index(idx);
  }
  return sum;
}

double apply_cardinality(const ApproxTable& table, const Formula& condition, std::uint64_t n) {
  WmcTable shape(table.psi, table.bounds);
  double sum = 0;
  for (std::size_t idx = 0; idx < table.values.size(); ++idx) {
    auto counts = shape.counts(idx);
    if (condition_holds(condition, lookup_for(table, counts), n)) sum += table.values[idx];
  }
  return sum;
}

namespace {

CompiledProblem recompile_for(const CompiledProblem& cp, std::uint64_t n) {
  CompileOptions opt = cp.options;
  opt.domain_hint = n;
  CompiledProblem r = compile(cp.source, cp.source_vocabulary, cp.source_weights, opt);
  r.extra_multiplier = cp.extra_multiplier;
  if (r.min_domain > n)
    throw std::logic_error("encoding still needs domain size " + std::to_string(r.min_domain) +
                           " after recompiling for " + std::to_string(n));
  return r;
}

}  // namespace

WmcTable constrained_table(const CompiledProblem& cp, const std::vector<std::string>& by, std::uint64_t n,
                           const TableOptions& options, TableReport* report) {
  if (options.backend == Backend::Dft) throw std::invalid_argument("exact tables only; use count_approx for dft");
  check_distinct(by);
  if (n < cp.min_domain) return constrained_table(recompile_for(cp, n), by, n, options, report);
  const Rational mult = cp.multiplier_value(n);

  std::vector<std::string> psi = by;
  for (const auto& p : cp.psi)
    if (std::find(by.begin(), by.end(), p) == by.end()) psi.push_back(p);
  std::vector<std::uint64_t> out_bounds;
  for (const auto& p : by) out_bounds.push_back(grid_bound(n, arity_of(cp.cnf, p)));
  WmcTable out(by, out_bounds);

  if (psi.empty()) {
    if (!condition_holds(cp.card_condition, [](const std::string&) { return std::nullopt; }, n)) return out;
    out.at_index(0) = mult * wfomc_fo2(cp.cnf, cp.weights, n);
    if (report) *report = TableReport{1, false, 0, true};
    return out;
  }

  // Predicates pinned at their implied lower bound by a top-level equality share one axis: the
  // sum of their counts reaches the summed bound only when each one sits at its own.
  std::vector<Formula> parts;
  conjuncts(cp.card_condition, parts);
  std::map<std::string, int> occ;
  count_occurrences(cp.card_condition, occ);
  std::vector<std::string> merged;
  std::vector<Formula> rest;
  std::int64_t target = 0;
  for (const auto& c : parts) {
    if (c.is<node::Cardinality>()) {
      const auto& ca = c.as<node::Cardinality>();
      auto lb = cp.implied_lower_bounds.find(ca.predicate);
      if (lb != cp.implied_lower_bounds.end() && occ[ca.predicate] == 1 && ca.cmp == Comparator::Eq &&
          ca.bound.resolve(n) == lb->second.resolve(n) &&
          std::find(by.begin(), by.end(), ca.predicate) == by.end()) {
        merged.push_back(ca.predicate);
        target += lb->second.resolve(n);
        continue;
      }
    }
    rest.push_back(c);
  }
  if (merged.size() < 2) {
    merged.clear();
    rest.clear();
    conjuncts(cp.card_condition, rest);
    target = 0;
  }
  Formula rest_condition = conj_all(rest);

  GridSpec g;
  g.unit = false;
  g.psi = psi;
  Axis shared;
  for (std::size_t i = 0; i < psi.size(); ++i) {
    std::uint64_t bound = grid_bound(n, arity_of(cp.cnf, psi[i]));
    if (std::find(merged.begin(), merged.end(), psi[i]) != merged.end()) {
      shared.members.push_back(i);
      shared.bound += bound;
    } else {
      g.axes.push_back({{i}, bound});
    }
  }
  if (!merged.empty()) g.axes.push_back(shared);

  Fo2Engine engine(cp.cnf, cp.weights, psi);
  std::vector<Rational> grid = coefficient_grid(engine, cp.weights, g, n, options, report);
  std::vector<std::uint64_t> counts(psi.size());
  std::vector<std::uint64_t> key(by.size());
  for (std::uint64_t idx = 0; idx < grid.size(); ++idx) {
    if (grid[idx] == 0) continue;
    std::uint64_t r = idx;
    std::uint64_t shared_value = 0;
    for (std::size_t a = g.axes.size(); a-- > 0;) {
      std::uint64_t v = r % (g.axes[a].bound + 1);
      r /= g.axes[a].bound + 1;
      if (!merged.empty() && a + 1 == g.axes.size())
        shared_value = v;
      else
        counts[g.axes[a].members[0]] = v;
    }
    if (!merged.empty() && static_cast<std::int64_t>(shared_value) != target) continue;
    auto lookup = [&](const std::string& p) -> std::optional<std::uint64_t> {
      for (std::size_t i = 0; i < psi.size(); ++i)
        if (psi[i] == p) return counts[i];
      return std::nullopt;
    };
    if (!condition_holds(rest_condition, lookup, n)) continue;
    std::copy(counts.begin(), counts.begin() + static_cast<std::ptrdiff_t>(by.size()), key.begin());
    out.at(key) += grid[idx];
  }
  if (mult != 1)
    for (std::size_t i = 0; i < out.size(); ++i) out.at_index(i) *= mult;
  return out;
}

Rational count(const CompiledProblem& cp, std::uint64_t n, const TableOptions& options, TableReport* report) {
  return constrained_table(cp, {}, n, options, report).at_index(0);
}

double count_approx(const CompiledProblem& cp, std::uint64_t n, double tolerance, unsigned workers) {
  if (n < cp.min_domain) return count_approx(recompile_for(cp, n), n, tolerance, workers);
  double mult = cp.multiplier_value(n).get_d();
  if (cp.psi.empty()) {
    if (!condition_holds(cp.card_condition, [](const std::string&) { return std::nullopt; }, n)) return 0;
    return mult * wfomc_fo2(cp.cnf, cp.weights, n).get_d();
  }
  ApproxTable t = dft_wmc_table(cp, n, tolerance, workers);
  if (!t.flagged.empty())
    throw DftResidueError("inverse DFT left an imaginary residue of " + std::to_string(t.max_imaginary));
  return mult * apply_cardinality(t, cp.card_condition, n);
}

}  // namespace c2wfomc
