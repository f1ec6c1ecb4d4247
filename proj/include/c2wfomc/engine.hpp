#pragma once

// Exact WFOMC for universally quantified two-variable CNF by cell (1-type) decomposition.

#include <complex>
#include <cstdint>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "c2wfomc/ast.hpp"

namespace c2wfomc {

/// Atom or equality literal over the variables x and y. An empty predicate name denotes
/// equality between args[0] and args[1].
struct Literal {
  std::string predicate;
  std::vector<std::string> args;
  bool positive = true;
  friend bool operator==(const Literal&, const Literal&) = default;
};

/// Disjunction of literals. Universal clauses are read as "forall x forall y" (vacuous on the
/// empty domain); non-universal clauses are propositional and must contain nullary atoms only.
struct Clause {
  std::vector<Literal> literals;
  bool universal = true;
  friend bool operator==(const Clause&, const Clause&) = default;
};

struct Cnf {
  Vocabulary vocabulary;
  std::vector<Clause> clauses;
  friend bool operator==(const Cnf&, const Cnf&) = default;
};

Formula literal_to_formula(const Literal& l);
Formula clause_to_formula(const Clause& c);
/// Sentence with the same models as the clause set, for oracle cross-checks.
Formula cnf_to_formula(const Cnf& cnf);
std::string print_clause(const Clause& c);

/// One valid 1-type. `context` encodes the nullary atoms (bit i = i-th nullary predicate).
struct Cell {
  std::uint64_t context = 0;
  std::vector<std::pair<std::string, bool>> atoms;  // P(x) for unary P, R(x,x) for binary R
  Rational weight;
};

std::vector<Cell> enumerate_cells(const Cnf& cnf, const WeightMap& weights);
Rational pair_table_weight(const Cell& a, const Cell& b, const Cnf& cnf, const WeightMap& weights);

Rational wfomc_fo2(const Cnf& cnf, const WeightMap& weights, std::uint64_t n);

/// Evaluates with w(R_i) = substitution[i] and w-bar(R_i) = 1 for every R_i in psi.
Rational wfomc_fo2_with_symbolic_weight(const Cnf& cnf, const WeightMap& weights, std::uint64_t n,
                                        const std::vector<std::string>& psi,
                                        const std::vector<Rational>& substitution);

struct EngineOptions {
  /// Predicates occurring in no clause are multiplied out instead of enumerated.
  bool factor_free_predicates = true;
  /// Skip compositions that put elements into mutually incompatible cells.
  bool prune = true;
};

struct EngineStats {
  std::size_t contexts = 0;
  std::size_t cells = 0;
  std::size_t cell_classes = 0;  // after merging cells with identical pair interactions
  std::size_t distinct_pair_tables = 0;
  std::uint64_t composition_terms = 0;  // of the most recent evaluation
};

/// Precomputes cells and pair tables once; evaluates for any domain size and any values of the
/// symbolic predicates' weights.
class Fo2Engine {
 public:
  Fo2Engine(const Cnf& cnf, const WeightMap& weights, std::vector<std::string> symbolic = {},
            EngineOptions options = {});
  ~Fo2Engine();
  Fo2Engine(Fo2Engine&&) noexcept;
  Fo2Engine& operator=(Fo2Engine&&) noexcept;

  const std::vector<std::string>& symbolic() const;

  /// `values[i]` is the (w, w-bar) pair used for symbolic()[i].
  Rational evaluate(std::uint64_t n, const std::vector<std::pair<Rational, Rational>>& values) const;
  std::complex<double> evaluate_complex(std::uint64_t n,
                                        const std::vector<std::pair<std::complex<double>, std::complex<double>>>&
                                            values) const;

  /// Shortcut with every symbolic predicate at (t_i, 1).
  Rational evaluate_at(std::uint64_t n, const std::vector<Rational>& substitution) const;

  EngineStats stats() const;

  // Introspection used by enumerate_cells / pair_table_weight.
  std::vector<Cell> cells() const;
  Rational pair_weight(std::size_t context_index, std::size_t i, std::size_t j) const;
  std::size_t context_of_cell(std::size_t flat_index, std::size_t* local_index) const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace c2wfomc
