#pragma once

// Problem-file reader and formula printer. The concrete grammar is documented in docs/grammar.md.

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "c2wfomc/ast.hpp"

namespace c2wfomc {

class ParseError : public std::runtime_error {
 public:
  ParseError(int line, int column, const std::string& message);
  int line() const { return line_; }
  int column() const { return column_; }

 private:
  int line_;
  int column_;
};

/// A global correction factor attached to a problem, evaluated per domain size n.
struct MultiplierFactor {
  enum class Kind {
    FactorialPowNegDomain,  // (k!)^(-n)
    BinomialInv,            // 1 / binom(n, k)
    Constant,               // a fixed rational
  };
  Kind kind = Kind::Constant;
  std::uint32_t k = 0;
  Rational constant{1};

  Rational evaluate(std::uint64_t n) const;
  std::string describe() const;
  friend bool operator==(const MultiplierFactor&, const MultiplierFactor&) = default;
};

struct MlnEntry {
  std::optional<Rational> multiplier;  // empty for hard formulas
  Formula formula;
  int line = 0;
};

struct ProblemFile {
  std::optional<std::uint64_t> domain_size;
  Vocabulary vocabulary;
  WeightMap weights;
  std::vector<Formula> sentences;
  std::vector<Formula> cardinality;  // Boolean formulas over cardinality atoms
  std::vector<std::string> psi;
  std::vector<MlnEntry> mln;
  std::vector<MultiplierFactor> multiplier;

  /// Conjunction of all sentences and cardinality constraints.
  Formula theory() const;
};

/// Parses a whole problem file. Throws ParseError (with 1-based line/column).
ProblemFile parse_problem(std::string_view text);

/// Parses a single formula against a vocabulary (predicates must be declared).
/// `allow_free` permits free variables (MLN formulas); `allow_reserved` permits "@" names.
Formula parse_formula(std::string_view text, const Vocabulary& vocabulary, bool allow_free = false,
                      bool allow_reserved = false);

std::string print_formula(const Formula& f);
/// Fully parenthesized rendering; used to test precedence handling.
std::string print_formula_fully_parenthesized(const Formula& f);
std::string print_term(const Term& t);

/// Renders a complete problem that parse_problem reads back to an equal ProblemFile.
std::string print_problem(const ProblemFile& problem);

}  // namespace c2wfomc
