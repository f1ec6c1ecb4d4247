#pragma once

// Markov logic networks reduced to weighted model counting.

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "c2wfomc/ast.hpp"
#include "c2wfomc/parser.hpp"
#include "c2wfomc/transform.hpp"
#include "c2wfomc/wmc.hpp"

namespace c2wfomc {

/// A weighted formula; no multiplier means hard. Free variables are implicitly universal.
struct MlnFormula {
  Formula formula;
  std::optional<Rational> multiplier;
};

/// The partition function is zero, so conditional probabilities are undefined.
class UndefinedDistribution : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct EncodedMln {
  Formula sentence;
  Vocabulary vocabulary;
  WeightMap weights;
  std::vector<std::string> indicators;  // one per soft formula, in input order
};

/// Soft (alpha, phi) becomes forall-closure of xi <=> alpha with w(xi) = phi, w-bar(xi) = 1; hard
/// formulas are conjoined as their universal closure. Throws std::invalid_argument for a
/// non-positive multiplier or a formula outside the fragment.
EncodedMln encode_mln(const std::vector<MlnFormula>& mln, const Vocabulary& vocabulary,
                      const WeightMap& weights = {});

struct MlnProblem {
  std::vector<MlnFormula> formulas;
  Vocabulary vocabulary;
  WeightMap weights;
  Formula background;  // extra hard sentences and cardinality constraints
  std::vector<MultiplierFactor> multiplier;
};

/// The file's mln lines; its sentences and cardinality constraints become the background.
MlnProblem mln_problem(const ProblemFile& problem);

struct MlnOptions {
  TableOptions table;
  CompileOptions compile;
};

Rational partition_function(const MlnProblem& mln, std::uint64_t n, const MlnOptions& options = {});

/// P(query) = Z(mln & query) / Z(mln). Queries may name declared constants; those are pinned to
/// distinct marked elements. Throws UndefinedDistribution when Z = 0.
Rational marginal(const MlnProblem& mln, const Formula& query, std::uint64_t n, const MlnOptions& options = {});

/// Constant-free equivalent of a ground query, for counting: each constant c becomes a unary
/// marker with |marker| = 1, markers are disjoint, and the count picks up a factor
/// n (n-1) ... (n-c+1) that `multiplier` undoes.
struct GroundedQuery {
  Formula sentence;  // rewritten query conjoined with the marker and definition sentences
  Vocabulary vocabulary;
  std::vector<MultiplierFactor> multiplier;
};
GroundedQuery ground_query(const Formula& query, const Vocabulary& vocabulary, FreshNames& names);

/// exp(w) rounded to `digits` significant decimal digits, as an exact rational.
Rational exp_approximation(const Rational& w, unsigned digits);

}  // namespace c2wfomc
