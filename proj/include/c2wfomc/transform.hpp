#pragma once

// Rewrites a C2 sentence with cardinality constraints into universal FO2 clauses, a Boolean
// condition over cardinality atoms, extended weights and a multiplier symbolic in |domain|.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "c2wfomc/ast.hpp"
#include "c2wfomc/engine.hpp"
#include "c2wfomc/parser.hpp"

namespace c2wfomc {

struct TraceStep {
  std::string rule;
  std::vector<std::string> predicates;  // introduced
  std::vector<std::string> formulas;    // introduced sentences / clauses, printed
  std::optional<MultiplierFactor> factor;
  friend bool operator==(const TraceStep&, const TraceStep&) = default;
};

struct CompileOptions {
  /// Skip naming the counted formula when it is already an atom R(x,y).
  bool atomic_fast_path = false;
  /// Use the literal two-application negation removal and the iff split for A <=> exists[=k]
  /// instead of the single-application sign trick.
  bool faithful_negation = false;
  /// Counting quantifiers with k > n are decided syntactically.
  std::optional<std::uint64_t> domain_hint;
  /// Definitional naming kicks in once a subformula expands to more clauses than this.
  std::size_t clause_limit = 64;
  friend bool operator==(const CompileOptions&, const CompileOptions&) = default;
};

struct CompiledProblem {
  Cnf cnf;
  WeightMap weights;
  Formula card_condition;         // top when there is none
  std::vector<std::string> psi;   // predicates of card_condition, first-appearance order
  std::vector<MultiplierFactor> multiplier;
  std::vector<TraceStep> trace;
  /// Smallest domain size the encoding is valid for; smaller sizes need a recompile with a
  /// domain hint (a counting quantifier with k > n is decided syntactically then).
  std::uint64_t min_domain = 0;
  /// |R| >= per_element * n holds in every model of the clauses (from the functionality
  /// encodings). Used to merge equality constraints into one table dimension.
  std::map<std::string, AffineBound> implied_lower_bounds;

  // Input kept for recompiling below min_domain.
  Formula source;
  Vocabulary source_vocabulary;
  WeightMap source_weights;
  CompileOptions options;
  std::vector<MultiplierFactor> extra_multiplier;  // from the problem file

  Rational multiplier_value(std::uint64_t n) const;
  friend bool operator==(const CompiledProblem&, const CompiledProblem&) = default;
};

/// Result of one encoding rule: sentences still to be processed, cardinality constraints and
/// multiplier factors. Fresh predicates are registered in the state that produced it.
struct Encoding {
  std::vector<Formula> sentences;
  std::vector<Formula> cardinality;
  std::vector<MultiplierFactor> factors;
  std::vector<std::string> introduced;
};

/// Vocabulary, weights, fresh-name supply and trace shared by the rewrite rules.
class RewriteState {
 public:
  RewriteState(Vocabulary vocabulary, WeightMap weights, CompileOptions options = {});

  const Vocabulary& vocabulary() const { return vocab_; }
  const WeightMap& weights() const { return weights_; }
  const CompileOptions& options() const { return options_; }
  std::vector<TraceStep>& trace() { return trace_; }

  /// Registers "@<base><n>" with the given weights.
  std::string fresh(std::string_view base, int arity, Rational positive = 1, Rational negative = 1);
  void record(std::string rule, std::vector<std::string> predicates, const std::vector<Formula>& formulas,
              std::optional<MultiplierFactor> factor = std::nullopt);
  void record_clauses(std::string rule, std::vector<std::string> predicates, const std::vector<Clause>& clauses);
  /// Memo for definitional naming of structurally equal subformulas.
  std::map<std::string, std::string>& name_memo() { return memo_; }
  std::map<std::string, AffineBound>& implied_lower_bounds() { return lower_bounds_; }
  std::uint64_t& min_domain() { return min_domain_; }

 private:
  Vocabulary vocab_;
  WeightMap weights_;
  CompileOptions options_;
  FreshNames names_;
  std::vector<TraceStep> trace_;
  std::map<std::string, std::string> memo_;
  std::map<std::string, AffineBound> lower_bounds_;
  std::uint64_t min_domain_ = 0;
};

/// exists[<=k] -> disjunction of exists[=j], j = 0..k; exists[>=k] -> negated exists[<=k-1];
/// exists[>=1] -> exists; exists[=0] -> forall not. With a domain hint, k > n is decided.
Formula eliminate_bounded_counting(const Formula& f, std::optional<std::uint64_t> domain_hint = std::nullopt);

/// Replaces the innermost-leftmost exists[=k] subformula. One free variable u: a fresh unary A,
/// the subformula becomes A(u) and the definitions forall x forall y B <=> psi and
/// forall x A(x) <=> exists[=k] y B(x,y) are returned. No free variable: a fresh unary xi with
/// forall x xi(x) <=> psi(x) and the cardinality atom |xi| = k in place.
struct Extraction {
  Formula host;
  std::vector<Formula> definitions;
  bool changed = false;
};
Extraction extract_exact_counting(const Formula& f, RewriteState& state);

/// forall x A(x) <=> exists[=k] y R(x,y)  ->  (forall x A <=> ~B) & (forall x B | exists[=k] y R)
/// and forall x A(x) | ~exists[=k] y R(x,y). Throws std::logic_error on any other shape.
std::pair<Formula, Formula> split_iff_counting(const Formula& definition, RewriteState& state);

/// Replaces the subformula `negated` (which must be a negation ~psi occurring in host) by a fresh
/// atom A over psi's free variables and conjoins the three-clause companion with a fresh B
/// (w-bar(B) = -1).
Formula remove_negation(const Formula& host, const Formula& negated, RewriteState& state);

/// forall x exists[=k] y R(x,y) with R a binary predicate name.
Encoding encode_forall_exact(const std::string& r, std::uint32_t k, RewriteState& state);
/// exists[=k] x forall y R(x,y).
Encoding encode_exact_forall(const std::string& r, std::uint32_t k, RewriteState& state);
/// forall x guard(x) | exists[=k] y R(x,y); guard is quantifier-free over x.
Encoding encode_guarded_counting(const Formula& guard, const std::string& r, std::uint32_t k, RewriteState& state);

/// Eliminates every exists / forall nested below the top-level universal prefix. Returns
/// quantifier-free-bodied sentences of the shapes forall x forall y phi, forall x phi or a closed
/// propositional phi. Fresh Skolem predicates get weights (1, -1).
std::vector<Formula> skolemize(const Formula& f, RewriteState& state);

/// Clauses for the pieces produced by skolemize, with definitional naming past the clause limit.
std::vector<Clause> to_universal_cnf(const Formula& piece, RewriteState& state);

CompiledProblem compile(const Formula& theory, const Vocabulary& vocabulary, const WeightMap& weights,
                        CompileOptions options = {});
/// Compiles the sentences and cardinality section; the file's multiplier lines are appended.
CompiledProblem compile(const ProblemFile& problem, CompileOptions options = {});

std::string describe_trace(const CompiledProblem& cp);

}  // namespace c2wfomc
