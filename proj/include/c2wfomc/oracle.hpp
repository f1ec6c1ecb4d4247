#pragma once

// Brute-force ground truth: enumerate every world over a small domain.

#include <cstdint>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "c2wfomc/ast.hpp"
#include "c2wfomc/table.hpp"

namespace c2wfomc {

inline constexpr std::size_t kDefaultAtomCap = 24;

class OracleLimitError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Ground atoms of a vocabulary over domain {0..n-1}: predicates in vocabulary order,
/// argument tuples in row-major order. Declared constants denote elements 0, 1, ...
class Grounding {
 public:
  Grounding(const Vocabulary& vocabulary, std::uint64_t n);

  const Vocabulary& vocabulary() const { return vocab_; }
  std::uint64_t domain_size() const { return n_; }
  std::size_t atom_count() const { return total_; }
  std::size_t predicate_index(std::string_view name) const;
  std::size_t base(std::size_t predicate) const { return base_[predicate]; }
  std::uint64_t size(std::size_t predicate) const { return size_[predicate]; }
  std::size_t atom(std::size_t predicate, const std::vector<std::uint64_t>& args) const;
  std::uint64_t constant_element(std::string_view name) const;
  std::string describe_atom(std::size_t index) const;

 private:
  Vocabulary vocab_;
  std::uint64_t n_;
  std::vector<std::size_t> base_;
  std::vector<std::uint64_t> size_;
  std::size_t total_ = 0;
};

/// A possible world: truth value per ground atom of a Grounding.
struct World {
  std::shared_ptr<const Grounding> grounding;
  std::vector<bool> truth;

  explicit World(std::shared_ptr<const Grounding> g) : grounding(std::move(g)), truth(grounding->atom_count()) {}
  void set(std::string_view predicate, const std::vector<std::uint64_t>& args, bool value = true);
  bool get(std::string_view predicate, const std::vector<std::uint64_t>& args) const;
};

/// Formula compiled against a grounding for fast repeated evaluation.
class CompiledFormula {
 public:
  CompiledFormula(const Formula& f, const Grounding& grounding, std::vector<std::string> free_variables = {});
  ~CompiledFormula();
  CompiledFormula(CompiledFormula&&) noexcept;
  CompiledFormula& operator=(CompiledFormula&&) noexcept;

  /// `assignment` gives elements for the free variables in constructor order.
  bool evaluate(const std::vector<bool>& truth, const std::vector<std::uint64_t>& assignment = {}) const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

std::uint64_t cardinality(std::string_view predicate, const World& world);

/// Throws std::invalid_argument if f has free variables.
bool satisfies(const World& world, const Formula& f);

/// Number of assignments to `free_variables` under which f holds.
std::uint64_t count_groundings(const World& world, const Formula& f, const std::vector<std::string>& free_variables);

Rational world_weight(const World& world, const WeightMap& weights);

Rational brute_wfomc(const Formula& f, const Vocabulary& vocabulary, const WeightMap& weights, std::uint64_t n,
                     std::size_t atom_cap = kDefaultAtomCap);

/// Table over `psi` (full grid, zeros included) with entries weighted by `weights`.
WmcTable brute_wmc_table(const std::vector<std::string>& psi, const Formula& f, const Vocabulary& vocabulary,
                         const WeightMap& weights, std::uint64_t n, std::size_t atom_cap = kDefaultAtomCap);

struct MlnFormula;

/// Sum over worlds of prod_j multiplier_j^{#satisfied groundings of alpha_j}, restricted to worlds
/// satisfying every hard formula (universally closed) and the optional query sentence.
Rational brute_mln_partition(const std::vector<MlnFormula>& mln, const Vocabulary& vocabulary, std::uint64_t n,
                             const std::optional<Formula>& query = std::nullopt,
                             std::size_t atom_cap = kDefaultAtomCap);

}  // namespace c2wfomc
