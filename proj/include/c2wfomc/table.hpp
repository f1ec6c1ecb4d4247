#pragma once

// Dense table indexed by cardinality vectors (n_1, ..., n_m) with 0 <= n_i <= M_i.

#include <cstdint>
#include <string>
#include <vector>

#include "c2wfomc/rational.hpp"

namespace c2wfomc {

class WmcTable {
 public:
  WmcTable() = default;
  WmcTable(std::vector<std::string> psi, std::vector<std::uint64_t> bounds);

  const std::vector<std::string>& psi() const { return psi_; }
  const std::vector<std::uint64_t>& bounds() const { return bounds_; }
  std::size_t size() const { return values_.size(); }

  /// Row-major index; the first predicate varies slowest.
  std::size_t index(const std::vector<std::uint64_t>& counts) const;
  std::vector<std::uint64_t> counts(std::size_t index) const;

  const Rational& at(const std::vector<std::uint64_t>& counts) const { return values_.at(index(counts)); }
  Rational& at(const std::vector<std::uint64_t>& counts) { return values_.at(index(counts)); }
  const Rational& at_index(std::size_t i) const { return values_.at(i); }
  Rational& at_index(std::size_t i) { return values_.at(i); }

  Rational total() const;
  std::size_t nonzero_count() const;

  /// "n_<pred>,...,value_num,value_den" header, one row per grid point in index order.
  std::string to_csv() const;

  friend bool operator==(const WmcTable&, const WmcTable&) = default;

 private:
  std::vector<std::string> psi_;
  std::vector<std::uint64_t> bounds_;
  std::vector<Rational> values_;
};

/// Grid bound M = n^arity.
std::uint64_t grid_bound(std::uint64_t n, int arity);

}  // namespace c2wfomc
