#pragma once

// WMC tables over cardinality vectors, exact interpolation, cardinality conditions and the final
// count assembly.

#include <complex>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "c2wfomc/engine.hpp"
#include "c2wfomc/table.hpp"
#include "c2wfomc/transform.hpp"

namespace c2wfomc {

class RationalPolynomial {
 public:
  RationalPolynomial() = default;
  explicit RationalPolynomial(std::vector<Rational> coefficients);

  /// a_0 ... a_d with a_d != 0; empty for the zero polynomial.
  const std::vector<Rational>& coefficients() const { return coeffs_; }
  /// -1 for the zero polynomial.
  int degree() const { return static_cast<int>(coeffs_.size()) - 1; }
  bool is_zero() const { return coeffs_.empty(); }
  Rational coefficient(std::size_t i) const { return i < coeffs_.size() ? coeffs_[i] : Rational(0); }
  Rational evaluate(const Rational& x) const;

  friend bool operator==(const RationalPolynomial&, const RationalPolynomial&) = default;

 private:
  std::vector<Rational> coeffs_;
};

/// Unique polynomial of degree < points.size() through the points. Throws std::invalid_argument
/// on duplicate x or no points.
RationalPolynomial lagrange_interpolate(const std::vector<std::pair<Integer, Rational>>& points);

enum class Backend { Interpolation, Multivariate, Dft };
std::string_view to_string(Backend b);
Backend parse_backend(std::string_view text);

struct TableOptions {
  Backend backend = Backend::Interpolation;
  double tolerance = 1e-6;  // dft only
  unsigned workers = 1;
};

struct TableReport {
  std::size_t nodes = 0;          // engine evaluations used for the table
  bool held_out_checked = false;  // exact backends always check
  double max_imaginary = 0;       // dft only
  bool direct = false;            // no cardinality axes: one engine evaluation, no table
};

/// Re-evaluation of the interpolant at the held-out node disagreed with the engine.
class HeldOutMismatch : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An inverse-DFT entry kept an imaginary part above tolerance.
class DftResidueError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Table over psi for the clause set (psi predicates must be declared in cnf.vocabulary).
/// Entries are weighted by `weights`; Dft is rejected here (see dft_wmc_table).
WmcTable wmc_table(const Cnf& cnf, const WeightMap& weights, const std::vector<std::string>& psi, std::uint64_t n,
                   const TableOptions& options = {}, TableReport* report = nullptr);
/// Table over cp.psi with the compiled weights.
WmcTable wmc_table(const CompiledProblem& cp, std::uint64_t n, const TableOptions& options = {},
                   TableReport* report = nullptr);

struct ApproxTable {
  std::vector<std::string> psi;
  std::vector<std::uint64_t> bounds;
  std::vector<double> values;     // real parts, WmcTable index order
  std::vector<double> imaginary;  // residues
  double max_imaginary = 0;
  std::vector<std::size_t> flagged;  // indices whose residue exceeds tolerance
};

/// Floating-point table by evaluating the engine at roots of unity and inverting the DFT.
ApproxTable dft_wmc_table(const Cnf& cnf, const WeightMap& weights, const std::vector<std::string>& psi,
                          std::uint64_t n, double tolerance = 1e-6, unsigned workers = 1);
ApproxTable dft_wmc_table(const CompiledProblem& cp, std::uint64_t n, double tolerance = 1e-6,
                          unsigned workers = 1);

/// Sum of the entries whose cardinality vector satisfies the condition. Throws
/// std::invalid_argument if the condition mentions a predicate outside the table.
Rational apply_cardinality(const WmcTable& table, const Formula& condition, std::uint64_t n);
double apply_cardinality(const ApproxTable& table, const Formula& condition, std::uint64_t n);

/// Multiplier x constrained weighted count. Recompiles with a domain hint when n is below
/// cp.min_domain. The Dft backend is rejected here; use count_approx.
Rational count(const CompiledProblem& cp, std::uint64_t n, const TableOptions& options = {},
               TableReport* report = nullptr);
/// The constrained count (multiplier included) broken down by the cardinalities of `by`: entry
/// (n_1, ..., n_m) sums the models whose `by` predicates have exactly those sizes. Predicates of
/// `by` must be declared in cp.cnf.vocabulary.
WmcTable constrained_table(const CompiledProblem& cp, const std::vector<std::string>& by, std::uint64_t n,
                           const TableOptions& options = {}, TableReport* report = nullptr);
/// Floating-point count through dft_wmc_table.
double count_approx(const CompiledProblem& cp, std::uint64_t n, double tolerance = 1e-6, unsigned workers = 1);

}  // namespace c2wfomc
