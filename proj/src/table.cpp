#include "c2wfomc/table.hpp"

#include <sstream>
#include <stdexcept>

namespace c2wfomc {

WmcTable::WmcTable(std::vector<std::string> psi, std::vector<std::uint64_t> bounds)
    : psi_(std::move(psi)), bounds_(std::move(bounds)) {
  if (psi_.size() != bounds_.size()) throw std::invalid_argument("psi and bounds differ in length");
  std::size_t size = 1;
  for (auto m : bounds_) size *= static_cast<std::size_t>(m + 1);
  values_.assign(size, Rational(0));
}

std::size_t WmcTable::index(const std::vector<std::uint64_t>& counts) const {
  if (counts.size() != bounds_.size()) throw std::invalid_argument("count vector has wrong length");
  std::size_t idx = 0;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    if (counts[i] > bounds_[i]) throw std::out_of_range("count outside the table grid");
    idx = idx * static_cast<std::size_t>(bounds_[i] + 1) + static_cast<std::size_t>(counts[i]);
  }
  return idx;
}

std::vector<std::uint64_t> WmcTable::counts(std::size_t index) const {
  std::vector<std::uint64_t> out(bounds_.size());
  for (std::size_t i = bounds_.size(); i-- > 0;) {
    std::size_t radix = static_cast<std::size_t>(bounds_[i] + 1);
    out[i] = index % radix;
    index /= radix;
  }
  return out;
}

Rational WmcTable::total() const {
  Rational sum = 0;
  for (const auto& v : values_) sum += v;
  return sum;
}

std::size_t WmcTable::nonzero_count() const {
  std::size_t c = 0;
  for (const auto& v : values_)
    if (v != 0) ++c;
  return c;
}

std::string WmcTable::to_csv() const {
  std::ostringstream out;
  for (const auto& name : psi_) out << "n_" << name << ",";
  out << "value_num,value_den\n";
  for (std::size_t i = 0; i < values_.size(); ++i) {
    for (auto c : counts(i)) out << c << ",";
    out << values_[i].get_num().get_str() << "," << values_[i].get_den().get_str() << "\n";
  }
  return out.str();
}

std::uint64_t grid_bound(std::uint64_t n, int arity) {
  std::uint64_t m = 1;
  for (int i = 0; i < arity; ++i) m *= n;
  return m;
}

}  // namespace c2wfomc
