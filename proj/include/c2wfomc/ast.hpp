#pragma once

// Formula representation for two-variable logic with counting quantifiers and
// cardinality atoms, plus the vocabulary / weight tables shared by all modules.

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "c2wfomc/rational.hpp"

namespace c2wfomc {

/// Names starting with this prefix belong to the rewrite pipeline.
inline constexpr std::string_view kReservedPrefix = "@";

inline bool is_reserved_name(std::string_view name) { return name.starts_with(kReservedPrefix); }

struct Predicate {
  std::string name;
  int arity = 0;
  friend bool operator==(const Predicate&, const Predicate&) = default;
};

enum class Comparator { Eq, Le, Ge, Lt, Gt };

std::string_view to_string(Comparator cmp);
bool holds(std::int64_t lhs, Comparator cmp, std::int64_t rhs);

/// a * |domain| + b, resolved once the domain size is known.
struct AffineBound {
  std::int64_t per_element = 0;
  std::int64_t offset = 0;
  std::int64_t resolve(std::uint64_t domain_size) const {
    return per_element * static_cast<std::int64_t>(domain_size) + offset;
  }
  friend bool operator==(const AffineBound&, const AffineBound&) = default;
};

struct Term {
  enum class Kind { Variable, Constant };
  Kind kind = Kind::Variable;
  std::string name;

  static Term variable(std::string name) { return {Kind::Variable, std::move(name)}; }
  static Term constant(std::string name) { return {Kind::Constant, std::move(name)}; }
  bool is_variable() const { return kind == Kind::Variable; }
  friend bool operator==(const Term&, const Term&) = default;
};

enum class Connective { And, Or, Implies, Iff };
enum class Quantifier { Forall, Exists };

/// Immutable, cheaply copyable handle to a formula tree. Equality is structural.
class Formula {
 public:
  enum class Kind { Top, Bottom, Atom, Equality, Not, Binary, Quantified, Counting, Cardinality };
  struct Node;

  Formula();  // top

  Kind kind() const;
  template <class T>
  const T& as() const;
  template <class T>
  bool is() const;

  const Node* node() const { return node_.get(); }
  bool same_node(const Formula& other) const { return node_ == other.node_; }

  friend bool operator==(const Formula& a, const Formula& b);

  template <class T>
  static Formula make(T payload);

 private:
  explicit Formula(std::shared_ptr<const Node> node) : node_(std::move(node)) {}
  std::shared_ptr<const Node> node_;
};

namespace node {
struct Top {
  friend bool operator==(const Top&, const Top&) = default;
};
struct Bottom {
  friend bool operator==(const Bottom&, const Bottom&) = default;
};
struct Atom {
  std::string predicate;
  std::vector<Term> args;
  friend bool operator==(const Atom&, const Atom&) = default;
};
struct Equality {
  Term lhs, rhs;
  friend bool operator==(const Equality&, const Equality&) = default;
};
struct Not {
  Formula body;
  friend bool operator==(const Not&, const Not&) = default;
};
struct Binary {
  Connective op;
  Formula lhs, rhs;
  friend bool operator==(const Binary&, const Binary&) = default;
};
struct Quantified {
  Quantifier quantifier;
  std::string var;
  Formula body;
  friend bool operator==(const Quantified&, const Quantified&) = default;
};
/// exists[cmp k] var. body, with cmp one of =, <=, >=.
struct Counting {
  Comparator cmp;
  std::uint32_t k;
  std::string var;
  Formula body;
  friend bool operator==(const Counting&, const Counting&) = default;
};
/// |predicate| cmp bound
struct Cardinality {
  std::string predicate;
  Comparator cmp;
  AffineBound bound;
  friend bool operator==(const Cardinality&, const Cardinality&) = default;
};
}  // namespace node

struct Formula::Node {
  std::variant<node::Top, node::Bottom, node::Atom, node::Equality, node::Not, node::Binary,
               node::Quantified, node::Counting, node::Cardinality>
      value;
};

inline Formula::Kind Formula::kind() const { return static_cast<Kind>(node_->value.index()); }

template <class T>
const T& Formula::as() const {
  return std::get<T>(node_->value);
}

template <class T>
bool Formula::is() const {
  return std::holds_alternative<T>(node_->value);
}

template <class T>
Formula Formula::make(T payload) {
  return Formula(std::make_shared<const Node>(Node{std::move(payload)}));
}

// Constructors.
Formula top();
Formula bottom();
Formula atom(std::string predicate, std::vector<Term> args);
Formula atom(std::string predicate, std::initializer_list<std::string_view> variables);
Formula equality(Term lhs, Term rhs);
Formula negate(Formula f);
Formula binary(Connective op, Formula lhs, Formula rhs);
Formula conj(Formula lhs, Formula rhs);
Formula disj(Formula lhs, Formula rhs);
Formula implies(Formula lhs, Formula rhs);
Formula iff(Formula lhs, Formula rhs);
Formula forall(std::string var, Formula body);
Formula exists(std::string var, Formula body);
Formula count_exists(Comparator cmp, std::uint32_t k, std::string var, Formula body);
Formula cardinality(std::string predicate, Comparator cmp, AffineBound bound);

/// Left-nested conjunction / disjunction; empty lists give top / bottom.
Formula conj_all(const std::vector<Formula>& parts);
Formula disj_all(const std::vector<Formula>& parts);

std::set<std::string> free_variables(const Formula& f);
bool is_sentence(const Formula& f);

/// Predicate names with the arities they are used at (first use wins).
std::map<std::string, int> predicates_used(const Formula& f);
bool contains_counting(const Formula& f);
bool contains_quantifier(const Formula& f);
bool contains_cardinality(const Formula& f);
bool contains_constant(const Formula& f);

/// Renames variables everywhere (bound and free) according to `mapping`.
Formula rename_variables(const Formula& f, const std::map<std::string, std::string>& mapping);
/// x <-> y
Formula swap_xy(const Formula& f);
/// Renames predicates; unmapped names are left alone.
Formula rename_predicates(const Formula& f, const std::map<std::string, std::string>& mapping);

/// Immediate children in evaluation order.
std::vector<Formula> children(const Formula& f);
/// Same node kind with replaced children (size must match children(f)).
Formula with_children(const Formula& f, const std::vector<Formula>& kids);

class Vocabulary {
 public:
  /// Throws std::invalid_argument on duplicate names.
  void add_predicate(Predicate p);
  void add_constant(std::string name);

  const Predicate* find(std::string_view name) const;
  bool has_constant(std::string_view name) const;
  const std::vector<Predicate>& predicates() const { return predicates_; }
  const std::vector<std::string>& constants() const { return constants_; }

  friend bool operator==(const Vocabulary&, const Vocabulary&) = default;

 private:
  std::vector<Predicate> predicates_;
  std::vector<std::string> constants_;
};

struct WeightPair {
  Rational positive{1};
  Rational negative{1};
  bool is_unit() const { return positive == 1 && negative == 1; }
  friend bool operator==(const WeightPair&, const WeightPair&) = default;
};

/// Per-predicate (w, w-bar); unlisted predicates weigh (1, 1).
class WeightMap {
 public:
  const WeightPair& get(std::string_view predicate) const;
  void set(std::string predicate, Rational positive, Rational negative);
  const std::map<std::string, WeightPair, std::less<>>& entries() const { return entries_; }
  friend bool operator==(const WeightMap&, const WeightMap&) = default;

 private:
  std::map<std::string, WeightPair, std::less<>> entries_;
};

struct ValidationIssue {
  std::string location;
  std::string reason;
};

struct ValidationReport {
  std::vector<ValidationIssue> issues;
  bool ok() const { return issues.empty(); }
  std::string describe() const;
};

struct ValidationOptions {
  bool allow_reserved = false;
  bool allow_constants = true;
  bool require_sentence = true;
};

/// Checks membership in the supported fragment: closed, variables x and y only,
/// declared predicates of arity <= 2 used at their declared arity.
ValidationReport validate_c2(const Formula& f, const Vocabulary& vocabulary,
                             ValidationOptions options = {});

/// Deterministic generator of "@<base><n>" names that avoids every name it has seen.
class FreshNames {
 public:
  FreshNames() = default;
  explicit FreshNames(const Vocabulary& existing);

  void reserve(std::string name) { used_.insert(std::move(name)); }
  Predicate fresh_predicate(std::string_view base, int arity);

 private:
  std::set<std::string, std::less<>> used_;
  std::map<std::string, int, std::less<>> counters_;
};

}  // namespace c2wfomc
