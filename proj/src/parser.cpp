#include "c2wfomc/parser.hpp"

#include <cctype>
#include <charconv>
#include <limits>
#include <sstream>

namespace c2wfomc {

ParseError::ParseError(int line, int column, const std::string& message)
    : std::runtime_error("line " + std::to_string(line) + ", column " + std::to_string(column) + ": " +
                         message),
      line_(line),
      column_(column) {}

Rational MultiplierFactor::evaluate(std::uint64_t n) const {
  switch (kind) {
    case Kind::FactorialPowNegDomain: return Rational(1) / Rational(pow(factorial(k), n));
    case Kind::BinomialInv: {
      Integer b = binomial(n, k);
      if (b == 0) throw std::domain_error("binomial(" + std::to_string(n) + ", " + std::to_string(k) + ") is zero");
      return Rational(1) / Rational(b);
    }
    case Kind::Constant: return constant;
  }
  return 1;
}

std::string MultiplierFactor::describe() const {
  switch (kind) {
    case Kind::FactorialPowNegDomain: return "factorial(" + std::to_string(k) + ")^-n";
    case Kind::BinomialInv: return "binomial(n," + std::to_string(k) + ")^-1";
    case Kind::Constant: return to_string(constant);
  }
  return "?";
}

Formula ProblemFile::theory() const {
  std::vector<Formula> parts = sentences;
  parts.insert(parts.end(), cardinality.begin(), cardinality.end());
  return conj_all(parts);
}

namespace {

struct Position {
  int line = 1;
  int column = 1;
};

/// Source text of one statement with the original position of every character.
struct Source {
  std::string text;
  std::vector<Position> positions;
  Position end;

  Position at(std::size_t offset) const { return offset < positions.size() ? positions[offset] : end; }
};

enum class Tok { Ident, Int, Sym, End };

struct Token {
  Tok kind = Tok::End;
  std::string text;
  std::size_t offset = 0;
};

bool ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_' || c == '@'; }
bool ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '@' || c == '\''; }

std::vector<Token> lex(const Source& src) {
  static const char* const kSymbols[] = {"<=>", "=>", "<=", ">=", "!=", "(", ")", ",", ".", "~", "&", "|",
                                         "=",   "<",  ">",  "[",  "]",  "*", "+", "-", ":", "/", "^", "!"};
  std::vector<Token> out;
  const std::string& s = src.text;
  std::size_t i = 0;
  while (i < s.size()) {
    char c = s[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
      continue;
    }
    if (ident_start(c)) {
      std::size_t j = i;
      while (j < s.size() && ident_char(s[j])) ++j;
      out.push_back({Tok::Ident, s.substr(i, j - i), i});
      i = j;
      continue;
    }
    if (std::isdigit(static_cast<unsigned char>(c))) {
      std::size_t j = i;
      while (j < s.size() && std::isdigit(static_cast<unsigned char>(s[j]))) ++j;
      out.push_back({Tok::Int, s.substr(i, j - i), i});
      i = j;
      continue;
    }
    bool matched = false;
    for (const char* sym : kSymbols) {
      std::string_view sv(sym);
      if (s.compare(i, sv.size(), sv) == 0) {
        out.push_back({Tok::Sym, std::string(sv), i});
        i += sv.size();
        matched = true;
        break;
      }
    }
    if (!matched) {
      Position p = src.at(i);
      throw ParseError(p.line, p.column, std::string("unexpected character '") + c + "'");
    }
  }
  out.push_back({Tok::End, "", s.size()});
  return out;
}

class FormulaParser {
 public:
  FormulaParser(const Source& src, const Vocabulary& vocab, bool allow_reserved)
      : src_(src), toks_(lex(src)), vocab_(vocab), allow_reserved_(allow_reserved) {}

  Formula parse_whole() {
    Formula f = parse_iff();
    if (peek().kind != Tok::End) fail(peek(), "unexpected '" + peek().text + "'");
    return f;
  }

  [[noreturn]] void fail(const Token& t, const std::string& message) const {
    Position p = src_.at(t.offset);
    throw ParseError(p.line, p.column, message);
  }

 private:
  const Token& peek(std::size_t ahead = 0) const { return toks_[std::min(pos_ + ahead, toks_.size() - 1)]; }
  const Token& next() { return toks_[pos_ < toks_.size() - 1 ? pos_++ : pos_]; }
  bool is_sym(std::string_view s, std::size_t ahead = 0) const {
    const Token& t = peek(ahead);
    return t.kind == Tok::Sym && t.text == s;
  }
  bool accept(std::string_view s) {
    if (!is_sym(s)) return false;
    ++pos_;
    return true;
  }
  void expect(std::string_view s) {
    if (!accept(s)) fail(peek(), "expected '" + std::string(s) + "'" + found());
  }
  std::string found() const {
    return peek().kind == Tok::End ? " at end of input" : ", found '" + peek().text + "'";
  }
  bool is_keyword(std::string_view kw) const { return peek().kind == Tok::Ident && peek().text == kw; }

  Formula parse_iff() {
    Formula lhs = parse_implies();
    while (accept("<=>")) lhs = iff(lhs, parse_implies());
    return lhs;
  }

  Formula parse_implies() {
    Formula lhs = parse_or();
    if (accept("=>")) return implies(lhs, parse_implies());
    return lhs;
  }

  Formula parse_or() {
    Formula lhs = parse_and();
    while (accept("|")) lhs = disj(lhs, parse_and());
    return lhs;
  }

  Formula parse_and() {
    Formula lhs = parse_unary();
    while (accept("&")) lhs = conj(lhs, parse_unary());
    return lhs;
  }

  Formula parse_unary() {
    if (accept("~") || accept("!")) return negate(parse_unary());
    if (is_keyword("forall") || is_keyword("exists")) return parse_quantifier();
    return parse_primary();
  }

  std::string parse_variable() {
    const Token& t = peek();
    if (t.kind != Tok::Ident || is_reserved_word(t.text)) fail(t, "expected a variable" + found());
    ++pos_;
    return t.text;
  }

  Formula parse_quantifier() {
    bool universal = next().text == "forall";
    if (!universal && accept("[")) {
      Comparator cmp;
      if (accept("=")) cmp = Comparator::Eq;
      else if (accept("<=")) cmp = Comparator::Le;
      else if (accept(">=")) cmp = Comparator::Ge;
      else fail(peek(), "expected '=', '<=' or '>=' in counting quantifier" + found());
      std::uint32_t k = parse_count();
      expect("]");
      std::string var = parse_variable();
      expect(".");
      return count_exists(cmp, k, var, parse_iff());
    }
    std::string var = parse_variable();
    expect(".");
    Formula body = parse_iff();
    return universal ? forall(var, body) : exists(var, body);
  }

  std::uint32_t parse_count() {
    const Token& t = peek();
    if (t.kind != Tok::Int) fail(t, "expected a non-negative integer" + found());
    std::uint32_t value = 0;
    auto [ptr, ec] = std::from_chars(t.text.data(), t.text.data() + t.text.size(), value);
    if (ec != std::errc()) fail(t, "count '" + t.text + "' out of range");
    ++pos_;
    return value;
  }

  std::int64_t parse_int64() {
    const Token& t = peek();
    if (t.kind != Tok::Int) fail(t, "expected an integer" + found());
    std::int64_t value = 0;
    auto [ptr, ec] = std::from_chars(t.text.data(), t.text.data() + t.text.size(), value);
    if (ec != std::errc()) fail(t, "integer '" + t.text + "' out of range");
    ++pos_;
    return value;
  }

  static bool is_reserved_word(std::string_view w) {
    return w == "forall" || w == "exists" || w == "true" || w == "false";
  }

  void check_name(const Token& t) {
    if (!allow_reserved_ && is_reserved_name(t.text)) fail(t, "reserved name '" + t.text + "'");
  }

  const Predicate& lookup(const Token& t) {
    check_name(t);
    const Predicate* p = vocab_.find(t.text);
    if (!p) fail(t, "undeclared predicate '" + t.text + "'");
    return *p;
  }

  Term parse_term() {
    const Token& t = peek();
    if (t.kind != Tok::Ident || is_reserved_word(t.text)) fail(t, "expected a variable or constant" + found());
    check_name(t);
    ++pos_;
    return vocab_.has_constant(t.text) ? Term::constant(t.text) : Term::variable(t.text);
  }

  // a*n + b, with terms "k", "k*n", "n", "k n" joined by + or -.
  AffineBound parse_affine() {
    AffineBound out;
    bool first = true;
    while (true) {
      int sign = 1;
      if (accept("-")) sign = -1;
      else if (!first && !accept("+")) break;
      else if (first) accept("+");
      if (peek().kind == Tok::Int) {
        std::int64_t k = parse_int64();
        if (accept("*")) {
          if (!is_keyword("n")) fail(peek(), "expected 'n' after '*'" + found());
          ++pos_;
          out.per_element += sign * k;
        } else {
          out.offset += sign * k;
        }
      } else if (is_keyword("n")) {
        ++pos_;
        out.per_element += sign;
      } else {
        fail(peek(), "expected a cardinality bound" + found());
      }
      first = false;
      if (!is_sym("+") && !is_sym("-")) break;
    }
    return out;
  }

  Formula parse_cardinality() {
    expect("|");
    const Token& name = peek();
    if (name.kind != Tok::Ident) fail(name, "expected a predicate name" + found());
    lookup(name);
    ++pos_;
    expect("|");
    Comparator cmp;
    if (accept("=")) cmp = Comparator::Eq;
    else if (accept("<=")) cmp = Comparator::Le;
    else if (accept(">=")) cmp = Comparator::Ge;
    else if (accept("<")) cmp = Comparator::Lt;
    else if (accept(">")) cmp = Comparator::Gt;
    else fail(peek(), "expected a comparison after cardinality" + found());
    return cardinality(name.text, cmp, parse_affine());
  }

  Formula parse_primary() {
    const Token& t = peek();
    if (accept("(")) {
      Formula f = parse_iff();
      expect(")");
      return f;
    }
    if (is_sym("|")) return parse_cardinality();
    if (t.kind != Tok::Ident) fail(t, "expected a formula" + found());
    if (t.text == "true") {
      ++pos_;
      return top();
    }
    if (t.text == "false") {
      ++pos_;
      return bottom();
    }
    if (is_sym("(", 1)) {
      const Predicate& p = lookup(t);
      pos_ += 2;
      std::vector<Term> args;
      if (!is_sym(")")) {
        do {
          args.push_back(parse_term());
        } while (accept(","));
      }
      expect(")");
      if (static_cast<int>(args.size()) != p.arity)
        fail(t, "predicate '" + p.name + "' has arity " + std::to_string(p.arity) + " but got " +
                    std::to_string(args.size()) + " arguments");
      return atom(p.name, std::move(args));
    }
    if (is_sym("=", 1) || is_sym("!=", 1)) {
      Term lhs = parse_term();
      bool negated = next().text == "!=";
      Term rhs = parse_term();
      Formula eq = equality(lhs, rhs);
      return negated ? negate(eq) : eq;
    }
    // bare identifier: nullary atom
    const Predicate& p = lookup(t);
    if (p.arity != 0)
      fail(t, "predicate '" + p.name + "' has arity " + std::to_string(p.arity) + " but is used without arguments");
    ++pos_;
    return atom(p.name, std::vector<Term>{});
  }

  const Source& src_;
  std::vector<Token> toks_;
  std::size_t pos_ = 0;
  const Vocabulary& vocab_;
  bool allow_reserved_;
};

struct Statement {
  std::string keyword;
  Source body;
  Position start;
};

std::vector<Statement> split_statements(std::string_view text) {
  std::vector<Statement> out;
  int line = 0;
  std::size_t i = 0;
  while (i <= text.size()) {
    std::size_t eol = text.find('\n', i);
    if (eol == std::string_view::npos) eol = text.size();
    std::string_view raw = text.substr(i, eol - i);
    ++line;
    if (!raw.empty() && raw.back() == '\r') raw.remove_suffix(1);
    std::size_t hash = raw.find('#');
    std::string_view content = hash == std::string_view::npos ? raw : raw.substr(0, hash);
    bool blank = content.find_first_not_of(" \t") == std::string_view::npos;
    if (!blank) {
      bool continuation = content.front() == ' ' || content.front() == '\t';
      if (continuation) {
        if (out.empty()) throw ParseError(line, 1, "continuation line without a statement");
        Source& src = out.back().body;
        src.text.push_back(' ');
        src.positions.push_back({line, 1});
        for (std::size_t c = 0; c < content.size(); ++c) {
          src.text.push_back(content[c]);
          src.positions.push_back({line, static_cast<int>(c) + 1});
        }
        src.end = {line, static_cast<int>(content.size()) + 1};
      } else {
        Statement st;
        std::size_t kw_end = content.find_first_of(" \t");
        if (kw_end == std::string_view::npos) kw_end = content.size();
        st.keyword = std::string(content.substr(0, kw_end));
        st.start = {line, 1};
        for (std::size_t c = kw_end; c < content.size(); ++c) {
          st.body.text.push_back(content[c]);
          st.body.positions.push_back({line, static_cast<int>(c) + 1});
        }
        st.body.end = {line, static_cast<int>(content.size()) + 1};
        out.push_back(std::move(st));
      }
    }
    if (eol == text.size()) break;
    i = eol + 1;
  }
  return out;
}

std::vector<std::pair<std::string, std::size_t>> words(const std::string& text) {
  std::vector<std::pair<std::string, std::size_t>> out;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && (std::isspace(static_cast<unsigned char>(text[i])) || text[i] == ',')) ++i;
    if (i >= text.size()) break;
    std::size_t j = i;
    while (j < text.size() && !std::isspace(static_cast<unsigned char>(text[j])) && text[j] != ',') ++j;
    out.emplace_back(text.substr(i, j - i), i);
    i = j;
  }
  return out;
}

[[noreturn]] void fail_at(const Source& src, std::size_t offset, const std::string& message) {
  Position p = src.at(offset);
  throw ParseError(p.line, p.column, message);
}

bool valid_identifier(std::string_view s) {
  if (s.empty() || !ident_start(s.front())) return false;
  for (char c : s)
    if (!ident_char(c)) return false;
  return true;
}

void check_formula(const Formula& f, const Vocabulary& vocab, const Source& src, bool allow_free,
                   bool allow_reserved) {
  ValidationOptions opts;
  opts.allow_reserved = allow_reserved;
  opts.require_sentence = !allow_free;
  ValidationReport report = validate_c2(f, vocab, opts);
  // vocabulary-level reserved-name issues are reported at declaration time
  std::erase_if(report.issues, [](const ValidationIssue& i) { return i.location == "vocabulary"; });
  if (!report.ok()) {
    Position p = src.at(0);
    throw ParseError(p.line, p.column, report.issues.front().location + ": " + report.issues.front().reason);
  }
}

MultiplierFactor parse_multiplier(const Source& src) {
  std::string text;
  for (char c : src.text)
    if (!std::isspace(static_cast<unsigned char>(c))) text.push_back(c);
  MultiplierFactor m;
  auto parse_k = [&](std::string_view digits) {
    std::uint32_t k = 0;
    auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), k);
    if (ec != std::errc() || ptr != digits.data() + digits.size()) fail_at(src, 0, "malformed multiplier");
    return k;
  };
  if (text.starts_with("factorial(") && text.ends_with(")^-n")) {
    m.kind = MultiplierFactor::Kind::FactorialPowNegDomain;
    m.k = parse_k(std::string_view(text).substr(10, text.size() - 10 - 4));
  } else if (text.starts_with("binomial(n,") && text.ends_with(")^-1")) {
    m.kind = MultiplierFactor::Kind::BinomialInv;
    m.k = parse_k(std::string_view(text).substr(11, text.size() - 11 - 4));
  } else {
    try {
      m.kind = MultiplierFactor::Kind::Constant;
      m.constant = parse_rational(text);
    } catch (const std::invalid_argument& e) {
      fail_at(src, 0, std::string("malformed multiplier: ") + e.what());
    }
  }
  return m;
}

}  // namespace

ProblemFile parse_problem(std::string_view text) {
  std::vector<Statement> statements = split_statements(text);
  ProblemFile out;

  // Pass 1: declarations, so formulas may precede the predicates they use.
  for (const auto& st : statements) {
    if (st.keyword == "predicate") {
      auto ws = words(st.body.text);
      if (ws.empty()) throw ParseError(st.start.line, st.start.column, "predicate declaration is empty");
      for (const auto& [w, off] : ws) {
        auto slash = w.find('/');
        if (slash == std::string::npos) fail_at(st.body, off, "expected name/arity, got '" + w + "'");
        std::string name = w.substr(0, slash);
        if (!valid_identifier(name)) fail_at(st.body, off, "invalid predicate name '" + name + "'");
        if (is_reserved_name(name)) fail_at(st.body, off, "reserved name '" + name + "'");
        int arity = -1;
        std::string_view digits(w.data() + slash + 1, w.size() - slash - 1);
        auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), arity);
        if (ec != std::errc() || ptr != digits.data() + digits.size() || arity < 0)
          fail_at(st.body, off, "invalid arity in '" + w + "'");
        if (arity > 2) fail_at(st.body, off, "predicate '" + name + "' has arity " + std::to_string(arity) + " > 2");
        if (out.vocabulary.find(name) || out.vocabulary.has_constant(name))
          fail_at(st.body, off, "duplicate name '" + name + "'");
        out.vocabulary.add_predicate({name, arity});
      }
    } else if (st.keyword == "constant") {
      auto ws = words(st.body.text);
      if (ws.empty()) throw ParseError(st.start.line, st.start.column, "constant declaration is empty");
      for (const auto& [w, off] : ws) {
        if (!valid_identifier(w)) fail_at(st.body, off, "invalid constant name '" + w + "'");
        if (is_reserved_name(w)) fail_at(st.body, off, "reserved name '" + w + "'");
        if (w == "x" || w == "y" || w == "n") fail_at(st.body, off, "'" + w + "' cannot be a constant");
        if (out.vocabulary.has_constant(w) || out.vocabulary.find(w))
          fail_at(st.body, off, "duplicate name '" + w + "'");
        out.vocabulary.add_constant(w);
      }
    }
  }

  for (const auto& st : statements) {
    const Source& body = st.body;
    if (st.keyword == "predicate" || st.keyword == "constant") continue;
    if (st.keyword == "domain") {
      auto ws = words(body.text);
      if (ws.size() != 1) throw ParseError(st.start.line, st.start.column, "domain expects one size");
      std::uint64_t n = 0;
      const std::string& w = ws[0].first;
      auto [ptr, ec] = std::from_chars(w.data(), w.data() + w.size(), n);
      if (ec != std::errc() || ptr != w.data() + w.size()) fail_at(body, ws[0].second, "invalid domain size '" + w + "'");
      if (out.domain_size) throw ParseError(st.start.line, st.start.column, "duplicate domain statement");
      out.domain_size = n;
    } else if (st.keyword == "weight") {
      auto ws = words(body.text);
      if (ws.size() < 2 || ws.size() > 3)
        throw ParseError(st.start.line, st.start.column, "weight expects: name w [wbar]");
      const auto& [name, off] = ws[0];
      if (is_reserved_name(name)) fail_at(body, off, "reserved name '" + name + "'");
      if (!out.vocabulary.find(name)) fail_at(body, off, "undeclared predicate '" + name + "'");
      if (out.weights.entries().contains(name)) fail_at(body, off, "duplicate weight for '" + name + "'");
      Rational w, wbar{1};
      try {
        w = parse_rational(ws[1].first);
      } catch (const std::invalid_argument& e) {
        fail_at(body, ws[1].second, e.what());
      }
      if (ws.size() == 3) {
        try {
          wbar = parse_rational(ws[2].first);
        } catch (const std::invalid_argument& e) {
          fail_at(body, ws[2].second, e.what());
        }
      }
      out.weights.set(name, w, wbar);
    } else if (st.keyword == "sentence" || st.keyword == "cardinality") {
      FormulaParser parser(body, out.vocabulary, false);
      Formula f = parser.parse_whole();
      check_formula(f, out.vocabulary, body, false, false);
      if (st.keyword == "cardinality") {
        if (contains_quantifier(f) || !predicates_used(f).empty()) {
          for (const auto& [name, arity] : predicates_used(f))
            if (arity >= 0)
              throw ParseError(st.start.line, st.start.column,
                               "cardinality statements may only combine cardinality atoms");
          if (contains_quantifier(f))
            throw ParseError(st.start.line, st.start.column,
                             "cardinality statements may only combine cardinality atoms");
        }
        out.cardinality.push_back(f);
      } else {
        out.sentences.push_back(f);
      }
    } else if (st.keyword == "psi") {
      auto ws = words(body.text);
      if (ws.empty()) throw ParseError(st.start.line, st.start.column, "psi list is empty");
      for (const auto& [name, off] : ws) {
        if (!out.vocabulary.find(name)) fail_at(body, off, "undeclared predicate '" + name + "'");
        for (const auto& existing : out.psi)
          if (existing == name) fail_at(body, off, "duplicate psi entry '" + name + "'");
        out.psi.push_back(name);
      }
    } else if (st.keyword == "mln") {
      std::size_t colon = body.text.find(':');
      if (colon == std::string::npos) throw ParseError(st.start.line, st.start.column, "mln expects '<weight>: <formula>'");
      std::string head = body.text.substr(0, colon);
      auto ws = words(head);
      if (ws.size() != 1) throw ParseError(st.start.line, st.start.column, "mln expects '<weight>: <formula>'");
      MlnEntry entry;
      entry.line = st.start.line;
      if (ws[0].first != "hard") {
        try {
          entry.multiplier = parse_rational(ws[0].first);
        } catch (const std::invalid_argument& e) {
          fail_at(body, ws[0].second, e.what());
        }
        if (*entry.multiplier <= 0) fail_at(body, ws[0].second, "mln multiplier must be positive");
      }
      Source rest;
      rest.text = body.text.substr(colon + 1);
      rest.positions.assign(body.positions.begin() + static_cast<std::ptrdiff_t>(colon) + 1, body.positions.end());
      rest.end = body.end;
      FormulaParser parser(rest, out.vocabulary, false);
      entry.formula = parser.parse_whole();
      check_formula(entry.formula, out.vocabulary, rest, true, false);
      out.mln.push_back(std::move(entry));
    } else if (st.keyword == "multiplier") {
      out.multiplier.push_back(parse_multiplier(body));
    } else {
      throw ParseError(st.start.line, st.start.column, "unknown statement '" + st.keyword + "'");
    }
  }
  return out;
}

Formula parse_formula(std::string_view text, const Vocabulary& vocabulary, bool allow_free, bool allow_reserved) {
  Source src;
  src.text = std::string(text);
  int line = 1, col = 1;
  for (char c : src.text) {
    src.positions.push_back({line, col});
    if (c == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  src.end = {line, col};
  FormulaParser parser(src, vocabulary, allow_reserved);
  Formula f = parser.parse_whole();
  check_formula(f, vocabulary, src, allow_free, allow_reserved);
  return f;
}

std::string print_term(const Term& t) { return t.name; }

namespace {

constexpr int kPrecIff = 1, kPrecImplies = 2, kPrecOr = 3, kPrecAnd = 4, kPrecNot = 5, kPrecAtom = 6, kPrecQuant = 0;

int precedence(const Formula& f) {
  switch (f.kind()) {
    case Formula::Kind::Not:
      // "x != y" prints as an atom
      return f.as<node::Not>().body.is<node::Equality>() ? kPrecAtom : kPrecNot;
    case Formula::Kind::Binary:
      switch (f.as<node::Binary>().op) {
        case Connective::And: return kPrecAnd;
        case Connective::Or: return kPrecOr;
        case Connective::Implies: return kPrecImplies;
        case Connective::Iff: return kPrecIff;
      }
      return kPrecIff;
    case Formula::Kind::Quantified:
    case Formula::Kind::Counting: return kPrecQuant;
    default: return kPrecAtom;
  }
}

std::string affine_text(const AffineBound& b) {
  std::string out;
  if (b.per_element != 0) {
    if (b.per_element == 1) out = "n";
    else if (b.per_element == -1) out = "-n";
    else out = std::to_string(b.per_element) + "*n";
    if (b.offset > 0) out += "+" + std::to_string(b.offset);
    else if (b.offset < 0) out += "-" + std::to_string(-b.offset);
  } else {
    out = std::to_string(b.offset);
  }
  return out;
}

std::string connective_text(Connective op) {
  switch (op) {
    case Connective::And: return " & ";
    case Connective::Or: return " | ";
    case Connective::Implies: return " => ";
    case Connective::Iff: return " <=> ";
  }
  return " ? ";
}

std::string print_rec(const Formula& f, bool full);

std::string wrap(const Formula& f, bool parens, bool full) {
  std::string s = print_rec(f, full);
  return parens ? "(" + s + ")" : s;
}

std::string print_rec(const Formula& f, bool full) {
  switch (f.kind()) {
    case Formula::Kind::Top: return "true";
    case Formula::Kind::Bottom: return "false";
    case Formula::Kind::Atom: {
      const auto& a = f.as<node::Atom>();
      std::string out = a.predicate + "(";
      for (std::size_t i = 0; i < a.args.size(); ++i) {
        if (i) out += ",";
        out += print_term(a.args[i]);
      }
      return out + ")";
    }
    case Formula::Kind::Equality: {
      const auto& e = f.as<node::Equality>();
      return print_term(e.lhs) + " = " + print_term(e.rhs);
    }
    case Formula::Kind::Cardinality: {
      const auto& c = f.as<node::Cardinality>();
      return "|" + c.predicate + "| " + std::string(to_string(c.cmp)) + " " + affine_text(c.bound);
    }
    case Formula::Kind::Not: {
      const Formula& body = f.as<node::Not>().body;
      if (body.is<node::Equality>()) {
        const auto& e = body.as<node::Equality>();
        return print_term(e.lhs) + " != " + print_term(e.rhs);
      }
      bool parens = precedence(body) < kPrecNot || (full && precedence(body) != kPrecAtom);
      if (body.is<node::Not>() && body.as<node::Not>().body.is<node::Equality>()) parens = true;
      return "~" + wrap(body, parens, full);
    }
    case Formula::Kind::Binary: {
      const auto& b = f.as<node::Binary>();
      int p = precedence(f);
      bool right_assoc = b.op == Connective::Implies;
      int pl = precedence(b.lhs), pr = precedence(b.rhs);
      bool lp = full ? pl != kPrecAtom && pl != kPrecNot : (pl < p || (pl == p && right_assoc));
      bool rp = full ? pr != kPrecAtom && pr != kPrecNot : (pr < p || (pr == p && !right_assoc));
      if (pl == kPrecQuant) lp = true;
      if (pr == kPrecQuant) rp = true;
      return wrap(b.lhs, lp, full) + connective_text(b.op) + wrap(b.rhs, rp, full);
    }
    case Formula::Kind::Quantified: {
      const auto& q = f.as<node::Quantified>();
      return (q.quantifier == Quantifier::Forall ? "forall " : "exists ") + q.var + ". " + print_rec(q.body, full);
    }
    case Formula::Kind::Counting: {
      const auto& c = f.as<node::Counting>();
      return "exists[" + std::string(to_string(c.cmp)) + std::to_string(c.k) + "] " + c.var + ". " +
             print_rec(c.body, full);
    }
  }
  return "?";
}

}  // namespace

std::string print_formula(const Formula& f) { return print_rec(f, false); }
std::string print_formula_fully_parenthesized(const Formula& f) { return print_rec(f, true); }

std::string print_problem(const ProblemFile& p) {
  std::ostringstream out;
  if (p.domain_size) out << "domain " << *p.domain_size << "\n";
  if (!p.vocabulary.constants().empty()) {
    out << "constant";
    for (const auto& c : p.vocabulary.constants()) out << " " << c;
    out << "\n";
  }
  for (const auto& pr : p.vocabulary.predicates()) out << "predicate " << pr.name << "/" << pr.arity << "\n";
  for (const auto& [name, w] : p.weights.entries())
    out << "weight " << name << " " << to_string(w.positive) << " " << to_string(w.negative) << "\n";
  for (const auto& s : p.sentences) out << "sentence " << print_formula(s) << "\n";
  for (const auto& c : p.cardinality) out << "cardinality " << print_formula(c) << "\n";
  if (!p.psi.empty()) {
    out << "psi";
    for (const auto& name : p.psi) out << " " << name;
    out << "\n";
  }
  for (const auto& m : p.mln)
    out << "mln " << (m.multiplier ? to_string(*m.multiplier) : std::string("hard")) << ": "
        << print_formula(m.formula) << "\n";
  for (const auto& m : p.multiplier) out << "multiplier " << m.describe() << "\n";
  return out.str();
}

}  // namespace c2wfomc
