// Command-line front end: count, table, mln, check, explain.

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <thread>

#include "c2wfomc/mln.hpp"
#include "c2wfomc/oracle.hpp"
#include "c2wfomc/parser.hpp"
#include "c2wfomc/transform.hpp"
#include "c2wfomc/wmc.hpp"

using namespace c2wfomc;
using json = nlohmann::json;

namespace {

enum Exit { kOk = 0, kInput = 1, kEngine = 2, kMismatch = 3 };

/// Input or usage problem: exit code 1.
struct InputError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Lifted and brute-force paths disagree: exit code 3.
struct Mismatch : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct RunConfig {
  std::string command;
  std::string input;
  std::string sizes;
  std::string backend = "interpolation";
  double tolerance = 1e-6;
  unsigned workers = std::max(1u, std::thread::hardware_concurrency());
  std::string format = "plain";
  int decimal = -1;
  std::size_t cap = kDefaultAtomCap;
  std::string query;
  int log_weights = -1;
  bool atomic_fast_path = false;
  bool faithful_negation = false;
  bool timing = false;
  bool corrupt_multiplier = false;
};

std::vector<std::uint64_t> parse_sizes(const std::string& text, const ProblemFile& pf) {
  if (text.empty()) {
    if (!pf.domain_size) throw InputError("no domain size: pass --n or add a 'domain' line");
    return {*pf.domain_size};
  }
  auto number = [&](const std::string& s) -> std::uint64_t {
    if (s.empty() || s.find_first_not_of("0123456789") != std::string::npos)
      throw InputError("bad domain size '" + s + "' in --n " + text);
    return std::stoull(s);
  };
  std::vector<std::uint64_t> out;
  if (auto dots = text.find(".."); dots != std::string::npos) {
    std::uint64_t a = number(text.substr(0, dots)), b = number(text.substr(dots + 2));
    if (a > b) throw InputError("empty size range " + text);
    for (std::uint64_t n = a; n <= b; ++n) out.push_back(n);
    return out;
  }
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(number(item));
  if (out.empty()) throw InputError("empty size list");
  return out;
}

ProblemFile load(const std::string& path) {
  std::string text;
  if (path == "-") {
    std::stringstream ss;
    ss << std::cin.rdbuf();
    text = ss.str();
  } else {
    std::ifstream in(path);
    if (!in) throw InputError("cannot read " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    text = ss.str();
  }
  return parse_problem(text);
}

json factors_json(const std::vector<MultiplierFactor>& a, const std::vector<MultiplierFactor>& b = {}) {
  json out = json::array();
  for (const auto& f : a) out.push_back(f.describe());
  for (const auto& f : b) out.push_back(f.describe());
  return out;
}

std::string fixed(double v) {
  std::ostringstream o;
  o << std::setprecision(12) << v;
  return o.str();
}

class Runner {
 public:
  Runner(RunConfig cfg, std::ostream& out) : cfg_(std::move(cfg)), out_(out) {}

  void run() {
    pf_ = load(cfg_.input);
    if (cfg_.format != "plain" && cfg_.format != "csv" && cfg_.format != "jsonl")
      throw InputError("unknown format '" + cfg_.format + "'");
    try {
      backend_ = parse_backend(cfg_.backend);
    } catch (const std::invalid_argument& e) {
      throw InputError(e.what());
    }
    if (cfg_.tolerance <= 0) throw InputError("tolerance must be positive");
    topts_.backend = backend_;
    topts_.tolerance = cfg_.tolerance;
    topts_.workers = cfg_.workers;
    copts_.atomic_fast_path = cfg_.atomic_fast_path;
    copts_.faithful_negation = cfg_.faithful_negation;

    if (cfg_.command == "count") return count_cmd();
    if (cfg_.command == "table") return table_cmd();
    if (cfg_.command == "mln") return mln_cmd();
    if (cfg_.command == "check") return check_cmd();
    if (cfg_.command == "explain") return explain_cmd();
    throw InputError("unknown command " + cfg_.command);
  }

 private:
  CompiledProblem compile_file() {
    if (!pf_.mln.empty()) throw InputError("the file has an mln section; use the mln command");
    try {
      return compile(pf_, copts_);
    } catch (const std::invalid_argument& e) {
      throw InputError(e.what());
    }
  }

  template <class F>
  double timed(F&& f) {
    auto t0 = std::chrono::steady_clock::now();
    f();
    double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    if (cfg_.timing) std::cerr << cfg_.command << ": " << fixed(ms) << " ms\n";
    return ms;
  }

  void emit_exact(std::uint64_t n, const Rational& v, const TableReport& rep, const json& mult, double ms,
                  std::vector<std::string>& plain, std::vector<std::string>& decimals, bool& header) {
    if (cfg_.format == "plain") {
      plain.push_back(to_string(v));
      if (cfg_.decimal >= 0) decimals.push_back(to_decimal(v, cfg_.decimal));
    } else if (cfg_.format == "csv") {
      if (!header) out_ << "n,value_num,value_den" << (cfg_.decimal >= 0 ? ",decimal" : "") << "\n";
      header = true;
      out_ << n << "," << v.get_num() << "," << v.get_den();
      if (cfg_.decimal >= 0) out_ << "," << to_decimal(v, cfg_.decimal);
      out_ << "\n";
    } else {
      json j{{"command", cfg_.command}, {"n", n}, {"value", to_string(v)}, {"backend", cfg_.backend},
             {"nodes", rep.nodes}, {"held_out_checked", rep.held_out_checked}, {"multiplier", mult},
             {"wall_ms", ms}};
      if (cfg_.decimal >= 0) j["decimal"] = to_decimal(v, cfg_.decimal);
      out_ << j.dump() << "\n";
    }
  }

  void flush_plain(const std::vector<std::string>& plain, const std::vector<std::string>& decimals) {
    if (cfg_.format != "plain") return;
    for (std::size_t i = 0; i < plain.size(); ++i) out_ << (i ? " " : "") << plain[i];
    out_ << "\n";
    if (!decimals.empty()) {
      for (std::size_t i = 0; i < decimals.size(); ++i) out_ << (i ? " " : "") << decimals[i];
      out_ << "\n";
    }
  }

  void count_cmd() {
    CompiledProblem cp = compile_file();
    auto sizes = parse_sizes(cfg_.sizes, pf_);
    json mult = factors_json(cp.multiplier, cp.extra_multiplier);
    std::vector<std::string> plain, decimals;
    bool header = false;
    for (auto n : sizes) {
      if (backend_ == Backend::Dft) {
        double v = 0;
        double ms = timed([&] { v = count_approx(cp, n, cfg_.tolerance, cfg_.workers); });
        if (cfg_.format == "plain") {
          plain.push_back(fixed(v));
        } else if (cfg_.format == "csv") {
          if (!header) out_ << "n,value\n";
          header = true;
          out_ << n << "," << fixed(v) << "\n";
        } else {
          out_ << json{{"command", "count"}, {"n", n}, {"value", v}, {"backend", "dft"},
                       {"tolerance", cfg_.tolerance}, {"multiplier", mult}, {"wall_ms", ms}}
                      .dump()
               << "\n";
        }
        continue;
      }
      Rational v;
      TableReport rep;
      double ms = timed([&] { v = count(cp, n, topts_, &rep); });
      emit_exact(n, v, rep, mult, ms, plain, decimals, header);
    }
    flush_plain(plain, decimals);
  }

  void table_cmd() {
    if (pf_.psi.empty()) throw InputError("table needs a psi section listing the predicates to tabulate");
    for (const auto& p : pf_.psi)
      if (!pf_.vocabulary.find(p)) throw InputError("psi predicate '" + p + "' is not declared");
    CompiledProblem cp = compile_file();
    auto sizes = parse_sizes(cfg_.sizes, pf_);
    if (sizes.size() > 1 && cfg_.format != "jsonl")
      throw InputError("table takes a single domain size unless --format jsonl");
    for (auto n : sizes) {
      if (backend_ == Backend::Dft) {
        if (!cp.psi.empty() || n < cp.min_domain)
          throw InputError("the dft backend tabulates problems without cardinality or counting constraints only");
        ApproxTable t = dft_wmc_table(cp.cnf, cp.weights, pf_.psi, n, cfg_.tolerance, cfg_.workers);
        if (!t.flagged.empty())
          throw DftResidueError("inverse DFT left an imaginary residue of " + fixed(t.max_imaginary));
        double mult = cp.multiplier_value(n).get_d();
        WmcTable shape(pf_.psi, t.bounds);
        if (cfg_.format == "jsonl") {
          for (std::size_t i = 0; i < t.values.size(); ++i)
            out_ << json{{"n", n}, {"counts", shape.counts(i)}, {"value", mult * t.values[i]}}.dump() << "\n";
        } else {
          for (const auto& p : pf_.psi) out_ << "n_" << p << ",";
          out_ << "value\n";
          for (std::size_t i = 0; i < t.values.size(); ++i) {
            for (auto c : shape.counts(i)) out_ << c << ",";
            out_ << fixed(mult * t.values[i]) << "\n";
          }
        }
        continue;
      }
      WmcTable t;
      TableReport rep;
      double ms = timed([&] { t = constrained_table(cp, pf_.psi, n, topts_, &rep); });
      if (cfg_.format == "csv") {
        out_ << t.to_csv();
      } else if (cfg_.format == "plain") {
        for (std::size_t i = 0; i < t.size(); ++i) {
          if (t.at_index(i) == 0) continue;
          auto c = t.counts(i);
          for (std::size_t k = 0; k < c.size(); ++k) out_ << (k ? " " : "") << "|" << pf_.psi[k] << "|=" << c[k];
          out_ << "  " << to_string(t.at_index(i));
          if (cfg_.decimal >= 0) out_ << "  " << to_decimal(t.at_index(i), cfg_.decimal);
          out_ << "\n";
        }
      } else {
        for (std::size_t i = 0; i < t.size(); ++i) {
          json j{{"n", n}, {"counts", t.counts(i)}, {"value", to_string(t.at_index(i))}};
          if (i == 0) {
            j["psi"] = pf_.psi;
            j["backend"] = cfg_.backend;
            j["nodes"] = rep.nodes;
            j["multiplier"] = factors_json(cp.multiplier, cp.extra_multiplier);
            j["wall_ms"] = ms;
          }
          out_ << j.dump() << "\n";
        }
      }
    }
  }

  MlnProblem mln_from_file(std::vector<std::string>& notes) {
    if (pf_.mln.empty()) throw InputError("the file has no mln section");
    MlnProblem m = mln_problem(pf_);
    if (cfg_.log_weights >= 0) {
      for (std::size_t j = 0; j < m.formulas.size(); ++j) {
        auto& f = m.formulas[j];
        if (!f.multiplier) continue;
        Rational w = *f.multiplier;
        f.multiplier = exp_approximation(w, static_cast<unsigned>(cfg_.log_weights));
        notes.push_back("mln " + std::to_string(j + 1) + ": exp(" + to_string(w) + ") taken as " +
                        to_string(*f.multiplier));
      }
    }
    for (std::size_t j = 0; j < m.formulas.size(); ++j)
      if (m.formulas[j].multiplier && *m.formulas[j].multiplier <= 0)
        throw InputError("mln line " + std::to_string(pf_.mln[j].line) + ": multiplier must be positive");
    return m;
  }

  void mln_cmd() {
    if (backend_ == Backend::Dft) throw InputError("the mln command is exact; choose interpolation or multivariate");
    std::vector<std::string> notes;
    MlnProblem m = mln_from_file(notes);
    std::optional<Formula> query;
    if (!cfg_.query.empty()) query = parse_formula(cfg_.query, pf_.vocabulary);
    auto sizes = parse_sizes(cfg_.sizes, pf_);
    MlnOptions opts{topts_, copts_};
    std::vector<std::string> plain, decimals;
    bool header = false;
    if (cfg_.format == "plain")
      for (const auto& s : notes) out_ << "# " << s << "\n";
    for (auto n : sizes) {
      Rational v;
      double ms = 0;
      try {
        ms = timed([&] { v = query ? marginal(m, *query, n, opts) : partition_function(m, n, opts); });
      } catch (const std::invalid_argument& e) {
        throw InputError(e.what());
      }
      if (cfg_.format == "jsonl") {
        json j{{"command", "mln"}, {"n", n}, {query ? "marginal" : "partition_function", to_string(v)},
               {"backend", cfg_.backend}, {"wall_ms", ms}};
        if (query) j["query"] = print_formula(*query);
        if (!notes.empty()) j["approximations"] = notes;
        if (cfg_.decimal >= 0) j["decimal"] = to_decimal(v, cfg_.decimal);
        out_ << j.dump() << "\n";
      } else {
        emit_exact(n, v, TableReport{}, json::array(), ms, plain, decimals, header);
      }
    }
    flush_plain(plain, decimals);
  }

  void check_cmd() {
    if (backend_ == Backend::Dft) throw InputError("check compares exact values; choose an exact backend");
    auto sizes = parse_sizes(cfg_.sizes, pf_);
    bool mismatch = false;
    std::vector<MultiplierFactor> corrupt;
    if (cfg_.corrupt_multiplier) corrupt.push_back({MultiplierFactor::Kind::Constant, 0, Rational(2)});

    auto report = [&](std::uint64_t n, const std::string& what, const Rational& lifted, const Rational& brute) {
      if (lifted == brute) return true;
      out_ << "MISMATCH n=" << n << " " << what << " lifted=" << to_string(lifted) << " brute=" << to_string(brute)
           << "\n";
      mismatch = true;
      return false;
    };

    if (!pf_.mln.empty()) {
      std::vector<std::string> notes;
      MlnProblem m = mln_from_file(notes);
      m.multiplier.insert(m.multiplier.end(), corrupt.begin(), corrupt.end());
      Formula background = pf_.theory();
      auto file_mult = [&](std::uint64_t n) {
        Rational r = 1;
        for (const auto& f : pf_.multiplier) r *= f.evaluate(n);
        return r;
      };
      for (auto n : sizes) {
        Rational z = partition_function(m, n, {topts_, copts_});
        Rational bz = file_mult(n) * brute_mln_partition(m.formulas, pf_.vocabulary, n, background, cfg_.cap);
        bool ok = report(n, "partition function", z, bz);
        if (ok && !cfg_.query.empty() && bz != 0) {
          Formula q = parse_formula(cfg_.query, pf_.vocabulary);
          Rational p = marginal(m, q, n, {topts_, copts_});
          Rational bq = brute_mln_partition(m.formulas, pf_.vocabulary, n, conj(background, q), cfg_.cap);
          ok = report(n, "marginal", p, bq / (bz / file_mult(n)));
        }
        if (ok) out_ << "EXACT-MATCH n=" << n << "\n";
      }
    } else {
      CompiledProblem cp = compile_file();
      cp.extra_multiplier.insert(cp.extra_multiplier.end(), corrupt.begin(), corrupt.end());
      Formula theory = pf_.theory();
      for (auto n : sizes) {
        Rational mult = 1;
        for (const auto& f : pf_.multiplier) mult *= f.evaluate(n);
        Rational lifted = count(cp, n, topts_);
        Rational brute = mult * brute_wfomc(theory, pf_.vocabulary, pf_.weights, n, cfg_.cap);
        bool ok = report(n, "count", lifted, brute);
        if (ok && !pf_.psi.empty()) {
          WmcTable lt = constrained_table(cp, pf_.psi, n, topts_);
          WmcTable bt = brute_wmc_table(pf_.psi, theory, pf_.vocabulary, pf_.weights, n, cfg_.cap);
          for (std::size_t i = 0; i < lt.size() && ok; ++i) {
            std::ostringstream where;
            auto c = lt.counts(i);
            where << "entry (";
            for (std::size_t k = 0; k < c.size(); ++k) where << (k ? ", " : "") << pf_.psi[k] << "=" << c[k];
            where << ")";
            ok = report(n, where.str(), lt.at_index(i), mult * bt.at_index(i));
          }
        }
        if (ok) out_ << "EXACT-MATCH n=" << n << "\n";
      }
    }
    if (mismatch) throw Mismatch("lifted and brute-force results differ");
  }

  void explain_cmd() {
    CompiledProblem cp = compile_file();
    out_ << describe_trace(cp);
    out_ << "weights:\n";
    for (const auto& [name, w] : cp.weights.entries())
      if (!w.is_unit()) out_ << "  " << name << " " << to_string(w.positive) << " " << to_string(w.negative) << "\n";
    if (cp.min_domain > 0) out_ << "valid from domain size " << cp.min_domain << "\n";
  }

  RunConfig cfg_;
  std::ostream& out_;
  ProblemFile pf_;
  Backend backend_ = Backend::Interpolation;
  TableOptions topts_;
  CompileOptions copts_;
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Exact weighted first-order model counting for two-variable logic with counting quantifiers"};
  app.require_subcommand(1, 1);
  RunConfig cfg;

  auto add_common = [&](CLI::App* sub, bool sizes) {
    sub->add_option("input", cfg.input, "problem file, or - for stdin")->required();
    if (sizes) sub->add_option("--n", cfg.sizes, "domain size: k, a..b or a comma list");
    sub->add_option("--backend", cfg.backend, "interpolation | multivariate | dft");
    sub->add_option("--tolerance", cfg.tolerance, "dft imaginary-residue tolerance");
    sub->add_option("--workers", cfg.workers, "engine evaluation threads")->check(CLI::PositiveNumber);
    sub->add_option("--format", cfg.format, "plain | csv | jsonl");
    sub->add_option("--decimal", cfg.decimal, "also print values with this many decimals");
    sub->add_flag("--atomic-fast-path", cfg.atomic_fast_path, "do not name counted atoms");
    sub->add_flag("--faithful-negation", cfg.faithful_negation, "two-application negation removal");
    sub->add_flag("--timing", cfg.timing, "wall time per size on stderr");
  };
  auto* count = app.add_subcommand("count", "weighted model count per domain size");
  add_common(count, true);
  auto* table = app.add_subcommand("table", "constrained count broken down by the psi cardinalities");
  add_common(table, true);
  auto* mln = app.add_subcommand("mln", "partition function or marginal of the mln section");
  add_common(mln, true);
  mln->add_option("--query", cfg.query, "query sentence for a marginal");
  mln->add_option("--log-weights", cfg.log_weights, "read mln multipliers as log-weights; digits of exp kept");
  auto* check = app.add_subcommand("check", "compare against brute-force enumeration");
  add_common(check, true);
  check->add_option("--cap", cfg.cap, "largest number of ground atoms to enumerate");
  check->add_option("--query", cfg.query, "also check this marginal (mln files)");
  check->add_option("--log-weights", cfg.log_weights, "read mln multipliers as log-weights");
  check->add_flag("--corrupt-multiplier", cfg.corrupt_multiplier)->group("");
  auto* explain = app.add_subcommand("explain", "print the rewrite trace and the clauses");
  add_common(explain, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kOk : kInput;
  }
  cfg.command = app.get_subcommands().front()->get_name();

  std::ostringstream out;
  int code = kOk;
  try {
    Runner(cfg, out).run();
  } catch (const Mismatch& e) {
    std::cout << out.str();  // the certificate is the output of a failing check
    std::cerr << "error: " << e.what() << "\n";
    return kMismatch;
  } catch (const ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    code = kInput;
  } catch (const InputError& e) {
    std::cerr << "error: " << e.what() << "\n";
    code = kInput;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    code = kInput;
  } catch (const HeldOutMismatch& e) {
    std::cerr << "error: " << e.what() << "\n";
    code = kMismatch;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    code = kEngine;
  }
  if (code != kOk) return code;
  std::cout << out.str();
  return kOk;
}
