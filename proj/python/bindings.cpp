#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "c2wfomc/mln.hpp"
#include "c2wfomc/oracle.hpp"
#include "c2wfomc/parser.hpp"
#include "c2wfomc/transform.hpp"
#include "c2wfomc/wmc.hpp"

namespace py = pybind11;
using namespace c2wfomc;

namespace {

// Exact values cross the boundary as "p/q" strings; the Python side wraps them in Fraction.
std::string exact(const Rational& q) { return q.get_str(); }

CompiledProblem compile_text(const std::string& text) {
  ProblemFile pf = parse_problem(text);
  if (!pf.mln.empty()) throw std::invalid_argument("problem has an mln section; use partition_function");
  return compile(pf);
}

TableOptions table_options(const std::string& backend, unsigned workers) {
  TableOptions o;
  o.backend = parse_backend(backend);
  o.workers = workers;
  return o;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Exact weighted first-order model counting for C2";

  py::register_exception<ParseError>(m, "ParseError", PyExc_ValueError);
  py::register_exception<OracleLimitError>(m, "OracleLimitError", PyExc_RuntimeError);
  py::register_exception<UndefinedDistribution>(m, "UndefinedDistribution", PyExc_ZeroDivisionError);

  m.def(
      "count",
      [](const std::string& text, const std::vector<std::uint64_t>& sizes, const std::string& backend,
         unsigned workers) {
        CompiledProblem cp = compile_text(text);
        TableOptions o = table_options(backend, workers);
        std::vector<std::string> out;
        py::gil_scoped_release release;
        for (auto n : sizes) out.push_back(exact(count(cp, n, o)));
        return out;
      },
      py::arg("text"), py::arg("sizes"), py::arg("backend") = "interpolation", py::arg("workers") = 1);

  m.def(
      "table",
      [](const std::string& text, std::uint64_t n, const std::string& backend, unsigned workers) {
        ProblemFile pf = parse_problem(text);
        if (pf.psi.empty()) throw std::invalid_argument("table needs a psi line");
        CompiledProblem cp = compile(pf);
        WmcTable t;
        {
          py::gil_scoped_release release;
          t = constrained_table(cp, pf.psi, n, table_options(backend, workers));
        }
        py::dict entries;
        for (std::size_t i = 0; i < t.size(); ++i) {
          if (t.at_index(i) == 0) continue;
          auto c = t.counts(i);
          entries[py::tuple(py::cast(c))] = exact(t.at_index(i));
        }
        return py::make_tuple(t.psi(), entries);
      },
      py::arg("text"), py::arg("n"), py::arg("backend") = "interpolation", py::arg("workers") = 1);

  m.def(
      "brute_count",
      [](const std::string& text, std::uint64_t n) {
        ProblemFile pf = parse_problem(text);
        Rational v = brute_wfomc(pf.theory(), pf.vocabulary, pf.weights, n);
        for (const auto& f : pf.multiplier) v *= f.evaluate(n);
        return exact(v);
      },
      py::arg("text"), py::arg("n"));

  m.def(
      "partition_function",
      [](const std::string& text, std::uint64_t n) {
        MlnProblem p = mln_problem(parse_problem(text));
        py::gil_scoped_release release;
        return exact(partition_function(p, n));
      },
      py::arg("text"), py::arg("n"));

  m.def(
      "marginal",
      [](const std::string& text, const std::string& query, std::uint64_t n) {
        ProblemFile pf = parse_problem(text);
        MlnProblem p = mln_problem(pf);
        Formula q = parse_formula(query, pf.vocabulary);
        py::gil_scoped_release release;
        return exact(marginal(p, q, n));
      },
      py::arg("text"), py::arg("query"), py::arg("n"));

  m.def("explain", [](const std::string& text) { return describe_trace(compile_text(text)); }, py::arg("text"));

  m.def(
      "normalize",
      [](const std::string& text) { return print_problem(parse_problem(text)); }, py::arg("text"));
}
