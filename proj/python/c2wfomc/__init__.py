"""Exact weighted first-order model counting for C2 sentences with cardinality constraints.

Problems are given in the same text format the command-line tool reads. Counts come back as
``fractions.Fraction``.
"""

from fractions import Fraction

from . import _core
from ._core import OracleLimitError, ParseError, UndefinedDistribution

__all__ = [
    "OracleLimitError",
    "ParseError",
    "UndefinedDistribution",
    "brute_count",
    "count",
    "explain",
    "marginal",
    "normalize",
    "partition_function",
    "table",
]


def count(text, n, backend="interpolation", workers=1):
    """Weighted model count for one domain size, or a list of counts for an iterable of sizes."""
    if isinstance(n, int):
        return Fraction(_core.count(text, [n], backend, workers)[0])
    return [Fraction(v) for v in _core.count(text, list(n), backend, workers)]


def table(text, n, backend="interpolation", workers=1):
    """Constrained count broken down by the psi cardinalities: (psi, {counts: value}), zeros omitted."""
    psi, entries = _core.table(text, n, backend, workers)
    return psi, {key: Fraction(v) for key, v in entries.items()}


def brute_count(text, n):
    """Count by enumerating every world; only for tiny domains."""
    return Fraction(_core.brute_count(text, n))


def partition_function(text, n):
    return Fraction(_core.partition_function(text, n))


def marginal(text, query, n):
    return Fraction(_core.marginal(text, query, n))


def explain(text):
    return _core.explain(text)


def normalize(text):
    """The problem re-printed in canonical form."""
    return _core.normalize(text)
