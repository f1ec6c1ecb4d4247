from fractions import Fraction
from math import comb, factorial

import pytest

import c2wfomc

HEADS_TAILS = """
predicate heads/1 tails/1
weight heads 2 1
sentence forall x. (heads(x) | tails(x)) & (~heads(x) | ~tails(x))
psi heads
"""

REGULAR2 = """
predicate e/2
sentence forall x. ~e(x,x)
sentence forall x. forall y. (e(x,y) => e(y,x))
sentence forall x. exists[=2] y. e(x,y)
"""


def test_heads_tails():
    assert c2wfomc.count(HEADS_TAILS, 2) == 9
    assert c2wfomc.brute_count(HEADS_TAILS, 2) == 9


def test_sequence_and_backends():
    want = [1, 3, 12, 70, 465]
    assert c2wfomc.count(REGULAR2, range(3, 8)) == want
    assert c2wfomc.count(REGULAR2, range(3, 8), backend="multivariate", workers=2) == want


def test_table():
    psi, entries = c2wfomc.table(HEADS_TAILS, 4)
    assert psi == ["heads"]
    assert entries == {(k,): Fraction(comb(4, k) * 2**k) for k in range(5)}


def test_bijections():
    text = "predicate f/2\nsentence forall x. exists[=1] y. f(x,y)\nsentence forall y. exists[=1] x. f(x,y)\n"
    assert c2wfomc.count(text, range(1, 7)) == [factorial(n) for n in range(1, 7)]


def test_mln():
    text = "predicate sm/1\nmln 2: sm(x)\n"
    assert c2wfomc.partition_function(text, 2) == 9
    assert c2wfomc.marginal(text, "forall x. sm(x)", 1) == Fraction(2, 3)


def test_errors():
    with pytest.raises(ValueError):
        c2wfomc.count("predicate p/1\nsentence forall z. p(z)\n", 2)
    with pytest.raises(c2wfomc.UndefinedDistribution):
        c2wfomc.marginal("predicate sm/1\nmln hard: sm(x) & ~sm(x)\n", "exists x. sm(x)", 2)


def test_explain_and_normalize():
    assert "multiplier" in c2wfomc.explain(REGULAR2)
    again = c2wfomc.normalize(c2wfomc.normalize(HEADS_TAILS))
    assert again == c2wfomc.normalize(HEADS_TAILS)
