from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from superact.gaussq import (
    GaussRational,
    format_gauss,
    from_complex,
    gq,
    nullspace,
    parse_gauss,
    rank,
    rref,
    to_complex_array,
)

fractions = st.fractions(max_denominator=50).filter(lambda f: abs(f) < 1000)
gaussians = st.builds(GaussRational, fractions, fractions)


@given(gaussians, gaussians, gaussians)
def test_field_axioms(a, b, c):
    assert (a + b) * c == a * c + b * c
    assert a * b == b * a
    assert (a - b) + b == a
    if b:
        assert (a / b) * b == a


@given(gaussians)
def test_format_parse_round_trip(z):
    assert parse_gauss(format_gauss(z)) == z


@pytest.mark.parametrize("text,value", [
    ("3", GaussRational(3)),
    ("-1/2", GaussRational(Fraction(-1, 2))),
    ("i", GaussRational(0, 1)),
    ("-i", GaussRational(0, -1)),
    ("1/3-2/5*i", GaussRational(Fraction(1, 3), Fraction(-2, 5))),
    ("-7+i", GaussRational(-7, 1)),
])
def test_parse_examples(text, value):
    assert parse_gauss(text) == value


def test_complex_conversion_is_exact():
    z = from_complex(0.1 + 0.25j)
    assert complex(z) == 0.1 + 0.25j
    assert from_complex(0.1 + 0.25j, max_den=100) == GaussRational(Fraction(1, 10), Fraction(1, 4))
    assert gq(3 - 2j) == GaussRational(3, -2)
    with pytest.raises(TypeError):
        gq(0.1)


def test_rref_and_rank_against_numpy():
    gen = np.random.default_rng(4)
    for _ in range(20):
        r, c, k = gen.integers(1, 6, size=3)
        a = gen.integers(-3, 4, size=(r, k)) + 1j * gen.integers(-3, 4, size=(r, k))
        b = gen.integers(-3, 4, size=(k, c)) + 1j * gen.integers(-3, 4, size=(k, c))
        m = a @ b
        rows = [[gq(complex(x)) for x in row] for row in m]
        assert rank(rows) == np.linalg.matrix_rank(m)
        red, piv = rref(rows)
        dense = to_complex_array(red)
        for j, p in enumerate(piv):
            assert dense[j, p] == 1
            assert np.count_nonzero(dense[:, p]) == 1


def test_nullspace_is_exact_kernel():
    rows = [[gq(1), gq(1j), gq(0)], [gq(2), gq(2j), gq(1)]]
    ker = nullspace(rows)
    assert len(ker) == 1
    for v in ker:
        for row in rows:
            assert sum((x * y for x, y in zip(row, v)), GaussRational(0)) == 0
