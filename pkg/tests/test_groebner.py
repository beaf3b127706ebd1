import itertools

import numpy as np
import pytest
import sympy

from superact.gaussq import GaussRational, gq
from superact.groebner import (
    Ideal,
    Polynomial,
    buchberger,
    is_groebner,
    normal_form,
)


def poly(text, names):
    return Polynomial.from_text(text, names)


def to_sympy(p: Polynomial, syms):
    expr = 0
    for e, c in p.terms.items():
        coeff = sympy.Rational(c.re.numerator, c.re.denominator) + \
            sympy.I * sympy.Rational(c.im.numerator, c.im.denominator)
        expr += coeff * sympy.Mul(*[s**k for s, k in zip(syms, e)])
    return sympy.expand(expr)


def monic(expr, syms, order):
    lc = sympy.LC(expr, *syms, order=order)
    return sympy.expand(expr / lc)


def random_poly(gen, n, terms=3, max_deg=2, gaussian=True):
    out = {}
    for _ in range(terms):
        e = tuple(int(x) for x in gen.integers(0, max_deg + 1, size=n))
        if sum(e) > max_deg:
            continue
        re, im = (int(x) for x in gen.integers(-3, 4, size=2))
        out[e] = GaussRational(re, im if gaussian else 0)
    return Polynomial(out, n)


def test_textbook_cases():
    names = ["x", "y"]
    g = buchberger([poly("x^2 + (-1)", names), poly("x + (-1)", names)])
    assert g.complete and g.verified
    assert [p.to_text(names) for p in g.polys] == ["x + (-1)"]
    g = buchberger([poly("x + y", names), poly("x + (-1)*y", names)])
    assert sorted(p.to_text(names) for p in g.polys) == ["x", "y"]


def test_inconsistent_system_is_unit():
    names = ["x", "y"]
    g = buchberger([poly("x*y + (-1)", names), poly("x", names)])
    assert g.is_unit()


def test_text_round_trip_with_greek_names():
    names = ["ψ0", "ψ1", "φ0"]
    p = poly("(1/2-3*i)*ψ0^2*φ0 + (i)*ψ1 + (-7)", names)
    assert Polynomial.from_text(p.to_text(names), names) == p
    ideal = Ideal([p, poly("ψ0 + φ0", names)], names)
    assert Ideal.from_text(ideal.to_text(), names).generators == ideal.generators


def test_budget_exhaustion_is_reported():
    names = ["x", "y", "z"]
    gens = [poly(t, names) for t in ("x^2 + (-1)*y*z", "y^2 + (-1)*x*z + (3)", "z^2 + (-1)*x*y + (-2)")]
    g = buchberger(gens, budget=3)
    assert not g.complete
    assert not g.is_unit()


@pytest.mark.parametrize("seed", range(25))
def test_matches_sympy_reduced_basis(seed):
    gen = np.random.default_rng(seed)
    n = int(gen.integers(2, 4))
    syms = sympy.symbols(f"x0:{n}")
    gens = [random_poly(gen, n, terms=3) for _ in range(int(gen.integers(2, 4)))]
    gens = [g for g in gens if not g.is_zero()]
    if not gens:
        return
    ours = buchberger(gens, order="grevlex")
    assert ours.complete and ours.verified
    ref = sympy.groebner([to_sympy(g, syms) for g in gens], *syms, order="grevlex",
                         extension=sympy.I)
    ours_set = {sympy.expand(to_sympy(p, syms)) for p in ours.polys}
    ref_set = {monic(p, syms, "grevlex") for p in ref.exprs}
    assert ours_set == ref_set


@pytest.mark.parametrize("seed", range(10))
def test_lex_basis_matches_sympy(seed):
    gen = np.random.default_rng(100 + seed)
    syms = sympy.symbols("x0:2")
    gens = [random_poly(gen, 2, terms=3, gaussian=False) for _ in range(2)]
    gens = [g for g in gens if not g.is_zero()]
    if not gens:
        return
    ours = buchberger(gens, order="lex")
    ref = sympy.groebner([to_sympy(g, syms) for g in gens], *syms, order="lex")
    ours_set = {to_sympy(p, syms) for p in ours.polys}
    ref_set = {monic(p, syms, "lex") for p in ref.exprs}
    assert ours_set == ref_set


def test_basis_generates_same_ideal():
    gen = np.random.default_rng(7)
    gens = [random_poly(gen, 3, terms=4) for _ in range(3)]
    g = buchberger(gens)
    assert is_groebner(g.polys)
    for f in gens:
        assert normal_form(f, g.polys).is_zero()
    # any combination of generators also reduces to zero
    combo = gens[0] * gens[1] + gens[2] * Polynomial.variable(0, 3)
    assert normal_form(combo, g.polys).is_zero()


def test_unit_detection_agrees_with_sympy_on_bilinear_systems():
    gen = np.random.default_rng(3)
    for _ in range(6):
        names = ["a0", "a1", "b0", "b1"]
        syms = sympy.symbols(" ".join(names))
        gens = []
        for _ in range(3):
            c = gen.integers(-2, 3, size=(2, 2)) + 1j * gen.integers(-2, 3, size=(2, 2))
            terms = {}
            for i, j in itertools.product(range(2), range(2)):
                if c[i, j]:
                    e = [0, 0, 0, 0]
                    e[i] += 1
                    e[2 + j] += 1
                    terms[tuple(e)] = gq(complex(c[i, j]))
            if terms:
                gens.append(Polynomial(terms, 4))
        gens.append(Polynomial({(1, 0, 0, 0): gq(1), (0, 0, 0, 0): gq(-1)}, 4))
        gens.append(Polynomial({(0, 0, 1, 0): gq(1), (0, 0, 0, 0): gq(-1)}, 4))
        ours = buchberger(gens)
        ref = sympy.groebner([to_sympy(g, syms) for g in gens], *syms, order="grevlex",
                             extension=sympy.I)
        assert ours.is_unit() == (list(ref.exprs) == [1])
