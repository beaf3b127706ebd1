"""Sparse multivariate polynomials over Q(i) and Buchberger's algorithm.

Polynomials are dictionaries from exponent tuples to :class:`GaussRational`
coefficients.  The Gröbner engine is the classical Buchberger loop with the
Gebauer-Möller pair update (chain and product criteria) and the normal
selection strategy; every intermediate basis element is kept monic.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping, Sequence

from .gaussq import ONE, ZERO, GaussRational, format_gauss, gq, parse_gauss

__all__ = [
    "Polynomial",
    "Ideal",
    "GroebnerBasis",
    "buchberger",
    "monomial_key",
    "BudgetExceeded",
]

Monomial = tuple  # tuple[int, ...]


def _grevlex_key(e: Monomial):
    return (sum(e), tuple(-x for x in reversed(e)))


def _lex_key(e: Monomial):
    return e


_ORDERS: dict[str, Callable] = {"grevlex": _grevlex_key, "lex": _lex_key}


def monomial_key(order: str) -> Callable:
    try:
        return _ORDERS[order]
    except KeyError:
        raise ValueError(f"unknown monomial order {order!r}") from None


class Polynomial:
    """Element of Q(i)[x_0, ..., x_{n-1}]; zero coefficients are never stored."""

    __slots__ = ("terms", "nvars")

    def __init__(self, terms: Mapping[Monomial, object], nvars: int):
        self.nvars = nvars
        clean = {}
        for e, c in terms.items():
            if len(e) != nvars:
                raise ValueError("exponent length does not match variable count")
            c = gq(c)
            if not c.is_zero():
                clean[tuple(e)] = c
        self.terms = clean

    @classmethod
    def constant(cls, c, nvars: int) -> "Polynomial":
        return cls({(0,) * nvars: c}, nvars)

    @classmethod
    def variable(cls, i: int, nvars: int) -> "Polynomial":
        e = [0] * nvars
        e[i] = 1
        return cls({tuple(e): ONE}, nvars)

    def is_zero(self) -> bool:
        return not self.terms

    def is_constant(self) -> bool:
        return all(not any(e) for e in self.terms)

    def degree(self) -> int:
        return max((sum(e) for e in self.terms), default=-1)

    def leading_monomial(self, order: str = "grevlex") -> Monomial:
        return max(self.terms, key=monomial_key(order))

    def leading_coefficient(self, order: str = "grevlex") -> GaussRational:
        return self.terms[self.leading_monomial(order)]

    def monic(self, order: str = "grevlex") -> "Polynomial":
        if self.is_zero():
            return self
        inv = self.leading_coefficient(order).inverse()
        return Polynomial({e: c * inv for e, c in self.terms.items()}, self.nvars)

    def __add__(self, other: "Polynomial") -> "Polynomial":
        out = dict(self.terms)
        for e, c in other.terms.items():
            out[e] = out.get(e, ZERO) + c
        return Polynomial(out, self.nvars)

    def __neg__(self) -> "Polynomial":
        return Polynomial({e: -c for e, c in self.terms.items()}, self.nvars)

    def __sub__(self, other: "Polynomial") -> "Polynomial":
        return self + (-other)

    def __mul__(self, other) -> "Polynomial":
        if not isinstance(other, Polynomial):
            c = gq(other)
            return Polynomial({e: v * c for e, v in self.terms.items()}, self.nvars)
        out: dict = {}
        for e1, c1 in self.terms.items():
            for e2, c2 in other.terms.items():
                e = tuple(a + b for a, b in zip(e1, e2))
                out[e] = out.get(e, ZERO) + c1 * c2
        return Polynomial(out, self.nvars)

    __rmul__ = __mul__

    def __eq__(self, other) -> bool:
        return isinstance(other, Polynomial) and self.nvars == other.nvars and self.terms == other.terms

    def __hash__(self):
        return hash((self.nvars, frozenset(self.terms.items())))

    def substitute(self, values: Mapping[int, object]) -> "Polynomial":
        """Replace variables by constants; the variable count is unchanged."""
        vals = {i: gq(v) for i, v in values.items()}
        out: dict = {}
        for e, c in self.terms.items():
            e2 = list(e)
            for i, v in vals.items():
                if e[i]:
                    c = c * _gpow(v, e[i])
                    e2[i] = 0
            e2 = tuple(e2)
            out[e2] = out.get(e2, ZERO) + c
        return Polynomial(out, self.nvars)

    def evaluate(self, point: Sequence[complex]) -> complex:
        total = 0j
        for e, c in self.terms.items():
            t = complex(c)
            for x, k in zip(point, e):
                if k:
                    t *= x**k
            total += t
        return total

    def to_text(self, names: Sequence[str], order: str = "grevlex") -> str:
        if self.is_zero():
            return "0"
        parts = []
        for e in sorted(self.terms, key=monomial_key(order), reverse=True):
            c = self.terms[e]
            mono = "*".join(
                names[i] if k == 1 else f"{names[i]}^{k}" for i, k in enumerate(e) if k
            )
            coeff = format_gauss(c)
            if not mono:
                parts.append(f"({coeff})")
            elif c == ONE:
                parts.append(mono)
            else:
                parts.append(f"({coeff})*{mono}")
        return " + ".join(parts)

    @classmethod
    def from_text(cls, text: str, names: Sequence[str]) -> "Polynomial":
        """Parse the output of :meth:`to_text`."""
        n = len(names)
        index = {v: i for i, v in enumerate(names)}
        text = text.strip()
        if text == "0":
            return cls({}, n)
        terms: dict = {}
        for part in _split_terms(text):
            m = re.fullmatch(r"\((?P<c>[^()]*)\)(\*(?P<m>.+))?|(?P<m2>.+)", part)
            coeff_txt = m.group("c")
            mono_txt = m.group("m") if coeff_txt is not None else m.group("m2")
            c = parse_gauss(coeff_txt) if coeff_txt is not None else ONE
            e = [0] * n
            if mono_txt:
                for factor in mono_txt.split("*"):
                    name, _, power = factor.partition("^")
                    e[index[name]] += int(power) if power else 1
            e = tuple(e)
            terms[e] = terms.get(e, ZERO) + c
        return cls(terms, n)

    def __repr__(self):
        names = [f"x{i}" for i in range(self.nvars)]
        return f"Polynomial({self.to_text(names)!r})"


def _split_terms(text: str) -> list[str]:
    parts, depth, cur = [], 0, ""
    i = 0
    while i < len(text):
        ch = text[i]
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
        if depth == 0 and text.startswith(" + ", i):
            parts.append(cur)
            cur = ""
            i += 3
            continue
        cur += ch
        i += 1
    parts.append(cur)
    return parts


def _gpow(v: GaussRational, k: int) -> GaussRational:
    out = ONE
    for _ in range(k):
        out = out * v
    return out


@dataclass
class Ideal:
    """Generators of a polynomial ideal together with printable variable names."""

    generators: list[Polynomial]
    names: list[str]

    def __post_init__(self):
        if not self.generators:
            raise ValueError("an ideal needs at least one generator")
        n = len(self.names)
        if any(g.nvars != n for g in self.generators):
            raise ValueError("generators must all use the same variable count")

    @property
    def nvars(self) -> int:
        return len(self.names)

    def to_text(self, order: str = "grevlex") -> str:
        return "\n".join(g.to_text(self.names, order) for g in self.generators)

    @classmethod
    def from_text(cls, text: str, names: Sequence[str]) -> "Ideal":
        gens = [Polynomial.from_text(line, names) for line in text.splitlines() if line.strip()]
        return cls(gens, list(names))


class BudgetExceeded(Exception):
    pass


class _Counter:
    __slots__ = ("steps", "limit")

    def __init__(self, limit: int | None):
        self.steps = 0
        self.limit = limit

    def tick(self):
        self.steps += 1
        if self.limit is not None and self.steps > self.limit:
            raise BudgetExceeded


@dataclass
class GroebnerBasis:
    """Result of :func:`buchberger`.

    ``complete`` is False when the step budget ran out; ``polys`` then holds
    the partial basis reached so far and must not be used for decisions.
    """

    polys: list[Polynomial]
    order: str
    complete: bool
    steps: int
    verified: bool = False
    names: list[str] = field(default_factory=list)

    def is_unit(self) -> bool:
        """True iff the basis is {1}, i.e. the variety is empty."""
        return self.complete and len(self.polys) == 1 and self.polys[0].is_constant()

    def to_text(self) -> str:
        names = self.names or [f"x{i}" for i in range(self.polys[0].nvars)]
        return "\n".join(p.to_text(names, self.order) for p in self.polys)


# -- engine -------------------------------------------------------------------


def _divides(a: Monomial, b: Monomial) -> bool:
    return all(x <= y for x, y in zip(a, b))


def _lcm(a: Monomial, b: Monomial) -> Monomial:
    return tuple(x if x > y else y for x, y in zip(a, b))


def _coprime(a: Monomial, b: Monomial) -> bool:
    return all(not (x and y) for x, y in zip(a, b))


def _monic(p: dict, key) -> tuple[Monomial, dict]:
    lm = max(p, key=key)
    inv = p[lm].inverse()
    if inv == ONE:
        return lm, p
    return lm, {e: c * inv for e, c in p.items()}


def _reduce(p: dict, basis: list[tuple[Monomial, dict]], key, counter: _Counter) -> dict:
    """Full reduction of ``p`` by monic ``basis``; returns the remainder."""
    p = dict(p)
    rem = {}
    while p:
        m = max(p, key=key)
        c = p.pop(m)
        for lm, g in basis:
            if _divides(lm, m):
                q = tuple(x - y for x, y in zip(m, lm))
                for e, gc in g.items():
                    if e == lm:
                        continue
                    e2 = tuple(x + y for x, y in zip(e, q))
                    v = p.get(e2)
                    nv = -(c * gc) if v is None else v - c * gc
                    if nv.is_zero():
                        del p[e2]
                    else:
                        p[e2] = nv
                counter.tick()
                break
        else:
            rem[m] = c
    return rem


def _spoly(f: tuple[Monomial, dict], g: tuple[Monomial, dict]) -> dict:
    (lf, pf), (lg, pg) = f, g
    l = _lcm(lf, lg)
    qf = tuple(x - y for x, y in zip(l, lf))
    qg = tuple(x - y for x, y in zip(l, lg))
    out = {}
    for e, c in pf.items():
        out[tuple(x + y for x, y in zip(e, qf))] = c
    for e, c in pg.items():
        e2 = tuple(x + y for x, y in zip(e, qg))
        v = out.get(e2, ZERO) - c
        if v.is_zero():
            out.pop(e2, None)
        else:
            out[e2] = v
    return out


def _update(G: list[int], B: set, h: int, LM: list[Monomial]):
    """Gebauer-Möller installation of the new element ``h``."""
    lh = LM[h]
    C = [(h, g) for g in G]
    D = []
    while C:
        pair = C.pop(0)
        g1 = pair[1]
        l1 = _lcm(lh, LM[g1])
        if _coprime(lh, LM[g1]) or not any(
            _divides(_lcm(lh, LM[g2]), l1) for _, g2 in C + D
        ):
            D.append(pair)
    E = {(a, b) for a, b in D if not _coprime(LM[a], LM[b])}
    B_new = set()
    for g1, g2 in B:
        l12 = _lcm(LM[g1], LM[g2])
        if (
            not _divides(lh, l12)
            or _lcm(LM[g1], lh) == l12
            or _lcm(lh, LM[g2]) == l12
        ):
            B_new.add((g1, g2))
    B_new |= E
    G_new = [g for g in G if not _divides(lh, LM[g])]
    G_new.append(h)
    return G_new, B_new


def buchberger(
    generators: Iterable[Polynomial] | Ideal,
    order: str = "grevlex",
    budget: int | None = 10**7,
    verify: bool = True,
) -> GroebnerBasis:
    """Reduced Gröbner basis of the ideal generated by ``generators``.

    ``budget`` caps the number of single-term reduction steps.  When it is
    exhausted the result comes back with ``complete=False``.  With
    ``verify`` the returned basis is re-checked: every S-polynomial must
    reduce to zero.
    """
    names: list[str] = []
    if isinstance(generators, Ideal):
        names = list(generators.names)
        generators = generators.generators
    gens = [g for g in generators if not g.is_zero()]
    if not gens:
        raise ValueError("zero ideal")
    n = gens[0].nvars
    key = monomial_key(order)
    counter = _Counter(budget)
    one = [Polynomial.constant(1, n)]

    polys: list[dict] = []
    LM: list[Monomial] = []
    G: list[int] = []
    B: set = set()

    def install(p: dict):
        nonlocal G, B
        lm, p = _monic(p, key)
        polys.append(p)
        LM.append(lm)
        G, B = _update(G, B, len(polys) - 1, LM)

    try:
        for g in sorted(gens, key=lambda q: key(q.leading_monomial(order))):
            r = _reduce(g.terms, [(LM[i], polys[i]) for i in G], key, counter)
            if not r:
                continue
            if all(not any(e) for e in r):
                return GroebnerBasis(one, order, True, counter.steps, True, names)
            install(r)

        while B:
            i, j = min(B, key=lambda pr: key(_lcm(LM[pr[0]], LM[pr[1]])))
            B.discard((i, j))
            s = _spoly((LM[i], polys[i]), (LM[j], polys[j]))
            if not s:
                continue
            r = _reduce(s, [(LM[k], polys[k]) for k in G], key, counter)
            if not r:
                continue
            if all(not any(e) for e in r):
                return GroebnerBasis(one, order, True, counter.steps, True, names)
            install(r)

        # interreduce to the unique reduced basis
        basis = [(LM[k], polys[k]) for k in G]
        basis.sort(key=lambda t: key(t[0]))
        reduced = []
        for idx, (lm, p) in enumerate(basis):
            others = [b for k, b in enumerate(basis) if k != idx]
            tail = {e: c for e, c in p.items() if e != lm}
            tail = _reduce(tail, others, key, counter) if tail else {}
            tail[lm] = p[lm]
            reduced.append((lm, tail))
    except BudgetExceeded:
        partial = [Polynomial(polys[k], n) for k in G]
        return GroebnerBasis(partial, order, False, counter.steps, False, names)

    reduced.sort(key=lambda t: key(t[0]), reverse=True)
    result = GroebnerBasis(
        [Polynomial(p, n) for _, p in reduced], order, True, counter.steps, False, names
    )
    if verify:
        result.verified = _check_s_pairs(reduced, key)
    return result


def _check_s_pairs(basis: list[tuple[Monomial, dict]], key) -> bool:
    free = _Counter(None)
    for a in range(len(basis)):
        for b in range(a + 1, len(basis)):
            if _coprime(basis[a][0], basis[b][0]):
                continue
            s = _spoly(basis[a], basis[b])
            if s and _reduce(s, basis, key, free):
                return False
    return True


def is_groebner(polys: Sequence[Polynomial], order: str = "grevlex") -> bool:
    """Independent check that every S-polynomial of monic ``polys`` reduces to 0."""
    key = monomial_key(order)
    basis = []
    for p in polys:
        lm, q = _monic(dict(p.terms), key)
        basis.append((lm, q))
    free = _Counter(None)
    for a in range(len(basis)):
        for b in range(a + 1, len(basis)):
            s = _spoly(basis[a], basis[b])
            if s and _reduce(s, basis, key, free):
                return False
    return True


def normal_form(p: Polynomial, basis: Sequence[Polynomial], order: str = "grevlex") -> Polynomial:
    key = monomial_key(order)
    monic = [_monic(dict(q.terms), key) for q in basis if not q.is_zero()]
    return Polynomial(_reduce(p.terms, monic, key, _Counter(None)), p.nvars)
