"""Exact arithmetic over the Gaussian rationals Q(i).

Elements are stored as ``(a + b*i) / d`` with integers ``a, b`` and ``d > 0``
in lowest terms, which keeps every field operation on plain Python ints.
Also provides the small amount of exact linear algebra (row reduction,
rank, nullspace) needed to handle subspaces with exact bases.
"""

from __future__ import annotations

import math
from fractions import Fraction
from numbers import Rational
from typing import Iterable, Sequence

import numpy as np

__all__ = [
    "GaussRational",
    "ZERO",
    "ONE",
    "I",
    "gq",
    "rref",
    "rank",
    "nullspace",
    "to_complex_array",
    "from_complex",
]


class GaussRational:
    """An element ``(num_re + num_im*i) / den`` of Q(i) in reduced form."""

    __slots__ = ("_a", "_b", "_d")

    def __init__(self, re=0, im=0):
        re = Fraction(re)
        im = Fraction(im)
        d = re.denominator * im.denominator // math.gcd(re.denominator, im.denominator)
        a = re.numerator * (d // re.denominator)
        b = im.numerator * (d // im.denominator)
        self._a, self._b, self._d = _normalize(a, b, d)

    @classmethod
    def _raw(cls, a: int, b: int, d: int) -> "GaussRational":
        obj = object.__new__(cls)
        obj._a, obj._b, obj._d = _normalize(a, b, d)
        return obj

    @property
    def re(self) -> Fraction:
        return Fraction(self._a, self._d)

    @property
    def im(self) -> Fraction:
        return Fraction(self._b, self._d)

    def is_zero(self) -> bool:
        return self._a == 0 and self._b == 0

    def conjugate(self) -> "GaussRational":
        return GaussRational._raw(self._a, -self._b, self._d)

    def __complex__(self) -> complex:
        return complex(self._a / self._d, self._b / self._d)

    def __add__(self, other):
        o = _coerce(other)
        if o is None:
            return NotImplemented
        return GaussRational._raw(
            self._a * o._d + o._a * self._d, self._b * o._d + o._b * self._d, self._d * o._d
        )

    __radd__ = __add__

    def __neg__(self):
        return GaussRational._raw(-self._a, -self._b, self._d)

    def __sub__(self, other):
        o = _coerce(other)
        if o is None:
            return NotImplemented
        return GaussRational._raw(
            self._a * o._d - o._a * self._d, self._b * o._d - o._b * self._d, self._d * o._d
        )

    def __rsub__(self, other):
        o = _coerce(other)
        if o is None:
            return NotImplemented
        return o - self

    def __mul__(self, other):
        o = _coerce(other)
        if o is None:
            return NotImplemented
        return GaussRational._raw(
            self._a * o._a - self._b * o._b, self._a * o._b + self._b * o._a, self._d * o._d
        )

    __rmul__ = __mul__

    def inverse(self) -> "GaussRational":
        n = self._a * self._a + self._b * self._b
        if n == 0:
            raise ZeroDivisionError("inverse of zero in Q(i)")
        return GaussRational._raw(self._a * self._d, -self._b * self._d, n)

    def __truediv__(self, other):
        o = _coerce(other)
        if o is None:
            return NotImplemented
        return self * o.inverse()

    def __rtruediv__(self, other):
        o = _coerce(other)
        if o is None:
            return NotImplemented
        return o * self.inverse()

    def __eq__(self, other):
        o = _coerce(other)
        if o is None:
            return NotImplemented
        return self._a == o._a and self._b == o._b and self._d == o._d

    def __hash__(self):
        return hash((self._a, self._b, self._d))

    def __bool__(self):
        return not self.is_zero()

    def __repr__(self):
        return f"GaussRational({self.re!s}, {self.im!s})"

    def __str__(self):
        return format_gauss(self)


def _normalize(a: int, b: int, d: int) -> tuple[int, int, int]:
    if d < 0:
        a, b, d = -a, -b, -d
    if a == 0 and b == 0:
        return 0, 0, 1
    g = math.gcd(a, b, d)
    if g != 1:
        a, b, d = a // g, b // g, d // g
    return a, b, d


def _coerce(x) -> GaussRational | None:
    if isinstance(x, GaussRational):
        return x
    if isinstance(x, (int, Rational)):
        return GaussRational(x)
    if isinstance(x, complex):
        return from_complex(x)
    return None


def format_gauss(z: GaussRational) -> str:
    """Render as ``p/q+r/s*i`` (parts omitted when zero)."""
    re, im = z.re, z.im
    if im == 0:
        return str(re)
    im_abs = abs(im)
    im_txt = "i" if im_abs == 1 else f"{im_abs}*i"
    if re == 0:
        return ("-" if im < 0 else "") + im_txt
    return f"{re}{'-' if im < 0 else '+'}{im_txt}"


def parse_gauss(text: str) -> GaussRational:
    """Inverse of :func:`format_gauss`."""
    s = text.replace(" ", "")
    if not s.endswith("i"):
        return GaussRational(Fraction(s))
    body = s[:-1].rstrip("*")
    # split at the last sign that is not the leading one and not an exponent
    cut = max(body.rfind("+", 1), body.rfind("-", 1))
    if cut <= 0:
        re_txt, im_txt = "0", body
    else:
        re_txt, im_txt = body[:cut], body[cut:]
    if im_txt in ("", "+"):
        im_val = Fraction(1)
    elif im_txt == "-":
        im_val = Fraction(-1)
    else:
        im_val = Fraction(im_txt)
    return GaussRational(Fraction(re_txt), im_val)


ZERO = GaussRational(0)
ONE = GaussRational(1)
I = GaussRational(0, 1)


def gq(x) -> GaussRational:
    """Coerce an int, Fraction, complex with integral parts, or GaussRational."""
    out = _coerce(x)
    if out is None:
        raise TypeError(f"cannot convert {x!r} to GaussRational")
    return out


def from_complex(z: complex, max_den: int | None = None) -> GaussRational:
    """Exact conversion of a complex float (or a rounded one with ``max_den``)."""
    re, im = Fraction(z.real), Fraction(z.imag)
    if max_den is not None:
        re = re.limit_denominator(max_den)
        im = im.limit_denominator(max_den)
    return GaussRational(re, im)


def to_complex_array(rows: Sequence[Sequence[GaussRational]]) -> np.ndarray:
    return np.array([[complex(x) for x in row] for row in rows], dtype=complex)


def rref(rows: Iterable[Sequence]) -> tuple[list[list[GaussRational]], list[int]]:
    """Reduced row echelon form; returns (nonzero rows, pivot columns)."""
    m = [[gq(x) for x in row] for row in rows]
    if not m:
        return [], []
    ncols = len(m[0])
    pivots: list[int] = []
    r = 0
    for c in range(ncols):
        p = next((i for i in range(r, len(m)) if not m[i][c].is_zero()), None)
        if p is None:
            continue
        m[r], m[p] = m[p], m[r]
        inv = m[r][c].inverse()
        m[r] = [x * inv for x in m[r]]
        for i in range(len(m)):
            if i != r and not m[i][c].is_zero():
                f = m[i][c]
                m[i] = [x - f * y for x, y in zip(m[i], m[r])]
        pivots.append(c)
        r += 1
        if r == len(m):
            break
    return m[:r], pivots


def rank(rows: Iterable[Sequence]) -> int:
    return len(rref(rows)[1])


def nullspace(rows: Sequence[Sequence], ncols: int | None = None) -> list[list[GaussRational]]:
    """Exact basis of ``{v : rows @ v = 0}`` (plain bilinear, no conjugation)."""
    rows = list(rows)
    if ncols is None:
        ncols = len(rows[0])
    red, pivots = rref(rows) if rows else ([], [])
    free = [c for c in range(ncols) if c not in pivots]
    basis = []
    for f in free:
        v = [ZERO] * ncols
        v[f] = ONE
        for row, p in zip(red, pivots):
            v[p] = -row[f]
        basis.append(v)
    return basis
