"""Matrix-subspace algebra for conjugate-symmetric subspaces.

A subspace ``S`` of ``C^d ⊗ C^d`` is handled through the coefficient
matrices ``M(S)``.  The flip acts as ``M -> M^†`` and ``id ⊗ X`` acts as
``M -> M X``, so both symmetry constraints become statements about a real
space of Hermitian matrices closed under ``H -> X H X``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from . import gaussq
from .gaussq import GaussRational, gq
from .qmat import (
    DimensionError,
    StateSubspace,
    antidiagonal,
    flip,
    max_principal_angle,
    orthonormalize,
)

__all__ = [
    "make_rng",
    "SymmetryPair",
    "PsdBasis",
    "NotFound",
    "is_conjugate_symmetric",
    "hermitian_basis",
    "find_psd_basis",
    "exact_psd_basis",
    "apply_local_unitaries",
    "m_transpose",
    "symmetrize",
    "x_parity_bases",
    "FdSample",
    "sample_fd",
    "sample_positive_seeded",
    "perturb_fd",
    "subspace_to_json",
    "subspace_from_json",
]

TOL_SUBSPACE = 1e-8


def make_rng(seed: int | np.random.Generator | None, *stream: int) -> np.random.Generator:
    """Counter-based (Philox) generator; ``stream`` ids give independent substreams."""
    if isinstance(seed, np.random.Generator):
        return seed
    ss = np.random.SeedSequence(seed, spawn_key=tuple(stream))
    return np.random.Generator(np.random.Philox(ss))


def _seed_of(rng) -> int | None:
    return rng if isinstance(rng, (int, np.integer)) else None


@dataclass(frozen=True, eq=False)
class SymmetryPair:
    """Local unitaries ``(U, V)`` in the twisted symmetry ``F(U⊗V·S) = U⊗V·S``."""

    U: np.ndarray
    V: np.ndarray

    def __post_init__(self):
        for name in ("U", "V"):
            m = np.asarray(getattr(self, name), dtype=complex)
            if m.ndim != 2 or m.shape[0] != m.shape[1]:
                raise DimensionError(f"{name} must be square")
            if np.max(np.abs(m.conj().T @ m - np.eye(m.shape[0]))) > 1e-12:
                raise ValueError(f"{name} is not unitary")
            m.setflags(write=False)
            object.__setattr__(self, name, m)

    @classmethod
    def default(cls, d: int) -> "SymmetryPair":
        """``U = id``, ``V = X`` (antidiagonal)."""
        return cls(np.eye(d), antidiagonal(d))

    @property
    def d(self) -> int:
        return self.U.shape[0]

    def operator(self) -> np.ndarray:
        return np.kron(self.U, self.V)

    def is_default(self, tol: float = 1e-12) -> bool:
        d = self.d
        return (np.max(np.abs(self.U - np.eye(d))) <= tol
                and np.max(np.abs(self.V - antidiagonal(d))) <= tol)


@dataclass
class PsdBasis:
    """PSD spanning set ``{H_i + c P}`` of a matrix subspace."""

    elements: list[np.ndarray]
    shift: float
    pd_element: np.ndarray
    exact: bool = False
    exact_shift: Fraction | None = None

    @property
    def min_eigenvalue(self) -> float:
        return min(float(np.linalg.eigvalsh(m)[0]) for m in self.elements)

    def __len__(self) -> int:
        return len(self.elements)


@dataclass
class NotFound:
    best_min_eigenvalue: float
    reason: str = "no positive-definite element found"

    def __bool__(self) -> bool:
        return False


def _require_square(s: StateSubspace) -> int:
    if s.dims[0] != s.dims[1]:
        raise DimensionError("conjugate symmetry needs equal local dimensions")
    return s.dims[0]


def is_conjugate_symmetric(s: StateSubspace, tol: float = TOL_SUBSPACE,
                           return_angle: bool = False):
    """Whether ``F(S) = S``, judged by the largest principal angle."""
    _require_square(s)
    flipped = np.stack([flip(s.basis[:, j], s.dims) for j in range(s.dim)], axis=1)
    angle = max_principal_angle(s, StateSubspace(flipped, s.dims))
    ok = angle <= tol
    return (ok, angle) if return_angle else ok


def _real_vec(mats: np.ndarray) -> np.ndarray:
    """Stack Hermitian matrices as real vectors (columns)."""
    mats = np.asarray(mats)
    flat = mats.reshape(mats.shape[0], -1)
    return np.concatenate([flat.real, flat.imag], axis=1).T


def _from_real_vec(cols: np.ndarray, d: int) -> np.ndarray:
    n = d * d
    return (cols[:n] + 1j * cols[n:]).T.reshape(-1, d, d)


def hermitian_basis(s: StateSubspace, tol: float = 1e-9) -> np.ndarray:
    """Real-orthonormal Hermitian matrices whose complex span is ``M(S)``.

    Only meaningful for conjugate-symmetric ``S``; shape ``(dim, d, d)``.
    """
    d = _require_square(s)
    mats = s.matrices()
    herm = np.concatenate([(mats + mats.conj().transpose(0, 2, 1)) / 2,
                           (mats - mats.conj().transpose(0, 2, 1)) / 2j])
    u, sv, _ = np.linalg.svd(_real_vec(herm), full_matrices=False)
    r = int(np.sum(sv > tol * sv[0]))
    out = _from_real_vec(u[:, :r], d)
    return (out + out.conj().transpose(0, 2, 1)) / 2


def _lambda_min_ascent(herm: np.ndarray, rng: np.random.Generator, starts: int,
                       iters: int) -> tuple[float, np.ndarray]:
    """Maximise the smallest eigenvalue of ``sum_i c_i H_i`` over unit ``c``."""
    n = herm.shape[0]
    best_val, best_c = -np.inf, None
    for _ in range(starts):
        c = rng.standard_normal(n)
        c /= np.linalg.norm(c)
        step = 0.5
        w, v = np.linalg.eigh(np.tensordot(c, herm, axes=1))
        val = w[0]
        for _ in range(iters):
            x = v[:, 0]
            grad = np.real(np.einsum("i,kij,j->k", x.conj(), herm, x))
            grad -= (grad @ c) * c
            trial = c + step * grad
            trial /= np.linalg.norm(trial)
            wt, vt = np.linalg.eigh(np.tensordot(trial, herm, axes=1))
            if wt[0] > val:
                c, w, v, val = trial, wt, vt, wt[0]
                step *= 1.2
            else:
                step *= 0.5
                if step < 1e-10:
                    break
        if val > best_val:
            best_val, best_c = val, c
        if best_val > 0:
            break
    return float(best_val), best_c


def find_psd_basis(s: StateSubspace, rng: int | np.random.Generator = 0, starts: int = 32,
                   iters: int = 200, tol: float = 1e-10) -> PsdBasis | NotFound:
    """Spanning set of PSD matrices for ``M(S)``, via a positive-definite element.

    Tries the projection of the identity first, then a smallest-eigenvalue
    ascent from ``starts`` random points.  With ``P`` positive definite and a
    Hermitian basis ``H_i``, the shifted set ``H_i + c P`` with
    ``c = 1 + max|λ_min(H_i)| / λ_min(P)`` is PSD.
    """
    sym, angle = is_conjugate_symmetric(s, return_angle=True)
    if not sym:
        return NotFound(float("nan"), f"subspace is not conjugate symmetric (angle {angle:.2e})")
    herm = hermitian_basis(s)
    coeffs = np.real(np.einsum("kii->k", herm))  # projection of id onto the real span
    p = np.tensordot(coeffs, herm, axes=1)
    lam = float(np.linalg.eigvalsh(p)[0]) if np.any(coeffs) else -np.inf
    if lam <= tol:
        best, c = _lambda_min_ascent(herm, make_rng(rng), starts, iters)
        if best <= tol:
            return NotFound(max(best, lam))
        p = np.tensordot(c, herm, axes=1)
        lam = best
    p = p / lam  # so that λ_min(P) = 1
    mins = np.array([np.linalg.eigvalsh(h)[0] for h in herm])
    shift = 1.0 + float(np.max(np.abs(mins)))
    for _ in range(60):
        elems = herm + shift * p[None]
        _, sv, _ = np.linalg.svd(_real_vec(elems), full_matrices=False)
        if sv[-1] > 1e-9 * sv[0]:
            break
        shift *= 2
    else:
        return NotFound(1.0, "shifted set stayed rank deficient")
    elems = [(e + e.conj().T) / 2 for e in elems]
    if min(np.linalg.eigvalsh(e)[0] for e in elems) < -1e-10:
        return NotFound(1.0, "shifted elements failed the PSD check")
    return PsdBasis(elems, shift, p)


def _gconj_t(m):
    return [[m[j][i].conjugate() for j in range(len(m))] for i in range(len(m[0]))]


def exact_psd_basis(generators: Sequence[Sequence[Sequence]]) -> PsdBasis | NotFound:
    """Exact PSD spanning set for the span of exact matrices (entries in Q(i)).

    Requires the span to be closed under ``M -> M^†`` and to contain the
    identity.  Hermitian generators ``(B+B^†)/2`` and ``(B-B^†)/2i`` are
    selected greedily by exact rank, then shifted by a rational ``c`` for
    which every ``H_i + c·id`` is strictly diagonally dominant with positive
    diagonal, hence positive definite.
    """
    mats = [[[gq(x) for x in row] for row in m] for m in generators]
    d = len(mats[0])
    flat = lambda m: [x for row in m for x in row]  # noqa: E731
    span_rank = gaussq.rank([flat(m) for m in mats])
    half, half_i = Fraction(1, 2), GaussRational(0, Fraction(-1, 2))
    cands = []
    for m in mats:
        mh = _gconj_t(m)
        cands.append([[(a + b) * half for a, b in zip(r1, r2)] for r1, r2 in zip(m, mh)])
        cands.append([[(a - b) * half_i for a, b in zip(r1, r2)] for r1, r2 in zip(m, mh)])
    herm, rows = [], []
    for h in cands:
        if gaussq.rank(rows + [flat(h)]) > len(rows):
            herm.append(h)
            rows.append(flat(h))
    if len(herm) != span_rank or gaussq.rank([flat(m) for m in mats] + rows) != span_rank:
        return NotFound(float("nan"), "span is not closed under conjugate transpose")
    ident = [[gaussq.ONE if i == j else gaussq.ZERO for j in range(d)] for i in range(d)]
    if gaussq.rank(rows + [flat(ident)]) != span_rank:
        return NotFound(float("nan"), "identity is not in the span")

    def excess(h):
        # max over rows of (off-diagonal |.|_1 bound) - diagonal; c must exceed it
        worst = None
        for r in range(d):
            off = sum((abs(h[r][j].re) + abs(h[r][j].im) for j in range(d) if j != r), Fraction(0))
            val = off - h[r][r].re
            worst = val if worst is None else max(worst, val)
        return worst

    c = max(Fraction(0), max(excess(h) for h in herm)) + 1
    c = Fraction(int(c) + (0 if c.denominator == 1 else 1))
    while True:
        shifted = [[[h[i][j] + (c if i == j else 0) for j in range(d)] for i in range(d)] for h in herm]
        if gaussq.rank([flat(h) for h in shifted]) == span_rank:
            break
        c += 1
    elems = [gaussq.to_complex_array(h) for h in shifted]
    return PsdBasis(elems, float(c), np.eye(d, dtype=complex), exact=True, exact_shift=c)


def apply_local_unitaries(s: StateSubspace, sym: SymmetryPair) -> StateSubspace:
    if sym.d != s.dims[0] or sym.d != s.dims[1]:
        raise DimensionError("symmetry pair does not match subspace dims")
    return s.transform(sym.operator())


def m_transpose(s: StateSubspace) -> StateSubspace:
    """Subspace whose coefficient matrices are the transposes of those of ``S``."""
    mats = s.matrices().transpose(0, 2, 1)
    return StateSubspace.span(mats.reshape(s.dim, -1), (s.dims[1], s.dims[0]))


def symmetrize(s: StateSubspace, sym: SymmetryPair | None = None) -> StateSubspace:
    """Smallest subspace containing ``S`` that satisfies both flip symmetries.

    Spanned by ``{M, M^†, X M X, X M^† X}`` over a basis ``M`` of ``M(S)``.
    """
    d = _require_square(s)
    if sym is not None and not sym.is_default():
        raise ValueError("symmetrize supports only U = id, V = X")
    x = antidiagonal(d)
    mats = s.matrices()
    mh = mats.conj().transpose(0, 2, 1)
    gens = np.concatenate([mats, mh, x @ mats @ x, x @ mh @ x])
    return StateSubspace(orthonormalize(gens.reshape(len(gens), -1).T), s.dims)


def x_parity_bases(d: int) -> tuple[np.ndarray, np.ndarray]:
    """Real-orthonormal bases of Hermitian ``H`` with ``XHX = +H`` and ``XHX = -H``.

    Each has ``d²/2`` elements for even ``d``.  The identity and ``X`` are the
    first two elements of the ``+`` basis.
    """
    if d % 2:
        raise ValueError("d must be even")
    x = antidiagonal(d)
    herm = []
    for j in range(d):
        e = np.zeros((d, d), complex)
        e[j, j] = 1
        herm.append(e)
    for j in range(d):
        for k in range(j + 1, d):
            e = np.zeros((d, d), complex)
            e[j, k] = e[k, j] = 1 / np.sqrt(2)
            herm.append(e)
            f = np.zeros((d, d), complex)
            f[j, k], f[k, j] = -1j / np.sqrt(2), 1j / np.sqrt(2)
            herm.append(f)
    herm = np.array(herm)
    xhx = x @ herm @ x
    plus = np.concatenate([np.eye(d)[None] / np.sqrt(d), x[None] / np.sqrt(d), (herm + xhx) / 2])
    minus = (herm - xhx) / 2

    def basis(mats):
        # sequential Gram-Schmidt keeps the seed order, so id and X come first
        kept = []
        for v in _real_vec(mats).T:
            for _ in range(2):
                for q in kept:
                    v = v - (q @ v) * q
            n = np.linalg.norm(v)
            if n > 1e-9:
                kept.append(v / n)
        return _from_real_vec(np.array(kept).T, d)

    return basis(plus), basis(minus)


@dataclass(eq=False)
class FdSample:
    """A subspace in ``F_d`` together with the real Hermitian bases it came from."""

    subspace: StateSubspace
    k: int
    seed: int | None
    contains_omega: bool
    plus: np.ndarray = field(repr=False, default=None)
    minus: np.ndarray = field(repr=False, default=None)

    @property
    def dim(self) -> int:
        return self.subspace.dim

    def to_json(self) -> dict:
        obj = subspace_to_json(self.subspace)
        obj.update(k=self.k, seed=self.seed, contains_omega=self.contains_omega)
        return obj


def _grassmann(n: int, k: int, rng: np.random.Generator) -> np.ndarray:
    """Orthonormal ``n x k`` real frame, uniform on the Grassmannian."""
    if k == 0:
        return np.zeros((n, 0))
    q, r = np.linalg.qr(rng.standard_normal((n, k)))
    return q * np.sign(np.diag(r))


def _span_from_hermitian(plus: np.ndarray, minus: np.ndarray, d: int) -> StateSubspace:
    mats = np.concatenate([plus, minus])
    return StateSubspace(orthonormalize(mats.reshape(len(mats), -1).T), (d, d))


def _check_k(d_A: int, d: int, k: int):
    if d_A % 2:
        raise ValueError("d_A must be even")
    half = d_A * d_A // 2
    if not (0 <= k <= d and k <= half and d - k <= half):
        raise ValueError(f"need 0 <= k <= d, k <= {half} and d - k <= {half}")


def sample_fd(d_A: int, d: int, k: int | None = None,
              rng: int | np.random.Generator | None = None) -> FdSample:
    """Random ``d``-dimensional subspace in ``F_d``.

    Draws a ``k``-dimensional real subspace of ``{H : XHX = H}`` and a
    ``(d-k)``-dimensional one of ``{H : XHX = -H}`` and returns the complex
    span of their states.
    """
    if k is None:
        k = d // 2
    _check_k(d_A, d, k)
    gen = make_rng(rng)
    bp, bm = x_parity_bases(d_A)
    half = d_A * d_A // 2
    plus = np.tensordot(_grassmann(half, k, gen).T, bp, axes=1)
    minus = np.tensordot(_grassmann(half, d - k, gen).T, bm, axes=1)
    sub = _span_from_hermitian(plus, minus, d_A)
    return FdSample(sub, k, _seed_of(rng), bool(sub.contains(np.eye(d_A).reshape(-1))), plus, minus)


def sample_positive_seeded(d_A: int, d: int,
                           rng: int | np.random.Generator | None = None) -> FdSample:
    """Random ``F_d`` subspace containing ``omega`` and orthogonal to ``(id⊗X) omega``.

    Uses ``k = floor(d/2)``: the identity plus ``k-1`` random directions of
    the ``+`` space orthogonal to ``id`` and ``X``, and ``d-k`` random
    directions of the ``-`` space.  Both ``S`` and ``(id⊗X) S^⊥`` then
    contain the identity matrix.
    """
    if d_A % 2:
        raise ValueError("the positive-seeded construction needs even d_A")
    k = d // 2
    half = d_A * d_A // 2
    if k > half - 1 or d - k > half or k < 1:
        raise ValueError(f"need 1 <= floor(d/2) <= {half - 1} and d - floor(d/2) <= {half}")
    gen = make_rng(rng)
    bp, bm = x_parity_bases(d_A)
    ident, rest = bp[:1], bp[2:]  # bp[1] is X / sqrt(d_A)
    plus = np.concatenate([ident, np.tensordot(_grassmann(half - 2, k - 1, gen).T, rest, axes=1)])
    minus = np.tensordot(_grassmann(half, d - k, gen).T, bm, axes=1)
    sub = _span_from_hermitian(plus, minus, d_A)
    return FdSample(sub, k, _seed_of(rng), True, plus, minus)


def perturb_fd(sample: FdSample, eps: float,
               rng: int | np.random.Generator | None = None) -> FdSample:
    """Move a sample a distance of order ``eps`` inside ``F_d``.

    Each real Hermitian frame is rotated towards random directions of its
    own parity space, so both symmetries are kept and ``k`` is unchanged.
    """
    gen = make_rng(rng)
    d_A = sample.subspace.dims[0]
    bp, bm = x_parity_bases(d_A)

    def move(frame, full):
        if len(frame) == 0:
            return frame
        coords = _real_vec(frame).T @ _real_vec(full)  # frame in the parity basis
        noise = gen.standard_normal(coords.shape)
        q, _ = np.linalg.qr((coords + eps * noise).T)
        return np.tensordot(q.T, full, axes=1)

    plus, minus = move(sample.plus, bp), move(sample.minus, bm)
    sub = _span_from_hermitian(plus, minus, d_A)
    return FdSample(sub, sample.k, _seed_of(rng), bool(sub.contains(np.eye(d_A).reshape(-1))), plus, minus)


def subspace_to_json(s: StateSubspace) -> dict:
    return {
        "d_A": s.dims[0],
        "d_B": s.dims[1],
        "basis": [[[float(z.real), float(z.imag)] for z in s.basis[:, j]] for j in range(s.dim)],
    }


def subspace_from_json(obj: dict) -> StateSubspace:
    dims = (int(obj["d_A"]), int(obj["d_B"]))
    vecs = [np.array([complex(re, im) for re, im in v]) for v in obj["basis"]]
    if any(v.size != dims[0] * dims[1] for v in vecs):
        raise DimensionError("basis vector length does not match d_A * d_B")
    return StateSubspace.span(vecs, dims)
