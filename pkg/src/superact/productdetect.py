"""Deciding whether a bipartite subspace (or its complement) contains a product state.

The exact route writes membership of ``psi ⊗ phi`` as a polynomial system
over Q(i), splits projective space into affine charts by fixing the first
nonzero coordinate, and runs Buchberger on each chart: a reduced basis
``{1}`` in every chart proves that no product state exists.  A chart with a
nontrivial basis has solutions, and one is extracted and checked against the
floating-point subspace.

The numeric route maximises ``||P (psi ⊗ phi)||^2`` by alternating top
singular vectors.  It finds witnesses but never proves emptiness.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import gaussq
from .gaussq import GaussRational, from_complex, gq
from .groebner import GroebnerBasis, Ideal, Polynomial, buchberger
from .qmat import DimensionError, StateSubspace, max_principal_angle, orthonormalize
from .subspaces import make_rng

__all__ = [
    "ExactSubspace",
    "RationalizationError",
    "rationalize",
    "build_bilinear_system",
    "build_minor_system",
    "CaseRecord",
    "DetectionResult",
    "decide_product_states",
    "SearchResult",
    "numeric_product_search",
    "polish_product",
    "witness_residual",
]

TARGETS = ("complement", "span")
TOL_WITNESS = 1e-9


@dataclass(frozen=True, eq=False)
class ExactSubspace:
    """Subspace with an exact basis over Q(i), stored in reduced row echelon form."""

    rows: tuple
    dims: tuple[int, int]

    def __post_init__(self):
        n = self.dims[0] * self.dims[1]
        if any(len(r) != n for r in self.rows):
            raise DimensionError("row length does not match dims")

    @classmethod
    def from_vectors(cls, vectors: Sequence[Sequence], dims: tuple[int, int]) -> "ExactSubspace":
        red, _ = gaussq.rref(vectors)
        if not red:
            raise ValueError("empty subspace")
        return cls(tuple(tuple(r) for r in red), (int(dims[0]), int(dims[1])))

    @classmethod
    def from_matrices(cls, mats: Sequence[Sequence[Sequence]]) -> "ExactSubspace":
        dims = (len(mats[0]), len(mats[0][0]))
        return cls.from_vectors([[x for row in m for x in row] for m in mats], dims)

    @property
    def dim(self) -> int:
        return len(self.rows)

    @property
    def ambient(self) -> int:
        return self.dims[0] * self.dims[1]

    def matrices(self) -> list[list[list[GaussRational]]]:
        d_b = self.dims[1]
        return [[list(r[i * d_b:(i + 1) * d_b]) for i in range(self.dims[0])] for r in self.rows]

    def numeric(self) -> StateSubspace:
        return StateSubspace(orthonormalize(gaussq.to_complex_array(self.rows).T), self.dims)

    def complement(self) -> "ExactSubspace":
        """Exact orthogonal complement: the kernel of the conjugated rows."""
        conj = [[x.conjugate() for x in r] for r in self.rows]
        null = gaussq.nullspace(conj, self.ambient)
        if not null:
            raise ValueError("the complement of the full space is empty")
        return ExactSubspace.from_vectors(null, self.dims)

    def equals(self, other: "ExactSubspace") -> bool:
        return self.dims == other.dims and self.rows == other.rows


class RationalizationError(ValueError):
    def __init__(self, angle: float):
        super().__init__(f"rationalized basis is {angle:.2e} rad away from the input")
        self.angle = angle


def rationalize(s: StateSubspace, max_den: int = 10**6, tol: float = 1e-7) -> tuple[ExactSubspace, float]:
    """Round a numeric subspace to one with a Q(i) basis.

    The basis is brought to reduced row echelon form in floating point, its
    entries are rounded by continued fractions with denominators up to
    ``max_den``, and the result is accepted only if its largest principal
    angle to ``s`` is at most ``tol``.  Returns the exact subspace and that angle.
    """
    a = s.basis.T.copy()
    r, n = a.shape
    pivots = []
    row = 0
    for c in range(n):
        if row == r:
            break
        p = row + int(np.argmax(np.abs(a[row:, c])))
        if abs(a[p, c]) < 1e-9:
            continue
        a[[row, p]] = a[[p, row]]
        a[row] /= a[row, c]
        for i in range(r):
            if i != row:
                a[i] -= a[i, c] * a[row]
        pivots.append(c)
        row += 1
    zero, one = gaussq.ZERO, gaussq.ONE
    rows = []
    for i, pc in enumerate(pivots):
        out = []
        for c in range(n):
            if c in pivots:
                out.append(one if c == pc else zero)
            else:
                out.append(from_complex(complex(a[i, c]), max_den))
        rows.append(tuple(out))
    ex = ExactSubspace(tuple(rows), s.dims)
    angle = max_principal_angle(ex.numeric(), s)
    if angle > tol:
        raise RationalizationError(angle)
    return ex, angle


def _as_exact(s) -> ExactSubspace:
    if isinstance(s, ExactSubspace):
        return s
    raise TypeError("an exact basis is required; call rationalize() first")


def _target_basis(s: ExactSubspace, target: str) -> ExactSubspace:
    """The subspace in which a product state is sought."""
    if target not in TARGETS:
        raise ValueError(f"target must be one of {TARGETS}")
    return s.complement() if target == "complement" else s


def _names_bilinear(d_a: int, d_b: int) -> list[str]:
    return [f"ψ{i}" for i in range(d_a)] + [f"φ{j}" for j in range(d_b)]


def build_bilinear_system(s: ExactSubspace, target: str = "complement") -> Ideal:
    """Equations ``sum_ij conj(B)_ij psi_i phi_j = 0`` for ``psi ⊗ phi`` in the target.

    For ``target="complement"`` one equation per basis element of ``S``;
    for ``target="span"`` one per basis element of ``S^⊥``.
    """
    s = _as_exact(s)
    if target not in TARGETS:
        raise ValueError(f"target must be one of {TARGETS}")
    d_a, d_b = s.dims
    n = d_a + d_b
    if target == "complement":
        normals = s.rows
    else:
        normals = s.complement().rows if s.dim < s.ambient else ()
    gens = []
    for r in normals:
        terms = {}
        for i in range(d_a):
            for j in range(d_b):
                c = r[i * d_b + j]
                if not c.is_zero():
                    e = [0] * n
                    e[i] = 1
                    e[d_a + j] = 1
                    terms[tuple(e)] = c.conjugate()
        gens.append(Polynomial(terms, n))
    if not gens:  # target is the whole space: every product state qualifies
        gens = [Polynomial({}, n)]
    return Ideal(gens, _names_bilinear(d_a, d_b))


def build_minor_system(s: ExactSubspace, target: str = "span") -> Ideal:
    """All 2x2 minors of ``sum_k x_k M_k`` over a basis ``M_k`` of the target."""
    s = _as_exact(s)
    t = _target_basis(s, target)
    mats = t.matrices()
    d = t.dim
    d_a, d_b = t.dims
    lin = [[_linear({k: m[i][j] for k, m in enumerate(mats)}, d) for j in range(d_b)]
           for i in range(d_a)]
    gens = []
    for i1, i2 in itertools.combinations(range(d_a), 2):
        for j1, j2 in itertools.combinations(range(d_b), 2):
            gens.append(lin[i1][j1] * lin[i2][j2] - lin[i1][j2] * lin[i2][j1])
    return Ideal(gens, [f"x{k + 1}" for k in range(d)])


def _linear(coeffs: dict, n: int) -> Polynomial:
    terms = {}
    for k, c in coeffs.items():
        if not c.is_zero():
            e = [0] * n
            e[k] = 1
            terms[tuple(e)] = c
    return Polynomial(terms, n)


# -- numeric search -------------------------------------------------------------


@dataclass
class SearchResult:
    best_overlap: float
    psi: np.ndarray
    phi: np.ndarray
    residual: float

    @property
    def is_witness(self) -> bool:
        return self.residual <= TOL_WITNESS


def _frame(target: StateSubspace) -> np.ndarray:
    d_a, d_b = target.dims
    return target.basis.conj().reshape(d_a, d_b, target.dim)


def witness_residual(target: StateSubspace, psi: np.ndarray, phi: np.ndarray) -> float:
    """Distance of the normalised ``psi ⊗ phi`` from the target subspace."""
    v = np.kron(psi, phi)
    v = v / np.linalg.norm(v)
    return float(np.linalg.norm(v - target.basis @ (target.basis.conj().T @ v)))


def polish_product(target: StateSubspace, psi: np.ndarray, phi: np.ndarray,
                   iters: int = 50) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Newton refinement of ``psi ⊗ phi`` towards the target subspace.

    Solves ``C (psi ⊗ phi) = 0`` for the rows ``C`` of an orthonormal basis
    of the target's complement, with the largest coordinate of each factor
    held fixed.
    """
    d_a, d_b = target.dims
    if target.dim == d_a * d_b:
        return psi / np.linalg.norm(psi), phi / np.linalg.norm(phi)
    q, _ = np.linalg.qr(np.concatenate([target.basis, np.eye(d_a * d_b)], axis=1))
    comp = q[:, target.dim:d_a * d_b].conj().T.reshape(-1, d_a, d_b)
    psi = psi / psi[np.argmax(np.abs(psi))]
    phi = phi / phi[np.argmax(np.abs(phi))]
    ia, ib = int(np.argmax(np.abs(psi))), int(np.argmax(np.abs(phi)))
    free_a = [i for i in range(d_a) if i != ia]
    free_b = [j for j in range(d_b) if j != ib]
    best = (np.inf, psi, phi)
    for _ in range(iters):
        f = np.einsum("kij,i,j->k", comp, psi, phi)
        nf = float(np.linalg.norm(f))
        if nf < best[0]:
            best = (nf, psi.copy(), phi.copy())
        if nf < 1e-15:
            break
        ja = np.einsum("kij,j->ki", comp, phi)[:, free_a]
        jb = np.einsum("kij,i->kj", comp, psi)[:, free_b]
        step = np.linalg.lstsq(np.concatenate([ja, jb], axis=1), -f, rcond=None)[0]
        psi = psi.copy()
        phi = phi.copy()
        psi[free_a] += step[:len(free_a)]
        phi[free_b] += step[len(free_a):]
    _, psi, phi = best
    return psi / np.linalg.norm(psi), phi / np.linalg.norm(phi)


def numeric_product_search(target: StateSubspace, restarts: int = 64, iters: int = 500,
                           rng: int | np.random.Generator | None = 0,
                           polish: bool = True) -> SearchResult:
    """Best product-state overlap ``max ||P (psi ⊗ phi)||^2`` with ``target``.

    Alternating maximisation: with ``phi`` fixed the optimal ``psi`` is the
    top right singular vector of the contracted frame, and vice versa.
    Overlaps close to 1 are polished and reported as witnesses only when the
    residual is at most 1e-9.
    """
    gen = make_rng(rng)
    q = _frame(target)  # q[i, j, k] = conj(basis_k)[i, j]
    d_a, d_b, _ = q.shape
    best = None
    for _ in range(restarts):
        phi = gen.standard_normal(d_b) + 1j * gen.standard_normal(d_b)
        phi /= np.linalg.norm(phi)
        val = -1.0
        for _ in range(iters):
            t = np.einsum("ijk,j->ki", q, phi)
            _, sv, vh = np.linalg.svd(t)
            psi = vh[0].conj()
            t = np.einsum("ijk,i->kj", q, psi)
            _, sv, vh = np.linalg.svd(t)
            phi = vh[0].conj()
            new = float(sv[0] ** 2)
            if new - val < 1e-15:
                val = new
                break
            val = new
        if best is None or val > best[0]:
            best = (val, psi, phi)
        if val > 1 - 1e-12:
            break
    val, psi, phi = best
    res = witness_residual(target, psi, phi)
    if polish and val > 1 - 1e-4 and res > TOL_WITNESS:
        p2, f2 = polish_product(target, psi, phi)
        r2 = witness_residual(target, p2, f2)
        if r2 < res:
            psi, phi, res = p2, f2, r2
            val = 1 - r2 * r2
    return SearchResult(min(float(val), 1.0), psi, phi, res)


# -- exact decision -------------------------------------------------------------


@dataclass
class CaseRecord:
    index: int
    pivots: tuple
    status: str  # "unit", "solvable", "budget"
    steps: int
    basis: str = ""

    def to_json(self) -> dict:
        return {"index": self.index, "pivots": list(self.pivots), "status": self.status,
                "steps": self.steps, "basis": self.basis}


@dataclass
class DetectionResult:
    verdict: str  # "empty", "witness", "unknown"
    method: str  # "exact", "numeric"
    target: str
    formulation: str
    psi: np.ndarray | None = None
    phi: np.ndarray | None = None
    residual: float | None = None
    cases: list[CaseRecord] = field(default_factory=list)
    rationalization_angle: float | None = None
    best_overlap: float | None = None
    note: str = ""

    @property
    def witness(self):
        return None if self.psi is None else (self.psi, self.phi)

    def to_json(self) -> dict:
        out = {
            "verdict": self.verdict,
            "method": self.method,
            "target": self.target,
            "formulation": self.formulation,
            "cases": [c.to_json() for c in self.cases],
        }
        if self.psi is not None:
            out["witness"] = {
                "psi": [[float(z.real), float(z.imag)] for z in self.psi],
                "phi": [[float(z.real), float(z.imag)] for z in self.phi],
                "residual": self.residual,
            }
        if self.rationalization_angle is not None:
            out["rationalization_angle"] = self.rationalization_angle
        if self.best_overlap is not None:
            out["best_overlap"] = self.best_overlap
        if self.note:
            out["note"] = self.note
        return out


def _charts(nblocks: Sequence[tuple[int, int]]):
    """Projective charts: in each block, coordinate ``a`` is 1 and earlier ones vanish."""
    ranges = [range(size) for _, size in nblocks]
    for piv in itertools.product(*ranges):
        assign = {}
        for (start, _), a in zip(nblocks, piv):
            for j in range(a):
                assign[start + j] = 0
            assign[start + a] = 1
        yield piv, assign


def _solve_linear(basis: list[Polynomial], fixed: dict, n: int) -> np.ndarray | None:
    """Exact solution when every basis polynomial has degree one (free variables at 0)."""
    if any(p.degree() > 1 for p in basis):
        return None
    point = {i: gq(v) for i, v in fixed.items()}
    # reduced basis in echelon form: each leading variable is solved from its tail
    for p in basis:
        lm = p.leading_monomial()
        lead = lm.index(1)
        val = gaussq.ZERO
        for e, c in p.terms.items():
            if e == lm:
                continue
            if any(e):
                var = e.index(1)
                val = val - c * point.get(var, gaussq.ZERO)
            else:
                val = val - c
        point[lead] = val / p.terms[lm]
    return np.array([complex(point.get(i, gaussq.ZERO)) for i in range(n)])


def _solve_sliced(polys: list[Polynomial], fixed: dict, n: int, rng: np.random.Generator,
                  budget: int, tries: int = 8) -> np.ndarray | None:
    """Numeric point of a nonempty variety via random hyperplanes and a lex basis."""
    free = [i for i in range(n) if i not in fixed]
    for _ in range(tries):
        current = list(polys)
        for _ in range(len(free) + 1):
            gb = buchberger(current, order="lex", budget=budget, verify=False)
            if not gb.complete or gb.is_unit():
                break
            if _zero_dimensional(gb.polys, free):
                pt = _back_substitute(gb.polys, fixed, n, free)
                if pt is not None:
                    return pt
                break
            coeffs = {i: GaussRational(int(rng.integers(-3, 4)), int(rng.integers(-3, 4))) for i in free}
            terms = {tuple(int(k == i) for k in range(n)): c for i, c in coeffs.items()}
            terms[(0,) * n] = GaussRational(int(rng.integers(-3, 4)), int(rng.integers(-3, 4)))
            current = gb.polys + [Polynomial(terms, n)]
    return None


def _zero_dimensional(basis: list[Polynomial], free: list[int]) -> bool:
    leads = [p.leading_monomial("lex") for p in basis]
    for i in free:
        if not any(lm[i] > 0 and sum(lm) == lm[i] for lm in leads):
            return False
    return True


def _back_substitute(basis: list[Polynomial], fixed: dict, n: int, free: list[int]) -> np.ndarray | None:
    """Solve a zero-dimensional lex basis from the last variable backwards."""
    polys = [p.substitute(fixed) for p in basis]

    def rec(order: list[int], known: dict):
        if not order:
            return known
        var = order[0]
        cands = []
        for p in polys:
            vars_in = {i for e in p.terms for i, k in enumerate(e) if k}
            if var in vars_in and vars_in <= set(known) | {var}:
                coeffs = {}
                for e, c in p.terms.items():
                    val = complex(c)
                    for i, k in enumerate(e):
                        if k and i != var:
                            val *= known[i] ** k
                    coeffs[e[var]] = coeffs.get(e[var], 0) + val
                deg = max(coeffs)
                arr = np.array([coeffs.get(deg - j, 0) for j in range(deg + 1)])
                if np.max(np.abs(arr)) > 1e-12:
                    cands.append(arr)
        if not cands:
            roots = [0j]
        else:
            arr = min(cands, key=len)
            arr = np.trim_zeros(arr, "f")
            roots = list(np.roots(arr)) if len(arr) > 1 else []
        for r in roots:
            k2 = dict(known)
            k2[var] = complex(r)
            ok = True
            for p in polys:
                vars_in = {i for e in p.terms for i, k in enumerate(e) if k}
                if vars_in and vars_in <= set(k2):
                    pt = [k2.get(i, 0) for i in range(n)]
                    if abs(p.evaluate(pt)) > 1e-6 * max(1.0, max(abs(complex(c)) for c in p.terms.values())):
                        ok = False
                        break
            if ok:
                out = rec(order[1:], k2)
                if out is not None:
                    return out
        return None

    # lex: the last variable is eliminated first
    sol = rec(sorted(free, reverse=True), {})
    if sol is None:
        return None
    pt = np.zeros(n, dtype=complex)
    for i, v in fixed.items():
        pt[i] = complex(gq(v))
    for i, v in sol.items():
        pt[i] = v
    return pt


def decide_product_states(
    s: ExactSubspace | StateSubspace,
    target: str = "complement",
    budget: int = 10**7,
    formulation: str = "bilinear",
    restarts: int = 64,
    max_den: int = 10**6,
    rng: int | np.random.Generator | None = 0,
    exact_max_ambient: int | None = None,
    stop_on_budget: bool = False,
) -> DetectionResult:
    """Exact decision on whether the target (``S^⊥`` or ``S``) holds a product state.

    Verdict ``"empty"`` requires a reduced basis ``{1}`` in every chart.
    The first chart with a nontrivial basis is solved for a witness (exact
    linear solve, then alternating search with Gauss-Newton polish, then
    hyperplane slicing); the witness is checked against the floating-point
    subspace to residual 1e-9.  Running out of ``budget`` reduction steps in
    any chart gives ``"unknown"``; with ``stop_on_budget`` the remaining
    charts are then skipped.

    A numeric ``StateSubspace`` is rationalized first; the verdict then
    refers to the rationalized subspace, whose distance is recorded.
    """
    if formulation not in ("bilinear", "minor"):
        raise ValueError("formulation must be 'bilinear' or 'minor'")
    if target not in TARGETS:
        raise ValueError(f"target must be one of {TARGETS}")
    angle = None
    if isinstance(s, StateSubspace):
        if exact_max_ambient is not None and s.ambient > exact_max_ambient:
            return _numeric_only(s, target, formulation, restarts, rng,
                                 "ambient dimension above the exact cutoff")
        try:
            s, angle = rationalize(s, max_den)
        except RationalizationError as err:
            return _numeric_only(s, target, formulation, restarts, rng, str(err))
    gen = make_rng(rng)
    d_a, d_b = s.dims
    if target == "complement" and s.dim == s.ambient:
        return DetectionResult("empty", "exact", target, formulation, note="S is the full space",
                               rationalization_angle=angle)
    tgt_exact = _target_basis(s, target)
    tgt = tgt_exact.numeric()

    if formulation == "bilinear":
        ideal = build_bilinear_system(s, target)
        blocks = [(0, d_a), (d_a, d_b)]
        to_pair = lambda pt: (pt[:d_a], pt[d_a:])  # noqa: E731
    else:
        ideal = build_minor_system(s, target)
        blocks = [(0, tgt_exact.dim)]
        mats = gaussq.to_complex_array(tgt_exact.rows)

        def to_pair(pt):
            m = (pt @ mats).reshape(d_a, d_b)
            u, sv, vh = np.linalg.svd(m)
            return u[:, 0] * sv[0], vh[0]

    n = ideal.nvars
    cases: list[CaseRecord] = []
    undecided = False
    for idx, (piv, assign) in enumerate(_charts(blocks)):
        gens = [g.substitute(assign) for g in ideal.generators]
        gens = [g for g in gens if not g.is_zero()]
        if not gens:
            gb = GroebnerBasis([Polynomial({}, n)], "grevlex", True, 0, True, ideal.names)
            status = "solvable"
        else:
            # every basis element is an ideal member, so a unit basis proves emptiness;
            # a non-unit basis only steers the witness search, which is checked on its own
            gb = buchberger(gens, budget=budget, verify=False)
            gb.names = ideal.names
            status = "unit" if gb.is_unit() else ("solvable" if gb.complete else "budget")
        text = gb.to_text() if status != "budget" else ""
        cases.append(CaseRecord(idx, tuple(piv), status, gb.steps, text))
        if status == "budget":
            undecided = True
            if stop_on_budget:
                break
            continue
        if status == "unit":
            continue
        point = _solve_linear([p for p in gb.polys if not p.is_zero()], assign, n)
        how = "exact-linear"
        pair = None
        if point is not None:
            pair = to_pair(point)
        if pair is None or witness_residual(tgt, *pair) > TOL_WITNESS:
            how = "numeric-search"
            res = numeric_product_search(tgt, restarts=restarts, rng=gen)
            pair = (res.psi, res.phi) if res.is_witness else None
        if pair is None:
            how = "sliced"
            point = _solve_sliced([p for p in gb.polys if not p.is_zero()] or gens, assign, n,
                                  gen, budget)
            if point is not None:
                pair = polish_product(tgt, *to_pair(point))
        if pair is not None and witness_residual(tgt, *pair) <= TOL_WITNESS:
            psi, phi = (v / np.linalg.norm(v) for v in pair)
            return DetectionResult("witness", "exact", target, formulation, psi, phi,
                                   witness_residual(tgt, psi, phi), cases, angle,
                                   note=f"chart {idx} solvable; witness via {how}")
        return DetectionResult("unknown", "exact", target, formulation, cases=cases,
                               rationalization_angle=angle,
                               note=f"chart {idx} is solvable but no witness met the tolerance")
    if undecided:
        return DetectionResult("unknown", "exact", target, formulation, cases=cases,
                               rationalization_angle=angle, note="step budget exhausted")
    return DetectionResult("empty", "exact", target, formulation, cases=cases,
                           rationalization_angle=angle)


def _numeric_only(s: StateSubspace, target: str, formulation: str, restarts: int, rng,
                  note: str) -> DetectionResult:
    from .qmat import orthogonal_complement

    tgt = orthogonal_complement(s) if target == "complement" else s
    res = numeric_product_search(tgt, restarts=restarts, rng=rng)
    if res.is_witness:
        return DetectionResult("witness", "numeric", target, formulation, res.psi, res.phi,
                               res.residual, best_overlap=res.best_overlap, note=note)
    return DetectionResult("unknown", "numeric", target, formulation,
                           best_overlap=res.best_overlap, note=note)
