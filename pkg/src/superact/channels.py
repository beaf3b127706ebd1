"""Channels as Kraus families and their Choi-Jamiołkowski matrices.

Choi matrices use the unnormalised seed ``omega = sum_i |i,i>``, input
factor first: ``choi = sum_ij |i><j| ⊗ E(|i><j|)``, so a channel is recovered
as ``E(rho) = tr_in[choi · (rho^T ⊗ id)]``.  Large Choi matrices are kept in
factored form ``choi = F F^†`` and only expanded on request.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

from . import qmat
from .qmat import DimensionError, hermitian_inv_sqrt, partial_trace
from .subspaces import PsdBasis, find_psd_basis, is_conjugate_symmetric

__all__ = [
    "KrausMap",
    "Channel",
    "ChoiMatrix",
    "random_channel",
    "choi_from_channel",
    "channel_from_choi",
    "apply_channel",
    "adjoint_channel",
    "compose",
    "choi_of_adjoint",
    "composite_choi",
    "standardize_choi",
    "SubspaceChannel",
    "channel_from_subspace",
    "NecessaryReport",
    "check_necessary",
    "TOL_CPT",
]

TOL_CPT = 1e-10
TOL_EIG = 1e-9


@dataclass(frozen=True, eq=False)
class KrausMap:
    """Completely positive map ``X -> sum_k K_k X K_k^†``.

    ``kraus`` has shape ``(n_kraus, d_out, d_in)``.
    """

    kraus: np.ndarray

    def __post_init__(self):
        k = np.asarray(self.kraus, dtype=complex)
        if k.ndim == 2:
            k = k[None]
        if k.ndim != 3 or k.shape[0] == 0:
            raise DimensionError("kraus must have shape (n, d_out, d_in) with n >= 1")
        k.setflags(write=False)
        object.__setattr__(self, "kraus", k)

    @property
    def d_in(self) -> int:
        return self.kraus.shape[2]

    @property
    def d_out(self) -> int:
        return self.kraus.shape[1]

    @property
    def dims(self) -> tuple[int, int]:
        return (self.d_in, self.d_out)

    @property
    def n_kraus(self) -> int:
        return self.kraus.shape[0]

    def __call__(self, rho: np.ndarray) -> np.ndarray:
        rho = np.asarray(rho, dtype=complex)
        if rho.shape != (self.d_in, self.d_in):
            raise DimensionError(f"input of shape {rho.shape}, expected {(self.d_in,) * 2}")
        return np.einsum("kij,jl,kml->im", self.kraus, rho, self.kraus.conj())

    def cpt_error(self) -> float:
        s = np.einsum("kji,kjl->il", self.kraus.conj(), self.kraus)
        return float(np.max(np.abs(s - np.eye(self.d_in))))


@dataclass(frozen=True, eq=False)
class Channel(KrausMap):
    """A CPT map from ``C^dA`` to ``C^dB``; trace preservation is checked."""

    tol: float = TOL_CPT

    def __post_init__(self):
        super().__post_init__()
        err = self.cpt_error()
        if err > self.tol:
            raise ValueError(f"Kraus operators are not trace preserving (error {err:.3e})")

    @property
    def d_A(self) -> int:
        return self.d_in

    @property
    def d_B(self) -> int:
        return self.d_out

    @property
    def d_E(self) -> int:
        return self.n_kraus

    def to_json(self) -> dict:
        return {
            "d_A": self.d_A,
            "d_B": self.d_B,
            "kraus": [qmat.array_to_json(k) for k in self.kraus],
        }

    @classmethod
    def from_json(cls, obj: dict) -> "Channel":
        kraus = np.stack([qmat.array_from_json(k) for k in obj["kraus"]])
        if kraus.shape[1:] != (obj["d_B"], obj["d_A"]):
            raise DimensionError("Kraus shapes disagree with d_A/d_B")
        return cls(kraus)


@dataclass(frozen=True, eq=False)
class ChoiMatrix:
    """Choi matrix on ``C^d_in ⊗ C^d_out``.

    Exactly one of ``matrix`` / ``factor`` is usually given; ``factor`` has
    shape ``(d_in*d_out, r)`` and represents ``factor @ factor^†``.
    ``kind`` is ``"standard"`` (seed ``sum_i |i,i>``) or ``"nonstandard"``.
    """

    dims: tuple[int, int]
    kind: str = "standard"
    matrix_: np.ndarray | None = None
    factor: np.ndarray | None = None
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in ("standard", "nonstandard"):
            raise ValueError(f"unknown Choi kind {self.kind!r}")
        n = self.dims[0] * self.dims[1]
        if self.matrix_ is None and self.factor is None:
            raise ValueError("need a matrix or a factor")
        if self.matrix_ is not None:
            m = np.asarray(self.matrix_, dtype=complex)
            if m.shape != (n, n):
                raise DimensionError(f"Choi matrix shape {m.shape} does not match dims {self.dims}")
            scale = max(float(np.max(np.abs(m))), 1.0)
            if np.max(np.abs(m - m.conj().T)) > 1e-10 * scale:
                raise ValueError("Choi matrix is not Hermitian")
            object.__setattr__(self, "matrix_", m)
        if self.factor is not None:
            f = np.asarray(self.factor, dtype=complex)
            if f.ndim != 2 or f.shape[0] != n:
                raise DimensionError(f"factor shape {f.shape} does not match dims {self.dims}")
            object.__setattr__(self, "factor", f)

    @property
    def matrix(self) -> np.ndarray:
        if self.matrix_ is None:
            object.__setattr__(self, "matrix_", self.factor @ self.factor.conj().T)
        return self.matrix_

    @property
    def d_in(self) -> int:
        return self.dims[0]

    @property
    def d_out(self) -> int:
        return self.dims[1]

    def input_marginal(self) -> np.ndarray:
        """``tr_out`` of the Choi matrix, an operator on the input space."""
        if self.factor is not None:
            f = self.factor.reshape(self.d_in, self.d_out, -1)
            return np.einsum("abk,cbk->ac", f, f.conj())
        return partial_trace(self.matrix, self.dims, "B")

    def min_eigenvalue(self) -> float:
        if self.factor is not None and self.matrix_ is None:
            return 0.0 if self.factor.shape[1] < self.factor.shape[0] else float(
                np.linalg.svd(self.factor, compute_uv=False)[-1] ** 2)
        return float(np.linalg.eigvalsh(self.matrix)[0])

    def support(self, tol: float = TOL_EIG) -> qmat.StateSubspace:
        """Range of the Choi matrix as a state subspace (relative cutoff ``tol``)."""
        if self.factor is not None:
            return qmat.StateSubspace(qmat.orthonormalize(self.factor, tol), self.dims)
        w, v = np.linalg.eigh(self.matrix)
        keep = w > tol * max(w[-1], 0.0)
        return qmat.StateSubspace(v[:, keep], self.dims)

    def to_json(self) -> dict:
        return {
            "dims": list(self.dims),
            "kind": self.kind,
            "matrix": qmat.array_to_json(self.matrix),
        }

    @classmethod
    def from_json(cls, obj: dict) -> "ChoiMatrix":
        return cls(tuple(obj["dims"]), obj["kind"], matrix_=qmat.array_from_json(obj["matrix"]))


def random_channel(d_A: int, d_B: int, d_E: int, rng: np.random.Generator) -> Channel:
    """Channel from a random isometry ``C^dA -> C^dE ⊗ C^dB``."""
    if d_E * d_B < d_A:
        raise ValueError("need d_E * d_B >= d_A for an isometry")
    g = rng.standard_normal((d_E * d_B, d_A)) + 1j * rng.standard_normal((d_E * d_B, d_A))
    q, _ = np.linalg.qr(g)
    return Channel(q.reshape(d_E, d_B, d_A))


def choi_from_channel(E: KrausMap) -> ChoiMatrix:
    """Standard Choi matrix ``sum_ij |i><j| ⊗ E(|i><j|)``, kept factored."""
    n_k, d_out, d_in = E.kraus.shape
    # column k is vec of (id ⊗ K_k)|omega>, whose coefficient matrix is K_k^T
    factor = E.kraus.transpose(2, 1, 0).reshape(d_in * d_out, n_k)
    return ChoiMatrix((d_in, d_out), "standard", factor=factor)


def channel_from_choi(choi: ChoiMatrix, tol: float = TOL_EIG, check: bool = True) -> KrausMap:
    """Kraus family of a standard Choi matrix.

    A factored Choi matrix yields one Kraus operator per factor column;
    otherwise the eigenvectors above ``tol`` (relative) are reshaped.
    """
    if choi.kind != "standard":
        raise ValueError("standardize the Choi matrix first")
    d_in, d_out = choi.dims
    if choi.factor is not None:
        vecs = choi.factor
    else:
        w, v = np.linalg.eigh(choi.matrix)
        keep = w > tol * max(w[-1], 0.0)
        vecs = v[:, keep] * np.sqrt(w[keep])
    kraus = vecs.T.reshape(-1, d_in, d_out).transpose(0, 2, 1)
    return Channel(kraus) if check else KrausMap(kraus)


def apply_channel(E: KrausMap | ChoiMatrix, rho: np.ndarray) -> np.ndarray:
    """Apply a map given by Kraus operators or by a Choi matrix."""
    if isinstance(E, KrausMap):
        return E(rho)
    choi = E if E.kind == "standard" else standardize_choi(E)
    d_in, d_out = choi.dims
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (d_in, d_in):
        raise DimensionError(f"input of shape {rho.shape}, expected {(d_in, d_in)}")
    t = choi.matrix.reshape(d_in, d_out, d_in, d_out)
    # tr_A[choi · (rho^T ⊗ id)]
    return np.einsum("abcd,ca->bd", t, rho.T)


def adjoint_channel(E: KrausMap) -> KrausMap:
    """Hilbert-Schmidt adjoint, with Kraus operators ``K_k^†``."""
    return KrausMap(E.kraus.conj().transpose(0, 2, 1))


def compose(first: KrausMap, second: KrausMap) -> KrausMap:
    """``second ∘ first`` as a Kraus family."""
    if first.d_out != second.d_in:
        raise DimensionError("output of the first map must feed the second")
    prods = np.einsum("lij,kjm->lkim", second.kraus, first.kraus)
    return KrausMap(prods.reshape(-1, second.d_out, first.d_in))


def choi_of_adjoint(choi: ChoiMatrix) -> ChoiMatrix:
    """Choi matrix of the adjoint map: the flip (swap and conjugate) of ``choi``."""
    d_in, d_out = choi.dims
    if choi.factor is not None and choi.matrix_ is None:
        f = choi.factor.reshape(d_in, d_out, -1).conj().transpose(1, 0, 2)
        return ChoiMatrix((d_out, d_in), choi.kind, factor=f.reshape(d_in * d_out, -1))
    return ChoiMatrix((d_out, d_in), choi.kind, matrix_=qmat.flip_operator(choi.matrix, choi.dims))


def composite_choi(rho: ChoiMatrix) -> ChoiMatrix:
    """Choi matrix of ``E^* ∘ E`` from a Choi matrix of ``E``.

    Evaluates ``tr_B[(rho_AB ⊗ id_A') · (id_A ⊗ conj(rho)_{BA'}^{T_B})]``,
    whose entries are
    ``sigma[a,a',c,c'] = sum_{b,b'} rho[a,b,c,b'] * conj(rho[a',b,c',b'])``.
    A factored input gives a factored output.
    """
    d_a, d_b = rho.dims
    if rho.factor is not None and rho.matrix_ is None:
        f = rho.factor.reshape(d_a, d_b, -1)
        r = f.shape[2]
        # G_kl[a, a'] = sum_b f[a,b,k] conj(f[a',b,l]) via one matrix product
        y = f.transpose(1, 0, 2).reshape(d_b, d_a * r)
        g = (y.T @ y.conj()).reshape(d_a, r, d_a, r).transpose(0, 2, 1, 3)
        return ChoiMatrix((d_a, d_a), rho.kind, factor=g.reshape(d_a * d_a, r * r))
    t = rho.matrix.reshape(d_a, d_b, d_a, d_b)
    sigma = np.einsum("abcd,ebfd->aecf", t, t.conj()).reshape(d_a * d_a, d_a * d_a)
    return ChoiMatrix((d_a, d_a), rho.kind, matrix_=(sigma + sigma.conj().T) / 2)


def standardize_choi(sigma: ChoiMatrix, shrink: bool = False, tol: float = TOL_EIG) -> ChoiMatrix:
    """Rescale the input factor so that ``tr_out`` becomes the identity.

    Returns ``(R ⊗ id) sigma (R ⊗ id)`` with ``R = tr_out(sigma)^{-1/2}``;
    ``metadata["input_rescale"]`` records ``R``.  A rank-deficient marginal
    raises unless ``shrink`` is set, in which case the input space is first
    restricted to the marginal's support (``metadata["embedding"]``).
    """
    marg = sigma.input_marginal()
    marg = (marg + marg.conj().T) / 2
    d_in, d_out = sigma.dims
    if sigma.kind == "standard" and np.max(np.abs(marg - np.eye(d_in))) <= 1e-12:
        return sigma
    w, v = np.linalg.eigh(marg)
    keep = w > tol * max(w[-1], 0.0)
    embedding = None
    if not np.all(keep):
        if not shrink:
            raise ValueError("input marginal is rank deficient; pass shrink=True")
        embedding = v[:, keep]
        sigma = _restrict_input(sigma, embedding)
        d_in = embedding.shape[1]
        marg = sigma.input_marginal()
        marg = (marg + marg.conj().T) / 2
    r = hermitian_inv_sqrt(marg, tol=tol)
    meta = dict(sigma.metadata)
    meta["input_rescale"] = r
    if embedding is not None:
        meta["embedding"] = embedding
    if sigma.factor is not None and sigma.matrix_ is None:
        f = np.einsum("ac,cbk->abk", r, sigma.factor.reshape(d_in, d_out, -1))
        return ChoiMatrix((d_in, d_out), "standard", factor=f.reshape(d_in * d_out, -1),
                          metadata=meta)
    lift = np.kron(r, np.eye(d_out))
    m = lift @ sigma.matrix @ lift
    return ChoiMatrix((d_in, d_out), "standard", matrix_=(m + m.conj().T) / 2, metadata=meta)


def _restrict_input(sigma: ChoiMatrix, v: np.ndarray) -> ChoiMatrix:
    d_in, d_out = sigma.dims
    r = v.shape[1]
    vd = v.conj().T
    if sigma.factor is not None and sigma.matrix_ is None:
        f = np.einsum("ca,abk->cbk", vd, sigma.factor.reshape(d_in, d_out, -1))
        return ChoiMatrix((r, d_out), sigma.kind, factor=f.reshape(r * d_out, -1),
                          metadata=dict(sigma.metadata))
    p = np.kron(vd, np.eye(d_out))
    return ChoiMatrix((r, d_out), sigma.kind, matrix_=p @ sigma.matrix @ p.conj().T,
                      metadata=dict(sigma.metadata))


class SubspaceChannel(NamedTuple):
    channel: Channel
    rho: ChoiMatrix
    sigma: ChoiMatrix

    @property
    def rescale(self) -> np.ndarray:
        """``R = rho_A^{-1/2}``; the channel's composite support is ``(R ⊗ conj R) S``."""
        return hermitian_inv_sqrt(self.rho.input_marginal())


def channel_from_subspace(
    basis: PsdBasis | Sequence[np.ndarray],
    tol: float = TOL_EIG,
    shrink: bool = False,
) -> SubspaceChannel:
    """Channel whose composite ``E^* ∘ E`` has Choi support ``span(basis)``.

    Each PSD generator ``M_k = sum_i |psi_i^k><psi_i^k|`` (eigenvalues absorbed)
    contributes the Kraus block ``|k,i> <- |psi_i^k>``, so
    ``rho_AB = sum_ijk |psi_i^k>|k,i><psi_j^k|<k,j|``.  The result has
    ``d_E = len(basis)`` Kraus operators and output dimension ``d_A * d_E``.
    ``rho`` is returned non-standard; the channel is its standardization.
    """
    mats = basis.elements if isinstance(basis, PsdBasis) else [np.asarray(m, complex) for m in basis]
    if not mats:
        raise ValueError("empty basis")
    d_a = mats[0].shape[0]
    d_e = len(mats)
    scale = max(float(np.max(np.abs(m))) for m in mats)
    vecs = np.zeros((d_e, d_a, d_a), dtype=complex)  # vecs[k, i] = psi_i^k
    clean = []
    for k, m in enumerate(mats):
        if m.shape != (d_a, d_a):
            raise DimensionError("basis matrices must all be d_A x d_A")
        if np.max(np.abs(m - m.conj().T)) > 1e-12 * max(scale, 1.0):
            raise ValueError(f"basis element {k} is not Hermitian")
        w, v = np.linalg.eigh((m + m.conj().T) / 2)
        if w[0] < -tol * scale:
            raise ValueError(f"basis element {k} has negative eigenvalue {w[0]:.3e}")
        w = np.where(w > tol * scale, w, 0.0)
        vecs[k] = (v * np.sqrt(w)).T
        clean.append((v * w) @ v.conj().T)

    # factor of rho_AB: column k is sum_i |psi_i^k> ⊗ |k,i>
    d_b = d_e * d_a
    f = np.zeros((d_a, d_e, d_a, d_e), dtype=complex)  # [a, k, i, column]
    for k in range(d_e):
        f[:, k, :, k] = vecs[k].T
    rho = ChoiMatrix((d_a, d_b), "nonstandard", factor=f.reshape(d_a * d_b, d_e))

    marg = rho.input_marginal()
    wm = np.linalg.eigvalsh((marg + marg.conj().T) / 2)
    if wm[0] <= tol * wm[-1] and not shrink:
        raise ValueError("span of the basis does not have full support on the input space")
    std = standardize_choi(rho, shrink=shrink, tol=tol)
    channel = channel_from_choi(std)

    sigma = ChoiMatrix((d_a, d_a), "nonstandard",
                       factor=np.stack([c.reshape(-1) for c in clean], axis=1))
    return SubspaceChannel(channel, rho, sigma)


@dataclass
class NecessaryReport:
    conjugate_symmetric: bool
    symmetry_angle: float
    psd_basis: bool
    best_min_eigenvalue: float
    support_dim: int

    @property
    def passed(self) -> bool:
        return self.conjugate_symmetric and self.psd_basis


def check_necessary(sigma: ChoiMatrix, tol: float = 1e-8) -> NecessaryReport:
    """Test the support of a composite Choi matrix for conjugate symmetry and a PSD basis."""
    if sigma.dims[0] != sigma.dims[1]:
        raise DimensionError("composite Choi matrices live on A ⊗ A'")
    supp = sigma.support()
    sym, angle = is_conjugate_symmetric(supp, tol, return_angle=True)
    found = find_psd_basis(supp) if sym else None
    ok = isinstance(found, PsdBasis)
    best = found.min_eigenvalue if ok else (found.best_min_eigenvalue if found is not None else float("nan"))
    return NecessaryReport(sym, angle, ok, best, supp.dim)
