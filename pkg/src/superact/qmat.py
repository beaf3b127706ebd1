"""Dense complex linear algebra on bipartite spaces.

States on ``C^dA ⊗ C^dB`` are flat complex arrays indexed row-major, so
``psi[i*dB + j]`` is the coefficient of ``|i>|j>`` and
``state_to_matrix(psi, dims)`` is just a reshape.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
import scipy.linalg as sla

__all__ = [
    "DimensionError",
    "TOL_ORTHO",
    "TOL_RANK",
    "state_to_matrix",
    "matrix_to_state",
    "flip",
    "flip_operator",
    "schmidt_rank",
    "orthonormalize",
    "StateSubspace",
    "orthogonal_complement",
    "max_principal_angle",
    "partial_trace",
    "hermitian_inv_sqrt",
    "omega",
    "antidiagonal",
    "array_to_json",
    "array_from_json",
]

TOL_ORTHO = 1e-10
TOL_RANK = 1e-9


class DimensionError(ValueError):
    """Raised when array shapes do not match the declared bipartite dims."""


def _check_state(psi: np.ndarray, dims: tuple[int, int]) -> np.ndarray:
    psi = np.asarray(psi, dtype=complex)
    if psi.ndim != 1 or psi.size != dims[0] * dims[1]:
        raise DimensionError(f"state of size {psi.size} does not match dims {dims}")
    return psi


def state_to_matrix(psi: np.ndarray, dims: tuple[int, int]) -> np.ndarray:
    """Coefficient matrix M with ``M[i, j]`` the amplitude of ``|i>|j>``."""
    return _check_state(psi, dims).reshape(dims)


def matrix_to_state(m: np.ndarray) -> np.ndarray:
    return np.asarray(m, dtype=complex).reshape(-1)


def omega(d: int) -> np.ndarray:
    """Unnormalised maximally entangled state ``sum_i |i,i>``."""
    return np.eye(d, dtype=complex).reshape(-1)


def antidiagonal(d: int) -> np.ndarray:
    """The antidiagonal permutation unitary X (``X|i> = |d-1-i>``)."""
    return np.fliplr(np.eye(d, dtype=complex))


def flip(psi: np.ndarray, dims: tuple[int, int]) -> np.ndarray:
    """Swap composed with complex conjugation, on a state.

    The result lives on ``C^dB ⊗ C^dA``; its coefficient matrix is the
    conjugate transpose of the input's.
    """
    return state_to_matrix(psi, dims).conj().T.reshape(-1)


def flip_operator(op: np.ndarray, dims: tuple[int, int]) -> np.ndarray:
    """``swap · conj(op) · swap`` for an operator on ``C^dA ⊗ C^dB``."""
    da, db = dims
    op = np.asarray(op, dtype=complex)
    if op.shape != (da * db, da * db):
        raise DimensionError(f"operator of shape {op.shape} does not match dims {dims}")
    t = op.reshape(da, db, da, db).conj().transpose(1, 0, 3, 2)
    return t.reshape(da * db, da * db)


def schmidt_rank(psi: np.ndarray, dims: tuple[int, int], tol: float = TOL_RANK) -> int:
    if tol <= 0:
        raise ValueError("tol must be positive")
    s = np.linalg.svd(state_to_matrix(psi, dims), compute_uv=False)
    if s[0] == 0:
        raise ValueError("Schmidt rank of the zero vector is undefined")
    return int(np.sum(s > tol * s[0]))


def orthonormalize(vectors: np.ndarray, tol: float = TOL_RANK) -> np.ndarray:
    """Orthonormal basis (as columns) for the span of the columns of ``vectors``.

    Uses QR with column pivoting, so the result depends only on the input
    order; columns whose pivot falls below ``tol`` relative to the largest
    are treated as dependent.
    """
    v = np.asarray(vectors, dtype=complex)
    if v.ndim == 1:
        v = v[:, None]
    if v.shape[1] == 0:
        return np.zeros((v.shape[0], 0), dtype=complex)
    q, r, _ = sla.qr(v, mode="economic", pivoting=True)
    diag = np.abs(np.diag(r))
    if diag.size == 0 or diag[0] == 0:
        return np.zeros((v.shape[0], 0), dtype=complex)
    k = int(np.sum(diag > tol * diag[0]))
    return q[:, :k]


@dataclass(frozen=True, eq=False)
class StateSubspace:
    """Subspace of ``C^dA ⊗ C^dB`` held as an orthonormal column basis."""

    basis: np.ndarray
    dims: tuple[int, int]

    def __post_init__(self):
        b = np.asarray(self.basis, dtype=complex)
        da, db = self.dims
        if b.ndim != 2 or b.shape[0] != da * db:
            raise DimensionError(f"basis shape {b.shape} does not match dims {self.dims}")
        if b.shape[1] == 0:
            raise ValueError("empty subspace")
        gram = b.conj().T @ b
        if np.max(np.abs(gram - np.eye(b.shape[1]))) > TOL_ORTHO:
            raise ValueError("basis is not orthonormal")
        b.setflags(write=False)
        object.__setattr__(self, "basis", b)
        object.__setattr__(self, "dims", (int(da), int(db)))

    @classmethod
    def span(cls, vectors: Iterable[np.ndarray] | np.ndarray, dims: tuple[int, int],
             tol: float = TOL_RANK) -> "StateSubspace":
        """Span of state vectors (rows of an array, or an iterable of vectors)."""
        arr = np.asarray(list(vectors) if not isinstance(vectors, np.ndarray) else vectors,
                         dtype=complex)
        if arr.ndim == 1:
            arr = arr[None, :]
        return cls(orthonormalize(arr.T, tol), dims)

    @classmethod
    def from_matrices(cls, mats: Sequence[np.ndarray], tol: float = TOL_RANK) -> "StateSubspace":
        mats = [np.asarray(m, dtype=complex) for m in mats]
        dims = mats[0].shape
        return cls.span([m.reshape(-1) for m in mats], dims, tol)

    @property
    def dim(self) -> int:
        return self.basis.shape[1]

    @property
    def ambient(self) -> int:
        return self.dims[0] * self.dims[1]

    def matrices(self) -> np.ndarray:
        """Coefficient matrices of the basis, shape ``(dim, dA, dB)``."""
        return self.basis.T.reshape(self.dim, *self.dims)

    def projector(self) -> np.ndarray:
        return self.basis @ self.basis.conj().T

    def contains(self, psi: np.ndarray, tol: float = 1e-8) -> bool:
        psi = _check_state(psi, self.dims)
        n = np.linalg.norm(psi)
        if n == 0:
            return True
        resid = psi - self.basis @ (self.basis.conj().T @ psi)
        return np.linalg.norm(resid) <= tol * n

    def equals(self, other: "StateSubspace", tol: float = 1e-8) -> bool:
        return (
            self.dims == other.dims
            and self.dim == other.dim
            and max_principal_angle(self, other) <= tol
        )

    def includes(self, other: "StateSubspace", tol: float = 1e-8) -> bool:
        """True if ``other`` is a subspace of ``self``."""
        resid = other.basis - self.basis @ (self.basis.conj().T @ other.basis)
        return np.linalg.norm(resid, 2) <= tol

    def transform(self, op: np.ndarray) -> "StateSubspace":
        """Image under a linear map on the ambient space."""
        return StateSubspace.span((op @ self.basis).T, self.dims)


def max_principal_angle(s: StateSubspace, t: StateSubspace) -> float:
    """Largest principal angle between two subspaces (radians).

    For subspaces of different dimension this is pi/2.
    """
    if s.dim != t.dim:
        return float(np.pi / 2)
    # sine of the largest angle, accurate for tiny angles
    resid = t.basis - s.basis @ (s.basis.conj().T @ t.basis)
    sin_max = min(1.0, float(np.linalg.norm(resid, 2)))
    return float(np.arcsin(sin_max))


def orthogonal_complement(s: StateSubspace) -> StateSubspace:
    if s.dim >= s.ambient:
        raise ValueError("the complement of the full space is empty")
    q, _ = sla.qr(s.basis, mode="full")
    return StateSubspace(q[:, s.dim:], s.dims)


def partial_trace(m: np.ndarray, dims: tuple[int, int], side: str) -> np.ndarray:
    """Trace out subsystem ``side`` ('A' or 'B') of an operator on A⊗B."""
    da, db = dims
    m = np.asarray(m, dtype=complex)
    if m.shape != (da * db, da * db):
        raise DimensionError(f"operator of shape {m.shape} is not on dims {dims}")
    t = m.reshape(da, db, da, db)
    if side == "B":
        return np.einsum("ajbj->ab", t)
    if side == "A":
        return np.einsum("iaib->ab", t)
    raise ValueError("side must be 'A' or 'B'")


def hermitian_inv_sqrt(m: np.ndarray, tol: float = 1e-12) -> np.ndarray:
    """Pseudo-inverse square root of a Hermitian PSD matrix.

    Eigenvalues at or below ``tol`` times the largest are treated as kernel.
    """
    m = np.asarray(m, dtype=complex)
    scale = max(np.max(np.abs(m)), 1e-300)
    if np.max(np.abs(m - m.conj().T)) > 1e-12 * scale:
        raise ValueError("matrix is not Hermitian")
    w, v = np.linalg.eigh((m + m.conj().T) / 2)
    cut = tol * max(w.max(), 0.0)
    inv = np.where(w > cut, 1.0 / np.sqrt(np.where(w > cut, w, 1.0)), 0.0)
    return (v * inv) @ v.conj().T


def array_to_json(a: np.ndarray) -> dict:
    """Complex array as ``{"shape": [...], "data": [[re, im], ...]}`` (row-major)."""
    a = np.asarray(a, dtype=complex)
    flat = a.reshape(-1)
    return {
        "shape": list(a.shape),
        "data": [[float(z.real), float(z.imag)] for z in flat],
    }


def array_from_json(obj: dict) -> np.ndarray:
    data = np.asarray(obj["data"], dtype=float)
    if data.size == 0:
        return np.zeros(obj["shape"], dtype=complex)
    return (data[:, 0] + 1j * data[:, 1]).reshape(obj["shape"])
