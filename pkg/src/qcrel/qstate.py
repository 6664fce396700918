"""Dense density-operator primitives.

Every matrix here is a plain complex ``numpy.ndarray``; composite systems carry
an ordered tuple of factor dimensions alongside the matrix.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

HERMITIAN_TOL = 1e-10
TRACE_TOL = 1e-10
PSD_TOL = 1e-10
NORM_TOL = 1e-12
UNITARY_TOL = 1e-9


class StateError(ValueError):
    """Raised when a matrix or vector violates a state invariant."""


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=complex, copy=True)
    a.setflags(write=False)
    return a


def hermitian_deviation(m: np.ndarray) -> float:
    return float(np.max(np.abs(m - m.conj().T))) if m.size else 0.0


def unitary_deviation(u: np.ndarray) -> float:
    u = np.asarray(u)
    return float(np.max(np.abs(u.conj().T @ u - np.eye(u.shape[0]))))


def check_unitary(u: np.ndarray, tol: float = UNITARY_TOL) -> np.ndarray:
    u = np.asarray(u, dtype=complex)
    if u.ndim != 2 or u.shape[0] != u.shape[1]:
        raise StateError(f"unitary must be square, got shape {u.shape}")
    dev = unitary_deviation(u)
    if dev > tol:
        raise StateError(f"matrix is not unitary: max|U^dag U - I| = {dev:.3e} > {tol:g}")
    return u


@dataclass(frozen=True, eq=False)
class DensityOperator:
    """Hermitian, unit-trace, positive semidefinite matrix on ``prod(dims)``.

    Construction validates all three invariants and raises :class:`StateError`
    naming the first one that fails.
    """

    dims: tuple[int, ...]
    matrix: np.ndarray

    def __post_init__(self):
        dims = tuple(int(d) for d in self.dims)
        if not dims or any(d < 2 for d in dims):
            raise StateError(f"dims: every factor dimension must be >= 2, got {list(dims)}")
        m = np.asarray(self.matrix, dtype=complex)
        total = int(np.prod(dims))
        if m.shape != (total, total):
            raise StateError(f"shape: matrix is {m.shape}, dims {list(dims)} require {(total, total)}")
        herm = hermitian_deviation(m)
        if herm > HERMITIAN_TOL:
            raise StateError(f"hermitian: max|M - M^dag| = {herm:.3e} exceeds {HERMITIAN_TOL:g}")
        tr = np.trace(m)
        if abs(tr - 1) > TRACE_TOL:
            raise StateError(f"trace: |tr M - 1| = {abs(tr - 1):.3e} exceeds {TRACE_TOL:g}")
        low = float(np.linalg.eigvalsh(0.5 * (m + m.conj().T))[0])
        if low < -PSD_TOL:
            raise StateError(f"positive: minimum eigenvalue {low:.3e} below {-PSD_TOL:g}")
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "matrix", _frozen(m))

    @classmethod
    def from_matrix(cls, matrix: np.ndarray, dims: Sequence[int] | None = None) -> "DensityOperator":
        """Build from a matrix that may carry round-off asymmetry.

        The Hermitian part is taken before validation, so only noise below the
        invariant tolerances is absorbed.
        """
        m = np.asarray(matrix, dtype=complex)
        if dims is None:
            dims = (m.shape[0],)
        if hermitian_deviation(m) <= HERMITIAN_TOL:
            m = 0.5 * (m + m.conj().T)
        return cls(tuple(dims), m)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def eigenvalues(self) -> np.ndarray:
        """Ascending eigenvalues with round-off negatives clipped to zero."""
        w = np.linalg.eigvalsh(self.matrix)
        return np.where(w < 0, 0.0, w)

    def tensor(self) -> np.ndarray:
        """Matrix reshaped to ``dims + dims`` (row indices first)."""
        return self.matrix.reshape(self.dims + self.dims)

    def __repr__(self):
        return f"DensityOperator(dims={list(self.dims)})"


@dataclass(frozen=True, eq=False)
class PureState:
    dims: tuple[int, ...]
    amplitudes: np.ndarray

    def __post_init__(self):
        dims = tuple(int(d) for d in self.dims)
        v = np.asarray(self.amplitudes, dtype=complex).reshape(-1)
        if v.size != int(np.prod(dims)):
            raise StateError(f"shape: {v.size} amplitudes for dims {list(dims)}")
        norm = np.linalg.norm(v)
        if abs(norm - 1) > NORM_TOL:
            raise StateError(f"norm: |‖psi‖ - 1| = {abs(norm - 1):.3e} exceeds {NORM_TOL:g}")
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "amplitudes", _frozen(v))

    @classmethod
    def normalized(cls, amplitudes, dims: Sequence[int]) -> "PureState":
        v = np.asarray(amplitudes, dtype=complex).reshape(-1)
        return cls(tuple(dims), v / np.linalg.norm(v))

    def density(self) -> DensityOperator:
        v = self.amplitudes
        return DensityOperator.from_matrix(np.outer(v, v.conj()), self.dims)


def ket(index: int | Sequence[int], dims: Sequence[int]) -> np.ndarray:
    """Computational basis vector; ``index`` may be flat or a multi-index."""
    dims = tuple(dims)
    flat = index if isinstance(index, (int, np.integer)) else int(np.ravel_multi_index(tuple(index), dims))
    v = np.zeros(int(np.prod(dims)), dtype=complex)
    v[flat] = 1.0
    return v


def projector(v: np.ndarray, dims: Sequence[int] | None = None) -> DensityOperator:
    return PureState.normalized(v, dims or (len(v),)).density()


def maximally_mixed(dims: Sequence[int]) -> DensityOperator:
    d = int(np.prod(dims))
    return DensityOperator(tuple(dims), np.eye(d) / d)


def tensor_product(a: DensityOperator, b: DensityOperator) -> DensityOperator:
    return DensityOperator.from_matrix(np.kron(a.matrix, b.matrix), a.dims + b.dims)


def partial_trace(rho: DensityOperator, keep: Iterable[int]) -> DensityOperator:
    keep = sorted(set(int(k) for k in keep))
    if not keep:
        raise StateError("nothing kept")
    n = len(rho.dims)
    if keep[0] < 0 or keep[-1] >= n:
        raise StateError(f"factor indices {keep} out of range for {n} factors")
    traced = [i for i in range(n) if i not in keep]
    # row axes 0..n-1, column axes n..2n-1
    t = rho.tensor().transpose(keep + traced + [n + i for i in keep] + [n + i for i in traced])
    dk = int(np.prod([rho.dims[i] for i in keep]))
    dt = int(np.prod([rho.dims[i] for i in traced])) if traced else 1
    m = np.einsum("ajbj->ab", t.reshape(dk, dt, dk, dt))
    return DensityOperator.from_matrix(m, tuple(rho.dims[i] for i in keep))


def entropy_from_eigenvalues(w: np.ndarray) -> float:
    w = np.asarray(w, dtype=float)
    w = w[w > 0]
    return float(-np.sum(w * np.log(w)))


def von_neumann_entropy(rho: DensityOperator) -> float:
    """Entropy ``-tr rho ln rho`` in nats."""
    return entropy_from_eigenvalues(rho.eigenvalues())


def eigendecompose(m: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    m = np.asarray(m, dtype=complex)
    dev = hermitian_deviation(m)
    if dev > HERMITIAN_TOL:
        raise StateError(f"eigendecompose needs a Hermitian matrix, max|M - M^dag| = {dev:.3e}")
    return np.linalg.eigh(0.5 * (m + m.conj().T))


def apply_unitary(rho: DensityOperator, u: np.ndarray) -> DensityOperator:
    u = check_unitary(u)
    if u.shape[0] != rho.dim:
        raise StateError(f"unitary of size {u.shape[0]} cannot act on dimension {rho.dim}")
    return DensityOperator.from_matrix(u @ rho.matrix @ u.conj().T, rho.dims)


def to_bits(nats: float) -> float:
    return nats / np.log(2)


PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=complex)
HADAMARD = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
