"""Tensor-product structures and the unitaries relating them.

A structure is a pair of side dimensions ``(d_A, d_B)`` plus a global unitary
on the fixed reference space. The reference product basis vector ``|k l>``
expands in the new structure as ``sum C[k, l, a, b] |a>_A |b>_B`` with
``C[k, l, a, b] = <a b| U |k l>``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.linalg import expm

from .qstate import (
    DensityOperator,
    PureState,
    StateError,
    _frozen,
    check_unitary,
)

RANK1_TOL = 1e-9
NORMALIZATION_TOL = 1e-9


@dataclass(frozen=True)
class Bipartition:
    side_a: tuple[int, ...]
    side_b: tuple[int, ...]
    dims: tuple[int, ...]

    def __post_init__(self):
        a = tuple(int(i) for i in self.side_a)
        b = tuple(int(i) for i in self.side_b)
        dims = tuple(int(d) for d in self.dims)
        if not a or not b:
            raise StateError("bipartition sides must be nonempty")
        if set(a) & set(b):
            raise StateError(f"bipartition sides overlap: {a} and {b}")
        if sorted(a + b) != list(range(len(dims))):
            raise StateError(f"bipartition {a}|{b} does not cover factors 0..{len(dims) - 1}")
        object.__setattr__(self, "side_a", a)
        object.__setattr__(self, "side_b", b)
        object.__setattr__(self, "dims", dims)

    @property
    def target_dims(self) -> tuple[int, int]:
        return (
            int(np.prod([self.dims[i] for i in self.side_a])),
            int(np.prod([self.dims[i] for i in self.side_b])),
        )

    @property
    def order(self) -> tuple[int, ...]:
        return self.side_a + self.side_b

    def inverse_order(self) -> tuple[int, ...]:
        return tuple(int(i) for i in np.argsort(self.order))

    def label(self) -> str:
        return ",".join(map(str, self.side_a)) + "|" + ",".join(map(str, self.side_b))


@dataclass(frozen=True, eq=False)
class StructureMap:
    """Target structure ``(d_A, d_B)`` reached by ``unitary`` from ``source``."""

    source: Bipartition
    target_dims: tuple[int, int]
    unitary: np.ndarray
    name: str = field(default="custom")

    def __post_init__(self):
        u = check_unitary(self.unitary)
        td = tuple(int(d) for d in self.target_dims)
        if len(td) != 2 or td[0] * td[1] != u.shape[0]:
            raise StateError(f"target dims {list(td)} do not multiply to unitary size {u.shape[0]}")
        if int(np.prod(self.source.dims)) != u.shape[0]:
            raise StateError(
                f"source dims {list(self.source.dims)} do not match unitary size {u.shape[0]}"
            )
        object.__setattr__(self, "target_dims", td)
        object.__setattr__(self, "unitary", _frozen(u))

    @property
    def dim(self) -> int:
        return self.unitary.shape[0]

    def compose(self, after: "StructureMap") -> "StructureMap":
        """Apply ``self`` first, then ``after``."""
        if after.dim != self.dim:
            raise StateError("cannot compose maps of different total dimension")
        return StructureMap(
            self.source, after.target_dims, after.unitary @ self.unitary, f"{self.name}>{after.name}"
        )


@dataclass(frozen=True, eq=False)
class CoefficientTensor:
    """Array ``C[k, l, a, b]`` of expansion coefficients.

    With ``check`` the rows ``C[k, l]`` must be orthonormal, i.e. the old
    product basis maps to an orthonormal set.
    """

    entries: np.ndarray
    check: bool = True

    def __post_init__(self):
        c = np.asarray(self.entries, dtype=complex)
        if c.ndim != 4:
            raise StateError(f"coefficient tensor must have 4 indices, got shape {c.shape}")
        if self.check:
            dev = self.normalization_deviation_of(c)
            if dev > NORMALIZATION_TOL:
                raise StateError(f"coefficient normalization violated by {dev:.3e}")
        object.__setattr__(self, "entries", _frozen(c))

    @staticmethod
    def normalization_deviation_of(c: np.ndarray) -> float:
        rows = c.reshape(c.shape[0] * c.shape[1], -1)
        gram = rows @ rows.conj().T
        return float(np.max(np.abs(gram - np.eye(gram.shape[0]))))

    def normalization_deviation(self) -> float:
        return self.normalization_deviation_of(self.entries)

    @property
    def shape(self) -> tuple[int, ...]:
        return self.entries.shape

    def as_matrix(self) -> np.ndarray:
        """``[ab, kl]`` matrix; equals the map's unitary."""
        d1, d2, da, db = self.entries.shape
        return self.entries.reshape(d1 * d2, da * db).T


def bipartite(dims: Sequence[int]) -> Bipartition:
    dims = tuple(dims)
    if len(dims) != 2:
        raise StateError(f"expected two factors, got dims {list(dims)}")
    return Bipartition((0,), (1,), dims)


def regroup(rho: DensityOperator, bipartition: Bipartition) -> DensityOperator:
    """Reorder and group factors into the two sides of ``bipartition``."""
    if tuple(rho.dims) != bipartition.dims:
        raise StateError(f"bipartition dims {list(bipartition.dims)} do not match state dims {list(rho.dims)}")
    n = len(rho.dims)
    order = list(bipartition.order)
    t = rho.tensor().transpose(order + [n + i for i in order])
    d = rho.dim
    return DensityOperator(bipartition.target_dims, t.reshape(d, d))


def ungroup(rho: DensityOperator, bipartition: Bipartition) -> DensityOperator:
    """Inverse of :func:`regroup`."""
    n = len(bipartition.dims)
    permuted = tuple(bipartition.dims[i] for i in bipartition.order)
    t = rho.matrix.reshape(permuted + permuted)
    inv = list(bipartition.inverse_order())
    t = t.transpose(inv + [n + i for i in inv])
    return DensityOperator(bipartition.dims, t.reshape(rho.dim, rho.dim))


def permutation_unitary(bipartition: Bipartition) -> np.ndarray:
    dims = bipartition.dims
    d = int(np.prod(dims))
    idx = np.arange(d).reshape(dims).transpose(bipartition.order).reshape(-1)
    # new flat position j holds old flat index idx[j]
    u = np.zeros((d, d))
    u[np.arange(d), idx] = 1.0
    return u


def regroup_map(bipartition: Bipartition) -> StructureMap:
    return StructureMap(
        bipartition,
        bipartition.target_dims,
        permutation_unitary(bipartition),
        f"regroup:{bipartition.label()}",
    )


def identity_map(dims: Sequence[int]) -> StructureMap:
    b = bipartite(dims)
    return StructureMap(b, b.target_dims, np.eye(b.target_dims[0] * b.target_dims[1]), "identity")


def swap_map(dims: Sequence[int]) -> StructureMap:
    b = bipartite(dims)
    u = permutation_unitary(Bipartition((1,), (0,), b.dims))
    return StructureMap(b, (b.dims[1], b.dims[0]), u, "swap")


def bell_unitary() -> np.ndarray:
    """CNOT (H x 1): sends |00>,|01>,|10>,|11> to Phi+, Psi+, Phi-, Psi-."""
    s = 1 / np.sqrt(2)
    return np.array(
        [
            [s, 0, s, 0],
            [0, s, 0, s],
            [0, s, 0, -s],
            [s, 0, -s, 0],
        ],
        dtype=complex,
    )


def bell_map() -> StructureMap:
    return StructureMap(bipartite((2, 2)), (2, 2), bell_unitary(), "bell")


def unitary_map(dims: Sequence[int], u: np.ndarray, target_dims: Sequence[int] | None = None,
                name: str = "custom") -> StructureMap:
    b = bipartite(dims)
    return StructureMap(b, tuple(target_dims or b.target_dims), u, name)


def restructure(rho: DensityOperator, smap: StructureMap) -> DensityOperator:
    """State expressed in the target structure: ``U rho U^dag`` on ``(d_A, d_B)``."""
    if rho.dim != smap.dim:
        raise StateError(f"map of dimension {smap.dim} cannot act on state of dimension {rho.dim}")
    u = smap.unitary
    return DensityOperator.from_matrix(u @ rho.matrix @ u.conj().T, smap.target_dims)


def extract_coefficients(smap: StructureMap) -> CoefficientTensor:
    d1, d2 = smap.source.target_dims
    da, db = smap.target_dims
    # C[k, l, a, b] = U[ab, kl]
    c = smap.unitary.T.reshape(d1, d2, da, db)
    return CoefficientTensor(c)


def product_coefficient_test(c: CoefficientTensor, k: int, l: int) -> tuple[bool, float]:
    """Whether ``|k>|l>`` stays a product vector in the target structure.

    Returns the verdict and the second singular value of the slice.
    """
    s = np.linalg.svd(c.entries[k, l], compute_uv=False)
    residual = float(s[1]) if s.size > 1 else 0.0
    return residual <= RANK1_TOL, residual


def annihilation(cutoff: int) -> np.ndarray:
    return np.diag(np.sqrt(np.arange(1, cutoff)), 1).astype(complex)


def total_number(cutoff: int) -> np.ndarray:
    n = np.diag(np.arange(cutoff)).astype(complex)
    eye = np.eye(cutoff)
    return np.kron(n, eye) + np.kron(eye, n)


def beamsplitter_unitary(cutoff: int, theta: float) -> np.ndarray:
    """``exp(theta (a1^dag a2 - a1 a2^dag))`` on two modes truncated at ``cutoff``.

    The generator conserves total photon number, so sectors below ``cutoff``
    transform exactly. Convention: ``|1,0> -> cos(theta)|1,0> - sin(theta)|0,1>``.
    """
    if cutoff < 2:
        raise StateError("cutoff must be >= 2")
    a = annihilation(cutoff)
    eye = np.eye(cutoff)
    a1, a2 = np.kron(a, eye), np.kron(eye, a)
    gen = theta * (a1.conj().T @ a2 - a1 @ a2.conj().T)
    u = expm(gen)
    # the generator is real anti-symmetric, so U is real orthogonal
    return u


def beamsplitter_map(cutoff: int, theta: float) -> StructureMap:
    return StructureMap(
        bipartite((cutoff, cutoff)),
        (cutoff, cutoff),
        beamsplitter_unitary(cutoff, theta),
        f"beamsplitter:{cutoff}:{theta:g}",
    )


def leakage_norm(state: PureState | DensityOperator, cutoff: int, margin: int) -> float:
    """Weight on two-mode Fock states with ``n1 + n2 > cutoff - margin``."""
    if tuple(state.dims) != (cutoff, cutoff):
        raise StateError(f"expected two modes of dimension {cutoff}, got dims {list(state.dims)}")
    if isinstance(state, PureState):
        weights = np.abs(state.amplitudes) ** 2
    else:
        weights = np.real(np.diag(state.matrix))
    n = np.add.outer(np.arange(cutoff), np.arange(cutoff)).reshape(-1)
    return float(np.sum(weights[n > cutoff - margin]))


def fock_state(n1: int, n2: int, cutoff: int) -> PureState:
    if max(n1, n2) >= cutoff or min(n1, n2) < 0:
        raise StateError(f"Fock state |{n1},{n2}> not representable at cutoff {cutoff}")
    v = np.zeros(cutoff * cutoff, dtype=complex)
    v[n1 * cutoff + n2] = 1.0
    return PureState((cutoff, cutoff), v)


def parse_map_id(map_id: str, dims: Sequence[int]) -> StructureMap:
    """Resolve a built-in map id against the state's factor dims.

    Ids: ``identity``, ``swap``, ``bell``, ``beamsplitter:<cutoff>:<theta>``,
    ``regroup:<i,j|k>``. ``theta`` accepts ``pi/4``-style expressions.
    """
    dims = tuple(int(d) for d in dims)
    head, _, rest = map_id.partition(":")
    if head == "identity":
        if len(dims) != 2:
            return regroup_map(Bipartition((0,), tuple(range(1, len(dims))), dims))
        return identity_map(dims)
    if head == "swap":
        return swap_map(dims)
    if head == "bell":
        if dims != (2, 2):
            raise StateError(f"bell map needs dims [2, 2], got {list(dims)}")
        return bell_map()
    if head == "beamsplitter":
        cutoff_s, _, theta_s = rest.partition(":")
        cutoff = int(cutoff_s)
        if dims != (cutoff, cutoff):
            raise StateError(f"beamsplitter:{cutoff} needs dims [{cutoff}, {cutoff}], got {list(dims)}")
        return beamsplitter_map(cutoff, parse_angle(theta_s))
    if head == "regroup":
        left, sep, right = rest.partition("|")
        if not sep:
            raise StateError(f"regroup id needs 'a|b' sides: {map_id!r}")
        side_a = tuple(int(i) for i in left.split(",") if i)
        side_b = tuple(int(i) for i in right.split(",") if i)
        return regroup_map(Bipartition(side_a, side_b, dims))
    raise StateError(f"unknown structure map id {map_id!r}")


def parse_angle(text: str) -> float:
    t = text.strip().replace(" ", "")
    if "pi" not in t:
        return float(t)
    num, _, den = t.partition("/")
    num = num.replace("*", "").replace("pi", "")
    coef = 1.0 if num in ("", "+") else -1.0 if num == "-" else float(num)
    return coef * np.pi / (float(den) if den else 1.0)
