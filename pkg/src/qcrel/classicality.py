"""Zero-discord state families, their detection, and the residual conditions
that decide whether such a state stays classical in another structure.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .correlations import side_index
from .qstate import DensityOperator, StateError
from .structures import CoefficientTensor, StructureMap, extract_coefficients, identity_map, restructure

PROB_TOL = 1e-12
BASIS_TOL = 1e-10
CLASSIFY_TOL = 1e-8


def _check_probs(p: np.ndarray, name: str = "probs"):
    if np.any(p < 0):
        raise StateError(f"{name}: negative entries")
    if abs(p.sum() - 1) > PROB_TOL:
        raise StateError(f"{name}: sum is {p.sum():.15g}, not 1")


def _check_basis(b: np.ndarray, name: str):
    if b.ndim != 2 or b.shape[0] != b.shape[1]:
        raise StateError(f"{name}: basis must be a square matrix of column vectors")
    dev = float(np.max(np.abs(b.conj().T @ b - np.eye(b.shape[0]))))
    if dev > BASIS_TOL:
        raise StateError(f"{name}: basis not orthonormal (deviation {dev:.3e})")


@dataclass(frozen=True, eq=False)
class CQSpec:
    """``sum_k p_k |k><k| (x) rho_k`` with the projector factor on ``classical_side``.

    ``ensembles`` optionally gives each ``rho_k`` as weights ``omega[k]`` and
    kets ``chi[k]`` (columns); otherwise the spectral decomposition is used.
    """

    probs: np.ndarray
    conditional_states: tuple[DensityOperator, ...]
    classical_basis: np.ndarray | None = None
    classical_side: int = 0
    ensembles: tuple[tuple[np.ndarray, np.ndarray], ...] | None = None

    def __post_init__(self):
        p = np.asarray(self.probs, dtype=float).reshape(-1)
        _check_probs(p)
        if self.classical_side not in (0, 1):
            raise StateError("classical_side must be 0 or 1")
        states = tuple(self.conditional_states)
        if len(states) != p.size:
            raise StateError(f"{p.size} probabilities but {len(states)} conditional states")
        dq = states[0].dim
        if any(s.dim != dq for s in states):
            raise StateError("conditional states must share one dimension")
        basis = np.eye(p.size, dtype=complex) if self.classical_basis is None else np.asarray(
            self.classical_basis, dtype=complex)
        _check_basis(basis, "classical_basis")
        if basis.shape[0] != p.size:
            raise StateError(f"classical basis of dimension {basis.shape[0]} for {p.size} outcomes")
        ens = None
        if self.ensembles is not None:
            ens = []
            for k, (w, chi) in enumerate(self.ensembles):
                w = np.asarray(w, dtype=float).reshape(-1)
                chi = np.asarray(chi, dtype=complex)
                _check_probs(w, f"ensemble {k} weights")
                if chi.shape != (dq, w.size):
                    raise StateError(f"ensemble {k}: kets must be a ({dq}, {w.size}) column matrix")
                chi = chi / np.linalg.norm(chi, axis=0, keepdims=True)
                rebuilt = (chi * w[None, :]) @ chi.conj().T
                if np.max(np.abs(rebuilt - states[k].matrix)) > 1e-9:
                    raise StateError(f"ensemble {k} does not reproduce its conditional state")
                ens.append((w, chi))
            ens = tuple(ens)
        object.__setattr__(self, "probs", p)
        object.__setattr__(self, "conditional_states", states)
        object.__setattr__(self, "classical_basis", basis)
        object.__setattr__(self, "ensembles", ens)

    @property
    def dims(self) -> tuple[int, int]:
        dc, dq = self.probs.size, self.conditional_states[0].dim
        return (dc, dq) if self.classical_side == 0 else (dq, dc)

    def ensemble(self) -> tuple[np.ndarray, np.ndarray]:
        """Weights ``omega[k, l]`` and kets ``chi[k, :, l]``, zero-padded to equal length."""
        if self.ensembles is not None:
            parts = self.ensembles
        else:
            parts = []
            for s in self.conditional_states:
                w, v = np.linalg.eigh(s.matrix)
                parts.append((np.clip(w, 0, None), v))
        size = max(w.size for w, _ in parts)
        dq = self.conditional_states[0].dim
        omega = np.zeros((len(parts), size))
        chi = np.zeros((len(parts), dq, size), dtype=complex)
        for k, (w, v) in enumerate(parts):
            omega[k, : w.size] = w
            chi[k, :, : w.size] = v
        return omega, chi


@dataclass(frozen=True, eq=False)
class CCSpec:
    """``sum_kl p_kl |k><k| (x) |l><l|``."""

    probs: np.ndarray
    basis_a: np.ndarray | None = None
    basis_b: np.ndarray | None = None

    def __post_init__(self):
        p = np.asarray(self.probs, dtype=float)
        if p.ndim != 2:
            raise StateError("CC probabilities must form a matrix p[k, l]")
        _check_probs(p)
        bases = []
        for name, b, d in (("basis_a", self.basis_a, p.shape[0]), ("basis_b", self.basis_b, p.shape[1])):
            b = np.eye(d, dtype=complex) if b is None else np.asarray(b, dtype=complex)
            _check_basis(b, name)
            if b.shape[0] != d:
                raise StateError(f"{name} has dimension {b.shape[0]}, probabilities need {d}")
            bases.append(b)
        object.__setattr__(self, "probs", p)
        object.__setattr__(self, "basis_a", bases[0])
        object.__setattr__(self, "basis_b", bases[1])

    @property
    def dims(self) -> tuple[int, int]:
        return self.probs.shape


@dataclass
class ResidualReport:
    max_residual: float
    argmax: tuple[int, int, int, int]
    residuals: np.ndarray | None = field(default=None, repr=False)

    def to_dict(self, full: bool = False) -> dict:
        out = {"max_residual": self.max_residual, "argmax": list(self.argmax)}
        if full and self.residuals is not None:
            out["residuals"] = np.abs(self.residuals).tolist()
        return out


@dataclass
class Verdict:
    accepted: bool
    max_commutator: float
    basis: np.ndarray | None = None


@dataclass
class CCVerdict:
    accepted: bool
    side_a: Verdict
    side_b: Verdict
    probs: np.ndarray | None = None


def build_cq_state(spec: CQSpec) -> DensityOperator:
    dims = spec.dims
    m = np.zeros((dims[0] * dims[1],) * 2, dtype=complex)
    for k, (pk, cond) in enumerate(zip(spec.probs, spec.conditional_states)):
        v = spec.classical_basis[:, k]
        proj = np.outer(v, v.conj())
        m += pk * (np.kron(proj, cond.matrix) if spec.classical_side == 0 else np.kron(cond.matrix, proj))
    return DensityOperator.from_matrix(m, dims)


def build_cc_state(spec: CCSpec) -> DensityOperator:
    da, db = spec.dims
    # columns |k>|l> in row-major (k, l) order
    vecs = np.einsum("ik,jl->ijkl", spec.basis_a, spec.basis_b).reshape(da * db, da * db)
    m = (vecs * spec.probs.reshape(-1)[None, :]) @ vecs.conj().T
    return DensityOperator.from_matrix(m, (da, db))


def hermitian_basis(d: int) -> list[np.ndarray]:
    """Identity plus the generalized Gell-Mann matrices (``tr F_i F_j = 2 delta_ij``)."""
    out = [np.eye(d, dtype=complex)]
    for j in range(d):
        for k in range(j + 1, d):
            s = np.zeros((d, d), dtype=complex)
            s[j, k] = s[k, j] = 1
            a = np.zeros((d, d), dtype=complex)
            a[j, k], a[k, j] = -1j, 1j
            out += [s, a]
    for l in range(1, d):
        diag = np.zeros(d)
        diag[:l] = 1
        diag[l] = -l
        out.append(np.diag(diag * np.sqrt(2 / (l * (l + 1)))).astype(complex))
    return out


def coefficient_operators(rho: DensityOperator, side: int) -> list[np.ndarray]:
    """``B_j = tr_other[(F_j on other) rho]`` acting on ``side``."""
    if len(rho.dims) != 2:
        raise StateError(f"bipartite state required, got dims {list(rho.dims)}")
    t = rho.tensor()
    other = rho.dims[1 - side]
    out = []
    for f in hermitian_basis(other):
        if side == 0:
            b = np.einsum("aibj,ji->ab", t, f)
        else:
            b = np.einsum("iajb,ji->ab", t, f)
        out.append(b)
    return out


def classify_cq(rho: DensityOperator, side, tol: float = CLASSIFY_TOL) -> Verdict:
    """Accept iff ``rho`` is classical on ``side`` (all coefficient operators commute).

    On acceptance ``basis`` holds a common eigenbasis, i.e. the classical kets.
    """
    side = side_index(side)
    ops = coefficient_operators(rho, side)
    worst = 0.0
    for i in range(len(ops)):
        for j in range(i + 1, len(ops)):
            c = ops[i] @ ops[j] - ops[j] @ ops[i]
            worst = max(worst, float(np.max(np.abs(c))))
    if worst > tol:
        return Verdict(False, worst)
    # a generic real combination of commuting Hermitians shares their eigenbasis
    weights = np.random.default_rng(12345).uniform(0.5, 1.5, len(ops))
    combo = sum(w * 0.5 * (o + o.conj().T) for w, o in zip(weights, ops))
    _, basis = np.linalg.eigh(combo)
    return Verdict(True, worst, basis)


def classify_cc(rho: DensityOperator, tol: float = CLASSIFY_TOL) -> CCVerdict:
    va = classify_cq(rho, 0, tol)
    vb = classify_cq(rho, 1, tol)
    if not (va.accepted and vb.accepted):
        return CCVerdict(False, va, vb)
    vecs = np.einsum("ik,jl->ijkl", va.basis, vb.basis).reshape(rho.dim, rho.dim)
    probs = np.real(np.einsum("ik,ij,jk->k", vecs.conj(), rho.matrix, vecs))
    return CCVerdict(True, va, vb, probs.reshape(rho.dims))


def _max_residual(t: np.ndarray, mask: np.ndarray) -> ResidualReport:
    mag = np.where(mask, np.abs(t), -1.0)
    if not mask.any():
        return ResidualReport(0.0, (0, 0, 0, 0), t)
    # argmax on the flat array returns the lexicographically first maximum
    flat = int(np.argmax(mag))
    idx = tuple(int(i) for i in np.unravel_index(flat, t.shape))
    return ResidualReport(float(mag.reshape(-1)[flat]), idx, t)


def _weighted_gram(weights: np.ndarray, c: np.ndarray) -> np.ndarray:
    """``T[a, b, a', b'] = sum_kl w_kl C[k,l,a,b] conj(C[k,l,a',b'])``."""
    return np.einsum("kl,klab,klcd->abcd", weights, c, c.conj())


def cq_residual(p: Sequence[float], omega: np.ndarray, c: CoefficientTensor, side: int = 0) -> ResidualReport:
    """Largest coherence between distinct classical-side indices after restructuring.

    ``side`` picks which target factor must be block diagonal (0 for A).
    Argmax indices are ``(a, b, a', b')``.
    """
    p = np.asarray(p, dtype=float).reshape(-1)
    omega = np.asarray(omega, dtype=float)
    entries = c.entries
    if omega.shape != entries.shape[:2] or p.size != omega.shape[0]:
        raise StateError(
            f"shape mismatch: p {p.shape}, omega {omega.shape}, coefficients {entries.shape}"
        )
    t = _weighted_gram(p[:, None] * omega, entries)
    da, db = entries.shape[2:]
    if side == 0:
        mask = (np.arange(da)[:, None, None, None] != np.arange(da)[None, None, :, None])
    else:
        mask = (np.arange(db)[None, :, None, None] != np.arange(db)[None, None, None, :])
    return _max_residual(t, np.broadcast_to(mask, t.shape))


def cc_residual(p_kl: np.ndarray, c: CoefficientTensor) -> ResidualReport:
    """Largest coherence with both target indices distinct, ``a != a'`` and ``b != b'``."""
    p = np.asarray(p_kl, dtype=float)
    entries = c.entries
    if p.shape != entries.shape[:2]:
        raise StateError(f"shape mismatch: p {p.shape}, coefficients {entries.shape}")
    t = _weighted_gram(p, entries)
    da, db = entries.shape[2:]
    ma = np.arange(da)[:, None, None, None] != np.arange(da)[None, None, :, None]
    mb = np.arange(db)[None, :, None, None] != np.arange(db)[None, None, None, :]
    return _max_residual(t, np.broadcast_to(ma & mb, t.shape))


def spec_coefficients(spec: CQSpec | CCSpec, smap: StructureMap) -> tuple[np.ndarray, CoefficientTensor]:
    """Weights and coefficient tensor of the spec's own product kets in the target structure.

    For a CC spec the kets are ``|k>|l>`` in the spec bases; for a CQ spec
    they are ``|k>|chi^k_l>`` (order swapped when the classical side is B).
    """
    u = smap.unitary
    da, db = smap.target_dims
    if isinstance(spec, CCSpec):
        d1, d2 = spec.dims
        vecs = np.einsum("ik,jl->ijkl", spec.basis_a, spec.basis_b).reshape(d1 * d2, d1 * d2)
        c = (u @ vecs).T.reshape(d1, d2, da, db)
        return spec.probs, CoefficientTensor(c)
    omega, chi = spec.ensemble()
    K, L = omega.shape
    cols = []
    for k in range(K):
        ck = spec.classical_basis[:, k]
        for l in range(L):
            v = np.kron(ck, chi[k, :, l]) if spec.classical_side == 0 else np.kron(chi[k, :, l], ck)
            cols.append(v)
    vecs = np.stack(cols, axis=1)
    c = (u @ vecs).T.reshape(K, L, da, db)
    weights = spec.probs[:, None] * omega
    return weights, CoefficientTensor(c, check=False)


def residual_for(spec: CQSpec | CCSpec, smap: StructureMap) -> ResidualReport:
    weights, c = spec_coefficients(spec, smap)
    if isinstance(spec, CCSpec):
        return cc_residual(weights, c)
    omega, _ = spec.ensemble()
    return cq_residual(spec.probs, omega, c, side=spec.classical_side)


def expand_restructured(spec: CQSpec | CCSpec, smap: StructureMap) -> tuple[np.ndarray, np.ndarray]:
    """Split the restructured state into its diagonal-family and remaining terms.

    CQ: the first part keeps ``a = a'`` (``b = b'`` when classical on B).
    CC: the first part keeps ``a = a'`` and ``b = b'``. The second part holds
    every other coefficient, so the two always sum to the restructured state.
    """
    if int(np.prod(spec.dims)) != smap.dim:
        raise StateError(f"spec dims {list(spec.dims)} do not match map dimension {smap.dim}")
    weights, c = spec_coefficients(spec, smap)
    t = _weighted_gram(weights, c.entries)
    da, db = smap.target_dims
    same_a = (np.arange(da)[:, None, None, None] == np.arange(da)[None, None, :, None])
    same_b = (np.arange(db)[None, :, None, None] == np.arange(db)[None, None, None, :])
    if isinstance(spec, CCSpec):
        keep = same_a & same_b
    else:
        keep = same_a if spec.classical_side == 0 else same_b
    keep = np.broadcast_to(keep, t.shape)
    d = da * db
    diag = np.where(keep, t, 0).reshape(d, d)
    off = np.where(keep, 0, t).reshape(d, d)
    return diag, off


def restructured_state(spec: CQSpec | CCSpec, smap: StructureMap) -> DensityOperator:
    state = build_cc_state(spec) if isinstance(spec, CCSpec) else build_cq_state(spec)
    return restructure(state, smap)


def perturb_weights(p: np.ndarray, epsilon: float, seed) -> np.ndarray:
    """Mix ``p`` with a seeded uniform draw from the simplex.

    Result is ``(1 - eps) p + eps q``, so its total-variation distance from
    ``p`` is at most ``eps`` and no entry goes negative.
    """
    if not 0 <= epsilon < 1:
        raise ValueError("epsilon must lie in [0, 1)")
    p = np.asarray(p, dtype=float)
    q = np.random.default_rng(seed).dirichlet(np.ones(p.size)).reshape(p.shape)
    out = (1 - epsilon) * p + epsilon * q
    return out / out.sum()


def build_state(spec: CQSpec | CCSpec) -> DensityOperator:
    return build_cc_state(spec) if isinstance(spec, CCSpec) else build_cq_state(spec)


def identity_coefficients(d1: int, d2: int) -> CoefficientTensor:
    return extract_coefficients(identity_map((d1, d2)))
