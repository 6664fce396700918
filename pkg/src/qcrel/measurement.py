"""Search over rank-1 projective measurements on one side of a bipartite state.

The optimizer minimizes the post-measurement conditional entropy of the
unmeasured side. A measurement is the column basis of a unitary ``V0 G(x)``
where ``V0`` is a per-restart base unitary and ``G`` is a product of complex
plane rotations. All restarts run in lockstep through one batched
Nelder-Mead so each objective call is a single vectorized evaluation.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .qstate import DensityOperator, StateError, check_unitary

MAX_SIDE_DIM = 8
OUTCOME_CUTOFF = 1e-12


class OptimizerError(RuntimeError):
    """No restart converged; ``diagnostics`` holds what was found."""

    def __init__(self, message: str, diagnostics: dict):
        super().__init__(message)
        self.diagnostics = diagnostics


@dataclass(frozen=True)
class OptimizerConfig:
    restarts: int = 24
    max_iter: int = 500
    tol: float = 1e-9
    seed: int = 0
    xtol: float = 1e-5
    step: float = 0.4

    def __post_init__(self):
        if self.restarts < 1 or self.max_iter < 1:
            raise ValueError("optimizer restarts and max_iter must be positive")
        if not self.tol > 0 or not self.xtol > 0:
            raise ValueError("optimizer tolerances must be positive")

    @classmethod
    def from_mapping(cls, data: dict) -> "OptimizerConfig":
        """Accept either flat keys or dotted ``optimizer.*`` keys."""
        src = dict(data.get("optimizer", {})) if isinstance(data.get("optimizer"), dict) else {}
        for key, value in data.items():
            if key.startswith("optimizer."):
                src[key.split(".", 1)[1]] = value
        kwargs = {}
        for key, name, cast in (
            ("restarts", "restarts", int),
            ("max_iter", "max_iter", int),
            ("tol", "tol", float),
            ("seed", "seed", int),
        ):
            if key in src:
                kwargs[name] = cast(src[key])
        return cls(**kwargs)


@dataclass(frozen=True, eq=False)
class ProjectiveMeasurement:
    """Orthonormal rank-1 projectors given by the columns of ``basis``."""

    side: int
    basis: np.ndarray

    def __post_init__(self):
        if self.side not in (0, 1):
            raise StateError(f"measurement side must be 0 (A) or 1 (B), got {self.side}")
        check_unitary(self.basis)
        b = np.array(self.basis, dtype=complex)
        b.setflags(write=False)
        object.__setattr__(self, "basis", b)

    @property
    def dim(self) -> int:
        return self.basis.shape[0]

    @property
    def projectors(self) -> list[np.ndarray]:
        return [np.outer(col, col.conj()) for col in self.basis.T]


@dataclass(frozen=True)
class MeasurementParameterization:
    """``d**2`` angles: pair rotations, pair phases, then column phases.

    Column phases leave every projector unchanged, so the optimizer only
    searches the first ``d (d - 1)`` entries.
    """

    dim: int
    angles: tuple[float, ...] = field(default=())

    def __post_init__(self):
        if not self.angles:
            object.__setattr__(self, "angles", (0.0,) * self.dim**2)
        if len(self.angles) != self.dim**2:
            raise ValueError(f"need {self.dim ** 2} angles for dimension {self.dim}")

    def unitary(self) -> np.ndarray:
        d = self.dim
        npair = d * (d - 1) // 2
        a = np.asarray(self.angles, dtype=float)
        u = rotations(np.eye(d, dtype=complex)[None], a[None, : 2 * npair])[0]
        return u * np.exp(1j * a[2 * npair:])[None, :]

    def measurement(self, side: int) -> ProjectiveMeasurement:
        return ProjectiveMeasurement(side, self.unitary())


def pairs(d: int) -> list[tuple[int, int]]:
    return [(i, j) for i in range(d) for j in range(i + 1, d)]


def rotations(base: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Right-multiply each ``base[r]`` by the plane rotations encoded in ``x[r]``.

    ``x[r]`` holds one angle per index pair followed by one phase per pair.
    """
    u = np.asarray(base, dtype=complex)
    nrow, d = x.shape[0], u.shape[-1]
    prs = pairs(d)
    npair = len(prs)
    c = np.cos(x[:, :npair])
    s = np.sin(x[:, :npair])
    e = np.exp(1j * x[:, npair: 2 * npair])
    for p, (i, j) in enumerate(prs):
        g = np.zeros((nrow, d, d), dtype=complex)
        g[:, np.arange(d), np.arange(d)] = 1.0
        g[:, i, i] = c[:, p]
        g[:, j, j] = c[:, p]
        g[:, j, i] = e[:, p] * s[:, p]
        g[:, i, j] = -np.conj(e[:, p]) * s[:, p]
        u = u @ g
    return u


def random_unitary(d: int, seed) -> np.ndarray:
    """Haar unitary from the QR factors of a seeded complex Gaussian matrix."""
    rng = np.random.default_rng(seed)
    z = (rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    diag = np.diag(r)
    return q * (diag / np.abs(diag))[None, :]


def _xlogx(x: np.ndarray) -> np.ndarray:
    return x * np.log(x, out=np.zeros_like(x), where=x > 0)


def _hermitian_eigvals(m: np.ndarray) -> np.ndarray:
    """Eigenvalues of a stack of Hermitian matrices; closed form for 2x2."""
    if m.shape[-1] == 2:
        a = m[..., 0, 0].real
        d = m[..., 1, 1].real
        b = m[..., 0, 1]
        h = 0.5 * (a + d)
        r = np.sqrt(0.25 * (a - d) ** 2 + b.real**2 + b.imag**2)
        return np.stack([h - r, h + r], axis=-1)
    return np.linalg.eigvalsh(m)


class ConditionalEntropyObjective:
    """Batched ``sum_i p_i S(rho_other | i)`` for measurement bases on ``side``."""

    def __init__(self, rho: DensityOperator, side: int):
        if len(rho.dims) != 2:
            raise StateError(f"bipartite state required, got dims {list(rho.dims)}")
        dm = rho.dims[side]
        do = rho.dims[1 - side]
        t = rho.matrix.reshape(rho.dims + rho.dims)
        if side == 0:
            t = t.transpose(1, 0, 3, 2)
        # t[o, m, o', m'] -> [o o', m m']
        self.blocks = t.transpose(0, 2, 1, 3).reshape(do * do, dm * dm)
        self.dm = dm
        self.do = do

    def unnormalized_conditionals(self, bases: np.ndarray) -> np.ndarray:
        """``M[r, i] = <u_i| rho |u_i>`` over the measured side, shape (R, dm, do, do)."""
        bases = np.asarray(bases)
        nrow = bases.shape[0]
        # w[r, i, (b, d)] = conj(u[b, i]) u[d, i]
        w = np.einsum("rbi,rdi->ribd", bases.conj(), bases).reshape(nrow, self.dm, -1)
        return (w @ self.blocks.T).reshape(nrow, self.dm, self.do, self.do)

    def __call__(self, bases: np.ndarray) -> np.ndarray:
        m = self.unnormalized_conditionals(bases)
        p = np.real(np.trace(m, axis1=-2, axis2=-1))
        lam = _hermitian_eigvals(m)
        per_outcome = -np.sum(_xlogx(lam), axis=-1) + _xlogx(p)
        per_outcome = np.where(p > OUTCOME_CUTOFF, per_outcome, 0.0)
        return np.sum(per_outcome, axis=-1)


def batched_nelder_mead(
    fun: Callable[[np.ndarray, np.ndarray], np.ndarray],
    x0: np.ndarray,
    step: float,
    max_iter: int,
    fatol: float,
    xatol: float,
):
    """Independent Nelder-Mead searches advanced in lockstep.

    ``fun(X, rows)`` evaluates points ``X`` (m, n) belonging to searches
    ``rows`` (m,). Returns per-search best points, values, iteration counts,
    convergence flags and start values.
    """
    nrun, n = x0.shape
    rows = np.arange(nrun)
    sim = np.repeat(x0[:, None, :], n + 1, axis=1)
    for j in range(n):
        sim[:, j + 1, j] += step
    fsim = fun(sim.reshape(-1, n), np.repeat(rows, n + 1)).reshape(nrun, n + 1)
    f_start = fsim[:, 0].copy()
    iters = np.zeros(nrun, dtype=int)
    converged = np.zeros(nrun, dtype=bool)
    active = np.ones(nrun, dtype=bool)
    rho_, chi, psi, sigma = 1.0, 2.0, 0.5, 0.5

    while True:
        order = np.argsort(fsim, axis=1, kind="stable")
        sim = np.take_along_axis(sim, order[:, :, None], axis=1)
        fsim = np.take_along_axis(fsim, order, axis=1)
        xspread = np.max(np.abs(sim[:, 1:] - sim[:, :1]), axis=(1, 2))
        fspread = np.max(np.abs(fsim[:, 1:] - fsim[:, :1]), axis=1)
        done_now = active & (xspread <= xatol) & (fspread <= fatol)
        converged |= done_now
        active &= ~done_now
        active &= iters < max_iter
        idx = np.flatnonzero(active)
        if idx.size == 0:
            break
        iters[idx] += 1

        s, f = sim[idx], fsim[idx]
        xbar = s[:, :-1].mean(axis=1)
        worst = s[:, -1]
        xr = (1 + rho_) * xbar - rho_ * worst
        fr = fun(xr, idx)

        expand = fr < f[:, 0]
        accept_r = ~expand & (fr < f[:, -2])
        contract = ~expand & ~accept_r
        outside = contract & (fr < f[:, -1])
        xe = (1 + rho_ * chi) * xbar - rho_ * chi * worst
        xc = (1 + psi * rho_) * xbar - psi * rho_ * worst
        xcc = (1 - psi) * xbar + psi * worst
        second = np.where(expand[:, None], xe, np.where(outside[:, None], xc, xcc))
        need = expand | contract
        f2 = np.full(idx.size, np.inf)
        if need.any():
            f2[need] = fun(second[need], idx[need])

        new_x = np.where(accept_r[:, None], xr, worst)
        new_f = np.where(accept_r, fr, f[:, -1])
        use_e = expand & (f2 < fr)
        use_r = expand & ~use_e
        new_x = np.where(use_e[:, None], second, np.where(use_r[:, None], xr, new_x))
        new_f = np.where(use_e, f2, np.where(use_r, fr, new_f))
        ok_out = outside & (f2 <= fr)
        ok_in = contract & ~outside & (f2 < f[:, -1])
        ok_c = ok_out | ok_in
        new_x = np.where(ok_c[:, None], second, new_x)
        new_f = np.where(ok_c, f2, new_f)
        shrink = contract & ~ok_c

        s[:, -1] = new_x
        f[:, -1] = new_f
        if shrink.any():
            k = np.flatnonzero(shrink)
            best = s[k, :1]
            s[k, 1:] = best + sigma * (s[k, 1:] - best)
            pts = s[k, 1:].reshape(-1, n)
            f[k, 1:] = fun(pts, np.repeat(idx[k], n)).reshape(k.size, n)
        sim[idx] = s
        fsim[idx] = f

    best = np.argmin(fsim, axis=1)
    return sim[rows, best], fsim[rows, best], iters, converged, f_start


@dataclass
class OptimizationResult:
    value: float
    measurement: ProjectiveMeasurement
    diagnostics: dict


def _start_bases(rho: DensityOperator, side: int, config: OptimizerConfig) -> np.ndarray:
    """Restart 0 starts from the measured marginal's eigenbasis, the rest from Haar draws."""
    d = rho.dims[side]
    t = rho.matrix.reshape(rho.dims + rho.dims)
    marginal = np.einsum("ajbj->ab", t) if side == 0 else np.einsum("jajb->ab", t)
    _, vecs = np.linalg.eigh(0.5 * (marginal + marginal.conj().T))
    bases = [vecs]
    for r in range(1, config.restarts):
        bases.append(random_unitary(d, (config.seed, r)))
    return np.stack(bases)


def optimize_conditional_entropy(
    rho: DensityOperator, side: int, config: OptimizerConfig | None = None
) -> OptimizationResult:
    """Estimate ``inf`` over projective measurements on ``side`` of the conditional entropy."""
    config = config or OptimizerConfig()
    if len(rho.dims) != 2:
        raise StateError(f"bipartite state required, got dims {list(rho.dims)}")
    d = rho.dims[side]
    if d > MAX_SIDE_DIM:
        raise StateError(f"measured side dimension {d} exceeds the supported maximum {MAX_SIDE_DIM}")
    objective = ConditionalEntropyObjective(rho, side)
    base = _start_bases(rho, side, config)
    npar = d * (d - 1)

    def fun(x, rows):
        return objective(rotations(base[rows], x))

    x0 = np.zeros((config.restarts, npar))
    xbest, fbest, iters, converged, f_start = batched_nelder_mead(
        fun, x0, config.step, config.max_iter, config.tol, config.xtol
    )
    # ties resolve to the lowest restart index
    winner = int(np.argmin(fbest))
    basis = rotations(base[winner: winner + 1], xbest[winner: winner + 1])[0]
    angles = np.concatenate([xbest[winner], np.zeros(d)])
    diagnostics = {
        "side": side,
        "restarts": config.restarts,
        "converged_restarts": int(converged.sum()),
        "iterations": [int(i) for i in iters],
        "local_optima": [float(v) for v in fbest],
        "start_values": [float(v) for v in f_start],
        "spread": float(np.max(fbest) - np.min(fbest)),
        "best_restart": winner,
        "best_angles": [float(a) for a in angles],
        "best_value": float(fbest[winner]),
    }
    if not converged.any():
        raise OptimizerError(
            f"no restart converged within {config.max_iter} iterations", diagnostics
        )
    # re-orthonormalize against accumulated rotation round-off
    q, r = np.linalg.qr(basis)
    basis = q * (np.diag(r) / np.abs(np.diag(r)))[None, :]
    return OptimizationResult(float(fbest[winner]), ProjectiveMeasurement(side, basis), diagnostics)


def bloch_grid(grid_steps: int | tuple[int, int] = (181, 360)) -> tuple[np.ndarray, np.ndarray]:
    if isinstance(grid_steps, int):
        n_theta = n_phi = grid_steps
    else:
        n_theta, n_phi = grid_steps
    theta = np.linspace(0.0, np.pi, n_theta)
    phi = np.arange(n_phi) * (2 * np.pi / n_phi)
    return theta, phi


def qubit_grid_oracle(
    rho: DensityOperator, side: int, grid_steps: int | tuple[int, int] = (181, 360)
) -> float:
    """Brute-force minimum of the conditional entropy over a Bloch-sphere grid.

    The projector pair for direction ``n`` is ``(1 +/- n.sigma) / 2``; ``theta``
    spans ``[0, pi]`` inclusive and ``phi`` spans ``[0, 2 pi)``.
    """
    if len(rho.dims) != 2:
        raise StateError(f"bipartite state required, got dims {list(rho.dims)}")
    if rho.dims[side] != 2:
        raise StateError(f"grid oracle needs a qubit on side {side}, got dimension {rho.dims[side]}")
    do = rho.dims[1 - side]
    t = rho.matrix.reshape(rho.dims + rho.dims)
    if side == 1:
        t = t.transpose(1, 0, 3, 2)
    # t[m, o, m', o']; Bloch components of the measured qubit
    paulis = np.array(
        [[[1, 0], [0, 1]], [[0, 1], [1, 0]], [[0, -1j], [1j, 0]], [[1, 0], [0, -1]]], dtype=complex
    )
    # T[mu] = tr_m[(sigma_mu x 1) rho] on the other side
    tmu = np.einsum("uba,aobp->uop", paulis, t)
    theta, phi = bloch_grid(grid_steps)
    th, ph = np.meshgrid(theta, phi, indexing="ij")
    n = np.stack([np.sin(th) * np.cos(ph), np.sin(th) * np.sin(ph), np.cos(th)], axis=-1).reshape(-1, 3)
    best = np.inf
    for chunk in np.array_split(n, max(1, n.shape[0] // 8192)):
        total = np.zeros(chunk.shape[0])
        for sign in (1.0, -1.0):
            m = 0.5 * (tmu[0][None] + sign * np.einsum("gk,kop->gop", chunk, tmu[1:]))
            m = 0.5 * (m + m.conj().transpose(0, 2, 1))
            p = np.real(np.trace(m, axis1=1, axis2=2))
            w = np.linalg.eigvalsh(m)
            w = np.where(w > 0, w, 0.0)
            safe_w = np.where(w > 0, w, 1.0)
            ent = -np.sum(w * np.log(safe_w), axis=1)
            safe_p = np.where(p > OUTCOME_CUTOFF, p, 1.0)
            contrib = np.where(p > OUTCOME_CUTOFF, ent + p * np.log(safe_p), 0.0)
            total += contrib
        best = min(best, float(total.min()))
    return best
