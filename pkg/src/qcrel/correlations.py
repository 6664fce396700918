"""Correlation measures for bipartite density operators.

Convention: "measured on side X" means the projective measurement acts on X.
The discord measured on X vanishes exactly when the state is classical on X,
``sum_k p_k |k><k|_X (x) rho_k``.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np

from .measurement import (
    OptimizerConfig,
    ProjectiveMeasurement,
    optimize_conditional_entropy,
)
from .qstate import (
    HERMITIAN_TOL,
    DensityOperator,
    StateError,
    hermitian_deviation,
    partial_trace,
    to_bits,
    von_neumann_entropy,
)

CLIP_TOL = 1e-6
SIDES = {"a": 0, "b": 1, "A": 0, "B": 1, 0: 0, 1: 1}


def side_index(side) -> int:
    try:
        return SIDES[side]
    except (KeyError, TypeError):
        raise StateError(f"side must be one of a/b/0/1, got {side!r}") from None


def _require_bipartite(rho: DensityOperator):
    if len(rho.dims) != 2:
        raise StateError(f"bipartite state required, got dims {list(rho.dims)}")


def marginals(rho: DensityOperator) -> tuple[DensityOperator, DensityOperator]:
    _require_bipartite(rho)
    return partial_trace(rho, [0]), partial_trace(rho, [1])


def mutual_information(rho: DensityOperator) -> float:
    ra, rb = marginals(rho)
    return von_neumann_entropy(ra) + von_neumann_entropy(rb) - von_neumann_entropy(rho)


def conditional_entropy_given_measurement(rho: DensityOperator, m: ProjectiveMeasurement) -> float:
    """Average entropy of the unmeasured side after measuring ``m``."""
    _require_bipartite(rho)
    if rho.dims[m.side] != m.dim:
        raise StateError(
            f"measurement of dimension {m.dim} does not fit side {m.side} of dims {list(rho.dims)}"
        )
    keep = 1 - m.side
    eye = np.eye(rho.dims[keep])
    total = 0.0
    for proj in m.projectors:
        op = np.kron(proj, eye) if m.side == 0 else np.kron(eye, proj)
        post = op @ rho.matrix @ op
        p = float(np.real(np.trace(post)))
        if p <= 1e-12:
            continue
        cond = partial_trace(DensityOperator.from_matrix(post / p, rho.dims), [keep])
        total += p * von_neumann_entropy(cond)
    return total


@dataclass
class OneWayResult:
    side: int
    mutual_info: float
    classical_corr: float
    discord: float
    raw_discord: float
    inf_conditional_entropy: float
    measurement: ProjectiveMeasurement
    diagnostics: dict


def one_way(rho: DensityOperator, measured_side, config: OptimizerConfig | None = None) -> OneWayResult:
    """Mutual information, classical correlations and discord for one measured side."""
    _require_bipartite(rho)
    side = side_index(measured_side)
    mi = mutual_information(rho)
    s_other = von_neumann_entropy(partial_trace(rho, [1 - side]))
    opt = optimize_conditional_entropy(rho, side, config)
    j = s_other - opt.value
    raw = mi - j
    discord = 0.0 if -CLIP_TOL <= raw < 0 else raw
    diag = dict(opt.diagnostics)
    diag["raw_discord"] = raw
    return OneWayResult(side, mi, j, discord, raw, opt.value, opt.measurement, diag)


def classical_correlations(rho: DensityOperator, measured_side, config: OptimizerConfig | None = None) -> float:
    return one_way(rho, measured_side, config).classical_corr


def one_way_discord(rho: DensityOperator, measured_side, config: OptimizerConfig | None = None) -> float:
    return one_way(rho, measured_side, config).discord


def two_way_discord(rho: DensityOperator, config: OptimizerConfig | None = None) -> float:
    return max(one_way_discord(rho, 0, config), one_way_discord(rho, 1, config))


def covariance_function(rho: DensityOperator, obs_a: np.ndarray, obs_b: np.ndarray) -> float:
    """``<A (x) B> - <A><B>``."""
    _require_bipartite(rho)
    obs_a = np.asarray(obs_a, dtype=complex)
    obs_b = np.asarray(obs_b, dtype=complex)
    for name, obs, d in (("obs_a", obs_a, rho.dims[0]), ("obs_b", obs_b, rho.dims[1])):
        if obs.shape != (d, d):
            raise StateError(f"{name} has shape {obs.shape}, side needs {(d, d)}")
        if hermitian_deviation(obs) > HERMITIAN_TOL:
            raise StateError(f"{name} is not Hermitian")
    ra, rb = marginals(rho)
    joint = np.trace(rho.matrix @ np.kron(obs_a, obs_b))
    ea = np.trace(ra.matrix @ obs_a)
    eb = np.trace(rb.matrix @ obs_b)
    for value in (joint, ea, eb):
        if abs(value.imag) > 1e-9:
            raise StateError(f"expectation value has imaginary part {value.imag:.3e}")
    return float(joint.real - ea.real * eb.real)


def partial_transpose(rho: DensityOperator, side: int = 1) -> np.ndarray:
    _require_bipartite(rho)
    t = rho.tensor()
    t = t.transpose(0, 3, 2, 1) if side == 1 else t.transpose(2, 1, 0, 3)
    return t.reshape(rho.dim, rho.dim)


def negativity(rho: DensityOperator) -> float:
    """``(||rho^{T_B}||_1 - 1) / 2``, the summed magnitude of negative PT eigenvalues."""
    w = np.linalg.eigvalsh(partial_transpose(rho))
    # round-off can push the sum a hair below 1
    return max(0.0, float((np.sum(np.abs(w)) - 1) / 2))


@dataclass
class CorrelationReport:
    mutual_info: float
    classical_corr_measured_on_a: float
    classical_corr_measured_on_b: float
    discord_measured_on_a: float
    discord_measured_on_b: float
    two_way_discord: float
    negativity: float
    optimizer_diag: dict = field(default_factory=dict)

    NAT_FIELDS = (
        "mutual_info",
        "classical_corr_measured_on_a",
        "classical_corr_measured_on_b",
        "discord_measured_on_a",
        "discord_measured_on_b",
        "two_way_discord",
    )

    def to_dict(self) -> dict:
        out = asdict(self)
        out["units"] = "nats"
        out["bits"] = {k: to_bits(getattr(self, k)) for k in self.NAT_FIELDS}
        return out


def correlation_report(rho: DensityOperator, config: OptimizerConfig | None = None) -> CorrelationReport:
    ra = one_way(rho, 0, config)
    rb = one_way(rho, 1, config)
    diag = {}
    for tag, res in (("a", ra), ("b", rb)):
        d = res.diagnostics
        diag[tag] = {
            "restarts": d["restarts"],
            "converged_restarts": d["converged_restarts"],
            "best_restart": d["best_restart"],
            "best_angles": d["best_angles"],
            "best_basis": [[[float(z.real), float(z.imag)] for z in row] for row in res.measurement.basis],
            "spread": d["spread"],
            "raw_discord": res.raw_discord,
            "inf_conditional_entropy": res.inf_conditional_entropy,
        }
    return CorrelationReport(
        mutual_info=ra.mutual_info,
        classical_corr_measured_on_a=ra.classical_corr,
        classical_corr_measured_on_b=rb.classical_corr,
        discord_measured_on_a=ra.discord,
        discord_measured_on_b=rb.discord,
        two_way_discord=max(ra.discord, rb.discord),
        negativity=negativity(rho),
        optimizer_diag=diag,
    )
