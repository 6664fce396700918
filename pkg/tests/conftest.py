import numpy as np
import pytest

from qcrel.classicality import CCSpec, CQSpec
from qcrel.measurement import OptimizerConfig, random_unitary
from qcrel.qstate import DensityOperator

ACCEPTANCE_LINES: list[str] = []


def random_density(dims, seed, rank=None) -> DensityOperator:
    d = int(np.prod(dims))
    rng = np.random.default_rng(seed)
    k = rank or d
    g = rng.standard_normal((d, k)) + 1j * rng.standard_normal((d, k))
    m = g @ g.conj().T
    return DensityOperator.from_matrix(m / np.trace(m).real, tuple(dims))


def random_pure(dims, seed) -> DensityOperator:
    return random_density(dims, seed, rank=1)


def random_cq_spec(dims, seed, classical_side=0) -> CQSpec:
    """Random classical basis, Dirichlet weights and full-rank conditional states."""
    dc, dq = (dims if classical_side == 0 else dims[::-1])
    rng = np.random.default_rng(seed)
    probs = rng.dirichlet(np.ones(dc))
    states = tuple(random_density([dq], (seed, k)) for k in range(dc))
    return CQSpec(probs, states, random_unitary(dc, (seed, 99)), classical_side)


def random_cc_spec(dims, seed) -> CCSpec:
    rng = np.random.default_rng(seed)
    p = rng.dirichlet(np.ones(dims[0] * dims[1])).reshape(dims)
    return CCSpec(p, random_unitary(dims[0], (seed, 1)), random_unitary(dims[1], (seed, 2)))


def local_unitary(dims, seed) -> np.ndarray:
    return np.kron(random_unitary(dims[0], (seed, 0)), random_unitary(dims[1], (seed, 1)))


@pytest.fixture
def config():
    return OptimizerConfig(seed=3)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
