"""Named states, specs and structure maps shared by the CLI, docs and tests."""

from __future__ import annotations

from typing import Sequence

import numpy as np

from .classicality import CCSpec, CQSpec, build_state
from .measurement import random_unitary
from .qstate import DensityOperator, StateError, ket, maximally_mixed, projector, tensor_product
from .structures import StructureMap, parse_map_id, unitary_map

PLUS = np.array([1, 1]) / np.sqrt(2)


def _cc_from_probs(values: Sequence[float]) -> CCSpec:
    p = np.asarray(values, dtype=float)
    side = int(round(np.sqrt(p.size)))
    if side * side != p.size:
        raise StateError(f"cc fixture needs a square number of probabilities, got {p.size}")
    return CCSpec(p.reshape(side, side))


def cq_zero_plus(classical_side: int = 0) -> CQSpec:
    """``1/2 |0><0| (x) |0><0| + 1/2 |1><1| (x) |+><+|``: classical on one side only."""
    return CQSpec([0.5, 0.5], (projector(np.array([1, 0])), projector(PLUS)), classical_side=classical_side)


def rotated_cc(seed: int = 11) -> CCSpec:
    rng = np.random.default_rng(seed)
    p = rng.dirichlet(np.ones(4)).reshape(2, 2)
    p /= p.sum()
    return CCSpec(p, random_unitary(2, (seed, 1)), random_unitary(2, (seed, 2)))


SPEC_FIXTURES = {
    "cc-0.4-0.1-0.2-0.3": lambda: _cc_from_probs([0.4, 0.1, 0.2, 0.3]),
    "cc-uniform": lambda: CCSpec(np.full((2, 2), 0.25)),
    "cc-diag": lambda: _cc_from_probs([0.5, 0.0, 0.0, 0.5]),
    "cc-rotated": rotated_cc,
    "cq-zero-plus": cq_zero_plus,
    "cq-zero-plus-b": lambda: cq_zero_plus(1),
}

REGISTRY_MAPS = ("identity", "swap", "bell", "beamsplitter:2:pi/4", "regroup:1|0", "random:7")


def separable_discordant() -> DensityOperator:
    """``1/2 |00><00| + 1/2 |++><++|``."""
    zero = projector(np.array([1, 0]))
    plus = projector(PLUS)
    m = 0.5 * tensor_product(zero, zero).matrix + 0.5 * tensor_product(plus, plus).matrix
    return DensityOperator.from_matrix(m, (2, 2))


def bell_state() -> DensityOperator:
    return projector((ket(0, [4]) + ket(3, [4])) / np.sqrt(2), (2, 2))


def product_state() -> DensityOperator:
    a = DensityOperator((2,), np.diag([0.4, 0.6]))
    b = DensityOperator((2,), np.diag([0.7, 0.3]))
    return tensor_product(a, b)


STATE_FIXTURES = {
    "bell": bell_state,
    "product": product_state,
    "maximally-mixed": lambda: maximally_mixed((2, 2)),
    "separable-discordant": separable_discordant,
}


def fixture_ids() -> list[str]:
    return sorted(set(SPEC_FIXTURES) | set(STATE_FIXTURES))


def get_spec(fixture_id: str) -> CQSpec | CCSpec:
    if fixture_id in SPEC_FIXTURES:
        return SPEC_FIXTURES[fixture_id]()
    if fixture_id.startswith("cc-"):
        try:
            values = [float(v) for v in fixture_id[3:].split("-")]
        except ValueError:
            raise StateError(f"unknown fixture {fixture_id!r}") from None
        return _cc_from_probs(values)
    raise StateError(f"fixture {fixture_id!r} is not a CQ/CC spec; known specs: {sorted(SPEC_FIXTURES)}")


def get_state(fixture_id: str) -> DensityOperator:
    if fixture_id in STATE_FIXTURES:
        return STATE_FIXTURES[fixture_id]()
    return build_state(get_spec(fixture_id))


def get_map(map_id: str, dims: Sequence[int]) -> StructureMap:
    """Built-in map ids plus ``random:<seed>``, a seeded Haar global unitary."""
    if map_id.startswith("random:"):
        seed = int(map_id.split(":", 1)[1])
        d = int(np.prod(dims))
        return unitary_map(dims, random_unitary(d, seed), name=map_id)
    return parse_map_id(map_id, dims)
