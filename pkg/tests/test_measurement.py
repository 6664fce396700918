import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import random_density
from qcrel.correlations import conditional_entropy_given_measurement
from qcrel.fixtures import bell_state, cq_zero_plus, product_state, separable_discordant
from qcrel.classicality import CCSpec, build_cc_state, build_state
from qcrel.measurement import (
    ConditionalEntropyObjective,
    MeasurementParameterization,
    OptimizerConfig,
    OptimizerError,
    ProjectiveMeasurement,
    optimize_conditional_entropy,
    qubit_grid_oracle,
    random_unitary,
)
from qcrel.qstate import StateError, partial_trace, von_neumann_entropy

CC_COND_ENTROPY_SIDE_B = 0.6068425588244111
CQ_QUANTUM_SIDE_DISCORD = 0.13984388083942972


def cc_state():
    return build_cc_state(CCSpec(np.array([[0.4, 0.1], [0.2, 0.3]])))


class TestConfig:
    def test_defaults(self):
        cfg = OptimizerConfig()
        assert (cfg.restarts, cfg.max_iter, cfg.tol) == (24, 500, 1e-9)

    @pytest.mark.parametrize("kwargs", [{"restarts": 0}, {"max_iter": 0}, {"tol": 0.0}, {"tol": -1.0}])
    def test_rejects_invalid(self, kwargs):
        with pytest.raises(ValueError):
            OptimizerConfig(**kwargs)

    def test_from_dotted_keys(self):
        cfg = OptimizerConfig.from_mapping({"optimizer.restarts": 5, "optimizer.seed": 9, "other": 1})
        assert cfg.restarts == 5 and cfg.seed == 9 and cfg.max_iter == 500

    def test_from_nested_keys(self):
        cfg = OptimizerConfig.from_mapping({"optimizer": {"max_iter": 50, "tol": 1e-7}})
        assert cfg.max_iter == 50 and cfg.tol == 1e-7


class TestRandomUnitary:
    def test_scalar(self):
        u = random_unitary(1, 3)
        assert u.shape == (1, 1)
        assert abs(abs(u[0, 0]) - 1) < 1e-12

    def test_deterministic(self):
        np.testing.assert_array_equal(random_unitary(4, 17), random_unitary(4, 17))
        assert not np.array_equal(random_unitary(4, 17), random_unitary(4, 18))

    @pytest.mark.parametrize("d", [2, 3, 5, 8])
    def test_unitary(self, d):
        u = random_unitary(d, (1, d))
        np.testing.assert_allclose(np.linalg.norm(u, axis=0), 1, atol=1e-10)
        np.testing.assert_allclose(u.conj().T @ u, np.eye(d), atol=1e-10)

    def test_haar_first_moment(self):
        # E|U_00|^2 = 1/d for Haar unitaries
        vals = [abs(random_unitary(3, s)[0, 0]) ** 2 for s in range(2000)]
        assert np.mean(vals) == pytest.approx(1 / 3, abs=0.02)


class TestParameterization:
    @pytest.mark.parametrize("d", [2, 3, 4])
    def test_measurement_is_valid(self, d):
        rng = np.random.default_rng(d)
        p = MeasurementParameterization(d, tuple(rng.uniform(-3, 3, d * d)))
        projs = p.measurement(0).projectors
        np.testing.assert_allclose(sum(projs), np.eye(d), atol=1e-9)
        for i, a in enumerate(projs):
            for j, b in enumerate(projs):
                np.testing.assert_allclose(a @ b, a if i == j else 0 * a, atol=1e-9)

    def test_wrong_angle_count(self):
        with pytest.raises(ValueError):
            MeasurementParameterization(2, (0.1, 0.2))

    def test_non_orthonormal_basis_rejected(self):
        with pytest.raises(StateError):
            ProjectiveMeasurement(0, np.array([[1, 1], [0, 1]]))


class TestObjective:
    def test_matches_generic_conditional_entropy(self):
        rho = random_density([2, 3], 8)
        for side in (0, 1):
            obj = ConditionalEntropyObjective(rho, side)
            u = random_unitary(rho.dims[side], 5)
            fast = obj(u[None])[0]
            slow = conditional_entropy_given_measurement(rho, ProjectiveMeasurement(side, u))
            assert fast == pytest.approx(slow, abs=1e-12)

    def test_invariant_under_projector_order_and_phase(self):
        rho = random_density([3, 2], 4)
        obj = ConditionalEntropyObjective(rho, 0)
        u = random_unitary(3, 1)
        shuffled = u[:, [2, 0, 1]] * np.exp(1j * np.array([0.3, -1.2, 2.0]))[None]
        assert obj(shuffled[None])[0] == pytest.approx(obj(u[None])[0], abs=1e-13)


class TestOptimizer:
    def test_product_state_objective_is_constant(self):
        rho = product_state()
        expected = von_neumann_entropy(partial_trace(rho, [0]))
        res = optimize_conditional_entropy(rho, 1)
        assert res.value == pytest.approx(expected, abs=1e-10)
        assert res.diagnostics["spread"] < 1e-10
        assert max(res.diagnostics["start_values"]) == pytest.approx(expected, abs=1e-10)

    def test_bell_state(self):
        assert optimize_conditional_entropy(bell_state(), 0).value == pytest.approx(0, abs=1e-9)

    def test_cq_quantum_side_matches_grid(self):
        rho = build_state(cq_zero_plus())
        res = optimize_conditional_entropy(rho, 1)
        assert res.value == pytest.approx(qubit_grid_oracle(rho, 1), abs=1e-4)

    def test_never_above_any_start(self):
        rho = random_density([3, 3], 12)
        res = optimize_conditional_entropy(rho, 0, OptimizerConfig(restarts=6, seed=1))
        assert res.value <= min(res.diagnostics["start_values"]) + 1e-15
        assert len(res.diagnostics["local_optima"]) == 6

    def test_best_measurement_reproduces_value(self):
        rho = separable_discordant()
        res = optimize_conditional_entropy(rho, 0)
        assert conditional_entropy_given_measurement(rho, res.measurement) == pytest.approx(res.value, abs=1e-10)

    def test_deterministic(self):
        rho = random_density([2, 3], 3)
        cfg = OptimizerConfig(seed=42)
        a = optimize_conditional_entropy(rho, 1, cfg)
        b = optimize_conditional_entropy(rho, 1, cfg)
        assert a.value == b.value
        assert a.diagnostics == b.diagnostics

    def test_side_dimension_cap(self):
        rho = random_density([9, 2], 1)
        with pytest.raises(StateError, match="exceeds"):
            optimize_conditional_entropy(rho, 0)

    def test_failure_carries_diagnostics(self):
        rho = random_density([3, 3], 2)
        with pytest.raises(OptimizerError) as info:
            optimize_conditional_entropy(rho, 0, OptimizerConfig(restarts=2, max_iter=1))
        assert info.value.diagnostics["converged_restarts"] == 0
        assert "spread" in info.value.diagnostics


class TestGridOracle:
    def test_bell(self):
        assert qubit_grid_oracle(bell_state(), 0) == pytest.approx(0, abs=1e-12)

    def test_product_state(self):
        rho = product_state()
        expected = von_neumann_entropy(partial_trace(rho, [1]))
        assert qubit_grid_oracle(rho, 0, (19, 36)) == pytest.approx(expected, abs=1e-12)

    def test_cc_state_side_b(self):
        assert qubit_grid_oracle(cc_state(), 1) == pytest.approx(CC_COND_ENTROPY_SIDE_B, abs=1e-12)

    def test_cq_fixture_discord(self):
        rho = build_state(cq_zero_plus())
        discord = qubit_grid_oracle(rho, 1) - von_neumann_entropy(rho) + von_neumann_entropy(partial_trace(rho, [1]))
        assert discord == pytest.approx(CQ_QUANTUM_SIDE_DISCORD, abs=1e-9)

    def test_refinement_never_increases(self):
        rho = random_density([2, 2], 21)
        coarse = qubit_grid_oracle(rho, 0, (19, 36))
        fine = qubit_grid_oracle(rho, 0, (37, 72))
        assert fine <= coarse + 1e-15

    def test_rejects_non_qubit_side(self):
        with pytest.raises(StateError, match="qubit"):
            qubit_grid_oracle(random_density([3, 2], 0), 0)


@settings(max_examples=15, deadline=None)
@given(st.integers(min_value=0, max_value=2**31), st.sampled_from([(2, 2), (2, 3), (3, 2)]))
def test_oracle_dominance(seed, dims):
    rho = random_density(dims, seed)
    for side in (0, 1):
        if dims[side] != 2:
            continue
        opt = optimize_conditional_entropy(rho, side, OptimizerConfig(seed=seed % 1000)).value
        grid = qubit_grid_oracle(rho, side)
        assert opt <= grid + 1e-6
        assert opt >= grid - 1e-3
