import numpy as np
import pytest

from qcrel.classicality import CCSpec, build_state
from qcrel.formats import dumps
from qcrel.measurement import OptimizerConfig
from qcrel.qstate import StateError, von_neumann_entropy
from qcrel.scenarios import (
    ScenarioError,
    random_mixed_state,
    run_suite,
    scenario_cv_demo,
    scenario_measure_sampling,
    scenario_qcr_demo,
    scenario_separable_discordant,
    scenario_teleport_structures,
    teleport_state,
)

LN2 = np.log(2)
QCR_TARGET_DISCORD = 0.02415725678117142


class TestQcrDemo:
    def test_headline(self, config):
        rep = scenario_qcr_demo("cc-0.4-0.1-0.2-0.3", "bell", config)
        assert rep["qcr_exhibited"] is True
        assert rep["source"]["two_way_discord"] <= 1e-6
        assert rep["target"]["two_way_discord"] == pytest.approx(QCR_TARGET_DISCORD, abs=1e-4)
        assert rep["residual"]["max_residual"] == pytest.approx(0.1, abs=1e-12)
        assert rep["expansion_identity_holds"]
        assert rep["target_classifier_accepts"] is False

    def test_uniform_is_exceptional(self, config):
        rep = scenario_qcr_demo("cc-uniform", "bell", config)
        assert rep["qcr_exhibited"] is False
        assert rep["target"]["two_way_discord"] <= 1e-6
        assert rep["residual"]["max_residual"] <= 1e-12

    def test_identity_map(self, config):
        rep = scenario_qcr_demo("cc-0.4-0.1-0.2-0.3", "identity", config)
        assert rep["qcr_exhibited"] is False
        assert rep["target"]["two_way_discord"] <= 1e-6

    def test_cq_source_judged_on_classical_side(self, config):
        rep = scenario_qcr_demo("cq-zero-plus", "bell", config)
        assert rep["judged_measure"] == "discord_measured_on_a"
        assert rep["source"]["discord_measured_on_a"] <= 1e-6
        assert rep["source"]["discord_measured_on_b"] > 0.1
        assert rep["qcr_exhibited"] is True
        assert rep["residual_kind"] == "cq"

    def test_spec_object_source(self, config):
        spec = CCSpec(np.array([[0.4, 0.1], [0.2, 0.3]]))
        rep = scenario_qcr_demo(spec, "bell", config, fixture_name="inline")
        assert rep["fixture"] == "inline"
        assert rep["qcr_exhibited"]

    def test_non_classical_source(self, config, monkeypatch):
        import qcrel.scenarios as sc
        from qcrel.fixtures import bell_state

        monkeypatch.setattr(sc, "build_state", lambda spec: bell_state())
        with pytest.raises(ScenarioError, match="source not classical"):
            sc.scenario_qcr_demo("cc-uniform", "identity", config)


class TestTeleport:
    def test_default_phi(self, config):
        rep = scenario_teleport_structures((1, 0), config)
        c1, c2 = rep["cut_1_23"], rep["cut_12_3"]
        assert c1["dims"] == [2, 4] and c2["dims"] == [4, 2]
        assert c1["mutual_info"] == pytest.approx(0, abs=1e-9)
        assert c1["two_way_discord"] <= 1e-9
        assert c1["negativity"] <= 1e-9
        assert rep["marginal_3_deviation_from_half_identity"] <= 1e-10
        assert c2["two_way_discord"] == pytest.approx(LN2, abs=1e-4)
        assert c2["negativity"] == pytest.approx(0.5, abs=1e-6)
        np.testing.assert_allclose(rep["bell_expansion_magnitudes"], [0.5] * 4, atol=1e-12)
        assert rep["spectra_agree"]

    def test_plus_phi_gives_same_numbers(self, config):
        a = scenario_teleport_structures((1, 0), config)
        b = scenario_teleport_structures(np.array([1, 1]) / np.sqrt(2), config)
        for cut in ("cut_1_23", "cut_12_3"):
            for key in ("mutual_info", "two_way_discord", "negativity"):
                assert b[cut][key] == pytest.approx(a[cut][key], abs=1e-6)

    def test_unnormalized_phi(self):
        with pytest.raises(StateError, match="normalized"):
            teleport_state([1, 1])


class TestSeparableDiscordant:
    def test_report(self, config):
        rep = scenario_separable_discordant(config)
        assert rep["negativity"] <= 1e-9
        assert rep["discord_measured_on_a"] >= 1e-3
        assert rep["discord_measured_on_b"] >= 1e-3
        assert rep["covariance_zz"] == pytest.approx(0.25, abs=1e-12)
        assert rep["covariance_zz"] >= 0.1


class TestSampling:
    def test_random_state_spectrum(self):
        rho, spectrum = random_mixed_state((2, 3), (4, 0))
        np.testing.assert_allclose(np.sort(spectrum), rho.eigenvalues(), atol=1e-12)
        assert spectrum.sum() == pytest.approx(1)

    def test_injected_cc_counted_below(self, config):
        cc = build_state(CCSpec(np.array([[0.4, 0.1], [0.2, 0.3]])))
        rep = scenario_measure_sampling(1, (2, 2), 1e-6, 0, config, inject=[cc], cc_samples=0)
        assert rep.fraction_below == 1.0
        assert rep.count == 1

    def test_small_sweep(self, config):
        rep = scenario_measure_sampling(12, (2, 2), 1e-6, 7, config, cc_samples=4)
        assert rep.fraction_below == 0.0
        assert len(rep.two_way_discord) == 12
        assert all(v <= 1e-6 for v in rep.cc_source_discord)
        assert rep.cc_fraction_restored == 1.0
        assert rep.structure_map == "bell"
        assert "Haar" in rep.to_dict()["measure"]

    def test_deterministic(self):
        a = scenario_measure_sampling(4, (2, 2), 1e-6, 5, cc_samples=2)
        b = scenario_measure_sampling(4, (2, 2), 1e-6, 5, cc_samples=2)
        assert dumps(a.to_dict()) == dumps(b.to_dict())

    def test_rejects_empty(self):
        with pytest.raises(ValueError):
            scenario_measure_sampling(0)


class TestCvDemo:
    def test_single_photon_quarter_turn(self, config):
        rep = scenario_cv_demo(4, np.pi / 4, (1, 0), config)
        assert rep["target"]["two_way_discord"] == pytest.approx(LN2, abs=1e-4)
        assert rep["target"]["negativity"] == pytest.approx(0.5, abs=1e-6)
        assert rep["leakage"] == 0

    def test_half_turn_is_product(self, config):
        rep = scenario_cv_demo(4, np.pi / 2, (1, 0), config)
        assert rep["target"]["two_way_discord"] <= 1e-6

    @pytest.mark.parametrize("theta", [0.0, 0.3, np.pi / 4])
    def test_vacuum_invariance(self, theta):
        rep = scenario_cv_demo(3, theta, (0, 0), OptimizerConfig(restarts=4))
        assert rep["target"]["two_way_discord"] <= 1e-6
        assert rep["target"]["mutual_info"] == pytest.approx(0, abs=1e-9)

    def test_truncation_unsafe(self):
        with pytest.raises(StateError, match="truncation unsafe"):
            scenario_cv_demo(3, 0.1, (2, 1))


@pytest.mark.slow
def test_suite_is_byte_reproducible():
    a = dumps(run_suite(seed=11, sample_n=3))
    b = dumps(run_suite(seed=11, sample_n=3))
    assert a == b


def test_teleport_state_is_pure():
    rho = teleport_state([0.6, 0.8])
    assert von_neumann_entropy(rho) == pytest.approx(0, abs=1e-12)
