import csv
import io
import json

import numpy as np
import pytest

from conftest import random_density
from qcrel import formats
from qcrel.cli import main
from qcrel.fixtures import cq_zero_plus, get_spec, product_state
from qcrel.qstate import StateError
from qcrel.structures import bell_map


def write_json(path, obj):
    path.write_text(json.dumps(obj))
    return path


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


class TestCodecs:
    def test_state_round_trip(self):
        rho = random_density([2, 3], 1)
        back = formats.state_from_json(json.loads(json.dumps(formats.state_to_json(rho))))
        assert back.dims == rho.dims
        np.testing.assert_array_equal(back.matrix, rho.matrix)

    def test_row_major_order(self):
        m = np.array([[0.25, 0.1j], [-0.1j, 0.75]])
        assert formats.encode_matrix(m) == [[0.25, 0.0], [0.0, 0.1], [0.0, -0.1], [0.75, 0.0]]

    @pytest.mark.parametrize(
        "matrix, invariant",
        [
            ([[0.5, 0], [0.2, 0], [0, 0], [0.5, 0]], "hermitian"),
            ([[0.5, 0], [0, 0], [0, 0], [0.6, 0]], "trace"),
            ([[1.2, 0], [0, 0], [0, 0], [-0.2, 0]], "positive"),
            ([[1, 0], [0, 0], [0, 0]], "entries"),
        ],
    )
    def test_invalid_state_names_invariant(self, matrix, invariant):
        with pytest.raises(StateError, match=invariant):
            formats.state_from_json({"dims": [2], "matrix": matrix})

    def test_missing_keys(self):
        with pytest.raises(StateError, match="dims"):
            formats.state_from_json({"matrix": []})

    def test_bad_entries(self):
        with pytest.raises(StateError, match="pairs"):
            formats.state_from_json({"dims": [2], "matrix": [1, 0, 0, 0]})

    def test_map_round_trip(self):
        smap = bell_map()
        back = formats.map_from_json(formats.map_to_json(smap))
        np.testing.assert_array_equal(back.unitary, smap.unitary)
        assert back.target_dims == (2, 2)

    def test_map_requires_unitary(self):
        with pytest.raises(StateError, match="not unitary"):
            formats.map_from_json({"target_dims": [2, 2], "unitary": [[1, 0]] * 16})

    @pytest.mark.parametrize("fid", ["cc-rotated", "cq-zero-plus", "cq-zero-plus-b"])
    def test_spec_round_trip(self, fid):
        spec = get_spec(fid)
        back = formats.spec_from_json(json.loads(json.dumps(formats.spec_to_json(spec))))
        assert type(back) is type(spec)
        np.testing.assert_allclose(back.probs, spec.probs)
        assert back.dims == spec.dims

    def test_spec_with_ensemble(self):
        plus = np.array([[1], [1]]) / np.sqrt(2)
        base = cq_zero_plus()
        spec = type(base)(base.probs, base.conditional_states, base.classical_basis, 0,
                          ((np.array([1.0]), np.array([[1], [0]])), (np.array([1.0]), plus)))
        back = formats.spec_from_json(formats.spec_to_json(spec))
        assert back.ensembles is not None and len(back.ensembles) == 2

    def test_unknown_spec_kind(self):
        with pytest.raises(StateError, match="kind"):
            formats.spec_from_json({"kind": "qq"})

    def test_dumps_is_deterministic_and_plain(self):
        obj = {"b": np.float64(0.1), "a": np.array([1, 2]), "c": np.bool_(True), "d": float("nan")}
        text = formats.dumps(obj)
        assert text == formats.dumps(dict(reversed(list(obj.items()))))
        assert json.loads(text) == {"a": [1, 2], "b": 0.1, "c": True, "d": "nan"}

    def test_csv_header(self):
        text = formats.rows_to_csv([formats.report_row("x", "f", "m", None, 3, residual9=0.5)])
        rows = list(csv.DictReader(io.StringIO(text)))
        assert tuple(rows[0].keys()) == formats.CSV_COLUMNS
        assert rows[0]["residual9"] == "0.5" and rows[0]["seed"] == "3"


class TestCli:
    def test_qcr_demo(self, capsys):
        code, out, _ = run(capsys, "qcr-demo", "--fixture", "cc-0.4-0.1-0.2-0.3", "--map", "bell", "--restarts", "8")
        assert code == 0
        rep = json.loads(out)
        assert rep["qcr_exhibited"] is True

    def test_discord_of_product_state_file(self, capsys, tmp_path):
        path = write_json(tmp_path / "product.json", formats.state_to_json(product_state()))
        code, out, _ = run(capsys, "discord", "--state", str(path))
        assert code == 0
        rep = json.loads(out)["report"]
        assert rep["discord_measured_on_a"] <= 1e-9
        assert rep["discord_measured_on_b"] <= 1e-9
        assert rep["two_way_discord"] <= 1e-9

    def test_sample(self, capsys):
        code, out, _ = run(capsys, "sample", "--n", "5", "--dims", "2,2", "--epsilon", "1e-6", "--seed", "7",
                           "--cc-samples", "1")
        assert code == 0
        assert json.loads(out)["fraction_below"] == 0.0

    def test_csv_output(self, capsys, tmp_path):
        dest = tmp_path / "out.csv"
        code, _, _ = run(capsys, "discord", "--fixture", "bell", "--format", "csv", "--out", str(dest))
        assert code == 0
        rows = list(csv.DictReader(dest.open()))
        assert float(rows[0]["D"]) == pytest.approx(np.log(2), abs=1e-6)

    def test_classify(self, capsys):
        code, out, _ = run(capsys, "classify", "--fixture", "cq-zero-plus")
        assert code == 0
        rep = json.loads(out)
        assert rep["cq_a"]["accepted"] and not rep["cq_b"]["accepted"] and not rep["cc"]["accepted"]

    def test_residual(self, capsys):
        code, out, _ = run(capsys, "residual", "--fixture", "cc-0.4-0.1-0.2-0.3", "--map", "bell")
        assert code == 0
        rep = json.loads(out)
        assert rep["max_residual"] == pytest.approx(0.1) and rep["kind"] == "cc"

    def test_restructure_round_trips_through_files(self, capsys, tmp_path):
        path = write_json(tmp_path / "map.json", formats.map_to_json(bell_map()))
        code, out, _ = run(capsys, "restructure", "--fixture", "product", "--map-file", str(path))
        assert code == 0
        assert formats.state_from_json(json.loads(out)).dims == (2, 2)

    def test_scenarios_exit_zero(self, capsys):
        for argv in (["teleport-demo", "--restarts", "4"], ["separable-demo", "--restarts", "4"],
                     ["cv-demo", "--theta", "pi/2", "--restarts", "4"]):
            assert run(capsys, *argv)[0] == 0

    def test_seed_makes_output_reproducible(self, capsys):
        argv = ("discord", "--fixture", "separable-discordant", "--seed", "5", "--restarts", "6")
        assert run(capsys, *argv)[1] == run(capsys, *argv)[1]

    def test_seed_precedence(self, capsys, tmp_path, monkeypatch):
        cfg = write_json(tmp_path / "cfg.json", {"optimizer.seed": 4, "optimizer.restarts": 3})
        monkeypatch.setenv("QCR_SEED", "9")
        assert json.loads(run(capsys, "discord", "--fixture", "bell")[1])["seed"] == 9
        assert json.loads(run(capsys, "discord", "--fixture", "bell", "--config", str(cfg))[1])["seed"] == 4
        out = run(capsys, "discord", "--fixture", "bell", "--config", str(cfg), "--seed", "2")[1]
        rep = json.loads(out)
        assert rep["seed"] == 2 and rep["report"]["optimizer_diag"]["a"]["restarts"] == 3

    def test_unknown_subcommand(self, capsys):
        code, _, err = run(capsys, "frobnicate")
        assert code == 1
        assert "usage" in err

    def test_no_subcommand(self, capsys):
        assert run(capsys)[0] == 1

    def test_invalid_state_file(self, capsys, tmp_path):
        path = write_json(tmp_path / "bad.json", {"dims": [2], "matrix": [[0.5, 0], [0, 0], [0, 0], [0.6, 0]]})
        code, _, err = run(capsys, "discord", "--state", str(path))
        assert code == 1
        assert "trace" in err

    def test_missing_file(self, capsys, tmp_path):
        code, _, err = run(capsys, "discord", "--state", str(tmp_path / "nope.json"))
        assert code == 1 and "not found" in err

    def test_unknown_fixture(self, capsys):
        assert run(capsys, "discord", "--fixture", "nope")[0] == 1

    def test_csv_not_available_for_classify(self, capsys):
        code, _, err = run(capsys, "classify", "--fixture", "bell", "--format", "csv")
        assert code == 1 and "csv" in err

    def test_optimizer_failure_exit_two(self, capsys, tmp_path):
        cfg = write_json(tmp_path / "cfg.json", {"optimizer": {"max_iter": 1, "restarts": 1}})
        code, _, err = run(capsys, "discord", "--fixture", "separable-discordant", "--config", str(cfg))
        assert code == 2 and "computation error" in err

    def test_truncation_unsafe_is_validation(self, capsys):
        code, _, err = run(capsys, "cv-demo", "--cutoff", "3", "--fock", "2,1")
        assert code == 1 and "truncation unsafe" in err
