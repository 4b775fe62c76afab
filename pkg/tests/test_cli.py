import csv
import io
import json

import pytest
from typer.testing import CliRunner

from main import app

runner = CliRunner(mix_stderr=False)

PLANE_WAVE_SYMBOL = '{"poly": [[0, 0], [1, 0]]}'
SQUARE_SYMBOL = '{"poly": [[0, 0], [0, 0], [1, 0]], "h0": 1}'


@pytest.fixture
def write_spec(tmp_path):
    def write(name, document):
        path = tmp_path / f"{name}.json"
        path.write_text(json.dumps(document))
        return str(path)

    return write


def rows(text):
    return list(csv.DictReader(io.StringIO(text)))


def test_family_dumps_standard_coefficients(write_spec):
    spec = write_spec("standard", {"construction": "standard", "a": 2, "params": {"n": 2}})
    result = runner.invoke(app, ["family", "--spec", spec])
    assert result.exit_code == 0, result.stderr
    table = rows(result.stdout)
    assert [float(row["k_j"]) for row in table] == [1, 0, -1]
    assert [float(row["re_C_j"]) for row in table] == [2.25, -1.5, 0.25]


def test_family_dumps_lagrange_weights(write_spec):
    spec = write_spec("lagrange", {"construction": "lagrange", "a": 2, "params": {"n": 2}})
    result = runner.invoke(app, ["family", "--spec", spec])
    assert result.exit_code == 0, result.stderr
    assert [float(row["re_C_j"]) for row in rows(result.stdout)] == [3, -3, 1]


def test_family_rejects_malformed_spec(tmp_path):
    spec = tmp_path / "broken.json"
    spec.write_text('{"construction": "standard", "a": ')
    out = tmp_path / "out.csv"
    result = runner.invoke(app, ["family", "--spec", str(spec), "--out", str(out)])
    assert result.exit_code == 2
    assert not out.exists()


def test_eval_standard_at_pi(write_spec):
    spec = write_spec("standard", {"construction": "standard", "a": 2, "params": {"n": 2}})
    result = runner.invoke(app, ["eval", "--spec", spec, "--grid", "0:3.141592653589793:3"])
    assert result.exit_code == 0, result.stderr
    last = rows(result.stdout)[-1]
    assert float(last["re_F"]) == pytest.approx(-4, abs=1e-12)
    assert float(last["im_F"]) == pytest.approx(0, abs=1e-12)


def test_eval_plane_wave_local_wavenumber(write_spec):
    spec = write_spec("plane", {"construction": "plane_wave", "a": 2})
    result = runner.invoke(app, ["eval", "--spec", spec, "--grid", "0:0.05:11"])
    assert result.exit_code == 0, result.stderr
    table = rows(result.stdout)
    assert len(table) == 11
    for row in table:
        assert abs(float(row["local_k"]) - 2) < 1e-6
        assert float(row["abs_F"]) == pytest.approx(1)


def test_eval_sinc_delta_at_origin(write_spec):
    spec = write_spec("sinc", {"construction": "sinc_delta", "a": 1.5, "params": {"delta": 1}})
    result = runner.invoke(app, ["eval", "--spec", spec, "--grid", "0:1:2"])
    assert result.exit_code == 0, result.stderr
    assert float(rows(result.stdout)[0]["abs_F"]) == pytest.approx(0.8646647167633873, rel=1e-12)


def test_eval_needs_exactly_one_grid(write_spec):
    spec = write_spec("plane", {"construction": "plane_wave", "a": 2})
    result = runner.invoke(app, ["eval", "--spec", spec])
    assert result.exit_code == 2


@pytest.mark.parametrize("grid", ["1:1:2", "1:0:11"])
def test_eval_rejects_empty_or_reversed_grid(write_spec, grid):
    spec = write_spec("standard", {"construction": "standard", "a": 2, "params": {"n": 4}})
    result = runner.invoke(app, ["eval", "--spec", spec, "--grid", grid])
    assert result.exit_code == 2


def test_eval_complex_grid_json(write_spec):
    spec = write_spec("plane", {"construction": "plane_wave", "a": 2})
    result = runner.invoke(app, ["eval", "--spec", spec, "--cgrid", "1:2:4", "--format", "json"])
    assert result.exit_code == 0, result.stderr
    document = json.loads(result.stdout)
    assert document["columns"] == ["re_z", "im_z", "re_F", "im_F"]
    assert len(document["rows"]) == 9


def test_verify_standard_family(write_spec, tmp_path):
    spec = write_spec("standard", {"construction": "standard", "a": 2})
    out = tmp_path / "report.json"
    result = runner.invoke(app, ["verify", "--spec", spec, "--indices", "2,4,8,16", "--B", "6", "--out", str(out)])
    assert result.exit_code == 0, result.stderr
    report = json.loads(out.read_text())
    assert report["verdict"] == "decreasing"
    assert report["failed_checks"] == []
    assert float(report["taylor_defects"]["2"]["2"]) == 1.5


def test_verify_rejects_in_band_target(write_spec):
    spec = write_spec("standard", {"construction": "standard", "a": 0.5})
    result = runner.invoke(app, ["verify", "--spec", spec, "--indices", "2,4", "--B", "6"])
    assert result.exit_code == 3


def test_evolve_second_family_reports_target(write_spec):
    spec = write_spec("standard", {"construction": "standard", "a": 2, "params": {"n": 4}})
    result = runner.invoke(app, ["evolve", "--spec", spec, "--symbol", SQUARE_SYMBOL, "--mode", "two",
                                 "--grid", "0:1:3", "--format", "json"])
    assert result.exit_code == 0, result.stderr
    document = json.loads(result.stdout)
    assert document["target"] == "4.0"
    assert document["band"] == "1.0"
    assert "target H(a)=4" in result.stderr


def test_evolve_second_family_needs_target_outside_image(write_spec):
    spec = write_spec("standard", {"construction": "standard", "a": 0.9, "params": {"n": 4}})
    result = runner.invoke(app, ["evolve", "--spec", spec, "--symbol", SQUARE_SYMBOL, "--mode", "two",
                                 "--grid", "0:1:3"])
    assert result.exit_code == 3


def test_evolve_translation_shifts_samples(write_spec):
    spec = write_spec("standard", {"construction": "standard", "a": 2, "params": {"n": 4}})
    evolved = runner.invoke(app, ["evolve", "--spec", spec, "--symbol", PLANE_WAVE_SYMBOL, "--t", "1",
                                  "--grid", "0:1:3"])
    shifted = runner.invoke(app, ["eval", "--spec", spec, "--grid", "1:2:3"])
    assert evolved.exit_code == 0, evolved.stderr
    assert shifted.exit_code == 0, shifted.stderr
    for left, right in zip(rows(evolved.stdout), rows(shifted.stdout)):
        assert float(left["re_F"]) == pytest.approx(float(right["re_F"]), abs=1e-12)
        assert float(left["im_F"]) == pytest.approx(float(right["im_F"]), abs=1e-12)


@pytest.mark.parametrize("check", ["lemmaA1", "lemmaA2", "lemma31", "cor33"])
def test_identity_check_passes(check, tmp_path):
    out = tmp_path / "identity.csv"
    result = runner.invoke(app, ["identity-check", "--check", check, "--out", str(out)])
    assert result.exit_code == 0, result.stderr
    assert all(row["passed"] == "true" for row in rows(out.read_text()))


def test_repeated_runs_are_byte_identical(write_spec, tmp_path):
    spec = write_spec("moment", {"construction": "moment", "a": 2, "params": {"n": 2, "density": {"builtin": "uniform"}}})
    outputs = []
    for run in range(2):
        out = tmp_path / f"samples{run}.csv"
        result = runner.invoke(app, ["eval", "--spec", spec, "--cgrid", "2:3:4", "--out", str(out)])
        assert result.exit_code == 0, result.stderr
        outputs.append(out.read_bytes())
    assert outputs[0] == outputs[1]
