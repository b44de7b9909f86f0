import json
import math
import sys
from pathlib import Path

import pandas as pd
import pytest

# set the path to one folder level above this file's location
sys.path.append(str(Path(__file__).parent.parent))
import src.cli as cli
from src.data_models.output import CriterionOutput, VerifyOutput
from src.errors import UsageError


@pytest.fixture(autouse=True)
def single_process(monkeypatch):
    monkeypatch.setenv("SPECTRA_FORGE_THREADS", "1")


def test_generate_writes_csv_and_prints_levels(tmp_path, capsys):
    out = tmp_path / "potential.csv"
    code = cli.run_command(
        ["generate", "--kind", "first-order", "--eps1", "-1", "--nu1", "0.5", "--grid-n", "201", "--out", str(out)]
    )
    assert code == 0
    assert out.read_text().splitlines()[0] == "x,V"
    frame = pd.read_csv(out)
    assert len(frame) == 201
    assert frame["x"].iloc[0] == pytest.approx(-10.0)

    payload = json.loads(capsys.readouterr().out)
    assert [level["value"] for level in payload["levels"]] == [-1.0, 0.5, 1.5, 2.5, 3.5]
    assert payload["levels"][0]["label"] == "created(eps1)"
    assert payload["certified_domain"] == [-12.0, 12.0]
    assert payload["file"] == str(out)


def test_generate_is_byte_identical(tmp_path):
    flags = ["generate", "--kind", "scaled-first", "--eps1", "-1", "--nu1", "0.2", "--q1", "1.41421356", "--grid-n", "301"]
    first, second = tmp_path / "a.csv", tmp_path / "b.csv"
    assert cli.run_command(flags + ["--out", str(first)]) == 0
    assert cli.run_command(flags + ["--out", str(second)]) == 0
    assert first.read_bytes() == second.read_bytes()


def test_generate_json_format(tmp_path):
    out = tmp_path / "potential.json"
    code = cli.run_command(
        ["generate", "--kind", "first-order", "--eps1", "-0.5", "--grid-n", "11", "--format", "json", "--out", str(out)]
    )
    assert code == 0
    data = json.loads(out.read_text())
    assert set(data) == {"x", "V"}
    assert len(data["x"]) == len(data["V"]) == 11
    assert data["V"][5] == pytest.approx(-1.0, abs=1e-12)


def test_generate_missing_energy_is_usage_error(tmp_path, capsys):
    code = cli.run_command(["generate", "--kind", "first-order", "--out", str(tmp_path / "p.csv")])
    assert code == 2
    assert "--eps1" in capsys.readouterr().err


def test_unknown_kind_is_usage_error(capsys):
    assert cli.run_command(["generate", "--kind", "third-order", "--eps1", "-1"]) == 2


def test_generate_singular_seed(tmp_path, capsys):
    code = cli.run_command(
        ["generate", "--kind", "first-order", "--eps1", "-0.5", "--nu1", "1.5", "--out", str(tmp_path / "p.csv")]
    )
    assert code == 1
    assert "singular_potential at x≈-0.684" in capsys.readouterr().err.splitlines()
    assert not (tmp_path / "p.csv").exists()


def test_generate_ordering_violation(tmp_path, capsys):
    code = cli.run_command(
        ["generate", "--kind", "second-order", "--eps1", "-0.5", "--eps2", "0.4", "--nu2", "3",
         "--out", str(tmp_path / "p.csv")]
    )
    assert code == 2
    assert capsys.readouterr().err.startswith("ordering_violation")


def test_generate_rejects_eps1_above_ground_level(tmp_path, capsys):
    code = cli.run_command(["generate", "--kind", "first-order", "--eps1", "0.7", "--out", str(tmp_path / "p.csv")])
    assert code == 2
    assert capsys.readouterr().err.startswith("ordering_violation")
    assert not (tmp_path / "p.csv").exists()


def test_spectrum_scaled_first_passes(tmp_path, capsys):
    report_path = tmp_path / "report.json"
    code = cli.run_command(
        ["spectrum", "--kind", "scaled-first", "--eps1", "-1", "--nu1", "0", "--q1", "1.41421356",
         "--out", str(report_path)]
    )
    assert code == 0
    payload = json.loads(capsys.readouterr().out)
    assert payload["pass"] is True
    assert len(payload["levels"]) == len(payload["computed"]) == 5
    assert payload["levels"][0]["value"] == pytest.approx(-0.5, abs=1e-8)
    assert json.loads(report_path.read_text()) == payload


def test_spectrum_reports_failure(capsys):
    code = cli.run_command(["spectrum", "--kind", "first-order", "--eps1", "-1", "--nmax", "2", "--tol", "1e-12"])
    assert code == 1
    captured = capsys.readouterr()
    assert json.loads(captured.out)["pass"] is False
    assert "verification_failed" in captured.err


def test_sweep_preset_clamps_and_writes_manifest(tmp_path, capsys):
    out_dir = tmp_path / "frames"
    code = cli.run_command(["sweep", "--preset", "fixed-two-lowest", "--steps", "3", "--grid-n", "201", "--out", str(out_dir)])
    assert code == 0

    manifest = json.loads((out_dir / "manifest.json").read_text())
    assert json.loads(capsys.readouterr().out) == manifest
    assert manifest["kind"] == "scaled-second"
    assert manifest["param"] == "q1"
    assert manifest["locks"] == ["eps1=q1^2/4", "eps2=-q1^2/2"]
    assert manifest["fixed"] == {"nu1": 0.0, "nu2": 10000.0, "q2": 1.0}
    assert len(manifest["files"]) == 3
    assert len(set(manifest["files"])) == 3
    for name in manifest["files"]:
        assert (out_dir / name).exists()

    # eps1 = q1^2/4 reaches 1/2 at q1 = sqrt(2)
    assert any("clamped" in warning for warning in manifest["warnings"])
    last = manifest["frames"][-1]
    assert last["parameters"]["eps1"] == pytest.approx(0.5 - cli.CLAMP_MARGIN)
    assert last["parameters"]["eps2"] == pytest.approx(-1.0)
    created = [level for level in last["levels"] if level["label"].startswith("created")]
    assert created[0]["value"] == pytest.approx(-0.5)


def test_sweep_warns_on_energy_sign_change(tmp_path):
    out_dir = tmp_path / "frames"
    code = cli.run_command(["sweep", "--preset", "moving-ground", "--steps", "3", "--grid-n", "101", "--out", str(out_dir)])
    assert code == 0
    manifest = json.loads((out_dir / "manifest.json").read_text())
    assert manifest["values"] == pytest.approx([-2.0, -0.775, 0.45])
    assert any(warning.startswith("eps1 changes sign") for warning in manifest["warnings"])


def test_sweep_rejects_swept_and_locked_energy(tmp_path):
    code = cli.run_command(
        ["sweep", "--kind", "scaled-first", "--param", "eps1", "--from", "-1", "--to", "-0.5", "--q1", "1",
         "--lock", "eps1=-q1^2/2", "--out", str(tmp_path)]
    )
    assert code == 2


def test_sweep_needs_range(tmp_path):
    assert cli.run_command(["sweep", "--kind", "first-order", "--param", "eps1", "--out", str(tmp_path)]) == 2


def test_verify_prints_table(monkeypatch, tmp_path, capsys):
    criteria = [
        CriterionOutput(criterion=1, name="first", passed=True, detail="ok"),
        CriterionOutput(criterion=2, name="second", passed=False, detail="off by 1e-2"),
    ]
    monkeypatch.setattr(cli, "run_acceptance", lambda: VerifyOutput(criteria=criteria, passed=False))
    out = tmp_path / "verify.json"
    code = cli.run_command(["verify", "--out", str(out)])
    assert code == 1
    captured = capsys.readouterr()
    assert "FAIL" in captured.out
    assert "verification_failed: criteria 2" in captured.err
    assert json.loads(out.read_text())["passed"] is False


@pytest.mark.parametrize(
    "text,target,coefficient",
    [("eps1=-q1^2/2", "eps1", -0.5), ("eps1=q1^2/4", "eps1", 0.25), ("eps2=0.3*q1^2", "eps2", 0.3), ("eps2 = -q1^2", "eps2", -1.0)],
)
def test_parse_lock(text, target, coefficient):
    lock = cli.parse_lock(text)
    assert lock.target == target
    assert lock.coefficient == pytest.approx(coefficient)


@pytest.mark.parametrize("text", ["eps3=q1^2", "eps1=q2^2", "eps1=0*q1^2", "eps1=-q1"])
def test_parse_lock_rejects(text):
    with pytest.raises(UsageError):
        cli.parse_lock(text)


def test_lock_clamps_below_half():
    lock = cli.parse_lock("eps1=q1^2/4")
    value, warning = lock.apply(math.sqrt(2.0) * 1.1)
    assert value == pytest.approx(0.5 - cli.CLAMP_MARGIN)
    assert "clamped" in warning
    assert lock.apply(1.0) == (0.25, None)


def test_build_transform_spec_defaults():
    spec = cli.build_transform_spec("scaled-second", dict(eps1=-1.0, q1=2.0, eps2=-1.5, nu2=1.1))
    assert spec.kind == "scaled_second"
    assert spec.f1.nu == 0.0
    assert spec.s2.q == 1.0
    with pytest.raises(UsageError):
        cli.build_transform_spec("scaled-first", dict(eps1=-1.0))


def test_default_tolerance_widens_for_compressed_scale():
    narrow = cli.build_transform_spec("scaled-first", dict(eps1=-0.25, q1=1.0 / math.sqrt(2.0)))
    assert cli.default_tolerance(narrow) == 4e-3
    assert cli.default_tolerance(cli.build_transform_spec("first-order", dict(eps1=-1.0))) == 2e-3
