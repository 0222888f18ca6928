import json
import subprocess
import sys

import pytest

from capdual import shapes
from capdual.cli import COMMANDS, main
from capdual.geometry import save_domain


@pytest.fixture
def square_file(tmp_path):
    path = tmp_path / "square.json"
    save_domain(path, shapes.unit_square(), [3.0, 0.0, 1.0, 2.0])
    return str(path)


def _run(tmp_path, *args):
    out = tmp_path / "out"
    code = main([*args, "--out", str(out)])
    return code, out


def test_dual_square_file(tmp_path, square_file):
    code, out = _run(tmp_path, "dual", "--domain", square_file, "--p", "1.5", "--h", "0.02")
    assert code == 0
    rep = json.loads((out / "report.json").read_text())
    assert rep["product"] == pytest.approx(1.0, abs=0.05)
    assert rep["converged"] is True
    assert (out / "duality.csv").read_text().startswith("domain_hash,")
    assert "product" in (out / "report.txt").read_text()


def test_missing_domain_file(tmp_path, capsys):
    code, out = _run(tmp_path, "dual", "--domain", str(tmp_path / "nope.json"), "--p", "1.5")
    assert code == 1
    err = capsys.readouterr().err.strip().splitlines()
    assert len(err) == 1
    rec = json.loads(err[0])
    assert rec["exit"] == 1 and rec["kind"] == "input"
    assert json.loads((out / "error.json").read_text()) == rec


def test_iteration_limit_gives_exit_2(tmp_path):
    code, out = _run(tmp_path, "dual", "--domain", "builtin:l-shape", "--p", "1.5", "--h", "0.08",
                     "--max-iters", "1")
    assert code == 2
    rep = json.loads((out / "report.json").read_text())
    assert rep["converged"] is False
    assert json.loads((out / "manifest.json").read_text())["exit_code"] == 2


@pytest.mark.parametrize("args", [["--p", "0.5"], ["--h", "-1"], ["--bogus"]])
def test_bad_arguments(tmp_path, args):
    code, _ = _run(tmp_path, "dual", "--domain", "builtin:square", *args)
    assert code == 1


def test_unknown_builtin(tmp_path):
    code, out = _run(tmp_path, "map", "--domain", "builtin:heptagon")
    assert code == 1 and (out / "error.json").exists()


def test_manifest_contents(tmp_path, square_file):
    code, out = _run(tmp_path, "map", "--domain", square_file, "--h", "0.08")
    assert code == 0
    m = json.loads((out / "manifest.json").read_text())
    assert m["config"]["command"] == "map" and m["config"]["h"] == 0.08
    assert len(m["input_hashes"]["domain"]) == 64
    assert m["wall_time"] > 0
    assert {"capdual", "numpy", "scipy", "kernels", "sparse"} <= set(m["versions"])
    assert set(m["files"]) >= {"report.txt", "report.json", "map.svg", "boundary_table.json"}


SMOKE = {
    "cap": ["--domain", "builtin:l-shape", "--p", "1.5", "--h", "0.1"],
    "curve-cap": ["--domain", "builtin:disk", "--p", "1.5", "--h", "0.1", "--curve", "-0.3", "0", "0.3", "0"],
    "dual": ["--domain", "builtin:rectangle:2x1", "--p", "1.25", "--h", "0.1", "--cuts", "5", "0", "2", "3"],
    "map": ["--domain", "builtin:l-shape", "--h", "0.1"],
    "geodesic": ["--domain", "builtin:square", "--h", "0.08", "--z1", "0.2", "0.3", "--z2", "0.8", "0.6"],
    "metric": ["--domain", "builtin:square", "--h", "0.08", "--p", "1.5", "--z1", "0.2", "0.3",
               "--z2", "0.8", "0.6", "--kind", "sub"],
    "annuli": ["--domain", "builtin:disk", "--h", "0.06", "--y1", "0", "--y2", "3.14159", "--k-max", "2"],
    "check-comparability": ["--domain", "builtin:disk", "--p", "1.5", "--h", "0.08", "--pairs", "2", "--seed", "1"],
    "check-curve": ["--domain", "builtin:square", "--q", "3", "--h", "0.1", "--pairs", "4", "--seed", "1"],
    "check-go": ["--domain", "builtin:disk", "--h", "0.08", "--pairs", "5", "--seed", "1"],
}


@pytest.mark.parametrize("command", sorted(SMOKE))
def test_command_smoke(tmp_path, command):
    code, out = _run(tmp_path, command, *SMOKE[command])
    assert code == 0
    m = json.loads((out / "manifest.json").read_text())
    for f in m["files"]:
        assert (out / f).stat().st_size > 0
    for f in m["files"]:
        if f.endswith(".svg"):
            assert (out / f).read_text().startswith("<svg")


def test_every_command_covered():
    assert set(SMOKE) | {"report"} == set(COMMANDS)


def test_report_summarizes_runs(tmp_path):
    assert main(["map", "--domain", "builtin:square", "--h", "0.1", "--out", str(tmp_path / "a")]) == 0
    assert main(["dual", "--domain", "builtin:nope", "--out", str(tmp_path / "b")]) == 1
    assert main(["report", "--out", str(tmp_path)]) == 0
    text = (tmp_path / "summary.txt").read_text()
    assert "map exit=0" in text and "dual exit=1" in text


def test_csv_determinism(tmp_path):
    args = ["check-go", "--domain", "builtin:disk", "--h", "0.08", "--pairs", "6", "--seed", "4"]
    assert main([*args, "--out", str(tmp_path / "a")]) == 0
    assert main([*args, "--out", str(tmp_path / "b")]) == 0
    a = (tmp_path / "a" / "gehring_osgood.csv").read_bytes()
    assert a == (tmp_path / "b" / "gehring_osgood.csv").read_bytes()


def test_module_entry_point(tmp_path):
    res = subprocess.run([sys.executable, "-m", "capdual.cli", "map", "--domain", "builtin:square",
                          "--h", "0.1", "--out", str(tmp_path / "m")], capture_output=True, text=True)
    assert res.returncode == 0, res.stderr
