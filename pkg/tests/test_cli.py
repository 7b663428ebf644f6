"""Command-line driver: outputs, exit codes and manifests."""

from __future__ import annotations

import json
import subprocess
import sys

import pytest

from crlimset.cli import main
from crlimset.presentation import fixture_root


def run_cli(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_triangle_unipotent(capsys):
    code, out, _ = run_cli(capsys, "triangle", "3", "3", "4", "unipotent")
    assert code == 0
    assert "tr(I3I2I1I2) = 3.000000000" in out
    assert "det H = -0.125" in out
    assert "discrete and faithful" in out


def test_triangle_inf_pair_trace(capsys):
    code, out, _ = run_cli(capsys, "triangle", "3", "3", "inf", "unipotent")
    assert code == 0
    assert "tr(I3I1) = 3.000000000" in out


def test_triangle_bad_inputs(capsys):
    assert run_cli(capsys, "triangle", "3", "3", "4", "1.5707963")[0] == 2
    assert run_cli(capsys, "triangle", "3", "3", "4", "1.5707963267948966")[0] == 2
    with pytest.raises(SystemExit) as e:
        main(["triangle", "3", "3", "x", "1.0"])
    assert e.value.code == 2


def test_verify(capsys, tmp_path):
    code, out, _ = run_cli(capsys, "verify", "m004")
    assert code == 0 and "PASS" in out
    code, out, _ = run_cli(capsys, "verify", "m023_lagrangian")
    assert code == 0 and "Unipotent" in out
    bad = tmp_path / "bad.toml"
    text = (fixture_root() / "m004.toml").read_text().replace("a^2bAB^2Aba", "a^2bAB^2Ab")
    bad.write_text(text)
    code, out, _ = run_cli(capsys, "verify", str(bad))
    assert code == 4 and "FAIL" in out
    broken = tmp_path / "broken.toml"
    broken.write_text("name = [\n")
    assert run_cli(capsys, "verify", str(broken))[0] == 2
    assert run_cli(capsys, "verify", "no_such_fixture")[0] == 2


def test_verify_all_json(capsys):
    code, out, err = run_cli(capsys, "verify", "--all", "--json")
    assert code == 0
    data = json.loads(out)
    assert len(data) == 21 and all(r["passed"] for r in data)
    assert "21/21" in err


def test_homology(capsys, tmp_path):
    code, out, _ = run_cli(capsys, "homology", "m004", "--target", "4")
    assert code == 0 and "H1 = Z\n" in out and out.rstrip().endswith("allowed")
    code, out, _ = run_cli(capsys, "homology", "m023_fill", "--target", "4")
    assert out.rstrip().endswith("allowed") and "Z/3" in out
    z14 = tmp_path / "z14.toml"
    z14.write_text('name = "z14"\ngenerators = ["a"]\nrelators = ["a^14"]\n')
    code, out, _ = run_cli(capsys, "homology", str(z14), "--target", "4")
    assert code == 0 and out.rstrip().endswith("blocked")
    code, out, _ = run_cli(capsys, "homology", "m004", "--fill", "0", "1", "0", "--target", "4")
    assert "m004(1,0)" in out and out.rstrip().endswith("blocked")
    assert run_cli(capsys, "homology", "m004", "--fill", "0", "2", "4", "--target", "4")[0] == 2


def test_lagrangian(capsys):
    code, out, _ = run_cli(capsys, "lagrangian", "4")
    assert code == 0 and "t = tr(xy^-1) = 2.8196" in out and "+ 0.2223" in out
    with pytest.raises(SystemExit) as e:
        main(["lagrangian", "3"])
    assert e.value.code == 2


def test_limitset_cyclic(capsys, tmp_path):
    code, out, _ = run_cli(capsys, "limitset", "--cyclic-demo", "--out", str(tmp_path))
    assert code == 0
    assert "points: 2 " in out and "class: Elementary" in out
    names = sorted(p.name for p in tmp_path.iterdir())
    assert names == [
        "cyclic_demo.csv",
        "cyclic_demo.manifest.json",
        "cyclic_demo.ply",
        "cyclic_demo_hx-ht.ppm",
        "cyclic_demo_hx-hy.ppm",
        "cyclic_demo_hy-ht.ppm",
    ]
    man = json.loads((tmp_path / "cyclic_demo.manifest.json").read_text())
    for key in ("command", "config", "fixture", "outputs", "wall_time_s", "version", "content_sha256"):
        assert key in man


def test_limitset_triangle_small(capsys, tmp_path):
    code, out, _ = run_cli(
        capsys, "limitset", "--triangle", "3", "3", "4", "unipotent", "--max-points", "20000", "--out", str(tmp_path)
    )
    assert code == 0 and "class: FractalCandidate" in out


def test_limitset_fixture_and_errors(capsys, tmp_path):
    code, out, _ = run_cli(
        capsys, "limitset", "--fixture", "m004", "--max-points", "5000", "--n1", "5", "--out", str(tmp_path)
    )
    assert code == 0 and (tmp_path / "m004.csv").exists()
    assert run_cli(capsys, "limitset", "--triangle", "3", "3", "4", "unipotent", "--epsilon", "0")[0] == 2
    assert run_cli(capsys, "limitset", "--triangle", "3", "3", "q", "unipotent")[0] == 2


def test_limitset_no_loxodromic(capsys, tmp_path):
    # the fixture's generator images are all elliptic, so with n1 = 1 there is nothing to seed
    code, _, err = run_cli(capsys, "limitset", "--fixture", "m004", "--n1", "1", "--out", str(tmp_path))
    assert code == 3 and "loxodromic" in err


def test_export(capsys, tmp_path):
    run_cli(capsys, "limitset", "--cyclic-demo", "--out", str(tmp_path))
    code, out, _ = run_cli(capsys, "export", str(tmp_path / "cyclic_demo.csv"), "--plane", "hx-ht", "--out", str(tmp_path / "e"))
    assert code == 0 and (tmp_path / "e" / "cyclic_demo_hx-ht.ppm").exists()
    code, _, _ = run_cli(capsys, "export", str(tmp_path / "cyclic_demo.csv"), "--format", "ply", "--out", str(tmp_path / "e"))
    assert code == 0 and (tmp_path / "e" / "cyclic_demo.ply").exists()
    assert run_cli(capsys, "export", str(tmp_path / "missing.csv"))[0] == 2


def test_global_flags_anywhere(capsys, tmp_path):
    code, _, _ = run_cli(capsys, "--out", str(tmp_path), "--threads", "2", "limitset", "--cyclic-demo")
    assert code == 0 and (tmp_path / "cyclic_demo.csv").exists()
    assert run_cli(capsys, "verify", "m004", "--tol", "1e-7")[0] == 0


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "crlimset", "--version"], capture_output=True, text=True)
    assert res.returncode == 0 and "crlimset" in res.stdout
