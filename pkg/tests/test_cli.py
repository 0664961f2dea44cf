import csv
import json
import shutil
import subprocess
import sys

import pytest

from moebius_sig.cli import main
from moebius_sig.curve import ellipse, random_jordan, write_curve
from moebius_sig.image import reference_image, write_pgm


def _rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


@pytest.fixture(scope="module")
def ellipse_run(tmp_path_factory):
    out = tmp_path_factory.mktemp("ellipse")
    assert main(["ellipse-demo", "--out", str(out)]) == 0
    return out


def test_ellipse_demo_outputs(ellipse_run):
    rows = _rows(ellipse_run / "ellipse_convergence.csv")
    assert len(rows) == 8
    assert [int(r["N"]) for r in rows] == [25 * 2**j for j in range(8)]
    summary = json.loads((ellipse_run / "ellipse_demo.json").read_text())
    assert summary["slopes"]["slope_modified"] == pytest.approx(2.0, abs=0.2)
    assert len(_rows(ellipse_run / "ellipse_transforms.csv")) == 16
    svg = (ellipse_run / "ellipse_convergence.svg").read_text()
    assert "<svg" in svg and "data:" in svg


def test_reruns_are_byte_identical(ellipse_run, tmp_path):
    assert main(["ellipse-demo", "--out", str(tmp_path)]) == 0
    for name in ("ellipse_convergence.csv", "ellipse_transforms.csv", "ellipse_demo.json",
                 "ellipse_convergence.svg", "ellipse_transforms.svg"):
        assert (tmp_path / name).read_bytes() == (ellipse_run / name).read_bytes(), name


def test_format_selection(tmp_path):
    assert main(["ellipse-demo", "--out", str(tmp_path), "--format", "json"]) == 0
    assert sorted(p.name for p in tmp_path.iterdir()) == ["ellipse_demo.json"]


def test_invariant_curve(tmp_path, capsys):
    src = tmp_path / "ellipse.csv"
    write_curve(ellipse(256), src)
    assert main(["invariant", str(src), "--out", str(tmp_path)]) == 0
    d = json.loads((tmp_path / "ellipse_fcr.json").read_text())
    assert d["n_sig"] == 128 and len(d["coeffs"]) == 128
    assert d["V"] == 4
    assert "kind,curve" in capsys.readouterr().out


def test_invariant_image(tmp_path):
    src = tmp_path / "ref.pgm"
    write_pgm(reference_image(81), src)
    assert main(["invariant", str(src), "--out", str(tmp_path)]) == 0
    rows = _rows(tmp_path / "ref_signature.csv")
    assert list(rows[0]) == ["level", "x", "y", "lambda_n", "lambda_t", "sig_u", "sig_v"]
    assert len(rows) > 50


def test_bad_path_exits_nonzero(tmp_path, capsys):
    assert main(["invariant", str(tmp_path / "missing.csv"), "--out", str(tmp_path)]) != 0
    assert "error" in capsys.readouterr().err


def test_bad_arguments_rejected(tmp_path):
    with pytest.raises(SystemExit):
        main(["noise", "--delta-frac", "0.5", "--out", str(tmp_path)])
    with pytest.raises(SystemExit):
        main(["shapes", "--pairs", "0", "--out", str(tmp_path)])


def test_noise_small(tmp_path):
    args = ["noise", "--n", "64", "--noise", "1e-3", "--realizations", "2", "--out", str(tmp_path)]
    assert main(args) == 0
    rows = _rows(tmp_path / "noise_sweep.csv")
    assert [(r["N"], float(r["eps"])) for r in rows] == [("64", 0.0), ("64", 1e-3)]


def test_register_command(tmp_path):
    z, w = tmp_path / "z.csv", tmp_path / "w.csv"
    write_curve(random_jordan(1, 64), z)
    write_curve(random_jordan(2, 64), w)
    assert main(["register", str(z), str(w), "--group", "similarity", "--out", str(tmp_path)]) == 0
    rep = json.loads((tmp_path / "register.json").read_text())
    assert rep["d"] == max(rep["forward"]["r"], rep["backward"]["r"])
    assert rep["forward"]["starts_tried"] == 12


def test_shapes_with_few_pairs(tmp_path):
    assert main(["shapes", "--pairs", "2", "--out", str(tmp_path)]) == 0
    rows = _rows(tmp_path / "shapes_pairs.csv")
    assert len(rows) == 120
    assert sum(r["d_moebius"] != "" for r in rows) == 2
    s = json.loads((tmp_path / "shapes_summary.json").read_text())
    assert s["n_pairs"] == 120 and len(s["seeds"]) == 16


@pytest.mark.skipif(shutil.which("moebius-sig") is None, reason="console script not installed")
def test_console_script(tmp_path):
    out = tmp_path / "never"
    r = subprocess.run(["moebius-sig", "invariant", str(tmp_path / "nope.pgm"), "--out", str(out)],
                       capture_output=True, text=True)
    assert r.returncode != 0
    assert not out.exists()
    r = subprocess.run([sys.executable, "-m", "moebius_sig.cli", "--help"], capture_output=True, text=True)
    assert r.returncode == 0 and "image-demo" in r.stdout
