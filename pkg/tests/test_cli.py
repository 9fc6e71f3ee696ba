from __future__ import annotations

import csv
import json
import subprocess
import sys

import numpy as np
import pytest

from equisphere.cli import EXIT_CODES, main, read_config
from equisphere.mesh import TriMesh, load_mesh, read_arrays, save_mesh
from equisphere.sem import ConvergenceReport
from equisphere.synth import torus


def _synth(tmp_path, *args):
    out = tmp_path / f"{args[0]}.off"
    assert main(["synth", *args, "-o", str(out)]) == 0
    return out


def test_synth_icosphere_counts(tmp_path):
    m = load_mesh(_synth(tmp_path, "icosphere", "--level", "4"))
    assert (m.n_vertices, m.n_faces) == (2562, 5120)


def test_synth_ellipsoid(tmp_path):
    m = load_mesh(_synth(tmp_path, "ellipsoid", "--axes", "1,1,1.5", "--level", "5"))
    assert m.euler_characteristic == 2
    v = m.vertices
    np.testing.assert_allclose(v[:, 0] ** 2 + v[:, 1] ** 2 + (v[:, 2] / 1.5) ** 2, 1.0, atol=1e-12)


def test_synth_deterministic(tmp_path):
    a, b = tmp_path / "a.off", tmp_path / "b.off"
    assert main(["synth", "gaussian-bump-sphere", "--seed", "7", "-o", str(a)]) == 0
    assert main(["synth", "gaussian-bump-sphere", "--seed", "7", "-o", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_synth_bad_shape(tmp_path):
    with pytest.raises(SystemExit):
        main(["synth", "cube"])


def test_param_icosphere(tmp_path):
    src = _synth(tmp_path, "icosphere", "--level", "5")
    out, rep = tmp_path / "out.obj", tmp_path / "r.json"
    assert main(["param", str(src), "-o", str(out), "--report", str(rep)]) == 0
    report = ConvergenceReport.from_json(rep.read_text())
    assert report.termination_reason == "tolerance"
    assert report.final["mean"] - 1 <= 1e-3
    v, f = read_arrays(out)
    np.testing.assert_allclose(np.linalg.norm(v, axis=1), 1.0, atol=1e-12)
    assert np.array_equal(f, load_mesh(src).faces)


def test_param_torus(tmp_path, capsys):
    src = tmp_path / "torus.off"
    save_mesh(src, *torus())
    assert main(["param", str(src)]) == 1
    assert "TopologyError" in capsys.readouterr().err


def test_param_missing_file(tmp_path, capsys):
    assert main(["param", str(tmp_path / "nope.off")]) == 1
    assert capsys.readouterr().err.startswith("error:")


def test_param_max_iter_zero(tmp_path):
    src = _synth(tmp_path, "ellipsoid", "--level", "2")
    out, rep = tmp_path / "init.obj", tmp_path / "r.json"
    assert main(["param", str(src), "-o", str(out), "--report", str(rep), "--max-iter", "0"]) == 2
    assert out.exists()
    d = json.loads(rep.read_text())
    assert d["iterations"] == 0 and d["termination_reason"] == "max_iter"


def test_param_config_and_init(tmp_path):
    src = _synth(tmp_path, "ellipsoid", "--level", "2")
    first = tmp_path / "first.obj"
    assert main(["param", str(src), "-o", str(first), "--max-iter", "0"]) == 2
    rep = tmp_path / "r.json"
    cfg = tmp_path / "run.cfg"
    cfg.write_text(f"# run settings\ntol = 1e-12\nmax_iter = 4\ninit_bypass_path = {first}\nreport_path = {rep}\n")
    out = tmp_path / "out.obj"
    code = main(["param", str(src), "-o", str(out), "--config", str(cfg), "--snapshot-every", "2"])
    d = json.loads(rep.read_text())
    assert code == EXIT_CODES[d["termination_reason"]]
    assert d["config"]["tol"] == 1e-12 and d["config"]["max_iter"] == 4
    assert (tmp_path / "out.00002.obj").exists()


def test_param_init_wrong_size(tmp_path, capsys):
    src = _synth(tmp_path, "ellipsoid", "--level", "2")
    bad = tmp_path / "bad.obj"
    save_mesh(bad, np.eye(3), np.array([[0, 1, 2]]))
    assert main(["param", str(src), "--init", str(bad)]) == 1
    assert "init" in capsys.readouterr().err


def test_read_config_errors(tmp_path):
    p = tmp_path / "c.cfg"
    p.write_text("bogus = 1\n")
    with pytest.raises(ValueError):
        read_config(p)
    p.write_text("tol 1e-3\n")
    with pytest.raises(ValueError):
        read_config(p)


def test_exit_code_table():
    assert EXIT_CODES == {"tolerance": 0, "max_iter": 2, "stagnation": 2, "quasi_periodic_suspected": 3}


def test_diagnose_too_large(tmp_path, capsys):
    src = _synth(tmp_path, "icosphere", "--level", "5")
    assert main(["diagnose", str(src)]) == 1
    assert "--force" in capsys.readouterr().err


def test_diagnose_window(tmp_path, capsys):
    src = _synth(tmp_path, "icosphere", "--level", "2")
    outdir = tmp_path / "diag"
    code = main(["diagnose", str(src), "-o", str(outdir), "--max-iter", "65", "--tol", "1e-14", "--k-max", "3", "--window", "60"])
    assert code == 0
    text = capsys.readouterr().out
    assert text.count("PASS") == 3
    with open(outdir / "rates.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert [int(r["k"]) for r in rows] == list(range(5, 65))
    with open(outdir / "residuals.csv") as fh:
        assert [int(r["k"]) for r in csv.DictReader(fh)] == [2, 3]
    with open(outdir / "spectral.csv") as fh:
        assert next(csv.reader(fh)) == ["k", "max_abs", "spectral_radius"]


def test_stats(tmp_path, capsys):
    src = _synth(tmp_path, "icosphere", "--level", "2")
    v, f = read_arrays(src)
    sph = tmp_path / "s.obj"
    save_mesh(sph, v, f)
    assert main(["stats", str(src), str(sph), "--json"]) == 0
    d = json.loads(capsys.readouterr().out)
    assert d["folded_faces"] == 0
    assert d["mean"] > 0


def test_module_entry_with_thread_cap(tmp_path):
    out = tmp_path / "t.off"
    env = {"SEM_THREADS": "1", "PATH": "/usr/bin:/bin"}
    r = subprocess.run(
        [sys.executable, "-m", "equisphere", "synth", "icosphere", "--level", "1", "-o", str(out)],
        env=env, capture_output=True, text=True,
    )
    assert r.returncode == 0, r.stderr
    assert TriMesh.from_arrays(*read_arrays(out)).n_vertices == 42
