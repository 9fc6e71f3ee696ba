from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.spatial.transform import Rotation

from equisphere.diagnostics import (
    ChartSample,
    _gamma,
    assemble_H,
    build_transfer,
    diagnose_snapshots,
    decomposition_residual,
    r_linear_estimate,
    rate_window,
    spectral_radius,
    spectral_track,
    stencil_delta,
    weight_delta,
    write_csv,
)
from equisphere.errors import DimensionMismatch, SingularGamma
from equisphere.mesh import TriMesh, normalize_area
from equisphere.sem import IndexPartition, SEMConfig, region_sets, run_sem
from equisphere.sphere import chart_lift, chart_project
from equisphere.synth import icosphere


def _unit(mesh):
    R = Rotation.from_rotvec([0.2, -0.1, 0.3]).as_matrix()
    f = mesh.vertices @ R.T
    return f / np.linalg.norm(f, axis=1)[:, None]


def _sample(h):
    return ChartSample(f=chart_lift(h, 1), h=np.asarray(h, complex))


def _random_stencil(rng, scale):
    h0 = {t: complex(*rng.uniform(-1.5, 1.5, 2)) for t in "ijlr"}
    h1 = {t: h0[t] + scale * complex(*rng.normal(size=2)) for t in "ijlr"}
    f0 = {t: chart_lift(np.array([h0[t]]), 1)[0] for t in "ijlr"}
    f1 = {t: chart_lift(np.array([h1[t]]), 1)[0] for t in "ijlr"}
    return f1, f0, h1, h0


def test_zero_displacement(rng):
    f1, f0, h1, h0 = _random_stencil(rng, 0.0)
    wd = stencil_delta(f1, f0, h1, h0, 0.3, 0.4)
    assert all(e == 0 for e in wd.eps.values())
    assert wd.w_new - wd.w_old == 0
    assert wd.residual == 0


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(1e-6, 1e-1))
def test_decomposition_identity(seed, scale):
    rng = np.random.default_rng(seed)
    f1, f0, h1, h0 = _random_stencil(rng, scale)
    try:
        wd = stencil_delta(f1, f0, h1, h0, *rng.uniform(0.05, 1.0, 2))
    except Exception:
        return
    assert wd.residual <= 1e-10 * max(1.0, abs(wd.w_new), abs(wd.w_old))


def test_single_vertex_move(ico2):
    f = _unit(ico2)
    h = chart_project(f, 1)
    i = int(np.argmin(np.abs(h)))
    h2 = h.copy()
    h2[i] += 1e-3 * (1 + 1j)
    old, new = _sample(h), _sample(h2)
    for j in np.flatnonzero(ico2.adjacency()[i].toarray().ravel()):
        wd = weight_delta((i, j), ico2, new, old)
        assert wd.residual <= 1e-10
        assert wd.eps["i"] == pytest.approx(1e-3 * (1 + 1j))
        assert wd.eps["j"] == 0
    assert decomposition_residual(ico2, [i], new, old) <= 1e-10


def _small_partition(mesh, f):
    mod1 = np.abs(chart_project(f, 1))
    I1, B1 = region_sets(mesh, mod1, 1.1)
    I2, B2 = region_sets(mesh, 1.0 / mod1, 1.1)
    return IndexPartition(I1, B1, I2, B2, 1.1)


def test_H_identical_states(ico2):
    f = _unit(ico2)
    part = _small_partition(ico2, f)
    s = _sample(chart_project(f, 1))
    H = assemble_H(1, ico2, part, s, s)
    assert np.max(np.abs(H.lhs)) <= 1e-12
    assert np.max(np.abs(H.eps)) == 0
    assert H.residual == 0.0 or np.max(np.abs(H.H_I @ H.eps[: len(part.I1)])) == 0


def test_H_one_perturbed_vertex(ico2):
    f = _unit(ico2)
    part = _small_partition(ico2, f)
    h = chart_project(f, 1)
    h2 = h.copy()
    h2[part.I1[3]] += 2e-3 - 1e-3j
    H = assemble_H(1, ico2, part, _sample(h2), _sample(h))
    assert np.max(np.abs(H.lhs)) > 0
    assert H.residual <= 1e-9


def test_recursion_small_icosphere():
    m = normalize_area(TriMesh.from_arrays(*icosphere(2)))
    snaps = []
    st_, _ = run_sem(m, SEMConfig(max_iter=7, tol=1e-14), snapshots=snaps)
    b = build_transfer(m, st_.partition, snaps, 5)
    assert b.recursion_residual <= 1e-8
    c = st_.partition.counts()
    assert len(b.zeta) == c["n1"] + c["m1"] + 2 * (c["n2"] + c["m2"])
    # S is unit lower block triangular
    assert np.allclose(np.diag(b.S), 1.0)
    assert np.count_nonzero(np.triu(b.S, 1)) == 0


def test_transfer_needs_snapshots(ell2_run):
    mesh, st_, _, snaps = ell2_run
    with pytest.raises(DimensionMismatch):
        build_transfer(mesh, st_.partition, snaps, 1)
    with pytest.raises(DimensionMismatch):
        build_transfer(mesh, st_.partition, snaps, len(snaps) - 1)


def test_converged_sequence_trivial(ell2_run):
    mesh, st_, _, snaps = ell2_run
    frozen = [snaps[3]] * 4
    b = build_transfer(mesh, st_.partition, frozen, 2)
    assert np.max(np.abs(b.zeta)) == 0
    assert b.recursion_residual == 0.0


def test_singular_gamma():
    with pytest.raises(SingularGamma):
        _gamma(np.array([1.0, 1e-8]), np.array([1.0, 1e-8]))


def test_spectral_track_products():
    A = np.array([[0.5, 1.0], [0.0, 0.25]])
    B = np.array([[0.0, 1.0], [-1.0, 0.0]])
    out = spectral_track([A, B])
    assert out[0]["spectral_radius"] == pytest.approx(0.5)
    assert out[1]["spectral_radius"] == pytest.approx(spectral_radius(B @ A))
    assert out[1]["max_abs"] == pytest.approx(np.max(np.abs(B @ A)))


def test_stationary_oscillation_radius():
    out = spectral_track([np.eye(6)] * 5)
    assert all(r["spectral_radius"] == pytest.approx(1.0) for r in out)


def test_geometric_rate():
    u = np.array([0.6 + 0.8j, -0.5, 0.25j])
    hstar = np.array([0.3, 0.2j, -1.0])
    hist = [hstar + 0.9**k * u for k in range(300)]
    est = r_linear_estimate(hist, hstar)
    assert abs(est[199] - 0.9) <= 1e-3
    assert np.all(np.abs(est[99:] - 0.9) <= 1e-3)
    v = 4.0 * u
    est = r_linear_estimate([0.9**k * v for k in range(300)], np.zeros(3))
    np.testing.assert_allclose(est, 0.9 * 4.0 ** (1.0 / np.arange(1, 300)), rtol=1e-10)


def test_constant_history_sentinel():
    h = np.array([1.0 + 2j, 3.0])
    assert np.all(r_linear_estimate([h] * 10, h) == 0.0)


def test_rate_window():
    assert list(rate_window(100, 60)) == list(range(40, 100))
    assert list(rate_window(10, 60)) == list(range(1, 10))


def test_diagnose_snapshots_series(ell2_run, tmp_path):
    mesh, st_, _, snaps = ell2_run
    run = diagnose_snapshots(mesh, st_.partition, snaps, k_max=6, window=5)
    assert [r[0] for r in run.residuals] == [2, 3, 4, 5, 6]
    assert [r[0] for r in run.rates] == [3, 4, 5, 6, 7]
    assert all(run.checks().values())
    write_csv(tmp_path / "s.csv", ("k", "max_abs", "spectral_radius"), run.spectral)
    lines = (tmp_path / "s.csv").read_text().splitlines()
    assert lines[0] == "k,max_abs,spectral_radius"
    assert len(lines) == 6
