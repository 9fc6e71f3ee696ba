from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from equisphere.errors import DegenerateFace, ParseError, TopologyError
from equisphere.mesh import TriMesh, area_scale, face_area, load_mesh, normalize_area, read_arrays, save_mesh
from equisphere.synth import icosahedron, icosphere, open_disk, tetrahedron, torus


def test_face_area_examples():
    assert face_area([0, 0, 0], [1, 0, 0], [0, 1, 0]) == pytest.approx(0.5)
    assert face_area([0, 0, 0], [1, 1, 1], [2, 2, 2]) == pytest.approx(0.0, abs=1e-15)
    assert face_area([0, 0, 0], [2, 0, 0], [0, 3, 0]) == pytest.approx(3.0)


def test_face_area_vectorized():
    p = np.array([[0.0, 0, 0], [0, 0, 0]])
    q = np.array([[1.0, 0, 0], [2, 0, 0]])
    r = np.array([[0.0, 1, 0], [0, 3, 0]])
    np.testing.assert_allclose(face_area(p, q, r), [0.5, 3.0])


def test_tetrahedron_off(tmp_path):
    v, f = tetrahedron()
    path = tmp_path / "tet.off"
    save_mesh(path, v, f)
    m = load_mesh(path)
    assert (m.n_vertices, m.n_edges, m.n_faces) == (4, 6, 4)
    assert m.euler_characteristic == 2


def test_icosahedron_counts(tmp_path):
    path = tmp_path / "ico.off"
    save_mesh(path, *icosahedron())
    m = load_mesh(path)
    assert (m.n_vertices, m.n_edges, m.n_faces) == (12, 30, 20)


def test_torus_rejected(tmp_path):
    path = tmp_path / "torus.off"
    save_mesh(path, *torus())
    with pytest.raises(TopologyError):
        load_mesh(path)


def test_open_disk_rejected():
    with pytest.raises(TopologyError):
        TriMesh.from_arrays(*open_disk())


def test_obj_roundtrip(tmp_path):
    v, f = icosphere(1)
    path = tmp_path / "m.obj"
    save_mesh(path, v, f)
    v2, f2 = read_arrays(path)
    assert np.array_equal(v, v2)
    assert np.array_equal(f, f2)


def test_obj_polygon_rejected(tmp_path):
    path = tmp_path / "quad.obj"
    path.write_text("v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nf 1 2 3 4\n")
    with pytest.raises(ParseError):
        read_arrays(path)


def test_binary_rejected(tmp_path):
    path = tmp_path / "bin.off"
    path.write_bytes(b"OFF\n\x00\x01\x02")
    with pytest.raises(ParseError):
        read_arrays(path)


def test_unknown_suffix(tmp_path):
    path = tmp_path / "m.ply"
    path.write_text("ply\n")
    with pytest.raises(ParseError):
        read_arrays(path)


def test_degenerate_face():
    v, f = tetrahedron()
    v = v.copy()
    v[3] = (v[0] + v[1]) / 2
    v[2] = v[0] + 2 * (v[1] - v[0])
    with pytest.raises(DegenerateFace):
        TriMesh.from_arrays(v, f)


def test_repeated_index():
    v, f = tetrahedron()
    f = f.copy()
    f[0] = [0, 0, 1]
    with pytest.raises(DegenerateFace):
        TriMesh.from_arrays(v, f)


def test_orientation_repaired_outward():
    v, f = icosphere(1)
    f = f.copy()
    f[::3] = f[::3, ::-1]
    m = TriMesh.from_arrays(v, f)
    tri = m.vertices[m.faces]
    n = np.cross(tri[:, 1] - tri[:, 0], tri[:, 2] - tri[:, 0])
    assert np.all(np.einsum("ij,ij->i", n, tri.mean(axis=1)) > 0)


def test_all_inward_flipped():
    v, f = icosphere(1)
    m = TriMesh.from_arrays(v, f[:, ::-1])
    tri = m.vertices[m.faces]
    n = np.cross(tri[:, 1] - tri[:, 0], tri[:, 2] - tri[:, 0])
    assert np.all(np.einsum("ij,ij->i", n, tri.mean(axis=1)) > 0)


def test_edge_tables_consistent(ico2):
    m = ico2
    for k in range(0, m.n_edges, 17):
        i, j = m.edges[k]
        l, r = m.edge_opposite[k]
        fl, fr = m.edge_faces[k]
        assert sorted(m.faces[fl]) == sorted([i, l, j])
        assert sorted(m.faces[fr]) == sorted([j, r, i])
        # face [i, l, j] traverses j -> i in cyclic order
        face = list(m.faces[fl])
        pos = face.index(j)
        assert face[(pos + 1) % 3] == i


def test_normalize_unit_sphere():
    m = TriMesh.from_arrays(*icosphere(4))
    assert area_scale(m) == pytest.approx(1.0, abs=1e-2)
    assert normalize_area(m).total_area == pytest.approx(4 * np.pi, rel=1e-12)


def test_normalize_radius_two():
    v, f = icosphere(3)
    s1 = area_scale(TriMesh.from_arrays(v, f))
    s2 = area_scale(TriMesh.from_arrays(2 * v, f))
    assert s2 == pytest.approx(s1 / 2, rel=1e-12)


def test_normalize_tetrahedron():
    m = TriMesh.from_arrays(*tetrahedron(1.0))
    assert m.total_area == pytest.approx(np.sqrt(3), rel=1e-12)
    assert area_scale(m) == pytest.approx(np.sqrt(4 * np.pi / np.sqrt(3)), rel=1e-12)
    assert normalize_area(m).total_area == pytest.approx(4 * np.pi, rel=1e-12)


@settings(max_examples=30, deadline=None)
@given(st.floats(0.01, 100.0))
def test_normalize_scale_invariant(scale):
    v, f = icosphere(1)
    m = normalize_area(TriMesh.from_arrays(scale * v, f))
    assert m.total_area == pytest.approx(4 * np.pi, rel=1e-12)


def test_arrays_read_only(ico2):
    with pytest.raises(ValueError):
        ico2.vertices[0, 0] = 1.0


def test_vertex_areas_sum(ico2):
    assert ico2.vertex_areas().sum() == pytest.approx(ico2.total_area, rel=1e-12)
