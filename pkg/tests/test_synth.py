from __future__ import annotations

import numpy as np
import pytest

from equisphere.mesh import TriMesh, normalize_area
from equisphere.synth import SHAPES, ellipsoid, gaussian_bump_sphere, icosphere, make_shape


@pytest.mark.parametrize("level", [0, 1, 2, 3, 4])
def test_icosphere_counts(level):
    v, f = icosphere(level)
    assert len(v) == 10 * 4**level + 2
    assert len(f) == 20 * 4**level
    np.testing.assert_allclose(np.linalg.norm(v, axis=1), 1.0, atol=1e-15)


def test_ellipsoid_axes():
    v, _ = ellipsoid((1.0, 2.0, 3.0), 2)
    np.testing.assert_allclose(np.sum((v / [1.0, 2.0, 3.0]) ** 2, axis=1), 1.0, atol=1e-12)
    m = normalize_area(TriMesh.from_arrays(*ellipsoid((1, 1, 1.5), 5)))
    assert m.euler_characteristic == 2
    assert m.total_area == pytest.approx(4 * np.pi, rel=1e-12)


def test_bump_deterministic():
    a = gaussian_bump_sphere(2, seed=7)
    b = gaussian_bump_sphere(2, seed=7)
    c = gaussian_bump_sphere(2, seed=8)
    assert np.array_equal(a[0], b[0])
    assert not np.array_equal(a[0], c[0])


@pytest.mark.parametrize("shape", SHAPES)
def test_all_shapes_genus_zero(shape):
    m = TriMesh.from_arrays(*make_shape(shape, 2))
    assert m.euler_characteristic == 2


def test_unknown_shape():
    with pytest.raises(ValueError):
        make_shape("cube")
