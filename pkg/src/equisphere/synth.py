"""Synthetic benchmark surfaces.

Every generator returns raw ``(vertices, faces)`` arrays so that invalid
surfaces (torus, open disk) can be produced for topology tests; wrap
valid ones with :meth:`TriMesh.from_arrays`.
"""

from __future__ import annotations

import numpy as np

SHAPES = ("icosphere", "ellipsoid", "gaussian-bump-sphere", "peanut")


def icosahedron() -> tuple[np.ndarray, np.ndarray]:
    t = (1.0 + np.sqrt(5.0)) / 2.0
    v = np.array(
        [
            [-1, t, 0], [1, t, 0], [-1, -t, 0], [1, -t, 0],
            [0, -1, t], [0, 1, t], [0, -1, -t], [0, 1, -t],
            [t, 0, -1], [t, 0, 1], [-t, 0, -1], [-t, 0, 1],
        ],
        dtype=float,
    )
    f = np.array(
        [
            [0, 11, 5], [0, 5, 1], [0, 1, 7], [0, 7, 10], [0, 10, 11],
            [1, 5, 9], [5, 11, 4], [11, 10, 2], [10, 7, 6], [7, 1, 8],
            [3, 9, 4], [3, 4, 2], [3, 2, 6], [3, 6, 8], [3, 8, 9],
            [4, 9, 5], [2, 4, 11], [6, 2, 10], [8, 6, 7], [9, 8, 1],
        ],
        dtype=np.int64,
    )
    return v / np.linalg.norm(v, axis=1, keepdims=True), f


def tetrahedron(edge: float = 1.0) -> tuple[np.ndarray, np.ndarray]:
    """Regular tetrahedron centred at the origin."""
    v = np.array([[1, 1, 1], [1, -1, -1], [-1, 1, -1], [-1, -1, 1]], dtype=float)
    v *= edge / (2.0 * np.sqrt(2.0))
    f = np.array([[0, 1, 2], [0, 3, 1], [0, 2, 3], [1, 3, 2]], dtype=np.int64)
    return v, f


def _subdivide(v: np.ndarray, f: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    n = len(v)
    e = np.concatenate([f[:, [0, 1]], f[:, [1, 2]], f[:, [2, 0]]])
    e.sort(axis=1)
    uniq, inv = np.unique(e[:, 0] * n + e[:, 1], return_inverse=True)
    a, b = uniq // n, uniq % n
    mid = v[a] + v[b]
    mid /= np.linalg.norm(mid, axis=1, keepdims=True)
    m = n + inv.reshape(3, -1)
    m01, m12, m20 = m[0], m[1], m[2]
    nf = np.concatenate(
        [
            np.stack([f[:, 0], m01, m20], axis=1),
            np.stack([f[:, 1], m12, m01], axis=1),
            np.stack([f[:, 2], m20, m12], axis=1),
            np.stack([m01, m12, m20], axis=1),
        ]
    )
    return np.vstack([v, mid]), nf


def icosphere(level: int = 3) -> tuple[np.ndarray, np.ndarray]:
    """Unit icosphere with ``10 * 4**level + 2`` vertices."""
    if level < 0:
        raise ValueError("level must be non-negative")
    v, f = icosahedron()
    for _ in range(level):
        v, f = _subdivide(v, f)
    return v, f


def ellipsoid(axes=(1.0, 1.0, 1.5), level: int = 3) -> tuple[np.ndarray, np.ndarray]:
    """Icosphere stretched along the coordinate axes."""
    a = np.asarray(axes, dtype=float)
    if a.shape != (3,) or np.any(a <= 0):
        raise ValueError("axes must be three positive numbers")
    v, f = icosphere(level)
    return v * a, f


def gaussian_bump_sphere(
    level: int = 3, n_bumps: int = 3, amplitude: float = 0.3, width: float = 0.4, seed: int = 0
) -> tuple[np.ndarray, np.ndarray]:
    """Unit sphere with radial Gaussian bumps at random centres.

    The radius at direction ``x`` is ``1 + amplitude * sum_k exp(-d_k^2 /
    (2 width^2))`` with ``d_k`` the geodesic distance to bump centre ``k``.
    Centres come from ``numpy.random.default_rng(seed)``.
    """
    if amplitude <= -1.0:
        raise ValueError("amplitude must exceed -1")
    v, f = icosphere(level)
    rng = np.random.default_rng(seed)
    c = rng.normal(size=(n_bumps, 3))
    c /= np.linalg.norm(c, axis=1, keepdims=True)
    d = np.arccos(np.clip(v @ c.T, -1.0, 1.0))
    r = 1.0 + amplitude * np.exp(-(d**2) / (2.0 * width**2)).sum(axis=1)
    return v * r[:, None], f


def peanut(level: int = 3, length: float = 1.6, waist: float = 0.35) -> tuple[np.ndarray, np.ndarray]:
    """Elongated sphere pinched at its equator."""
    v, f = icosphere(level)
    r = 1.0 - waist * np.exp(-(v[:, 2] ** 2) / 0.1)
    out = v * r[:, None]
    out[:, 2] *= length
    return out, f


def torus(R: float = 1.0, r: float = 0.35, nu: int = 24, nv: int = 12) -> tuple[np.ndarray, np.ndarray]:
    """Genus-one torus grid."""
    u = np.arange(nu) * 2 * np.pi / nu
    w = np.arange(nv) * 2 * np.pi / nv
    uu, ww = np.meshgrid(u, w, indexing="ij")
    v = np.stack(
        [(R + r * np.cos(ww)) * np.cos(uu), (R + r * np.cos(ww)) * np.sin(uu), r * np.sin(ww)],
        axis=-1,
    ).reshape(-1, 3)
    idx = np.arange(nu * nv).reshape(nu, nv)
    a = idx
    b = np.roll(idx, -1, axis=0)
    c = np.roll(np.roll(idx, -1, axis=0), -1, axis=1)
    d = np.roll(idx, -1, axis=1)
    f = np.concatenate(
        [np.stack([a, b, c], -1).reshape(-1, 3), np.stack([a, c, d], -1).reshape(-1, 3)]
    )
    return v, f


def open_disk(level: int = 2) -> tuple[np.ndarray, np.ndarray]:
    """Lower half of an icosphere: a disk with one boundary loop."""
    v, f = icosphere(level)
    keep = np.all(v[f, 2] < 1e-9, axis=1)
    f = f[keep]
    used = np.unique(f)
    remap = -np.ones(len(v), dtype=np.int64)
    remap[used] = np.arange(len(used))
    return v[used], remap[f]


def make_shape(
    shape: str,
    level: int = 3,
    axes=(1.0, 1.0, 1.5),
    seed: int = 0,
    amplitude: float = 0.3,
    n_bumps: int = 3,
) -> tuple[np.ndarray, np.ndarray]:
    """Dispatch on a shape name from :data:`SHAPES`."""
    if shape == "icosphere":
        return icosphere(level)
    if shape == "ellipsoid":
        return ellipsoid(axes, level)
    if shape == "gaussian-bump-sphere":
        return gaussian_bump_sphere(level, n_bumps=n_bumps, amplitude=amplitude, seed=seed)
    if shape == "peanut":
        return peanut(level)
    raise ValueError(f"unknown shape {shape!r}; choose from {', '.join(SHAPES)}")
