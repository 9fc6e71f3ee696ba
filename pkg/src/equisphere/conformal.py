"""Spherical conformal initializer.

A face with the most regular shape is punctured and pinned to a large
equilateral triangle in the plane; the remaining vertices solve the
classical cotangent Laplace equation, the result is lifted to the sphere by
inverse stereographic projection, and Mobius transformations balance the
area-weighted mass center at the origin.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import CenteringFailed
from .laplacian import cot_laplacian, folded_faces
from .mesh import TriMesh
from .sphere import inverse_stereographic
from .solver import InteriorFactor


@dataclass(frozen=True)
class ConformalMap:
    f0: np.ndarray
    quality: float
    angle_error: float
    centered: bool
    center_norm: float
    iterations: int
    pinned_face: int


def regular_face(mesh: TriMesh) -> int:
    """Index of the face with the largest ``4 sqrt(3) A / (a^2 + b^2 + c^2)``."""
    tri = mesh.vertices[mesh.faces]
    s = sum(np.sum((tri[:, (c + 1) % 3] - tri[:, c]) ** 2, axis=1) for c in range(3))
    q = 4.0 * np.sqrt(3.0) * mesh.face_areas / s
    return int(np.argmax(q))


def mobius_shift(f: np.ndarray, a: np.ndarray) -> np.ndarray:
    """Sphere automorphism ``x -> (1 - |a|^2)(x - a) / |x - a|^2 - a``.

    Moves mass away from ``a`` (``|a| < 1``); the identity for ``a = 0``.
    """
    a = np.asarray(a, dtype=float)
    d = f - a
    out = (1.0 - a @ a) * d / np.sum(d * d, axis=1, keepdims=True) - a
    return out / np.linalg.norm(out, axis=1, keepdims=True)


def mass_center(f: np.ndarray, weights: np.ndarray) -> np.ndarray:
    """Unnormalized weighted sum ``sum_l a_l f_l``."""
    return weights @ f


def corner_angles(points: np.ndarray, faces: np.ndarray) -> np.ndarray:
    tri = points[faces]
    out = np.empty(faces.shape)
    for c in range(3):
        u = tri[:, (c + 1) % 3] - tri[:, c]
        v = tri[:, (c + 2) % 3] - tri[:, c]
        out[:, c] = np.arctan2(np.linalg.norm(np.cross(u, v), axis=1), np.einsum("ij,ij->i", u, v))
    return out


def angle_errors(mesh: TriMesh, f) -> np.ndarray:
    """Per-corner angle difference (radians) between image and domain."""
    return corner_angles(np.asarray(f, float), mesh.faces) - corner_angles(mesh.vertices, mesh.faces)


def angle_distortion(mesh: TriMesh, f) -> float:
    """Mean absolute corner angle error in radians."""
    return float(np.mean(np.abs(angle_errors(mesh, f))))


def cosine_distortion(mesh: TriMesh, f) -> float:
    """Mean of ``1 - cos(angle error)`` over all corners; zero for a conformal map."""
    return float(np.mean(1.0 - np.cos(angle_errors(mesh, f))))


def planar_harmonic(mesh: TriMesh, radius: float = 10.0, face: int | None = None) -> tuple[np.ndarray, int]:
    """Complex harmonic coordinates with one face pinned to an equilateral triangle."""
    face = regular_face(mesh) if face is None else face
    pinned = mesh.faces[face]
    z = np.zeros(mesh.n_vertices, dtype=complex)
    z[pinned] = radius * np.exp(2j * np.pi * np.arange(3) / 3.0)
    free = np.setdiff1d(np.arange(mesh.n_vertices), pinned)
    L = cot_laplacian(mesh)
    L_II = L[free][:, free]
    L_IB = L[free][:, pinned]
    z[free] = InteriorFactor(L_II).solve(-(L_IB @ z[pinned]))
    return z, face


def conformal_initialize(
    mesh: TriMesh,
    radius: float = 10.0,
    tol: float = 1e-6,
    max_iter: int = 100,
    damping: float = 0.5,
) -> ConformalMap:
    """Conformal spherical map of a genus-zero mesh with balanced mass center.

    Parameters
    ----------
    mesh : TriMesh
        Area-normalized mesh.
    radius : float
        Circumradius of the pinned triangle in the plane.
    tol : float
        Stopping tolerance on ``||sum_l a_l f_l||`` with barycentric
        vertex areas ``a_l``.
    max_iter : int
        Maximum number of Mobius centering steps.
    damping : float
        Each step applies :func:`mobius_shift` with ``damping * c`` where
        ``c`` is the normalized mass center.

    Returns
    -------
    ConformalMap
        ``quality`` is :func:`cosine_distortion`, ``angle_error`` the mean
        absolute angle error in radians.  ``centered`` is False (and a :class:`CenteringFailed` warning is
        issued) if the tolerance was not met.
    """
    z, face = planar_harmonic(mesh, radius)
    f = inverse_stereographic(z)
    if folded_faces(mesh, f).sum() > mesh.n_faces // 2:
        f[:, 1] *= -1.0
    weights = mesh.vertex_areas()
    total = weights.sum()
    centered = False
    it = 0
    for it in range(max_iter + 1):
        s = mass_center(f, weights)
        if np.linalg.norm(s) <= tol:
            centered = True
            break
        if it == max_iter:
            break
        f = mobius_shift(f, damping * s / total)
    center = float(np.linalg.norm(mass_center(f, weights)))
    if not centered:
        warnings.warn(f"mass center {center:.2e} after {max_iter} steps", CenteringFailed, stacklevel=2)
    return ConformalMap(
        f0=f,
        quality=cosine_distortion(mesh, f),
        angle_error=angle_distortion(mesh, f),
        centered=centered,
        center_norm=center,
        iterations=it,
        pinned_face=face,
    )
