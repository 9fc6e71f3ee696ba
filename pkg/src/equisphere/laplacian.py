"""Stretch-weighted cotangent Laplacian, stretch factors and stretch energy.

For an edge ``(i, j)`` with opposite vertices ``l`` and ``r`` the weight is

    w_ij = -1/2 (cot theta_l(f) / sigma_l + cot theta_r(f) / sigma_r)

where the angles are measured in the image triangles and ``sigma = |T| /
|f(T)|`` is the per-face stretch factor.  Since ``cot theta / sigma`` equals
``(f_l - f_i) . (f_l - f_j) / (2 |T|)`` the production path evaluates the
dot-product form over domain areas; the cotangent form is kept for
cross-checks.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .errors import DegenerateImage, RegionMismatch
from .mesh import TriMesh, face_area

IMAGE_AREA_TOL = 1e-15


def _check_image(area, where=""):
    area = np.asarray(area)
    if np.any(area < IMAGE_AREA_TOL):
        raise DegenerateImage(f"image triangle area below {IMAGE_AREA_TOL:g}{where}")


def stretch_factors(mesh: TriMesh, f) -> np.ndarray:
    """Per-face area ratio ``|T| / |f(T)|``."""
    f = np.asarray(f, dtype=float)
    tri = f[mesh.faces]
    img = face_area(tri[:, 0], tri[:, 1], tri[:, 2])
    _check_image(img)
    return mesh.face_areas / img


def stretch_factor(face, mesh: TriMesh, f) -> float:
    """Area ratio ``|T| / |f(T)|`` for one face given by index or vertex triple."""
    f = np.asarray(f, dtype=float)
    if np.ndim(face) == 0:
        a, b, c = mesh.faces[int(face)]
    else:
        a, b, c = (int(x) for x in face)
    dom = float(face_area(mesh.vertices[a], mesh.vertices[b], mesh.vertices[c]))
    img = float(face_area(f[a], f[b], f[c]))
    _check_image(img)
    return dom / img


# -- single-stencil forms -------------------------------------------------

def _half_cot_over_sigma_dot(fi, fj, fo, area):
    return np.dot(fo - fi, fo - fj) / (4.0 * area)


def _half_cot_over_sigma_cot(fi, fj, fo, area):
    u = np.asarray(fi, float) - fo
    v = np.asarray(fj, float) - fo
    cr = np.linalg.norm(np.cross(u, v))
    img = 0.5 * cr
    _check_image(img)
    theta = np.arctan2(cr, np.dot(u, v))
    sigma = area / img
    return 0.5 * (np.cos(theta) / np.sin(theta)) / sigma


def stencil_weight_dot(fi, fj, fl, fr, area_l, area_r) -> float:
    """Edge weight from image points and domain areas, dot-product form.

    ``fl`` or ``fr`` may be ``None`` to drop that side (region boundary).
    """
    fi = np.asarray(fi, float)
    fj = np.asarray(fj, float)
    w = 0.0
    for fo, area in ((fl, area_l), (fr, area_r)):
        if fo is None:
            continue
        fo = np.asarray(fo, float)
        _check_image(face_area(fi, fo, fj))
        w -= _half_cot_over_sigma_dot(fi, fj, fo, area)
    return float(w)


def stencil_weight_cot(fi, fj, fl, fr, area_l, area_r) -> float:
    """Edge weight from image angles and stretch factors, cotangent form."""
    w = 0.0
    for fo, area in ((fl, area_l), (fr, area_r)):
        if fo is None:
            continue
        w -= _half_cot_over_sigma_cot(fi, fj, np.asarray(fo, float), area)
    return float(w)


def _edge_stencil(edge, mesh: TriMesh, region_faces=None):
    i, j = (int(x) for x in edge)
    a, b = min(i, j), max(i, j)
    k = np.searchsorted(mesh.edges[:, 0] * mesh.n_vertices + mesh.edges[:, 1], a * mesh.n_vertices + b)
    if k >= mesh.n_edges or tuple(mesh.edges[k]) != (a, b):
        raise KeyError(f"({i}, {j}) is not an edge")
    l, r = mesh.edge_opposite[k]
    fl, fr = mesh.edge_faces[k]
    if region_faces is not None:
        l = l if region_faces[fl] else None
        r = r if region_faces[fr] else None
    return i, j, l, r, mesh.face_areas[fl], mesh.face_areas[fr]


def _edge_weight(edge, mesh, f, region_faces, fn):
    f = np.asarray(f, dtype=float)
    i, j, l, r, al, ar = _edge_stencil(edge, mesh, region_faces)
    return fn(f[i], f[j], None if l is None else f[l], None if r is None else f[r], al, ar)


def edge_weight_dot(edge, mesh: TriMesh, f, region_faces=None) -> float:
    """Weight of ``edge`` at image ``f`` via dot products over domain areas.

    Parameters
    ----------
    edge : pair of int
    mesh : TriMesh
    f : ndarray, shape (n, 3)
    region_faces : ndarray of bool, optional
        Faces that belong to the current region; the term of an adjacent
        face outside the region is dropped.
    """
    return _edge_weight(edge, mesh, f, region_faces, stencil_weight_dot)


def edge_weight_cot(edge, mesh: TriMesh, f, region_faces=None) -> float:
    """Weight of ``edge`` at image ``f`` via image angles and stretch factors."""
    return _edge_weight(edge, mesh, f, region_faces, stencil_weight_cot)


# -- assembly ---------------------------------------------------------------

def face_terms(mesh: TriMesh, f, faces=None) -> np.ndarray:
    """Per-face corner terms ``(f_o - f_a) . (f_o - f_b) / (4 |T|)``.

    Column ``c`` belongs to the edge opposite corner ``c`` of each face.
    """
    f = np.asarray(f, dtype=float)
    fidx = np.arange(mesh.n_faces) if faces is None else np.asarray(faces)
    tri = f[mesh.faces[fidx]]
    img = face_area(tri[:, 0], tri[:, 1], tri[:, 2])
    _check_image(img, " in assembly")
    area = mesh.face_areas[fidx]
    out = np.empty((len(fidx), 3))
    for c in range(3):
        o = tri[:, c]
        a = tri[:, (c + 1) % 3]
        b = tri[:, (c + 2) % 3]
        out[:, c] = np.einsum("ij,ij->i", o - a, o - b) / (4.0 * area)
    return out


def _assemble(faces_local: np.ndarray, terms: np.ndarray, size: int) -> sp.csr_matrix:
    rows, cols, vals = [], [], []
    for c in range(3):
        a = faces_local[:, (c + 1) % 3]
        b = faces_local[:, (c + 2) % 3]
        rows += [a, b]
        cols += [b, a]
        vals += [-terms[:, c], -terms[:, c]]
    rows = np.concatenate(rows)
    cols = np.concatenate(cols)
    vals = np.concatenate(vals)
    off = sp.coo_matrix((vals, (rows, cols)), shape=(size, size)).tocsr()
    off.sum_duplicates()
    diag = -np.asarray(off.sum(axis=1)).ravel()
    L = (off + sp.diags(diag)).tocsr()
    L.sort_indices()
    return L


def stretch_laplacian_full(mesh: TriMesh, f) -> sp.csr_matrix:
    """Stretch Laplacian over all vertices and faces of the mesh."""
    return _assemble(mesh.faces, face_terms(mesh, f), mesh.n_vertices)


def cot_laplacian(mesh: TriMesh) -> sp.csr_matrix:
    """Classical cotangent Laplacian of the domain, ``-1/2 (cot a + cot b)``."""
    v = mesh.vertices
    tri = v[mesh.faces]
    terms = np.empty((mesh.n_faces, 3))
    for c in range(3):
        u = tri[:, (c + 1) % 3] - tri[:, c]
        w = tri[:, (c + 2) % 3] - tri[:, c]
        terms[:, c] = 0.5 * np.einsum("ij,ij->i", u, w) / np.linalg.norm(np.cross(u, w), axis=1)
    return _assemble(mesh.faces, terms, mesh.n_vertices)


@dataclass(frozen=True, eq=False)
class StretchLaplacian:
    """Stretch Laplacian restricted to one hemisphere region.

    Local indices run over ``vertices = [interior, boundary]`` so that
    ``matrix[:n_interior, :n_interior]`` is ``L_II`` and
    ``matrix[:n_interior, n_interior:]`` is ``L_IB``.
    """

    matrix: sp.csr_matrix
    region: int
    vertices: np.ndarray
    n_interior: int
    faces: np.ndarray

    @functools.cached_property
    def L_II(self) -> sp.csr_matrix:
        return self.matrix[: self.n_interior, : self.n_interior].tocsr()

    @functools.cached_property
    def L_IB(self) -> sp.csr_matrix:
        return self.matrix[: self.n_interior, self.n_interior :].tocsr()

    @property
    def size(self) -> int:
        return len(self.vertices)


def region_faces(mesh: TriMesh, interior: np.ndarray) -> np.ndarray:
    """Indices of faces with at least one vertex in ``interior``."""
    mask = np.zeros(mesh.n_vertices, dtype=bool)
    mask[interior] = True
    return np.flatnonzero(mask[mesh.faces].any(axis=1))


def assemble_region(mesh: TriMesh, f, region: int, interior, boundary) -> StretchLaplacian:
    """Stretch Laplacian of one region.

    Only faces touching an interior vertex contribute, which drops the
    outside term of edges on the region boundary.
    """
    interior = np.asarray(interior, dtype=np.int64)
    boundary = np.asarray(boundary, dtype=np.int64)
    verts = np.concatenate([interior, boundary])
    g2l = -np.ones(mesh.n_vertices, dtype=np.int64)
    g2l[verts] = np.arange(len(verts))
    fids = region_faces(mesh, interior)
    local = g2l[mesh.faces[fids]]
    if np.any(local < 0):
        raise RegionMismatch("a face touching the interior leaves the region")
    L = _assemble(local, face_terms(mesh, f, fids), len(verts))
    return StretchLaplacian(
        matrix=L, region=region, vertices=verts, n_interior=len(interior), faces=fids
    )


def assemble_laplacian(mesh: TriMesh, f, region: int, partition) -> StretchLaplacian:
    """Stretch Laplacian of region ``region`` (1 south, 2 north) of a partition."""
    return assemble_region(mesh, f, region, partition.interior(region), partition.boundary(region))


# -- energies and statistics -----------------------------------------------

def stretch_energy(mesh: TriMesh, f) -> float:
    """Stretch energy ``1/2 sum_c f_c^T L_S(f) f_c`` of a sphere map.

    Equals ``sum_T |f(T)|^2 / |T|``, which tends to ``4 pi`` for an
    equiareal map of an area-normalized mesh.
    """
    f = np.asarray(f, dtype=float)
    L = stretch_laplacian_full(mesh, f)
    return 0.5 * float(np.einsum("ij,ij->", f, L @ f))


def chart_energy(h1, h2, L1, L2) -> float:
    """Quadratic form ``1/2 [h1^H L1 h1 + h2^H L2 h2]`` over the two charts.

    ``L1`` and ``L2`` may be :class:`StretchLaplacian` objects or sparse
    matrices whose size matches the coordinate vectors.
    """
    total = 0.0 + 0.0j
    for h, L in ((h1, L1), (h2, L2)):
        M = L.matrix if isinstance(L, StretchLaplacian) else L
        h = np.asarray(h, dtype=complex)
        if M.shape != (len(h), len(h)):
            raise RegionMismatch(f"vector of length {len(h)} vs matrix {M.shape}")
        total += np.vdot(h, M @ h)
    scale = max(1.0, abs(total.real))
    if abs(total.imag) > 1e-10 * scale:
        raise ArithmeticError(f"quadratic form has imaginary part {total.imag:g}")
    return 0.5 * total.real


def folded_faces(mesh: TriMesh, f) -> np.ndarray:
    """Mask of faces whose image winds clockwise seen from outside the sphere."""
    f = np.asarray(f, dtype=float)
    tri = f[mesh.faces]
    n = np.cross(tri[:, 1] - tri[:, 0], tri[:, 2] - tri[:, 0])
    return np.einsum("ij,ij->i", n, tri.sum(axis=1)) < 0


@dataclass(frozen=True)
class StretchStats:
    sigma: np.ndarray
    mean: float
    std: float
    energy: float
    folded_faces: int

    def summary(self) -> dict:
        return {
            "mean": self.mean,
            "std": self.std,
            "energy": self.energy,
            "folded_faces": self.folded_faces,
        }


def stretch_stats(mesh: TriMesh, f) -> StretchStats:
    """Stretch factor statistics, energy and fold count of a sphere map."""
    sigma = stretch_factors(mesh, f)
    return StretchStats(
        sigma=sigma,
        mean=float(np.mean(sigma)),
        std=float(np.std(sigma)),
        energy=stretch_energy(mesh, f),
        folded_faces=int(folded_faces(mesh, f).sum()),
    )
