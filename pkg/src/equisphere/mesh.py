"""Closed genus-zero triangle meshes: loading, validation and indexing."""

from __future__ import annotations

import dataclasses
import os
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import breadth_first_order

from .errors import DegenerateFace, ParseError, TopologyError

DEGENERATE_REL_TOL = 1e-14


def face_area(p0, p1, p2):
    """Area of the flat triangle(s) through three points.

    All arguments broadcast, so rows of ``(n, 3)`` arrays give ``n`` areas.

    Examples
    --------
    >>> float(face_area([0, 0, 0], [2, 0, 0], [0, 3, 0]))
    3.0
    """
    p0 = np.asarray(p0, dtype=float)
    cr = np.cross(np.asarray(p1, dtype=float) - p0, np.asarray(p2, dtype=float) - p0)
    return 0.5 * np.linalg.norm(cr, axis=-1)


def _freeze(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class TriMesh:
    """Validated, consistently oriented, closed genus-zero triangle mesh.

    Faces are ordered counterclockwise seen from outside.  For every
    undirected edge ``(i, j)`` with ``i < j`` stored in ``edges``, column 0
    of ``edge_opposite`` holds the apex ``l`` of the face ``[i, l, j]``
    (which traverses ``j -> i``) and column 1 holds the apex ``r`` of the
    face ``[j, r, i]`` (which traverses ``i -> j``).  ``edge_faces`` holds
    the indices of those two faces in the same order.

    Instances are immutable; all arrays are read-only.  Construct with
    :meth:`from_arrays` or :func:`load_mesh`.
    """

    vertices: np.ndarray
    faces: np.ndarray
    face_areas: np.ndarray
    edges: np.ndarray
    edge_faces: np.ndarray
    edge_opposite: np.ndarray

    @classmethod
    def from_arrays(cls, vertices, faces) -> "TriMesh":
        """Validate raw arrays, repair orientation and build adjacency."""
        vertices = np.asarray(vertices, dtype=float)
        faces = np.asarray(faces)
        if vertices.ndim != 2 or vertices.shape[1] != 3:
            raise ValueError(f"vertices must have shape (n, 3), got {vertices.shape}")
        if faces.ndim != 2 or faces.shape[1] != 3:
            raise ValueError(f"faces must have shape (F, 3), got {faces.shape}")
        if not np.all(np.isfinite(vertices)):
            raise ValueError("vertex coordinates must be finite")
        faces = faces.astype(np.int64)
        n = len(vertices)
        if len(faces) == 0:
            raise TopologyError("mesh has no faces")
        if faces.min() < 0 or faces.max() >= n:
            raise ValueError("face index out of range")
        rep = (
            (faces[:, 0] == faces[:, 1])
            | (faces[:, 1] == faces[:, 2])
            | (faces[:, 0] == faces[:, 2])
        )
        if np.any(rep):
            raise DegenerateFace(f"face {int(np.argmax(rep))} repeats a vertex index")
        used = np.zeros(n, dtype=bool)
        used[faces.ravel()] = True
        if not np.all(used):
            raise TopologyError(f"{int(np.sum(~used))} unreferenced vertices")

        faces = _orient_faces(faces, n)
        n_edges = len(faces) * 3 // 2
        chi = n - n_edges + len(faces)
        if chi != 2:
            raise TopologyError(f"Euler characteristic {chi} != 2 (genus {(2 - chi) / 2:g})")

        tri = vertices[faces]
        signed_vol = np.einsum("ij,ij->i", tri[:, 0], np.cross(tri[:, 1], tri[:, 2])).sum()
        if signed_vol < 0:
            faces = faces[:, [0, 2, 1]]

        areas = face_area(vertices[faces[:, 0]], vertices[faces[:, 1]], vertices[faces[:, 2]])
        longest = np.max(
            np.stack(
                [
                    np.linalg.norm(tri[:, 1] - tri[:, 0], axis=1),
                    np.linalg.norm(tri[:, 2] - tri[:, 1], axis=1),
                    np.linalg.norm(tri[:, 0] - tri[:, 2], axis=1),
                ]
            ),
            axis=0,
        )
        bad = areas <= DEGENERATE_REL_TOL * longest**2
        if np.any(bad):
            raise DegenerateFace(f"face {int(np.argmax(bad))} has zero area")

        edges, edge_faces, edge_opp = _edge_tables(faces, n)
        return cls(
            vertices=_freeze(vertices.copy()),
            faces=_freeze(faces),
            face_areas=_freeze(areas),
            edges=_freeze(edges),
            edge_faces=_freeze(edge_faces),
            edge_opposite=_freeze(edge_opp),
        )

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_faces(self) -> int:
        return len(self.faces)

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    @property
    def euler_characteristic(self) -> int:
        return self.n_vertices - self.n_edges + self.n_faces

    @property
    def edge_adjacency(self) -> np.ndarray:
        """Opposite vertices ``(l, r)`` for every edge in ``edges``."""
        return self.edge_opposite

    @property
    def total_area(self) -> float:
        return float(self.face_areas.sum())

    def adjacency(self) -> sp.csr_matrix:
        """Symmetric boolean vertex adjacency matrix."""
        i, j = self.edges[:, 0], self.edges[:, 1]
        n = self.n_vertices
        data = np.ones(2 * len(i), dtype=bool)
        return sp.csr_matrix((data, (np.r_[i, j], np.r_[j, i])), shape=(n, n))

    def vertex_areas(self) -> np.ndarray:
        """Barycentric vertex areas (one third of each incident face)."""
        out = np.zeros(self.n_vertices)
        np.add.at(out, self.faces.ravel(), np.repeat(self.face_areas / 3.0, 3))
        return out

    def with_vertices(self, vertices) -> "TriMesh":
        """Same connectivity with new vertex positions (areas recomputed)."""
        v = np.asarray(vertices, dtype=float)
        if v.shape != self.vertices.shape:
            raise ValueError("vertex array shape changed")
        f = self.faces
        areas = face_area(v[f[:, 0]], v[f[:, 1]], v[f[:, 2]])
        return dataclasses.replace(self, vertices=_freeze(v.copy()), face_areas=_freeze(areas))


def _orient_faces(faces: np.ndarray, n: int) -> np.ndarray:
    """Check manifoldness and flip faces so neighbours agree on winding."""
    n_f = len(faces)
    u = faces.ravel()
    v = faces[:, [1, 2, 0]].ravel()
    lo = np.minimum(u, v)
    hi = np.maximum(u, v)
    key = lo * n + hi
    order = np.argsort(key, kind="stable")
    skey = key[order]
    uniq, start, counts = np.unique(skey, return_index=True, return_counts=True)
    if np.any(counts == 1):
        raise TopologyError(f"{int(np.sum(counts == 1))} boundary edge(s); mesh is not closed")
    if np.any(counts > 2):
        raise TopologyError(f"{int(np.sum(counts > 2))} non-manifold edge(s)")
    h1 = order[start]
    h2 = order[start + 1]
    f1 = h1 // 3
    f2 = h2 // 3
    if np.any(f1 == f2):
        raise TopologyError("face shares an edge with itself")
    # same traversal direction means the two faces disagree on winding
    same = (u[h1] < v[h1]) == (u[h2] < v[h2])
    rel = sp.coo_matrix(
        (np.r_[same, same].astype(np.int8) + 1, (np.r_[f1, f2], np.r_[f2, f1])),
        shape=(n_f, n_f),
    ).tocsr()
    if rel.max() > 2 or (rel.data.size != 2 * len(f1)):
        raise TopologyError("two faces share more than one edge")
    order_f, pred = breadth_first_order(rel, 0, directed=False, return_predecessors=True)
    if len(order_f) != n_f:
        raise TopologyError("mesh is not connected")
    child = order_f[1:]
    tree_rel = (np.asarray(rel[pred[child], child]).ravel() - 1).astype(np.int8)
    step = np.zeros(n_f, dtype=np.int8)
    step[child] = tree_rel
    flip = np.zeros(n_f, dtype=np.int8)
    for f in child.tolist():
        flip[f] = flip[pred[f]] ^ step[f]
    if np.any((flip[f1] ^ flip[f2]) != same.astype(np.int8)):
        raise TopologyError("mesh is not orientable")
    out = faces.copy()
    fl = flip.astype(bool)
    out[fl] = out[fl][:, [0, 2, 1]]
    return out


def _edge_tables(faces: np.ndarray, n: int):
    u = faces.ravel()
    v = faces[:, [1, 2, 0]].ravel()
    w = faces[:, [2, 0, 1]].ravel()
    fid = np.repeat(np.arange(len(faces)), 3)
    lo = np.minimum(u, v)
    hi = np.maximum(u, v)
    key = lo * n + hi
    order = np.lexsort((u > v, key))
    # after sorting, each edge has its forward (u < v) half-edge first
    fwd = order[0::2]
    bwd = order[1::2]
    edges = np.stack([lo[fwd], hi[fwd]], axis=1)
    # forward half-edge i -> j lies in face [j, r, i] seen from r
    edge_faces = np.stack([fid[bwd], fid[fwd]], axis=1)
    edge_opp = np.stack([w[bwd], w[fwd]], axis=1)
    return edges, edge_faces, edge_opp


def area_scale(mesh: TriMesh) -> float:
    """Uniform scale factor that brings the total area to ``4 pi``."""
    return float(np.sqrt(4.0 * np.pi / mesh.total_area))


def normalize_area(mesh: TriMesh) -> TriMesh:
    """Scale vertices uniformly so the total surface area is ``4 pi``."""
    return mesh.with_vertices(mesh.vertices * area_scale(mesh))


def _read_text(path) -> list[str]:
    with open(path, "rb") as fh:
        raw = fh.read()
    if b"\x00" in raw:
        raise ParseError(f"{path}: binary content is not supported")
    try:
        text = raw.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise ParseError(f"{path}: not an ASCII text file") from exc
    return text.splitlines()


def _parse_off(lines: list[str], path) -> tuple[np.ndarray, np.ndarray]:
    tokens: list[list[str]] = []
    for line in lines:
        line = line.split("#", 1)[0].strip()
        if line:
            tokens.append(line.split())
    if not tokens:
        raise ParseError(f"{path}: empty file")
    head = tokens[0]
    if head[0].upper() not in ("OFF",):
        if head[0].upper().endswith("OFF"):
            raise ParseError(f"{path}: OFF variant {head[0]!r} not supported")
        raise ParseError(f"{path}: missing OFF header")
    if len(head) > 1 and head[1].upper() == "BINARY":
        raise ParseError(f"{path}: binary OFF not supported")
    rest = tokens[1:]
    if len(head) >= 4:
        counts = head[1:4]
    else:
        if not rest:
            raise ParseError(f"{path}: missing counts line")
        counts, rest = rest[0], rest[1:]
    try:
        nv, nf = int(counts[0]), int(counts[1])
    except (ValueError, IndexError) as exc:
        raise ParseError(f"{path}: bad counts line {counts}") from exc
    if nv < 0 or nf < 0 or len(rest) < nv + nf:
        raise ParseError(f"{path}: expected {nv} vertices and {nf} faces")
    try:
        verts = np.array([[float(x) for x in r[:3]] for r in rest[:nv]], dtype=float)
    except ValueError as exc:
        raise ParseError(f"{path}: bad vertex line") from exc
    if nv and verts.shape != (nv, 3):
        raise ParseError(f"{path}: vertex lines need 3 coordinates")
    faces = []
    for r in rest[nv : nv + nf]:
        try:
            k = int(r[0])
            idx = [int(x) for x in r[1 : 1 + k]]
        except ValueError as exc:
            raise ParseError(f"{path}: bad face line {' '.join(r)}") from exc
        if k != 3 or len(idx) != 3:
            raise ParseError(f"{path}: only triangular faces are supported")
        faces.append(idx)
    return verts.reshape(nv, 3), np.array(faces, dtype=np.int64).reshape(nf, 3)


def _parse_obj(lines: list[str], path) -> tuple[np.ndarray, np.ndarray]:
    verts: list[list[float]] = []
    faces: list[list[int]] = []
    for lineno, line in enumerate(lines, 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        tag = parts[0]
        if tag == "v":
            try:
                verts.append([float(x) for x in parts[1:4]])
            except ValueError as exc:
                raise ParseError(f"{path}:{lineno}: bad vertex") from exc
            if len(verts[-1]) != 3:
                raise ParseError(f"{path}:{lineno}: vertex needs 3 coordinates")
        elif tag == "f":
            if len(parts) != 4:
                raise ParseError(f"{path}:{lineno}: only triangular faces are supported")
            idx = []
            for tok in parts[1:]:
                try:
                    k = int(tok.split("/")[0])
                except ValueError as exc:
                    raise ParseError(f"{path}:{lineno}: bad face index {tok!r}") from exc
                if k == 0:
                    raise ParseError(f"{path}:{lineno}: OBJ indices are 1-based")
                idx.append(k - 1 if k > 0 else len(verts) + k)
            faces.append(idx)
    return np.array(verts, dtype=float).reshape(-1, 3), np.array(faces, dtype=np.int64).reshape(-1, 3)


def read_arrays(path, format: str | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Parse an ASCII OFF or OBJ file into raw vertex and face arrays."""
    fmt = (format or os.path.splitext(str(path))[1].lstrip(".")).upper()
    if fmt not in ("OFF", "OBJ"):
        raise ParseError(f"{path}: unsupported format {fmt!r} (use OFF or OBJ)")
    lines = _read_text(path)
    verts, faces = _parse_off(lines, path) if fmt == "OFF" else _parse_obj(lines, path)
    if len(faces) and (faces.min() < 0 or faces.max() >= len(verts)):
        raise ParseError(f"{path}: face index out of range")
    return verts, faces


def load_mesh(path, format: str | None = None) -> TriMesh:
    """Load and validate an ASCII OFF or OBJ triangle mesh.

    Parameters
    ----------
    path : str or path-like
    format : {"OFF", "OBJ"}, optional
        Inferred from the file suffix when omitted.

    Raises
    ------
    ParseError, TopologyError, DegenerateFace
    """
    verts, faces = read_arrays(path, format)
    return TriMesh.from_arrays(verts, faces)


def save_mesh(path, vertices, faces, format: str | None = None) -> None:
    """Write vertices and faces as ASCII OFF or OBJ with full precision."""
    fmt = (format or os.path.splitext(str(path))[1].lstrip(".")).upper()
    vertices = np.asarray(vertices, dtype=float)
    faces = np.asarray(faces, dtype=np.int64)
    with open(path, "w") as fh:
        if fmt == "OFF":
            fh.write(f"OFF\n{len(vertices)} {len(faces)} 0\n")
            np.savetxt(fh, vertices, fmt="%.17g")
            np.savetxt(fh, np.c_[np.full(len(faces), 3), faces], fmt="%d")
        elif fmt == "OBJ":
            np.savetxt(fh, vertices, fmt="v %.17g %.17g %.17g")
            np.savetxt(fh, faces + 1, fmt="f %d %d %d")
        else:
            raise ValueError(f"unsupported format {fmt!r}")
