"""Numerical checks of the convergence analysis of the alternating scheme.

Three exact identities are evaluated on recorded iterates:

* the edge-weight change between two iterates decomposes as
  ``w_new - w_old = c_i e_i - c_l e_l + c_j e_j - c_r e_r`` with chart
  displacements ``e_t``;
* summing those decompositions row by row gives
  ``([L, B]_new - [L, B]_old) g = H_I e_I + H_B e_B``;
* the stacked displacement vector obeys ``zeta_{k+1} = S_k^{-1} T_k zeta_k``
  with block matrices built from transfer operators, chart inversion
  factors and the ``H`` matrices.

It also tracks products of the error-transfer matrices and estimates
R-linear rates ``||h* - h_k||^(1/k)``.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .errors import DimensionMismatch, EigenFailure, SingularGamma
from .laplacian import assemble_region, stencil_weight_dot
from .mesh import TriMesh
from .sem import IndexPartition, Snapshot
from .solver import InteriorFactor

GAMMA_TOL = 1e-14


# -- weight differences ------------------------------------------------------

@dataclass(frozen=True)
class ChartSample:
    """Sphere positions and the matching chart values (``nan`` outside the chart)."""

    f: np.ndarray
    h: np.ndarray


def chart_sample(snap: Snapshot, partition: IndexPartition, s: int) -> ChartSample:
    """Region ``s`` view of a snapshot: positions after that region's step."""
    n = len(snap.f_south)
    h = np.full(n, np.nan + 0j)
    h[partition.region(s)] = snap.h1 if s == 1 else snap.h2
    return ChartSample(f=snap.f_south if s == 1 else snap.f_north, h=h)


def _chordal_factor(h_new, h_old, eps):
    mod = np.abs(eps)
    phase = np.where(mod > 0, eps / np.where(mod > 0, mod, 1.0), 1.0)
    return 2.0 * np.conj(phase) / (np.sqrt(1.0 + np.abs(h_new) ** 2) * np.sqrt(1.0 + np.abs(h_old) ** 2))


def _cos_angle(d, v):
    nd = np.linalg.norm(d, axis=-1)
    nv = np.linalg.norm(v, axis=-1)
    den = nd * nv
    return np.where(den > 0, np.einsum("...k,...k->...", d, v) / np.where(den > 0, den, 1.0), 0.0), nv


def _stencil_coefficients(f1, f0, h1, h0, area_l, area_r):
    """Coefficients ``c_i, c_j, c_l, c_r`` for (batched) stencils.

    ``f1``/``f0`` map names ``"i", "j", "l", "r"`` to new/old positions with
    shape ``(..., 3)``; ``h1``/``h0`` map them to chart values.  Returns the
    coefficient dict plus per-vertex displacements, phases, chordal
    factors ``d_t`` and cosines of the angles between each 3D
    displacement and the vector it pairs with.
    """
    eps = {t: h1[t] - h0[t] for t in "ijlr"}
    delta = {t: f1[t] - f0[t] for t in "ijlr"}
    d = {t: _chordal_factor(h1[t], h0[t], eps[t]) for t in "ijlr"}
    al = 4.0 * np.asarray(area_l)[..., None] if np.ndim(area_l) else 4.0 * area_l
    ar = 4.0 * np.asarray(area_r)[..., None] if np.ndim(area_r) else 4.0 * area_r
    vecs = {
        "ll": (f1["l"] - f1["j"] + f0["l"] - f0["i"]) / al,
        "li": (f1["l"] - f1["j"]) / al,
        "lj": (f0["l"] - f0["i"]) / al,
        "rr": (f1["r"] - f1["i"] + f0["r"] - f0["j"]) / ar,
        "ri": (f0["r"] - f0["j"]) / ar,
        "rj": (f1["r"] - f1["i"]) / ar,
    }
    owner = {"ll": "l", "li": "i", "lj": "j", "rr": "r", "ri": "i", "rj": "j"}
    cos = {}
    proj = {}
    for key, v in vecs.items():
        cos[key], nv = _cos_angle(delta[owner[key]], v)
        proj[key] = nv * cos[key]
    c = {
        "i": d["i"] * (proj["li"] + proj["ri"]),
        "j": d["j"] * (proj["lj"] + proj["rj"]),
        "l": d["l"] * proj["ll"],
        "r": d["r"] * proj["rr"],
    }
    phases = {t: np.angle(eps[t]) * (np.abs(eps[t]) > 0) for t in "ijlr"}
    return c, eps, phases, d, cos


@dataclass(frozen=True)
class WeightDelta:
    """Decomposition of the change of one edge weight between two iterates."""

    edge: tuple
    w_new: float
    w_old: float
    coefficients: dict
    eps: dict
    phases: dict
    factors: dict
    cosines: dict

    @property
    def predicted(self) -> complex:
        c, e = self.coefficients, self.eps
        return c["i"] * e["i"] - c["l"] * e["l"] + c["j"] * e["j"] - c["r"] * e["r"]

    @property
    def residual(self) -> float:
        return float(abs((self.w_new - self.w_old) - self.predicted))


def stencil_delta(f_new, f_old, h_new, h_old, area_l, area_r, edge=("i", "j")) -> WeightDelta:
    """Weight change of a single four-vertex stencil.

    ``f_new``/``f_old`` and ``h_new``/``h_old`` are dicts keyed by
    ``"i", "j", "l", "r"``.
    """
    f1 = {t: np.asarray(f_new[t], float) for t in "ijlr"}
    f0 = {t: np.asarray(f_old[t], float) for t in "ijlr"}
    h1 = {t: complex(h_new[t]) for t in "ijlr"}
    h0 = {t: complex(h_old[t]) for t in "ijlr"}
    c, eps, ph, d, cos = _stencil_coefficients(f1, f0, h1, h0, area_l, area_r)
    w1 = stencil_weight_dot(f1["i"], f1["j"], f1["l"], f1["r"], area_l, area_r)
    w0 = stencil_weight_dot(f0["i"], f0["j"], f0["l"], f0["r"], area_l, area_r)
    scal = lambda m: {k: complex(v) if np.iscomplexobj(v) else float(v) for k, v in m.items()}
    return WeightDelta(tuple(edge), w1, w0, scal(c), scal(eps), scal(ph), scal(d), scal(cos))


def _directed_stencils(mesh: TriMesh, rows: np.ndarray):
    """All directed edges ``(i, j)`` with ``i`` in ``rows`` and their apexes."""
    e = mesh.edges
    opp = mesh.edge_opposite
    ef = mesh.edge_faces
    i = np.r_[e[:, 0], e[:, 1]]
    j = np.r_[e[:, 1], e[:, 0]]
    l = np.r_[opp[:, 0], opp[:, 1]]
    r = np.r_[opp[:, 1], opp[:, 0]]
    fl = np.r_[ef[:, 0], ef[:, 1]]
    fr = np.r_[ef[:, 1], ef[:, 0]]
    mask = np.zeros(mesh.n_vertices, dtype=bool)
    mask[rows] = True
    keep = mask[i]
    return i[keep], j[keep], l[keep], r[keep], fl[keep], fr[keep]


def weight_delta(edge, mesh: TriMesh, new: ChartSample, old: ChartSample) -> WeightDelta:
    """Decompose the change of the weight of ``edge = (i, j)`` between two samples."""
    i, j = (int(x) for x in edge)
    ii, jj, ll, rr, fl, fr = _directed_stencils(mesh, np.array([i]))
    k = np.flatnonzero(jj == j)
    if len(k) != 1:
        raise KeyError(f"({i}, {j}) is not an edge")
    k = int(k[0])
    idx = {"i": i, "j": j, "l": int(ll[k]), "r": int(rr[k])}
    return stencil_delta(
        {t: new.f[v] for t, v in idx.items()},
        {t: old.f[v] for t, v in idx.items()},
        {t: new.h[v] for t, v in idx.items()},
        {t: old.h[v] for t, v in idx.items()},
        mesh.face_areas[fl[k]],
        mesh.face_areas[fr[k]],
        edge=(i, j),
    )


def decomposition_residual(mesh: TriMesh, rows, new: ChartSample, old: ChartSample) -> float:
    """Largest decomposition residual over all edges leaving ``rows``."""
    i, j, l, r, fl, fr = _directed_stencils(mesh, np.asarray(rows))
    idx = {"i": i, "j": j, "l": l, "r": r}
    f1 = {t: new.f[v] for t, v in idx.items()}
    f0 = {t: old.f[v] for t, v in idx.items()}
    c, eps, *_ = _stencil_coefficients(
        f1, f0, {t: new.h[v] for t, v in idx.items()}, {t: old.h[v] for t, v in idx.items()},
        mesh.face_areas[fl], mesh.face_areas[fr],
    )
    pred = c["i"] * eps["i"] - c["l"] * eps["l"] + c["j"] * eps["j"] - c["r"] * eps["r"]
    al = 4.0 * mesh.face_areas[fl]
    ar = 4.0 * mesh.face_areas[fr]

    def w(f):
        return -(
            np.einsum("ij,ij->i", f["l"] - f["i"], f["l"] - f["j"]) / al
            + np.einsum("ij,ij->i", f["r"] - f["j"], f["r"] - f["i"]) / ar
        )

    if len(i) == 0:
        return 0.0
    return float(np.max(np.abs(w(f1) - w(f0) - pred)))


# -- H matrices ----------------------------------------------------------------

@dataclass(frozen=True)
class HAssembly:
    H_I: np.ndarray
    H_B: np.ndarray
    g: np.ndarray
    lhs: np.ndarray
    eps: np.ndarray

    @property
    def residual(self) -> float:
        """Relative mismatch ``||lhs - H eps||_inf / ||lhs||_inf``."""
        n = self.H_I.shape[0]
        rhs = self.H_I @ self.eps[:n] + self.H_B @ self.eps[n:]
        den = max(np.max(np.abs(self.lhs), initial=0.0), np.max(np.abs(rhs), initial=0.0))
        if den == 0.0:
            return 0.0
        return float(np.max(np.abs(self.lhs - rhs)) / den)


def assemble_H(
    region: int,
    mesh: TriMesh,
    partition: IndexPartition,
    new: ChartSample,
    old: ChartSample,
    L_new=None,
    L_old=None,
) -> HAssembly:
    """Row-wise aggregation of weight-change decompositions for one region.

    ``g = [L_old^{-1} B_old h_B_new ; -h_B_new]`` and row ``i`` of ``H``
    collects ``(g_j - g_i)(c_i e_i + c_j e_j - c_l e_l - c_r e_r)`` over the
    neighbours ``j``, routed to the columns of ``i``, ``j``, ``l``, ``r``.
    """
    interior = partition.interior(region)
    boundary = partition.boundary(region)
    verts = np.concatenate([interior, boundary])
    n_s = len(interior)
    if L_new is None:
        L_new = assemble_region(mesh, new.f, region, interior, boundary)
    if L_old is None:
        L_old = assemble_region(mesh, old.f, region, interior, boundary)
    h_new = new.h[verts]
    h_old = old.h[verts]
    if np.any(np.isnan(h_new)) or np.any(np.isnan(h_old)):
        raise DimensionMismatch("chart values missing on region vertices")
    h_b = h_new[n_s:]
    x = InteriorFactor(L_old.L_II).solve(L_old.L_IB @ h_b)
    g = np.concatenate([x, -h_b])

    g2l = -np.ones(mesh.n_vertices, dtype=np.int64)
    g2l[verts] = np.arange(len(verts))
    i, j, l, r, fl, fr = _directed_stencils(mesh, interior)
    idx = {"i": i, "j": j, "l": l, "r": r}
    c, _, *_ = _stencil_coefficients(
        {t: new.f[v] for t, v in idx.items()},
        {t: old.f[v] for t, v in idx.items()},
        {t: new.h[v] for t, v in idx.items()},
        {t: old.h[v] for t, v in idx.items()},
        mesh.face_areas[fl],
        mesh.face_areas[fr],
    )
    li, lj, ll, lr = g2l[i], g2l[j], g2l[l], g2l[r]
    dg = g[lj] - g[li]
    rows = np.concatenate([li, li, li, li])
    cols = np.concatenate([li, lj, ll, lr])
    vals = np.concatenate([dg * c["i"], dg * c["j"], -dg * c["l"], -dg * c["r"]])
    H = sp.coo_matrix((vals, (rows, cols)), shape=(n_s, len(verts))).toarray()

    D = (L_new.matrix - L_old.matrix)[:n_s]
    lhs = D @ g
    return HAssembly(H_I=H[:, :n_s], H_B=H[:, n_s:], g=g, lhs=np.asarray(lhs), eps=h_new - h_old)


# -- error-transfer matrices ----------------------------------------------------

@dataclass
class ErrorTransferBundle:
    """Blocks of ``S_k zeta_{k+1} = T_k zeta_k`` and the resulting ``curly_T``.

    ``zeta_k = [conj(e_B1^k); conj(e_I1^k); e_B2^k; e_I2^k; e_B2^{k-1}; e_I2^{k-1}]``.
    """

    k: int
    blocks: dict
    S: np.ndarray
    T: np.ndarray
    curly_T: np.ndarray
    zeta: np.ndarray
    zeta_next: np.ndarray | None
    sizes: tuple

    @property
    def recursion_residual(self) -> float:
        if self.zeta_next is None:
            return float("nan")
        pred = self.curly_T @ self.zeta
        den = max(np.max(np.abs(self.zeta_next)), np.max(np.abs(pred)))
        if den == 0.0:
            return 0.0
        return float(np.max(np.abs(self.zeta_next - pred)) / den)


def _gamma(a, b):
    den = a * b
    if np.any(np.abs(den) < GAMMA_TOL):
        raise SingularGamma(f"inversion denominator {np.min(np.abs(den)):.2e}")
    return 1.0 / den


class _Region:
    """Dense region data at one iterate: Laplacian, factor and transfer operator."""

    def __init__(self, mesh, partition, s, f):
        self.L = assemble_region(mesh, f, s, partition.interior(s), partition.boundary(s))
        self.F = InteriorFactor(self.L.L_II)
        self.A_hat = -self.F.solve(self.L.L_IB.toarray())


def zeta_vector(snaps, partition: IndexPartition, k: int) -> np.ndarray:
    """Stacked displacement vector ``zeta_k`` from snapshots ``k-2 .. k``."""
    n1, n2 = len(partition.I1), len(partition.I2)
    e1 = snaps[k].h1 - snaps[k - 1].h1
    e2 = snaps[k].h2 - snaps[k - 1].h2
    e2p = snaps[k - 1].h2 - snaps[k - 2].h2
    return np.concatenate([np.conj(e1[n1:]), np.conj(e1[:n1]), e2[n2:], e2[:n2], e2p[n2:], e2p[:n2]])


def build_transfer(mesh: TriMesh, partition: IndexPartition, snaps, k: int, cache: dict | None = None) -> ErrorTransferBundle:
    """Error-transfer bundle at iteration ``k >= 2``.

    Parameters
    ----------
    snaps : sequence of Snapshot
        Indexed by iteration; entries ``k-2 .. k+1`` are used (``k+1`` is
        optional and only needed for the recursion check and ``Gamma_1``;
        without it the bundle cannot be formed).
    cache : dict, optional
        Reuses region data between consecutive calls.
    """
    if k < 2 or k + 1 >= len(snaps):
        raise DimensionMismatch(f"need snapshots {k - 2}..{k + 1}, have 0..{len(snaps) - 1}")
    for q in range(k - 2, k + 2):
        if len(snaps[q].h1) != len(partition.region(1)) or len(snaps[q].h2) != len(partition.region(2)):
            raise DimensionMismatch(f"snapshot {q} does not match the partition")
    cache = {} if cache is None else cache

    def region(s, q):
        key = (s, q)
        if key not in cache:
            snap = snaps[q]
            cache[key] = _Region(mesh, partition, s, snap.f_south if s == 1 else snap.f_north)
        return cache[key]

    def hmat(s, q):
        key = ("H", s, q)
        if key not in cache:
            new = chart_sample(snaps[q], partition, s)
            old = chart_sample(snaps[q - 1], partition, s)
            cache[key] = assemble_H(s, mesh, partition, new, old, region(s, q).L, region(s, q - 1).L)
        return cache[key]

    n1, m1 = len(partition.I1), len(partition.B1)
    n2, m2 = len(partition.I2), len(partition.B2)
    P2 = partition.transfer_positions(1)  # B1 inside I2
    P1 = partition.transfer_positions(2)  # B2 inside I1

    R1k, R2k, R2km1 = region(1, k), region(2, k), region(2, k - 1)
    H1k, H2k, H2km1 = hmat(1, k), hmat(2, k), hmat(2, k - 1)

    gamma2 = _gamma(snaps[k - 1].h2[:n2][P2], snaps[k].h2[:n2][P2])
    gamma1 = _gamma(snaps[k].h1[:n1][P1], snaps[k + 1].h1[:n1][P1])

    A1 = R1k.A_hat[P1]
    A2m = R2km1.A_hat[P2]
    b = {}
    b["A1_hat"] = R1k.A_hat
    b["A2_hat"] = R2k.A_hat
    b["S31"] = np.conj(gamma1)[:, None] * A1
    b["T13"] = -gamma2[:, None] * A2m
    b["T15"] = -gamma2[:, None] * R2km1.F.solve(H2km1.H_B)[P2]
    b["T16"] = -gamma2[:, None] * R2km1.F.solve(H2km1.H_I)[P2]
    T21 = R1k.F.solve(np.conj(H1k.H_B))
    T22 = R1k.F.solve(np.conj(H1k.H_I))
    b["T21"], b["T22"] = T21, T22
    b["T31"] = -np.conj(gamma1)[:, None] * T21[P1]
    b["T32"] = -np.conj(gamma1)[:, None] * T22[P1]
    b["T43"] = R2k.F.solve(H2k.H_B)
    b["T44"] = R2k.F.solve(H2k.H_I)
    b["Gamma1"], b["Gamma2"] = gamma1, gamma2

    sizes = (m1, n1, m2, n2, m2, n2)
    off = np.concatenate([[0], np.cumsum(sizes)])
    ell = int(off[-1])
    S = np.eye(ell, dtype=complex)
    T = np.zeros((ell, ell), dtype=complex)

    def put(M, r, c, val):
        M[off[r] : off[r + 1], off[c] : off[c + 1]] = val

    put(S, 1, 0, -R1k.A_hat)
    put(S, 2, 0, b["S31"])
    put(S, 3, 2, -R2k.A_hat)
    put(T, 0, 2, b["T13"])
    put(T, 0, 4, b["T15"])
    put(T, 0, 5, b["T16"])
    put(T, 1, 0, T21)
    put(T, 1, 1, T22)
    put(T, 2, 0, b["T31"])
    put(T, 2, 1, b["T32"])
    put(T, 3, 2, b["T43"])
    put(T, 3, 3, b["T44"])
    put(T, 4, 2, np.eye(m2))
    put(T, 5, 3, np.eye(n2))
    curly = np.linalg.solve(S, T)
    zeta = zeta_vector(snaps, partition, k)
    zeta_next = zeta_vector(snaps, partition, k + 1)
    return ErrorTransferBundle(k=k, blocks=b, S=S, T=T, curly_T=curly, zeta=zeta, zeta_next=zeta_next, sizes=sizes)


def spectral_radius(M: np.ndarray) -> float:
    try:
        ev = np.linalg.eigvals(M)
    except np.linalg.LinAlgError as exc:
        raise EigenFailure(str(exc)) from exc
    return float(np.max(np.abs(ev)))


def spectral_track(bundles) -> list[dict]:
    """Max-abs element and spectral radius of the running product.

    Each bundle's ``curly_T`` (or a bare matrix) is multiplied on the left
    of the product accumulated so far.
    """
    out = []
    P = None
    for b in bundles:
        M = b.curly_T if isinstance(b, ErrorTransferBundle) else np.asarray(b)
        P = M.copy() if P is None else M @ P
        out.append(
            {
                "k": getattr(b, "k", len(out)),
                "max_abs": float(np.max(np.abs(P))),
                "spectral_radius": spectral_radius(P),
            }
        )
    return out


# -- rate estimates ----------------------------------------------------------------

def r_linear_estimate(h_history, h_star, ks=None) -> np.ndarray:
    """``||h* - h^{(k)}||_inf^(1/k)`` for ``k`` in ``ks`` (default all ``k >= 1``).

    ``h_history[k]`` is the iterate ``h^{(k)}``.  Exact agreement returns
    ``0.0``.  The root is taken in the log domain.
    """
    h_star = np.asarray(h_star)
    if ks is None:
        ks = range(1, len(h_history))
    out = []
    for k in ks:
        if k < 1:
            raise ValueError("iteration index must be positive")
        err = float(np.max(np.abs(h_star - np.asarray(h_history[k]))))
        out.append(0.0 if err == 0.0 else float(np.exp(np.log(err) / k)))
    return np.array(out)


def rate_window(m: int, window: int = 60) -> range:
    """Iterations ``m - window .. m - 1`` clipped at 1."""
    return range(max(1, m - window), m)


def write_csv(path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow([repr(float(x)) if isinstance(x, (float, np.floating)) else x for x in row])


# -- full pipeline ---------------------------------------------------------------

THRESHOLDS = {"decomposition": 1e-10, "H": 1e-9, "recursion": 1e-8}


@dataclass
class DiagnosticRun:
    """Series produced by :func:`diagnose_snapshots`."""

    spectral: list
    rates: list
    residuals: list

    def worst(self) -> dict:
        out = {}
        for pos, name in enumerate(("decomposition", "H", "recursion"), start=1):
            vals = [row[pos] for row in self.residuals]
            out[name] = max(vals) if vals else 0.0
        return out

    def checks(self) -> dict:
        """``name -> passed`` for the three identity checks."""
        return {name: bool(v <= THRESHOLDS[name]) for name, v in self.worst().items()}


def diagnose_snapshots(
    mesh: TriMesh,
    partition: IndexPartition,
    snaps,
    k_max: int | None = None,
    window: int = 60,
) -> DiagnosticRun:
    """Residual, spectral and rate series for a snapshotted run.

    Bundles are built for ``k = 2 .. k_max`` (default: last usable ``k``).
    Rates use the final snapshot as the limit over :func:`rate_window`.
    """
    last = len(snaps) - 2
    k_max = last if k_max is None else min(k_max, last)
    cache: dict = {}
    bundles = []
    residuals = []
    for k in range(2, k_max + 1):
        b = build_transfer(mesh, partition, snaps, k, cache)
        decomp = 0.0
        hres = 0.0
        for s in (1, 2):
            new = chart_sample(snaps[k], partition, s)
            old = chart_sample(snaps[k - 1], partition, s)
            decomp = max(decomp, decomposition_residual(mesh, partition.interior(s), new, old))
            hres = max(hres, cache[("H", s, k)].residual)
        residuals.append((k, decomp, hres, b.recursion_residual))
        bundles.append(b)
        for key in [q for q in cache if q[-1] < k - 2]:
            del cache[key]
    spectral = [(row["k"], row["max_abs"], row["spectral_radius"]) for row in spectral_track(bundles)]

    m = len(snaps) - 1
    n2 = len(partition.I2)
    star = snaps[m].h2
    ks = list(rate_window(m, window))
    hist = [s.h2 for s in snaps]
    rb = r_linear_estimate([h[n2:] for h in hist], star[n2:], ks)
    ri = r_linear_estimate([h[:n2] for h in hist], star[:n2], ks)
    rates = list(zip(ks, rb.tolist(), ri.tolist()))
    return DiagnosticRun(spectral=spectral, rates=rates, residuals=residuals)
