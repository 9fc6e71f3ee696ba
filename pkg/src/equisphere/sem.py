"""Alternating hemispherical stretch energy minimization.

The sphere is covered by two overlapping charts: chart 1 is the
stereographic projection from the north pole and chart 2 its inversion.
Each region ``s`` has interior vertices ``I_s = {|h_s| < r}`` and a one-ring
boundary ``B_s``.  A sweep updates chart 1 from boundary data inverted from
chart 2 (south step) and then chart 2 from the fresh chart 1 (north step),
each time solving a Dirichlet problem with the stretch Laplacian assembled
at the previous iterate and then re-assembling it at the new one.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import logging
import math
import time
from dataclasses import dataclass, field

import numpy as np

from .conformal import ConformalMap, conformal_initialize
from .errors import EmptyBoundary, EmptyInterior, NonFiniteEnergy, RegionMismatch
from .laplacian import StretchLaplacian, assemble_region, stretch_energy, stretch_factors, stretch_stats
from .mesh import TriMesh
from .sphere import chart_lift, chart_project, invert_plane
from .solver import InteriorFactor

log = logging.getLogger(__name__)

TERMINATION_REASONS = ("tolerance", "max_iter", "stagnation", "quasi_periodic_suspected")


def _ro(a) -> np.ndarray:
    a = np.array(a, copy=True)
    a.setflags(write=False)
    return a


def chart_modulus(f: np.ndarray, chart: int) -> np.ndarray:
    """``|h|`` of every vertex in the given chart (``inf`` at that chart's pole)."""
    z = f[:, 2] if chart == 1 else -f[:, 2]
    den = 1.0 - z
    with np.errstate(divide="ignore", invalid="ignore"):
        mod = np.hypot(f[:, 0], f[:, 1]) / den
    mod[den <= 0.0] = np.inf
    return mod


def region_sets(mesh: TriMesh, modulus: np.ndarray, r: float) -> tuple[np.ndarray, np.ndarray]:
    """Interior ``{|h| < r}`` and its outer one-ring."""
    inside = modulus < r
    interior = np.flatnonzero(inside)
    touch = mesh.adjacency() @ inside.astype(np.int8)
    boundary = np.flatnonzero((touch > 0) & ~inside)
    return interior, boundary


@dataclass(frozen=True, eq=False)
class IndexPartition:
    """Frozen interior/boundary index sets of both regions (sorted)."""

    I1: np.ndarray
    B1: np.ndarray
    I2: np.ndarray
    B2: np.ndarray
    radius: float

    def __post_init__(self):
        for name in ("I1", "B1", "I2", "B2"):
            object.__setattr__(self, name, _ro(np.asarray(getattr(self, name), dtype=np.int64)))
        if not np.all(np.isin(self.B1, self.I2)) or not np.all(np.isin(self.B2, self.I1)):
            raise RegionMismatch("each boundary ring must lie inside the other region's interior")

    def interior(self, s: int) -> np.ndarray:
        return self.I1 if s == 1 else self.I2

    def boundary(self, s: int) -> np.ndarray:
        return self.B1 if s == 1 else self.B2

    def region(self, s: int) -> np.ndarray:
        return np.concatenate([self.interior(s), self.boundary(s)])

    def counts(self) -> dict:
        return {"n1": len(self.I1), "m1": len(self.B1), "n2": len(self.I2), "m2": len(self.B2)}

    def transfer_positions(self, s: int) -> np.ndarray:
        """Positions of ``B_s`` inside the other region's interior ordering.

        This is the row selection ``P`` that picks boundary values of
        region ``s`` out of the other region's interior vector.
        """
        other = self.interior(2 if s == 1 else 1)
        return np.searchsorted(other, self.boundary(s))

    def fingerprint(self) -> str:
        h = hashlib.sha256()
        for a in (self.I1, self.B1, self.I2, self.B2):
            h.update(np.int64(len(a)).tobytes())
            h.update(a.tobytes())
        h.update(np.float64(self.radius).tobytes())
        return h.hexdigest()


@dataclass(frozen=True, eq=False)
class ParamState:
    """One iterate of the alternating scheme.

    ``h1`` and ``h2`` hold chart coordinates of the region vertices in the
    local order ``[I_s, B_s]``; ``L1``/``L2`` are the region Laplacians
    assembled at the latest positions ``f`` for that region, and
    ``factor1``/``factor2`` their interior factorizations.
    """

    mesh: TriMesh
    f: np.ndarray
    h1: np.ndarray
    h2: np.ndarray
    partition: IndexPartition
    k: int
    energy: float
    L1: StretchLaplacian
    L2: StretchLaplacian
    factor1: InteriorFactor = field(repr=False)
    factor2: InteriorFactor = field(repr=False)
    solver: str = "direct"

    def chart(self, s: int) -> np.ndarray:
        return self.h1 if s == 1 else self.h2

    def laplacian(self, s: int) -> StretchLaplacian:
        return self.L1 if s == 1 else self.L2


@dataclass(frozen=True)
class Snapshot:
    """Positions and chart values after the south and north steps of sweep ``k``."""

    k: int
    f_south: np.ndarray
    h1: np.ndarray
    f_north: np.ndarray
    h2: np.ndarray


@dataclass
class SEMConfig:
    tol: float = 1e-6
    radius: float = 1.1
    max_iter: int = 500
    warmup: int = 3
    solver: str = "direct"
    quasi_window: int = 50
    stagnation_window: int | None = 100

    def __post_init__(self):
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if not self.radius > 1:
            raise ValueError("radius must exceed 1")
        if self.max_iter < 0:
            raise ValueError("max_iter must be non-negative")
        if self.warmup < 1:
            raise ValueError("warmup must be at least 1")


@dataclass
class ConvergenceReport:
    energy_history: list[float]
    delta_history: list[float]
    sigma_history: list[float]
    final: dict
    iterations: int
    termination_reason: str
    initial_energy: float
    partition: dict
    energy_decreases: int = 0
    runtime_seconds: float = 0.0
    config: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "ConvergenceReport":
        return cls(**d)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_json(cls, text: str) -> "ConvergenceReport":
        return cls.from_dict(json.loads(text))


def _factor(L: StretchLaplacian, solver: str) -> InteriorFactor:
    return InteriorFactor(L.L_II, method=solver)


def _dirichlet(L: StretchLaplacian, factor: InteriorFactor, h_b: np.ndarray) -> np.ndarray:
    return factor.solve(-(L.L_IB @ h_b))


def fix_indices(mesh: TriMesh, f, r: float = 1.1, warmup: int = 3, solver: str = "direct"):
    """Warm-up passes that settle the interior/boundary partition.

    Each pass visits region 1 and then region 2: the sets are built from
    the current chart moduli, the region Laplacian is assembled at ``f``,
    the interior is replaced by the harmonic extension of the boundary
    chart values and lifted back to the sphere.  The sets of the last
    pass are returned together with the updated positions.

    Raises
    ------
    EmptyInterior, EmptyBoundary
    """
    f = np.array(f, dtype=float, copy=True)
    sets: dict[int, tuple[np.ndarray, np.ndarray]] = {}
    for _ in range(warmup):
        for s in (1, 2):
            interior, boundary = region_sets(mesh, chart_modulus(f, s), r)
            if len(interior) == 0:
                raise EmptyInterior(f"region {s} has no vertex with |h| < {r}")
            if len(boundary) == 0:
                raise EmptyBoundary(f"region {s} covers the whole mesh at radius {r}")
            L = assemble_region(mesh, f, s, interior, boundary)
            h_b = chart_project(f[boundary], s)
            h_i = _dirichlet(L, _factor(L, solver), h_b)
            f[interior] = chart_lift(h_i, s)
            sets[s] = (interior, boundary)
    part = IndexPartition(sets[1][0], sets[1][1], sets[2][0], sets[2][1], r)
    return part, f


def initial_state(mesh: TriMesh, f, partition: IndexPartition, solver: str = "direct") -> ParamState:
    """Iterate ``k = 0``: both charts and Laplacians taken at ``f``."""
    f = _ro(f)
    L1 = assemble_region(mesh, f, 1, partition.I1, partition.B1)
    L2 = assemble_region(mesh, f, 2, partition.I2, partition.B2)
    return ParamState(
        mesh=mesh,
        f=f,
        h1=_ro(chart_project(f[partition.region(1)], 1)),
        h2=_ro(chart_project(f[partition.region(2)], 2)),
        partition=partition,
        k=0,
        energy=stretch_energy(mesh, f),
        L1=L1,
        L2=L2,
        factor1=_factor(L1, solver),
        factor2=_factor(L2, solver),
        solver=solver,
    )


def _half_step(state: ParamState, s: int) -> ParamState:
    part = state.partition
    o = 2 if s == 1 else 1
    n_o = len(part.interior(o))
    donor = state.chart(o)[:n_o]
    h_b = invert_plane(donor[part.transfer_positions(s)])
    L = state.laplacian(s)
    factor = state.factor1 if s == 1 else state.factor2
    h_i = _dirichlet(L, factor, h_b)
    interior = part.interior(s)
    f = np.array(state.f, copy=True)
    f[interior] = chart_lift(h_i, s)
    L_new = assemble_region(state.mesh, f, s, interior, part.boundary(s))
    changes = {
        "f": _ro(f),
        f"h{s}": _ro(np.concatenate([h_i, h_b])),
        f"L{s}": L_new,
        f"factor{s}": _factor(L_new, state.solver),
    }
    if s == 1:
        changes["k"] = state.k + 1
    return dataclasses.replace(state, **changes)


def south_step(state: ParamState) -> ParamState:
    """Update chart 1 from inverted chart 2 boundary data; advances ``k``."""
    return _half_step(state, 1)


def north_step(state: ParamState) -> ParamState:
    """Update chart 2 from inverted chart 1 boundary data."""
    return _half_step(state, 2)


def sweep(state: ParamState) -> tuple[ParamState, ParamState]:
    """One south step followed by one north step; returns both states.

    The energy of the returned north state is refreshed.
    """
    south = south_step(state)
    north = north_step(south)
    north = dataclasses.replace(north, energy=stretch_energy(north.mesh, north.f))
    return south, north


def _sign_flips(deltas: list[float], tol: float) -> int:
    """Length of the trailing run of sign-alternating deltas above ``tol``."""
    run = 0
    for a, b in zip(reversed(deltas[:-1]), reversed(deltas[1:])):
        if abs(b) > tol and abs(a) > tol and np.sign(a) != np.sign(b):
            run += 1
        else:
            break
    return run


def run_sem(
    mesh: TriMesh,
    config: SEMConfig | None = None,
    init=None,
    snapshots: list | None = None,
    callback=None,
) -> tuple[ParamState, ConvergenceReport]:
    """Run the full minimization on an area-normalized mesh.

    Parameters
    ----------
    mesh : TriMesh
    config : SEMConfig, optional
    init : ndarray or ConformalMap, optional
        Initial unit-sphere positions; computed with
        :func:`conformal_initialize` when omitted.
    snapshots : list, optional
        If given, a :class:`Snapshot` is appended for ``k = 0`` and every
        sweep.
    callback : callable, optional
        Called as ``callback(state)`` after every sweep.

    Returns
    -------
    (ParamState, ConvergenceReport)

    Raises
    ------
    NonFiniteEnergy
        The energy became NaN or infinite; ``exc.state`` holds the iterate.
    """
    cfg = config or SEMConfig()
    t0 = time.perf_counter()
    if init is None:
        init = conformal_initialize(mesh)
    f0 = init.f0 if isinstance(init, ConformalMap) else np.asarray(init, dtype=float)
    if f0.shape != (mesh.n_vertices, 3):
        raise ValueError("initial map has the wrong shape")

    partition, f = fix_indices(mesh, f0, cfg.radius, cfg.warmup, cfg.solver)
    state = initial_state(mesh, f, partition, cfg.solver)
    key = partition.fingerprint()
    if snapshots is not None:
        snapshots.append(Snapshot(0, state.f, state.h1, state.f, state.h2))

    energies: list[float] = []
    deltas: list[float] = []
    sig_changes: list[float] = []
    sigma_prev = stretch_factors(mesh, state.f)
    e_prev = state.energy
    reason = "max_iter"
    decreases = 0
    best = math.inf
    best_at = 0
    while state.k < cfg.max_iter:
        south, state = sweep(state)
        if state.partition.fingerprint() != key:
            raise AssertionError("partition changed during iteration")
        e = state.energy
        if not math.isfinite(e):
            raise NonFiniteEnergy(f"energy {e} at iteration {state.k}", state=state)
        sigma = stretch_factors(mesh, state.f)
        delta = e - e_prev
        energies.append(e)
        deltas.append(delta)
        sig_changes.append(float(np.linalg.norm(sigma - sigma_prev)))
        if state.k > 3 and delta < -1e-9:
            decreases += 1
            log.debug("energy decreased by %.3e at iteration %d", -delta, state.k)
        sigma_prev = sigma
        e_prev = e
        if snapshots is not None:
            snapshots.append(Snapshot(state.k, south.f, south.h1, state.f, state.h2))
        if callback is not None:
            callback(state)
        if abs(delta) <= cfg.tol:
            reason = "tolerance"
            break
        if _sign_flips(deltas, cfg.tol) + 1 >= cfg.quasi_window:
            reason = "quasi_periodic_suspected"
            break
        if abs(delta) < best:
            best, best_at = abs(delta), state.k
        elif cfg.stagnation_window and state.k - best_at >= cfg.stagnation_window:
            reason = "stagnation"
            break

    stats = stretch_stats(mesh, state.f)
    report = ConvergenceReport(
        energy_history=energies,
        delta_history=deltas,
        sigma_history=sig_changes,
        final=stats.summary(),
        iterations=state.k,
        termination_reason=reason,
        initial_energy=float(stretch_energy(mesh, f)),
        partition=partition.counts(),
        energy_decreases=decreases,
        runtime_seconds=time.perf_counter() - t0,
        config=dataclasses.asdict(cfg),
    )
    return state, report
