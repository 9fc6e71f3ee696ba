"""Dirichlet solves ``L_II h_I = -L_IB h_B`` with complex boundary data."""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import IllConditioned, InaccurateSolve, SingularSystem

RESIDUAL_TOL = 1e-10
COND_WARN = 1e12
PIVOT_TOL = 1e-14


@dataclass(frozen=True, eq=False)
class PartitionedSystem:
    """Interior block, interior-boundary block and boundary values."""

    L_II: sp.spmatrix
    L_IB: sp.spmatrix
    rhs: np.ndarray

    def __post_init__(self):
        n, n2 = self.L_II.shape
        if n != n2:
            raise ValueError("L_II must be square")
        if self.L_IB.shape[0] != n:
            raise ValueError("L_IB row count differs from L_II")
        if np.shape(self.rhs)[0] != self.L_IB.shape[1]:
            raise ValueError("boundary vector length differs from L_IB columns")


class InteriorFactor:
    """Factorization of ``L_II`` reused for real and imaginary parts.

    Parameters
    ----------
    L_II : sparse matrix
        Square, possibly indefinite.
    method : {"direct", "minres"}
        ``direct`` uses sparse LU; ``minres`` runs MINRES per column with
        relative tolerance ``1e-12`` and at most ``10 n`` iterations.
    check_condition : bool
        Estimate the 1-norm condition number and warn above ``1e12``.
    """

    def __init__(self, L_II, method: str = "direct", check_condition: bool = False):
        self.A = sp.csc_matrix(L_II, dtype=float)
        self.n = self.A.shape[0]
        self.method = method
        if method == "direct":
            try:
                self._lu = spla.splu(self.A)
            except RuntimeError as exc:
                raise SingularSystem(f"factorization failed: {exc}") from exc
            u = np.abs(self._lu.U.diagonal())
            scale = max(u.max(initial=0.0), 1.0)
            k = int(np.argmin(u)) if len(u) else 0
            if len(u) and (u[k] < PIVOT_TOL * scale or not np.isfinite(u).all()):
                raise SingularSystem(
                    f"near-zero pivot {u[k]:.3e} at column {int(self._lu.perm_c[k])}",
                    pivot=int(self._lu.perm_c[k]),
                )
        elif method != "minres":
            raise ValueError(f"unknown method {method!r}")
        if check_condition:
            c = self.condition_estimate()
            if c > COND_WARN:
                warnings.warn(f"interior system condition estimate {c:.2e}", IllConditioned, stacklevel=2)

    def condition_estimate(self) -> float:
        if self.method != "direct":
            Ainv = spla.LinearOperator(
                self.A.shape, matvec=self._solve_real, rmatvec=self._solve_real, dtype=float
            )
        else:
            Ainv = spla.LinearOperator(
                self.A.shape,
                matvec=self._solve_real,
                rmatvec=lambda b: self._lu.solve(np.asarray(b, float), trans="T"),
                dtype=float,
            )
        norm_a = spla.norm(self.A, 1)
        if self.n <= 4:
            return float(np.linalg.cond(self.A.toarray(), 1))
        return float(norm_a * spla.onenormest(Ainv))

    def _solve_real(self, b):
        b = np.asarray(b, dtype=float)
        if self.method == "direct":
            return self._lu.solve(b)
        cols = b.reshape(self.n, -1)
        out = np.empty_like(cols)
        for c in range(cols.shape[1]):
            x, info = spla.minres(self.A, cols[:, c], rtol=1e-12, maxiter=10 * self.n)
            if info != 0:
                raise SingularSystem(f"MINRES did not converge (info={info})")
            out[:, c] = x
        return out.reshape(b.shape)

    def solve(self, b):
        """Solve ``L_II x = b`` for real or complex ``b`` (vector or matrix)."""
        b = np.asarray(b)
        if np.iscomplexobj(b):
            both = np.concatenate([b.real.reshape(self.n, -1), b.imag.reshape(self.n, -1)], axis=1)
            x = self._solve_real(both)
            k = both.shape[1] // 2
            return (x[:, :k] + 1j * x[:, k:]).reshape(b.shape)
        return self._solve_real(b)


def solve_interior(sys: PartitionedSystem, factor: InteriorFactor | None = None, method: str = "direct"):
    """Interior values of the discrete harmonic extension of ``sys.rhs``.

    Returns ``h_I`` with ``L_II h_I = -L_IB h_B``.  A warning of type
    :class:`InaccurateSolve` is issued when the residual exceeds
    ``1e-10 * ||L_IB h_B||_inf``.
    """
    if factor is None:
        factor = InteriorFactor(sys.L_II, method=method)
    b = -(sys.L_IB @ np.asarray(sys.rhs))
    x = factor.solve(b)
    res = np.max(np.abs(sys.L_II @ x - b), initial=0.0)
    bound = RESIDUAL_TOL * max(np.max(np.abs(b), initial=0.0), np.finfo(float).tiny)
    if res > bound:
        warnings.warn(f"interior solve residual {res:.2e} exceeds {bound:.2e}", InaccurateSolve, stacklevel=2)
    return x


def apply_transfer(sys: PartitionedSystem, factor: InteriorFactor | None = None) -> np.ndarray:
    """Dense boundary-to-interior operator ``-L_II^{-1} L_IB``."""
    if factor is None:
        factor = InteriorFactor(sys.L_II)
    return -factor.solve(np.asarray(sys.L_IB.toarray(), dtype=float))
