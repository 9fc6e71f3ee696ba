"""Transfer maps between the unit sphere and the complex plane.

The south pole (0, 0, -1) maps to the origin and the north pole is the
point at infinity.  Plane inversion ``z -> z / |z|**2`` corresponds to the
reflection ``(x, y, z) -> (x, y, -z)`` on the sphere, which is how the
north chart is obtained from the south one.
"""

from __future__ import annotations

import numpy as np

from .errors import OriginError, PoleError

POLE_TOL = 1e-12
ORIGIN_TOL = 1e-14
UNIT_TOL = 1e-9


def stereographic_project(p):
    """Project unit 3D point(s) to the complex plane from the north pole.

    Parameters
    ----------
    p : array_like, shape (3,) or (n, 3)
        Points on the unit sphere.

    Returns
    -------
    complex or ndarray of complex
        ``(x + i y) / (1 - z)`` for each point.  On the upper hemisphere
        the equal form ``(x + i y)(1 + z) / (x^2 + y^2)`` is used, which
        avoids cancellation in ``1 - z`` near the pole.

    Raises
    ------
    PoleError
        If a point lies within ``1e-12`` of the north pole.
    ValueError
        If a point is not unit length within ``1e-9``.
    """
    p = np.asarray(p, dtype=float)
    pts = np.atleast_2d(p)
    if pts.shape[-1] != 3:
        raise ValueError(f"expected 3D points, got shape {p.shape}")
    norms = np.linalg.norm(pts, axis=1)
    if np.any(np.abs(norms - 1.0) > UNIT_TOL):
        raise ValueError("stereographic_project expects unit vectors")
    dist = np.linalg.norm(pts - np.array([0.0, 0.0, 1.0]), axis=1)
    if np.any(dist < POLE_TOL):
        raise PoleError(f"{int(np.sum(dist < POLE_TOL))} point(s) at the north pole")
    x, y, zc = pts[:, 0], pts[:, 1], pts[:, 2]
    w = x + 1j * y
    upper = zc > 0
    z = np.empty(len(pts), dtype=complex)
    z[~upper] = w[~upper] / (1.0 - zc[~upper])
    z[upper] = w[upper] * (1.0 + zc[upper]) / (x[upper] ** 2 + y[upper] ** 2)
    return z[0] if p.ndim == 1 else z


def inverse_stereographic(z):
    """Map complex number(s) back to the unit sphere.

    Returns ``(2u, 2v, |z|^2 - 1) / (|z|^2 + 1)``.  Points with ``|z| > 1``
    are evaluated through ``1 / conj(z)`` so very large inputs do not
    overflow.
    """
    z = np.asarray(z, dtype=complex)
    zz = np.atleast_1d(z)
    if not np.all(np.isfinite(zz)):
        raise ValueError("inverse_stereographic requires finite input")
    out = np.empty(zz.shape + (3,))
    mod2 = zz.real**2 + zz.imag**2
    near = mod2 <= 1.0
    a = zz[near]
    m = mod2[near]
    out[near, 0] = 2.0 * a.real / (m + 1.0)
    out[near, 1] = 2.0 * a.imag / (m + 1.0)
    out[near, 2] = (m - 1.0) / (m + 1.0)
    far = ~near
    if np.any(far):
        w = 1.0 / np.conj(zz[far])
        mw = w.real**2 + w.imag**2
        out[far, 0] = 2.0 * w.real / (1.0 + mw)
        out[far, 1] = 2.0 * w.imag / (1.0 + mw)
        out[far, 2] = (1.0 - mw) / (1.0 + mw)
    return out[0] if z.ndim == 0 else out


def invert_plane(h):
    """Entrywise plane inversion ``z / |z|^2``.

    Raises
    ------
    OriginError
        If any entry has modulus below ``1e-14``.
    """
    h = np.asarray(h, dtype=complex)
    if np.any(np.abs(h) < ORIGIN_TOL):
        raise OriginError("plane inversion at the origin")
    return 1.0 / np.conj(h)


def reflect(p):
    """Reflect sphere point(s) across the equatorial plane."""
    q = np.array(p, dtype=float, copy=True)
    q[..., 2] *= -1.0
    return q


def chart_project(p, chart: int):
    """Planar coordinates of sphere point(s) in chart 1 (south) or 2 (north).

    Chart 2 coordinates are the inversion of chart 1 coordinates, computed
    directly from the reflected points so no division by a tiny modulus
    occurs.
    """
    if chart == 1:
        return stereographic_project(p)
    if chart == 2:
        return stereographic_project(reflect(p))
    raise ValueError(f"chart must be 1 or 2, got {chart}")


def chart_lift(z, chart: int):
    """Inverse of :func:`chart_project`."""
    if chart == 1:
        return inverse_stereographic(z)
    if chart == 2:
        return reflect(inverse_stereographic(z))
    raise ValueError(f"chart must be 1 or 2, got {chart}")
