"""Joint invariants, three-point Euclidean estimators and closed-form oracles.

Curvature is signed: positive on a counter-clockwise convex arc.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import trapezoid

from . import kernels
from .curves import PlanarCurve
from .errors import DegenerateInputError, InvalidSizeError


@dataclass(frozen=True)
class JetPoint:
    """Derivatives ``f', f'', f'''`` of a graph ``y = f(x)`` at one point."""

    f1: float
    f2: float
    f3: float = 0.0


@dataclass(frozen=True)
class ParamJet:
    """First and second derivatives of a parametrized curve ``(x(t), y(t))``."""

    x1: float
    y1: float
    x2: float
    y2: float


def euclidean_distance(p, q) -> float:
    d = np.asarray(q, dtype=np.float64) - np.asarray(p, dtype=np.float64)
    return float(np.hypot(d[0], d[1]))


def triangle_area(p1, p2, p3) -> float:
    """Half the absolute cross product; the SA(2) joint invariant."""
    p1, p2, p3 = (np.asarray(p, dtype=np.float64) for p in (p1, p2, p3))
    u, v = p2 - p1, p3 - p1
    return float(abs(u[0] * v[1] - u[1] * v[0]) / 2.0)


def circumcircle_curvature(p1, p2, p3) -> float:
    """Signed curvature ``4 * area / (a * b * c)`` of the circle through 3 points.

    The area comes from Heron's formula with sides sorted so thin triangles
    do not cancel; the sign is that of ``(p2 - p1) x (p3 - p2)``.
    """
    pts = np.asarray([p1, p2, p3], dtype=np.float64)
    if (
        np.all(pts[0] == pts[1])
        or np.all(pts[1] == pts[2])
        or np.all(pts[0] == pts[2])
    ):
        raise DegenerateInputError("circumcircle needs three distinct points")
    return float(kernels.three_point_curvature(pts[0][None], pts[1][None], pts[2][None])[0])


def _triple_curvature(curve: PlanarCurve, i: int) -> float:
    n = len(curve)
    if curve.closed:
        a, b = (i - 1) % n, (i + 1) % n
    else:
        if i - 1 < 0 or i + 1 >= n:
            raise InvalidSizeError(f"index {i} has no two neighbours on an open curve")
        a, b = i - 1, i + 1
    p = curve.points
    return circumcircle_curvature(p[a], p[i % n], p[b])


def axiomatic_kappa_s(curve: PlanarCurve, i: int) -> float:
    """``(k(x[i+1]) - k(x[i-1])) / |x[i+1] - x[i-1]|`` with three-point k."""
    n = len(curve)
    if not curve.closed and (i - 2 < 0 or i + 2 >= n):
        raise InvalidSizeError(f"index {i} needs two neighbours on each side")
    p = curve.points
    k_prev = _triple_curvature(curve, (i - 1) % n if curve.closed else i - 1)
    k_next = _triple_curvature(curve, (i + 1) % n if curve.closed else i + 1)
    d = euclidean_distance(p[(i - 1) % n], p[(i + 1) % n])
    return (k_next - k_prev) / d


def curvature_from_jet(j: JetPoint) -> float:
    return j.f2 / (1.0 + j.f1**2) ** 1.5


def kappa_s_from_jet(j: JetPoint) -> float:
    g = 1.0 + j.f1**2
    return (j.f3 * g - 3.0 * j.f2**2 * j.f1) / g**3


def euclidean_arclength_element(f1: float, dx: float) -> float:
    """Density ``sqrt(1 + f'^2)`` times ``dx``.

    Dividing a finite difference in ``x`` by this density gives the
    invariant derivative ``d/ds``.
    """
    return float(np.sqrt(1.0 + np.square(f1)) * dx)


def equiaffine_arclength_element(j: ParamJet, dt: float) -> float:
    return float(np.cbrt(abs(j.x1 * j.y2 - j.y1 * j.x2)) * dt)


def equiaffine_arclength(points, closed: bool = False) -> float:
    """Equi-affine length of a densely sampled curve from discrete derivatives.

    Uses ``sum |x' y'' - y' x''|^(1/3) dt`` with centred differences in the
    sample index; exact in the limit of dense, smooth sampling.
    """
    p = np.asarray(points, dtype=np.float64)
    if closed:
        d1 = (np.roll(p, -1, 0) - np.roll(p, 1, 0)) / 2.0
        d2 = np.roll(p, -1, 0) - 2 * p + np.roll(p, 1, 0)
        dens = np.cbrt(np.abs(d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0]))
        return float(dens.sum())
    d1 = np.gradient(p, axis=0, edge_order=2)
    d2 = np.gradient(d1, axis=0, edge_order=2)
    dens = np.cbrt(np.abs(d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0]))
    return float(trapezoid(dens))


def point_curvatures(curve: PlanarCurve) -> np.ndarray:
    """Three-point curvature at every point; NaN where undefined."""
    return kernels.circumcurvature(curve.points, curve.closed)


def axiomatic_euclidean_signature(curve: PlanarCurve, ref: int = 0):
    """Three-point curvature against chord length accumulated from ``ref``."""
    from .signature import Signature

    n = len(curve)
    if n < 5:
        raise InvalidSizeError("signature needs at least 5 points")
    order = (np.arange(n) + ref) % n if curve.closed else np.arange(ref, n)
    p = curve.points[order]
    k = kernels.circumcurvature(p, curve.closed)
    bad = ~np.isfinite(k)
    if bad.all():
        raise DegenerateInputError("no valid point triples")
    if bad.any():
        good = np.flatnonzero(~bad)
        k[bad] = np.interp(np.flatnonzero(bad), good, k[good])
    d = np.hypot(*np.diff(p, axis=0).T)
    s = np.concatenate([[0.0], np.cumsum(d)])
    total = s[-1] + (np.hypot(*(p[0] - p[-1])) if curve.closed else 0.0)
    return Signature(
        s=s, kappa=k, index=order, group="se2", ref=ref,
        models=("axiomatic", "chord"), total=float(total),
    )
