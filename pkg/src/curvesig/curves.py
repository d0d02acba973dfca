"""Discrete planar curves, non-uniform down-sampling and sample windows."""

from __future__ import annotations

import io
import os
from dataclasses import dataclass, field
from typing import Iterable, Literal

import numpy as np

from . import kernels
from .errors import BoundaryError, DegenerateInputError, InvalidSizeError

SampleKind = Literal["neighborhood", "section"]


def _frozen_points(points) -> np.ndarray:
    p = np.array(points, dtype=np.float64, copy=True)
    if p.ndim != 2 or p.shape[1] != 2:
        raise InvalidSizeError(f"expected (n, 2) points, got shape {p.shape}")
    if not np.all(np.isfinite(p)):
        raise ValueError("point coordinates must be finite")
    p.flags.writeable = False
    return p


@dataclass(frozen=True, eq=False)
class PlanarCurve:
    """Ordered points; a closed curve wraps from the last point to the first."""

    points: np.ndarray
    closed: bool = True

    def __post_init__(self):
        p = _frozen_points(self.points)
        if len(p) < 3:
            raise InvalidSizeError(f"a curve needs at least 3 points, got {len(p)}")
        if np.any(np.all(p[1:] == p[:-1], axis=1)):
            raise DegenerateInputError("consecutive points must be distinct")
        if self.closed and np.all(p[0] == p[-1]):
            raise DegenerateInputError("closed curve must not repeat its first point")
        object.__setattr__(self, "points", p)
        object.__setattr__(self, "closed", bool(self.closed))

    def __len__(self) -> int:
        return len(self.points)

    def __eq__(self, other):
        if not isinstance(other, PlanarCurve):
            return NotImplemented
        return self.closed == other.closed and np.array_equal(self.points, other.points)


@dataclass(frozen=True, eq=False)
class PointSample:
    """A fixed-length window of curve points fed to a network."""

    points: np.ndarray
    kind: SampleKind = "neighborhood"
    indices: np.ndarray | None = field(default=None, compare=False)

    def __post_init__(self):
        p = _frozen_points(self.points)
        if len(p) < 2:
            raise InvalidSizeError("a sample needs at least 2 points")
        object.__setattr__(self, "points", p)

    def __len__(self) -> int:
        return len(self.points)

    @property
    def mid(self) -> int:
        return len(self.points) // 2

    def flat(self) -> np.ndarray:
        return self.points.reshape(-1)

    def __eq__(self, other):
        if not isinstance(other, PointSample):
            return NotImplemented
        return self.kind == other.kind and np.array_equal(self.points, other.points)


def random_pmf(n: int, concentration: float, rng: np.random.Generator) -> np.ndarray:
    """Random probability mass function over ``n`` curve points.

    ``w_i = u_i**concentration / sum_j u_j**concentration`` with ``u`` i.i.d.
    uniform on (0, 1); larger ``concentration`` gives a more uneven mass.
    """
    if n < 3:
        raise InvalidSizeError(f"pmf needs n >= 3, got {n}")
    if not concentration > 0:
        raise ValueError("concentration must be positive")
    u = rng.uniform(np.finfo(float).tiny, 1.0, size=n)
    w = u**concentration
    return w / w.sum()


def downsample_indices(
    weights: np.ndarray,
    keep: int,
    required: Iterable[int] = (),
    rng: np.random.Generator | None = None,
) -> np.ndarray:
    """Indices of a weighted sample without replacement, in increasing order.

    Uses exponential keys ``log(u) / w`` (Efraimidis-Spirakis); picking the
    ``keep`` largest keys has the same law as drawing one index at a time
    with probabilities renormalized over the remaining indices.
    """
    w = np.asarray(weights, dtype=np.float64)
    n = len(w)
    req = np.unique(np.asarray(list(required), dtype=np.int64))
    if keep > n:
        raise InvalidSizeError(f"cannot keep {keep} of {n} points")
    if len(req) > keep:
        raise InvalidSizeError(f"{len(req)} required indices exceed keep={keep}")
    if keep == n:
        return np.arange(n)
    rng = np.random.default_rng() if rng is None else rng
    u = rng.uniform(np.finfo(float).tiny, 1.0, size=n)
    with np.errstate(divide="ignore"):
        keys = np.log(u) / w
    keys[req] = np.inf
    chosen = np.argpartition(keys, n - keep)[n - keep :]
    return np.sort(chosen)


def downsample(
    curve: PlanarCurve,
    pmf: np.ndarray,
    keep: int,
    required: Iterable[int] = (),
    rng: np.random.Generator | None = None,
) -> PlanarCurve:
    if len(pmf) != len(curve):
        raise InvalidSizeError("pmf length must match the curve")
    idx = downsample_indices(pmf, keep, required, rng)
    return PlanarCurve(curve.points[idx], curve.closed)


def window_indices(n: int, center: int, half_width: int, closed: bool) -> np.ndarray:
    offs = np.arange(-half_width, half_width + 1)
    if closed:
        return (center + offs) % n
    if center - half_width < 0 or center + half_width >= n:
        raise BoundaryError(
            f"window of half-width {half_width} around {center} leaves an open curve of {n} points"
        )
    return center + offs


def neighborhood(curve: PlanarCurve, center: int, half_width: int) -> PointSample:
    """The ``2 * half_width + 1`` consecutive points centred on ``center``."""
    n = len(curve)
    if not 0 <= center < n:
        raise BoundaryError(f"center {center} outside curve of {n} points")
    if curve.closed and 2 * half_width + 1 > n:
        raise BoundaryError("window longer than the curve")
    idx = window_indices(n, center, half_width, curve.closed)
    return PointSample(curve.points[idx], "neighborhood", idx)


def section_indices(n: int, i: int, j: int, closed: bool) -> np.ndarray:
    if i == j:
        raise InvalidSizeError("a section needs distinct end indices")
    if not (0 <= i < n and 0 <= j < n):
        raise BoundaryError(f"section ends ({i}, {j}) outside curve of {n} points")
    if j > i:
        return np.arange(i, j + 1)
    if not closed:
        raise BoundaryError("open curves only have forward sections")
    return np.arange(i, j + n + 1) % n


def section(curve: PlanarCurve, i: int, j: int) -> PointSample:
    """Points ``i..j`` inclusive in traversal order, wrapping on closed curves."""
    idx = section_indices(len(curve), i, j, curve.closed)
    return PointSample(curve.points[idx], "section", idx)


def normalize_sample(sample: PointSample) -> PointSample:
    """Move the middle-index point to the origin and the first point onto +x."""
    p = sample.points
    mid = len(p) // 2
    if np.all(p[0] == p[mid]):
        raise DegenerateInputError("first point coincides with the sample midpoint")
    out = kernels.normalize_windows(p[None], mid)[0]
    return PointSample(out, sample.kind, sample.indices)


def flip_sample(sample: PointSample) -> PointSample:
    idx = None if sample.indices is None else sample.indices[::-1]
    return PointSample(sample.points[::-1], sample.kind, idx)


def polyline_length(obj) -> float:
    """Sum of consecutive distances, closing edge included for closed curves."""
    if isinstance(obj, PlanarCurve):
        p, closed = obj.points, obj.closed
    elif isinstance(obj, PointSample):
        p, closed = obj.points, False
    else:
        p, closed = np.asarray(obj, dtype=np.float64), False
    if len(p) < 2:
        raise InvalidSizeError("length needs at least 2 points")
    d = np.diff(p, axis=0)
    total = np.hypot(d[:, 0], d[:, 1]).sum()
    if closed:
        total += np.hypot(*(p[0] - p[-1]))
    return float(total)


# -- curve files -------------------------------------------------------------

def save_curve(curve: PlanarCurve, path) -> None:
    """CSV with a ``# closed=0|1`` metadata line, an ``x,y`` header and
    coordinates written with 17 significant digits (exact round trip)."""
    buf = io.StringIO()
    buf.write(f"# closed={int(curve.closed)}\n")
    buf.write("x,y\n")
    np.savetxt(buf, curve.points, fmt="%.17g", delimiter=",")
    with open(path, "w") as fh:
        fh.write(buf.getvalue())


def load_curve(path) -> PlanarCurve:
    path = os.fspath(path)
    try:
        with open(path) as fh:
            first = fh.readline().strip()
            header = fh.readline().strip()
            body = fh.read()
    except OSError as exc:
        raise OSError(f"cannot read curve file {path}: {exc}") from exc
    if not first.startswith("# closed=") or header != "x,y":
        raise OSError(f"malformed curve file {path}")
    closed = first.split("=", 1)[1].strip() not in ("0", "false", "False")
    try:
        pts = np.loadtxt(io.StringIO(body), delimiter=",", dtype=np.float64, ndmin=2)
        return PlanarCurve(pts, closed)
    except ValueError as exc:
        raise OSError(f"corrupt curve file {path}: {exc}") from exc
