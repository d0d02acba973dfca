"""Traditional signatures (curvature against invariant arc-length) and their comparison."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .curves import PlanarCurve, polyline_length
from .errors import BoundaryError, CalibrationError, ComparisonError, InvalidSizeError
from .nn import MLPParams, Model, mlp_forward


@dataclass(eq=False)
class Signature:
    """``kappa[k]`` at cumulative arc-length ``s[k]``, traversal starting at ``ref``.

    ``index[k]`` is the curve point of entry ``k``; ``total`` is the full
    length of a closed curve (including the closing increment).
    """

    s: np.ndarray
    kappa: np.ndarray
    index: np.ndarray
    group: str = "se2"
    ref: int = 0
    models: tuple = ()
    total: float | None = None
    increments: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        self.s = np.asarray(self.s, dtype=np.float64)
        self.kappa = np.asarray(self.kappa, dtype=np.float64)
        self.index = np.asarray(self.index, dtype=np.int64)
        if not (len(self.s) == len(self.kappa) == len(self.index)):
            raise InvalidSizeError("s, kappa and index must have equal length")

    def __len__(self):
        return len(self.s)


def _evaluate(model, windows: np.ndarray) -> np.ndarray:
    """Model outputs for normalized windows of shape (B, L, 2)."""
    if isinstance(model, Model):
        model = model.params
    if isinstance(model, MLPParams):
        return mlp_forward(model, windows.reshape(len(windows), -1))
    return np.array([float(model(w)) for w in windows])


def _normalized(points: np.ndarray, index: np.ndarray, mid: int) -> np.ndarray:
    B = len(index)
    eye = np.broadcast_to(np.eye(2), (B, 2, 2))
    return kernels.gather_normalize(points, index, eye, np.zeros((B, 2)), mid)


def _window(model, default):
    return model.window if isinstance(model, Model) else default


def default_skip(i: int, n_section: int) -> int:
    """Middle interior index of the window ``i - n_section + 1 .. i + 1``."""
    return i - n_section + 1 + n_section // 2


def _adjacent_windows(n: int, closed: bool, i: np.ndarray, n_section: int, skip=None):
    i = np.asarray(i, dtype=np.int64)
    start = i - n_section + 1
    rel = np.arange(n_section)
    S_i = start[:, None] + rel
    skip = default_skip(i, n_section) if skip is None else np.broadcast_to(np.asarray(skip), i.shape)
    if np.any((skip <= start) | (skip >= i + 1)):
        raise BoundaryError("skip index must lie strictly inside the window")
    full = start[:, None] + np.arange(n_section + 1)
    keep = full != skip[:, None]
    S_next = full[keep].reshape(len(i), n_section)
    if closed:
        return S_i % n, S_next % n
    if np.any(start < 0) or np.any(i + 1 >= n):
        raise BoundaryError("arc-length window leaves the open curve")
    return S_i, S_next


def adjacent_arclength(model, curve: PlanarCurve, i: int, skip: int | None = None,
                       n_section: int = 40) -> float:
    """``M(S_{i+1}) - M(S_i)``: the model's arc-length between points i and i+1.

    ``S_i`` is the ``n_section`` points ending at ``i``; ``S_{i+1}`` ends at
    ``i + 1`` and leaves out ``skip`` so it has the same size.
    """
    n_section = _window(model, n_section)
    n = len(curve)
    if n < n_section + 1:
        raise BoundaryError(f"curve of {n} points is shorter than a window of {n_section + 1}")
    a, b = _adjacent_windows(n, curve.closed, np.array([i]), n_section,
                             None if skip is None else np.array([skip]))
    w = _normalized(curve.points, np.concatenate([a, b]), n_section // 2)
    out = _evaluate(model, w)
    return float(out[1] - out[0])


def learned_curvature(model, curve: PlanarCurve, half_width: int = 6, order=None) -> np.ndarray:
    half_width = _window(model, half_width)
    n = len(curve)
    order = np.arange(n) if order is None else np.asarray(order)
    if curve.closed:
        if n < 2 * half_width + 1:
            raise BoundaryError("curve shorter than a curvature window")
        idx = (order[:, None] + np.arange(-half_width, half_width + 1)) % n
    else:
        if np.any(order - half_width < 0) or np.any(order + half_width >= n):
            raise BoundaryError("curvature window leaves the open curve")
        idx = order[:, None] + np.arange(-half_width, half_width + 1)
    return _evaluate(model, _normalized(curve.points, idx, half_width))


def build_signature(curve: PlanarCurve, k_model, s_model, ref: int = 0,
                    half_width: int = 6, n_section: int = 40) -> Signature:
    """Learned signature of a closed curve, traversed from ``ref``.

    ``s[0] = 0`` and ``s[k + 1] - s[k]`` is the adjacent arc-length between
    consecutive points; ``total`` adds the closing increment.
    """
    if not curve.closed:
        raise BoundaryError("learned signatures are defined for closed curves")
    n_section = _window(s_model, n_section)
    n = len(curve)
    if n < n_section + 1:
        raise BoundaryError(f"curve of {n} points is shorter than a window of {n_section + 1}")
    order = (ref + np.arange(n)) % n
    kappa = learned_curvature(k_model, curve, half_width, order)
    a, b = _adjacent_windows(n, True, order, n_section)
    w = _normalized(curve.points, np.concatenate([a, b]), n_section // 2)
    out = _evaluate(s_model, w)
    inc = out[n:] - out[:n]
    s = np.concatenate([[0.0], np.cumsum(inc[:-1])])
    group = s_model.group if isinstance(s_model, Model) else "se2"
    names = tuple(str(m.meta.get("name", m.task)) if isinstance(m, Model) else "callable" for m in (k_model, s_model))
    return Signature(s, kappa, order, group, ref, names, float(s[-1] + inc[-1]), inc)


@dataclass
class Calibration:
    scale: float
    correlation: float
    n: int


def calibrate_scale(s_model, sections, oracle) -> Calibration:
    """Least-squares slope (through the origin) of model output on oracle value.

    ``sections`` are (n_section, 2) arrays of raw section points; they are
    normalized before evaluation. ``oracle`` maps a section to its reference
    length.
    """
    sections = [np.asarray(s, dtype=np.float64) for s in sections]
    if len(sections) < 10:
        raise CalibrationError("calibration needs at least 10 sections")
    L = len(sections[0])
    w = kernels.normalize_windows(np.stack(sections), L // 2)
    y = _evaluate(s_model, w)
    x = np.array([float(oracle(s)) for s in sections])
    if np.std(x) <= 1e-12 * max(np.abs(x).max(), 1.0):
        raise CalibrationError("oracle values have no spread")
    c = float(np.dot(x, y) / np.dot(x, x))
    r = float(np.corrcoef(x, y)[0, 1]) if np.std(y) > 0 else 0.0
    return Calibration(c, r, len(x))


def rescale(sig: Signature, c: float) -> Signature:
    """Divide arc-lengths by a calibration constant."""
    inc = None if sig.increments is None else sig.increments / c
    total = None if sig.total is None else sig.total / c
    return Signature(sig.s / c, sig.kappa.copy(), sig.index.copy(), sig.group, sig.ref, sig.models, total, inc)


def _iqr(x: np.ndarray) -> float:
    q75, q25 = np.percentile(x, [75, 25])
    return float(q75 - q25)


def _discrepancy(s1, k1, s2, k2, grid: int) -> float:
    s1 = np.maximum.accumulate(s1 - s1[0])
    s2 = np.maximum.accumulate(s2 - s2[0])
    end = min(s1[-1], s2[-1])
    if not end > 0:
        raise ComparisonError("signatures have no overlapping arc-length range")
    iqr = _iqr(k1)
    if not iqr > 0:
        raise ComparisonError("first signature has zero curvature spread")
    t = np.linspace(0.0, end, grid)
    a = np.interp(t, s1, k1)
    b = np.interp(t, s2, k2)
    return float(np.mean(np.abs(a - b)) / iqr)


def signature_discrepancy(sig1: Signature, sig2: Signature, grid: int = 512) -> float:
    """Mean |k1 - k2| over a shared uniform arc-length grid, in units of IQR(k1)."""
    if len(sig1) == 0 or len(sig2) == 0:
        raise ComparisonError("empty signature")
    return _discrepancy(sig1.s, sig1.kappa, sig2.s, sig2.kappa, grid)


def index_parametrized(sig1: Signature, sig2: Signature):
    """Curvature against raw sample index for both signatures."""
    return (np.arange(len(sig1), dtype=np.float64), sig1.kappa), (np.arange(len(sig2), dtype=np.float64), sig2.kappa)


def index_discrepancy(sig1: Signature, sig2: Signature, grid: int = 512) -> float:
    """Same statistic as ``signature_discrepancy`` with sample index as parameter."""
    (x1, k1), (x2, k2) = index_parametrized(sig1, sig2)
    return _discrepancy(x1, k1, x2, k2, grid)


def save_signature(sig: Signature, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["index", "s", "kappa"])
        for i, s, k in zip(sig.index, sig.s, sig.kappa):
            w.writerow([int(i), repr(float(s)), repr(float(k))])


def load_signature(path) -> Signature:
    try:
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise OSError(f"cannot read signature {path}: {exc}") from exc
    if not rows or rows[0] != ["index", "s", "kappa"]:
        raise OSError(f"{path} is not a signature CSV")
    body = np.array(rows[1:], dtype=np.float64).reshape(-1, 3)
    idx = body[:, 0].astype(np.int64)
    return Signature(body[:, 1], body[:, 2], idx, ref=int(idx[0]) if len(idx) else 0)


def section_length(points) -> float:
    return polyline_length(np.asarray(points))
