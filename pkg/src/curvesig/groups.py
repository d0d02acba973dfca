"""Planar transformation groups SE(2), E(2), SA(2) and A(2).

An element acts by ``p -> A p + a``. Sampling is bounded: the linear part
of every random element has condition number at most ``cond_max``, and for
A(2) a positive determinant inside ``det_range``.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass

import numpy as np

from .curves import PlanarCurve, PointSample
from .errors import InvalidParameterError, NonInvertibleError

_TOL = 1e-9


class GroupKind(str, enum.Enum):
    SE2 = "se2"
    E2 = "e2"
    SA2 = "sa2"
    A2 = "a2"

    @classmethod
    def parse(cls, value) -> "GroupKind":
        if isinstance(value, cls):
            return value
        return cls(str(value).lower())


# least to most restrictive; composition promotes to the looser kind
_ORDER = {GroupKind.SE2: 0, GroupKind.E2: 1, GroupKind.SA2: 2, GroupKind.A2: 3}


def _common_kind(k1: GroupKind, k2: GroupKind) -> GroupKind:
    if {k1, k2} == {GroupKind.E2, GroupKind.SA2}:
        return GroupKind.A2
    return k1 if _ORDER[k1] >= _ORDER[k2] else k2


def rotation(theta: float) -> np.ndarray:
    c, s = np.cos(theta), np.sin(theta)
    return np.array([[c, -s], [s, c]])


@dataclass(frozen=True, eq=False)
class GroupElement:
    linear: np.ndarray
    translation: np.ndarray
    kind: GroupKind = GroupKind.A2

    def __post_init__(self):
        A = np.array(self.linear, dtype=np.float64).reshape(2, 2)
        a = np.array(self.translation, dtype=np.float64).reshape(2)
        A.flags.writeable = False
        a.flags.writeable = False
        object.__setattr__(self, "linear", A)
        object.__setattr__(self, "translation", a)
        object.__setattr__(self, "kind", GroupKind.parse(self.kind))
        check_kind(A, self.kind)

    @property
    def det(self) -> float:
        return float(np.linalg.det(self.linear))

    def to_json(self) -> dict:
        return {"kind": self.kind.value, "params": [*self.linear.ravel().tolist(), *self.translation.tolist()]}

    @classmethod
    def from_json(cls, obj) -> "GroupElement":
        if isinstance(obj, str):
            obj = json.loads(obj)
        p = obj["params"]
        return cls(np.reshape(p[:4], (2, 2)), p[4:6], obj["kind"])


def check_kind(A: np.ndarray, kind: GroupKind, det_range=None) -> None:
    d = A[0, 0] * A[1, 1] - A[0, 1] * A[1, 0]
    if d == 0 or not np.isfinite(d):
        raise NonInvertibleError("linear part is singular")
    if kind in (GroupKind.SE2, GroupKind.E2):
        if not np.allclose(A.T @ A, np.eye(2), atol=_TOL):
            raise InvalidParameterError(f"{kind.value} element must be orthogonal")
    if kind in (GroupKind.SE2, GroupKind.SA2) and abs(d - 1.0) > _TOL:
        raise InvalidParameterError(f"{kind.value} element must have det 1, got {d}")
    if det_range is not None and not det_range[0] <= d <= det_range[1]:
        raise InvalidParameterError(f"determinant {d} outside {det_range}")


def identity(kind: GroupKind = GroupKind.SE2) -> GroupElement:
    return GroupElement(np.eye(2), np.zeros(2), kind)


def apply(g: GroupElement, obj):
    """Map every point by ``g``. Curves, samples and raw arrays keep their type."""
    if isinstance(obj, PlanarCurve):
        return PlanarCurve(_apply_points(g, obj.points), obj.closed)
    if isinstance(obj, PointSample):
        return PointSample(_apply_points(g, obj.points), obj.kind, obj.indices)
    return _apply_points(g, np.asarray(obj, dtype=np.float64))


def _apply_points(g: GroupElement, p: np.ndarray) -> np.ndarray:
    return p @ g.linear.T + g.translation


def compose(g1: GroupElement, g2: GroupElement) -> GroupElement:
    """``g1 * g2``: apply ``g2`` first, then ``g1``."""
    A = g1.linear @ g2.linear
    a = g1.linear @ g2.translation + g1.translation
    return GroupElement(A, a, _common_kind(g1.kind, g2.kind))


def inverse(g: GroupElement) -> GroupElement:
    A = g.linear
    d = A[0, 0] * A[1, 1] - A[0, 1] * A[1, 0]
    if d == 0:
        raise NonInvertibleError("linear part is singular")
    Ai = np.array([[A[1, 1], -A[0, 1]], [-A[1, 0], A[0, 0]]]) / d
    return GroupElement(Ai, -Ai @ g.translation, g.kind)


def condition_number(g) -> float:
    A = g.linear if isinstance(g, GroupElement) else np.asarray(g)
    s = np.linalg.svd(A, compute_uv=False)
    return float(s[0] / s[-1])


def sample_linear(
    kind: GroupKind,
    rng: np.random.Generator,
    size: int,
    cond_max: float = 3.0,
    det_range: tuple[float, float] = (0.5, 2.0),
) -> np.ndarray:
    """``size`` random linear parts, shape (size, 2, 2).

    SE2 and E2 draw rotations; SA2 draws ``R(t1) diag(s, 1/s) R(t2)`` with
    ``s ~ U[1, sqrt(cond_max)]``; A2 additionally scales by ``sqrt(d)`` with
    ``d`` log-uniform on ``det_range``.
    """
    kind = GroupKind.parse(kind)
    if cond_max < 1:
        raise InvalidParameterError(f"cond_max must be >= 1, got {cond_max}")
    lo, hi = det_range
    if not 0 < lo <= hi:
        raise InvalidParameterError(f"det_range must lie in (0, inf), got {det_range}")
    t1 = rng.uniform(0.0, 2 * np.pi, size)
    c1, s1 = np.cos(t1), np.sin(t1)
    R1 = np.stack([np.stack([c1, -s1], -1), np.stack([s1, c1], -1)], -2)
    if kind is GroupKind.SE2:
        return R1
    if kind is GroupKind.E2:
        flip = np.where(rng.uniform(size=size) < 0.5, -1.0, 1.0)
        R1[:, :, 1] *= flip[:, None]
        return R1
    sig = rng.uniform(1.0, np.sqrt(cond_max), size)
    t2 = rng.uniform(0.0, 2 * np.pi, size)
    c2, s2 = np.cos(t2), np.sin(t2)
    R2 = np.stack([np.stack([c2, -s2], -1), np.stack([s2, c2], -1)], -2)
    D = np.zeros((size, 2, 2))
    D[:, 0, 0] = sig
    D[:, 1, 1] = 1.0 / sig
    A = R1 @ D @ R2
    if kind is GroupKind.A2:
        d = np.exp(rng.uniform(np.log(lo), np.log(hi), size))
        A = A * np.sqrt(d)[:, None, None]
    return A


def sample_group_element(
    kind,
    rng: np.random.Generator,
    cond_max: float = 3.0,
    det_range: tuple[float, float] = (0.5, 2.0),
) -> GroupElement:
    kind = GroupKind.parse(kind)
    A = sample_linear(kind, rng, 1, cond_max, det_range)[0]
    a = rng.uniform(-1.0, 1.0, 2)
    return GroupElement(A, a, kind)
