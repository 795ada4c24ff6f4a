"""Index-set geometry for the three supported domains.

Points live on one of

* ``"torus"``: the unit circle identified with ``[0, 1)``, wrap-around metric;
* ``"line"``: the real line, absolute-value metric;
* ``"plane"``: the complex plane, modulus metric.

Scalar helpers take :class:`DomainPoint` values; the vectorised ``metric`` is
what the numerical modules use internally.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import SeparationUndefinedError, VariantMismatchError

KINDS = ("torus", "line", "plane")


def _check_kind(kind: str) -> str:
    if kind not in KINDS:
        raise VariantMismatchError(f"unknown domain variant {kind!r}")
    return kind


def wrap_torus(x):
    """Reduce torus coordinates into ``[0, 1)``."""
    y = np.mod(x, 1.0)
    # np.mod(-1e-18, 1.0) rounds to 1.0
    return np.where(y >= 1.0, 0.0, y)


@dataclass(frozen=True)
class DomainPoint:
    """A point of the ambient index set."""

    kind: str
    value: float | complex

    def __post_init__(self):
        _check_kind(self.kind)
        v = self.value
        if self.kind == "plane":
            v = complex(v)
            if not (math.isfinite(v.real) and math.isfinite(v.imag)):
                raise ValueError("plane coordinate must be finite")
        else:
            if isinstance(v, complex):
                if v.imag != 0.0:
                    raise VariantMismatchError(f"{self.kind} coordinate must be real")
                v = v.real
            v = float(v)
            if not math.isfinite(v):
                raise ValueError(f"{self.kind} coordinate must be finite")
            if self.kind == "torus":
                v = float(wrap_torus(v))
        object.__setattr__(self, "value", v)

    @classmethod
    def torus(cls, x: float) -> "DomainPoint":
        return cls("torus", x)

    @classmethod
    def line(cls, x: float) -> "DomainPoint":
        return cls("line", x)

    @classmethod
    def plane(cls, z: complex) -> "DomainPoint":
        return cls("plane", z)


def metric(kind: str, a, b) -> np.ndarray:
    """Vectorised distance between coordinate arrays ``a`` and ``b`` (broadcasting)."""
    a = np.asarray(a)
    b = np.asarray(b)
    if kind == "torus":
        d = np.abs(np.mod(a - b, 1.0))
        return np.minimum(d, 1.0 - d)
    if kind in ("line", "plane"):
        return np.abs(a - b)
    raise VariantMismatchError(f"unknown domain variant {kind!r}")


def distance(a: DomainPoint, b: DomainPoint) -> float:
    """Distance between two points of the same variant."""
    if a.kind != b.kind:
        raise VariantMismatchError(f"cannot measure distance between {a.kind} and {b.kind}")
    return float(metric(a.kind, a.value, b.value))


class SupportSet:
    """Ordered set of pairwise distinct points of a single variant.

    Coordinates are held in a numpy array (float for torus/line, complex for
    plane) in :attr:`coords`.
    """

    def __init__(self, kind: str, coords: Iterable):
        self.kind = _check_kind(kind)
        dtype = complex if kind == "plane" else float
        arr = np.array(list(coords) if not isinstance(coords, np.ndarray) else coords, dtype=dtype).ravel()
        if not np.all(np.isfinite(arr)):
            raise ValueError("support coordinates must be finite")
        if kind == "torus":
            arr = wrap_torus(arr)
        if arr.size >= 2:
            d = metric(kind, arr[:, None], arr[None, :])
            np.fill_diagonal(d, np.inf)
            if np.min(d) <= 0.0:
                raise ValueError("support points must be pairwise distinct")
        self.coords = arr
        self.coords.setflags(write=False)

    @classmethod
    def from_points(cls, points: Sequence[DomainPoint]) -> "SupportSet":
        if not points:
            raise ValueError("cannot infer the variant of an empty point list")
        kind = points[0].kind
        for p in points:
            if p.kind != kind:
                raise VariantMismatchError("mixed-variant support sets are not allowed")
        return cls(kind, [p.value for p in points])

    def points(self) -> list[DomainPoint]:
        return [DomainPoint(self.kind, v) for v in self.coords.tolist()]

    def __len__(self) -> int:
        return int(self.coords.size)

    def __iter__(self):
        return iter(self.points())

    def __repr__(self) -> str:
        return f"SupportSet({self.kind!r}, {self.coords.tolist()!r})"


def min_separation(T: SupportSet) -> float:
    """Smallest pairwise distance of ``T``."""
    if len(T) < 2:
        raise SeparationUndefinedError("separation undefined for fewer than two points")
    d = metric(T.kind, T.coords[:, None], T.coords[None, :])
    np.fill_diagonal(d, np.inf)
    return float(np.min(d))


def in_neighborhood(x: DomainPoint, T: SupportSet, delta: float) -> bool:
    """True iff ``x`` lies in the open ``delta``-ball around some point of ``T``."""
    if delta <= 0:
        raise ValueError("delta must be positive")
    if x.kind != T.kind:
        raise VariantMismatchError(f"point is {x.kind}, support is {T.kind}")
    if len(T) == 0:
        return False
    return bool(np.any(metric(T.kind, x.value, T.coords) < delta))


def neighborhood_mask(kind: str, xs, centers, delta: float) -> np.ndarray:
    """Boolean mask of coordinates ``xs`` lying in the union of open ``delta``-balls."""
    xs = np.asarray(xs)
    centers = np.asarray(centers)
    if centers.size == 0:
        return np.zeros(xs.shape, dtype=bool)
    mask = np.zeros(xs.shape, dtype=bool)
    for c in centers.ravel():
        mask |= metric(kind, xs, c) < delta
    return mask
