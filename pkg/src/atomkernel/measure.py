"""Finitely supported complex measures and their bookkeeping."""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .domain import KINDS, SupportSet, metric, neighborhood_mask, wrap_torus
from .errors import VariantMismatchError


class AtomicMeasure:
    """The discrete measure ``sum_i c_i delta_{x_i}``.

    Parameters
    ----------
    kind : str
        Domain variant of the locations.
    x : array_like
        Atom locations (real for torus/line, complex for plane).
    c : array_like
        Complex weights, same length as ``x``.
    """

    def __init__(self, kind: str, x=(), c=()):
        if kind not in KINDS:
            raise VariantMismatchError(f"unknown domain variant {kind!r}")
        self.kind = kind
        dtype = complex if kind == "plane" else float
        x = np.array(x, dtype=dtype).ravel()
        c = np.array(c, dtype=complex).ravel()
        if x.shape != c.shape:
            raise ValueError("locations and weights must have the same length")
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(c))):
            raise ValueError("atoms must be finite")
        if kind == "torus":
            x = wrap_torus(x)
        self.x = x
        self.c = c
        self.x.setflags(write=False)
        self.c.setflags(write=False)

    @classmethod
    def empty(cls, kind: str) -> "AtomicMeasure":
        return cls(kind)

    def __len__(self) -> int:
        return int(self.x.size)

    def __add__(self, other: "AtomicMeasure") -> "AtomicMeasure":
        if other.kind != self.kind:
            raise VariantMismatchError("cannot add measures on different domains")
        return AtomicMeasure(self.kind, np.concatenate([self.x, other.x]), np.concatenate([self.c, other.c]))

    def __mul__(self, a) -> "AtomicMeasure":
        return AtomicMeasure(self.kind, self.x, complex(a) * self.c)

    __rmul__ = __mul__

    def __neg__(self) -> "AtomicMeasure":
        return self * -1

    def __sub__(self, other: "AtomicMeasure") -> "AtomicMeasure":
        return self + (-other)

    def support(self) -> SupportSet:
        return SupportSet(self.kind, normalize(self).x)

    def tv_norm(self) -> float:
        return tv_norm(self)

    def __repr__(self) -> str:
        atoms = ", ".join(f"({x!r}, {c!r})" for x, c in zip(self.x.tolist(), self.c.tolist()))
        return f"AtomicMeasure({self.kind!r}, [{atoms}])"

    # JSON: [{"x": number | [re, im], "c": [re, im]}, ...]
    def to_list(self) -> list[dict]:
        out = []
        for x, c in zip(self.x.tolist(), self.c.tolist()):
            xv = [x.real, x.imag] if self.kind == "plane" else x
            out.append({"x": xv, "c": [c.real, c.imag]})
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_list())

    @classmethod
    def from_list(cls, kind: str, atoms: list) -> "AtomicMeasure":
        xs, cs = [], []
        for a in atoms:
            x = a["x"]
            if isinstance(x, (list, tuple)):
                if kind != "plane":
                    raise VariantMismatchError(f"complex location given for {kind} measure")
                x = complex(x[0], x[1])
            c = a["c"]
            c = complex(c[0], c[1]) if isinstance(c, (list, tuple)) else complex(c)
            xs.append(x)
            cs.append(c)
        return cls(kind, xs, cs)

    @classmethod
    def from_json(cls, kind: str, text: str) -> "AtomicMeasure":
        return cls.from_list(kind, json.loads(text))


@dataclass(frozen=True)
class ContaminationSpec:
    """The non-sparse part of a signal, represented by a finitely supported measure."""

    measure: AtomicMeasure
    label: str = "contamination"
    extra: dict = field(default_factory=dict)

    @property
    def tv(self) -> float:
        return tv_norm(self.measure)


def _clusters(kind: str, x: np.ndarray, radius: float) -> list[list[int]]:
    """Single-linkage groups of atoms whose chained gaps are <= radius."""
    n = x.size
    if n == 0:
        return []
    if kind in ("torus", "line"):
        order = np.argsort(x, kind="stable")
        groups = [[int(order[0])]]
        for prev, cur in zip(order[:-1], order[1:]):
            if float(metric(kind, x[cur], x[prev])) <= radius:
                groups[-1].append(int(cur))
            else:
                groups.append([int(cur)])
        if kind == "torus" and len(groups) > 1:
            if float(metric(kind, x[order[-1]], x[order[0]])) <= radius:
                groups[0] = groups.pop() + groups[0]
        return groups
    parent = list(range(n))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    d = metric(kind, x[:, None], x[None, :])
    for i in range(n):
        for j in range(i + 1, n):
            if d[i, j] <= radius:
                ri, rj = find(i), find(j)
                if ri != rj:
                    parent[max(ri, rj)] = min(ri, rj)
    out: dict[int, list[int]] = {}
    for i in range(n):
        out.setdefault(find(i), []).append(i)
    return [out[k] for k in sorted(out)]


def normalize(mu: AtomicMeasure, merge_radius: float = 0.0) -> AtomicMeasure:
    """Coalesce atoms closer than ``merge_radius`` and drop zero weights.

    Merged atoms sit at the centroid of the group weighted by weight modulus;
    their weights are summed.
    """
    if merge_radius < 0:
        raise ValueError("merge_radius must be nonnegative")
    xs, cs = [], []
    for g in _clusters(mu.kind, mu.x, merge_radius):
        gx = mu.x[g]
        gc = mu.c[g]
        w = np.abs(gc)
        if w.sum() == 0:
            w = np.ones_like(w)
        if mu.kind == "torus":
            off = np.mod(gx - gx[0] + 0.5, 1.0) - 0.5
            loc = gx[0] + np.dot(w, off) / w.sum()
        else:
            loc = np.dot(w, gx) / w.sum()
        total = gc.sum()
        if total != 0:
            xs.append(loc)
            cs.append(total)
    return AtomicMeasure(mu.kind, xs, cs)


def tv_norm(mu: AtomicMeasure) -> float:
    """Total variation ``sum |c_i|`` after merging coincident atoms."""
    return float(np.sum(np.abs(normalize(mu, 0.0).c)))


def mass_in_neighborhood(mu: AtomicMeasure, T: SupportSet, delta: float) -> float:
    """``|mu|(S_delta)`` where ``S_delta`` is the union of open balls around ``T``."""
    if delta <= 0:
        raise ValueError("delta must be positive")
    if len(mu) == 0:
        return 0.0
    if mu.kind != T.kind:
        raise VariantMismatchError("measure and support live on different domains")
    mask = neighborhood_mask(mu.kind, mu.x, T.coords, delta)
    return float(np.sum(np.abs(mu.c[mask])))


def atom_match_error(mu_est: AtomicMeasure, mu_true: AtomicMeasure) -> tuple[float, float, float]:
    """Greedy nearest matching of estimated to true atoms.

    Returns
    -------
    support_err : float
        Largest distance among matched pairs (``inf`` if a true atom is left
        unmatched).
    weight_err : float
        Largest relative weight error ``|c_est - c_true| / |c_true|`` among
        matched pairs (1 for an unmatched true atom).
    unmatched_mass : float
        Total variation of estimated atoms that were not matched.
    """
    if mu_est.kind != mu_true.kind:
        raise VariantMismatchError("measures live on different domains")
    ne, nt = len(mu_est), len(mu_true)
    if ne == 0 and nt == 0:
        return 0.0, 0.0, 0.0
    d = metric(mu_est.kind, mu_est.x[:, None], mu_true.x[None, :]) if ne and nt else np.zeros((ne, nt))
    pairs = sorted(((float(d[i, j]), i, j) for i in range(ne) for j in range(nt)))
    used_e, used_t = set(), set()
    support_err = 0.0
    weight_err = 0.0
    for dist, i, j in pairs:
        if i in used_e or j in used_t:
            continue
        used_e.add(i)
        used_t.add(j)
        support_err = max(support_err, dist)
        ct = mu_true.c[j]
        rel = abs(mu_est.c[i] - ct) / abs(ct) if ct != 0 else abs(mu_est.c[i])
        weight_err = max(weight_err, float(rel))
    if len(used_t) < nt:
        support_err = float("inf")
        weight_err = max(weight_err, 1.0)
    unmatched = [i for i in range(ne) if i not in used_e]
    unmatched_mass = float(np.sum(np.abs(mu_est.c[unmatched]))) if unmatched else 0.0
    return float(support_err), float(weight_err), unmatched_mass
