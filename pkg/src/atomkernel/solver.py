"""Total-variation minimisation over atomic measures.

The constrained program ``min ||mu||_TV s.t. ||M(K*mu) - b|| <= eps`` is
approached in three stages:

1. a Beurling-LASSO on a fixed grid (accelerated proximal gradient with
   complex soft-thresholding) gives an initial support;
2. clusters of grid coefficients become atoms, which are refined off the grid
   by Levenberg-Marquardt least squares on positions and weights, with greedy
   insertion of new atoms (where the residual correlates best) and greedy
   removal of atoms that are not needed for feasibility;
3. for ``eps > 0`` the weights are shrunk by a continuous LASSO at fixed atom
   count whose penalty is bisected until the residual lies in
   ``[0.9 eps, eps]``.

All tolerances are relative to ``||b||`` so results are scale equivariant.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.optimize import least_squares

from .domain import neighborhood_mask, wrap_torus
from .errors import InfeasibleError, ParameterError
from .measure import AtomicMeasure, normalize
from .measurements import MeasurementVector

EXTRACT_THRESHOLD = 1e-4


@dataclass
class SolverConfig:
    """Solver settings.

    ``grid_size`` is the number of grid nodes (torus/line) or nodes per axis
    (plane); ``None`` picks ``8(2m+1)`` for Fourier operators and 97 per axis
    on the plane. ``reg_lambda`` is the grid-stage penalty, either a number
    (relative to ``sup |A^H b|``) or ``"auto"`` (0.05). ``merge_radius`` is in
    grid cells.
    """

    grid_size: int | None = None
    reg_lambda: float | str = "auto"
    eps: float = 0.0
    max_outer_iters: int = 100
    prox_tol: float = 1e-8
    prox_max_iters: int = 500
    refine_max_iters: int = 200
    grad_tol: float = 1e-14
    merge_radius: float = 1.5
    line_halfwidth: float | None = None
    plane_radius: float | None = None

    def __post_init__(self):
        if self.eps < 0:
            raise ParameterError("eps must be nonnegative")
        if isinstance(self.reg_lambda, str):
            if self.reg_lambda != "auto":
                raise ParameterError("reg_lambda must be positive or 'auto'")
        elif not self.reg_lambda > 0:
            raise ParameterError("reg_lambda must be positive or 'auto'")

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class SolverResult:
    measure: AtomicMeasure
    tv_value: float
    residual_norm: float
    dual_sup: float
    iterations: int
    converged: bool
    lam: float = 0.0
    nu: np.ndarray | None = None
    trace: list = field(default_factory=list)

    def to_dict(self) -> dict:
        nu = [] if self.nu is None else [[v.real, v.imag] for v in self.nu.tolist()]
        return {
            "kind": self.measure.kind,
            "measure": self.measure.to_list(),
            "tv_value": self.tv_value,
            "residual_norm": self.residual_norm,
            "dual_sup": self.dual_sup,
            "iterations": self.iterations,
            "converged": self.converged,
            "lambda": self.lam,
            "nu": nu,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    def trace_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["iter", "objective", "residual", "dual_sup"])
        for row in self.trace:
            w.writerow([row["iter"], repr(row["objective"]), repr(row["residual"]), repr(row["dual_sup"])])
        return buf.getvalue()


# ---------------------------------------------------------------------------
# Grids
# ---------------------------------------------------------------------------


def default_grid(op, config: SolverConfig | None = None) -> tuple[np.ndarray, float]:
    """Grid nodes and cell size for the operator's domain."""
    config = config or SolverConfig()
    kind = op.domain
    if kind == "torus":
        G = config.grid_size or 8 * (2 * op.m + 1)
        if G < 8 * (2 * op.m + 1):
            raise ParameterError(f"grid_size must be at least 8(2m+1) = {8 * (2 * op.m + 1)}")
        return np.arange(G) / G, 1.0 / G
    if kind == "line":
        G = config.grid_size or 8 * (2 * op.m + 1)
        if G < 8 * (2 * op.m + 1):
            raise ParameterError(f"grid_size must be at least 8(2m+1) = {8 * (2 * op.m + 1)}")
        half = config.line_halfwidth or op.L / 2
        x = np.linspace(-half, half, G)
        return x, x[1] - x[0]
    R = config.plane_radius or 6.0
    n = config.grid_size or 97
    t = np.linspace(-R, R, n)
    Z = (t[None, :] + 1j * t[:, None]).ravel()
    h = t[1] - t[0]
    return Z[np.abs(Z) <= R + 0.5 * h], h


def _values(b) -> np.ndarray:
    return b.values if isinstance(b, MeasurementVector) else np.asarray(b, dtype=complex).ravel()


# ---------------------------------------------------------------------------
# Grid Beurling-LASSO
# ---------------------------------------------------------------------------


def _soft(z: np.ndarray, t: float) -> np.ndarray:
    mag = np.abs(z)
    scale = np.maximum(mag - t, 0.0) / np.where(mag > 0, mag, 1.0)
    return z * scale


def _lasso(A, b, lam, L, max_iters, tol, x0=None):
    """Accelerated proximal gradient with restart. Returns (x, iters, converged, gap)."""
    n = A.shape[1]
    AH = np.ascontiguousarray(A.conj().T)
    x = np.zeros(n, dtype=complex) if x0 is None else x0.astype(complex).copy()
    y = x.copy()
    t = 1.0
    scale = max(0.5 * float(np.vdot(b, b).real), 1e-300)
    obj_prev = np.inf
    gap = np.inf
    restarted = False
    for it in range(1, max_iters + 1):
        r = b - A @ y
        x_new = _soft(y + (AH @ r) / L, lam / L)
        rx = b - A @ x_new
        obj = 0.5 * float(np.vdot(rx, rx).real) + lam * float(np.sum(np.abs(x_new)))
        if obj > obj_prev and not restarted:
            # adaptive restart; the plain proximal step that follows is always
            # accepted, otherwise round-off in obj can stall the iteration
            t = 1.0
            y = x.copy()
            restarted = True
            continue
        restarted = False
        t_new = 0.5 * (1 + np.sqrt(1 + 4 * t * t))
        y = x_new + ((t - 1) / t_new) * (x_new - x)
        x, t, obj_prev = x_new, t_new, obj
        if it % 10 == 0 or it == max_iters:
            corr = float(np.max(np.abs(AH @ rx))) if n else 0.0
            u = rx * min(1.0, lam / corr) if corr > 0 else rx
            dual = float(np.vdot(u, b).real) - 0.5 * float(np.vdot(u, u).real)
            gap = obj - dual
            if gap <= tol * scale:
                return x, it, True, gap
    return x, max_iters, False, gap


def beurling_lasso(op, b, lam: float, grid, max_iters: int = 3000, tol: float = 1e-8, full_output: bool = False):
    """Grid Beurling-LASSO ``min 1/2 ||A c - b||^2 + lam ||c||_1``.

    Parameters
    ----------
    op : measurement operator
    b : MeasurementVector or array
    lam : float
        Penalty, must be positive.
    grid : array_like
        Grid nodes.
    tol : float
        Stop once the duality gap is below ``tol * ||b||^2 / 2``.

    Returns
    -------
    coef : ndarray
        Grid coefficients (plus ``(iterations, converged, gap)`` when
        ``full_output``).
    """
    if not lam > 0:
        raise ParameterError("lam must be positive")
    bv = _values(b)
    grid = np.asarray(grid).ravel()
    A = op.columns(grid)
    if not np.any(bv) or lam >= float(np.max(np.abs(A.conj().T @ bv))):
        x = np.zeros(grid.size, dtype=complex)
        return (x, 0, True, 0.0) if full_output else x
    L = float(np.linalg.norm(A, 2)) ** 2
    x, it, conv, gap = _lasso(A, bv, lam, L, max_iters, tol)
    return (x, it, conv, gap) if full_output else x


# ---------------------------------------------------------------------------
# Continuous refinement
# ---------------------------------------------------------------------------


def _deriv_mats(op, x) -> list[np.ndarray]:
    D = op.column_derivs(x)
    return list(D) if isinstance(D, tuple) else [D]


def _unpack(p, kind, s):
    if kind == "plane":
        x = p[:s] + 1j * p[s : 2 * s]
        k = 2 * s
    else:
        x = p[:s]
        k = s
    c = p[k : k + s] + 1j * p[k + s : k + 2 * s]
    return x, c


def _pack(x, c, kind):
    pos = [x.real, x.imag] if kind == "plane" else [np.asarray(x, dtype=float)]
    return np.concatenate(pos + [c.real, c.imag])


def _residual(op, x, c, b):
    if x.size == 0:
        return -b
    return op.columns(x) @ c - b


def refine(op, x, c, b, max_iters=200, tol=1e-14):
    """Levenberg-Marquardt on positions and complex weights for ``||A(x) c - b||``."""
    kind = op.domain
    s = x.size
    if s == 0:
        return x, c
    nb = float(np.linalg.norm(b)) or 1.0

    def fun(p):
        xx, cc = _unpack(p, kind, s)
        r = _residual(op, xx, cc, b) / nb
        return np.concatenate([r.real, r.imag])

    def jac(p):
        xx, cc = _unpack(p, kind, s)
        A = op.columns(xx)
        cols = [Dk * cc[None, :] for Dk in _deriv_mats(op, xx)]
        cols += [A, 1j * A]
        J = np.hstack(cols) / nb
        return np.vstack([J.real, J.imag])

    p0 = _pack(x, c, kind)
    if 2 * b.size < p0.size:
        method = "trf"
    else:
        method = "lm"
    res = least_squares(
        fun, p0, jac=jac, method=method, xtol=tol, ftol=tol, gtol=tol, max_nfev=max_iters, x_scale="jac"
    )
    xx, cc = _unpack(res.x, kind, s)
    if kind == "torus":
        xx = wrap_torus(xx)
    return xx, cc


def _fit_weights(op, x, b):
    if x.size == 0:
        return np.zeros(0, dtype=complex)
    A = op.columns(x)
    return np.linalg.lstsq(A, b, rcond=None)[0]


def _merge(kind, x, c, radius):
    mu = normalize(AtomicMeasure(kind, x, c), radius)
    return mu.x, mu.c


def _fixed_support_lasso(op, x, b, lam, c0, iters=400):
    A = op.columns(x)
    L = float(np.linalg.norm(A, 2)) ** 2
    c, _, _, _ = _lasso(A, b, lam, L, iters, 1e-13, x0=c0)
    return c


def _positions_only(op, x, c, b, max_iters):
    kind = op.domain
    s = x.size
    nb = float(np.linalg.norm(b)) or 1.0

    def fun(p):
        xx = p[:s] + 1j * p[s:] if kind == "plane" else p
        r = _residual(op, xx, c, b) / nb
        return np.concatenate([r.real, r.imag])

    def jac(p):
        xx = p[:s] + 1j * p[s:] if kind == "plane" else p
        J = np.hstack([Dk * c[None, :] for Dk in _deriv_mats(op, xx)]) / nb
        return np.vstack([J.real, J.imag])

    p0 = np.concatenate([x.real, x.imag]) if kind == "plane" else np.asarray(x, dtype=float)
    res = least_squares(fun, p0, jac=jac, method="trf", xtol=1e-14, ftol=1e-14, gtol=1e-14, max_nfev=max_iters)
    xx = res.x[:s] + 1j * res.x[s:] if kind == "plane" else res.x
    return wrap_torus(xx) if kind == "torus" else xx


# ---------------------------------------------------------------------------
# Dual variables
# ---------------------------------------------------------------------------


def precertificate(op, x, c) -> np.ndarray:
    """Minimum-norm ``nu`` with ``a(x_i)^H nu = c_i/|c_i|`` and vanishing derivatives."""
    if x.size == 0:
        return np.zeros(op.size, dtype=complex)
    blocks = [op.columns(x)] + _deriv_mats(op, x)
    B = np.hstack(blocks)
    rhs = np.concatenate([c / np.abs(c)] + [np.zeros(x.size, dtype=complex)] * (len(blocks) - 1))
    # B^H nu = rhs
    return np.linalg.lstsq(B.conj().T, rhs, rcond=None)[0]


def _dual_sup(op, nu, grid, x=None, chunk=4096):
    best = 0.0
    pts = grid if x is None or x.size == 0 else np.concatenate([np.asarray(grid).ravel(), x])
    for s in range(0, pts.size, chunk):
        best = max(best, float(np.max(np.abs(op.columns(pts[s : s + chunk]).conj().T @ nu))))
    return best


# ---------------------------------------------------------------------------
# Driver
# ---------------------------------------------------------------------------


def solve(op, space, b, config: SolverConfig | None = None) -> SolverResult:
    """Approximate ``min ||mu||_TV`` subject to ``||M(K*mu) - b|| <= eps``.

    ``config.eps = 0`` solves the equality-constrained program with the
    effective tolerance ``1e-9 ||b||``.
    """
    config = config or SolverConfig()
    op.check_space(space)
    kind = op.domain
    bv = _values(b)
    if bv.size != op.size:
        raise ValueError(f"expected {op.size} measurements, got {bv.size}")
    nb = float(np.linalg.norm(bv))
    trace: list[dict] = []
    grid, cell = default_grid(op, config)
    if nb == 0.0:
        return SolverResult(AtomicMeasure.empty(kind), 0.0, 0.0, 0.0, 0, True, 0.0, np.zeros(op.size, complex), trace)
    noiseless = config.eps == 0
    target = 1e-9 * nb if noiseless else config.eps

    # stage 1: grid LASSO
    A = op.columns(grid)
    corr0 = np.abs(A.conj().T @ bv)
    lam_max = float(np.max(corr0))
    rel = 0.05 if config.reg_lambda == "auto" else float(config.reg_lambda)
    lam0 = rel * lam_max
    x_grid = np.zeros(grid.size, dtype=complex)
    iters = 0
    if lam0 < lam_max:
        Lip = float(np.linalg.norm(A, 2)) ** 2
        x_grid, iters, _, _ = _lasso(A, bv, lam0, Lip, config.prox_max_iters, config.prox_tol)
    keep = np.abs(x_grid) > EXTRACT_THRESHOLD * float(np.max(np.abs(x_grid))) if np.any(x_grid) else np.zeros(grid.size, bool)
    x, c = _merge(kind, grid[keep], x_grid[keep], config.merge_radius * cell)
    if x.size == 0:
        k = int(np.argmax(corr0))
        x = grid[k : k + 1]
    c = _fit_weights(op, x, bv)
    trace.append(_trace_row(0, op, x, c, bv, lam0, A))

    # stage 2: refinement, insertion and pruning
    def fit(x, c):
        x, c = refine(op, x, c, bv, config.refine_max_iters, config.grad_tol)
        x, c = _merge(kind, x, c, 0.01 * cell)
        return x, c

    x, c = fit(x, c)
    res = float(np.linalg.norm(_residual(op, x, c, bv)))
    outer = 1
    tried: list = []
    while res > target:
        if outer >= config.max_outer_iters:
            raise InfeasibleError(f"residual {res:.3g} above eps {target:.3g} after {outer} outer iterations")
        r = bv - op.columns(x) @ c
        score = np.abs(A.conj().T @ r)
        # keep new atoms off existing ones (and off failed candidates)
        score[neighborhood_mask(kind, grid, np.concatenate([x, np.asarray(tried, dtype=x.dtype)]), cell)] = 0.0
        k = int(np.argmax(score))
        x_new = np.concatenate([x, grid[k : k + 1]])
        c_new = np.concatenate([c, [complex(np.vdot(A[:, k], r) / np.vdot(A[:, k], A[:, k]).real)]])
        x_new, c_new = fit(x_new, c_new)
        res_new = float(np.linalg.norm(_residual(op, x_new, c_new, bv)))
        outer += 1
        trace.append(_trace_row(outer, op, x_new, c_new, bv, 0.0, A))
        if res_new > (1 - 1e-6) * res:
            tried.append(grid[k])
            if len(tried) >= 5:
                raise InfeasibleError(f"residual stagnates at {res:.3g} > eps {target:.3g}")
            continue
        tried = []
        x, c, res = x_new, c_new, res_new

    x, c = _prune(op, x, c, bv, target, fit)
    res = float(np.linalg.norm(_residual(op, x, c, bv)))
    trace.append(_trace_row(outer + 1, op, x, c, bv, 0.0, A))

    # stage 3: shrink towards the constraint boundary
    lam = 0.0
    if not noiseless:
        x2, c2, lam2 = _shrink(op, x, c, bv, config.eps, lam_max)
        res2 = float(np.linalg.norm(_residual(op, x2, c2, bv)))
        if res2 <= config.eps and np.sum(np.abs(c2)) <= np.sum(np.abs(c)):
            x, c, lam, res = x2, c2, lam2, res2
        trace.append(_trace_row(outer + 2, op, x, c, bv, lam, A))

    order = np.lexsort((x.imag, x.real)) if kind == "plane" else np.argsort(x, kind="stable")
    x, c = x[order], c[order]
    nz = c != 0
    x, c = x[nz], c[nz]
    if lam > 0:
        nu = (bv - op.columns(x) @ c) / lam
    else:
        nu = precertificate(op, x, c)
    dual_sup = _dual_sup(op, nu, grid, x)
    mu = AtomicMeasure(kind, x, c)
    converged = res <= target + config.prox_tol
    return SolverResult(mu, float(np.sum(np.abs(mu.c))), res, dual_sup, outer, bool(converged), lam, nu, trace)


def _trace_row(it, op, x, c, bv, lam, A):
    r = _residual(op, x, c, bv)
    tv = float(np.sum(np.abs(c)))
    dual = float(np.max(np.abs(A.conj().T @ r))) / lam if lam > 0 else float("nan")
    return {"iter": it, "objective": tv, "residual": float(np.linalg.norm(r)), "dual_sup": dual}


def _prune(op, x, c, bv, target, fit):
    """Drop the smallest atom while the refit without it stays feasible."""
    while x.size > 1:
        k = int(np.argmin(np.abs(c)))
        keep = np.arange(x.size) != k
        xs, cs = fit(x[keep], _fit_weights(op, x[keep], bv))
        if float(np.linalg.norm(_residual(op, xs, cs, bv))) > target:
            break
        x, c = xs, cs
    return x, c


def _shrink(op, x, c, bv, eps, lam_max, steps=60, rtol=1e-6, alternations=2):
    """Bisect the continuous LASSO penalty at fixed atom count.

    The largest penalty whose residual stays below ``eps`` is sought; the
    search stops once the residual lies in ``[(1 - rtol) eps, eps]``.
    """
    lo, hi = 1e-12 * lam_max, lam_max
    best = (x, c, 0.0)
    for _ in range(steps):
        lam = np.sqrt(lo * hi)
        xx, cc = best[0].copy(), best[1].copy()
        for _ in range(alternations):
            cc = _fixed_support_lasso(op, xx, bv, lam, cc)
            alive = np.abs(cc) > 0
            xx, cc = xx[alive], cc[alive]
            if xx.size == 0:
                break
            xx = _positions_only(op, xx, cc, bv, 50)
        if xx.size:
            cc = _fixed_support_lasso(op, xx, bv, lam, cc)
        r = float(np.linalg.norm(_residual(op, xx, cc, bv)))
        if r > eps:
            hi = lam
        else:
            lo = lam
            best = (xx, cc, lam)
            if r >= (1 - rtol) * eps:
                break
    return best


def dual_optimality_check(result: SolverResult, op, space=None, grid=None) -> tuple[float, bool]:
    """Evaluate ``psi = M^* nu`` from the solver's dual variable.

    Returns ``(sup, ok)`` with ``ok`` iff ``sup <= 1 + 1e-6`` and ``psi`` matches
    the weight signs to ``1e-3`` at the recovered atoms.
    """
    if result.nu is None:
        return float("nan"), False
    if grid is None:
        grid, _ = default_grid(op)
    mu = result.measure
    sup = _dual_sup(op, result.nu, np.asarray(grid).ravel(), mu.x)
    ok = sup <= 1 + 1e-6
    if len(mu):
        psi = op.columns(mu.x).conj().T @ result.nu
        ok = ok and float(np.max(np.abs(psi - mu.c / np.abs(mu.c)))) <= 1e-3
    return sup, bool(ok)


def tv_min_value(op, space, b, eps: float, config: SolverConfig | None = None) -> float:
    """Optimal value estimate of the TV program with noise level ``eps``."""
    cfg = config or SolverConfig()
    cfg = SolverConfig(**{**cfg.to_dict(), "eps": eps})
    return solve(op, space, b, cfg).tv_value
