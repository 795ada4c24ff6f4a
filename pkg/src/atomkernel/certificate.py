"""Dual certificates: construction and grid validation.

A certificate is a function ``psi = M^* nu`` in the range of the adjoint that
interpolates a sign pattern ``omega`` on a support ``T``, has vanishing
derivative there, and stays below 1 in modulus elsewhere.

Three constructions are provided:

* torus: ``q = sum_j alpha_j kappa(. - x_j) + beta_j kappa'(. - x_j)`` with the
  squared Fejer kernel ``kappa``;
* line: ``g = q(./L) h`` where ``h`` is the mollifier window of the
  measurements and ``q`` is built from ``kappa`` as on the torus;
* plane: ``g = sum_k alpha_k eta_{w_k} + beta_k d eta_{w_k}`` solving the
  block system ``Phi(W) (alpha, beta) = (omega, 0)``.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg

from .domain import SupportSet, metric, min_separation, neighborhood_mask
from .errors import (
    GridTooCoarseError,
    ParameterError,
    SeparationConditionViolated,
    SeparationTooSmallError,
    VariantMismatchError,
)
from .measurements import BargmannMonomials, MollifiedFourier, TorusFourier, truncation_N
from .rkhs import Bargmann, PaleyWiener, TrigTorus, bargmann_kernel, ip_deta_deta, ip_deta_eta, ip_eta_deta

NEAR_RADIUS = 0.16749
NEAR_COEF_TORUS = 0.3354
NEAR_COEF_LINE = 0.34
FAR_BOUND = 1.0 - 0.34 * NEAR_RADIUS**2
COND_LIMIT = 1e12


# ---------------------------------------------------------------------------
# Squared Fejer kernel
# ---------------------------------------------------------------------------


def fejer4_order(m: int) -> int:
    """Number ``n`` of terms in ``sin(pi n x)/sin(pi x)`` (``m//2 + 1``)."""
    return m // 2 + 1


def fejer4_coefficients(m: int) -> np.ndarray:
    """Fourier coefficients of ``kappa`` for frequencies ``-2(n-1)..2(n-1)``."""
    n = fejer4_order(m)
    ones = np.ones(n)
    c = np.convolve(np.convolve(ones, ones), np.convolve(ones, ones))
    return c


def fejer4(m: int, x):
    """``kappa(x) = (sin(pi n x) / sin(pi x))^4`` and its first two derivatives.

    ``n = m//2 + 1``. The kernel is evaluated through its (finite) cosine
    series, which is exact at the integers as well.

    Returns
    -------
    (k0, k1, k2) : tuple of ndarray
    """
    if int(m) != m or m < 1:
        raise ParameterError("m must be a positive integer")
    x = np.asarray(x, dtype=float)
    c = fejer4_coefficients(m)
    half = (c.size - 1) // 2
    l = np.arange(1, half + 1)
    cl = c[half + 1 :]
    arg = 2 * np.pi * x[..., None] * l
    cos, sin = np.cos(arg), np.sin(arg)
    w = 2 * np.pi * l
    k0 = c[half] + 2 * (cos @ cl)
    k1 = -2 * (sin @ (cl * w))
    k2 = -2 * (cos @ (cl * w * w))
    return k0, k1, k2


def _solve_refined(A: np.ndarray, b: np.ndarray, steps: int = 2) -> np.ndarray:
    lu = linalg.lu_factor(A)
    x = linalg.lu_solve(lu, b)
    for _ in range(steps):
        x = x + linalg.lu_solve(lu, b - A @ x)
    return x


def _kappa_interpolate(y: np.ndarray, m: int, values: np.ndarray, derivs: np.ndarray):
    """Solve for ``q = sum alpha_j k(.-y_j) + beta_j k'(.-y_j)`` with ``k = kappa/kappa(0)``
    such that ``q(y_k) = values_k`` and ``q'(y_k) = derivs_k``.

    Returns ``(alpha, beta, coeffs, cond)`` where ``coeffs`` are the Fourier
    coefficients of ``q`` on ``-m..m`` and ``cond`` the condition number of the
    diagonally scaled system.
    """
    k00 = fejer4(m, 0.0)[0]
    d = y[:, None] - y[None, :]
    K0, K1, K2 = (k / k00 for k in fejer4(m, d))
    u = np.sqrt(-fejer4(m, 0.0)[2] / k00)
    A = np.block([[K0, K1 / u], [K1 / u, K2 / (u * u)]])
    cond = float(np.linalg.cond(A))
    if not np.isfinite(cond) or cond > COND_LIMIT:
        raise SeparationTooSmallError(f"separation too small: interpolation system condition number {cond:.3g}")
    rhs = np.concatenate([values, derivs / u]).astype(complex)
    sol = _solve_refined(A.astype(complex), rhs)
    s = y.size
    alpha = sol[:s]
    beta = sol[s:] / u
    c = fejer4_coefficients(m) / k00
    half = (c.size - 1) // 2
    ls = np.arange(-half, half + 1)
    ph = np.exp(-2j * np.pi * np.outer(ls, y))
    qhat = c * (ph @ alpha + (2j * np.pi * ls) * (ph @ beta))
    coeffs = np.zeros(2 * m + 1, dtype=complex)
    coeffs[m - half : m + half + 1] = qhat
    return alpha, beta, coeffs, cond


def _check_signs(omega, s):
    omega = np.asarray(omega, dtype=complex).ravel()
    if omega.size != s:
        raise ValueError(f"need {s} signs, got {omega.size}")
    if np.any(np.abs(np.abs(omega) - 1.0) > 1e-12):
        raise ValueError("signs must be unimodular")
    return omega


# ---------------------------------------------------------------------------
# Certificate container
# ---------------------------------------------------------------------------


@dataclass
class Certificate:
    """An interpolating element ``psi = M^* nu`` of the adjoint range."""

    setting: str
    space: object
    op: object
    support: SupportSet
    omega: np.ndarray
    alpha: np.ndarray
    beta: np.ndarray
    nu: np.ndarray
    cond: float = float("nan")
    meta: dict = field(default_factory=dict)

    def __call__(self, x):
        return self.evaluate(x)

    def evaluate(self, x, chunk: int = 4096):
        """``psi(x)``."""
        if self.setting == "plane" and self.alpha.size:
            return bargmann_ansatz_jet(self.support.coords, self.alpha, self.beta, np.asarray(x), order=0)[0]
        x = np.asarray(x)
        flat = x.ravel()
        out = np.empty(flat.shape, dtype=complex)
        for s in range(0, flat.size, chunk):
            out[s : s + chunk] = self.op.columns(flat[s : s + chunk]).conj().T @ self.nu
        return out.reshape(x.shape)

    def derivative(self, x):
        """Real derivative of ``psi`` (torus/line)."""
        x = np.asarray(x, dtype=float)
        return (self.op.column_derivs(x.ravel()).conj().T @ self.nu).reshape(x.shape)

    @property
    def nu_norm(self) -> float:
        return float(np.linalg.norm(self.nu))

    def interp_residual(self) -> tuple[float, float]:
        """``max |psi(x_k) - omega_k|`` and a dimensionless derivative residual."""
        xs = self.support.coords
        if xs.size == 0:
            return 0.0, 0.0
        val = float(np.max(np.abs(self.evaluate(xs) - self.omega)))
        if self.setting == "plane":
            _, p1, _ = bargmann_ansatz_jet(xs, self.alpha, self.beta, xs, order=1)
            der = float(np.max(np.abs(p1)))
        else:
            g = self.evaluate(xs)
            dg = self.derivative(xs)
            scale = 2 * np.pi * max(self.meta.get("m", 1), 1)
            if self.setting == "line":
                scale /= self.op.L
            der = float(np.max(np.abs(2 * np.real(np.conj(g) * dg)))) / scale
        return val, der

    def to_dict(self) -> dict:
        cx = lambda a: [[v.real, v.imag] for v in np.asarray(a, dtype=complex).tolist()]  # noqa: E731
        sup = self.support.coords
        return {
            "alpha": cx(self.alpha),
            "beta": cx(self.beta),
            "omega": cx(self.omega),
            "context": {
                "setting": self.setting,
                "operator": self.op.to_dict(),
                "support": cx(sup) if self.setting == "plane" else sup.tolist(),
                "cond": self.cond,
                "nu_norm": self.nu_norm,
                **{k: v for k, v in self.meta.items() if isinstance(v, (int, float, str, bool))},
            },
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


# ---------------------------------------------------------------------------
# Builders
# ---------------------------------------------------------------------------


def build_torus_certificate(T: SupportSet, omega, m: int, op: TorusFourier | None = None) -> Certificate:
    """Fejer-kernel certificate on the torus interpolating ``omega`` with zero slope.

    Parameters
    ----------
    T : SupportSet
        Torus support.
    omega : array_like
        Unimodular signs, one per support point.
    m : int
        Degree; the certificate is a trigonometric polynomial of degree ``<= m``.
    op : TorusFourier, optional
        Measurement operator used for ``nu``; defaults to ``TorusFourier(m)``.
    """
    if T.kind != "torus":
        raise VariantMismatchError("torus certificate needs a torus support")
    op = op or TorusFourier(m)
    if op.m < m:
        raise ParameterError("operator bandwidth below certificate degree")
    omega = _check_signs(omega, len(T))
    if len(T) >= 2 and min_separation(T) < 2.0 / m - 1e-15:
        warnings.warn(f"separation {min_separation(T):.3g} below 2/m = {2.0 / m:.3g}", stacklevel=2)
    y = T.coords
    alpha, beta, coeffs, cond = _kappa_interpolate(y, m, omega, np.zeros(len(T)))
    nu = np.zeros(op.size, dtype=complex)
    nu[op.m - m : op.m + m + 1] = coeffs / op.scale
    meta = {"m": m, "fejer_order": fejer4_order(m), "odd_m": bool(m % 2)}
    cert = Certificate("torus", TrigTorus(op.degree), op, T, omega, alpha, beta, nu, cond, meta)
    cert.meta["interp_residual"], cert.meta["deriv_residual"] = cert.interp_residual()
    return cert


def pw_nu_bound(L: float, rho: float) -> float:
    """``sqrt(2L / (rho sinc(rho/2L)^2))``."""
    return float(np.sqrt(2 * L / (rho * np.sinc(rho / (2 * L)) ** 2)))


def pw_nu_bound_tight(L: float, rho: float) -> float:
    """``sqrt(L / (2 rho sinc(rho)^2))``, the bound implied by the exact window."""
    return float(np.sqrt(L / (2 * rho * np.sinc(rho) ** 2)))


def build_pw_certificate(T: SupportSet, omega, m: int, rho: float, L: float) -> Certificate:
    """Certificate ``g = q(./L) h`` for mollified Fourier measurements on the line.

    ``q`` is a degree-``m`` trigonometric polynomial with ``q(y_k) = omega_k / h(x_k)``
    and ``q'(y_k) = -L omega_k h'(x_k) / h(x_k)^2`` at ``y_k = x_k / L``, so that
    ``g(x_k) = omega_k`` and ``g'(x_k) = 0``.
    """
    if T.kind != "line":
        raise VariantMismatchError("line certificate needs a line support")
    op = MollifiedFourier(m, L, rho)
    x = T.coords
    if np.any(np.abs(x) > L / 2):
        raise ParameterError("support must lie in [-L/2, L/2]")
    omega = _check_signs(omega, len(T))
    y = x / L
    h = op.window(x)
    dh = op.window_d1(x)
    if len(T) >= 2:
        ysep = float(np.min(metric("torus", y[:, None], y[None, :]) + np.eye(len(T))))
        if ysep < 2.0 / m:
            warnings.warn(f"scaled separation {ysep:.3g} below 2/m", stacklevel=2)
    alpha, beta, coeffs, cond = _kappa_interpolate(y, m, omega / h, -L * omega * dh / h**2)
    nu = coeffs
    meta = {
        "m": m,
        "rho": rho,
        "L": L,
        "nu_bound": pw_nu_bound(L, rho),
        "nu_bound_tight": pw_nu_bound_tight(L, rho),
    }
    cert = Certificate("line", PaleyWiener(), op, T, omega, alpha, beta, nu, cond, meta)
    meta["nu_bound_ok"] = cert.nu_norm <= meta["nu_bound"]
    cert.meta["interp_residual"], cert.meta["deriv_residual"] = cert.interp_residual()
    return cert


def torus_reference_certificate(T: SupportSet, omega, m: int, L: float) -> Certificate:
    """The torus certificate ``q~`` for the scaled support ``T / L``."""
    y = T.coords / L
    return build_torus_certificate(SupportSet("torus", y), omega, m)


def pw_limit_deviation(cert: Certificate, n_grid: int | None = None) -> float:
    """``max |q^rho(x/L) h(x) - q~(x/L)|`` over a grid of ``[-L/2, L/2]``."""
    m, L = cert.meta["m"], cert.meta["L"]
    ref = torus_reference_certificate(cert.support, cert.omega, m, L)
    n_grid = n_grid or 64 * m + 1
    x = np.linspace(-L / 2, L / 2, n_grid)
    return float(np.max(np.abs(cert.evaluate(x) - ref.evaluate(x / L))))


# Plane ----------------------------------------------------------------------


def sigma_bar(W: SupportSet, z):
    """``sum_j exp(-d_j^2/2) (1 + d_j + d_j^2 + d_j^3)`` with ``d_j = |z - w_j|``."""
    z = np.asarray(z, dtype=complex)
    out = np.zeros(z.shape)
    for w in W.coords:
        d = np.abs(z - w)
        out += np.exp(-0.5 * d * d) * (1 + d + d * d + d**3)
    return out if out.ndim else float(out)


def sigma_down(W: SupportSet) -> float:
    return float(np.max(sigma_bar(W, W.coords)))


def _sigma_profile_lipschitz() -> float:
    # sup_d |d/dd exp(-d^2/2)(1+d+d^2+d^3)| = sup |exp(-d^2/2)(1 + d + 2d^2 - d^3 - d^4)|
    d = np.linspace(0, 12, 120001)
    return float(np.max(np.abs(np.exp(-0.5 * d * d) * (1 + d + 2 * d * d - d**3 - d**4))))


_SIGMA_LIP = _sigma_profile_lipschitz()


def _disk_grid(R: float, h: float) -> np.ndarray:
    n = int(np.ceil(R / h))
    t = np.arange(-n, n + 1) * h
    Z = t[None, :] + 1j * t[:, None]
    return Z[np.abs(Z) <= R + h]


def sigma_up(W: SupportSet, R: float | None = None, h: float = 0.02) -> float:
    """Upper estimate of ``sup_z sigma_bar(W, z)``.

    Grid maximum over a square lattice of spacing ``h`` covering ``B_R(0)``
    (default: a disc containing ``W`` with margin 3), plus the Lipschitz slack
    ``s L h / sqrt(2)`` of the half cell diagonal.
    """
    if R is None:
        R = float(np.max(np.abs(W.coords))) + 3.0
    Z = _disk_grid(R, h)
    best = 0.0
    for s in range(0, Z.size, 65536):
        best = max(best, float(np.max(sigma_bar(W, Z[s : s + 65536]))))
    return best + len(W) * _SIGMA_LIP * h / np.sqrt(2)


def check_separation(W: SupportSet, tau: float, sig_up: float | None = None, h: float = 0.02) -> tuple[bool, float]:
    """Test ``sup {sum_j exp(-|z-w_j|^2/2) : dist(z, W) > r} < 1 - tau``, ``r = (sqrt5-1)/(4 sigma_up)``.

    Returns ``(ok, margin)`` with ``margin = (1 - tau) - sup``.
    """
    sig_up = sig_up if sig_up is not None else sigma_up(W, h=h)
    r = (np.sqrt(5) - 1) / (4 * sig_up)
    R = float(np.max(np.abs(W.coords))) + 4.0
    Z = _disk_grid(R, min(h, r / 4))
    best = 0.0
    for s in range(0, Z.size, 65536):
        z = Z[s : s + 65536]
        far = ~neighborhood_mask("plane", z, W.coords, r)
        far &= np.min(np.abs(z[:, None] - W.coords[None, :]), axis=1) > r
        if far.any():
            val = np.zeros(z.shape)
            for w in W.coords:
                val += np.exp(-0.5 * np.abs(z - w) ** 2)
            best = max(best, float(np.max(val[far])))
    margin = (1.0 - tau) - best
    return margin > 0, margin


def phi_matrix(W: SupportSet) -> np.ndarray:
    """The block matrix ``Phi(W)`` with rows ``<., eta_{w_k}>``, ``<., d eta_{w_k}>``."""
    w = W.coords
    a, b = w[None, :], w[:, None]  # column j -> w_j, row k -> w_k
    A = bargmann_kernel(a, b)
    B = ip_deta_eta(a, b)
    C = ip_eta_deta(a, b)
    D = ip_deta_deta(a, b)
    return np.block([[A, B], [C, D]])


def _truncated_vectors(w: np.ndarray, N: int) -> tuple[np.ndarray, np.ndarray]:
    """Monomial coefficients (length ``N+2``) of the truncated ``eta_w`` and ``d eta_w``."""
    s = w.size
    p = np.zeros((N + 2, s), dtype=complex)
    p[: N + 1] = BargmannMonomials(N).columns(w)[: N + 1]
    q = -w[None, :] * p
    n = np.arange(N + 2)
    q[1:] += np.sqrt(n[1:])[:, None] * p[:-1]
    return p, q


def build_bargmann_certificate(
    W: SupportSet, omega, N: int | None = None, R: float | None = None
) -> Certificate:
    """Certificate ``g = sum alpha_k eta_{w_k} + beta_k d eta_{w_k}`` on the plane.

    The coefficients solve ``Phi(W)(alpha, beta) = (omega, 0)``. The measurement
    representation ``nu`` uses the truncated kernels (monomials up to ``N+1``),
    which lie in the range of :class:`BargmannMonomials`; the difference to the
    exact ansatz is controlled by the truncation tail.
    """
    if W.kind != "plane":
        raise VariantMismatchError("Bargmann certificate needs a plane support")
    omega = _check_signs(omega, len(W))
    s = len(W)
    sd = sigma_down(W)
    if sd - 1.0 >= 0.5:
        raise SeparationConditionViolated(f"separation condition violated: sigma_down - 1 = {sd - 1:.3g} >= 1/2")
    Phi = phi_matrix(W)
    off = Phi - np.eye(2 * s)
    eps = float(np.max(np.sum(np.abs(off), axis=1)))
    rhs = np.concatenate([omega, np.zeros(s)])
    sol = _solve_refined(Phi, rhs)
    alpha, beta = sol[:s], sol[s:]
    if R is None:
        R = max(Bargmann().R, float(np.max(np.abs(W.coords))))
    if N is None:
        N = truncation_N(R)
    op = BargmannMonomials(N)
    p, q = _truncated_vectors(W.coords, N)
    nu = p @ alpha + q @ beta
    coef_bound = 2 * eps / (1 - 2 * eps) if eps < 0.5 else float("inf")
    coef_err = float(max(np.max(np.abs(alpha - omega)), np.max(np.abs(beta))))
    meta = {
        "sigma_down": sd,
        "phi_offdiag_norm": eps,
        "phi_bound_ok": bool(eps <= sd - 1.0 + 1e-12),
        "coef_err": coef_err,
        "coef_bound": coef_bound,
        "coef_bound_ok": bool(coef_err <= coef_bound + 1e-12),
        "N": N,
        "R": R,
    }
    cert = Certificate("plane", Bargmann(R), op, W, omega, alpha, beta, nu, float(np.linalg.cond(Phi)), meta)
    cert.meta["interp_residual"], cert.meta["deriv_residual"] = cert.interp_residual()
    return cert


def bargmann_ansatz_jet(w, alpha, beta, z, order: int = 2):
    """``(<g, eta_z>, <g, d eta_z>, <g, d2 eta_z>)`` for ``g = sum alpha_j eta_{w_j} + beta_j d eta_{w_j}``."""
    z = np.asarray(z, dtype=complex)
    p0 = np.zeros(z.shape, dtype=complex)
    p1 = np.zeros(z.shape, dtype=complex) if order >= 1 else None
    p2 = np.zeros(z.shape, dtype=complex) if order >= 2 else None
    for wj, a, b in zip(np.asarray(w).ravel(), alpha, beta):
        K = bargmann_kernel(wj, z)
        u = z - wj
        v = np.conj(wj - z)
        p0 += K * (a + b * u)
        if order >= 1:
            p1 += K * (a * v + b * (1 - np.abs(u) ** 2))
        if order >= 2:
            p2 += K * (a * v * v + b * (u * v * v + 2 * v))
    return p0, p1, p2


def hessian_max_eig(p0, p1, p2):
    """Largest eigenvalue of the Wirtinger Hessian of ``|g|^2``:
    ``[[|P1|^2 - |P0|^2, conj(P0) P2], [P0 conj(P2), |P1|^2 - |P0|^2]]``."""
    return np.abs(p1) ** 2 - np.abs(p0) ** 2 + np.abs(p0) * np.abs(p2)


# ---------------------------------------------------------------------------
# Validation
# ---------------------------------------------------------------------------


@dataclass
class ValidationReport:
    interp_residual: float
    deriv_residual: float
    offgrid_sup: float
    full_sup: float
    near_bound_ok: bool
    far_bound_ok: bool
    hessian_ok: bool | None
    near_margin: float
    far_margin: float
    far_bound: float
    near_radius: float
    hessian_max: float | None = None
    n_far: int = 0
    n_near: int = 0
    extra: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return self.near_bound_ok and self.far_bound_ok and self.hessian_ok is not False

    def to_dict(self) -> dict:
        d = {k: getattr(self, k) for k in self.__dataclass_fields__ if k != "extra"}
        d.update(self.extra)
        d["ok"] = self.ok
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


def _near_offsets(radius, res, min_points=8):
    n_side = int(np.floor(radius / res))
    if 2 * n_side + 1 < min_points:
        raise GridTooCoarseError(f"grid resolution {res:.3g} gives {2 * n_side + 1} points per near region")
    off = np.arange(-n_side, n_side + 1) * res
    return off


def validate(
    cert: Certificate,
    grid_res: float | None = None,
    near_radius: float | None = None,
    near_coef: float | None = None,
    far_bound: float | None = None,
    tol: float = 1e-9,
) -> ValidationReport:
    """Two-tier grid check of a certificate.

    Parameters
    ----------
    cert : Certificate
    grid_res : float, optional
        Grid spacing; defaults to ``1/(64 m)`` in torus units for torus/line and
        ``delta_bar / 16`` on the plane. Line certificates are gridded in
        ``y = x/L`` on one period.
    near_radius : float, optional
        Radius of the near regions (``0.16749/m`` in torus units by default;
        ``(sqrt3 - 1)/(4 sigma_up)`` on the plane).
    near_coef : float, optional
        Coefficient ``c`` of the near envelope ``1 - c m^2 d^2``.
    far_bound : float, optional
        Strict upper bound required off the near regions.
    """
    ir, dr = cert.interp_residual()
    if cert.setting == "plane":
        return _validate_plane(cert, ir, dr, grid_res, near_radius, far_bound, tol)
    m = cert.meta.get("m") or cert.op.m
    res = grid_res if grid_res is not None else 1.0 / (64 * m)
    r = near_radius if near_radius is not None else NEAR_RADIUS / m
    if cert.setting == "torus":
        c = near_coef if near_coef is not None else NEAR_COEF_TORUS
        scale = 1.0
    else:
        c = near_coef if near_coef is not None else NEAR_COEF_LINE
        scale = cert.op.L
    fb = far_bound if far_bound is not None else FAR_BOUND
    y_sup = cert.support.coords / scale
    off = _near_offsets(r, res)
    near_margin = np.inf
    for yk in y_sup:
        yy = yk + off
        vals = np.abs(cert.evaluate(yy * scale))
        env = 1.0 - c * m * m * off**2
        near_margin = min(near_margin, float(np.min(env - vals)))
    n = int(np.ceil(1.0 / res))
    y = -0.5 + np.arange(n) / n if cert.setting == "line" else np.arange(n) / n
    vals = np.abs(cert.evaluate(y * scale))
    near = neighborhood_mask("torus", y, y_sup, r)
    far_vals = vals[~near]
    offgrid = float(np.max(far_vals)) if far_vals.size else 0.0
    return ValidationReport(
        interp_residual=ir,
        deriv_residual=dr,
        offgrid_sup=offgrid,
        full_sup=float(np.max(vals)),
        near_bound_ok=bool(near_margin >= -tol),
        far_bound_ok=bool(offgrid < fb),
        hessian_ok=None,
        near_margin=float(near_margin),
        far_margin=float(fb - offgrid),
        far_bound=fb,
        near_radius=r,
        n_far=int(far_vals.size),
        n_near=int(off.size * len(y_sup)),
    )


def _validate_plane(cert, ir, dr, grid_res, near_radius, far_bound, tol):
    W = cert.support
    w = W.coords
    sig_up = sigma_up(W)
    r = near_radius if near_radius is not None else (np.sqrt(3) - 1) / (4 * sig_up)
    res = grid_res if grid_res is not None else r / 16
    fb = far_bound if far_bound is not None else 1.0
    # near discs: lattice points within r of each w
    n_side = int(np.floor(r / res))
    t = np.arange(-n_side, n_side + 1) * res
    D = (t[None, :] + 1j * t[:, None]).ravel()
    D = D[np.abs(D) <= r]
    if D.size < 8:
        raise GridTooCoarseError(f"grid resolution {res:.3g} gives {D.size} points per near disc")
    hmax = -np.inf
    near_sup = 0.0
    for wk in w:
        p0, p1, p2 = bargmann_ansatz_jet(w, cert.alpha, cert.beta, wk + D)
        hmax = max(hmax, float(np.max(hessian_max_eig(p0, p1, p2))))
        near_sup = max(near_sup, float(np.max(np.abs(p0))))
    # far region: lattice points within distance 3 of W, outside the near discs
    reach = 3.0
    lo_re, hi_re = w.real.min() - reach, w.real.max() + reach
    lo_im, hi_im = w.imag.min() - reach, w.imag.max() + reach
    xs = np.arange(np.floor(lo_re / res), np.ceil(hi_re / res) + 1) * res
    ys = np.arange(np.floor(lo_im / res), np.ceil(hi_im / res) + 1) * res
    far_sup = 0.0
    n_far = 0
    rows = max(1, 2_000_000 // xs.size)
    for s0 in range(0, ys.size, rows):
        Z = (xs[None, :] + 1j * ys[s0 : s0 + rows, None]).ravel()
        dmin = np.min(np.abs(Z[:, None] - w[None, :]), axis=1)
        Z = Z[(dmin >= r) & (dmin <= reach)]
        if Z.size == 0:
            continue
        n_far += Z.size
        v = np.abs(bargmann_ansatz_jet(w, cert.alpha, cert.beta, Z, order=0)[0])
        far_sup = max(far_sup, float(np.max(v)))
    # beyond distance `reach`: |g| <= sum_j (|alpha_j| + |beta_j| d) exp(-d^2/2), decreasing for d >= 1
    tail = float(np.sum((np.abs(cert.alpha) + np.abs(cert.beta) * reach) * np.exp(-0.5 * reach**2)))
    offgrid = max(far_sup, tail)
    return ValidationReport(
        interp_residual=ir,
        deriv_residual=dr,
        offgrid_sup=offgrid,
        full_sup=max(offgrid, near_sup),
        near_bound_ok=bool(near_sup <= 1.0 + tol),
        far_bound_ok=bool(offgrid < fb),
        hessian_ok=bool(hmax < 0),
        near_margin=float(1.0 - near_sup),
        far_margin=float(fb - offgrid),
        far_bound=fb,
        near_radius=float(r),
        hessian_max=hmax,
        n_far=n_far,
        n_near=int(D.size * len(w)),
        extra={"sigma_up": sig_up, "tail_bound": tail},
    )
