"""Measurement operators (Bessel families) and their adjoints.

Every operator exposes the per-atom measurement map ``a(x) = (<K_x, M_i>)_i``,
so that ``M(K * mu) = sum_j c_j a(x_j)`` and the adjoint of a measurement
vector ``nu`` is the function ``psi(x) = a(x)^H nu``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np
from scipy import stats

from .errors import ParameterError, VariantMismatchError
from .measure import AtomicMeasure, ContaminationSpec
from .rkhs import Bargmann, PaleyWiener, TrigTorus, monomial_table


def _sinc_d1(u):
    """Derivative of the normalised sinc ``sin(pi u)/(pi u)``."""
    u = np.asarray(u, dtype=float)
    small = np.abs(u) < 1e-3
    with np.errstate(invalid="ignore", divide="ignore"):
        val = (np.cos(np.pi * u) - np.sinc(u)) / u
    series = -(np.pi**2) * u / 3.0 + np.pi**4 * u**3 / 30.0
    return np.where(small, series, val)


@dataclass(frozen=True)
class TorusFourier:
    """Fourier coefficients ``j = -m..m`` of a trigonometric polynomial.

    With ``normalize`` the vectors are ``M_j = e^{2 pi i j x} / sqrt(2N+1)``,
    orthonormal in the degree-``N`` torus space (``N = space_m``, default ``m``).
    """

    m: int
    normalize: bool = True
    space_m: int | None = None
    domain = "torus"

    def __post_init__(self):
        if int(self.m) != self.m or self.m < 0:
            raise ParameterError("m_meas must be a nonnegative integer")
        if self.space_m is not None and self.space_m < self.m:
            raise ParameterError("measurement degree exceeds space degree")

    @property
    def degree(self) -> int:
        return self.space_m if self.space_m is not None else self.m

    @property
    def size(self) -> int:
        return 2 * self.m + 1

    @property
    def indices(self) -> np.ndarray:
        return np.arange(-self.m, self.m + 1)

    @property
    def scale(self) -> float:
        return 1.0 / np.sqrt(2 * self.degree + 1) if self.normalize else 1.0

    def check_space(self, space):
        if not isinstance(space, TrigTorus):
            raise VariantMismatchError("TorusFourier measures TrigTorus signals")
        if space.m != self.degree:
            raise ParameterError(f"operator built for degree {self.degree}, space has degree {space.m}")

    def columns(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float).ravel()
        return self.scale * np.exp(-2j * np.pi * np.outer(self.indices, x))

    def column_derivs(self, x) -> np.ndarray:
        k = self.indices[:, None]
        return (-2j * np.pi * k) * self.columns(x)

    def to_dict(self) -> dict:
        return {"kind": "torus_fourier", "m": self.m, "normalize": self.normalize, "space_m": self.degree}


@dataclass(frozen=True)
class MollifiedFourier:
    """Window averages of the Fourier transform of a bandlimited function.

    ``<f, M_k> = (L/2rho)^{1/2} int_{(k-rho)/L}^{(k+rho)/L} fhat``, ``k = -m..m``.
    For a kernel ``K_t`` this is ``e^{-2 pi i k t / L} h(t)`` with the window
    ``h(t) = (2rho/L)^{1/2} sinc(2 rho t / L)``.
    """

    m: int
    L: float
    rho: float
    normalize: bool = True
    domain = "line"

    def __post_init__(self):
        if int(self.m) != self.m or self.m < 0:
            raise ParameterError("m_meas must be a nonnegative integer")
        if not self.L > 0:
            raise ParameterError("L must be positive")
        if not (0 < self.rho <= 0.5):
            raise ParameterError("rho must lie in (0, 1/2]")
        if not (2 * self.m + 1) / self.L < 1:
            raise ParameterError("need (2m+1)/L < 1")

    @property
    def size(self) -> int:
        return 2 * self.m + 1

    @property
    def indices(self) -> np.ndarray:
        return np.arange(-self.m, self.m + 1)

    def window(self, t):
        t = np.asarray(t, dtype=float)
        return np.sqrt(2 * self.rho / self.L) * np.sinc(2 * self.rho * t / self.L)

    def window_d1(self, t):
        t = np.asarray(t, dtype=float)
        a = 2 * self.rho / self.L
        return np.sqrt(a) * a * _sinc_d1(a * t)

    def check_space(self, space):
        if not isinstance(space, PaleyWiener):
            raise VariantMismatchError("MollifiedFourier measures PaleyWiener signals")

    def columns(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float).ravel()
        ph = np.exp(-2j * np.pi * np.outer(self.indices, x) / self.L)
        return ph * self.window(x)[None, :]

    def column_derivs(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float).ravel()
        k = self.indices[:, None]
        ph = np.exp(-2j * np.pi * np.outer(self.indices, x) / self.L)
        return ph * ((-2j * np.pi * k / self.L) * self.window(x)[None, :] + self.window_d1(x)[None, :])

    def to_dict(self) -> dict:
        return {"kind": "mollified_fourier", "m": self.m, "L": self.L, "rho": self.rho}


def truncation_N(R: float, tail_tol: float = 1e-10) -> int:
    """Smallest ``N`` with ``R^2 e / (N+2) <= 1/2`` and Poisson tail beyond ``N+1`` below ``tail_tol``."""
    if not R > 0:
        raise ParameterError("R must be positive")
    N = max(0, int(np.ceil(2 * np.e * R * R - 2)))
    while stats.poisson.sf(N + 1, R * R) > tail_tol:
        N += 1
    return N


@dataclass(frozen=True)
class BargmannMonomials:
    """Coefficients against ``M_n(z) = exp(-|z|^2/2) z^n / sqrt(n!)``, ``n = 0..N+1``."""

    N: int
    domain = "plane"

    def __post_init__(self):
        if int(self.N) != self.N or self.N < 0:
            raise ParameterError("N must be a nonnegative integer")

    @classmethod
    def for_radius(cls, R: float, tail_tol: float = 1e-10) -> "BargmannMonomials":
        return cls(truncation_N(R, tail_tol))

    @property
    def size(self) -> int:
        return self.N + 2

    @property
    def indices(self) -> np.ndarray:
        return np.arange(self.N + 2)

    def check_space(self, space):
        if not isinstance(space, Bargmann):
            raise VariantMismatchError("BargmannMonomials measures Bargmann signals")

    def columns(self, x) -> np.ndarray:
        z = np.asarray(x, dtype=complex).ravel()
        return np.conj(monomial_table(z, self.N + 1)).T

    def column_derivs(self, x) -> tuple[np.ndarray, np.ndarray]:
        """Derivatives of ``a(z)`` with respect to ``Re z`` and ``Im z``."""
        z = np.asarray(x, dtype=complex).ravel()
        t = monomial_table(z, self.N + 1).T  # (n, k)
        a = np.conj(t)
        n = np.arange(self.N + 2)[:, None]
        shifted = np.zeros_like(a)
        shifted[1:] = np.sqrt(n[1:]) * a[:-1]
        dx = -z.real[None, :] * a + shifted
        dy = -z.imag[None, :] * a - 1j * shifted
        return dx, dy

    def to_dict(self) -> dict:
        return {"kind": "bargmann_monomials", "N": self.N}


MeasurementOperator = TorusFourier | MollifiedFourier | BargmannMonomials


def operator_from_dict(d: dict):
    kind = d["kind"]
    if kind == "torus_fourier":
        return TorusFourier(int(d["m"]), bool(d.get("normalize", True)), d.get("space_m"))
    if kind == "mollified_fourier":
        return MollifiedFourier(int(d["m"]), float(d["L"]), float(d["rho"]))
    if kind == "bargmann_monomials":
        return BargmannMonomials(int(d["N"]))
    raise ParameterError(f"unknown operator kind {kind!r}")


@dataclass
class MeasurementVector:
    values: np.ndarray
    op: object

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=complex).ravel()
        if self.values.size != self.op.size:
            raise ValueError(f"expected {self.op.size} values, got {self.values.size}")

    def __add__(self, other: "MeasurementVector") -> "MeasurementVector":
        return MeasurementVector(self.values + other.values, self.op)

    def norm(self) -> float:
        return float(np.linalg.norm(self.values))

    def to_dict(self) -> dict:
        return {"op": self.op.to_dict(), "values": [[v.real, v.imag] for v in self.values.tolist()]}

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, d: dict) -> "MeasurementVector":
        op = operator_from_dict(d["op"])
        return cls(np.array([complex(a, b) for a, b in d["values"]]), op)


def apply(op, space, mu: AtomicMeasure, mu_c: ContaminationSpec | None = None) -> MeasurementVector:
    """Measure ``f = K * (mu + mu_c)``."""
    op.check_space(space)
    total = mu if mu_c is None else mu + mu_c.measure
    if total.kind != op.domain:
        raise VariantMismatchError(f"measure lives on {total.kind}, operator on {op.domain}")
    if len(total) == 0:
        return MeasurementVector(np.zeros(op.size, dtype=complex), op)
    return MeasurementVector(op.columns(total.x) @ total.c, op)


class AdjointFunction:
    """``psi = M^* nu`` evaluated pointwise as ``a(x)^H nu``."""

    def __init__(self, op, nu):
        nu = np.asarray(nu, dtype=complex).ravel()
        if nu.size != op.size:
            raise ValueError(f"expected {op.size} coefficients, got {nu.size}")
        self.op = op
        self.nu = nu

    def __call__(self, x, chunk: int = 4096):
        x = np.asarray(x)
        flat = x.ravel()
        out = np.empty(flat.shape, dtype=complex)
        for s in range(0, flat.size, chunk):
            A = self.op.columns(flat[s : s + chunk])
            out[s : s + chunk] = A.conj().T @ self.nu
        return out.reshape(x.shape)

    def derivative(self, x):
        """Real-coordinate derivative (torus/line only)."""
        x = np.asarray(x)
        D = self.op.column_derivs(x.ravel())
        return (D.conj().T @ self.nu).reshape(x.shape)


def adjoint_function(op, nu) -> AdjointFunction:
    return AdjointFunction(op, nu)


class TrigPoly:
    """``p(y) = sum_{k=-m}^m coeffs[k+m] e^{2 pi i k y}``."""

    def __init__(self, coeffs):
        self.coeffs = np.asarray(coeffs, dtype=complex).ravel()
        if self.coeffs.size % 2 != 1:
            raise ValueError("need an odd number of coefficients")
        self.m = (self.coeffs.size - 1) // 2

    def __call__(self, y):
        y = np.asarray(y, dtype=float)
        k = np.arange(-self.m, self.m + 1)
        return (np.exp(2j * np.pi * y[..., None] * k) @ self.coeffs).reshape(y.shape)


def encode_trig_poly(mv: MeasurementVector) -> TrigPoly:
    """Re-encode mollified Fourier data as the trigonometric polynomial with those coefficients."""
    if not isinstance(mv.op, MollifiedFourier):
        raise ParameterError("trigonometric re-encoding needs MollifiedFourier data")
    return TrigPoly(mv.values)


def add_noise(mv: MeasurementVector, eps: float, seed: int) -> MeasurementVector:
    """Add a complex vector of Euclidean norm exactly ``eps``, uniform on the sphere."""
    if eps < 0:
        raise ValueError("eps must be nonnegative")
    if eps == 0:
        return MeasurementVector(mv.values.copy(), mv.op)
    rng = np.random.default_rng(seed)
    n = mv.values.size
    v = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    v *= eps / np.linalg.norm(v)
    return MeasurementVector(mv.values + v, mv.op)


# ---------------------------------------------------------------------------
# Radar front end
# ---------------------------------------------------------------------------


def gaussian_window(lam: float, s):
    """``L^2``-normalised window ``(2/pi)^{1/4} lam^{1/2} exp(-lam^2 s^2)``."""
    s = np.asarray(s, dtype=float)
    return (2 / np.pi) ** 0.25 * np.sqrt(lam) * np.exp(-(lam**2) * s**2)


def radar_signal(params, lam: float, t):
    """Echo ``sum_k r_k g(t - tau_k) e^{2 pi i omega_k t}`` of the Gaussian window ``g``."""
    t = np.asarray(t, dtype=float)
    out = np.zeros(t.shape, dtype=complex)
    for r, tau, om in params:
        out += r * gaussian_window(lam, t - tau) * np.exp(2j * np.pi * om * t)
    return out


def radar_to_bargmann(params, lam: float) -> AtomicMeasure:
    """Atomic measure on the plane representing the Bargmann image of a radar echo.

    A reflector ``(r, tau, omega)`` becomes an atom at ``lam tau - i pi omega / lam``
    with weight ``r exp(i pi omega tau)``.
    """
    if not lam > 0:
        raise ParameterError("Lambda must be positive")
    xs, cs = [], []
    for r, tau, om in params:
        xs.append(lam * tau - 1j * np.pi * om / lam)
        cs.append(r * np.exp(1j * np.pi * om * tau))
    return AtomicMeasure("plane", xs, cs)
