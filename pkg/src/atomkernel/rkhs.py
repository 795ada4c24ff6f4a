"""Reproducing kernel Hilbert spaces with unit-norm kernels.

Three spaces are provided:

``TrigTorus(m)``
    Trigonometric polynomials of degree ``<= m`` on the torus, kernel
    ``K_y(x) = D_m(x - y)`` with the normalised Dirichlet kernel.
``PaleyWiener()``
    Bandlimited functions on the line with bandlimit 1/2, kernel
    ``K_t(s) = sinc(t - s)``.
``Bargmann(R)``
    Gaussian-weighted entire functions on the plane,
    ``K_w(z) = exp(-(|z|^2 + |w|^2)/2) exp(z conj(w))``. ``R`` is the radius
    of the disc on which measures are recovered.

Inner products are linear in the first argument, so ``<f, K_x> = f(x)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .domain import SupportSet
from .errors import ParameterError, VariantMismatchError
from .measure import AtomicMeasure


@dataclass(frozen=True)
class TrigTorus:
    m: int
    domain = "torus"

    def __post_init__(self):
        if int(self.m) != self.m or self.m < 1:
            raise ParameterError("torus degree m must be a positive integer")


@dataclass(frozen=True)
class PaleyWiener:
    domain = "line"


@dataclass(frozen=True)
class Bargmann:
    R: float = 6.0
    domain = "plane"

    def __post_init__(self):
        if not self.R > 0:
            raise ParameterError("Bargmann radius R must be positive")


KernelSpace = TrigTorus | PaleyWiener | Bargmann


def _check(space, kind):
    if space.domain != kind:
        raise VariantMismatchError(f"{type(space).__name__} lives on the {space.domain}, got {kind} data")


def dirichlet(m: int, x):
    """Normalised Dirichlet kernel ``(2m+1)^-1 sum_{|k|<=m} e^{2 pi i k x}``."""
    x = np.asarray(x, dtype=float)
    n = 2 * m + 1
    u = x - np.round(x)
    arg = np.pi * u
    small = np.abs(n * arg) < 1e-4
    with np.errstate(invalid="ignore", divide="ignore"):
        val = np.sin(n * arg) / (n * np.sin(arg))
    # Taylor series about the integers: 1 - a u^2 + b u^4
    s2 = m * (m + 1) / 3.0
    s4 = m * (m + 1) * (3 * m * m + 3 * m - 1) / 15.0
    u2 = u * u
    taylor = 1.0 - 2.0 * np.pi**2 * s2 * u2 + (2.0 * np.pi**4 / 3.0) * s4 * u2 * u2
    out = np.where(small, taylor, val)
    return out if out.ndim else float(out)


def kernel_matrix(space, points, centers) -> np.ndarray:
    """Matrix ``[K_{centers[j]}(points[i])]``."""
    p = np.asarray(points).ravel()
    c = np.asarray(centers).ravel()
    if isinstance(space, TrigTorus):
        return dirichlet(space.m, p[:, None] - c[None, :]).astype(complex)
    if isinstance(space, PaleyWiener):
        return np.sinc(p[:, None] - c[None, :]).astype(complex)
    if isinstance(space, Bargmann):
        return bargmann_kernel(c[None, :], p[:, None])
    raise TypeError(f"unknown space {space!r}")


def bargmann_kernel(w, z):
    """``K_w(z) = exp(-|z - w|^2 / 2 + i Im(z conj(w)))``."""
    w = np.asarray(w, dtype=complex)
    z = np.asarray(z, dtype=complex)
    return np.exp(-0.5 * np.abs(z - w) ** 2 + 1j * np.imag(z * np.conj(w)))


def kernel_eval(space, x, y) -> complex:
    """``K(x, y) = K_x(y)`` for two :class:`~atomkernel.domain.DomainPoint` values."""
    _check(space, x.kind)
    _check(space, y.kind)
    return complex(kernel_matrix(space, [y.value], [x.value])[0, 0])


class SynthFunction:
    """``f = K * mu`` for an atomic measure, evaluable pointwise."""

    def __init__(self, space, measure: AtomicMeasure):
        _check(space, measure.kind)
        self.space = space
        self.measure = measure

    def __call__(self, x):
        x = np.asarray(x)
        if len(self.measure) == 0:
            return np.zeros(x.shape, dtype=complex)
        vals = kernel_matrix(self.space, x.ravel(), self.measure.x) @ self.measure.c
        return vals.reshape(x.shape)


def synthesize(space, mu: AtomicMeasure) -> SynthFunction:
    return SynthFunction(space, mu)


def gram(space, T: SupportSet) -> np.ndarray:
    """Gram matrix ``G[i, j] = <K_{x_j}, K_{x_i}> = K_{x_j}(x_i)``."""
    _check(space, T.kind)
    G = kernel_matrix(space, T.coords, T.coords)
    np.fill_diagonal(G, 1.0)
    return G


def hrt_check(space, T: SupportSet, tol: float = 1e-10) -> tuple[bool, float]:
    """Linear independence of ``{K_x : x in T}`` via the smallest Gram eigenvalue."""
    if tol <= 0:
        raise ValueError("tol must be positive")
    if isinstance(space, TrigTorus):
        # G = V^H V / (2m+1) with the Fourier-Vandermonde V; its singular values
        # give the spectrum without squaring the round-off.
        _check(space, T.kind)
        n = 2 * space.m + 1
        if len(T) > n:
            return False, 0.0
        k = np.arange(-space.m, space.m + 1)
        V = np.exp(2j * np.pi * np.outer(k, T.coords))
        sig = np.linalg.svd(V, compute_uv=False)[-1]
        lam = float(sig * sig / n)
        return lam > tol, lam
    lam = float(np.linalg.eigvalsh(gram(space, T))[0])
    return lam > tol, lam


# ---------------------------------------------------------------------------
# Bargmann derivative vectors
#
# eta_w = K_w, d eta_w(z) = K_w(z) (z - w), d2 eta_w(z) = K_w(z) (z - w)^2.
# For g = exp(-|z|^2/2) G(z) in the space:
#   <g, eta_w>     = g(w)
#   <g, d eta_w>   = exp(-|w|^2/2) (G'(w) - conj(w) G(w))
#   <g, d2 eta_w>  = exp(-|w|^2/2) (G'' - 2 conj(w) G' + conj(w)^2 G)(w)
# and d/dz |g|^2 (w) = conj(g(w)) <g, d eta_w>.
# ---------------------------------------------------------------------------


def eta(w, z):
    return bargmann_kernel(w, z)


def deta(w, z):
    w = np.asarray(w, dtype=complex)
    z = np.asarray(z, dtype=complex)
    return bargmann_kernel(w, z) * (z - w)


def d2eta(w, z):
    w = np.asarray(w, dtype=complex)
    z = np.asarray(z, dtype=complex)
    return bargmann_kernel(w, z) * (z - w) ** 2


def ip_eta_eta(a, b):
    """``<eta_a, eta_b>``."""
    return bargmann_kernel(a, b)


def ip_deta_eta(a, b):
    """``<d eta_a, eta_b>``."""
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    return bargmann_kernel(a, b) * (b - a)


def ip_eta_deta(a, b):
    """``<eta_a, d eta_b>``."""
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    return bargmann_kernel(a, b) * np.conj(a - b)


def ip_deta_deta(a, b):
    """``<d eta_a, d eta_b>``."""
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    return bargmann_kernel(a, b) * (1.0 - np.abs(a - b) ** 2)


@dataclass(frozen=True)
class BargmannVectors:
    """The triple ``(eta_w, d eta_w, d2 eta_w)`` at a fixed center."""

    w: complex

    def eta(self, z):
        return eta(self.w, z)

    def deta(self, z):
        return deta(self.w, z)

    def d2eta(self, z):
        return d2eta(self.w, z)

    def inner_products(self, other: "BargmannVectors") -> np.ndarray:
        """2x2 matrix ``[[<eta_a, eta_b>, <eta_a, deta_b>], [<deta_a, eta_b>, <deta_a, deta_b>]]``
        with ``a = self.w``, ``b = other.w``."""
        a, b = self.w, other.w
        return np.array(
            [[ip_eta_eta(a, b), ip_eta_deta(a, b)], [ip_deta_eta(a, b), ip_deta_deta(a, b)]],
            dtype=complex,
        )


def bargmann_vectors(w: complex) -> BargmannVectors:
    return BargmannVectors(complex(w))


def monomial_table(z, n_max: int) -> np.ndarray:
    """``t[..., n] = exp(-|z|^2/2) z^n / sqrt(n!)`` for ``n = 0..n_max``."""
    z = np.asarray(z, dtype=complex)
    t = np.empty(z.shape + (n_max + 1,), dtype=complex)
    t[..., 0] = np.exp(-0.5 * np.abs(z) ** 2)
    for n in range(1, n_max + 1):
        t[..., n] = t[..., n - 1] * z / np.sqrt(n)
    return t


def bargmann_jet(gamma, z):
    """Value and derivative functionals of ``g = exp(-|z|^2/2) sum_n gamma_n z^n/sqrt(n!)``.

    Returns ``(g(z), <g, d eta_z>, <g, d2 eta_z>)`` evaluated at every ``z``.
    """
    gamma = np.asarray(gamma, dtype=complex)
    z = np.asarray(z, dtype=complex)
    nmax = gamma.size - 1
    t = monomial_table(z, nmax)
    n = np.arange(nmax + 1)
    p0 = t @ gamma
    g1 = t[..., : max(nmax, 0)] @ (gamma[1:] * np.sqrt(n[1:])) if nmax >= 1 else np.zeros(z.shape, complex)
    g2 = (
        t[..., : nmax - 1] @ (gamma[2:] * np.sqrt(n[2:] * (n[2:] - 1.0)))
        if nmax >= 2
        else np.zeros(z.shape, complex)
    )
    zb = np.conj(z)
    p1 = g1 - zb * p0
    p2 = g2 - 2.0 * zb * g1 + zb * zb * p0
    return p0, p1, p2
