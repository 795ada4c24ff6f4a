"""Quantitative stability: certificate-norm constants and mass-concentration bounds.

If a certificate ``psi = M^* nu`` interpolates the signs of the true weights,
satisfies ``|psi| <= 1`` everywhere and ``|psi| <= lam`` off the
``delta``-neighbourhood ``S_delta`` of the support, then every TV minimiser
``mu_*`` of the noisy program obeys

    |mu_*|(S_delta) >= ||f||_A - (2 C eps + ||mu_c||_TV) / (1 - lam)

where ``C`` bounds ``||nu||`` over all sign patterns.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import asdict, dataclass, field

import numpy as np

from .certificate import (
    build_bargmann_certificate,
    build_pw_certificate,
    build_torus_certificate,
    validate,
)
from .domain import SupportSet
from .errors import AtomKernelError, ParameterError, ThetaEmptyError
from .measure import AtomicMeasure, mass_in_neighborhood, tv_norm

NEAR_RADIUS = 0.16749


@dataclass
class StabilityReport:
    lam: float
    delta: float
    C_upper: float
    bound_rhs: float
    observed_mass: float
    satisfied: bool
    context: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    def csv_row(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        keys = sorted(self.context)
        w.writerow(
            [repr(self.lam), repr(self.delta), repr(self.C_upper), repr(self.bound_rhs), repr(self.observed_mass), self.satisfied]
            + [self.context[k] for k in keys]
        )
        return buf.getvalue()


def _check_lam(lam):
    if not 0 < lam < 1:
        raise ParameterError("lambda must lie in (0, 1)")


def _build(op, T: SupportSet, omega):
    if T.kind == "torus":
        return build_torus_certificate(T, omega, op.m, op)
    if T.kind == "line":
        return build_pw_certificate(T, omega, op.m, op.rho, op.L)
    return build_bargmann_certificate(T, omega, N=op.N)


def estimate_C(space, op, T: SupportSet, lam: float, delta: float, trials: int = 16, seed: int = 0) -> float:
    """Largest certificate norm ``||nu||`` over ``trials`` random sign patterns.

    Each certificate must satisfy ``|psi| <= 1`` on the near regions (radius
    ``delta``, in the metric of the domain) and ``|psi| < lam`` elsewhere on the
    validation grid; otherwise :class:`ThetaEmptyError` is raised.
    """
    _check_lam(lam)
    if not delta > 0:
        raise ParameterError("delta must be positive")
    if trials < 1:
        raise ParameterError("trials must be positive")
    op.check_space(space)
    children = np.random.SeedSequence(seed).spawn(trials)
    if T.kind == "line":
        radius = delta / op.L
    else:
        radius = delta
    best = 0.0
    for child in children:
        rng = np.random.default_rng(child)
        omega = np.exp(2j * np.pi * rng.random(len(T)))
        try:
            cert = _build(op, T, omega)
            if T.kind == "plane":
                rep = validate(cert, near_radius=radius, far_bound=lam)
            else:
                res = min(1.0 / (64 * op.m), radius / 8)
                rep = validate(cert, grid_res=res, near_radius=radius, near_coef=0.0, far_bound=lam)
        except AtomKernelError as exc:
            raise ThetaEmptyError(f"Theta empty at (lambda={lam}, delta={delta}) for sampled omega: {exc}") from exc
        if not (rep.far_bound_ok and rep.near_bound_ok and rep.hessian_ok is not False):
            raise ThetaEmptyError(
                f"Theta empty at (lambda={lam}, delta={delta}) for sampled omega: "
                f"off-region sup {rep.offgrid_sup:.6g}, near margin {rep.near_margin:.3g}"
            )
        best = max(best, cert.nu_norm)
    return best


def concentration_bound(
    f_params: tuple[AtomicMeasure, AtomicMeasure | None],
    eps: float,
    lam: float,
    delta: float,
    C_upper: float,
    proxy: str = "lower",
) -> float:
    """Lower bound on ``|mu_*|(S_delta)``.

    ``||f||_A`` is replaced by ``||c||_1 - ||mu_c||_TV`` (``proxy="lower"``,
    always valid when the clean part is certified) or ``||c||_1 + ||mu_c||_TV``
    (``proxy="upper"``).
    """
    _check_lam(lam)
    mu0, mu_c = f_params
    c1 = float(np.sum(np.abs(mu0.c)))
    tvc = 0.0 if mu_c is None or len(mu_c) == 0 else tv_norm(mu_c)
    if proxy == "lower":
        fa = c1 - tvc
    elif proxy == "upper":
        fa = c1 + tvc
    else:
        raise ValueError("proxy must be 'lower' or 'upper'")
    return fa - (2 * C_upper * eps + tvc) / (1 - lam)


def check_concentration(result, T: SupportSet, delta: float, bound_rhs: float, lam: float = float("nan"),
                        C_upper: float = float("nan"), context: dict | None = None) -> StabilityReport:
    """Compare the recovered mass near ``T`` with ``bound_rhs``."""
    mu = result.measure if hasattr(result, "measure") else result
    observed = mass_in_neighborhood(mu, T, delta)
    ok = observed >= bound_rhs - 1e-9
    return StabilityReport(lam, delta, C_upper, float(bound_rhs), observed, bool(ok), dict(context or {}))


def _K(L, rho):
    return np.sqrt(2 * L / (rho * np.sinc(rho / (2 * L)) ** 2))


def bandlimited_error_bound(rho: float, L: float, eps: float, tv_mu_c: float, f_A_proxy: float, delta: float):
    """Right-hand sides of the bandlimited stability estimates.

    ``delta`` is dimensionless (the neighbourhood radius of the scaled support
    ``T/L`` times ``m``) and is capped at 0.16749.

    Returns
    -------
    concentration_rhs : float
        ``||f||_A - (2K eps + ||mu_c||)/(1 - 0.34 d^2)`` with
        ``K = sqrt(2L / (rho sinc(rho/2L)^2))`` and ``d = min(delta, 0.16749)``.
    l2_error_rhs : float
        ``K' eps + (K + 1)(||f||_A eps + ||mu_c|| + (K eps + ||mu_c||)/(1 - d^2))``
        with ``K' = sqrt(L / (2 rho sinc(rho/2L)^2))``.
    """
    if not (0 < rho <= 0.5):
        raise ParameterError("rho must lie in (0, 1/2]")
    if not L > 0:
        raise ParameterError("L must be positive")
    d = min(delta, NEAR_RADIUS)
    K = _K(L, rho)
    Kh = np.sqrt(L / (2 * rho * np.sinc(rho / (2 * L)) ** 2))
    conc = f_A_proxy - (2 * K * eps + tv_mu_c) / (1 - 0.34 * d * d)
    l2 = Kh * eps + (K + 1) * (f_A_proxy * eps + tv_mu_c + (K * eps + tv_mu_c) / (1 - d * d))
    return float(conc), float(l2)
