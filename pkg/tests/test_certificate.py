import json
import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from atomkernel.certificate import (
    FAR_BOUND,
    Certificate,
    bargmann_ansatz_jet,
    build_bargmann_certificate,
    build_pw_certificate,
    build_torus_certificate,
    check_separation,
    fejer4,
    hessian_max_eig,
    phi_matrix,
    sigma_bar,
    sigma_down,
    sigma_up,
    validate,
)
from atomkernel.domain import SupportSet
from atomkernel.errors import GridTooCoarseError, SeparationConditionViolated, SeparationTooSmallError
from atomkernel.measurements import TorusFourier, adjoint_function
from atomkernel.rkhs import TrigTorus

from helpers import line_support, plane_support, random_signs, torus_support


def _fejer_direct(m, x):
    n = m // 2 + 1
    return (np.sin(np.pi * n * x) / np.sin(np.pi * x)) ** 4


@pytest.mark.parametrize("m", [16, 33, 128])
def test_fejer_values_and_examples(m):
    n = m // 2 + 1
    k0, k1, k2 = fejer4(m, np.array([0.0]))
    assert k0[0] == pytest.approx(n**4, rel=1e-13)
    assert abs(k1[0]) < 1e-6 * n**4
    assert k2[0] < 0
    x = np.random.default_rng(m).uniform(0.01, 0.99, 200)
    assert np.allclose(fejer4(m, x)[0], _fejer_direct(m, x), rtol=1e-9, atol=1e-9 * n**4)


@pytest.mark.parametrize("m", [16, 33, 128])
def test_fejer_derivatives_central_differences(m):
    """Acceptance 6(d): relative error <= 1e-4 at h = 1e-5."""
    h = 1e-5
    rng = np.random.default_rng(10 + m)
    x = np.concatenate([[0.0], rng.uniform(-0.5, 0.5, 300)])
    k0, k1, k2 = fejer4(m, x)
    fd1 = (fejer4(m, x + h)[0] - fejer4(m, x - h)[0]) / (2 * h)
    fd2 = (fejer4(m, x + h)[0] - 2 * k0 + fejer4(m, x - h)[0]) / h**2
    fd2b = (fejer4(m, x + h)[1] - fejer4(m, x - h)[1]) / (2 * h)
    # norm-wise relative error (the pointwise ratio is meaningless at zeros of the derivative)
    assert np.max(np.abs(fd1 - k1)) <= 1e-4 * np.max(np.abs(k1))
    assert np.max(np.abs(fd2 - k2)) <= 1e-4 * np.max(np.abs(k2))
    assert np.max(np.abs(fd2b - k2)) <= 1e-4 * np.max(np.abs(k2))
    big = np.abs(k2) >= 1e-2 * np.max(np.abs(k2))
    assert np.max(np.abs(fd2 - k2)[big] / np.abs(k2[big])) <= 1e-4


def _psi_series(cert, x):
    """Evaluate the certificate straight from its Fourier coefficients."""
    op = cert.op
    k = np.arange(-op.m, op.m + 1)
    return op.scale * np.exp(2j * np.pi * np.outer(x, k)) @ cert.nu


def test_torus_single_atom():
    c = build_torus_certificate(SupportSet("torus", [0.5]), [1.0], 16)
    h = 1e-6
    assert abs(_psi_series(c, [0.5])[0] - 1) < 1e-10
    assert abs((_psi_series(c, [0.5 + h]) - _psi_series(c, [0.5 - h]))[0] / (2 * h)) < 1e-6 * 2 * np.pi * 16
    assert abs(c.derivative(np.array([0.5]))[0]) < 1e-10


def test_torus_two_atoms_at_threshold():
    m = 128
    c = build_torus_certificate(SupportSet("torus", [0.2, 0.2 + 2 / m]), [1, -1], m)
    assert c.interp_residual()[0] <= 1e-8
    assert np.max(np.abs(_psi_series(c, [0.2, 0.2 + 2 / m]) - [1, -1])) <= 1e-8


def test_torus_too_close():
    m = 128
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        with pytest.raises(SeparationTooSmallError, match="separation too small"):
            build_torus_certificate(SupportSet("torus", [0.2, 0.2 + 0.01 / m]), [1, 1], m)


def test_torus_warns_below_threshold():
    with pytest.warns(UserWarning):
        build_torus_certificate(SupportSet("torus", [0.2, 0.2 + 1.0 / 64]), [1, 1], 64)


def test_torus_interpolation_random_supports():
    rng = np.random.default_rng(0)
    m = 64
    for _ in range(100):
        s = int(rng.integers(1, 10))
        T = torus_support(rng, s, 2 / m)
        w = random_signs(rng, s)
        c = build_torus_certificate(T, w, m)
        ir, dr = c.interp_residual()
        assert ir <= 1e-8 and dr <= 1e-8
        assert np.max(np.abs(_psi_series(c, T.coords) - w)) <= 1e-8


def test_torus_condition_monotone():
    m = 128
    conds = []
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        for d in np.linspace(0.05, 2.0, 10) / m:
            conds.append(build_torus_certificate(SupportSet("torus", [0.3, 0.3 + d]), [1, -1], m).cond)
    conds = np.array(conds)
    assert np.all(np.diff(conds) <= 1e-10 * conds[:-1])


def test_pw_single_atom():
    c = build_pw_certificate(SupportSet("line", [0.0]), [1.0], 32, 0.1, 100.0)
    assert abs(c.evaluate(np.array([0.0]))[0] - 1) < 1e-10
    assert abs(c.derivative(np.array([0.0]))[0]) < 1e-10
    psi = adjoint_function(c.op, c.nu)
    assert abs(psi(np.array([0.0]))[0] - 1) < 1e-10


def test_pw_interpolation_and_norm_bound():
    rng = np.random.default_rng(1)
    m, L = 32, 100.0
    for i in range(100):
        rho = [0.2, 0.1, 0.05][i % 3]
        s = int(rng.integers(1, 5))
        T = line_support(rng, s, 5 * L / m, 0.4 * L)
        c = build_pw_certificate(T, random_signs(rng, s), m, rho, L)
        ir, dr = c.interp_residual()
        assert ir <= 1e-8 and dr <= 1e-8
        assert c.nu_norm <= c.meta["nu_bound"]


def test_bargmann_single_atom():
    W = SupportSet("plane", [1 - 2j])
    assert np.array_equal(phi_matrix(W), np.eye(2))
    c = build_bargmann_certificate(W, [1j])
    assert c.alpha[0] == 1j and c.beta[0] == 0
    p0, p1, p2 = bargmann_ansatz_jet(W.coords, c.alpha, c.beta, W.coords)
    assert hessian_max_eig(p0, p1, p2)[0] == pytest.approx(-1)
    # both eigenvalues of [[|P1|^2-|P0|^2, conj(P0)P2], [P0 conj(P2), |P1|^2-|P0|^2]] are -1
    H = np.array([[abs(p1[0]) ** 2 - abs(p0[0]) ** 2, np.conj(p0[0]) * p2[0]],
                  [p0[0] * np.conj(p2[0]), abs(p1[0]) ** 2 - abs(p0[0]) ** 2]])
    assert np.allclose(np.linalg.eigvalsh(H), [-1, -1])


def test_bargmann_pair_at_distance_four():
    W = SupportSet("plane", [0, 4])
    assert sigma_bar(W, 0) == pytest.approx(1 + 85 * np.exp(-8), rel=1e-14)
    c = build_bargmann_certificate(W, [1, -1])
    assert c.meta["phi_offdiag_norm"] <= sigma_down(W) - 1
    eps = c.meta["phi_offdiag_norm"]
    bound = 2 * eps / (1 - 2 * eps)
    assert np.max(np.abs(c.alpha - c.omega)) <= bound and np.max(np.abs(c.beta)) <= bound


def test_bargmann_random_supports():
    rng = np.random.default_rng(2)
    for _ in range(100):
        s = int(rng.integers(1, 5))
        W = plane_support(rng, s, max_excess=0.3)
        c = build_bargmann_certificate(W, random_signs(rng, s), N=120)
        ir, dr = c.interp_residual()
        assert ir <= 1e-8 and dr <= 1e-8
        assert c.meta["phi_bound_ok"] and c.meta["coef_bound_ok"]


def test_bargmann_truncated_nu_matches_ansatz():
    W = SupportSet("plane", [-2 + 1j, 2.5 - 0.5j])
    c = build_bargmann_certificate(W, [1, 1j])
    z = np.array([0, 3j, -4 + 1j, 2.5 - 0.5j, 5.5])
    assert np.max(np.abs(adjoint_function(c.op, c.nu)(z) - c.evaluate(z))) < 1e-8


def test_bargmann_rejects_crowded():
    with pytest.raises(SeparationConditionViolated):
        build_bargmann_certificate(SupportSet("plane", [0, 1]), [1, 1])


def test_bargmann_phi_monotone():
    e = [phi_matrix(SupportSet("plane", [0, d])) - np.eye(4) for d in np.linspace(4, 8, 10)]
    norms = [np.max(np.sum(np.abs(x), axis=1)) for x in e]
    assert np.all(np.diff(norms) <= 1e-10)


def test_sigma_examples():
    W = SupportSet("plane", [1 + 1j])
    assert sigma_bar(W, 1 + 1j) == 1


@settings(max_examples=25, deadline=None)
@given(st.lists(st.tuples(st.floats(-4, 4), st.floats(-4, 4)), min_size=1, max_size=4, unique=True))
def test_sigma_ordering(pts):
    try:
        W = SupportSet("plane", [complex(a, b) for a, b in pts])
    except ValueError:
        return
    sd = sigma_down(W)
    assert sd >= 1
    assert sigma_up(W, h=0.1) >= sd


def test_check_separation_reports_margin():
    W = SupportSet("plane", [-4, 4])
    ok, margin = check_separation(W, 1e-3)
    assert isinstance(ok, bool) and np.isfinite(margin)


def test_validate_torus_single_atom_fine_grid():
    m = 128
    c = build_torus_certificate(SupportSet("torus", [0.4]), [1], m)
    rep = validate(c, grid_res=1e-5)
    assert rep.far_bound_ok and rep.near_bound_ok
    assert rep.offgrid_sup <= 1 - 0.009
    assert rep.full_sup <= 1 + 1e-9


def test_validate_constant_fake():
    m = 16
    op = TorusFourier(m)
    nu = np.zeros(op.size, complex)
    nu[m] = 1 / op.scale
    T = SupportSet("torus", [0.5])
    fake = Certificate("torus", TrigTorus(m), op, T, np.ones(1), np.ones(1), np.zeros(1), nu, 1.0, {"m": m})
    rep = validate(fake)
    assert not rep.far_bound_ok and not rep.ok


def test_validate_grid_too_coarse():
    c = build_torus_certificate(SupportSet("torus", [0.4]), [1], 64)
    with pytest.raises(GridTooCoarseError):
        validate(c, grid_res=1e-3)


def test_validated_full_sup_bounded():
    rng = np.random.default_rng(3)
    m = 64
    for _ in range(20):
        s = int(rng.integers(1, 8))
        rep = validate(build_torus_certificate(torus_support(rng, s, 2 / m), random_signs(rng, s), m))
        assert rep.ok and rep.full_sup <= 1 + 1e-9
        assert rep.far_bound == FAR_BOUND


def test_serialization():
    c = build_torus_certificate(SupportSet("torus", [0.1, 0.6]), [1, 1j], 32)
    d = json.loads(c.to_json())
    assert set(d) == {"alpha", "beta", "omega", "context"}
    rep = json.loads(validate(c).to_json())
    assert {"near_margin", "far_margin", "ok"} <= set(rep)
