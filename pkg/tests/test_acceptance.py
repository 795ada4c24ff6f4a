"""Acceptance criteria 1-7, run at their stated sizes and tolerances.

A PASS/FAIL line per criterion is printed in the terminal summary.
"""

import json
import time

import numpy as np
import pytest

from atomkernel.certificate import (
    NEAR_RADIUS,
    bargmann_ansatz_jet,
    build_bargmann_certificate,
    build_pw_certificate,
    build_torus_certificate,
    fejer4,
    pw_limit_deviation,
    sigma_down,
    validate,
)
from atomkernel.cli import main
from atomkernel.domain import SupportSet
from atomkernel.measure import AtomicMeasure, ContaminationSpec, atom_match_error
from atomkernel.measurements import (
    BargmannMonomials,
    MollifiedFourier,
    TorusFourier,
    add_noise,
    adjoint_function,
    apply,
    truncation_N,
)
from atomkernel.rkhs import (
    Bargmann,
    PaleyWiener,
    TrigTorus,
    deta,
    eta,
    hrt_check,
    ip_deta_deta,
    ip_deta_eta,
    ip_eta_deta,
    ip_eta_eta,
    synthesize,
)
from atomkernel.solver import SolverConfig, solve
from atomkernel.stability import check_concentration, concentration_bound, estimate_C

from helpers import line_support, plane_support, random_signs, random_weights, torus_support

pytestmark = pytest.mark.acceptance

M = 128


def _torus_instance(seed, m=M, s=5):
    rng = np.random.default_rng(seed)
    T = torus_support(rng, s, 2 / m)
    return rng, T, AtomicMeasure("torus", T.coords, random_weights(rng, s))


# -- 1 ------------------------------------------------------------------------


def test_criterion_1_torus_exact_recovery(acceptance):
    op, sp = TorusFourier(M), TrigTorus(M)
    worst = {"support": 0.0, "weight": 0.0, "tv": 0.0, "time": 0.0}
    with acceptance.check(1, "25 trials, m=128, s=5: 5 atoms, support<=1e-5, weight<=1e-4, TV 1e-6 rel, <=60 s"):
        for seed in range(25):
            _, T, mu = _torus_instance(seed)
            t0 = time.perf_counter()
            res = solve(op, sp, apply(op, sp, mu))
            dt = time.perf_counter() - t0
            se, we, um = atom_match_error(res.measure, mu)
            tv = np.sum(np.abs(mu.c))
            assert len(res.measure) == 5, f"seed {seed}: {len(res.measure)} atoms"
            assert se <= 1e-5 and we <= 1e-4, f"seed {seed}: support {se:.2e}, weight {we:.2e}"
            assert abs(res.tv_value - tv) <= 1e-6 * tv, f"seed {seed}: tv {res.tv_value} vs {tv}"
            assert dt <= 60, f"seed {seed}: {dt:.1f} s"
            worst = {k: max(worst[k], v) for k, v in
                     zip(worst, (se, we, abs(res.tv_value - tv) / tv, dt))}
    print("criterion 1 worst:", worst)


# -- 2 ------------------------------------------------------------------------


def test_criterion_2_torus_certificates(acceptance):
    worst = {"cond": 0.0, "interp": 0.0, "far_sup": 0.0, "time": 0.0, "near_margin": np.inf}
    with acceptance.check(2, "100 supports: cond<1e8, interp<=1e-8, near envelope, far sup<=1-0.009, <=5 s"):
        for seed in range(100):
            rng, T, mu = _torus_instance(1000 + seed)
            t0 = time.perf_counter()
            cert = build_torus_certificate(T, random_signs(rng, len(T)), M)
            rep = validate(cert)
            dt = time.perf_counter() - t0
            assert cert.cond < 1e8
            assert rep.interp_residual <= 1e-8
            assert rep.near_bound_ok, f"seed {seed}: near margin {rep.near_margin}"
            assert rep.offgrid_sup <= 1 - 0.009, f"seed {seed}: far sup {rep.offgrid_sup}"
            assert dt <= 5
            worst["cond"] = max(worst["cond"], cert.cond)
            worst["interp"] = max(worst["interp"], rep.interp_residual)
            worst["far_sup"] = max(worst["far_sup"], rep.offgrid_sup)
            worst["time"] = max(worst["time"], dt)
            worst["near_margin"] = min(worst["near_margin"], rep.near_margin)
    print("criterion 2 worst:", worst)


# -- 3 ------------------------------------------------------------------------


def test_criterion_3_paley_wiener(acceptance):
    m, L = 32, 100.0
    rhos = (0.2, 0.1, 0.05)
    rng = np.random.default_rng(3)
    supports = [line_support(rng, int(rng.integers(1, 5)), 5 * L / m, 0.4 * L) for _ in range(20)]
    signs = [random_signs(rng, len(T)) for T in supports]
    with acceptance.check(3, "certificates validate at rho in {0.1, 0.05} for Delta(T/L) >= 5/m"):
        for T, w in zip(supports, signs):
            for rho in rhos[1:]:
                rep = validate(build_pw_certificate(T, w, m, rho, L))
                assert rep.ok, f"rho {rho}: far sup {rep.offgrid_sup:.4f}, near margin {rep.near_margin:.2e}"
    with acceptance.check(3, "||nu||_2 <= sqrt(2L/(rho sinc(rho/2L)^2)) for every rho"):
        for T, w in zip(supports, signs):
            for rho in rhos:
                c = build_pw_certificate(T, w, m, rho, L)
                assert c.nu_norm <= np.sqrt(2 * L / (rho * np.sinc(rho / (2 * L)) ** 2))
    with acceptance.check(3, "limit deviation to the torus certificate decreases as rho halves"):
        for T, w in zip(supports, signs):
            dev = [pw_limit_deviation(build_pw_certificate(T, w, m, rho, L)) for rho in rhos]
            assert dev[0] > dev[1] > dev[2], dev


# -- 4 ------------------------------------------------------------------------


def _bargmann_supports():
    rng = np.random.default_rng(4)
    return [plane_support(rng, 4, 4.0, 6.0, 0.03) for _ in range(10)], rng


@pytest.fixture(scope="module")
def bargmann_reports():
    supports, rng = _bargmann_supports()
    out = []
    for W in supports:
        cert = build_bargmann_certificate(W, random_signs(rng, 4))
        out.append((W, cert, validate(cert)))
    return out


def test_criterion_4_bargmann_certificates(acceptance, bargmann_reports):
    with acceptance.check(4, "s=4, pairwise >= 4 in B_6, sigma_down - 1 <= 0.03"):
        for W, _, _ in bargmann_reports:
            d = np.abs(W.coords[:, None] - W.coords[None, :]) + 10 * np.eye(4)
            assert d.min() >= 4 and np.all(np.abs(W.coords) <= 6)
            assert sigma_down(W) - 1 <= 0.03
    with acceptance.check(4, "||Phi(W) - I||_inf <= sigma_down - 1 and coefficient bounds"):
        for W, c, _ in bargmann_reports:
            eps = c.meta["phi_offdiag_norm"]
            assert eps <= sigma_down(W) - 1
            bound = 2 * eps / (1 - 2 * eps)
            assert np.max(np.abs(c.alpha - c.omega)) <= bound and np.max(np.abs(c.beta)) <= bound
    with acceptance.check(4, "Hessian negative definite on near grids"):
        for _, _, rep in bargmann_reports:
            assert rep.hessian_ok and rep.hessian_max < 0 and rep.near_bound_ok
    with acceptance.check(4, "far grid |<eta_z, g>| < 1"):
        for _, _, rep in bargmann_reports:
            assert rep.far_bound_ok, rep.offgrid_sup
    print("criterion 4 far margins:", [round(r.far_margin, 5) for _, _, r in bargmann_reports])


def test_criterion_4_far_margin(acceptance, bargmann_reports):
    with acceptance.check(4, "far grid margin >= 0.01"):
        margins = [r.far_margin for _, _, r in bargmann_reports]
        assert min(margins) >= 0.01, f"smallest far margin {min(margins):.5f}"


def test_criterion_4_bargmann_recovery(acceptance):
    supports, rng = _bargmann_supports()
    sp = Bargmann()
    N = truncation_N(sp.R)
    op = BargmannMonomials(N)
    with acceptance.check(4, f"noiseless monomial recovery (N={N}), support_err <= 1e-4 over 10 seeds"):
        n = np.arange(N + 2, 4 * N)
        assert np.exp(-36 + 2 * n * np.log(6.0) - np.cumsum(np.log(np.arange(1, 4 * N)))[n - 1]).sum() <= 1e-10
        for seed, W in enumerate(supports):
            r = np.random.default_rng(seed)
            mu = AtomicMeasure("plane", W.coords, random_weights(r, 4))
            res = solve(op, sp, apply(op, sp, mu))
            se, we, um = atom_match_error(res.measure, mu)
            assert se <= 1e-4, f"seed {seed}: support error {se}"


# -- 5 ------------------------------------------------------------------------


def test_criterion_5_stability(acceptance):
    op, sp = TorusFourier(M), TrigTorus(M)
    lam = 1 - 0.34 * NEAR_RADIUS**2
    delta = NEAR_RADIUS / M
    n_checks, margins = 0, []
    with acceptance.check(5, "50 trials x eps {1e-3,1e-2} x ||mu_c|| {0,0.05}: concentration bound holds"):
        for seed in range(50):
            rng, T, mu = _torus_instance(seed)
            C = estimate_C(sp, op, T, lam, delta, trials=16, seed=seed)
            for eps in (1e-3, 1e-2):
                for tvc in (0.0, 0.05):
                    mc = None
                    if tvc:
                        w = rng.random(10) * np.exp(2j * np.pi * rng.random(10))
                        mc = AtomicMeasure("torus", rng.random(10), w * tvc / np.sum(np.abs(w)))
                    b = add_noise(apply(op, sp, mu, None if mc is None else ContaminationSpec(mc)), eps, seed)
                    res = solve(op, sp, b, SolverConfig(eps=eps))
                    assert res.converged
                    rhs = concentration_bound((mu, mc), eps, lam, delta, C)
                    rep = check_concentration(res, T, delta, rhs, lam, C)
                    assert rep.satisfied, f"seed {seed}, eps {eps}, tv {tvc}: {rep.observed_mass} < {rhs}"
                    n_checks += 1
                    margins.append(rep.observed_mass - rhs)
    print(f"criterion 5: {n_checks} checks, smallest margin {min(margins):.3e}")


# -- 6 ------------------------------------------------------------------------


def _timed(fn):
    t0 = time.perf_counter()
    fn()
    dt = time.perf_counter() - t0
    assert dt <= 120, f"{dt:.1f} s"


def test_criterion_6_oracles(acceptance):
    import test_certificate as tc
    import test_measurements as tm
    import test_rkhs as tr

    with acceptance.check(6, "(a) adjoint identity < 1e-9, 10^3 pairs per operator"):
        for case in tm.OPERATORS:
            _timed(lambda: tm.test_adjoint_identity(*case))
    with acceptance.check(6, "(b) mollified closed form vs adaptive quadrature <= 1e-10, 10^2 atoms"):
        _timed(tm.test_mollified_vs_quadrature)
    with acceptance.check(6, "(c) Bargmann inner products vs 2D quadrature <= 1e-8"):
        _timed(lambda: [tr.test_bargmann_inner_products_vs_quadrature(s) for s in range(6)])
    with acceptance.check(6, "(d) kappa derivatives vs central differences <= 1e-4"):
        _timed(lambda: [tc.test_fejer_derivatives_central_differences(m) for m in (16, 33, 128)])
    with acceptance.check(6, "(e) pairing inequality, zero violations in 10^3 trials"):
        _timed(tr.test_pairing_inequality)
    with acceptance.check(6, "(f) HRT: torus Gram nonsingular for s <= 2m+1, singular at 2m+2"):
        _timed(tr.test_hrt_torus)


# -- 7 ------------------------------------------------------------------------


def test_criterion_7_determinism(acceptance, tmp_path):
    configs = {
        "recover": {"seed": 9, "space": {"kind": "torus", "m": 64}, "truth": {"random": {"s": 4}},
                    "noise": {"eps": 0.01}, "contamination": {"tv": 0.05, "n_atoms": 5}},
        "certify": {"seed": 9, "space": {"kind": "paley_wiener"},
                    "operator": {"m": 32, "L": 100.0, "rho": 0.1}, "truth": {"random": {"s": 3}}},
        "stability": {"seed": 9, "space": {"kind": "torus", "m": 64}, "truth": {"random": {"s": 3}},
                      "noise": {"eps": 0.001}, "certificate": {"trials": 4}},
        "sweep": {"seed": 9, "space": {"kind": "torus", "m": 32}, "truth": {"random": {"s": 2}},
                  "sweep": {"noise.eps": [0, 0.01], "seed": [1, 2]}},
    }
    with acceptance.check(7, "re-runs with the same seed give byte-identical results.csv"):
        for cmd, cfg in configs.items():
            path = tmp_path / f"{cmd}.json"
            path.write_text(json.dumps(cfg))
            outs = []
            for k, jobs in enumerate(("1", "1", "2")):
                out = tmp_path / f"{cmd}-{k}"
                main([cmd, "--config", str(path), "--out", str(out), "--jobs", jobs])
                outs.append((out / "results.csv").read_bytes())
            assert outs[0] == outs[1] == outs[2], cmd
