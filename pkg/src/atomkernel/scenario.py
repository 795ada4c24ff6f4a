"""Scenario configs: schema, expansion, and the certify/recover/stability pipelines."""

from __future__ import annotations

import copy
import hashlib
import itertools
import json

import numpy as np

from . import certificate as cert_mod
from .domain import SupportSet, min_separation
from .errors import ParameterError, SeparationTooSmallError
from .measure import AtomicMeasure, ContaminationSpec, atom_match_error
from .measurements import (
    BargmannMonomials,
    MollifiedFourier,
    TorusFourier,
    add_noise,
    apply,
    radar_to_bargmann,
    truncation_N,
)
from .rkhs import Bargmann, PaleyWiener, TrigTorus
from .solver import SolverConfig, solve
from .stability import NEAR_RADIUS, check_concentration, concentration_bound, estimate_C

PIPELINES = ("certify", "recover", "stability")

_num = {"type": "number"}
_cnum = {"type": "array", "items": _num, "minItems": 2, "maxItems": 2}

SCHEMA = {
    "type": "object",
    "required": ["space"],
    "additionalProperties": False,
    "properties": {
        "name": {"type": "string"},
        "seed": {"type": "integer", "minimum": 0},
        "pipeline": {"enum": list(PIPELINES)},
        "output_dir": {"type": "string"},
        "space": {
            "type": "object",
            "required": ["kind"],
            "additionalProperties": False,
            "properties": {
                "kind": {"enum": ["torus", "paley_wiener", "bargmann"]},
                "m": {"type": "integer", "minimum": 1},
                "R": {"type": "number", "exclusiveMinimum": 0},
            },
        },
        "operator": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "kind": {"enum": ["torus_fourier", "mollified_fourier", "bargmann_monomials"]},
                "m": {"type": "integer", "minimum": 0},
                "L": {"type": "number", "exclusiveMinimum": 0},
                "rho": {"type": "number", "exclusiveMinimum": 0, "maximum": 0.5},
                "N": {"type": "integer", "minimum": 0},
                "normalize": {"type": "boolean"},
            },
        },
        "truth": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "atoms": {
                    "type": "array",
                    "items": {
                        "type": "object",
                        "required": ["x", "c"],
                        "additionalProperties": False,
                        "properties": {"x": {"oneOf": [_num, _cnum]}, "c": {"oneOf": [_num, _cnum]}},
                    },
                },
                "random": {
                    "type": "object",
                    "required": ["s"],
                    "additionalProperties": False,
                    "properties": {
                        "s": {"type": "integer", "minimum": 1},
                        "min_sep": {"type": "number", "exclusiveMinimum": 0},
                        "modulus": {"type": "array", "items": _num, "minItems": 2, "maxItems": 2},
                        "radius": {"type": "number", "exclusiveMinimum": 0},
                        "region": {"type": "number", "exclusiveMinimum": 0, "maximum": 1},
                        "max_sigma_excess": {"type": "number", "exclusiveMinimum": 0},
                    },
                },
                "radar": {
                    "type": "object",
                    "required": ["Lambda", "params"],
                    "additionalProperties": False,
                    "properties": {
                        "Lambda": {"type": "number", "exclusiveMinimum": 0},
                        "params": {
                            "type": "array",
                            "items": {"type": "array", "items": _num, "minItems": 3, "maxItems": 3},
                        },
                    },
                },
            },
        },
        "contamination": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "tv": {"type": "number", "minimum": 0},
                "n_atoms": {"type": "integer", "minimum": 1},
            },
        },
        "noise": {
            "type": "object",
            "additionalProperties": False,
            "properties": {"eps": {"type": "number", "minimum": 0}},
        },
        "solver": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "grid_size": {"type": "integer", "minimum": 2},
                "reg_lambda": {"oneOf": [{"type": "number", "exclusiveMinimum": 0}, {"const": "auto"}]},
                "eps": {"type": "number", "minimum": 0},
                "max_outer_iters": {"type": "integer", "minimum": 1},
                "prox_tol": {"type": "number", "exclusiveMinimum": 0},
                "prox_max_iters": {"type": "integer", "minimum": 1},
                "refine_max_iters": {"type": "integer", "minimum": 1},
                "grad_tol": {"type": "number", "exclusiveMinimum": 0},
                "merge_radius": {"type": "number", "minimum": 0},
                "plane_radius": {"type": "number", "exclusiveMinimum": 0},
            },
        },
        "certificate": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "lambda": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
                "delta": {"type": "number", "exclusiveMinimum": 0},
                "grid_res": {"type": "number", "exclusiveMinimum": 0},
                "trials": {"type": "integer", "minimum": 1},
                "enforce_separation": {"type": "boolean"},
            },
        },
        "assert": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "support_err": _num,
                "weight_err": _num,
                "tv_rel_err": _num,
                "far_margin": _num,
            },
        },
        "sweep": {
            "type": "object",
            "additionalProperties": {
                "oneOf": [
                    {"type": "array"},
                    {
                        "type": "object",
                        "required": ["start", "stop"],
                        "additionalProperties": False,
                        "properties": {"start": {"type": "integer"}, "stop": {"type": "integer"}},
                    },
                ]
            },
        },
    },
}


def config_hash(cfg: dict) -> str:
    return hashlib.sha256(json.dumps(cfg, sort_keys=True, separators=(",", ":")).encode()).hexdigest()


# ---------------------------------------------------------------------------
# Expansion
# ---------------------------------------------------------------------------


def _set_path(cfg: dict, path: str, value):
    keys = path.split(".")
    d = cfg
    for k in keys[:-1]:
        d = d.setdefault(k, {})
    d[keys[-1]] = value


def derived_seed(base: int, index: int) -> int:
    return int(np.random.SeedSequence([base, index]).generate_state(1)[0])


def sweep_expand(cfg: dict) -> list[dict]:
    """Cartesian product of the ``sweep`` ranges, one resolved config per point.

    Sweep keys are dotted paths into the config (``"noise.eps"``,
    ``"truth.random.s"``, ``"seed"``). Values are lists or integer ranges
    ``{"start": a, "stop": b}`` (inclusive). Unless the seed itself is swept,
    each scenario receives a seed derived from the base seed and its index.
    """
    sweep = cfg.get("sweep") or {}
    base = {k: v for k, v in cfg.items() if k != "sweep"}
    keys = list(sweep)
    axes = []
    for k in keys:
        v = sweep[k]
        if isinstance(v, dict):
            vals = list(range(int(v["start"]), int(v["stop"]) + 1))
        else:
            vals = list(v)
        if not vals:
            raise ParameterError(f"sweep range {k!r} is empty")
        axes.append(vals)
    out = []
    seed0 = int(base.get("seed", 0))
    for idx, combo in enumerate(itertools.product(*axes)):
        sc = copy.deepcopy(base)
        for k, v in zip(keys, combo):
            _set_path(sc, k, v)
        if keys and "seed" not in keys:
            sc["seed"] = derived_seed(seed0, idx)
        sc.setdefault("seed", seed0)
        out.append(sc)
    return out


# ---------------------------------------------------------------------------
# Building blocks
# ---------------------------------------------------------------------------


def build_space(cfg: dict):
    sp = cfg["space"]
    if sp["kind"] == "torus":
        if "m" not in sp:
            raise ParameterError("torus space needs m")
        return TrigTorus(int(sp["m"]))
    if sp["kind"] == "paley_wiener":
        return PaleyWiener()
    return Bargmann(float(sp.get("R", 6.0)))


def build_operator(cfg: dict, space):
    op = dict(cfg.get("operator") or {})
    if isinstance(space, TrigTorus):
        return TorusFourier(int(op.get("m", space.m)), bool(op.get("normalize", True)), space.m)
    if isinstance(space, PaleyWiener):
        for k in ("m", "L", "rho"):
            if k not in op:
                raise ParameterError(f"mollified Fourier operator needs {k}")
        return MollifiedFourier(int(op["m"]), float(op["L"]), float(op["rho"]))
    return BargmannMonomials(int(op["N"]) if "N" in op else truncation_N(space.R))


def _kind(space) -> str:
    return space.domain


def _sample_support(space, op, rnd: dict, rng) -> np.ndarray:
    s = int(rnd["s"])
    kind = _kind(space)
    for _ in range(100000):
        if kind == "torus":
            sep = rnd.get("min_sep", 2.0 / op.m)
            x = np.sort(rng.random(s))
        elif kind == "line":
            sep = rnd.get("min_sep", 5.0 * op.L / op.m)
            half = 0.5 * op.L * rnd.get("region", 0.8)
            x = np.sort(rng.uniform(-half, half, s))
        else:
            sep = rnd.get("min_sep", 4.0)
            R = rnd.get("radius", space.R)
            x = R * np.sqrt(rng.random(s)) * np.exp(2j * np.pi * rng.random(s))
        if s < 2:
            return x
        T = SupportSet(kind, x)
        if min_separation(T) < sep:
            continue
        if kind == "plane" and "max_sigma_excess" in rnd:
            if cert_mod.sigma_down(T) - 1 > rnd["max_sigma_excess"]:
                continue
        return x
    raise ParameterError("could not sample a support with the requested separation")


def build_truth(cfg: dict, space, op, rng) -> AtomicMeasure:
    kind = _kind(space)
    truth = cfg.get("truth") or {"random": {"s": 1}}
    if "atoms" in truth:
        return AtomicMeasure.from_list(kind, truth["atoms"])
    if "radar" in truth:
        if kind != "plane":
            raise ParameterError("radar truth needs the Bargmann space")
        r = truth["radar"]
        return radar_to_bargmann([tuple(p) for p in r["params"]], r["Lambda"])
    rnd = truth.get("random", {"s": 1})
    x = _sample_support(space, op, rnd, rng)
    lo, hi = rnd.get("modulus", [0.5, 2.0])
    c = rng.uniform(lo, hi, x.size) * np.exp(2j * np.pi * rng.random(x.size))
    return AtomicMeasure(kind, x, c)


def build_contamination(cfg: dict, space, op, rng) -> ContaminationSpec | None:
    cc = cfg.get("contamination")
    if not cc or cc.get("tv", 0) == 0:
        return None
    n = int(cc.get("n_atoms", 20))
    kind = _kind(space)
    if kind == "torus":
        x = rng.random(n)
    elif kind == "line":
        x = rng.uniform(-op.L / 2, op.L / 2, n)
    else:
        x = space.R * np.sqrt(rng.random(n)) * np.exp(2j * np.pi * rng.random(n))
    w = rng.random(n) * np.exp(2j * np.pi * rng.random(n))
    w *= cc["tv"] / np.sum(np.abs(w))
    return ContaminationSpec(AtomicMeasure(kind, x, w))


def solver_config(cfg: dict, eps: float) -> SolverConfig:
    sc = dict(cfg.get("solver") or {})
    sc.setdefault("eps", eps)
    return SolverConfig(**sc)


def _signs(mu: AtomicMeasure) -> np.ndarray:
    return mu.c / np.abs(mu.c)


def _build_certificate(space, op, T: SupportSet, omega):
    if isinstance(space, TrigTorus):
        return cert_mod.build_torus_certificate(T, omega, op.m, op)
    if isinstance(space, PaleyWiener):
        return cert_mod.build_pw_certificate(T, omega, op.m, op.rho, op.L)
    return cert_mod.build_bargmann_certificate(T, omega, N=op.N, R=space.R)


def _separation_threshold(space, op) -> float | None:
    if isinstance(space, TrigTorus):
        return 2.0 / op.m
    if isinstance(space, PaleyWiener):
        return 5.0 * op.L / op.m
    return None


def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        return float(v)
    return v


# ---------------------------------------------------------------------------
# Pipelines
# ---------------------------------------------------------------------------


def run_scenario(pipeline: str, cfg: dict) -> dict:
    """Run one scenario; returns ``{"row": flat dict, "detail": dict, "ok": bool}``."""
    if pipeline not in PIPELINES:
        raise ParameterError(f"unknown pipeline {pipeline!r}")
    seed = int(cfg.get("seed", 0))
    rng = np.random.default_rng(seed)
    space = build_space(cfg)
    op = build_operator(cfg, space)
    mu = build_truth(cfg, space, op, rng)
    T = SupportSet(mu.kind, mu.x)
    sep = min_separation(T) if len(T) >= 2 else float("inf")
    row = {"seed": seed, "s": len(T), "delta_T": sep}
    detail: dict = {"truth": mu.to_list()}
    checks = cfg.get("assert") or {}
    if pipeline == "certify":
        ok = _certify(cfg, space, op, mu, T, sep, row, detail, checks)
    elif pipeline == "recover":
        ok = _recover(cfg, space, op, mu, rng, row, detail, checks)
    else:
        ok = _stability(cfg, space, op, mu, T, rng, row, detail)
    row = {k: _fmt(v) for k, v in row.items()}
    return {"row": row, "detail": detail, "ok": bool(ok)}


def _certify(cfg, space, op, mu, T, sep, row, detail, checks):
    cc = cfg.get("certificate") or {}
    thr = _separation_threshold(space, op)
    if cc.get("enforce_separation", True) and thr is not None and sep < thr:
        raise SeparationTooSmallError(f"separation too small: Delta(T) = {sep:.6g} < {thr:.6g}")
    cert = _build_certificate(space, op, T, _signs(mu))
    kw = {}
    if "grid_res" in cc:
        kw["grid_res"] = cc["grid_res"]
    rep = cert_mod.validate(cert, **kw)
    row.update(
        cond=cert.cond,
        interp_residual=rep.interp_residual,
        nu_norm=cert.nu_norm,
        offgrid_sup=rep.offgrid_sup,
        near_margin=rep.near_margin,
        far_margin=rep.far_margin,
        hessian_ok="" if rep.hessian_ok is None else rep.hessian_ok,
        ok=rep.ok,
    )
    detail["certificate"] = cert.to_dict()
    detail["validation"] = {k: _fmt(v) for k, v in rep.to_dict().items()}
    ok = rep.ok and rep.interp_residual <= 1e-8
    if "far_margin" in checks:
        ok = ok and rep.far_margin >= checks["far_margin"]
    return ok


def _measure(cfg, space, op, mu, rng):
    cont = build_contamination(cfg, space, op, rng)
    eps = float((cfg.get("noise") or {}).get("eps", 0.0))
    b = apply(op, space, mu, cont)
    b = add_noise(b, eps, int(rng.integers(2**31)))
    return b, cont, eps


def _recover(cfg, space, op, mu, rng, row, detail, checks):
    b, cont, eps = _measure(cfg, space, op, mu, rng)
    res = solve(op, space, b, solver_config(cfg, eps))
    se, we, um = atom_match_error(res.measure, mu)
    tv_true = float(np.sum(np.abs(mu.c)))
    row.update(
        support_err=se,
        weight_err=we,
        unmatched_mass=um,
        tv_value=res.tv_value,
        tv_true=tv_true,
        residual=res.residual_norm,
        dual_sup=res.dual_sup,
        converged=res.converged,
    )
    detail["result"] = res.to_dict()
    ok = res.converged
    if "support_err" in checks:
        ok = ok and se <= checks["support_err"]
    if "weight_err" in checks:
        ok = ok and we <= checks["weight_err"]
    if "tv_rel_err" in checks:
        ok = ok and abs(res.tv_value - tv_true) <= checks["tv_rel_err"] * tv_true
    return ok


def _stability(cfg, space, op, mu, T, rng, row, detail):
    cc = cfg.get("certificate") or {}
    lam = float(cc.get("lambda", 1 - 0.34 * NEAR_RADIUS**2))
    if "delta" in cc:
        delta = float(cc["delta"])
    elif isinstance(space, TrigTorus):
        delta = NEAR_RADIUS / op.m
    elif isinstance(space, PaleyWiener):
        delta = NEAR_RADIUS * op.L / op.m
    else:
        delta = (np.sqrt(3) - 1) / (4 * cert_mod.sigma_up(T))
    C = estimate_C(space, op, T, lam, delta, int(cc.get("trials", 16)), int(cfg.get("seed", 0)))
    b, cont, eps = _measure(cfg, space, op, mu, rng)
    res = solve(op, space, b, solver_config(cfg, eps))
    mu_c = None if cont is None else cont.measure
    rhs = concentration_bound((mu, mu_c), eps, lam, delta, C, proxy="lower")
    rhs_up = concentration_bound((mu, mu_c), eps, lam, delta, C, proxy="upper")
    rep = check_concentration(res, T, delta, rhs, lam, C)
    row.update(
        lam=lam,
        delta=delta,
        C_upper=C,
        bound_rhs=rhs,
        bound_rhs_upper=rhs_up,
        observed_mass=rep.observed_mass,
        bound_margin=rep.observed_mass - rhs,
        tv_value=res.tv_value,
        residual=res.residual_norm,
        satisfied=rep.satisfied,
    )
    detail["result"] = res.to_dict()
    detail["stability"] = rep.to_dict()
    return rep.satisfied
