import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from atomkernel.domain import (
    DomainPoint,
    SupportSet,
    distance,
    in_neighborhood,
    min_separation,
)
from atomkernel.errors import SeparationUndefinedError, VariantMismatchError
from atomkernel.measure import (
    AtomicMeasure,
    atom_match_error,
    mass_in_neighborhood,
    normalize,
    tv_norm,
)


def test_distance_examples():
    assert distance(DomainPoint.torus(0.95), DomainPoint.torus(0.1)) == pytest.approx(0.15, abs=1e-15)
    assert distance(DomainPoint.torus(0.3), DomainPoint.torus(0.3)) == 0
    assert distance(DomainPoint.plane(0), DomainPoint.plane(3 + 4j)) == pytest.approx(5)


def test_distance_variant_mismatch():
    with pytest.raises(VariantMismatchError):
        distance(DomainPoint.torus(0.1), DomainPoint.line(0.1))


def test_min_separation_examples():
    assert min_separation(SupportSet("torus", [0.1, 0.3, 0.95])) == pytest.approx(0.15)
    assert min_separation(SupportSet("plane", [0, 4, 4 + 4j])) == pytest.approx(4)
    with pytest.raises(SeparationUndefinedError):
        min_separation(SupportSet("torus", [0.5]))


def test_in_neighborhood_examples():
    T = SupportSet("torus", [0.3])
    assert in_neighborhood(DomainPoint.torus(0.31), T, 0.02)
    assert not in_neighborhood(DomainPoint.torus(0.35), T, 0.02)
    assert in_neighborhood(DomainPoint.torus(0.3), T, 1e-12)


@pytest.mark.parametrize("kind", ["torus", "line", "plane"])
def test_metric_axioms(kind):
    rng = np.random.default_rng(1)
    n = 10_000
    if kind == "plane":
        pts = (rng.normal(size=(3, n)) + 1j * rng.normal(size=(3, n))) * 3
    elif kind == "line":
        pts = rng.normal(size=(3, n)) * 10
    else:
        pts = rng.random((3, n))
    mk = {"torus": DomainPoint.torus, "line": DomainPoint.line, "plane": DomainPoint.plane}[kind]
    worst = 0.0
    for a, b, c in zip(*pts):
        A, B, C = mk(a), mk(b), mk(c)
        ab, ba = distance(A, B), distance(B, A)
        assert ab == ba
        worst = max(worst, distance(A, C) - ab - distance(B, C))
        if kind == "torus":
            assert ab <= 0.5
    assert worst <= 1e-12


@settings(max_examples=50, deadline=None)
@given(st.lists(st.integers(0, 999), min_size=2, max_size=8, unique=True), st.randoms())
def test_min_separation_permutation_invariant(ks, rnd):
    xs = [k / 1000 for k in ks]
    ys = list(xs)
    rnd.shuffle(ys)
    assert min_separation(SupportSet("torus", xs)) == min_separation(SupportSet("torus", ys))


def test_tv_norm_examples():
    assert tv_norm(AtomicMeasure("torus", [0.2, 0.7], [1, -2j])) == pytest.approx(3)
    assert tv_norm(AtomicMeasure.empty("torus")) == 0
    assert tv_norm(AtomicMeasure("torus", [0.2, 0.2], [1, -1])) == 0


def test_normalize_examples():
    mu = normalize(AtomicMeasure("torus", [0.2, 0.2001], [1, 1]), 1e-3)
    assert len(mu) == 1 and mu.c[0] == pytest.approx(2) and mu.x[0] == pytest.approx(0.20005)
    one = AtomicMeasure("torus", [0.2], [1])
    assert np.array_equal(normalize(one, 0).x, one.x)
    two = normalize(AtomicMeasure("torus", [0.2, 0.7], [1, 1]), 1e-3)
    assert len(two) == 2


def test_mass_in_neighborhood_examples():
    T = SupportSet("torus", [0.3])
    assert mass_in_neighborhood(AtomicMeasure("torus", [0.3], [2]), T, 0.01) == pytest.approx(2)
    assert mass_in_neighborhood(AtomicMeasure("torus", [0.3, 0.6], [2, 1]), T, 0.01) == pytest.approx(2)
    assert mass_in_neighborhood(AtomicMeasure.empty("torus"), T, 0.01) == 0


def test_atom_match_examples():
    mu = AtomicMeasure("torus", [0.3], [2.0])
    assert atom_match_error(mu, mu) == (0, 0, 0)
    se, we, um = atom_match_error(AtomicMeasure("torus", [0.3001], [2.0]), mu)
    assert se == pytest.approx(1e-4) and we == 0 and um == 0
    se, we, um = atom_match_error(AtomicMeasure("torus", [0.3, 0.9], [2, 0.01]), mu)
    assert (se, we) == (0, 0) and um == pytest.approx(0.01)


def _rand_measure(rng, n):
    return AtomicMeasure("torus", rng.random(n), rng.normal(size=n) + 1j * rng.normal(size=n))


def test_tv_triangle_homogeneity_and_mass_bound():
    rng = np.random.default_rng(2)
    for _ in range(1000):
        mu, nu = _rand_measure(rng, 4), _rand_measure(rng, 3)
        assert tv_norm(mu + nu) <= tv_norm(mu) + tv_norm(nu) + 1e-12
        a = complex(rng.normal(), rng.normal())
        assert tv_norm(mu * a) == pytest.approx(abs(a) * tv_norm(mu), rel=1e-14)
        T = SupportSet("torus", rng.random(2))
        assert mass_in_neighborhood(mu, T, 0.1) <= tv_norm(mu) + 1e-15


def test_measure_json_roundtrip():
    mu = AtomicMeasure("plane", [1 + 2j, -3j], [0.5 - 1j, 2])
    back = AtomicMeasure.from_json("plane", mu.to_json())
    assert np.array_equal(back.x, mu.x) and np.array_equal(back.c, mu.c)
