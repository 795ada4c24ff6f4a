"""Random instance generators shared by the test modules."""

import numpy as np

from atomkernel.certificate import sigma_down
from atomkernel.domain import SupportSet, min_separation


def random_signs(rng, s):
    return np.exp(2j * np.pi * rng.random(s))


def random_weights(rng, s, lo=0.5, hi=2.0):
    return rng.uniform(lo, hi, s) * random_signs(rng, s)


def torus_support(rng, s, min_sep):
    while True:
        x = np.sort(rng.random(s))
        if s < 2 or min_separation(SupportSet("torus", x)) >= min_sep:
            return SupportSet("torus", x)


def line_support(rng, s, min_sep, half):
    while True:
        x = np.sort(rng.uniform(-half, half, s))
        if s < 2 or min_separation(SupportSet("line", x)) >= min_sep:
            return SupportSet("line", x)


def plane_support(rng, s, min_sep=4.0, radius=6.0, max_excess=0.03):
    while True:
        z = radius * np.sqrt(rng.random(s)) * np.exp(2j * np.pi * rng.random(s))
        W = SupportSet("plane", z)
        if s >= 2 and min_separation(W) < min_sep:
            continue
        if sigma_down(W) - 1 <= max_excess:
            return W
