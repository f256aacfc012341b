"""Shared oracles. Nothing here uses the package's own root finders."""

import mpmath
import numpy as np
import pytest

from ebm_inverse.relaxation import EbmModel

mpmath.mp.dps = 50


def mp_charpoly(m: EbmModel, k: int) -> list:
    """Coefficients of P, highest degree first, built in 50-digit arithmetic."""
    def mul(a, b):
        out = [mpmath.mpf(0)] * (len(a) + len(b) - 1)
        for i, x in enumerate(a):
            for j, y in enumerate(b):
                out[i + j] += x * y
        return out

    def add(a, b):
        n = max(len(a), len(b))
        a = [mpmath.mpf(0)] * (n - len(a)) + a
        b = [mpmath.mpf(0)] * (n - len(b)) + b
        return [x + y for x, y in zip(a, b)]

    K = mpmath.mpf((2 * k - 1) ** 2)
    r = [mpmath.mpf(x) for x in m.r]
    b = [mpmath.mpf(x) for x in m.b]
    full = [mpmath.mpf(1)]
    for rj in r:
        full = mul(full, [mpmath.mpf(1), rj])
    p = mul(full, [1 / K, mpmath.mpf(0), mpmath.mpf(m.D)])
    for i, bi in enumerate(b):
        part = [bi]
        for j, rj in enumerate(r):
            if j != i:
                part = mul(part, [mpmath.mpf(1), rj])
        p = add(p, [-x for x in part])
    return p


def mp_roots(m: EbmModel, k: int) -> list[complex]:
    coeffs = mp_charpoly(m, k)
    roots = mpmath.polyroots(coeffs, maxsteps=400, extraprec=400)
    return [complex(z) for z in roots]


def match_roots(found, expected) -> float:
    """Largest relative distance under greedy nearest matching."""
    expected = list(expected)
    worst = 0.0
    for z in found:
        idx = min(range(len(expected)), key=lambda i: abs(expected[i] - z))
        e = expected.pop(idx)
        worst = max(worst, abs(e - z) / max(1.0, abs(e)))
    assert not expected
    return worst


@pytest.fixture
def n1_model():
    """Glassy N=1 reference: P = lam^3 + 2 lam^2 + lam at k=1."""
    return EbmModel(D=1.0, b=(2.0,), r=(2.0,))


def random_model(rng: np.random.Generator, regime: str, n_max: int = 9) -> EbmModel:
    """Rates in [1, 50] with gaps >= 1, weights in [0.1, 5], D in [0.1, 10]."""
    while True:
        N = int(rng.integers(1, n_max + 1))
        r = np.sort(rng.uniform(1.0, 50.0, N))
        if N > 1 and np.min(np.diff(r)) < 1.0:
            continue
        b = rng.uniform(0.1, 5.0, N)
        h = float(np.sum(b / r))
        D = {"D>h": h * rng.uniform(1.1, 3.0), "D=h": h, "D<h": h * rng.uniform(0.2, 0.9)}[regime]
        if 0.1 <= D <= 10.0:
            return EbmModel(D=float(D), b=tuple(map(float, b)), r=tuple(map(float, r)))
