"""Clustered eigenvalues of the augmented EBM system at one spatial frequency.

Replacing the Laplacian by its eigenvalue ``eta = -(2k-1)^2`` turns the
augmented first-order system in ``(u, v, w_1..w_N)`` into an ``(N+2)``-square
real matrix. Its characteristic polynomial, scaled to leading coefficient
``1/(2k-1)^2``, is

    P(lam) = (D + lam^2/(2k-1)^2) prod_j (lam + r_j) - sum_i b_i prod_{j!=i} (lam + r_j)

``N`` of its roots interlace with the negated rates, so they are isolated by
bisection between consecutive ``-r_j``; the remaining two come from the
deflated quadratic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import polyutil
from .errors import (
    BracketFailure,
    DeflationResidual,
    NotARoot,
    PoleCollision,
    SignAgreement,
    ValidationError,
)
from .polyutil import Bracket, Polynomial
from .relaxation import EbmModel

INSET_FACTOR = 1e-9
RESIDUAL_FACTOR = 1e-10
POLE_TOL = 1e-14
UPPER_GROWTH_CAP = 2.0**60
TRACE_TOL = 1e-8


def check_k(k: int) -> int:
    if int(k) != k or k < 1:
        raise ValidationError(f"frequency index must be a positive integer, got {k}")
    return int(k)


def eta(k: int) -> float:
    """Spatial eigenvalue ``-(2k-1)^2`` for frequency index ``k``."""
    k = check_k(k)
    return -float((2 * k - 1) ** 2)


@dataclass(frozen=True)
class Cluster:
    """The ``N + 2`` eigenvalues of the reduced matrix at frequency ``k``.

    ``real_roots`` holds the interlaced roots in descending order,
    ``extra_roots`` the remaining pair: ``(p + iq, p - iq)`` with ``q >= 0``,
    or two reals ``(x1, x2)`` with ``x1 >= x2``.
    """

    k: int
    real_roots: tuple[float, ...]
    extra_roots: tuple[complex, complex]

    @property
    def N(self) -> int:
        return len(self.real_roots)

    @property
    def roots(self) -> tuple[complex, ...]:
        return tuple(complex(a) for a in self.real_roots) + tuple(self.extra_roots)


def rate_product(r) -> Polynomial:
    """``prod_j (lam + r_j)``."""
    p = Polynomial([1.0])
    for rj in r:
        p = p * Polynomial([rj, 1.0])
    return p


def characteristic_polynomial(m: EbmModel, k: int) -> Polynomial:
    K = float((2 * check_k(k) - 1) ** 2)
    full = rate_product(m.r)
    p = full * Polynomial([m.D, 0.0, 1.0 / K])
    for i, bi in enumerate(m.b):
        p = p - rate_product(m.r[:i] + m.r[i + 1:]) * bi
    return p


def build_augmented_matrix(m: EbmModel, k: int) -> np.ndarray:
    """Generator of the reduced system ``u' = v``, ``v' = D eta u - sum b_i w_i``,
    ``w_i' = eta u - r_i w_i``.

    The minus sign on the memory terms is the one for which
    ``det(lam I - A) = (2k-1)^2 P(lam)``.
    """
    e = eta(k)
    n = m.N + 2
    A = np.zeros((n, n))
    A[0, 1] = 1.0
    A[1, 0] = m.D * e
    for i, (bi, ri) in enumerate(zip(m.b, m.r)):
        A[1, 2 + i] = -bi
        A[2 + i, 0] = e
        A[2 + i, 2 + i] = -ri
    return A


def _check_pole(m: EbmModel, lam: complex) -> None:
    for ri in m.r:
        if abs(lam + ri) <= POLE_TOL * ri:
            raise PoleCollision(f"lambda={lam} coincides with -r={-ri}")


def eigenvector(m: EbmModel, k: int, lam: complex) -> tuple[complex, ...]:
    """Modal vector ``(1, lam, -(2k-1)^2/(lam + r_i) ...)`` (spatial factor dropped)."""
    K = -eta(k)
    lam = complex(lam)
    _check_pole(m, lam)
    return (1 + 0j, lam) + tuple(-K / (lam + ri) for ri in m.r)


def secular_residual(m: EbmModel, k: int, a: float) -> float:
    """``sum b_i/(a + r_i) - D - a^2/(2k-1)^2``; vanishes at interlaced roots."""
    K = -eta(k)
    _check_pole(m, a)
    return math.fsum(bi / (a + ri) for bi, ri in zip(m.b, m.r)) - m.D - a * a / K


def secular_relative_residual(m: EbmModel, k: int, a: float) -> float:
    """``secular_residual`` divided by the magnitude of its terms.

    Near a pole the terms are large and the absolute residual scales with
    them, so this is the size-independent accuracy measure of a root.
    """
    K = -eta(k)
    scale = math.fsum(abs(bi / (a + ri)) for bi, ri in zip(m.b, m.r)) + m.D + a * a / K
    return abs(secular_residual(m, k, a)) / scale


def residual_tolerance(p: Polynomial, rho: complex) -> float:
    s = max(1.0, abs(rho))
    return RESIDUAL_FACTOR * math.fsum(abs(c) * s**j for j, c in enumerate(p.coefficients))


def charpoly_value(m: EbmModel, k: int, lam: complex) -> complex:
    """``P(lam)`` evaluated from its factored definition.

    Near the roots this is several digits more accurate than Horner on the
    expanded coefficients, whose magnitudes span ``1/(2k-1)^2`` to ``D prod r``.
    """
    K = -eta(k)
    shifted = [lam + ri for ri in m.r]
    total = 1.0
    for s in shifted:
        total *= s
    acc = (m.D + lam * lam / K) * total
    for i, bi in enumerate(m.b):
        partial = bi
        for j, s in enumerate(shifted):
            if j != i:
                partial *= s
        acc -= partial
    return acc


def _bisect(f, lo: float, hi: float, tol: float, label: str) -> float:
    try:
        bracket = Bracket.of(f, lo, hi)
    except SignAgreement as exc:
        raise BracketFailure(f"{label}: {exc}") from None
    return polyutil.bisect_root(f, bracket, tol=tol)


def _polish(m: EbmModel, k: int, dp: Polynomial, z: complex, steps: int = 3) -> complex:
    # Newton on the factored form; keep the iterate only while the residual drops
    best, best_res = z, abs(charpoly_value(m, k, z))
    for _ in range(steps):
        d = polyutil.evaluate_complex(dp, best)
        if d == 0:
            break
        cand = best - charpoly_value(m, k, best) / d
        res = abs(charpoly_value(m, k, cand))
        if not res < best_res:
            break
        best, best_res = cand, res
    return best


def _canonical_pair(z1: complex, z2: complex) -> tuple[complex, complex]:
    if z1.imag == 0.0 and z2.imag == 0.0:
        return (z1, z2) if z1.real >= z2.real else (z2, z1)
    re, im = 0.5 * (z1.real + z2.real), 0.5 * (abs(z1.imag) + abs(z2.imag))
    return complex(re, im), complex(re, -im)


def compute_cluster(m: EbmModel, k: int, tol: float = polyutil.BISECT_TOL) -> Cluster:
    if tol <= 0:
        raise ValidationError("tol must be positive")
    k = check_k(k)
    p = characteristic_polynomial(m, k)

    def f(lam: float) -> float:
        return charpoly_value(m, k, lam)

    r = m.r
    inset = INSET_FACTOR * min(b - a for a, b in zip((0.0,) + r, r))
    upper = max(1.0, r[-1])
    cap = UPPER_GROWTH_CAP * r[-1]
    while f(upper) <= 0:
        upper *= 2.0
        if upper > cap:
            raise BracketFailure(f"no positive value of P found up to {cap:g}")
    roots = [_bisect(f, -r[0] + inset, upper, tol, "a_1")]
    for j in range(1, len(r)):
        roots.append(_bisect(f, -r[j] + inset, -r[j - 1] - inset, tol, f"a_{j + 1}"))

    # Composite deflation handles an extra pair smaller than the real roots
    # (small k) but fails on a near-zero real root (glassy models), where
    # plain forward division is right. A bad quotient can also land the pair
    # on an interlaced root, which the residual alone cannot see, so the
    # trace identity sum(roots) = -sum(r) picks between the two.
    dp = _derivative(p)
    candidates = []
    for composite in (True, False):
        try:
            extra = _extra_pair(m, k, p, dp, roots, composite)
        except NotARoot:
            continue
        candidates.append((_trace_error(m, roots, extra), extra))
    if not candidates:
        raise DeflationResidual("deflation of the interlaced roots failed in both directions")
    trace_err, extra = min(candidates, key=lambda c: c[0])
    if trace_err > TRACE_TOL:
        raise DeflationResidual(f"extra pair violates the trace identity by {trace_err:.3e}")

    for rho in (*roots, *extra):
        res = abs(charpoly_value(m, k, rho))
        if res > residual_tolerance(p, rho):
            raise DeflationResidual(f"|P({rho})| = {res:.3e} above tolerance")

    # (-r_1, inf) may hold three real roots; a real extra pair lies below a_1,
    # so a_1 is the largest of them whichever one bisection happened to find
    if extra[0].imag == 0.0 and extra[0].real > roots[0]:
        top = sorted([roots[0], extra[0].real, extra[1].real], reverse=True)
        roots[0] = top[0]
        extra = (complex(top[1]), complex(top[2]))
    return Cluster(k=k, real_roots=tuple(roots), extra_roots=extra)


def _extra_pair(m, k, p, dp, roots, composite: bool) -> tuple[complex, complex]:
    q = p
    for a in sorted(roots, key=abs):
        q = polyutil.deflate(q, a, composite=composite)
    z1, z2 = polyutil.solve_quadratic(q)
    if z1.imag == 0.0:
        return _canonical_pair(
            complex(_polish(m, k, dp, z1).real), complex(_polish(m, k, dp, z2).real)
        )
    z = _polish(m, k, dp, z1)
    return _canonical_pair(z, z.conjugate())


def _trace_error(m: EbmModel, roots, extra) -> float:
    # the lam^(N+1) coefficient of P fixes the root sum at -sum(r)
    total = math.fsum([*roots, extra[0].real, extra[1].real, *m.r])
    scale = math.fsum([*map(abs, roots), abs(extra[0]), abs(extra[1]), *m.r])
    return abs(total) / scale


def _derivative(p: Polynomial) -> Polynomial:
    return Polynomial([j * c for j, c in enumerate(p.coefficients)][1:] or [0.0])


def interlaces(c: Cluster, m: EbmModel) -> bool:
    """Strict ``-r_N < a_N < -r_{N-1} < ... < -r_1 < a_1``."""
    if c.N != m.N:
        return False
    a, r = c.real_roots, m.r
    for j in range(m.N):
        if not a[j] > -r[j]:
            return False
        if j > 0 and not a[j] < -r[j - 1]:
            return False
    return True


def extra_roots_localized(c: Cluster, m: EbmModel) -> bool:
    """Extra pair inside ``{Re in [(-r_N-a_1)/2, (-r_1-a_1)/2]}`` or real in ``(-r_N, a_1)``.

    The strip is closed: with ``N = 1`` it degenerates to the single line
    ``Re = -(r_1 + a_1)/2``, where the trace identity puts the pair exactly.
    """
    a1 = c.real_roots[0]
    slack = 1e-12 * (m.r[-1] + abs(a1))
    lo, hi = (-m.r[-1] - a1) / 2.0 - slack, (-m.r[0] - a1) / 2.0 + slack
    for z in c.extra_roots:
        in_strip = lo <= z.real <= hi
        in_segment = z.imag == 0.0 and -m.r[-1] < z.real < a1
        if not (in_strip or in_segment):
            return False
    return True
