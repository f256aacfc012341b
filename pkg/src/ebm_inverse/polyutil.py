"""Dense real polynomials and scalar root-finding primitives.

Coefficients are stored in ascending degree order, ``coefficients[j]``
multiplies ``x**j``. Everything here is plain Python floats: the polynomials
involved have degree ``N + 2 <= ~12`` and the forward/inverse solvers call
``evaluate`` inside bisection loops, where numpy call overhead dominates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

from .errors import (
    ConjugacyViolation,
    DegreeMismatch,
    MaxIterExceeded,
    NotARoot,
    SignAgreement,
)

CONJUGATE_TOL = 1e-9
DEFLATION_TOL = 1e-6
BISECT_TOL = 1e-12
BISECT_MAX_ITER = 200


@dataclass(frozen=True)
class Polynomial:
    coefficients: tuple[float, ...]

    def __init__(self, coefficients: Iterable[float]):
        coeffs = [float(c) for c in coefficients]
        if not all(math.isfinite(c) for c in coeffs):
            raise ValueError(f"non-finite polynomial coefficient in {coeffs}")
        while len(coeffs) > 1 and coeffs[-1] == 0.0:
            coeffs.pop()
        if not coeffs:
            coeffs = [0.0]
        object.__setattr__(self, "coefficients", tuple(coeffs))

    @property
    def degree(self) -> int:
        return len(self.coefficients) - 1

    @property
    def leading(self) -> float:
        return self.coefficients[-1]

    def norm1(self) -> float:
        return math.fsum(abs(c) for c in self.coefficients)

    def scale_at(self, x: float) -> float:
        """Magnitude ``sum |c_j| |x|^j``, the natural size of ``p(x)``."""
        ax = abs(x)
        acc = 0.0
        for c in reversed(self.coefficients):
            acc = acc * ax + abs(c)
        return acc

    def __call__(self, x: float) -> float:
        return evaluate(self, x)

    def __mul__(self, other: "Polynomial | float") -> "Polynomial":
        if not isinstance(other, Polynomial):
            return Polynomial(c * other for c in self.coefficients)
        out = [0.0] * (len(self.coefficients) + len(other.coefficients) - 1)
        for i, a in enumerate(self.coefficients):
            for j, b in enumerate(other.coefficients):
                out[i + j] += a * b
        return Polynomial(out)

    __rmul__ = __mul__

    def __add__(self, other: "Polynomial") -> "Polynomial":
        a, b = self.coefficients, other.coefficients
        n = max(len(a), len(b))
        return Polynomial(
            (a[j] if j < len(a) else 0.0) + (b[j] if j < len(b) else 0.0)
            for j in range(n)
        )

    def __sub__(self, other: "Polynomial") -> "Polynomial":
        return self + other * -1.0


@dataclass(frozen=True)
class Bracket:
    lo: float
    hi: float
    f_lo_sign: int
    f_hi_sign: int

    def __post_init__(self):
        if not self.lo < self.hi:
            raise ValueError(f"bracket needs lo < hi, got ({self.lo}, {self.hi})")
        if {self.f_lo_sign, self.f_hi_sign} != {-1, 1}:
            raise SignAgreement(
                f"no sign change on ({self.lo}, {self.hi}): "
                f"signs {self.f_lo_sign}, {self.f_hi_sign}"
            )

    @classmethod
    def of(cls, f: Callable[[float], float], lo: float, hi: float) -> "Bracket":
        return cls(lo, hi, _sign(f(lo)), _sign(f(hi)))


def _sign(v: float) -> int:
    return (v > 0) - (v < 0)


def evaluate(p: Polynomial, x: float) -> float:
    acc = 0.0
    for c in reversed(p.coefficients):
        acc = acc * x + c
    return acc


def evaluate_complex(p: Polynomial, z: complex) -> complex:
    z = complex(z)
    acc = 0j
    for c in reversed(p.coefficients):
        acc = acc * z + c
    return acc


def _is_real(z: complex, tol: float = CONJUGATE_TOL) -> bool:
    return abs(z.imag) <= tol * max(1.0, abs(z.real))


def pair_conjugates(
    roots: Sequence[complex], tol: float = CONJUGATE_TOL
) -> tuple[list[float], list[tuple[float, float]]]:
    """Split roots into reals and ``(re, |im|)`` conjugate pairs.

    Raises ConjugacyViolation when a non-real root has no partner within
    ``tol * max(1, |z|)``.
    """
    reals: list[float] = []
    pending: list[complex] = []
    for z in map(complex, roots):
        if z.imag == 0.0:
            reals.append(z.real)
        else:
            pending.append(z)
    pairs: list[tuple[float, float]] = []
    while pending:
        z1 = pending.pop(0)
        best, best_dist = None, math.inf
        for idx, z2 in enumerate(pending):
            d = abs(z1 - z2.conjugate())
            if d < best_dist:
                best, best_dist = idx, d
        if best is not None and best_dist <= tol * max(1.0, abs(z1)):
            z2 = pending.pop(best)
            pairs.append((0.5 * (z1.real + z2.real), 0.5 * (abs(z1.imag) + abs(z2.imag))))
        elif _is_real(z1, tol):
            reals.append(z1.real)
        else:
            raise ConjugacyViolation(f"root {z1} has no conjugate partner")
    return reals, pairs


def from_roots(roots: Sequence[complex], leading: float = 1.0) -> Polynomial:
    """``leading * prod(x - root)`` with real coefficients.

    Conjugate pairs enter as real quadratics ``x^2 - 2 re x + |z|^2`` before
    the linear real factors.
    """
    if leading == 0:
        raise ValueError("leading coefficient must be nonzero")
    reals, pairs = pair_conjugates(roots)
    p = Polynomial([1.0])
    for re, im in pairs:
        p = p * Polynomial([re * re + im * im, -2.0 * re, 1.0])
    for x in reals:
        p = p * Polynomial([-x, 1.0])
    return p * float(leading)


def divide_linear(p: Polynomial, root: float) -> tuple[Polynomial, float]:
    """Synthetic division ``p = (x - root) q + remainder`` from the top coefficient."""
    if p.degree < 1:
        raise DegreeMismatch("cannot deflate a constant polynomial")
    c = p.coefficients
    n = p.degree
    q = [0.0] * n
    q[n - 1] = c[n]
    for j in range(n - 1, 0, -1):
        q[j - 1] = c[j] + root * q[j]
    remainder = c[0] + root * q[0]
    return Polynomial(q), remainder


def _backward_quotient(p: Polynomial, root: float) -> list[float]:
    # same quotient, recurrence run upward from the constant term
    c = p.coefficients
    n = p.degree
    q = [0.0] * n
    q[0] = -c[0] / root
    for j in range(1, n):
        q[j] = (q[j - 1] - c[j]) / root
    return q


def deflate(
    p: Polynomial, root: float, tol: float = DEFLATION_TOL, composite: bool = True
) -> Polynomial:
    """Quotient of ``p`` by ``(x - root)``, remainder discarded.

    Forward division is stable for coefficients above the dominant term of
    ``p(root)`` and backward division below it, so by default the two are
    spliced there. The splice needs ``root`` to be accurate relative to its
    own size; ``composite=False`` gives plain forward division.
    """
    residual = evaluate(p, root)
    # the coefficient norm, weighted by |root|^j once |root| > 1
    scale = p.scale_at(max(1.0, abs(root)))
    if abs(residual) > tol * scale:
        raise NotARoot(f"p({root!r}) = {residual:.3e} exceeds {tol:g} x scale {scale:.3e}")
    forward = divide_linear(p, root)[0]
    if not composite or root == 0.0:
        return forward
    ar = abs(root)
    terms = [abs(cj) * ar**j for j, cj in enumerate(p.coefficients)]
    split = max(range(len(terms)), key=terms.__getitem__)
    if split == 0:
        return forward
    backward = _backward_quotient(p, root)
    q = backward[:split] + list(forward.coefficients[split:])
    return Polynomial(q)


def solve_quadratic(p: Polynomial) -> tuple[complex, complex]:
    """Both roots of a quadratic, cancellation-free.

    Real roots come back descending, complex ones as ``(re + i|im|, re - i|im|)``.
    """
    if p.degree != 2:
        raise DegreeMismatch(f"expected degree 2, got {p.degree}")
    c, b, a = p.coefficients
    disc = b * b - 4.0 * a * c
    if disc >= 0:
        q = -0.5 * (b + math.copysign(math.sqrt(disc), b))
        if q == 0.0:
            return 0j, 0j
        x1, x2 = q / a, c / q
        hi, lo = max(x1, x2), min(x1, x2)
        return complex(hi, 0.0), complex(lo, 0.0)
    re = -b / (2.0 * a)
    im = abs(math.sqrt(-disc) / (2.0 * a))
    return complex(re, im), complex(re, -im)


def bisect_root(
    f: Callable[[float], float],
    bracket: Bracket,
    tol: float = BISECT_TOL,
    max_iter: int = BISECT_MAX_ITER,
) -> float:
    """Midpoint of the final sign-change interval of width <= ``tol``.

    If the interval reaches float resolution before ``tol`` (roots of large
    magnitude), the last representable midpoint is returned.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    lo, hi = bracket.lo, bracket.hi
    f_lo, f_hi = f(lo), f(hi)
    s_lo, s_hi = _sign(f_lo), _sign(f_hi)
    if s_lo == 0 or s_hi == 0 or s_lo == s_hi:
        raise SignAgreement(f"f({lo})={f_lo:.3e}, f({hi})={f_hi:.3e}")
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        if hi - lo <= tol or not lo < mid < hi:
            return mid
        s_mid = _sign(f(mid))
        if s_mid == 0:
            return mid
        if s_mid == s_lo:
            lo = mid
        else:
            hi = mid
    mid = 0.5 * (lo + hi)
    if hi - lo <= tol:
        return mid
    raise MaxIterExceeded(
        f"interval ({lo}, {hi}) still wider than {tol} after {max_iter} halvings"
    )
