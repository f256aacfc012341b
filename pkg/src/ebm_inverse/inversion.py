"""Reconstruct ``(D, b, r)`` from two measured eigenvalue clusters.

Knowing all roots of the characteristic polynomial at two frequencies
``k1 < k2`` determines both polynomials (their leading coefficients are
``1/(2k-1)^2``). Their scaled difference, divided by ``lam^2``, is the rate
polynomial ``Q(lam) = prod_j (lam + r_j)``:

* the rates ``-r_1 .. -r_{N-1}`` are bisected between consecutive interlaced
  roots of one cluster, and ``-r_N`` is read off the expanded ``Q`` after
  deflating the others;
* ``P(-r_i) = -b_i prod_{j!=i}(r_j - r_i)`` gives the weights;
* ``P(0) = D prod r_j - sum_i b_i prod_{j!=i} r_j`` gives the modulus.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Literal, Sequence

from . import polyutil
from .errors import (
    BracketFailure,
    DegenerateRates,
    DimensionMismatch,
    EbmError,
    FrequencyOrder,
    LabelingAmbiguous,
    NearZeroLambda,
    NonPositiveRate,
    SignAgreement,
    ValidationError,
)
from .polyutil import Bracket, Polynomial
from .spectral import Cluster, check_k

GUARD_FACTOR = 1e-8
SHRINK_FRACTION = 0.005
SHRINK_ATTEMPTS = 10
DEGENERATE_TOL = 1e-12
EQUAL_ROOT_TOL = 1e-9

BracketSource = Literal["k1", "k2"]


@dataclass(frozen=True)
class MeasuredCluster:
    """``N + 2`` measured eigenvalues at frequency ``k`` with their labels.

    ``interlaced`` indexes the ``N`` real roots in descending order of value,
    ``extra`` the remaining pair.
    """

    k: int
    roots: tuple[complex, ...]
    interlaced: tuple[int, ...]
    extra: tuple[int, int]

    def __post_init__(self):
        object.__setattr__(self, "k", check_k(self.k))
        object.__setattr__(self, "roots", tuple(complex(z) for z in self.roots))
        object.__setattr__(self, "interlaced", tuple(int(i) for i in self.interlaced))
        object.__setattr__(self, "extra", tuple(int(i) for i in self.extra))
        n = len(self.roots)
        if n < 3:
            raise ValidationError(f"a cluster needs at least 3 roots, got {n}")
        if not all(math.isfinite(z.real) and math.isfinite(z.imag) for z in self.roots):
            raise ValidationError("cluster roots must be finite")
        if len(self.extra) != 2 or sorted(self.interlaced + self.extra) != list(range(n)):
            raise ValidationError("labels must partition the roots into N interlaced + 2 extra")
        values = [self.roots[i] for i in self.interlaced]
        if any(z.imag != 0.0 for z in values):
            raise ValidationError("interlaced roots must be real")
        if any(b.real >= a.real for a, b in zip(values, values[1:])):
            raise ValidationError("interlaced roots must be strictly descending")
        polyutil.pair_conjugates(self.roots)

    @property
    def N(self) -> int:
        return len(self.roots) - 2

    @property
    def K(self) -> float:
        return float((2 * self.k - 1) ** 2)

    @property
    def interlaced_roots(self) -> tuple[float, ...]:
        return tuple(self.roots[i].real for i in self.interlaced)

    @property
    def extra_roots(self) -> tuple[complex, complex]:
        return self.roots[self.extra[0]], self.roots[self.extra[1]]

    @classmethod
    def from_cluster(cls, c: Cluster) -> "MeasuredCluster":
        n = c.N
        return cls(k=c.k, roots=c.roots, interlaced=tuple(range(n)), extra=(n, n + 1))

    @classmethod
    def from_roots(cls, k: int, roots: Sequence[complex]) -> "MeasuredCluster":
        """Build a cluster from unlabeled roots (see ``label_roots``)."""
        roots = tuple(complex(z) for z in roots)
        interlaced, extra = label_roots(roots)
        return cls(k=k, roots=roots, interlaced=interlaced, extra=extra)


def label_roots(roots: Sequence[complex]) -> tuple[tuple[int, ...], tuple[int, int]]:
    """Split unlabeled roots into interlaced and extra indices.

    Two non-real roots are the extra pair. With all roots real, the largest
    is ``a_1`` and the extra pair is accepted only when it is identifiable as
    the single pair of coincident values among the rest; anything else is
    ambiguous without knowing the rates.
    """
    roots = [complex(z) for z in roots]
    nonreal = [i for i, z in enumerate(roots) if z.imag != 0.0]
    if len(nonreal) == 2:
        extra = (nonreal[0], nonreal[1])
    elif not nonreal:
        top = max(range(len(roots)), key=lambda i: roots[i].real)
        rest = [i for i in range(len(roots)) if i != top]
        coincident = [
            (i, j)
            for a, i in enumerate(rest)
            for j in rest[a + 1:]
            if abs(roots[i].real - roots[j].real)
            <= EQUAL_ROOT_TOL * max(1.0, abs(roots[i].real))
        ]
        if len(coincident) != 1:
            raise LabelingAmbiguous(
                "all roots are real and the extra pair cannot be identified; "
                "supply explicit labels"
            )
        extra = coincident[0]
    else:
        raise LabelingAmbiguous(f"expected 0 or 2 non-real roots, found {len(nonreal)}")
    interlaced = sorted(
        (i for i in range(len(roots)) if i not in extra), key=lambda i: -roots[i].real
    )
    return tuple(interlaced), extra


def eval_measured_charpoly(c: MeasuredCluster, lam: float) -> float:
    """``(1/(2k-1)^2) prod_j (lam - a_j)`` in product form (exactly real)."""
    acc = 1.0 / c.K
    for a in c.interlaced_roots:
        acc *= lam - a
    z1, z2 = c.extra_roots
    if z1.imag == 0.0 and z2.imag == 0.0:
        acc *= (lam - z1.real) * (lam - z2.real)
    else:
        re = 0.5 * (z1.real + z2.real)
        im = 0.5 * (abs(z1.imag) + abs(z2.imag))
        acc *= (lam - re) ** 2 + im * im
    return acc


def _check_pair(c1: MeasuredCluster, c2: MeasuredCluster) -> None:
    if c1.N != c2.N:
        raise DimensionMismatch(f"cluster sizes differ: N={c1.N} vs N={c2.N}")
    if c1.k >= c2.k:
        raise FrequencyOrder(f"need k1 < k2, got k1={c1.k}, k2={c2.k}")


def lambda_guard(c1: MeasuredCluster, c2: MeasuredCluster) -> float:
    """Smallest ``|lam|`` at which Q is evaluated, ``1e-8`` on the scale of ``r_1``.

    ``r_1`` is unknown, but ``-r_1`` lies in ``(a_2, a_1)`` so ``|a_2|`` is a
    proxy. With ``N = 1`` the largest real part in the cluster stands in.
    """
    if c2.N >= 2:
        scale = abs(c2.interlaced_roots[1])
    else:
        scale = max(abs(z.real) for z in c2.roots)
    return GUARD_FACTOR * scale if scale > 0 else GUARD_FACTOR


def _q_scale(c1: MeasuredCluster, c2: MeasuredCluster) -> float:
    return 1.0 / (1.0 / c1.K - 1.0 / c2.K)


def eval_Q(
    c1: MeasuredCluster, c2: MeasuredCluster, lam: float, guard: float | None = None
) -> float:
    _check_pair(c1, c2)
    if guard is None:
        guard = lambda_guard(c1, c2)
    if abs(lam) < guard:
        raise NearZeroLambda(f"|lambda|={abs(lam):.3e} below guard {guard:.3e}")
    diff = eval_measured_charpoly(c1, lam) - eval_measured_charpoly(c2, lam)
    return _q_scale(c1, c2) * diff / (lam * lam)


def q_polynomial(c1: MeasuredCluster, c2: MeasuredCluster) -> tuple[Polynomial, tuple[float, float]]:
    """Expanded ``Q`` with its two dropped low-order coefficients.

    The dropped pair vanishes identically for exact data.
    """
    _check_pair(c1, c2)
    p1 = polyutil.from_roots(c1.roots, 1.0 / c1.K)
    p2 = polyutil.from_roots(c2.roots, 1.0 / c2.K)
    diff = (p1 - p2) * _q_scale(c1, c2)
    coeffs = list(diff.coefficients) + [0.0] * (c1.N + 3 - len(diff.coefficients))
    return Polynomial(coeffs[2:]), (coeffs[0], coeffs[1])


def _sign_change_bracket(f, lo: float, hi: float, j: int) -> Bracket:
    width = hi - lo
    for _ in range(SHRINK_ATTEMPTS + 1):
        try:
            return Bracket.of(f, lo, hi)
        except SignAgreement:
            lo += SHRINK_FRACTION * width
            hi -= SHRINK_FRACTION * width
    raise BracketFailure(
        f"Q shows no sign change for -r_{j - 1} after {SHRINK_ATTEMPTS} inward shrinks"
    )


@dataclass
class _RateRecovery:
    rates: tuple[float, ...]
    brackets: list[tuple[float, float]] = field(default_factory=list)
    dropped: tuple[float, float] = (0.0, 0.0)
    q_norm: float = 0.0
    r_N_vieta: float = math.nan
    deflation_residuals: list[float] = field(default_factory=list)


def _recover_rates(
    c1: MeasuredCluster,
    c2: MeasuredCluster,
    tol: float,
    brackets_from: BracketSource,
) -> _RateRecovery:
    _check_pair(c1, c2)
    guard = lambda_guard(c1, c2)
    a = (c2 if brackets_from == "k2" else c1).interlaced_roots
    N = c1.N

    def q(lam: float) -> float:
        return eval_Q(c1, c2, lam, guard)

    neg_rates: list[float] = []
    brackets: list[tuple[float, float]] = []
    for j in range(2, N + 1):
        lo, hi = a[j - 1], a[j - 2]
        if j == 2:
            hi = min(hi, -guard)
        if not lo < hi:
            raise BracketFailure(f"empty bracket for -r_{j - 1}: ({lo}, {hi})")
        bracket = _sign_change_bracket(q, lo, hi, j)
        brackets.append((bracket.lo, bracket.hi))
        neg_rates.append(polyutil.bisect_root(q, bracket, tol=tol))

    qpoly, dropped = q_polynomial(c1, c2)
    rest = qpoly
    deflation_residuals = []
    for x in sorted(neg_rates, key=abs):
        # Noisy roots of Q are not roots of the truncated expansion, so the
        # deflation precondition cannot hold; the miss is reported instead.
        # Forward division keeps the top coefficients, the ones r_N depends on.
        deflation_residuals.append(abs(rest(x)) / rest.scale_at(x))
        rest = polyutil.divide_linear(rest, x)[0]
    if rest.degree != 1:
        raise NonPositiveRate(f"expanded Q did not reduce to a linear factor: {rest}")
    c0, c1_ = rest.coefficients
    r_last = c0 / c1_
    rates = tuple(-x for x in neg_rates) + (r_last,)
    if r_last <= 0 or (N >= 2 and r_last <= rates[-2]):
        prev = rates[-2] if N >= 2 else 0.0
        raise NonPositiveRate(f"recovered r_N={r_last:.6g} not above r_(N-1)={prev:.6g}")
    lead = qpoly.coefficients
    vieta = lead[N - 1] / lead[N] - math.fsum(rates[:-1]) if qpoly.degree == N else math.nan
    return _RateRecovery(rates, brackets, dropped, qpoly.norm1(), vieta, deflation_residuals)


def recover_rates(
    c1: MeasuredCluster,
    c2: MeasuredCluster,
    tol: float = polyutil.BISECT_TOL,
    brackets_from: BracketSource = "k2",
) -> tuple[float, ...]:
    """Rates ``r_1 < ... < r_N`` from the two clusters.

    ``brackets_from`` picks which cluster's interlaced roots bracket the
    bisection; either is valid.
    """
    return _recover_rates(c1, c2, tol, brackets_from).rates


def _validate_rates(r: Sequence[float]) -> tuple[float, ...]:
    r = tuple(float(x) for x in r)
    if not r or any(x <= 0 for x in r) or any(b <= a for a, b in zip(r, r[1:])):
        raise ValidationError(f"rates must be positive and strictly increasing, got {r}")
    return r


def recover_weights(c2: MeasuredCluster, r: Sequence[float]) -> tuple[float, ...]:
    r = _validate_rates(r)
    if len(r) != c2.N:
        raise DimensionMismatch(f"{len(r)} rates for a cluster with N={c2.N}")
    b = []
    for i, ri in enumerate(r):
        denom = 1.0
        for j, rj in enumerate(r):
            if j == i:
                continue
            if abs(rj - ri) <= DEGENERATE_TOL * r[-1]:
                raise DegenerateRates(f"r_{i + 1} and r_{j + 1} coincide ({ri})")
            denom *= rj - ri
        b.append(-eval_measured_charpoly(c2, -ri) / denom)
    return tuple(b)


def recover_D(c2: MeasuredCluster, r: Sequence[float], b: Sequence[float]) -> float:
    """Solve the characteristic equation at ``lam = 0`` for ``D``."""
    r = _validate_rates(r)
    total = math.prod(r)
    memory = math.fsum(
        bi * math.prod(rj for j, rj in enumerate(r) if j != i) for i, bi in enumerate(b)
    )
    return (eval_measured_charpoly(c2, 0.0) + memory) / total


def recover_D_glassy(r: Sequence[float], b: Sequence[float]) -> float:
    """``sum b_i / r_i``: equals ``D`` only for glassy models."""
    return math.fsum(bi / ri for bi, ri in zip(b, r))


@dataclass(frozen=True)
class ReconstructionResult:
    r_inv: tuple[float, ...]
    b_inv: tuple[float, ...]
    D_inv: float
    D_inv_glassy: float
    diagnostics: dict

    def as_dict(self) -> dict:
        return asdict(self)


def _charpoly_residual(c2: MeasuredCluster, D: float, b, r) -> float:
    # relative residual of the recovered characteristic equation at c2's roots
    worst = 0.0
    for z in c2.roots:
        shifted = [z + ri for ri in r]
        lead = (D + z * z / c2.K) * math.prod(shifted)
        mem = [bi * math.prod(s for j, s in enumerate(shifted) if j != i) for i, bi in enumerate(b)]
        scale = abs(lead) + sum(abs(t) for t in mem)
        if scale > 0:
            worst = max(worst, abs(lead - sum(mem)) / scale)
    return worst


def invert(
    c1: MeasuredCluster,
    c2: MeasuredCluster,
    tol: float = polyutil.BISECT_TOL,
    brackets_from: BracketSource = "k2",
) -> ReconstructionResult:
    """Full pipeline: rates, then weights, then ``D``.

    Failures propagate with ``exc.stage`` set to ``"rates"``, ``"weights"``
    or ``"D"``.
    """
    _check_pair(c1, c2)
    stage = "rates"
    try:
        rec = _recover_rates(c1, c2, tol, brackets_from)
        r = rec.rates
        stage = "weights"
        b = recover_weights(c2, r)
        stage = "D"
        D = recover_D(c2, r, b)
    except EbmError as exc:
        exc.stage = stage
        raise

    guard = lambda_guard(c1, c2)
    diagnostics = {
        "brackets": [list(br) for br in rec.brackets],
        "q_residuals": [eval_Q(c1, c2, -ri, guard) for ri in r],
        "q_dropped_coefficients": list(rec.dropped),
        "q_norm": rec.q_norm,
        "r_N_vieta": rec.r_N_vieta,
        "q_deflation_residuals": rec.deflation_residuals,
        "charpoly_residual": _charpoly_residual(c2, D, b, r),
        "brackets_from": brackets_from,
    }
    return ReconstructionResult(
        r_inv=r,
        b_inv=b,
        D_inv=D,
        D_inv_glassy=recover_D_glassy(r, b),
        diagnostics=diagnostics,
    )
