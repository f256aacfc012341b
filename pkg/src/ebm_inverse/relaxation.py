"""Relaxation kernels: stretched exponential, Prony series and the EBM.

The extended Burgers model (EBM) carries an unrelaxed modulus ``D`` and
memory kernels ``b_i exp(-r_i t)``. A Prony series ``sum s_i exp(-r_i t)``
maps onto it through ``D = sum s_i`` and ``b_i = s_i r_i``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal, Sequence

import numpy as np

from .errors import DimensionMismatch, ValidationError

Regime = Literal["D>h", "D=h", "D<h"]

REGIME_TOL = 1e-12


def _positive_tuple(name: str, values: Sequence[float]) -> tuple[float, ...]:
    out = tuple(float(v) for v in values)
    if not out:
        raise ValidationError(f"{name} must be non-empty")
    if not all(math.isfinite(v) and v > 0 for v in out):
        raise ValidationError(f"{name} must be finite and positive, got {out}")
    return out


def _check_rates(r: tuple[float, ...]) -> None:
    if any(b <= a for a, b in zip(r, r[1:])):
        raise ValidationError(f"rates must be strictly increasing, got {r}")


@dataclass(frozen=True)
class StretchedExponential:
    tau: float
    beta: float

    def __post_init__(self):
        if not (self.tau > 0 and math.isfinite(self.tau)):
            raise ValidationError(f"tau must be positive, got {self.tau}")
        if not 0 < self.beta < 1:
            raise ValidationError(f"beta must lie in (0, 1), got {self.beta}")


@dataclass(frozen=True)
class PronySeries:
    s: tuple[float, ...]
    r: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "s", _positive_tuple("s", self.s))
        object.__setattr__(self, "r", _positive_tuple("r", self.r))
        if len(self.s) != len(self.r):
            raise DimensionMismatch(f"len(s)={len(self.s)} != len(r)={len(self.r)}")
        _check_rates(self.r)

    @property
    def N(self) -> int:
        return len(self.r)


@dataclass(frozen=True)
class EbmModel:
    D: float
    b: tuple[float, ...]
    r: tuple[float, ...]

    def __post_init__(self):
        if not (math.isfinite(self.D) and self.D > 0):
            raise ValidationError(f"D must be finite and positive, got {self.D}")
        object.__setattr__(self, "D", float(self.D))
        object.__setattr__(self, "b", _positive_tuple("b", self.b))
        object.__setattr__(self, "r", _positive_tuple("r", self.r))
        if len(self.b) != len(self.r):
            raise DimensionMismatch(f"len(b)={len(self.b)} != len(r)={len(self.r)}")
        _check_rates(self.r)

    @property
    def N(self) -> int:
        return len(self.r)

    @property
    def h(self) -> float:
        return math.fsum(bi / ri for bi, ri in zip(self.b, self.r))

    def as_dict(self) -> dict:
        return {"D": self.D, "b": list(self.b), "r": list(self.r)}


def eval_stretched(g: StretchedExponential, t: float) -> float:
    if t < 0:
        raise ValidationError("t must be nonnegative")
    return math.exp(-((t / g.tau) ** g.beta))


def eval_prony(p: PronySeries, t: float) -> float:
    if t < 0:
        raise ValidationError("t must be nonnegative")
    return math.fsum(si * math.exp(-ri * t) for si, ri in zip(p.s, p.r))


def ebm_from_prony(p: PronySeries) -> EbmModel:
    return EbmModel(
        D=math.fsum(p.s),
        b=tuple(si * ri for si, ri in zip(p.s, p.r)),
        r=p.r,
    )


def prony_from_ebm(m: EbmModel) -> tuple[PronySeries, float]:
    """Prony weights ``s_i = b_i / r_i`` plus ``h = sum s_i``.

    ``h`` is the modulus a Prony series implies; it equals ``m.D`` only for
    glassy models.
    """
    s = tuple(bi / ri for bi, ri in zip(m.b, m.r))
    return PronySeries(s=s, r=m.r), math.fsum(s)


def modulus_h(m: EbmModel) -> tuple[float, Regime]:
    h = m.h
    if abs(m.D - h) <= REGIME_TOL * max(m.D, h):
        return h, "D=h"
    return h, ("D>h" if m.D > h else "D<h")


def approximation_error(
    g: StretchedExponential,
    p: PronySeries,
    t_lo: float,
    t_hi: float,
    n_samples: int,
) -> float:
    """Max-norm gap between the two kernels on a uniform grid."""
    if not 0 <= t_lo <= t_hi:
        raise ValidationError("need 0 <= t_lo <= t_hi")
    if n_samples < 2:
        raise ValidationError("n_samples must be >= 2")
    t = np.linspace(t_lo, t_hi, n_samples)
    stretched = np.exp(-((t / g.tau) ** g.beta))
    prony = np.exp(-np.outer(t, p.r)) @ np.asarray(p.s)
    return float(np.max(np.abs(stretched - prony)))


def reference_model(N: int, D: float, normalize_h: bool = False) -> EbmModel:
    """Reference model with ``b_i = 1`` and ``r_i = 5 i``.

    With ``normalize_h`` the weights are rescaled so ``h = sum b_i / r_i = 1``.
    """
    r = tuple(5.0 * i for i in range(1, N + 1))
    b = (1.0,) * N
    if normalize_h:
        h = math.fsum(1.0 / ri for ri in r)
        b = tuple(bi / h for bi in b)
    return EbmModel(D=D, b=b, r=r)
