"""Multiplicative measurement noise on eigenvalue clusters.

Each affected root ``a`` becomes ``(1 + delta (2u - 1)) a`` with ``u`` uniform
on the open interval ``(0, 1)``. Draws come from numpy's PCG64 generator
seeded with ``NoiseSpec.seed`` and are consumed in a fixed order: interlaced
roots (descending), then the extra pair.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Literal

import numpy as np

from .errors import ValidationError
from .inversion import MeasuredCluster
from .spectral import Cluster

NoiseMode = Literal["all_roots", "interlaced_only", "single_draw"]
NOISE_MODES: tuple[str, ...] = ("all_roots", "interlaced_only", "single_draw")


@dataclass(frozen=True)
class NoiseSpec:
    """Relative level ``delta`` in ``[0, 1)``, 64-bit ``seed``, and mode.

    ``all_roots`` draws once per root (a conjugate pair shares one draw so it
    stays conjugate), ``interlaced_only`` leaves the extra pair untouched, and
    ``single_draw`` scales every root of the cluster by one shared factor.
    """

    delta: float
    seed: int = 0
    mode: NoiseMode = "all_roots"

    def __post_init__(self):
        if not 0 <= self.delta < 1:
            raise ValidationError(f"delta must lie in [0, 1), got {self.delta}")
        if not 0 <= int(self.seed) < 2**64:
            raise ValidationError(f"seed must be an unsigned 64-bit integer, got {self.seed}")
        if self.mode not in NOISE_MODES:
            raise ValidationError(f"unknown noise mode {self.mode!r}")


def _open_uniform(rng: np.random.Generator) -> float:
    u = rng.random()
    while u == 0.0:
        u = rng.random()
    return float(u)


def perturb_cluster(c: Cluster, spec: NoiseSpec) -> MeasuredCluster:
    rng = np.random.default_rng(int(spec.seed))

    def factor() -> float:
        return 1.0 + spec.delta * (2.0 * _open_uniform(rng) - 1.0)

    z1, z2 = c.extra_roots
    if spec.mode == "single_draw":
        f = factor()
        real = [f * a for a in c.real_roots]
        extra = [f * z1, f * z2]
    else:
        real = [factor() * a for a in c.real_roots]
        if spec.mode == "interlaced_only":
            extra = [z1, z2]
        elif z1.imag != 0.0:
            f = factor()
            factor()  # the conjugate partner's draw is consumed but unused
            extra = [f * z1, f * z2]
        else:
            extra = [factor() * z1, factor() * z2]

    # a measurer only sees values: re-sort the interlaced roots descending
    real.sort(reverse=True)
    n = len(real)
    return MeasuredCluster(
        k=c.k,
        roots=tuple(complex(a) for a in real) + tuple(extra),
        interlaced=tuple(range(n)),
        extra=(n, n + 1),
    )
