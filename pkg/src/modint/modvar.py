"""Closed-form modular-variable mathematics.

Conventions: hbar = 1, so the Planck constant is h = 2*pi. Splitting a
position at scale ell gives x = N_x * ell + xbar with xbar in the half-open
interval [-ell/2, ell/2); momenta split with period h/ell = 2*pi/ell.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

TWO_PI = 2.0 * math.pi
H_PLANCK = TWO_PI  # hbar = 1


@dataclass(frozen=True)
class ModularScale:
    """Partition length ell; the momentum partition period is h/ell."""

    ell: float

    def __post_init__(self):
        if not (math.isfinite(self.ell) and self.ell > 0):
            raise ValueError(f"ell must be positive and finite, got {self.ell}")

    @property
    def momentum_period(self) -> float:
        return H_PLANCK / self.ell

    def period(self, axis: str) -> float:
        if axis == "position":
            return self.ell
        if axis == "momentum":
            return self.momentum_period
        raise ValueError(f"axis must be 'position' or 'momentum', got {axis!r}")


@dataclass(frozen=True)
class ModularValue:
    integer_part: int
    modular_part: float

    def reconstruct(self, period: float) -> float:
        return self.integer_part * period + self.modular_part


def modular_part(values, period):
    """Symmetric remainder in [-period/2, period/2). Works on arrays."""
    return (np.asarray(values) + period / 2) % period - period / 2


def integer_part(values, period):
    """Integer quotient of the symmetric split. Works on arrays."""
    values = np.asarray(values)
    return np.round((values - modular_part(values, period)) / period)


def modular_decompose(value: float, scale: ModularScale, axis: str = "position") -> ModularValue:
    """Split value into integer and modular parts at the scale's period."""
    if not math.isfinite(value):
        raise ValueError(f"value must be finite, got {value}")
    period = scale.period(axis)
    frac = float(modular_part(value, period))
    n = int(round((value - frac) / period))
    return ModularValue(integer_part=n, modular_part=frac)


def _check_rank(N: int) -> int:
    if N != int(N):
        raise ValueError(f"superposition rank N must be an integer, got {N}")
    N = int(N)
    if N < 1:
        raise ValueError(f"superposition rank N must be >= 1, got {N}")
    return N


def fringe_function(N: int, x) -> np.ndarray | float:
    """N-slit fringe intensity: period 1, mean 1, peak value N.

    F_N(x) = 1 + (2/N) * sum_{j=1}^{N-1} (N-j) cos(2 pi j x)
    """
    N = _check_rank(N)
    x = np.asarray(x, dtype=float)
    out = np.ones_like(x)
    for j in range(N - 1, 0, -1):
        out += (2.0 * (N - j) / N) * np.cos(TWO_PI * j * x)
    return out if out.ndim else float(out)


def squeezing_s1(N: int) -> float:
    """Single-particle modular-position squeezing function, in [0, 1)."""
    N = _check_rank(N)
    s = 0.0
    for j in range(N - 1, 0, -1):  # ascending magnitude: bounds round-off
        s += (-1) ** j * (N - j) / (N * j * j)
    return -(12.0 / math.pi**2) * s + 0.0  # + 0.0 avoids returning -0.0 at N = 1


def squeezing_s2(N: int) -> float:
    """Two-particle modular relative-position squeezing function, in [0, 1)."""
    N = _check_rank(N)
    s = 0.0
    for j in range(N - 1, 0, -1):
        s += (N - j) / (N * j * j)
    return (6.0 / math.pi**2) * s


def smp_modular_position_variance(N: int, scale: ModularScale) -> float:
    """Variance of xbar in the rank-N momentum-comb state: ell^2/12 (1 - S1)."""
    return scale.ell**2 / 12.0 * (1.0 - squeezing_s1(N))


def mpe_modular_relative_variance(N: int, scale: ModularScale) -> float:
    """Variance of xbar_1 - xbar_2 in the rank-N entangled state: ell^2/6 (1 - S2)."""
    return scale.ell**2 / 6.0 * (1.0 - squeezing_s2(N))


def smp_integer_momentum_variance(N: int) -> float:
    """Variance of the integer momentum in the rank-N momentum comb: (N^2-1)/12."""
    N = _check_rank(N)
    return (N * N - 1) / 12.0


def smp_commutator_expectation(N: int, scale: ModularScale) -> float:
    """|<[xbar, N_p]>| in the rank-N momentum comb (fringe phase zero).

    (ell/2pi) [1 - (1 + (-1)^(N+1)) / (2N)]; zero at N = 1, ell/2pi as N -> inf.
    """
    N = _check_rank(N)
    return scale.ell / TWO_PI * (1.0 - (1.0 + (-1.0) ** (N + 1)) / (2.0 * N))
