"""Free propagation, far-field momentum mapping, and the staggered-emission
visibility study for dissociation-style pair generation."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .grids import GridSpec, GridState, TwoParticleGridState
from .modvar import TWO_PI, H_PLANCK
from .states import Envelope, GaussianEnvelope
from .modvar import fringe_function


@dataclass(frozen=True)
class PropagationParams:
    mass: float
    time: float
    hbar: float = 1.0

    def __post_init__(self):
        if not self.mass > 0:
            raise ValueError("mass must be positive")
        if self.time < 0:
            raise ValueError("time must be nonnegative")


def _momentum_support(spec: GridSpec, psi: np.ndarray, tail: float = 1e-9) -> float:
    w = np.abs(np.fft.fft(psi)) ** 2
    w /= w.sum()
    order = np.argsort(np.abs(spec.p))
    cum = np.cumsum(w[order])
    idx = np.searchsorted(cum, 1 - tail)
    return float(np.abs(spec.p[order[min(idx, len(order) - 1)]]))


def _position_support(spec: GridSpec, psi: np.ndarray, tail: float = 1e-9) -> tuple[float, float]:
    w = np.abs(psi) ** 2
    w /= w.sum()
    cum = np.cumsum(w)
    lo = spec.x[np.searchsorted(cum, tail / 2)]
    hi = spec.x[min(np.searchsorted(cum, 1 - tail / 2), spec.points - 1)]
    return float(lo), float(hi)


def _propagate_array(spec: GridSpec, psi: np.ndarray, params: PropagationParams) -> np.ndarray:
    pmax = _momentum_support(spec, psi)
    if pmax > 0 and spec.dx >= H_PLANCK / (4 * pmax):
        raise ValueError(
            f"aliasing check failed: grid spacing {spec.dx} does not resolve momenta up to {pmax}"
        )
    lo, hi = _position_support(spec, psi)
    # p is a wavenumber: the fastest packet travels hbar * pmax / m per unit time
    shift = pmax / params.mass * params.time * params.hbar
    if hi + shift > spec.xmax or lo - shift < spec.xmin:
        raise ValueError(
            "aliasing check failed: propagated state would wrap around the periodic box"
        )
    phase = np.exp(-1j * params.hbar * spec.p**2 * params.time / (2 * params.mass))
    return np.fft.ifft(phase * np.fft.fft(psi))


def free_propagate(state, params: PropagationParams):
    """Exact free evolution by the quadratic momentum-space phase."""
    if isinstance(state, GridState):
        return GridState(state.spec, _propagate_array(state.spec, state.psi, params))
    if isinstance(state, TwoParticleGridState):
        terms = [
            (c, _propagate_array(state.spec1, a1, params), _propagate_array(state.spec2, a2, params))
            for c, a1, a2 in state.terms
        ]
        return TwoParticleGridState(state.spec1, state.spec2, terms)
    raise TypeError(f"cannot propagate {type(state).__name__}")


def far_field_map(x, mean_x: float, params: PropagationParams):
    """Identify late-time position with initial momentum: p = m (x - <x>) / t."""
    if params.time <= 0:
        raise ValueError("far-field map requires t > 0")
    return params.mass * (np.asarray(x, dtype=float) - mean_x) / (params.time * params.hbar)


def far_field_momentum_density(state: GridState, params: PropagationParams):
    """Push the position density through the far-field map: (p_values, density)."""
    dens = state.position_density()
    w = dens / (np.sum(dens) * state.spec.dx)
    mean_x = float(np.sum(state.spec.x * w) * state.spec.dx)
    p = far_field_map(state.spec.x, mean_x, params)
    jac = params.time * params.hbar / params.mass
    return p, dens * jac


# ---------------------------------------------------------------------------
# fringe visibility


def fit_fringe_visibility(r, density, N: int, lam: float, phase: float = 0.0) -> float:
    """Visibility from a least-squares fit of a*F_N((r - phase)/lam) + b.

    More robust against envelope curvature than a raw max/min read-off.
    Returns a*N / (a*N + 2*b), the contrast of the fitted pattern, in [0, 1].
    """
    r = np.asarray(r, dtype=float)
    density = np.asarray(density, dtype=float)
    basis = np.column_stack([fringe_function(N, (r - phase) / lam), np.ones_like(r)])
    (a, b), *_ = np.linalg.lstsq(basis, density, rcond=None)
    if a <= 0:
        return 0.0
    b = max(b, 0.0)
    return float(min(1.0, a * N / (a * N + 2 * b)))


# ---------------------------------------------------------------------------
# staggered-emission protocol


@dataclass(frozen=True)
class ProtocolSpec:
    """Pair-emission protocol: component n dissociates at emission_times[n]."""

    N: int
    emission_times: tuple
    lam: float
    envelope: Envelope
    mass: float
    base_integer: int = 1
    hbar: float = 1.0

    def __post_init__(self):
        times = tuple(float(t) for t in self.emission_times)
        object.__setattr__(self, "emission_times", times)
        if len(times) != self.N:
            raise ValueError("emission_times length must equal N")
        if any(t2 < t1 for t1, t2 in zip(times, times[1:])):
            raise ValueError("emission times must be non-decreasing")
        if not self.lam > 0 or not self.mass > 0:
            raise ValueError("lam and mass must be positive")
        if not isinstance(self.envelope, GaussianEnvelope):
            raise TypeError("the dispersion model requires a gaussian envelope")

    def to_json_dict(self) -> dict:
        return {
            "N": self.N,
            "emission_times": list(self.emission_times),
            "lambda": self.lam,
            "envelope": self.envelope.descriptor(),
            "mass": self.mass,
            "base_integer": self.base_integer,
            "hbar": self.hbar,
        }

    @classmethod
    def from_json_dict(cls, d: dict) -> "ProtocolSpec":
        from .states import envelope_from_descriptor

        return cls(
            N=int(d["N"]),
            emission_times=tuple(d["emission_times"]),
            lam=float(d["lambda"]),
            envelope=envelope_from_descriptor(d["envelope"]),
            mass=float(d["mass"]),
            base_integer=int(d.get("base_integer", 1)),
            hbar=float(d.get("hbar", 1.0)),
        )


def _dispersed_gaussian(x, sigma: float, dwell: float, mass: float, hbar: float):
    """Freely evolved unit-norm gaussian envelope (complex width)."""
    tau = hbar * dwell / (2 * mass * sigma**2)
    s = 1.0 + 1j * tau
    return (2 * math.pi * sigma**2) ** -0.25 / np.sqrt(s) * np.exp(-(x**2) / (4 * sigma**2 * s))


def _component_amplitude(x, p0, dwell, sigma, mass, hbar):
    """Packet with momentum p0 centered at x = 0 after dispersing for dwell.

    Phases are referenced to the meeting point: the constant kinetic offsets
    p0^2 dwell / 2m are dropped, so only the dispersion-induced shape mismatch
    (width growth and chirp) distinguishes components with different dwells.
    """
    return np.exp(1j * p0 * x) * _dispersed_gaussian(x, sigma, dwell, mass, hbar)


def protocol_visibility(spec: ProtocolSpec, meeting_time: float) -> float:
    """Relative-coordinate fringe visibility of the assembled pair state.

    Each component n has dispersed for meeting_time - emission_times[n]; all
    components are arranged to meet at the origin on both sides at the meeting
    time, so only their dispersion stages differ.
    """
    if meeting_time <= spec.emission_times[-1]:
        raise ValueError("meeting_time must lie after the last emission")
    sigma = spec.envelope.sigma_x
    per = H_PLANCK / spec.lam
    dwells = [meeting_time - t for t in spec.emission_times]
    momenta = [(spec.base_integer + n) * per for n in range(spec.N)]

    # quadrature grid for the relative-coordinate density
    smax = max(
        sigma * math.sqrt(1 + (spec.hbar * d / (2 * spec.mass * sigma**2)) ** 2) for d in dwells
    )
    x = np.linspace(-8 * smax, 8 * smax, 4096)
    r = np.linspace(-1.5 * spec.lam, 1.5 * spec.lam, 601)

    amps1 = [
        _component_amplitude(x, p, d, sigma, spec.mass, spec.hbar)
        for p, d in zip(momenta, dwells)
    ]
    # particle 2 mirrors particle 1: momentum -p, meeting at the origin; its
    # factor is needed on the shifted grid x - r, which the analytic gaussian
    # form gives exactly (no lattice interpolation across the fringes)
    xs = x[None, :] - r[:, None]
    amps2 = [
        _component_amplitude(xs, -p, d, sigma, spec.mass, spec.hbar)
        for p, d in zip(momenta, dwells)
    ]

    # rho_rel(r) = sum_mn int A_m(x) conj(A_n(x)) B_m(x-r) conj(B_n(x-r)) dx
    dx = x[1] - x[0]
    rho = np.zeros_like(r)
    env = np.zeros_like(r)
    for m in range(spec.N):
        for n in range(spec.N):
            a = amps1[m] * np.conj(amps1[n])
            b = amps2[m] * np.conj(amps2[n])
            term = (b @ a).real * dx
            rho += term
            if m == n:
                env += term
    # divide out the incoherent envelope so identical component shapes yield
    # the ideal fringe profile exactly
    pattern = spec.N * rho / env
    return fit_fringe_visibility(r, pattern, spec.N, spec.lam)
