"""State builders: position combs, momentum combs, entangled pair states.

All amplitudes are renormalized numerically after construction, so the
1/sqrt(N) prefactor of the ideal (orthogonal-component) construction is
corrected for packet overlaps automatically.
"""

from __future__ import annotations

import csv
import json
import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.interpolate import interp1d

from .grids import GridSpec, GridState, TwoParticleGridState
from .modvar import TWO_PI, H_PLANCK, ModularScale, modular_part


# ---------------------------------------------------------------------------
# envelopes


class Envelope:
    """Normalized wave-packet shape: integral of |phi|^2 equals 1."""

    kind = "abstract"

    def __call__(self, x):
        raise NotImplementedError

    def fourier(self, p):
        """Momentum amplitude, convention (1/sqrt(2 pi)) integral phi e^{-ipx} dx."""
        raise NotImplementedError

    @property
    def width(self) -> float:
        """Characteristic position width, used for grid sizing and warnings."""
        raise NotImplementedError

    def descriptor(self) -> dict:
        raise NotImplementedError


@dataclass(frozen=True)
class GaussianEnvelope(Envelope):
    sigma_x: float
    kind = "gaussian"

    def __post_init__(self):
        if not self.sigma_x > 0:
            raise ValueError("sigma_x must be positive")

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        return (2 * math.pi * self.sigma_x**2) ** -0.25 * np.exp(-(x**2) / (4 * self.sigma_x**2))

    def fourier(self, p):
        p = np.asarray(p, dtype=float)
        return (2 * self.sigma_x**2 / math.pi) ** 0.25 * np.exp(-(self.sigma_x**2) * p**2)

    @property
    def width(self):
        return self.sigma_x

    def descriptor(self):
        return {"kind": "gaussian", "sigma_x": self.sigma_x}


@dataclass(frozen=True)
class SincEnvelope(Envelope):
    """phi(x) = sinc(pi x / d) / sqrt(d): a flat momentum slit of width h/d."""

    d: float
    kind = "sinc"

    def __post_init__(self):
        if not self.d > 0:
            raise ValueError("d must be positive")

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        return np.sinc(x / self.d) / math.sqrt(self.d)

    def fourier(self, p):
        p = np.asarray(p, dtype=float)
        return np.where(np.abs(p) <= math.pi / self.d, math.sqrt(self.d / TWO_PI), 0.0)

    @property
    def width(self):
        return self.d

    def descriptor(self):
        return {"kind": "sinc", "d": self.d}


class TabulatedEnvelope(Envelope):
    """Envelope interpolated from samples, renormalized numerically."""

    kind = "tabulated"

    def __init__(self, x, values):
        x = np.asarray(x, dtype=float)
        values = np.asarray(values, dtype=complex)
        if x.ndim != 1 or x.shape != values.shape or x.size < 8:
            raise ValueError("need matching 1-D sample arrays of length >= 8")
        dx = np.diff(x)
        if np.any(dx <= 0):
            raise ValueError("sample abscissae must be strictly increasing")
        nrm = math.sqrt(float(np.trapezoid(np.abs(values) ** 2, x)))
        if nrm == 0:
            raise ValueError("cannot normalize zero samples")
        self._x = x
        self._v = values / nrm
        self._interp_re = interp1d(x, self._v.real, kind="cubic", bounds_error=False, fill_value=0.0)
        self._interp_im = interp1d(x, self._v.imag, kind="cubic", bounds_error=False, fill_value=0.0)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        return self._interp_re(x) + 1j * self._interp_im(x)

    def fourier(self, p):
        p = np.atleast_1d(np.asarray(p, dtype=float))
        # direct quadrature on the tabulated support
        ph = np.exp(-1j * np.outer(p, self._x))
        out = np.trapezoid(ph * self._v[None, :], self._x, axis=1) / math.sqrt(TWO_PI)
        return out if out.size > 1 else out[0]

    @property
    def width(self):
        w = np.abs(self._v) ** 2
        mean = np.trapezoid(self._x * w, self._x)
        var = np.trapezoid((self._x - mean) ** 2 * w, self._x)
        return math.sqrt(max(var, 0.0))

    def descriptor(self):
        return {
            "kind": "tabulated",
            "x": self._x.tolist(),
            "re": self._v.real.tolist(),
            "im": self._v.imag.tolist(),
        }


def envelope_from_descriptor(d: dict) -> Envelope:
    kind = d.get("kind")
    if kind == "gaussian":
        return GaussianEnvelope(sigma_x=float(d["sigma_x"]))
    if kind == "sinc":
        return SincEnvelope(d=float(d["d"]))
    if kind == "tabulated":
        v = np.asarray(d["re"], dtype=float) + 1j * np.asarray(d.get("im", np.zeros(len(d["re"]))))
        return TabulatedEnvelope(d["x"], v)
    raise ValueError(f"unknown envelope kind {kind!r}")


# ---------------------------------------------------------------------------
# packets and superpositions


@dataclass(frozen=True)
class WavePacket:
    """phi(x - x0) * exp(i p0 (x - phase_ref)), hbar = 1."""

    envelope: Envelope
    x0: float = 0.0
    p0: float = 0.0
    phase_ref: float = 0.0

    def position_amplitude(self, x):
        x = np.asarray(x, dtype=float)
        return self.envelope(x - self.x0) * np.exp(1j * self.p0 * (x - self.phase_ref))

    def momentum_amplitude(self, p):
        p = np.asarray(p, dtype=float)
        phase = np.exp(-1j * p * self.x0) * np.exp(1j * self.p0 * (self.x0 - self.phase_ref))
        return self.envelope.fourier(p - self.p0) * phase


def _quadrature_grid(packets, pad: float = 10.0, min_points: int = 4096) -> np.ndarray:
    lo = min(wp.x0 - pad * wp.envelope.width for wp in packets)
    hi = max(wp.x0 + pad * wp.envelope.width for wp in packets)
    pmax = max(abs(wp.p0) for wp in packets) + max(1.0 / wp.envelope.width for wp in packets)
    n = max(min_points, int(8 * pmax * (hi - lo) / TWO_PI))
    n = 1 << (n - 1).bit_length()
    return np.linspace(lo, hi, n, endpoint=False)


def _overlap_matrix(packets) -> np.ndarray:
    x = _quadrature_grid(packets)
    dx = x[1] - x[0]
    amps = [wp.position_amplitude(x) for wp in packets]
    n = len(packets)
    g = np.empty((n, n), dtype=complex)
    for a in range(n):
        for b in range(n):
            g[a, b] = np.vdot(amps[a], amps[b]) * dx
    return g


class SuperposedState:
    """Normalized superposition of single-particle wave packets."""

    def __init__(self, terms, fringe_period: float | None = None):
        if not terms:
            raise ValueError("superposition needs at least one term")
        self.terms = [(complex(a), wp) for a, wp in terms]
        amps = np.array([a for a, _ in self.terms])
        g = _overlap_matrix([wp for _, wp in self.terms])
        nrm2 = float(np.real(np.conj(amps) @ g @ amps))
        if nrm2 <= 0:
            raise ValueError("state has zero norm")
        self._scale = 1.0 / math.sqrt(nrm2)
        self.fringe_period = fringe_period

    @property
    def packets(self):
        return [wp for _, wp in self.terms]

    def position_amplitude(self, x):
        x = np.asarray(x, dtype=float)
        out = np.zeros(x.shape, dtype=complex)
        for a, wp in self.terms:
            out += a * wp.position_amplitude(x)
        return self._scale * out

    def momentum_amplitude(self, p):
        p = np.asarray(p, dtype=float)
        out = np.zeros(p.shape, dtype=complex)
        for a, wp in self.terms:
            out += a * wp.momentum_amplitude(p)
        return self._scale * out


class TwoParticleState:
    """Normalized sum of product packet pairs."""

    def __init__(self, terms, fringe_period: float | None = None):
        if not terms:
            raise ValueError("need at least one product term")
        self.terms = [(complex(a), wp1, wp2) for a, wp1, wp2 in terms]
        amps = np.array([a for a, _, _ in self.terms])
        g1 = _overlap_matrix([wp1 for _, wp1, _ in self.terms])
        g2 = _overlap_matrix([wp2 for _, _, wp2 in self.terms])
        cc = np.conj(amps)[:, None] * amps[None, :]
        nrm2 = float(np.real(np.sum(cc * g1 * g2)))
        if nrm2 <= 0:
            raise ValueError("state has zero norm")
        self._scale = 1.0 / math.sqrt(nrm2)
        self.fringe_period = fringe_period

    def joint_position_amplitude(self, x1, x2):
        x1 = np.asarray(x1, dtype=float)
        x2 = np.asarray(x2, dtype=float)
        out = 0.0j
        for a, wp1, wp2 in self.terms:
            out = out + a * wp1.position_amplitude(x1) * wp2.position_amplitude(x2)
        return self._scale * out

    def joint_momentum_amplitude(self, p1, p2):
        p1 = np.asarray(p1, dtype=float)
        p2 = np.asarray(p2, dtype=float)
        out = 0.0j
        for a, wp1, wp2 in self.terms:
            out = out + a * wp1.momentum_amplitude(p1) * wp2.momentum_amplitude(p2)
        return self._scale * out


class MixtureState:
    """Ensemble of pure two-particle states with normalized weights."""

    def __init__(self, components):
        flat = []
        for w, st in components:
            if isinstance(st, MixtureState):
                flat.extend((float(w) * sw, sub) for sw, sub in st.components)
            else:
                flat.append((float(w), st))
        components = flat
        if not components:
            raise ValueError("mixture needs at least one component")
        if any(w <= 0 for w, _ in components):
            raise ValueError("mixture weights must be positive")
        total = sum(w for w, _ in components)
        self.components = [(w / total, st) for w, st in components]

    @property
    def weights(self):
        return [w for w, _ in self.components]


def mix(components) -> MixtureState:
    """Weighted ensemble of two-particle states; weights renormalized."""
    return MixtureState(components)


# ---------------------------------------------------------------------------
# builders


def build_multislit(N: int, L: float, envelope: Envelope) -> SuperposedState:
    """Rank-N position comb: equal-amplitude packets displaced by L."""
    N = int(N)
    if N < 1:
        raise ValueError("N must be >= 1")
    if not L > 0:
        raise ValueError("slit separation L must be positive")
    if envelope.width / L > 0.2:
        warnings.warn(
            f"envelope width {envelope.width} is not small against L={L}; "
            "components overlap appreciably",
            stacklevel=2,
        )
    amp = 1.0 / math.sqrt(N)
    terms = [(amp, WavePacket(envelope, x0=-n * L)) for n in range(N)]
    return SuperposedState(terms, fringe_period=H_PLANCK / L)


def _momentum_comb_packets(N, x0, N0, lam, envelope, sign=+1.0):
    if int(N) < 1:
        raise ValueError("N must be >= 1")
    if not lam > 0:
        raise ValueError("lambda must be positive")
    if envelope.width / lam < 5:
        warnings.warn(
            f"envelope width {envelope.width} is not large against lambda={lam}; "
            "momentum components overlap appreciably",
            stacklevel=3,
        )
    xref = float(modular_part(x0, lam)) * (1 if sign > 0 else -1)
    per = H_PLANCK / lam
    return [
        WavePacket(envelope, x0=sign * x0, p0=sign * (N0 + n) * per, phase_ref=xref)
        for n in range(int(N))
    ]


def build_smp(N: int, x0: float, N0: int, lam: float, envelope: Envelope) -> SuperposedState:
    """Rank-N momentum comb: position-space fringes of period lambda."""
    packets = _momentum_comb_packets(N, x0, N0, lam, envelope)
    amp = 1.0 / math.sqrt(int(N))
    return SuperposedState([(amp, wp) for wp in packets], fringe_period=lam)


def build_mpe(N: int, x0: float, N0: int, lam: float, envelope: Envelope) -> TwoParticleState:
    """Rank-N entangled pair state: counterpropagating correlated packets."""
    p1 = _momentum_comb_packets(N, x0, N0, lam, envelope, sign=+1.0)
    p2 = _momentum_comb_packets(N, x0, N0, lam, envelope, sign=-1.0)
    amp = 1.0 / math.sqrt(int(N))
    return TwoParticleState(
        [(amp, w1, w2) for w1, w2 in zip(p1, p2)], fringe_period=lam
    )


def build_classical_correlated(
    N: int, x0: float, N0: int, lam: float, envelope: Envelope
) -> MixtureState:
    """Incoherent mixture of the N product components: correlated, fringe-free."""
    p1 = _momentum_comb_packets(N, x0, N0, lam, envelope, sign=+1.0)
    p2 = _momentum_comb_packets(N, x0, N0, lam, envelope, sign=-1.0)
    comps = [
        (1.0 / int(N), TwoParticleState([(1.0, w1, w2)], fringe_period=lam))
        for w1, w2 in zip(p1, p2)
    ]
    return MixtureState(comps)


# ---------------------------------------------------------------------------
# densities


def position_density(state, x):
    if isinstance(state, SuperposedState):
        return np.abs(state.position_amplitude(x)) ** 2
    raise TypeError("position_density expects a single-particle state")


def momentum_density(state, p):
    if isinstance(state, SuperposedState):
        return np.abs(state.momentum_amplitude(p)) ** 2
    raise TypeError("momentum_density expects a single-particle state")


def joint_position_density(state, x1, x2):
    if isinstance(state, TwoParticleState):
        return np.abs(state.joint_position_amplitude(x1, x2)) ** 2
    if isinstance(state, MixtureState):
        out = 0.0
        for w, st in state.components:
            out = out + w * joint_position_density(st, x1, x2)
        return out
    raise TypeError("joint_position_density expects a two-particle state or mixture")


def joint_momentum_density(state, p1, p2):
    if isinstance(state, TwoParticleState):
        return np.abs(state.joint_momentum_amplitude(p1, p2)) ** 2
    if isinstance(state, MixtureState):
        out = 0.0
        for w, st in state.components:
            out = out + w * joint_momentum_density(st, p1, p2)
        return out
    raise TypeError("joint_momentum_density expects a two-particle state or mixture")


# ---------------------------------------------------------------------------
# discretization


def default_grid(state, ell: float, points_per_ell: int = 256, pad: float = 8.0) -> GridSpec:
    """Commensurate power-of-two grid covering the state's packets."""
    if isinstance(state, SuperposedState):
        packets = state.packets
    elif isinstance(state, TwoParticleState):
        packets = [wp for _, wp1, wp2 in state.terms for wp in (wp1, wp2)]
    elif isinstance(state, MixtureState):
        packets = [
            wp for _, st in state.components for _, wp1, wp2 in st.terms for wp in (wp1, wp2)
        ]
    else:
        raise TypeError(f"unsupported state type {type(state).__name__}")
    lo = min(wp.x0 - pad * wp.envelope.width for wp in packets)
    hi = max(wp.x0 + pad * wp.envelope.width for wp in packets)
    periods = max(2, math.ceil((hi - lo) / ell))
    center = 0.5 * (lo + hi)
    n = 1 << (periods * points_per_ell - 1).bit_length()
    half = periods * ell / 2
    return GridSpec(points=n, xmin=center - half, xmax=center + half)


def discretize(state, grid: GridSpec, grid2: GridSpec | None = None, tail_tol: float = 1e-8):
    """Sample a state onto grids; raises if the grid misses mass or is coarse."""
    if state.fringe_period is not None and grid.dx > state.fringe_period / 8:
        raise ValueError(
            f"grid spacing {grid.dx} coarser than fringe period / 8 = {state.fringe_period / 8}"
        )
    if isinstance(state, SuperposedState):
        psi = state.position_amplitude(grid.x)
        contained = float(np.sum(np.abs(psi) ** 2)) * grid.dx
        if contained < 1 - max(tail_tol, 10 * grid.dx**2):
            raise ValueError(
                f"grid too small: only {contained:.10f} of the state's mass is covered"
            )
        return GridState(grid, psi)
    if isinstance(state, TwoParticleState):
        grid2 = grid2 or grid
        terms = [
            (a * state._scale, wp1.position_amplitude(grid.x), wp2.position_amplitude(grid2.x))
            for a, wp1, wp2 in state.terms
        ]
        # contained mass of the analytically normalized state, before renormalization
        c = np.array([t[0] for t in terms])
        cc = np.conj(c)[:, None] * c[None, :]
        g1 = np.array([[np.vdot(a1, b1) * grid.dx for _, b1, _ in terms] for _, a1, _ in terms])
        g2 = np.array([[np.vdot(a2, b2) * grid2.dx for _, _, b2 in terms] for _, _, a2 in terms])
        contained = float(np.real(np.sum(cc * g1 * g2)))
        if contained < 1 - max(tail_tol, 10 * grid.dx**2):
            raise ValueError(
                f"grid too small: only {contained:.10f} of the state's mass is covered"
            )
        return TwoParticleGridState(grid, grid2, terms)
    raise TypeError(f"cannot discretize {type(state).__name__}")


# ---------------------------------------------------------------------------
# import/export


def gridstate_to_csv(state, path):
    """CSV export: columns x, re, im (single particle) or x1, x2, re, im."""
    if isinstance(state, GridState):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["x", "re", "im"])
            for xv, a in zip(state.spec.x, state.psi):
                w.writerow([repr(float(xv)), repr(float(a.real)), repr(float(a.imag))])
        return
    if isinstance(state, TwoParticleGridState):
        dense = state.dense()
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["x1", "x2", "re", "im"])
            for i, x1 in enumerate(state.spec1.x):
                for j, x2 in enumerate(state.spec2.x):
                    w.writerow([repr(float(x1)), repr(float(x2)),
                                repr(float(dense[i, j].real)), repr(float(dense[i, j].imag))])
        return
    raise TypeError("expected a grid state")


def gridstate_from_csv(path) -> GridState:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    header, rows = rows[0], rows[1:]
    if header[:3] != ["x", "re", "im"]:
        raise ValueError("unsupported CSV layout; expected columns x, re, im")
    x = np.array([float(r[0]) for r in rows])
    psi = np.array([float(r[1]) + 1j * float(r[2]) for r in rows])
    dx = x[1] - x[0]
    spec = GridSpec(points=len(x), xmin=float(x[0]), xmax=float(x[0]) + dx * len(x))
    return GridState(spec, psi)


def state_from_descriptor(d: dict):
    """Build a state from the JSON descriptor used by the CLI."""
    kind = d.get("kind")
    env = envelope_from_descriptor(d.get("envelope", {"kind": "gaussian", "sigma_x": 3.0}))
    known = {"kind", "N", "L", "x0", "N0", "lambda", "envelope", "epsilon"}
    extra = set(d) - known
    if extra:
        raise ValueError(f"unknown descriptor keys: {sorted(extra)}")
    N = int(d.get("N", 2))
    if kind == "multislit":
        return build_multislit(N, float(d["L"]), env)
    x0 = float(d.get("x0", 0.0))
    N0 = int(d.get("N0", 1))
    lam = float(d.get("lambda", 1.0))
    if kind == "smp":
        return build_smp(N, x0, N0, lam, env)
    if kind == "mpe":
        return build_mpe(N, x0, N0, lam, env)
    if kind == "classical":
        return build_classical_correlated(N, x0, N0, lam, env)
    if kind == "admixture":
        eps = float(d.get("epsilon", 0.0))
        pure = build_mpe(N, x0, N0, lam, env)
        if eps <= 0:
            return pure
        classical = build_classical_correlated(N, x0, N0, lam, env)
        comps = [(1.0 - eps, pure)] if eps < 1 else []
        comps += [(eps * w, st) for w, st in classical.components]
        return MixtureState(comps)
    raise ValueError(f"unknown state kind {kind!r}")


def state_descriptor_json(d: dict) -> str:
    return json.dumps(d, sort_keys=True)
