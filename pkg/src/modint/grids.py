"""Grid carriers and modular-variable operator machinery.

Single-particle states are complex amplitudes on a uniform periodic grid;
two-particle states are kept as sums of product terms so that variances
reduce to single-particle matrix elements.  Momentum-side observables are
exact lattice functions whenever the box length is an integer multiple of
the modular scale ell.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .modvar import TWO_PI, ModularScale, integer_part, modular_part

DENSE_CAP = 2**11  # per-axis cap when materializing full 2-D arrays

_POSITION_OBS = {"x", "xbar", "N_x"}
_MOMENTUM_OBS = {"p", "pbar", "N_p"}
_TWOPARTICLE_OBS = {"xbar_rel", "pbar_rel", "N_p_tot", "N_x_tot"}


class IncommensurateGridError(ValueError):
    """Box length is not an integer multiple of the modular scale."""


@dataclass(frozen=True)
class GridSpec:
    points: int
    xmin: float
    xmax: float

    def __post_init__(self):
        if self.points < 16 or self.points & (self.points - 1):
            raise ValueError(f"points must be a power of two >= 16, got {self.points}")
        if not self.xmax > self.xmin:
            raise ValueError("xmax must exceed xmin")

    @property
    def length(self) -> float:
        return self.xmax - self.xmin

    @property
    def dx(self) -> float:
        return self.length / self.points

    @property
    def x(self) -> np.ndarray:
        return self.xmin + self.dx * np.arange(self.points)

    @property
    def p(self) -> np.ndarray:
        """Momentum lattice of the periodic box (hbar = 1)."""
        return TWO_PI * np.fft.fftfreq(self.points, d=self.dx)

    def check_commensurate(self, scale: ModularScale) -> int:
        ratio = self.length / scale.ell
        if abs(ratio - round(ratio)) > 1e-9 * max(1.0, ratio):
            raise IncommensurateGridError(
                f"box length {self.length} is not an integer multiple of ell={scale.ell}"
            )
        return int(round(ratio))


def _normalized(psi: np.ndarray, dx: float) -> np.ndarray:
    nrm = math.sqrt(float(np.sum(np.abs(psi) ** 2)) * dx)
    if nrm == 0:
        raise ValueError("cannot normalize a zero state")
    return psi / nrm


@dataclass
class GridState:
    """Normalized single-particle amplitudes on a periodic grid."""

    spec: GridSpec
    psi: np.ndarray

    def __post_init__(self):
        self.psi = np.asarray(self.psi, dtype=complex)
        if self.psi.shape != (self.spec.points,):
            raise ValueError("amplitude array does not match the grid spec")
        self.psi = _normalized(self.psi, self.spec.dx)

    @property
    def norm(self) -> float:
        return float(np.sum(np.abs(self.psi) ** 2)) * self.spec.dx

    def position_density(self) -> np.ndarray:
        return np.abs(self.psi) ** 2

    def momentum_density(self) -> np.ndarray:
        """Density on spec.p, normalized to unit sum times dp."""
        ft = np.fft.fft(self.psi)
        w = np.abs(ft) ** 2
        dp = TWO_PI / self.spec.length
        return w / (np.sum(w) * dp)


@dataclass
class TwoParticleGridState:
    """Sum of product terms c_m * psi1_m(x1) psi2_m(x2), globally normalized."""

    spec1: GridSpec
    spec2: GridSpec
    terms: list = field(default_factory=list)  # [(coef, psi1, psi2), ...]

    def __post_init__(self):
        if not self.terms:
            raise ValueError("two-particle grid state needs at least one term")
        terms = []
        for c, a1, a2 in self.terms:
            a1 = np.asarray(a1, dtype=complex)
            a2 = np.asarray(a2, dtype=complex)
            if a1.shape != (self.spec1.points,) or a2.shape != (self.spec2.points,):
                raise ValueError("term arrays do not match the grid specs")
            terms.append([complex(c), a1, a2])
        self.terms = terms
        nrm = math.sqrt(self.norm)
        for t in self.terms:
            t[0] /= nrm

    @property
    def n_terms(self) -> int:
        return len(self.terms)

    def _gram(self, part: int) -> np.ndarray:
        dx = (self.spec1 if part == 0 else self.spec2).dx
        arrs = [t[1 + part] for t in self.terms]
        n = len(arrs)
        g = np.empty((n, n), dtype=complex)
        for a in range(n):
            for b in range(n):
                g[a, b] = np.vdot(arrs[a], arrs[b]) * dx
        return g

    @property
    def norm(self) -> float:
        c = np.array([t[0] for t in self.terms])
        cc = np.conj(c)[:, None] * c[None, :]
        return float(np.real(np.sum(cc * self._gram(0) * self._gram(1))))

    def dense(self) -> np.ndarray:
        """Materialize the full 2-D amplitude array (capped)."""
        if self.spec1.points > DENSE_CAP or self.spec2.points > DENSE_CAP:
            raise ValueError(
                f"dense export capped at {DENSE_CAP} points per axis; "
                "use the structured term representation instead"
            )
        out = np.zeros((self.spec1.points, self.spec2.points), dtype=complex)
        for c, a1, a2 in self.terms:
            out += c * np.outer(a1, a2)
        return out

    def joint_density(self) -> np.ndarray:
        return np.abs(self.dense()) ** 2

    def marginal_density(self, particle: int) -> np.ndarray:
        """Reduced position density of particle 1 or 2 (partner traced out)."""
        if particle not in (1, 2):
            raise ValueError("particle must be 1 or 2")
        keep, trace = (1, 2) if particle == 1 else (2, 1)
        g = self._gram(0 if trace == 1 else 1)
        c = np.array([t[0] for t in self.terms])
        dens = np.zeros((self.spec1 if keep == 1 else self.spec2).points)
        for a in range(self.n_terms):
            for b in range(self.n_terms):
                w = np.conj(c[a]) * c[b] * g[a, b]
                dens += np.real(w * np.conj(self.terms[a][keep]) * self.terms[b][keep])
        return dens


# ---------------------------------------------------------------------------
# observable machinery


def observable_values(spec: GridSpec, name: str, scale: ModularScale) -> tuple[str, np.ndarray]:
    """Diagonal values of a single-particle observable: (domain, values)."""
    if name == "x":
        return "position", spec.x
    if name == "xbar":
        return "position", modular_part(spec.x, scale.ell)
    if name == "N_x":
        return "position", integer_part(spec.x, scale.ell)
    if name == "p":
        return "momentum", spec.p
    if name == "pbar":
        return "momentum", modular_part(spec.p, scale.momentum_period)
    if name == "N_p":
        return "momentum", integer_part(spec.p, scale.momentum_period)
    raise ValueError(f"unknown single-particle observable {name!r}")


def _require_commensurate(spec: GridSpec, name: str, scale: ModularScale):
    if name in ("p", "pbar", "N_p"):
        spec.check_commensurate(scale)


def apply_modular_operator(state: GridState, name: str, scale: ModularScale) -> GridState:
    """Apply a (position- or momentum-diagonal) observable; result re-normalized."""
    psi = apply_observable_raw(state.spec, state.psi, name, scale)
    return GridState(state.spec, psi)


def apply_observable_raw(
    spec: GridSpec, psi: np.ndarray, name: str, scale: ModularScale
) -> np.ndarray:
    _require_commensurate(spec, name, scale)
    domain, vals = observable_values(spec, name, scale)
    if domain == "position":
        return vals * psi
    return np.fft.ifft(vals * np.fft.fft(psi))


def _matrix_elements(
    spec: GridSpec, arrs: list[np.ndarray], name: str | None, scale: ModularScale, power: int = 1
) -> np.ndarray:
    """Gram-like matrix <a|O^power|b> over a list of single-particle arrays."""
    n = len(arrs)
    if name is None:
        ops = arrs
    else:
        _require_commensurate(spec, name, scale)
        domain, vals = observable_values(spec, name, scale)
        v = vals**power
        if domain == "position":
            ops = [v * a for a in arrs]
        else:
            ops = [np.fft.ifft(v * np.fft.fft(a)) for a in arrs]
    out = np.empty((n, n), dtype=complex)
    for a in range(n):
        for b in range(n):
            out[a, b] = np.vdot(arrs[a], ops[b]) * spec.dx
    return out


def _single_stats(state: GridState, name: str, scale: ModularScale) -> tuple[float, float]:
    _require_commensurate(state.spec, name, scale)
    domain, vals = observable_values(state.spec, name, scale)
    if domain == "position":
        w = np.abs(state.psi) ** 2
    else:
        w = np.abs(np.fft.fft(state.psi)) ** 2
    w = w / np.sum(w)
    mean = float(np.sum(vals * w))
    var = float(np.sum((vals - mean) ** 2 * w))
    return mean, var


_REL_TOT = {
    "xbar_rel": ("xbar", -1.0),
    "pbar_rel": ("pbar", -1.0),
    "N_p_tot": ("N_p", +1.0),
    "N_x_tot": ("N_x", +1.0),
}


def _pair_stats(state: TwoParticleGridState, name: str, scale: ModularScale) -> tuple[float, float]:
    base, sign = _REL_TOT[name]
    c = np.array([t[0] for t in state.terms])
    cc = np.conj(c)[:, None] * c[None, :]
    a1 = [t[1] for t in state.terms]
    a2 = [t[2] for t in state.terms]
    i1 = _matrix_elements(state.spec1, a1, None, scale)
    i2 = _matrix_elements(state.spec2, a2, None, scale)
    o1 = _matrix_elements(state.spec1, a1, base, scale)
    o2 = _matrix_elements(state.spec2, a2, base, scale)
    o1sq = _matrix_elements(state.spec1, a1, base, scale, power=2)
    o2sq = _matrix_elements(state.spec2, a2, base, scale, power=2)

    def ev(e1, e2):
        return float(np.real(np.sum(cc * e1 * e2)))

    mean = ev(o1, i2) + sign * ev(i1, o2)
    second = ev(o1sq, i2) + ev(i1, o2sq) + 2.0 * sign * ev(o1, o2)
    return mean, second - mean**2


def observable_stats(state, name: str, scale: ModularScale) -> tuple[float, float]:
    """(mean, variance) of an observable in a grid state."""
    if isinstance(state, GridState):
        if name not in _POSITION_OBS | _MOMENTUM_OBS:
            raise ValueError(f"observable {name!r} undefined for single-particle states")
        return _single_stats(state, name, scale)
    if isinstance(state, TwoParticleGridState):
        if name not in _TWOPARTICLE_OBS:
            raise ValueError(f"observable {name!r} undefined for two-particle states")
        base, _ = _REL_TOT[name]
        _require_commensurate(state.spec1, base, scale)
        _require_commensurate(state.spec2, base, scale)
        return _pair_stats(state, name, scale)
    raise TypeError(f"unsupported state type {type(state).__name__}")


def observable_variance(state, name: str, scale: ModularScale) -> float:
    return observable_stats(state, name, scale)[1]


def mixture_stats(weights, component_stats) -> tuple[float, float]:
    """Law of total variance: Var = sum w_i Var_i + Var_w(mean_i)."""
    w = np.asarray(weights, dtype=float)
    w = w / w.sum()
    means = np.array([m for m, _ in component_stats])
    variances = np.array([v for _, v in component_stats])
    mean = float(np.sum(w * means))
    var = float(np.sum(w * variances) + np.sum(w * (means - mean) ** 2))
    return mean, var


_COMMUTATOR_PAIRS = {("xbar", "N_p"), ("N_x", "pbar")}


def commutator_expectation(state: GridState, pair: tuple[str, str], scale: ModularScale) -> complex:
    """<[A, B]> evaluated as <AB> - <BA> by applying the grid operators."""
    if tuple(pair) not in _COMMUTATOR_PAIRS:
        raise ValueError(f"unsupported commutator pair {pair!r}")
    a, b = pair
    spec, psi = state.spec, state.psi
    spec.check_commensurate(scale)
    ab = apply_observable_raw(spec, apply_observable_raw(spec, psi, b, scale), a, scale)
    ba = apply_observable_raw(spec, apply_observable_raw(spec, psi, a, scale), b, scale)
    return (np.vdot(psi, ab) - np.vdot(psi, ba)) * spec.dx
