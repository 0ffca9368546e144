"""Seeded Monte Carlo measurement simulation and criterion estimation.

Randomness comes from numpy's Philox counter-based 64-bit generator, so a
given (state, seed, n) always reproduces the same records; sub-seeds for the
bootstrap are derived from the master seed.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass

import numpy as np
from scipy import stats

from .modvar import ModularScale, integer_part, modular_part
from .spectral import solve_c
from .states import (
    GaussianEnvelope,
    MixtureState,
    SincEnvelope,
    TwoParticleState,
    joint_momentum_density,
    joint_position_density,
)

BOOTSTRAP_RESAMPLES = 2000
BOOTSTRAP_BINS = 8192
MIN_BOOTSTRAP_N = 100


@dataclass
class SampleSet:
    records: np.ndarray  # shape (n, 2)
    seed: int
    kind: str  # "position" | "momentum"

    def __post_init__(self):
        self.records = np.asarray(self.records, dtype=float)
        if self.records.ndim != 2 or self.records.shape[1] != 2:
            raise ValueError("records must have shape (n, 2)")
        if self.kind not in ("position", "momentum"):
            raise ValueError(f"kind must be 'position' or 'momentum', got {self.kind!r}")

    @property
    def n(self) -> int:
        return len(self.records)


@dataclass
class EstimateReport:
    var_mod_rel_hat: float
    var_N_tot_hat: float
    lhs_hat: float
    ci_low: float
    ci_high: float
    n: int
    bound: float
    verdict: str  # violated | not_violated | inconclusive
    clamped: bool = False

    @property
    def ci_halfwidth(self) -> float:
        return 0.5 * (self.ci_high - self.ci_low)

    def to_json(self) -> str:
        return json.dumps(
            {
                "var_mod_rel_hat": self.var_mod_rel_hat,
                "var_N_tot_hat": self.var_N_tot_hat,
                "lhs_hat": self.lhs_hat,
                "ci_low": self.ci_low,
                "ci_high": self.ci_high,
                "ci_halfwidth": self.ci_halfwidth,
                "n": self.n,
                "bound": self.bound,
                "verdict": self.verdict,
                "clamped": self.clamped,
            },
            sort_keys=True,
        )


# ---------------------------------------------------------------------------
# exact rejection sampling from the joint density

_CDF_TABLE_POINTS = 1 << 17


def _envelope_cdf_table(env, kind: str):
    """Fine inverse-CDF table for envelopes without an exact sampler."""
    cache = getattr(env, "_cdf_cache", None)
    if cache is None:
        cache = {}
        object.__setattr__(env, "_cdf_cache", cache)
    if kind in cache:
        return cache[kind]
    if kind == "position":
        half = 1000.0 * env.width  # generous range for slowly decaying tails
        xs = np.linspace(-half, half, _CDF_TABLE_POINTS)
        dens = np.abs(env(xs)) ** 2
    else:
        half = 50.0 / env.width
        xs = np.linspace(-half, half, _CDF_TABLE_POINTS)
        dens = np.abs(env.fourier(xs)) ** 2
    cdf = np.concatenate([[0.0], np.cumsum((dens[1:] + dens[:-1]) * np.diff(xs) / 2.0)])
    if not cdf[-1] > 0:
        raise ValueError("envelope density cannot be normalized")
    cache[kind] = (xs, cdf)
    return xs, cdf


def _centered_packet_samples(env, kind: str, rng, n: int) -> np.ndarray:
    """Draws from |envelope|^2 (position) or |fourier|^2 (momentum), centered at 0."""
    if isinstance(env, GaussianEnvelope):
        sd = env.sigma_x if kind == "position" else 0.5 / env.sigma_x
        return rng.normal(0.0, sd, size=n)
    if isinstance(env, SincEnvelope) and kind == "momentum":
        half = math.pi / env.d  # flat band
        return rng.uniform(-half, half, size=n)
    xs, cdf = _envelope_cdf_table(env, kind)
    return np.interp(rng.random(n) * cdf[-1], cdf, xs)


def _packet_samples(wp, kind: str, rng, n: int) -> np.ndarray:
    center = wp.x0 if kind == "position" else wp.p0
    return center + _centered_packet_samples(wp.envelope, kind, rng, n)


def _packet_density(wp, kind: str, v: np.ndarray) -> np.ndarray:
    if kind == "position":
        return np.abs(wp.position_amplitude(v)) ** 2
    return np.abs(wp.momentum_amplitude(v)) ** 2


def _sample_pure(state: TwoParticleState, kind: str, rng, n: int) -> np.ndarray:
    """Rejection sampling with the incoherent product mixture as the proposal.

    With c_k the normalized term amplitudes, Cauchy-Schwarz bounds the joint
    density by K * S * g, where S = sum |c_k|^2, K is the number of terms, and
    g = sum_k (|c_k|^2 / S) |psi_1k|^2 |psi_2k|^2 is the proposal density, so
    accepting with probability rho / (K S g) reproduces rho exactly.
    """
    terms = [(state._scale * a, wp1, wp2) for a, wp1, wp2 in state.terms if a != 0]
    weights = np.array([abs(c) ** 2 for c, _, _ in terms])
    s_tot = float(weights.sum())
    q = weights / s_tot
    bound = len(terms) * s_tot
    dens_fn = joint_position_density if kind == "position" else joint_momentum_density

    out = np.empty((0, 2))
    while len(out) < n:
        batch = max(2 * (n - len(out)), 1024)
        ks = rng.choice(len(terms), size=batch, p=q)
        v1 = np.empty(batch)
        v2 = np.empty(batch)
        for k, (_, wp1, wp2) in enumerate(terms):
            sel = ks == k
            m = int(sel.sum())
            if m:
                v1[sel] = _packet_samples(wp1, kind, rng, m)
                v2[sel] = _packet_samples(wp2, kind, rng, m)
        g = np.zeros(batch)
        for (c, wp1, wp2), qk in zip(terms, q):
            g += qk * _packet_density(wp1, kind, v1) * _packet_density(wp2, kind, v2)
        rho = dens_fn(state, v1, v2)
        keep = rng.random(batch) * bound * g < rho
        out = np.concatenate([out, np.column_stack([v1[keep], v2[keep]])])
    return out[:n]


def sample_measurements(state, kind: str, n: int, seed: int) -> SampleSet:
    """Seeded draws of joint position or momentum measurement pairs."""
    if n < 1:
        raise ValueError("need n >= 1 samples")
    if kind not in ("position", "momentum"):
        raise ValueError(f"kind must be 'position' or 'momentum', got {kind!r}")
    rng = np.random.Generator(np.random.Philox(key=np.uint64(seed)))
    if isinstance(state, TwoParticleState):
        records = _sample_pure(state, kind, rng, n)
    elif isinstance(state, MixtureState):
        counts = rng.multinomial(n, state.weights)
        parts = [
            _sample_pure(st, kind, rng, m)
            for m, (_, st) in zip(counts, state.components)
            if m
        ]
        records = rng.permutation(np.concatenate(parts))
    else:
        raise TypeError(f"cannot sample from {type(state).__name__}")
    return SampleSet(records=records, seed=int(seed), kind=kind)


# ---------------------------------------------------------------------------
# estimation


def _binned_bootstrap_var(values, rng, bins=BOOTSTRAP_BINS, resamples=BOOTSTRAP_RESAMPLES):
    """Bootstrap distribution of the sample variance via binned multinomials."""
    n = len(values)
    lo, hi = float(np.min(values)), float(np.max(values))
    if hi == lo:
        return np.zeros(resamples)
    edges = np.linspace(lo, hi, bins + 1)
    counts, _ = np.histogram(values, bins=edges)
    centers = 0.5 * (edges[:-1] + edges[1:])
    probs = counts / n
    draws = rng.multinomial(n, probs, size=resamples).astype(float)
    w = draws / n
    means = w @ centers
    seconds = w @ centers**2
    return (seconds - means**2) * n / (n - 1)


def _bca_interval(boot: np.ndarray, stat: float, infl: np.ndarray, level: float = 0.95):
    """Bias-corrected and accelerated percentile interval of a bootstrap sample."""
    if np.ptp(boot) == 0:
        return float(boot[0]), float(boot[0])
    b = len(boot)
    prop = np.clip(np.mean(boot < stat), 1.0 / b, 1.0 - 1.0 / b)
    z0 = stats.norm.ppf(prop)
    denom = float(infl @ infl) ** 1.5
    accel = float((infl**3).sum()) / (6.0 * denom) if denom > 0 else 0.0
    alpha = 0.5 * (1.0 - level)
    z = stats.norm.ppf([alpha, 1.0 - alpha])
    adj = stats.norm.cdf(z0 + (z0 + z) / (1.0 - accel * (z0 + z)))
    lo, hi = np.percentile(boot, 100.0 * adj)
    return float(lo), float(hi)


def estimate_criterion(
    position_samples: SampleSet, momentum_samples: SampleSet, scale: ModularScale
) -> EstimateReport:
    """Plug-in variance estimators with a percentile bootstrap CI on the lhs."""
    if position_samples.kind != "position" or momentum_samples.kind != "momentum":
        raise ValueError("need one position-kind and one momentum-kind sample set")
    n = min(position_samples.n, momentum_samples.n)
    if n < MIN_BOOTSTRAP_N:
        raise ValueError(f"need at least {MIN_BOOTSTRAP_N} samples per kind for the bootstrap")

    xm = modular_part(position_samples.records, scale.ell)
    rel = xm[:, 0] - xm[:, 1]
    npart = integer_part(momentum_samples.records, scale.momentum_period)
    tot = npart[:, 0] + npart[:, 1]

    var_rel = float(np.var(rel, ddof=1))
    var_tot = float(np.var(tot, ddof=1))
    clamped = False
    if var_rel < 0 or var_tot < 0:  # cannot happen for ddof=1 with n >= 2, kept as a guard
        var_rel, var_tot, clamped = max(var_rel, 0.0), max(var_tot, 0.0), True

    lhs = var_tot + var_rel / scale.ell**2
    master = np.uint64(position_samples.seed) ^ np.uint64(0x9E3779B97F4A7C15)
    rng = np.random.Generator(np.random.Philox(key=master))
    boot_rel = _binned_bootstrap_var(rel, rng)
    boot_tot = _binned_bootstrap_var(tot, rng)
    boot_lhs = boot_tot + boot_rel / scale.ell**2
    # acceleration from the influence function of the combined statistic
    if_rel = ((rel - rel.mean()) ** 2 - var_rel) / scale.ell**2
    if_tot = (tot - tot.mean()) ** 2 - var_tot
    infl = np.concatenate([if_rel, if_tot])
    ci_low, ci_high = _bca_interval(boot_lhs, lhs, infl)

    bound = 2.0 * solve_c().c
    if ci_high < bound:
        verdict = "violated"
    elif ci_low > bound:
        verdict = "not_violated"
    else:
        verdict = "inconclusive"
    return EstimateReport(
        var_mod_rel_hat=var_rel,
        var_N_tot_hat=var_tot,
        lhs_hat=lhs,
        ci_low=float(ci_low),
        ci_high=float(ci_high),
        n=n,
        bound=bound,
        verdict=verdict,
        clamped=clamped,
    )


# ---------------------------------------------------------------------------
# import/export


def sampleset_to_csv(samples: SampleSet, path, descriptor_hash: str = ""):
    """CSV (index, v1, v2) plus a JSON sidecar with seed/kind metadata."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["index", "v1", "v2"])
        for i, (v1, v2) in enumerate(samples.records):
            w.writerow([i, repr(float(v1)), repr(float(v2))])
    with open(str(path) + ".json", "w") as fh:
        json.dump(
            {"seed": samples.seed, "kind": samples.kind, "state": descriptor_hash},
            fh,
            sort_keys=True,
        )


def sampleset_from_csv(path) -> SampleSet:
    with open(str(path) + ".json") as fh:
        meta = json.load(fh)
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))[1:]
    rec = np.array([[float(r[1]), float(r[2])] for r in rows])
    return SampleSet(records=rec, seed=int(meta["seed"]), kind=meta["kind"])
