"""Separability criterion: variance sum vs the additive uncertainty bound 2c."""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .dynamics import fit_fringe_visibility
from .grids import mixture_stats, observable_stats
from .modvar import ModularScale, squeezing_s2
from .spectral import solve_c
from .states import (
    GaussianEnvelope,
    MixtureState,
    TwoParticleState,
    build_classical_correlated,
    build_mpe,
    default_grid,
    discretize,
    joint_position_density,
)

VERDICT_SLACK = 1e-9  # grid noise must not flip borderline verdicts
MARGINAL_BAND = 1e-6

_AXES = {
    "momentum": ("N_p_tot", "xbar_rel"),
    "position": ("N_x_tot", "pbar_rel"),
}


@dataclass
class CriterionReport:
    var_N_tot: float
    var_mod_rel: float
    lhs: float
    bound: float
    violated: bool
    marginal: bool
    axis: str
    c_value: float
    c_method: str

    def to_json(self) -> str:
        return json.dumps(
            {
                "var_N_tot": self.var_N_tot,
                "var_mod_rel": self.var_mod_rel,
                "lhs": self.lhs,
                "bound": self.bound,
                "violated": self.violated,
                "marginal": self.marginal,
                "axis": self.axis,
                "c": {"value": self.c_value, "method": self.c_method},
            },
            sort_keys=True,
        )


def criterion_bound() -> float:
    """The separable floor 2c with the high-precision shooting value of c."""
    return 2.0 * solve_c().c


def _normalizer(scale: ModularScale, axis: str) -> float:
    # divides the modular variance so the criterion is dimensionless
    return scale.ell**2 if axis == "momentum" else scale.momentum_period**2


def _component_stats(
    state: TwoParticleState, scale: ModularScale, axis: str, points_per_ell: int
):
    n_obs, rel_obs = _AXES[axis]
    grid = default_grid(state, scale.ell, points_per_ell=points_per_ell)
    gs = discretize(state, grid)
    return observable_stats(gs, n_obs, scale), observable_stats(gs, rel_obs, scale)


def criterion_stats(state, scale: ModularScale, axis: str, points_per_ell: int = 256):
    """(var_N_tot, var_mod_rel) for a pure state or a mixture (total-variance law)."""
    if axis not in _AXES:
        raise ValueError(f"axis must be one of {sorted(_AXES)}, got {axis!r}")
    if isinstance(state, TwoParticleState):
        (_, vn), (_, vr) = _component_stats(state, scale, axis, points_per_ell)
        return vn, vr
    if isinstance(state, MixtureState):
        per_comp = [
            _component_stats(st, scale, axis, points_per_ell) for _, st in state.components
        ]
        _, var_n = mixture_stats(state.weights, [s[0] for s in per_comp])
        _, var_r = mixture_stats(state.weights, [s[1] for s in per_comp])
        return var_n, var_r
    raise TypeError(f"cannot evaluate the criterion on {type(state).__name__}")


def evaluate_criterion(
    state, scale: ModularScale, axis: str = "momentum", points_per_ell: int = 256
) -> CriterionReport:
    """Variance-sum test: separable states satisfy lhs >= 2c."""
    var_n, var_r = criterion_stats(state, scale, axis, points_per_ell)
    lhs = var_n + var_r / _normalizer(scale, axis)
    report = solve_c()
    bound = 2.0 * report.c
    return CriterionReport(
        var_N_tot=var_n,
        var_mod_rel=var_r,
        lhs=lhs,
        bound=bound,
        violated=lhs < bound - VERDICT_SLACK,
        marginal=abs(lhs - bound) < MARGINAL_BAND,
        axis=axis,
        c_value=report.c,
        c_method=report.method,
    )


# ---------------------------------------------------------------------------
# robustness against classically correlated admixtures


def admixture_state(
    epsilon: float,
    N: int,
    lam: float = 1.0,
    envelope=None,
    x0: float = 0.0,
    N0: int = 1,
):
    """(1 - eps) * MPE + eps * classically correlated, as a pure-state ensemble."""
    if not 0 <= epsilon <= 1:
        raise ValueError("epsilon must lie in [0, 1]")
    envelope = envelope or GaussianEnvelope(sigma_x=6.0 * lam)
    pure = build_mpe(N, x0, N0, lam, envelope)
    if epsilon == 0:
        return pure
    classical = build_classical_correlated(N, x0, N0, lam, envelope)
    comps = [] if epsilon == 1 else [(1.0 - epsilon, pure)]
    comps += [(epsilon * w, st) for w, st in classical.components]
    return MixtureState(comps)


def robustness_threshold(
    N: int,
    method: str = "closed_form",
    lam: float = 1.0,
    envelope=None,
    points_per_ell: int = 128,
    tol: float = 1e-6,
) -> float:
    """Largest classical admixture fraction that still violates the criterion.

    Closed form (ideal envelopes): eps* = (12 c - 1 + S2(N)) / S2(N).
    The bisection route evaluates the exact mixture on grids instead.
    """
    N = int(N)
    if N < 2:
        raise ValueError("robustness threshold requires N >= 2 (no violation to protect)")
    if method == "closed_form":
        c = solve_c().c
        s2 = squeezing_s2(N)
        eps = (12.0 * c - 1.0 + s2) / s2
        return float(min(max(eps, 0.0), 1.0))
    if method != "bisection":
        raise ValueError(f"unknown method {method!r}")

    scale = ModularScale(lam)
    envelope = envelope or GaussianEnvelope(sigma_x=6.0 * lam)
    pure = build_mpe(N, 0.0, 1, lam, envelope)
    classical = build_classical_correlated(N, 0.0, 1, lam, envelope)
    stats = [_component_stats(pure, scale, "momentum", points_per_ell)] + [
        _component_stats(st, scale, "momentum", points_per_ell) for _, st in classical.components
    ]
    bound = criterion_bound()

    def lhs(eps: float) -> float:
        weights = [1.0 - eps] + [eps * w for w, _ in classical.components]
        _, var_n = mixture_stats(weights, [s[0] for s in stats])
        _, var_r = mixture_stats(weights, [s[1] for s in stats])
        return var_n + var_r / scale.ell**2

    if lhs(0.0) >= bound:
        raise RuntimeError("pure state does not violate the criterion; nothing to bisect")
    if lhs(1.0) < bound:
        return 1.0
    lo, hi = 0.0, 1.0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if lhs(mid) < bound:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def visibility_of_admixture(
    epsilon: float, N: int, lam: float = 1.0, sigma_over_lambda: float = 50.0
) -> float:
    """Relative-coordinate fringe visibility of the admixed joint density."""
    if not 0 <= epsilon <= 1:
        raise ValueError("epsilon must lie in [0, 1]")
    env = GaussianEnvelope(sigma_x=sigma_over_lambda * lam)
    state = admixture_state(epsilon, int(N), lam=lam, envelope=env)
    delta = np.linspace(-lam / 2, lam / 2, 801)
    dens = joint_position_density(state, delta / 2, -delta / 2)
    return fit_fringe_visibility(delta, dens, int(N), lam)
