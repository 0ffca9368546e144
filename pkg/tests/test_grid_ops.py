import numpy as np
import pytest

from modint.grids import (
    GridSpec,
    GridState,
    IncommensurateGridError,
    TwoParticleGridState,
    apply_modular_operator,
    apply_observable_raw,
    commutator_expectation,
    mixture_stats,
    observable_stats,
    observable_values,
    observable_variance,
)
from modint.modvar import (
    ModularScale,
    mpe_modular_relative_variance,
    smp_commutator_expectation,
    smp_integer_momentum_variance,
    smp_modular_position_variance,
)
from modint.states import GaussianEnvelope, build_mpe, build_smp, default_grid, discretize

SCALE = ModularScale(1.0)
WIDE = GaussianEnvelope(sigma_x=8.0)


def smp_grid(N, points_per_ell=256, **kw):
    st = build_smp(N, x0=kw.pop("x0", 0.0), N0=kw.pop("N0", 1), lam=1.0, envelope=WIDE)
    return discretize(st, default_grid(st, 1.0, points_per_ell=points_per_ell))


class TestGridSpec:
    def test_basic_properties(self):
        spec = GridSpec(points=64, xmin=-4.0, xmax=4.0)
        assert spec.dx == pytest.approx(0.125)
        assert len(spec.x) == 64
        assert spec.x[0] == pytest.approx(-4.0)
        # momentum grid is the FFT dual
        assert np.max(np.abs(spec.p)) == pytest.approx(np.pi / spec.dx, rel=1e-9)

    def test_rejects_bad_sizes(self):
        with pytest.raises(ValueError):
            GridSpec(points=100, xmin=0.0, xmax=1.0)  # not a power of two
        with pytest.raises(ValueError):
            GridSpec(points=8, xmin=0.0, xmax=1.0)  # too few points
        with pytest.raises(ValueError):
            GridSpec(points=64, xmin=1.0, xmax=1.0)

    def test_commensurate_check(self):
        spec = GridSpec(points=256, xmin=-4.0, xmax=4.0)
        assert spec.check_commensurate(ModularScale(1.0)) == 8
        with pytest.raises(IncommensurateGridError):
            spec.check_commensurate(ModularScale(0.3))

    def test_momentum_ops_require_commensurate_box(self):
        spec = GridSpec(points=256, xmin=-4.1, xmax=4.0)
        psi = np.exp(-spec.x**2)
        state = GridState(spec, psi)
        with pytest.raises(IncommensurateGridError):
            observable_stats(state, "N_p", SCALE)


class TestObservableValues:
    def test_position_diagonal(self):
        spec = GridSpec(points=256, xmin=-4.0, xmax=4.0)
        domain, xbar = observable_values(spec, "xbar", SCALE)
        assert domain == "position"
        assert np.all(xbar >= -0.5) and np.all(xbar < 0.5)
        _, nx = observable_values(spec, "N_x", SCALE)
        assert np.allclose(nx + xbar, spec.x, atol=1e-12)

    def test_momentum_diagonal(self):
        spec = GridSpec(points=256, xmin=-4.0, xmax=4.0)
        domain, npv = observable_values(spec, "N_p", SCALE)
        assert domain == "momentum"
        _, pbar = observable_values(spec, "pbar", SCALE)
        assert np.allclose(npv * SCALE.momentum_period + pbar, spec.p, atol=1e-9)

    def test_unknown_name(self):
        spec = GridSpec(points=64, xmin=-1.0, xmax=1.0)
        with pytest.raises(ValueError):
            observable_values(spec, "energy", SCALE)


class TestHermiticity:
    @pytest.mark.parametrize("name", ["x", "xbar", "N_x", "p", "pbar", "N_p"])
    def test_expectations_real(self, name):
        rng = np.random.default_rng(3)
        spec = GridSpec(points=512, xmin=-8.0, xmax=8.0)
        psi = rng.normal(size=512) + 1j * rng.normal(size=512)
        state = GridState(spec, psi)
        opsi = apply_observable_raw(spec, state.psi, name, SCALE)
        ev = np.vdot(state.psi, opsi) * spec.dx
        assert abs(ev.imag) < 1e-10 * max(1.0, abs(ev.real))

    def test_apply_modular_operator_returns_state(self):
        spec = GridSpec(points=512, xmin=-8.0, xmax=8.0)
        psi = np.exp(-spec.x**2)
        out = apply_modular_operator(GridState(spec, psi), "xbar", SCALE)
        assert isinstance(out, GridState)
        assert out.norm == pytest.approx(1.0)


class TestClosedFormAgreement:
    @pytest.mark.parametrize("N", [1, 2, 3, 4, 6])
    def test_smp_modular_position_variance(self, N):
        gs = smp_grid(N)
        _, var = observable_stats(gs, "xbar", SCALE)
        ref = smp_modular_position_variance(N, SCALE)
        assert var == pytest.approx(ref, rel=2e-4)

    @pytest.mark.parametrize("N", [1, 2, 3, 4, 6])
    def test_smp_integer_momentum_variance(self, N):
        gs = smp_grid(N)
        _, var = observable_stats(gs, "N_p", SCALE)
        assert var == pytest.approx(smp_integer_momentum_variance(N), abs=1e-8)

    @pytest.mark.parametrize("N", [2, 3, 4])
    def test_mpe_relative_variance(self, N):
        st = build_mpe(N, x0=0.0, N0=1, lam=1.0, envelope=WIDE)
        # the modular kink converges O(dx^2): 512 points/period for 1e-4 rel
        gs = discretize(st, default_grid(st, 1.0, points_per_ell=512))
        _, var = observable_stats(gs, "xbar_rel", SCALE)
        assert var == pytest.approx(mpe_modular_relative_variance(N, SCALE), rel=1e-4)

    @pytest.mark.parametrize("N", [2, 3, 4])
    def test_mpe_total_momentum_sharp(self, N):
        st = build_mpe(N, x0=0.0, N0=1, lam=1.0, envelope=WIDE)
        gs = discretize(st, default_grid(st, 1.0))
        mean, var = observable_stats(gs, "N_p_tot", SCALE)
        # counterpropagating components: N_1 + N_2 is the same in every branch
        assert var == pytest.approx(0.0, abs=1e-8)
        assert mean == pytest.approx(0.0, abs=1e-8)

    @pytest.mark.parametrize("N", range(1, 7))
    def test_commutator_closed_form(self, N):
        gs = smp_grid(N, points_per_ell=512)
        val = commutator_expectation(gs, ("xbar", "N_p"), SCALE)
        ref = 1j * smp_commutator_expectation(N, SCALE)
        assert abs(val - ref) < 1e-5

    def test_commutator_rejects_unknown_pair(self):
        gs = smp_grid(2)
        with pytest.raises(ValueError):
            commutator_expectation(gs, ("x", "p"), SCALE)


class TestUncertaintyFloor:
    def test_random_states_respect_floor(self):
        from modint.spectral import solve_c

        c = solve_c().c
        rng = np.random.default_rng(11)
        spec = GridSpec(points=1024, xmin=-8.0, xmax=8.0)
        for _ in range(25):
            psi = rng.normal(size=1024) + 1j * rng.normal(size=1024)
            state = GridState(spec, psi)
            s = observable_variance(state, "N_p", SCALE) + observable_variance(
                state, "xbar", SCALE
            )
            assert s >= c - 1e-4

    def test_robertson_bound_on_smp(self):
        # Var(xbar) Var(N_p) >= |<[xbar, N_p]>|^2 / 4 on fringe states
        for N in range(1, 11):
            gs = smp_grid(N)
            vx = observable_variance(gs, "xbar", SCALE)
            vn = observable_variance(gs, "N_p", SCALE)
            comm = abs(commutator_expectation(gs, ("xbar", "N_p"), SCALE))
            assert vx * vn >= comm**2 / 4 - 1e-9


class TestPhaseAndMixture:
    def test_global_phase_invariance(self):
        gs = smp_grid(3)
        rotated = GridState(gs.spec, gs.psi * np.exp(1j * 0.77))
        for name in ("xbar", "N_p"):
            assert observable_stats(rotated, name, SCALE) == pytest.approx(
                observable_stats(gs, name, SCALE)
            )

    def test_mixture_stats_total_variance_law(self):
        # two point distributions: within-variance zero, between-variance full
        mean, var = mixture_stats([0.5, 0.5], [(1.0, 0.0), (-1.0, 0.0)])
        assert mean == pytest.approx(0.0)
        assert var == pytest.approx(1.0)
        mean, var = mixture_stats([0.25, 0.75], [(0.0, 2.0), (0.0, 4.0)])
        assert var == pytest.approx(3.5)

    def test_two_particle_requires_pair_observable(self):
        st = build_mpe(2, x0=0.0, N0=1, lam=1.0, envelope=WIDE)
        gs = discretize(st, default_grid(st, 1.0))
        with pytest.raises(ValueError):
            observable_stats(gs, "xbar", SCALE)
        single = smp_grid(2)
        with pytest.raises(ValueError):
            observable_stats(single, "xbar_rel", SCALE)
