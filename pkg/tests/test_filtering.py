"""Conditional density tests: tilt exponents, moments, SDE step, restarts."""

import numpy as np
import pytest

from infobridge.filtering import (
    MassCollapseError,
    condition,
    conditional_mean,
    conditional_third,
    conditional_variance,
    consistency_reinitialize,
    evolve_density_sde,
    initial_density,
    log_weight_deviation,
)
from infobridge.market import FlowSchedule
from infobridge.numerics import TimeGrid
from infobridge.priors import DiscreteAtoms, Exponential
from infobridge.stochastic import (
    RngStream,
    filter_mean_matrix,
    simulate_information_ensemble,
    simulate_information_path,
)

T = 1.0
CONST = FlowSchedule.constant(1.0, T)
EXP1 = Exponential(scale=1.0)
BINARY = DiscreteAtoms(atoms=((0.0, 0.5), (1.0, 0.5)))
POINT = DiscreteAtoms(atoms=((0.7, 1.0),))


class TestCondition:
    def test_at_zero_equals_prior(self):
        cd = condition(EXP1, CONST, 0.0, 0.0)
        prior = initial_density(EXP1)
        assert log_weight_deviation(cd, prior) == 0.0
        assert abs(conditional_mean(cd) - 1.0) <= 1e-10

    def test_zero_flow_rate_never_updates(self):
        sched = FlowSchedule.constant(0.0, T)
        for t, xi in ((0.3, 1.5), (0.8, -2.0)):
            cd = condition(EXP1, sched, t, xi)
            assert abs(conditional_mean(cd) - 1.0) <= 1e-10
            assert abs(conditional_variance(cd) - 1.0) <= 1e-8

    def test_constant_rate_exponent_reduction(self):
        # the tilt must equal (T/(T-t)) (sigma x xi - sigma^2 x^2 t / 2)
        t, xi = 0.5, 0.3
        cd = condition(EXP1, CONST, t, xi)
        base = initial_density(EXP1)
        tilt = cd.log_weights - base.log_weights
        x = cd.x
        expected = (T / (T - t)) * (x * xi - 0.5 * x * x * t)
        np.testing.assert_allclose(tilt, expected, rtol=1e-12, atol=1e-12)

    def test_binary_prior_closed_form(self):
        # weights at {0, 1}: the x=1 log weight is u = (T/(T-t))(sigma xi -
        # sigma^2 t/2); mean = e^u / (1 + e^u)
        t, xi = 0.5, 0.3
        cd = condition(BINARY, CONST, t, xi)
        u = (T / (T - t)) * (xi - 0.5 * t)
        expected = np.exp(u) / (1.0 + np.exp(u))
        assert abs(conditional_mean(cd) - expected) <= 1e-14

    def test_degenerate_prior_fixed_mean(self):
        for t, xi in ((0.2, 0.0), (0.7, 3.0), (0.99, -5.0)):
            cd = condition(POINT, CONST, t, xi)
            assert conditional_mean(cd) == 0.7
            assert conditional_variance(cd) == 0.0
            assert conditional_third(cd) == 0.0

    def test_stieltjes_required_for_time_dependent(self):
        sched = FlowSchedule.piecewise_constant([0.5], [1.0, 2.0], T)
        with pytest.raises(ValueError, match="stieltjes"):
            condition(EXP1, sched, 0.6, 0.3)

    def test_rejects_t_at_maturity(self):
        with pytest.raises(Exception):
            condition(EXP1, CONST, T, 0.0)


class TestMoments:
    def test_prior_moments_at_zero(self):
        cd = condition(EXP1, CONST, 0.0, 0.0)
        assert abs(conditional_variance(cd) - 1.0) <= 1e-8
        assert abs(conditional_third(cd) - 2.0) <= 1e-7

    def test_weights_normalized_everywhere(self):
        for t in (0.0, 0.3, 0.9, 0.999):
            cd = condition(EXP1, CONST, t, 0.4)
            assert abs(cd.probabilities.sum() - 1.0) <= 1e-12


class TestEvolveDensitySde:
    def test_zero_increment_is_identity(self):
        cd = condition(EXP1, CONST, 0.3, 0.2)
        out = evolve_density_sde(cd, dW=0.0, dt=0.01, nu_t=CONST.nu(0.3))
        assert abs(conditional_mean(out) - conditional_mean(cd)) <= 1e-14
        assert out.t == pytest.approx(0.31)

    def test_degenerate_prior_unchanged(self):
        cd = condition(POINT, CONST, 0.3, 0.2)
        out = evolve_density_sde(cd, dW=0.5, dt=0.01, nu_t=2.0)
        assert conditional_mean(out) == 0.7

    def test_small_step_tracks_direct_conditioning(self):
        # one Euler step from t against direct conditioning at t+h along the
        # same path: the gap must shrink linearly with h
        grid_fine = TimeGrid.uniform(0.5, 512)
        path = simulate_information_path(EXP1, CONST, grid_fine, RngStream(5, 0))
        means = filter_mean_matrix(EXP1, CONST, grid_fine, path.xi[None, :], nodes=256)
        from infobridge.stochastic import _innovation_matrix

        W = _innovation_matrix(CONST, grid_fine, path.xi[None, :], means)[0]
        t_arr = grid_fine.times
        stj = path.stieltjes()
        gaps = {}
        for stride in (8, 4, 2, 1):
            worst = 0.0
            for i in range(0, 256, stride):
                j = i + stride
                cd_i = condition(EXP1, CONST, t_arr[i], path.xi[i], stj[i])
                stepped = evolve_density_sde(
                    cd_i, W[j] - W[i], t_arr[j] - t_arr[i], CONST.nu(t_arr[i])
                )
                direct = condition(EXP1, CONST, t_arr[j], path.xi[j], stj[j])
                worst = max(
                    worst,
                    abs(conditional_mean(stepped) - conditional_mean(direct)),
                )
            gaps[stride] = worst
        assert gaps[1] < gaps[4]
        assert gaps[2] < gaps[8]

    def test_violent_increment_still_yields_density(self):
        # the Euler step preserves total mass exactly (sum p (x - m) = 0),
        # so even absurd increments leave a valid, renormalized state;
        # negative masses are floored at zero
        cd = condition(BINARY, CONST, 0.3, 0.2)
        out = evolve_density_sde(cd, dW=-1e6, dt=0.01, nu_t=10.0)
        assert abs(out.probabilities.sum() - 1.0) <= 1e-12
        assert np.all(out.probabilities >= 0.0)

    def test_non_finite_increment_rejected(self):
        cd = condition(BINARY, CONST, 0.3, 0.2)
        with pytest.raises(ValueError):
            evolve_density_sde(cd, dW=float("nan"), dt=0.01, nu_t=1.0)

    def test_offgrid_tilt_collapse_detected(self):
        # conditioning with an information level far beyond what the node
        # range can represent must fail loudly rather than return a point
        # mass on the boundary node
        from infobridge.priors import Tabulated

        prior = Tabulated(xs=(0.0, 0.5, 1.0), densities=(0.0, 1.0, 0.0))
        with pytest.raises(MassCollapseError):
            condition(prior, CONST, 0.999, 1e6)


class TestConsistencyReinitialize:
    def _path(self, sched, seed=3):
        times = sorted(set(np.linspace(0.0, 0.9, 37)) | {0.2, 0.5, 0.8} | set(sched.breakpoints))
        grid = TimeGrid.from_times(times)
        return grid, simulate_information_path(EXP1, sched, grid, RngStream(seed, 0))

    @pytest.mark.parametrize(
        "sched",
        [CONST, FlowSchedule.piecewise_constant([0.35, 0.6], [0.5, 1.5, 1.0], T)],
        ids=["constant", "piecewise"],
    )
    def test_restart_matches_direct(self, sched):
        grid, path = self._path(sched)
        t_arr = grid.times
        stj = path.stieltjes()
        for s in (0.2, 0.5, 0.8):
            i_s = int(np.where(np.isclose(t_arr, s))[0][0])
            cd_s = condition(EXP1, sched, s, path.xi[i_s], stj[i_s])
            restarted = sched.reinitialize(s)
            eta = path.xi - ((T - t_arr) / (T - s)) * path.xi[i_s]
            sig = np.array([restarted.sigma_at(u) for u in t_arr[i_s:-1]])
            eta_stj = np.concatenate([[0.0], np.cumsum(sig * np.diff(eta[i_s:]))])
            for k in range(i_s + 1, len(t_arr)):
                direct = condition(EXP1, sched, t_arr[k], path.xi[k], stj[k])
                via = consistency_reinitialize(
                    cd_s, sched, s, t_arr[k], eta[k], eta_stj[k - i_s]
                )
                assert log_weight_deviation(direct, via) <= 1e-10

    def test_restart_at_zero_is_direct_conditioning(self):
        grid, path = self._path(CONST)
        stj = path.stieltjes()
        cd0 = initial_density(EXP1)
        k = 10
        t = grid.times[k]
        via = consistency_reinitialize(cd0, CONST, 0.0, t, path.xi[k], stj[k])
        direct = condition(EXP1, CONST, t, path.xi[k], stj[k])
        assert log_weight_deviation(direct, via) <= 1e-12

    def test_restart_at_same_time_is_identity(self):
        cd = condition(EXP1, CONST, 0.4, 0.1)
        assert consistency_reinitialize(cd, CONST, 0.4, 0.4, 0.0, 0.0) is cd

    def test_s_after_t_rejected(self):
        cd = condition(EXP1, CONST, 0.5, 0.1)
        with pytest.raises(ValueError):
            consistency_reinitialize(cd, CONST, 0.5, 0.4, 0.0, 0.0)


class TestEnsembleProperties:
    def test_conditional_mean_is_martingale(self):
        # ensemble average of the filter mean stays at the prior mean
        n = 10_000
        grid = TimeGrid.from_times(np.linspace(0.0, 0.95, 20))
        _, xi = simulate_information_ensemble(EXP1, CONST, grid, 77, n)
        means = filter_mean_matrix(EXP1, CONST, grid, xi, nodes=128)
        for i in range(len(grid.times)):
            se = means[:, i].std(ddof=1) / np.sqrt(n)
            z = abs(means[:, i].mean() - 1.0) / se if se > 0 else 0.0
            assert z <= 4.0, f"t={grid.times[i]}: z={z:.2f}"

    def test_conditional_variance_is_supermartingale(self):
        n = 10_000
        grid = TimeGrid.from_times(np.linspace(0.0, 0.95, 20))
        _, xi = simulate_information_ensemble(EXP1, CONST, grid, 78, n)
        _, variances = filter_mean_matrix(
            EXP1, CONST, grid, xi, nodes=128, with_variance=True
        )
        for i in range(len(grid.times) - 1):
            diff = variances[:, i + 1] - variances[:, i]
            se = diff.std(ddof=1) / np.sqrt(n)
            assert diff.mean() <= 4.0 * se

    def test_mean_increment_residual_refines(self):
        # d mean = nu V dW: the residual of the discrete increment against
        # nu V dW must shrink strictly faster than sqrt(dt)
        rel = {}
        for steps in (64, 128, 256):
            grid = TimeGrid.from_times(np.linspace(0.0, 0.5, steps + 1))
            n = 400
            _, xi = simulate_information_ensemble(EXP1, CONST, grid, 79, n)
            means, variances = filter_mean_matrix(
                EXP1, CONST, grid, xi, nodes=128, with_variance=True
            )
            from infobridge.stochastic import _innovation_matrix

            W = _innovation_matrix(CONST, grid, xi, means)
            dW = np.diff(W, axis=1)
            nu = np.array([CONST.nu(u) for u in grid.times[:-1]])
            resid = np.diff(means, axis=1) - nu[None, :] * variances[:, :-1] * dW
            h = 0.5 / steps
            rel[steps] = np.sqrt((resid**2).mean()) / np.sqrt(h)
        # o(sqrt(dt)): the normalized residual itself decays
        assert rel[128] < rel[64]
        assert rel[256] < rel[128]
