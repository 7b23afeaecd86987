import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import BASE
from ergodic_leverage.analytics import (
    GbmParams,
    MarketModel,
    levered_params,
    levered_time_growth,
    time_average_growth_rate,
)
from ergodic_leverage.simulate import (
    EnsembleResult,
    PathSample,
    TimeGrid,
    average_universes,
    exact_ensemble,
    exact_paths,
    growth_estimator,
    ladder_averages,
    rebalanced_ensemble,
    rebalancing_bias,
    sample_path_exact,
    simulate_rebalanced,
)
from ergodic_leverage.streams import substream

NOISY = GbmParams(0.05, 0.45)


class TestTimeGrid:
    @given(st.floats(1e-3, 1e5), st.integers(1, 10_000))
    def test_dt_times_steps(self, T, steps):
        g = TimeGrid(T, steps)
        assert abs(g.dt * g.steps - T) <= 1e-12 * T
        assert g.times[0] == 0 and g.times[-1] == T

    @pytest.mark.parametrize("T, steps", [(0, 1), (-1, 1), (math.inf, 1), (1, 0), (1, 1.5)])
    def test_invalid(self, T, steps):
        with pytest.raises(ValueError):
            TimeGrid(T, steps)


class TestExactPaths:
    def test_zero_volatility_is_deterministic(self):
        for steps in (1, 7, 1000):
            p = sample_path_exact(GbmParams(0.05, 0.0), TimeGrid(10, steps), substream(3, 0))
            assert p.values[-1] == math.exp(0.5)
            assert p.values[0] == 1.0 and not p.bankrupt

    def test_consumes_one_normal_per_step(self):
        s = substream(1, 4)
        sample_path_exact(NOISY, TimeGrid(1, 17), s)
        assert s.position == 17

    def test_step_recursion(self):
        grid = TimeGrid(5, 50)
        p = sample_path_exact(NOISY, grid, substream(8, 2))
        z = substream(8, 2).normals(50)
        increments = np.diff(np.log(p.values))
        expected = time_average_growth_rate(NOISY) * grid.dt + NOISY.sigma * math.sqrt(grid.dt) * z
        np.testing.assert_allclose(increments, expected, atol=1e-12)

    def test_matches_bulk_paths(self):
        grid = TimeGrid(3, 30)
        bulk = exact_paths(NOISY, grid, 5, 4, first_index=10)
        for i in range(4):
            single = sample_path_exact(NOISY, grid, substream(5, 10 + i))
            assert np.array_equal(single.values, bulk[i])

    def test_terminal_matches_paths(self):
        grid = TimeGrid(2, 20)
        ens = exact_ensemble(NOISY, grid, 50, 3)
        paths = exact_paths(NOISY, grid, 3, 50)
        np.testing.assert_allclose(ens.terminal_ratios, paths[:, -1], rtol=1e-13)

    @pytest.mark.parametrize("T, steps", [(1.0, 1), (10.0, 10)])
    def test_log_moments_exact(self, T, steps):
        N = 100_000
        ens = exact_ensemble(NOISY, TimeGrid(T, steps), N, seed=11)
        logs = np.log(ens.terminal_ratios)
        s = NOISY.sigma
        assert abs(logs.mean() - time_average_growth_rate(NOISY) * T) <= 3 * s * math.sqrt(T / N)
        assert abs(logs.var(ddof=1) / (s**2 * T) - 1) <= 0.05

    def test_mean_and_median_at_T1(self):
        N = 100_000
        r = exact_ensemble(NOISY, TimeGrid(1, 1), N, seed=2).terminal_ratios
        assert abs(r.mean() - math.exp(0.05)) <= 3 * r.std(ddof=1) / math.sqrt(N)
        median = math.exp(-0.05125)
        density = 1 / (median * 0.45 * math.sqrt(2 * math.pi))
        assert abs(np.median(r) - median) <= 3 * math.sqrt(0.25 / N) / density


class TestRebalanced:
    def test_zero_leverage_is_riskless_compounding(self):
        grid = TimeGrid(10, 37)
        p = simulate_rebalanced(BASE, 0.0, grid, substream(0, 0))
        assert np.array_equal(p.values, np.exp(0.05 * grid.times))
        assert p.values[-1] == math.exp(0.05 * 10)

    def test_unit_leverage_is_market_path(self):
        grid = TimeGrid(10, 100)
        a = simulate_rebalanced(BASE, 1.0, grid, substream(4, 9))
        b = sample_path_exact(BASE.market, grid, substream(4, 9))
        assert np.array_equal(a.values, b.values)

    def test_step_formula(self):
        m, l, grid = BASE, 2.5, TimeGrid(4, 40)
        p = simulate_rebalanced(m, l, grid, substream(6, 1))
        z = substream(6, 1).normals(40)
        dt = grid.dt
        mu_m = m.mu_riskless + m.mu_excess
        factors = (1 - l) * math.exp(m.mu_riskless * dt) + l * np.exp(
            (mu_m - m.sigma_m**2 / 2) * dt + m.sigma_m * math.sqrt(dt) * z)
        np.testing.assert_allclose(p.values, np.concatenate([[1.0], np.cumprod(factors)]),
                                   rtol=1e-12)

    def test_ensemble_matches_single_paths(self):
        grid = TimeGrid(2, 64)
        ens = rebalanced_ensemble(BASE, 1.7, grid, 8, 12, first_index=3)
        for i in range(8):
            p = simulate_rebalanced(BASE, 1.7, grid, substream(12, 3 + i))
            assert p.values[-1] == pytest.approx(ens.terminal_ratios[i], rel=1e-13)

    def test_bankruptcy_absorbs_at_zero(self):
        grid = TimeGrid(20, 20)
        hits = 0
        for i in range(200):
            p = simulate_rebalanced(BASE, 12.0, grid, substream(1, i))
            if p.bankrupt:
                hits += 1
                k = int(np.argmax(p.values <= 0))
                assert np.all(p.values[k:] == 0)
                assert np.all(p.values[:k] > 0)
            else:
                assert np.all(p.values > 0)
        assert hits > 0

    def test_bankruptcy_monotone_in_leverage(self):
        grid = TimeGrid(20, 20)
        ladder = [1.0, 2.0, 3.0, 5.0, 8.0, 13.0, 21.0]
        for seed in range(3):
            ens = [rebalanced_ensemble(BASE, l, grid, 300, seed) for l in ladder]
            flags = np.array([e.bankrupt for e in ens])
            assert not flags[0].any()
            assert np.all(flags[1:] >= flags[:-1])

    def test_levered_drift_and_volatility(self):
        # long-leverage law converges to the levered GBM parameters
        m, l, T = BASE, 2.0, 10.0
        ens = rebalanced_ensemble(m, l, TimeGrid(T, 640), 2000, seed=21)
        g = np.log(ens.terminal_ratios) / T
        target = levered_params(m, l)
        sd = target.sigma / math.sqrt(T)
        assert abs(g.mean() - time_average_growth_rate(target)) <= 3 * sd / math.sqrt(2000)
        assert abs(g.var(ddof=1) / sd**2 - 1) <= 0.1

    def test_optimal_leverage_growth(self, base_bias):
        # the dt = 1/256 level of the shared bias run is a plain 10^4-path rebalanced estimate
        finest = base_bias[-1]
        assert finest.dt == 1 / 256
        tol = 3 * 1.5432 * 0.18 / math.sqrt(100) / math.sqrt(10_000)
        assert abs(finest.raw_mean + levered_time_growth(BASE, 1.5432) - 0.08858) <= tol

    def test_bias_run_matches_rebalanced_ensemble(self):
        bias = rebalancing_bias(BASE, 1.5432, 4.0, dts=(1 / 8, 1 / 16), n_paths=40, seed=5)
        ens = rebalanced_ensemble(BASE, 1.5432, TimeGrid(4.0, 64), 40, seed=5)
        g = np.log(ens.terminal_ratios) / 4.0
        assert bias[-1].raw_mean == pytest.approx(g.mean() - levered_time_growth(BASE, 1.5432),
                                                  abs=1e-12)

    def test_bias_halves_small(self):
        res = rebalancing_bias(BASE, 1.5432, 10.0, n_paths=500, seed=3)
        b = [r.bias for r in res]
        assert all(x < 0 for x in b)
        assert 1.5 <= b[0] / b[1] <= 2.5
        assert 1.5 <= b[1] / b[2] <= 2.5
        assert all(r.stderr < 0.05 * abs(r.bias) for r in res)

    def test_bias_rejects_incommensurate_steps(self):
        with pytest.raises(ValueError):
            rebalancing_bias(BASE, 1.5, 1.0, dts=(0.3, 0.1), n_paths=10)


class TestGrowthEstimator:
    def test_single_path(self):
        est = growth_estimator(EnsembleResult([math.exp(0.3)], 10.0))
        assert est.value == pytest.approx(0.03, abs=1e-15)
        assert est.N == 1

    def test_mean_inside_log(self):
        est = growth_estimator(EnsembleResult([math.e, 1 / math.e], 1.0))
        assert est.value == pytest.approx(math.log((math.e + 1 / math.e) / 2))

    def test_all_bankrupt(self):
        assert growth_estimator(EnsembleResult([0.0, 0.0], 5.0)).value == -math.inf

    def test_negative_ratio(self):
        with pytest.raises(ValueError):
            growth_estimator(EnsembleResult([1.0, -0.1], 1.0))

    def test_ensemble_limit(self):
        est = growth_estimator(exact_ensemble(NOISY, TimeGrid(1, 1), 100_000, seed=4))
        assert abs(est.value - 0.05) <= 0.005
        assert est.stderr == pytest.approx(0.0017, abs=3e-4)

    def test_time_limit(self):
        est = growth_estimator(exact_ensemble(NOISY, TimeGrid(10_000, 1000), 1, seed=4),
                               sigma=NOISY.sigma)
        assert est.stderr == pytest.approx(0.0045)
        assert abs(est.value + 0.05125) <= 3 * est.stderr

    def test_limits_do_not_commute(self):
        g_ens = growth_estimator(exact_ensemble(NOISY, TimeGrid(1, 1), 100_000, seed=6)).value
        g_time = growth_estimator(exact_ensemble(NOISY, TimeGrid(10_000, 1000), 1, seed=6)).value
        assert abs((g_ens - g_time) - 0.10125) <= 0.015


class TestAverageUniverses:
    def _paths(self, params, grid, seed, n):
        rows = exact_paths(params, grid, seed, n)
        return [PathSample(grid, rows[i], i, False, seed) for i in range(n)]

    def test_single_path_identity(self):
        [p] = self._paths(NOISY, TimeGrid(10, 10), 1, 1)
        assert np.array_equal(average_universes([p]), p.values)

    def test_zero_volatility(self):
        paths = self._paths(GbmParams(0.05, 0.0), TimeGrid(10, 10), 1, 5)
        avg = average_universes(paths)
        for p in paths:
            assert np.array_equal(avg, p.values)

    def test_mismatched_grids(self):
        a = self._paths(NOISY, TimeGrid(1, 10), 1, 1)
        b = self._paths(NOISY, TimeGrid(1, 11), 1, 1)
        with pytest.raises(ValueError):
            average_universes(a + b)

    def test_ladder_prefixes(self):
        grid = TimeGrid(5, 20)
        ladder = ladder_averages(NOISY, grid, 2, [1, 3, 50], chunk=7)
        paths = self._paths(NOISY, grid, 2, 50)
        for n, avg in ladder.items():
            assert np.array_equal(avg, average_universes(paths[:n]))

    def test_ladder_must_increase(self):
        with pytest.raises(ValueError):
            ladder_averages(NOISY, TimeGrid(1, 1), 0, [10, 10])

    def test_many_universes_grow_at_ensemble_rate(self):
        from ergodic_leverage.experiments import averaging_horizon, log_slope

        N, grid = 100_000, TimeGrid(75, 75)
        avg = average_universes(self._paths(NOISY, grid, 0, N))
        slope = log_slope(grid.times, avg, 0, averaging_horizon(NOISY, N))
        assert abs(slope - 0.05) <= 0.005


class TestReproducibility:
    def test_exact_thread_invariance(self):
        grid = TimeGrid(3, 30)
        a = exact_ensemble(NOISY, grid, 5000, 9, threads=1).terminal_ratios
        b = exact_ensemble(NOISY, grid, 5000, 9, threads=4).terminal_ratios
        assert a.tobytes() == b.tobytes()

    def test_rebalanced_thread_invariance(self):
        grid = TimeGrid(3, 30)
        a = rebalanced_ensemble(BASE, 2.2, grid, 3000, 9, threads=1)
        b = rebalanced_ensemble(BASE, 2.2, grid, 3000, 9, threads=4)
        assert a.terminal_ratios.tobytes() == b.terminal_ratios.tobytes()

    def test_ladder_thread_invariance(self):
        grid = TimeGrid(3, 30)
        a = ladder_averages(NOISY, grid, 9, [1, 100, 3000], threads=1)
        b = ladder_averages(NOISY, grid, 9, [1, 100, 3000], threads=4)
        assert all(a[n].tobytes() == b[n].tobytes() for n in a)

    def test_bias_thread_invariance(self):
        kw = dict(dts=(1 / 8, 1 / 16), n_paths=300, seed=1)
        a = rebalancing_bias(BASE, 1.5, 4.0, threads=1, **kw)
        b = rebalancing_bias(BASE, 1.5, 4.0, threads=4, **kw)
        assert a == b

    @settings(max_examples=10, deadline=None)
    @given(st.integers(0, 2**64 - 1), st.integers(0, 2**32))
    def test_path_depends_only_on_seed_and_index(self, seed, index):
        grid = TimeGrid(1, 8)
        a = exact_paths(NOISY, grid, seed, 3, index)[1]
        b = sample_path_exact(NOISY, grid, substream(seed, index + 1)).values
        assert np.array_equal(a, b)
