"""Brute-force and perturbation oracles for the limiter optimum."""

import io
import math

import numpy as np
import pytest

from sndropt.distributions import StandardGaussian, UniformSymmetric
from sndropt.mappings import affine_clipped, bussgang
from sndropt.oracles import (
    MISPLACED_LOW,
    SLIVER_HIGH,
    SLIVER_LOW,
    PerturbationReport,
    bump_report,
    bump_scaling_fit,
    grid_search,
    monte_carlo_sndr,
    notched_limiter,
    perturb_function_space,
    perturb_sets,
    piecewise_constant_best,
    sliver_suite,
    write_reports_csv,
)
from sndropt.solvers import LimiterParams, solve_symmetric

GAUSS = StandardGaussian()
UNIF = UniformSymmetric()

T = 0.01
OPT = solve_symmetric(GAUSS, T)
PARAMS = OPT.params


def _random_valid_mapping(rng):
    kind = rng.integers(0, 3)
    if kind == 0:
        return LimiterParams(rng.uniform(0.2, 5.0), rng.uniform(0.05, 0.95)).mapping()
    if kind == 1:
        return affine_clipped(rng.uniform(0.1, 3.0), rng.uniform(0.0, 1.0))
    from sndropt.mappings import tabulated_mapping

    knots_x = np.sort(rng.uniform(-3.0, 3.0, 7))
    knots_y = np.sort(rng.uniform(0.0, 1.0, 7))
    return tabulated_mapping(np.column_stack([knots_x, knots_y]))


def test_ten_thousand_random_mappings_never_beat_optimum():
    rng = np.random.default_rng(77)
    for dist, t in ((GAUSS, 0.01), (UNIF, 0.1)):
        ceiling = solve_symmetric(dist, t).sndr_star + 1e-9
        for _ in range(10_000):
            assert bussgang(_random_valid_mapping(rng), dist, t).sndr <= ceiling


class TestGridSearch:
    def test_single_cell(self):
        res = grid_search(GAUSS, T, [2.0], [0.5])
        expected = bussgang(LimiterParams(2.0, 0.5).mapping(), GAUSS, T).sndr
        assert res.eta == 2.0 and res.beta == 0.5
        assert res.sndr == pytest.approx(expected, rel=1e-12)

    def test_never_beats_solver(self):
        res = grid_search(GAUSS, T, np.linspace(0.5, 5.0, 40), np.linspace(0.1, 0.9, 40))
        assert res.sndr <= OPT.sndr_star + 1e-9

    def test_argmax_near_optimum_on_fine_grid(self):
        eta_grid = np.linspace(PARAMS.eta - 0.2, PARAMS.eta + 0.2, 81)
        beta_grid = np.linspace(0.4, 0.6, 81)
        res = grid_search(GAUSS, T, eta_grid, beta_grid)
        assert abs(res.eta - PARAMS.eta) <= (eta_grid[1] - eta_grid[0]) + 1e-12
        assert abs(res.beta - 0.5) <= (beta_grid[1] - beta_grid[0]) + 1e-12

    def test_rejects_zero_eta(self):
        with pytest.raises(ValueError, match="eta"):
            grid_search(GAUSS, T, [0.0, 1.0], [0.5])


class TestNotchedLimiter:
    def test_zero_width_sliver_is_noop(self):
        mid = 0.5 * sum(PARAMS.ramp_interval())
        rep = perturb_sets(GAUSS, T, PARAMS, width=0.0, case=SLIVER_LOW, position=mid)
        assert rep.perturbed_sndr == pytest.approx(rep.baseline_sndr, rel=1e-12)
        assert rep.delta == pytest.approx(0.0, abs=1e-10)

    def test_mapping_shape(self):
        lo, hi = PARAMS.ramp_interval()
        width = 0.1 * (hi - lo)
        mid = 0.5 * (lo + hi)
        m = notched_limiter(PARAMS, (mid - width / 2, mid + width / 2), rail=1.0)
        assert m(mid) == 1.0
        assert m(lo - 1.0) == 0.0 and m(hi + 1.0) == 1.0
        # outside the notch the ramp is untouched
        probe = lo + 0.05 * (hi - lo)
        assert m(probe) == pytest.approx(PARAMS.mapping()(probe), abs=1e-12)

    def test_sliver_outside_ramp_rejected(self):
        lo, hi = PARAMS.ramp_interval()
        with pytest.raises(ValueError, match="ramp"):
            notched_limiter(PARAMS, (hi + 0.1, hi + 0.2), rail=0.0)

    def test_bad_rail_rejected(self):
        lo, hi = PARAMS.ramp_interval()
        with pytest.raises(ValueError, match="rail"):
            notched_limiter(PARAMS, (lo + 0.1, lo + 0.2), rail=0.5)


class TestSliverSuites:
    @pytest.mark.parametrize("case", [SLIVER_LOW, SLIVER_HIGH, MISPLACED_LOW])
    @pytest.mark.parametrize("dist", [GAUSS, UNIF], ids=lambda d: d.kind)
    def test_never_improves(self, dist, case):
        out = solve_symmetric(dist, T)
        reports = sliver_suite(dist, T, out.params, case, n_trials=60, seed=3)
        assert len(reports) == 60
        assert max(r.delta for r in reports) <= 1e-9

    def test_deterministic_for_seed(self):
        a = sliver_suite(GAUSS, T, PARAMS, SLIVER_LOW, n_trials=5, seed=42)
        b = sliver_suite(GAUSS, T, PARAMS, SLIVER_LOW, n_trials=5, seed=42)
        assert [(r.magnitude, r.perturbed_sndr) for r in a] == [
            (r.magnitude, r.perturbed_sndr) for r in b
        ]

    def test_misplaced_rail_hurts_badly(self):
        # sending an interior chunk to the wrong rail is a gross error,
        # so the SNDR drop is far from marginal
        reports = sliver_suite(GAUSS, T, PARAMS, MISPLACED_LOW, n_trials=20, seed=4)
        assert max(r.delta for r in reports) < -1e-3

    def test_unknown_case_rejected(self):
        with pytest.raises(ValueError, match="case"):
            perturb_sets(GAUSS, T, PARAMS, width=0.05, case="upside-down")


class TestBumps:
    def test_single_bump_hurts(self):
        lo, hi = PARAMS.ramp_interval()
        mid = 0.5 * (lo + hi)
        rep = bump_report(GAUSS, T, PARAMS, center=mid, width=0.3, magnitude=0.01)
        assert rep.delta < 0.0

    def test_magnitude_cap_enforced(self):
        lo, hi = PARAMS.ramp_interval()
        with pytest.raises(ValueError, match="magnitude"):
            bump_report(GAUSS, T, PARAMS, center=0.5 * (lo + hi), width=0.3, magnitude=0.2)

    def test_support_must_stay_inside_ramp(self):
        lo, hi = PARAMS.ramp_interval()
        with pytest.raises(ValueError, match="ramp"):
            bump_report(GAUSS, T, PARAMS, center=hi, width=0.5, magnitude=0.01)

    def test_suite_never_improves(self):
        reports = perturb_function_space(GAUSS, T, PARAMS, n_trials=16, bump_scale=0.02, seed=5)
        assert len(reports) == 16
        assert max(r.delta for r in reports) <= 1e-9

    def test_quadratic_scaling_at_stationary_point(self):
        fit = bump_scaling_fit(
            GAUSS, T, PARAMS, scales=(0.04, 0.02, 0.01, 0.005, 0.0025), n_trials=6, seed=6
        )
        assert fit.r_squared > 0.95
        assert 1.7 < fit.slope < 2.3

    def test_linear_scaling_away_from_optimum(self):
        # at a non-stationary point the loss is first order in the bump size
        params = LimiterParams(PARAMS.eta * 1.5, 0.35)
        fit = bump_scaling_fit(
            GAUSS, T, params, scales=(0.04, 0.02, 0.01, 0.005, 0.0025), n_trials=6, seed=7
        )
        assert fit.slope < 1.5


class TestPiecewiseConstant:
    def test_approaches_from_below(self):
        prev = -math.inf
        for n in (8, 16, 32, 64):
            res = piecewise_constant_best(GAUSS, T, PARAMS, n)
            assert res.sndr <= OPT.sndr_star + 1e-9
            assert res.sndr >= prev - 1e-12
            prev = res.sndr
        # 64 cells resolve the ramp well enough to come close
        assert OPT.sndr_star - prev < 0.05 * OPT.sndr_star

    def test_values_are_feasible(self):
        res = piecewise_constant_best(GAUSS, T, PARAMS, 16)
        assert np.all(res.values >= 0.0) and np.all(res.values <= 1.0)
        assert np.all(np.diff(res.edges) > 0.0)


class TestMonteCarlo:
    def test_deterministic(self):
        m = PARAMS.mapping()
        a = monte_carlo_sndr(m, GAUSS, T, n_samples=10_000, seed=9)
        b = monte_carlo_sndr(m, GAUSS, T, n_samples=10_000, seed=9)
        assert a.estimate == b.estimate and a.std_error == b.std_error

    def test_agrees_within_three_sigma(self):
        m = PARAMS.mapping()
        res = monte_carlo_sndr(m, GAUSS, T, n_samples=500_000, seed=10)
        assert abs(res.estimate - OPT.sndr_star) <= 3.0 * res.std_error
        assert res.std_error < 0.05 * OPT.sndr_star

    def test_constant_mapping_gives_zero(self):
        m = affine_clipped(0.0, 0.5)
        res = monte_carlo_sndr(m, GAUSS, T, n_samples=10_000, seed=11)
        assert res.estimate == 0.0

    def test_error_shrinks_with_samples(self):
        m = PARAMS.mapping()
        small = monte_carlo_sndr(m, GAUSS, T, n_samples=10_000, seed=12)
        large = monte_carlo_sndr(m, GAUSS, T, n_samples=640_000, seed=12)
        assert large.std_error < 0.25 * small.std_error


class TestReportCsv:
    def test_schema_and_determinism(self):
        reports = [
            PerturbationReport("grid", 128.0, 6.0, 5.5),
            PerturbationReport(SLIVER_LOW, 0.01, 6.0, 5.999),
        ]
        buf = io.StringIO()
        write_reports_csv(reports, buf)
        lines = buf.getvalue().splitlines()
        assert lines[0] == "kind,magnitude,baseline,perturbed,delta"
        assert lines[1] == "grid,128,6,5.5,-0.5"
        assert len(lines) == 3
