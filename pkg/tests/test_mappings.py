"""Mapping construction, Bussgang decomposition and predistortion."""

import io
import math

import numpy as np
import pytest

from sndropt.distributions import StandardGaussian, UniformSymmetric
from sndropt.mappings import (
    DeviceCurve,
    NonlinearMapping,
    affine_clipped,
    bussgang,
    db_to_linear,
    eval_mapping,
    linear_to_db,
    load_device_curve,
    optimal_limiter,
    predistort_curve,
    raw_output_moments,
    reference_limiter,
    sndr_db,
    sndr_physical,
    tabulated_mapping,
)
from sndropt.quadrature import adaptive_gauss_legendre

GAUSS = StandardGaussian()
UNIF = UniformSymmetric()


def _piecewise_quad(f, lo, hi, mapping):
    """Integrate f over [lo, hi], splitting at the mapping's kinks."""
    edges = [lo] + [k for k in mapping.knees() if lo < k < hi] + [hi]
    return sum(
        adaptive_gauss_legendre(f, a, b, tol=1e-13)
        for a, b in zip(edges, edges[1:])
    )


def random_mapping(rng):
    """A random monotone clipped mapping for property-style loops."""
    kind = rng.integers(0, 3)
    if kind == 0:
        return optimal_limiter(rng.uniform(0.2, 5.0), rng.uniform(0.05, 0.95))
    if kind == 1:
        return affine_clipped(rng.uniform(0.1, 3.0), rng.uniform(0.0, 1.0))
    knots_x = np.sort(rng.uniform(-3.0, 3.0, 9))
    knots_y = np.sort(rng.uniform(0.0, 1.0, 9))
    return tabulated_mapping(np.column_stack([knots_x, knots_y]))


class TestConstruction:
    def test_limiter_pointwise(self):
        m = optimal_limiter(2.0, 0.5)
        # knees at -1 and 1, midpoint maps to beta
        np.testing.assert_allclose(
            m(np.array([-5.0, -1.0, 0.0, 1.0, 5.0])), [0.0, 0.0, 0.5, 1.0, 1.0]
        )
        np.testing.assert_array_equal(m.knees(), [-1.0, 1.0])

    def test_limiter_negative_branch(self):
        m = optimal_limiter(-2.0, 0.5)
        np.testing.assert_allclose(
            m(np.array([-5.0, -1.0, 0.0, 1.0, 5.0])), [1.0, 1.0, 0.5, 0.0, 0.0]
        )

    def test_limiter_rejects_zero_slope(self):
        with pytest.raises(ValueError, match="eta"):
            optimal_limiter(0.0, 0.5)

    def test_reference_limiter_values(self):
        g2 = reference_limiter()
        assert g2(0.0) == pytest.approx(0.4)
        assert g2(-0.4) == 0.0
        assert g2(0.6) == 1.0
        assert g2(10.0) == 1.0 and g2(-10.0) == 0.0

    def test_affine_clipped_range(self):
        m = affine_clipped(2.0, 0.3)
        g = np.linspace(-5, 5, 1001)
        y = m(g)
        assert y.min() == 0.0 and y.max() == 1.0
        assert np.all(np.diff(y) >= 0.0)

    def test_tabulated_clamps_and_extends(self):
        knots = np.array([[-1.0, 0.1], [0.0, 0.5], [1.0, 0.9]])
        m = tabulated_mapping(knots)
        assert m(-10.0) == pytest.approx(0.1)
        assert m(10.0) == pytest.approx(0.9)
        assert m(0.5) == pytest.approx(0.7)

    def test_range_violation_rejected(self):
        with pytest.raises(ValueError, match=r"leaves \[0, 1\]"):
            NonlinearMapping(
                breaks=[0.0], slopes=[0.0, 0.0], intercepts=[0.0, 1.5]
            )

    def test_unbounded_panel_must_be_flat(self):
        with pytest.raises(ValueError, match="zero slope"):
            NonlinearMapping(
                breaks=[0.0], slopes=[0.1, 0.0], intercepts=[0.5, 0.5]
            )

    def test_eval_mapping_scalar(self):
        assert eval_mapping(reference_limiter(), 0.0) == pytest.approx(0.4)


class TestBussgang:
    def test_affine_on_uniform_is_distortion_free(self):
        # full-range affine map: no clipping, so distortion is exactly zero
        m = affine_clipped(1.0 / (2.0 * math.sqrt(3.0)), 0.5)
        rep = bussgang(m, UNIF, 1.0 / 12.0)
        assert rep.distortion_power == pytest.approx(0.0, abs=1e-15)
        # alpha^2 / t = (1/12) / (1/12)
        assert rep.sndr == pytest.approx(1.0, rel=1e-12)

    def test_distortion_free_zero_noise_is_inf(self):
        m = affine_clipped(1.0 / (2.0 * math.sqrt(3.0)), 0.5)
        assert bussgang(m, UNIF, 0.0).sndr == math.inf

    def test_constant_mapping_zero_sndr(self):
        m = affine_clipped(0.0, 0.7, 0.0, 1.0)
        rep = bussgang(m, GAUSS, 0.01)
        assert rep.alpha == 0.0
        assert rep.sndr == 0.0

    def test_moments_match_quadrature(self):
        rng = np.random.default_rng(20)
        for dist in (GAUSS, UNIF):
            lo, hi = dist.effective_support()
            for _ in range(10):
                m = random_mapping(rng)
                e_g, e_yg, e_gg = raw_output_moments(m, dist)
                q_g = _piecewise_quad(lambda g: m(g) * dist.pdf(g), lo, hi, m)
                q_yg = _piecewise_quad(lambda g: g * m(g) * dist.pdf(g), lo, hi, m)
                q_gg = _piecewise_quad(lambda g: m(g) ** 2 * dist.pdf(g), lo, hi, m)
                assert e_g == pytest.approx(q_g, abs=1e-10)
                assert e_yg == pytest.approx(q_yg, abs=1e-10)
                assert e_gg == pytest.approx(q_gg, abs=1e-10)

    def test_distortion_uncorrelated_with_input(self):
        # the linear part soaks up all correlation: E[gamma * (g - alpha gamma - E g)] = 0
        rng = np.random.default_rng(21)
        for _ in range(20):
            m = random_mapping(rng)
            rep = bussgang(m, GAUSS, 0.01)
            lo, hi = GAUSS.effective_support()
            resid = adaptive_gauss_legendre(
                lambda g: g * (m(g) - rep.alpha * g - rep.mean_out) * GAUSS.pdf(g),
                lo, hi, tol=1e-13,
            )
            assert resid == pytest.approx(0.0, abs=1e-9)

    def test_distortion_power_nonnegative(self):
        rng = np.random.default_rng(22)
        for _ in range(50):
            m = random_mapping(rng)
            for dist in (GAUSS, UNIF):
                assert bussgang(m, dist, 0.05).distortion_power >= 0.0

    def test_sndr_decreases_with_noise(self):
        m = reference_limiter()
        values = [bussgang(m, GAUSS, t).sndr for t in (1e-4, 1e-3, 1e-2, 1e-1, 1.0)]
        assert all(a > b for a, b in zip(values, values[1:]))

    def test_universal_quarter_cap(self):
        # no mapping into [0, 1] can beat DSNR/4
        rng = np.random.default_rng(23)
        for t in (1e-3, 1e-2, 1e-1):
            for _ in range(20):
                m = random_mapping(rng)
                for dist in (GAUSS, UNIF):
                    assert bussgang(m, dist, t).sndr <= 0.25 / t + 1e-9

    def test_rejects_negative_noise(self):
        with pytest.raises(ValueError, match="t"):
            bussgang(reference_limiter(), GAUSS, -0.1)


class TestScaleConsistency:
    def test_physical_equals_normalized(self):
        # SNDR computed in physical units must match the normalized-domain value
        rng = np.random.default_rng(24)
        for _ in range(100):
            m = random_mapping(rng)
            sigma_x = rng.uniform(0.2, 5.0)
            dyn_range = rng.uniform(0.5, 10.0)
            noise_var = rng.uniform(1e-4, 1.0)
            t = noise_var / dyn_range**2
            direct = bussgang(m, GAUSS, t).sndr
            physical = sndr_physical(m, GAUSS, dyn_range, sigma_x, noise_var)
            assert physical == pytest.approx(direct, rel=1e-10)


class TestDbHelpers:
    def test_round_trip(self):
        assert linear_to_db(100.0) == pytest.approx(20.0)
        assert db_to_linear(-20.0) == pytest.approx(0.01)
        assert linear_to_db(db_to_linear(7.3)) == pytest.approx(7.3)

    def test_edge_cases(self):
        assert linear_to_db(0.0) == -math.inf
        assert linear_to_db(math.inf) == math.inf
        with pytest.raises(ValueError):
            linear_to_db(-1.0)

    def test_sndr_db_accepts_report(self):
        rep = bussgang(reference_limiter(), GAUSS, 0.01)
        assert sndr_db(rep) == pytest.approx(linear_to_db(rep.sndr))


class TestDeviceCurve:
    def test_forward_invert_round_trip(self):
        drive = np.linspace(0.0, 1.0, 201)
        curve = DeviceCurve(drive, drive**2)
        y = np.linspace(0.0, 1.0, 57)
        np.testing.assert_allclose(curve.forward(curve.invert(y)), y, atol=1e-6)

    def test_normalizes_output(self):
        drive = np.linspace(0.0, 1.0, 64)
        curve = DeviceCurve(drive, 2.0 + 3.0 * drive)
        assert curve.forward(0.0) == pytest.approx(0.0)
        assert curve.forward(1.0) == pytest.approx(1.0)

    def test_rejects_non_monotone(self):
        drive = np.linspace(0.0, 1.0, 16)
        out = drive.copy()
        out[5] = out[7]
        with pytest.raises(ValueError, match="increasing"):
            DeviceCurve(drive, out)

    def test_unnormalized_must_cover_unit_range(self):
        drive = np.linspace(0.0, 1.0, 16)
        with pytest.raises(ValueError, match="cover"):
            DeviceCurve(drive, 0.5 * drive, normalize=False)

    def test_loader(self):
        text = "drive,output\n" + "\n".join(
            f"{d:.17g},{d**3:.17g}" for d in np.linspace(0, 1, 33)
        )
        curve = load_device_curve(io.StringIO(text))
        # forward and inverse are independent interpolants of 33 samples,
        # so the round trip only holds to interpolation accuracy
        assert curve.forward(curve.invert(0.5)) == pytest.approx(0.5, abs=1e-4)

    def test_loader_bad_header(self):
        with pytest.raises(ValueError, match="header"):
            load_device_curve(io.StringIO("a,b\n0,0\n1,1\n"))


class TestPredistortion:
    def test_identity_device(self):
        drive = np.linspace(0.0, 1.0, 101)
        curve = DeviceCurve(drive, drive)
        m = optimal_limiter(2.0, 0.5)
        table = predistort_curve(curve, m)
        # with an identity device the LUT is the mapping itself
        np.testing.assert_allclose(table.drive, m(table.gamma), atol=1e-9)
        assert table.sup_error < 1e-9

    def test_square_law_device(self):
        drive = np.linspace(0.0, 1.0, 201)
        curve = DeviceCurve(drive, drive**2)
        m = optimal_limiter(2.0, 0.5)
        table = predistort_curve(curve, m, n_points=256)
        assert table.sup_error < 1e-3
        # composed response at a few probes
        probes = np.array([-0.8, -0.2, 0.0, 0.3, 0.9])
        lut_drive = np.interp(probes, table.gamma, table.drive)
        np.testing.assert_allclose(curve.forward(lut_drive), m(probes), atol=1e-3)

    def test_sixty_four_knot_device(self):
        # mildly compressive soft limiter sampled at 64 points
        drive = np.linspace(0.0, 1.0, 64)
        curve = DeviceCurve(drive, np.tanh(2.5 * drive))
        m = optimal_limiter(3.0, 0.4)
        table = predistort_curve(curve, m, n_points=256)
        assert table.sup_error < 1e-3

    def test_write_csv(self):
        drive = np.linspace(0.0, 1.0, 64)
        curve = DeviceCurve(drive, drive)
        table = predistort_curve(curve, optimal_limiter(1.0, 0.5), n_points=16)
        buf = io.StringIO()
        table.write_csv(buf)
        lines = buf.getvalue().splitlines()
        assert lines[0] == "gamma,drive"
        assert len(lines) == 17
