"""Acceptance suite.

Each test prints exactly one PASS/FAIL line (run with ``pytest -s`` to see
them) and enforces a pinned tolerance plus a wall-clock budget.  Together
they check the full contract: closed forms, the general solver, brute-force
and perturbation oracles, the reference-limiter comparison, capacity
bounds, and the Monte-Carlo cross-check.
"""

import math
import time

import numpy as np

from sndropt.capacity import lower_bound, sndr_cap, upper_bound
from sndropt.distributions import (
    SQRT3,
    StandardGaussian,
    TabulatedPdf,
    UniformSymmetric,
)
from sndropt.mappings import bussgang, linear_to_db, reference_limiter
from sndropt.oracles import (
    MISPLACED_LOW,
    SLIVER_HIGH,
    SLIVER_LOW,
    bump_scaling_fit,
    grid_search,
    monte_carlo_sndr,
    sliver_suite,
)
from sndropt.solvers import (
    LimiterParams,
    gaussian_eta_solve,
    optimal_mapping,
    solve_general,
    solve_symmetric,
    uniform_eta_closed_form,
)

GAUSS = StandardGaussian()
UNIF = UniformSymmetric()


def triangular():
    a = math.sqrt(6.0)
    grid = np.linspace(-a, a, 401)
    return TabulatedPdf(grid, (1.0 - np.abs(grid) / a) / a)


def verdict(number, ok, elapsed, budget, detail):
    status = "PASS" if ok and elapsed < budget else "FAIL"
    print(f"ACCEPTANCE {number:02d} {status} ({elapsed:.2f}s/{budget:.0f}s): {detail}")
    assert ok, f"criterion {number}: {detail}"
    assert elapsed < budget, f"criterion {number} exceeded {budget}s ({elapsed:.2f}s)"


def test_criterion_01_uniform_closed_form():
    start = time.perf_counter()
    worst_match = 0.0
    worst_resid = 0.0
    for t in np.logspace(-4, 0, 7):
        eta_cf = uniform_eta_closed_form(t)
        eta_nw = solve_symmetric(UNIF, t).params.eta
        worst_match = max(worst_match, abs(eta_cf - eta_nw))
        resid = eta_cf**2 - (16.0 * SQRT3 * t + 4.0 * SQRT3) * eta_cf + 12.0
        worst_resid = max(worst_resid, abs(resid))
    ok = worst_match < 1e-8 and worst_resid < 1e-9
    verdict(
        1, ok, time.perf_counter() - start, 1.0,
        f"uniform closed form vs scalar solver: max |d_eta| = {worst_match:.2e} "
        f"(tol 1e-8), max quadratic residual = {worst_resid:.2e} (tol 1e-9)",
    )


def test_criterion_02_general_solver_finds_symmetric_optimum():
    start = time.perf_counter()
    worst = 0.0
    for dist in (UNIF, GAUSS):
        for dsnr_db in (0.0, 10.0, 20.0, 30.0, 40.0):
            t = 10.0 ** (-dsnr_db / 10.0)
            out = solve_general(dist, t)
            worst = max(worst, abs(out.params.beta - 0.5))
    ok = worst < 1e-7
    verdict(
        2, ok, time.perf_counter() - start, 10.0,
        f"damped fixed point recovers beta = 1/2 on even densities: "
        f"max |beta - 0.5| = {worst:.2e} (tol 1e-7)",
    )


def test_criterion_03_gaussian_stationarity_residual():
    start = time.perf_counter()
    sqrt_2pi = math.sqrt(2.0 * math.pi)
    worst = 0.0
    for t in (1.0, 0.1, 0.01, 1e-3, 1e-4):
        eta = gaussian_eta_solve(t)
        lhs = eta * (0.5 * math.erfc(eta / (2.0 * math.sqrt(2.0))) + 2.0 * t)
        rhs = (2.0 / sqrt_2pi) * math.exp(-eta * eta / 8.0)
        worst = max(worst, abs(lhs - rhs))
    ok = worst < 1e-10
    verdict(
        3, ok, time.perf_counter() - start, 1.0,
        f"Gaussian scalar root: max stationarity residual = {worst:.2e} (tol 1e-10)",
    )


def test_criterion_04_grid_search_confirms_optimum():
    start = time.perf_counter()
    eta_grid = np.linspace(0.1, 6.0, 128)
    beta_grid = np.linspace(0.0, 1.0, 128)
    d_eta = eta_grid[1] - eta_grid[0]
    d_beta = beta_grid[1] - beta_grid[0]
    worst_excess = -math.inf
    argmax_ok = True
    for dist in (UNIF, GAUSS):
        for dsnr_db in (10.0, 20.0, 30.0):
            t = 10.0 ** (-dsnr_db / 10.0)
            out, _ = optimal_mapping(dist, t)
            best = grid_search(dist, t, eta_grid, beta_grid)
            worst_excess = max(worst_excess, best.sndr - out.sndr_star)
            if abs(best.eta - out.params.eta) > d_eta + 1e-12:
                argmax_ok = False
            if abs(best.beta - out.params.beta) > d_beta + 1e-12:
                argmax_ok = False
    ok = worst_excess <= 1e-9 and argmax_ok
    verdict(
        4, ok, time.perf_counter() - start, 120.0,
        f"128x128 grid never beats the solver (max excess = {worst_excess:.2e}, "
        f"tol 1e-9) and its argmax lands within one cell: {argmax_ok}",
    )


def test_criterion_05_optimal_dominates_reference_limiter():
    start = time.perf_counter()
    g2 = reference_limiter()
    violations = 0
    clear_wins = 0
    total = 0
    for dist in (UNIF, GAUSS):
        for dsnr_db in range(0, 41):
            t = 10.0 ** (-dsnr_db / 10.0)
            opt = optimal_mapping(dist, t)[0].sndr_star
            ref = bussgang(g2, dist, t).sndr
            total += 1
            if opt < ref - 1e-9:
                violations += 1
            if linear_to_db(opt) - linear_to_db(ref) >= 0.01:
                clear_wins += 1
    ok = violations == 0 and clear_wins >= 0.9 * total
    verdict(
        5, ok, time.perf_counter() - start, 30.0,
        f"optimal limiter >= reference everywhere over 0..40 dB "
        f"({violations} violations) and wins by >= 0.01 dB at "
        f"{clear_wins}/{total} points (need >= {int(0.9 * total)})",
    )


def test_criterion_06_universal_quarter_dsnr_ceiling():
    start = time.perf_counter()
    g2 = reference_limiter()
    worst_margin = -math.inf
    for dist in (UNIF, GAUSS, triangular()):
        for dsnr_db in range(0, 41, 2):
            t = 10.0 ** (-dsnr_db / 10.0)
            cap = sndr_cap(t)
            for sndr in (
                optimal_mapping(dist, t)[0].sndr_star,
                bussgang(g2, dist, t).sndr,
            ):
                worst_margin = max(worst_margin, sndr - cap)
    ok = worst_margin <= 1e-9
    verdict(
        6, ok, time.perf_counter() - start, 30.0,
        f"every SNDR stays below DSNR/4: max (SNDR - cap) = {worst_margin:.2e} "
        f"(tol 1e-9)",
    )


def test_criterion_07_capacity_sandwich():
    start = time.perf_counter()
    g2 = reference_limiter()
    ok = True
    for dsnr_db in range(-10, 51):
        t = 10.0 ** (-dsnr_db / 10.0)
        lower_opt = lower_bound(t)
        lower_g2 = lower_bound(t, mapping=g2)
        upper = upper_bound(1.0 / t)
        if not (0.0 <= lower_g2 <= lower_opt + 1e-12 and lower_opt <= upper + 1e-12):
            ok = False
    verdict(
        7, ok, time.perf_counter() - start, 60.0,
        "capacity bounds ordered 0 <= lower(g2) <= lower(opt) <= upper "
        "over -10..50 dB",
    )


def test_criterion_08_sliver_perturbations_never_help():
    start = time.perf_counter()
    worst = -math.inf
    n_reports = 0
    for dist in (UNIF, GAUSS):
        for dsnr_db in (10.0, 30.0):
            t = 10.0 ** (-dsnr_db / 10.0)
            params = optimal_mapping(dist, t)[0].params
            for i, case in enumerate((SLIVER_LOW, SLIVER_HIGH, MISPLACED_LOW)):
                reports = sliver_suite(dist, t, params, case, n_trials=200, seed=100 + i)
                worst = max(worst, max(r.delta for r in reports))
                n_reports += len(reports)
    ok = worst <= 1e-9
    verdict(
        8, ok, time.perf_counter() - start, 60.0,
        f"{n_reports} randomized set perturbations: max SNDR gain = {worst:.2e} "
        f"(tol 1e-9)",
    )


def test_criterion_09_quadratic_loss_scaling():
    start = time.perf_counter()
    scales = (0.04, 0.02, 0.01, 0.005, 0.0025)
    fits = []
    for dist, t in ((GAUSS, 0.01), (UNIF, 0.01)):
        params = optimal_mapping(dist, t)[0].params
        fits.append(bump_scaling_fit(dist, t, params, scales=scales, n_trials=8, seed=9))
    ok = all(f.r_squared > 0.95 and 1.7 < f.slope < 2.3 for f in fits)
    detail = ", ".join(
        f"slope={f.slope:.3f} R^2={f.r_squared:.4f}" for f in fits
    )
    verdict(
        9, ok, time.perf_counter() - start, 60.0,
        f"function-space loss is quadratic in bump size at the optimum: {detail} "
        f"(need slope in (1.7, 2.3), R^2 > 0.95)",
    )


def test_criterion_10_monte_carlo_cross_check():
    start = time.perf_counter()
    g2 = reference_limiter()
    tri = triangular()
    combos = [
        (GAUSS, "optimal", 0.01),
        (GAUSS, "g2", 0.01),
        (UNIF, "optimal", 0.1),
        (UNIF, "g2", 0.001),
        (tri, "optimal", 0.01),
        (tri, "g2", 0.1),
    ]
    worst_z = 0.0
    for dist, which, t in combos:
        if which == "optimal":
            out, mapping = optimal_mapping(dist, t)
            exact = out.sndr_star
        else:
            mapping = g2
            exact = bussgang(g2, dist, t).sndr
        mc = monte_carlo_sndr(mapping, dist, t, n_samples=10**6, seed=2026)
        worst_z = max(worst_z, abs(mc.estimate - exact) / mc.std_error)
    ok = worst_z <= 3.0
    verdict(
        10, ok, time.perf_counter() - start, 60.0,
        f"million-sample Monte Carlo agrees with exact SNDR for 6 combos: "
        f"max |z| = {worst_z:.2f} (need <= 3)",
    )
