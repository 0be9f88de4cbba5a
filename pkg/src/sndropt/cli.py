"""Command-line interface.

Subcommands
-----------
solve       optimal limiter parameters at one operating point
sweep       CSV sweep of optimal and reference limiters over DSNR
sndr        Bussgang SNDR of a chosen mapping at one operating point
capacity    capacity bound table (or a single point)
predistort  gamma -> drive lookup table through a measured device curve
oracle      run the verification oracles against the solver's optimum

Exit codes: 0 success, 2 solver failure, 3 bad input, 4 oracle assertion
failure.  All CSV output is byte-deterministic for fixed flags and seed.
"""

from __future__ import annotations

import argparse
import contextlib
import sys

import numpy as np

from .capacity import lower_bound, sndr_cap, upper_bound
from .distributions import InputDistribution, StandardGaussian, make_distribution
from .mappings import (
    NonlinearMapping,
    bussgang,
    db_to_linear,
    linear_to_db,
    load_device_curve,
    predistort_curve,
    reference_limiter,
    tabulated_mapping,
)
from .oracles import (
    MISPLACED_LOW,
    SLIVER_HIGH,
    SLIVER_LOW,
    OracleViolation,
    PerturbationReport,
    grid_search,
    monte_carlo_sndr,
    perturb_function_space,
    sliver_suite,
    write_reports_csv,
)
from .solvers import (
    BRANCH_NEGATIVE,
    BRANCH_POSITIVE,
    ConvergenceError,
    optimal_mapping,
)

EXIT_OK = 0
EXIT_SOLVER = 2
EXIT_INPUT = 3
EXIT_ORACLE = 4

#: fraction of sweep points allowed to fail before the whole command does
SWEEP_FAILURE_BUDGET = 0.10


def _fmt(value: float) -> str:
    if value != value:  # NaN -> empty cell
        return ""
    return f"{value:.12g}"


def _add_common(parser: argparse.ArgumentParser, dist: bool = True) -> None:
    if dist:
        parser.add_argument(
            "--dist",
            default="gaussian",
            help="input density: uniform | gaussian | file:<path> (default gaussian)",
        )
        parser.add_argument(
            "--renormalize",
            action="store_true",
            help="standardize a tabulated density instead of rejecting it",
        )
    parser.add_argument(
        "--branch",
        choices=[BRANCH_POSITIVE, BRANCH_NEGATIVE],
        default=BRANCH_POSITIVE,
        help="rising (positive) or falling (negative) ramp",
    )
    parser.add_argument("--out", default=None, help="output file (default stdout)")


def _resolve_dist(args) -> InputDistribution:
    return make_distribution(args.dist, renormalize=getattr(args, "renormalize", False))


@contextlib.contextmanager
def _open_out(path):
    if path is None:
        yield sys.stdout
    else:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            yield fh


def _dsnr_points(start: float, stop: float, step: float) -> list[float]:
    if step <= 0.0:
        raise ValueError(f"step must be positive, got {step}")
    if stop < start:
        raise ValueError(f"need stop >= start, got [{start}, {stop}]")
    count = int(round((stop - start) / step)) + 1
    return [start + i * step for i in range(count)]


# -- solve -------------------------------------------------------------------


def cmd_solve(args) -> int:
    dist = _resolve_dist(args)
    t = db_to_linear(-args.dsnr_db)
    outcome, _ = optimal_mapping(dist, t, branch=args.branch)
    p = outcome.params
    with _open_out(args.out) as fh:
        fh.write(f"dist: {dist.kind}\n")
        fh.write(f"dsnr_db: {_fmt(args.dsnr_db)}\n")
        fh.write(f"t: {_fmt(t)}\n")
        fh.write(f"branch: {outcome.branch}\n")
        fh.write(f"eta_star: {_fmt(p.eta)}\n")
        fh.write(f"beta_star: {_fmt(p.beta)}\n")
        fh.write(f"lower_knee: {_fmt(p.lower_knee)}\n")
        fh.write(f"upper_knee: {_fmt(p.upper_knee)}\n")
        fh.write(f"sndr: {_fmt(outcome.sndr_star)}\n")
        fh.write(f"sndr_db: {_fmt(linear_to_db(outcome.sndr_star))}\n")
        fh.write(f"residual: {_fmt(outcome.residual)}\n")
        fh.write(f"iterations: {outcome.iterations}\n")
        fh.write(f"fixed_points: {len(outcome.fixed_points)}\n")
    return EXIT_OK


# -- sweep -------------------------------------------------------------------


def cmd_sweep(args) -> int:
    dist = _resolve_dist(args)
    points = _dsnr_points(args.start, args.stop, args.step)
    g2 = reference_limiter()
    gaussian = StandardGaussian()
    rows = []
    failures = 0
    for dsnr_db in points:
        t = db_to_linear(-dsnr_db)
        sndr_g2 = bussgang(g2, dist, t).sndr
        cap_upper = upper_bound(1.0 / t, log_base=args.log_base)
        try:
            outcome, mapping = optimal_mapping(dist, t, branch=args.branch)
            sndr_opt = outcome.sndr_star
            ceiling = sndr_cap(t) + 1e-9
            if sndr_opt > ceiling or sndr_g2 > ceiling:
                raise OracleViolation(
                    f"SNDR exceeds the DSNR/4 ceiling at {dsnr_db} dB"
                )
            if isinstance(dist, StandardGaussian):
                gauss_mapping = mapping
            else:
                gauss_mapping = optimal_mapping(gaussian, t, branch=args.branch)[1]
            cap_lower = lower_bound(t, mapping=gauss_mapping, log_base=args.log_base)
            if cap_lower > cap_upper + 1e-9:
                raise OracleViolation(
                    f"capacity bounds cross at {dsnr_db} dB: {cap_lower} > {cap_upper}"
                )
            rows.append(
                (
                    _fmt(dsnr_db),
                    _fmt(outcome.params.eta),
                    _fmt(outcome.params.beta),
                    _fmt(linear_to_db(sndr_opt)),
                    _fmt(linear_to_db(sndr_g2)),
                    _fmt(cap_lower),
                    _fmt(cap_upper),
                )
            )
        except (ConvergenceError, ValueError) as exc:
            failures += 1
            print(f"warning: {dsnr_db} dB point failed: {exc}", file=sys.stderr)
            rows.append(
                (_fmt(dsnr_db), "", "", "", _fmt(linear_to_db(sndr_g2)), "", _fmt(cap_upper))
            )
    if failures > SWEEP_FAILURE_BUDGET * len(points):
        print(
            f"error: {failures}/{len(points)} sweep points failed to solve",
            file=sys.stderr,
        )
        return EXIT_SOLVER
    with _open_out(args.out) as fh:
        fh.write("dsnr_db,eta_star,beta_star,sndr_opt_db,sndr_g2_db,cap_lower,cap_upper\n")
        for row in rows:
            fh.write(",".join(row) + "\n")
    return EXIT_OK


# -- sndr --------------------------------------------------------------------


def _resolve_mapping(spec: str, dist: InputDistribution, t: float, branch: str) -> NonlinearMapping:
    if spec == "optimal":
        return optimal_mapping(dist, t, branch=branch)[1]
    if spec == "g2":
        return reference_limiter()
    if spec.startswith("file:"):
        path = spec[len("file:"):]
        knots = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
        return tabulated_mapping(knots)
    raise ValueError(
        f"unknown mapping {spec!r}; expected 'optimal', 'g2' or 'file:<path>'"
    )


def cmd_sndr(args) -> int:
    dist = _resolve_dist(args)
    t = db_to_linear(-args.dsnr_db)
    mapping = _resolve_mapping(args.mapping, dist, t, args.branch)
    report = bussgang(mapping, dist, t)
    with _open_out(args.out) as fh:
        fh.write(f"dist: {dist.kind}\n")
        fh.write(f"mapping: {args.mapping}\n")
        fh.write(f"dsnr_db: {_fmt(args.dsnr_db)}\n")
        fh.write(f"alpha: {_fmt(report.alpha)}\n")
        fh.write(f"mean_out: {_fmt(report.mean_out)}\n")
        fh.write(f"distortion_power: {_fmt(report.distortion_power)}\n")
        fh.write(f"sndr: {_fmt(report.sndr)}\n")
        fh.write(f"sndr_db: {_fmt(linear_to_db(report.sndr))}\n")
    return EXIT_OK


# -- capacity ------------------------------------------------------------------


def cmd_capacity(args) -> int:
    g2 = reference_limiter()
    gaussian = StandardGaussian()
    if args.dsnr_db is not None:
        points = [args.dsnr_db]
    else:
        points = _dsnr_points(args.start, args.stop, args.step)
    with _open_out(args.out) as fh:
        fh.write("dsnr_db,cap_lower,cap_lower_g2,cap_upper\n")
        for dsnr_db in points:
            t = db_to_linear(-dsnr_db)
            mapping = optimal_mapping(gaussian, t)[1]
            lower_opt = lower_bound(t, mapping=mapping, log_base=args.log_base)
            lower_g2 = lower_bound(t, mapping=g2, log_base=args.log_base)
            upper = upper_bound(1.0 / t, log_base=args.log_base)
            if lower_opt > upper + 1e-9 or lower_g2 > lower_opt + 1e-9:
                print(
                    f"error: capacity bound ordering violated at {dsnr_db} dB",
                    file=sys.stderr,
                )
                return EXIT_ORACLE
            fh.write(
                f"{_fmt(dsnr_db)},{_fmt(lower_opt)},{_fmt(lower_g2)},{_fmt(upper)}\n"
            )
    return EXIT_OK


# -- predistort ----------------------------------------------------------------


def cmd_predistort(args) -> int:
    dist = _resolve_dist(args)
    t = db_to_linear(-args.dsnr_db)
    device = load_device_curve(args.device)
    _, mapping = optimal_mapping(dist, t, branch=args.branch)
    table = predistort_curve(device, mapping, n_points=args.n_points)
    with _open_out(args.out) as fh:
        table.write_csv(fh)
    print(f"composition sup-error: {table.sup_error:.3e}", file=sys.stderr)
    return EXIT_OK


# -- oracle --------------------------------------------------------------------


def _oracle_reports(dist, t, branch, suite, seed) -> list[PerturbationReport]:
    outcome, mapping = optimal_mapping(dist, t, branch=branch)
    params = outcome.params
    baseline = outcome.sndr_star
    reports: list[PerturbationReport] = []

    if suite in ("grid", "all"):
        if branch == BRANCH_POSITIVE:
            eta_grid = np.linspace(0.1, 6.0, 128)
        else:
            eta_grid = np.linspace(-6.0, -0.1, 128)
        beta_grid = np.linspace(0.0, 1.0, 128)
        best = grid_search(dist, t, eta_grid, beta_grid)
        reports.append(
            PerturbationReport(
                kind="grid",
                magnitude=float(eta_grid.size),
                baseline_sndr=baseline,
                perturbed_sndr=best.sndr,
            )
        )
    if suite in ("perturb", "all"):
        for i, case in enumerate((SLIVER_LOW, SLIVER_HIGH, MISPLACED_LOW)):
            reports.extend(
                sliver_suite(dist, t, params, case, n_trials=200, seed=seed + i)
            )
        reports.extend(
            perturb_function_space(dist, t, params, n_trials=8, bump_scale=0.02, seed=seed + 3)
        )
    if suite in ("montecarlo", "all"):
        mc = monte_carlo_sndr(mapping, dist, t, n_samples=10**6, seed=seed)
        reports.append(
            PerturbationReport(
                kind="montecarlo",
                magnitude=3.0 * mc.std_error,
                baseline_sndr=baseline,
                perturbed_sndr=mc.estimate,
            )
        )
    return reports


def _oracle_violations(reports) -> list[PerturbationReport]:
    bad = []
    for r in reports:
        if r.kind == "montecarlo":
            if abs(r.delta) > r.magnitude:
                bad.append(r)
        elif r.delta > 1e-9:
            bad.append(r)
    return bad


def cmd_oracle(args) -> int:
    dist = _resolve_dist(args)
    t = db_to_linear(-args.dsnr_db)
    reports = _oracle_reports(dist, t, args.branch, args.suite, args.seed)
    with _open_out(args.out) as fh:
        write_reports_csv(reports, fh)
    violations = _oracle_violations(reports)
    if violations:
        print(f"error: {len(violations)} oracle violations", file=sys.stderr)
        for r in violations:
            print(
                f"  {r.kind}: baseline {r.baseline_sndr:.12g} -> "
                f"perturbed {r.perturbed_sndr:.12g} (delta {r.delta:.3e})",
                file=sys.stderr,
            )
        return EXIT_ORACLE
    return EXIT_OK


# -- parser --------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sndropt",
        description="SNDR-optimal limiter design for range-constrained channels",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="optimal limiter at one operating point")
    _add_common(p)
    p.add_argument("--dsnr-db", type=float, required=True, help="A^2/sigma_v^2 in dB")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("sweep", help="sweep DSNR and emit a CSV table")
    _add_common(p)
    p.add_argument("--start", type=float, default=0.0, help="first DSNR in dB")
    p.add_argument("--stop", type=float, default=40.0, help="last DSNR in dB")
    p.add_argument("--step", type=float, default=1.0, help="DSNR step in dB")
    p.add_argument("--log-base", choices=["nats", "bits"], default="nats")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("sndr", help="SNDR of one mapping at one operating point")
    _add_common(p)
    p.add_argument("--dsnr-db", type=float, required=True)
    p.add_argument(
        "--mapping",
        default="optimal",
        help="optimal | g2 | file:<knots.csv> (default optimal)",
    )
    p.set_defaults(func=cmd_sndr)

    p = sub.add_parser("capacity", help="capacity bound table for Gaussian input")
    _add_common(p, dist=False)
    p.add_argument("--dsnr-db", type=float, default=None, help="single point instead of a table")
    p.add_argument("--start", type=float, default=-10.0)
    p.add_argument("--stop", type=float, default=50.0)
    p.add_argument("--step", type=float, default=1.0)
    p.add_argument("--log-base", choices=["nats", "bits"], default="nats")
    p.set_defaults(func=cmd_capacity)

    p = sub.add_parser("predistort", help="gamma -> drive table through a device curve")
    _add_common(p)
    p.add_argument("--dsnr-db", type=float, required=True)
    p.add_argument("--device", required=True, help="CSV with header drive,output")
    p.add_argument("--n-points", type=int, default=256)
    p.set_defaults(func=cmd_predistort)

    p = sub.add_parser("oracle", help="verify the optimum with brute-force oracles")
    _add_common(p)
    p.add_argument("--dsnr-db", type=float, required=True)
    p.add_argument(
        "--suite",
        choices=["grid", "perturb", "montecarlo", "all"],
        default="all",
    )
    p.add_argument("--seed", type=int, default=0, help="seed for randomized checks")
    p.set_defaults(func=cmd_oracle)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except OracleViolation as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ORACLE
    except ConvergenceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        for p in exc.fixed_points:
            print(f"  fixed point: eta={p.eta:.12g} beta={p.beta:.12g}", file=sys.stderr)
        return EXIT_SOLVER
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
