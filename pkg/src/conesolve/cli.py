"""Command-line front end.

Subcommands: solve, lambda-range, spectrum, verify.  The pipeline is
grid -> operator -> K / spectrum -> hypothesis checks -> lambda ranges ->
monotone solve -> certificate.  Exit codes are a stable contract:

    0   success (certified nonzero positive solution / nonempty ranges)
    1   a hypothesis check failed (condition (a), (b), (c), supersolution,
        or a monotonicity violation during iteration)
    2   the iteration converged to the trivial solution
    3   some lambda range is empty
    64  usage / malformed config
    65  semantically invalid data (bad coefficients, degenerate grid, ...)
    66  missing input file
    70  internal numerical failure (no convergence, solver failure)

The environment variable CONESOLVE_THREADS caps internal parallelism; the
computation itself is single-threaded, the cap is forwarded to the BLAS
layer.
"""

from __future__ import annotations

import argparse
import os
import sys
from dataclasses import dataclass

import numpy as np

from . import __version__
from .config import Config, load_config
from .errors import (ConesolveError, ConfigError, ExprError,
                     MonotonicityViolation, NoConvergence, SolverFailure)
from .fixedpoint import (Direction, ProblemInstance, certify,
                         check_supersolution, construct_subsolution,
                         monotone_iterate)
from .geometry import build_grid
from .greens import k_one_norm, spectral_radius
from .nonlinearity import (VectorGridFunction, check_growth, check_monotone)
from .operator import assemble
from .ranges import ratio_curve, single_range, system_ranges

EXIT_OK = 0
EXIT_HYPOTHESIS = 1
EXIT_TRIVIAL = 2
EXIT_EMPTY_RANGE = 3
EXIT_USAGE = 64
EXIT_DATA = 65
EXIT_NOINPUT = 66
EXIT_SOFTWARE = 70

DELTA_SWEEP = tuple(10.0 ** k for k in range(4, -3, -1))
SPECTRAL_TOL = 1e-10


def _fmt(x: float) -> str:
    return f"{x:.17g}"


def _write_csv(path, header, rows):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(
                _fmt(v) if isinstance(v, float) else str(v)
                for v in row) + "\n")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise SystemExit(EXIT_USAGE)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="conesolve",
                     description="positive solutions of semilinear elliptic "
                                 "systems by monotone fixed-point iteration")
    parser.add_argument("--version", action="version",
                        version=f"conesolve {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, needs_config=True):
        p.add_argument("--config", required=needs_config,
                       help="path to the config file")
        p.add_argument("--h", type=float, default=None,
                       help="override the mesh step")
        p.add_argument("--tol", type=float, default=None,
                       help="override the iteration tolerance")
        p.add_argument("--max-iter", type=int, default=None,
                       help="override the iteration budget")
        p.add_argument("--seed", type=int, default=None,
                       help="override the sampling seed")
        p.add_argument("--out", default=".",
                       help="directory for output artifacts")
        p.add_argument("--csv", action="store_true",
                       help="write CSV artifacts")

    p = sub.add_parser("solve", help="run the full pipeline and certify a "
                                     "fixed point")
    common(p)
    p = sub.add_parser("lambda-range",
                       help="compute admissible lambda intervals")
    common(p)
    p = sub.add_parser("spectrum",
                       help="principal spectral data of the solution "
                            "operator")
    common(p)
    p = sub.add_parser("verify", help="run the built-in verification suite")
    p.add_argument("--h", type=float, default=None,
                   help="override the mesh step (coarse grids downgrade "
                        "tolerance failures to SKIP)")
    p.add_argument("--list", action="store_true",
                   help="list the criteria without running them")
    return parser


def _apply_overrides(cfg: Config, args) -> Config:
    if args.h is not None:
        cfg.h = args.h
    if getattr(args, "tol", None) is not None:
        cfg.tol = args.tol
    if getattr(args, "max_iter", None) is not None:
        cfg.max_iter = args.max_iter
    if getattr(args, "seed", None) is not None:
        cfg.seed = args.seed
    return cfg


@dataclass
class Pipeline:
    cfg: Config
    grid: object
    op: object
    nl: object
    k1: object
    k1_norm: float
    spectrum: object


def build_pipeline(cfg: Config) -> Pipeline:
    grid = build_grid(cfg.domain, cfg.h)
    op = assemble(grid, cfg.coefficients, cfg.bc)
    k1, k1_norm = k_one_norm(op)
    spectrum = spectral_radius(op, tol=SPECTRAL_TOL, max_iter=cfg.max_iter)
    return Pipeline(cfg, grid, op, cfg.nonlinearity(), k1, k1_norm, spectrum)


def _growth_parameters(pipe: Pipeline):
    """Resolve (delta, rho0, report): use the configured values when given,
    otherwise sweep delta over decades (largest validated first) and rho0
    geometrically downward."""
    cfg = pipe.cfg
    nl = pipe.nl
    rho_min = min(nl.box)

    def rho0_candidates():
        if cfg.rho0 is not None:
            return [cfg.rho0]
        return [rho_min * 0.5 ** k for k in range(1, 21)]

    deltas = [cfg.delta] if cfg.delta is not None else list(DELTA_SWEEP)
    for delta in deltas:
        for rho0 in rho0_candidates():
            report = check_growth(nl, cfg.i0, delta, rho0, cfg.samples,
                                  cfg.seed, cfg.domain)
            if report.passed:
                return delta, rho0, report
    return None, None, report


def _compute_ranges(pipe: Pipeline, delta: float, rho0: float | None = None):
    cfg = pipe.cfg
    if cfg.n == 1:
        rng = single_range(pipe.nl, cfg.rho[0], delta,
                           rho0 or cfg.rho0 or min(cfg.rho) / 2,
                           pipe.k1_norm, pipe.spectrum.mu1,
                           grid_points=cfg.grid_points, grid=pipe.grid)
        return [rng]
    return system_ranges(pipe.nl, cfg.rho, cfg.i0, delta, pipe.k1_norm,
                         pipe.spectrum.mu1, pipe.grid,
                         m_safety=cfg.m_safety)


def _choose_beta(pipe: Pipeline) -> list:
    """Supersolution level: the box top for systems; for a single equation
    the sampled maximizer of s / (M(s) |K1|), which leaves the largest
    margin lambda M(beta) |K1| < beta when lambda is admissible."""
    cfg = pipe.cfg
    if cfg.n > 1:
        return list(cfg.rho)
    lam = cfg.lambdas[0]
    s, ratios = ratio_curve(pipe.nl, cfg.rho[0], pipe.k1_norm,
                            cfg.grid_points, pipe.grid)
    margins = s * (1.0 - lam / ratios)
    k = int(np.argmax(margins))
    if margins[k] <= 0:
        return list(cfg.rho)     # no admissible level; checked downstream
    return [float(s[k])]


def _write_solution_csv(path, u):
    grid = u.grid
    header = ["x1", "x2"] + [f"u{i + 1}" for i in range(u.n)]
    stacked = u.stack()
    rows = [[float(grid.xs[k]), float(grid.ys[k])]
            + [float(stacked[i, k]) for i in range(u.n)]
            for k in range(grid.interior_count)]
    _write_csv(path, header, rows)


def cmd_solve(cfg: Config, out_dir: str, want_csv: bool) -> int:
    if cfg.lambdas is None:
        print("error: 'solve' needs lambda1..lambdan in the config",
              file=sys.stderr)
        return EXIT_USAGE
    os.makedirs(out_dir, exist_ok=True)
    pipe = build_pipeline(cfg)
    print(f"grid: {cfg.domain} h={cfg.h} "
          f"({pipe.grid.interior_count} interior nodes)")
    print(f"|K(1)| = {pipe.k1_norm:.6g}, mu1 = {pipe.spectrum.mu1:.6g}")
    if not pipe.op.diagnostics.is_m_matrix:
        print("warning: operator matrix is not an M-matrix; positivity of "
              "the iteration is not guaranteed")

    checks = []
    for i in range(cfg.n):
        rep = check_monotone(pipe.nl, i, cfg.samples, cfg.seed + i,
                             cfg.domain)
        checks.append(rep)
        print(rep.to_text())
        if not rep.passed:
            _write_checks(out_dir, checks)
            print(f"hypothesis (a) fails for f{i + 1}; aborting")
            return EXIT_HYPOTHESIS

    delta, rho0, growth_rep = _growth_parameters(pipe)
    checks.append(growth_rep)
    print(growth_rep.to_text())
    if delta is None:
        _write_checks(out_dir, checks)
        print("hypothesis (b) fails: no validated (delta, rho0); aborting")
        return EXIT_HYPOTHESIS
    print(f"growth parameters: delta = {delta:g}, rho0 = {rho0:g}")

    try:
        ranges = _compute_ranges(pipe, delta, rho0)
    except ConesolveError as err:
        _write_checks(out_dir, checks)
        print(f"hypothesis (c) fails: {err}")
        return EXIT_HYPOTHESIS
    for rng in ranges:
        print(rng.describe())
        lam = cfg.lambdas[rng.component]
        if not rng.contains(lam):
            print(f"warning: lambda{rng.component + 1} = {lam:g} outside "
                  "the admissible interval; existence is not guaranteed "
                  "(the bound is sufficient, not necessary)")

    problem = ProblemInstance(pipe.op, pipe.nl, tuple(cfg.lambdas))
    beta_levels = _choose_beta(pipe)
    beta = VectorGridFunction.constant(pipe.grid, beta_levels)
    ok, margin = check_supersolution(problem, beta)
    print(f"supersolution check at beta = "
          f"({', '.join(f'{b:.6g}' for b in beta_levels)}): "
          f"margin = {margin:.6g}")
    if not ok:
        _write_checks(out_dir, checks)
        print("supersolution condition T beta <= beta fails; aborting")
        return EXIT_HYPOTHESIS

    # keep the subsolution below the supersolution level so the two
    # iterations bracket the same interval
    alpha = construct_subsolution(problem, pipe.spectrum, cfg.i0, delta,
                                  min(rho0, 0.5 * min(beta_levels)))
    if alpha is None:
        print("note: no subsolution found by the eigenfunction sweep; the "
              "iteration may reach the trivial fixed point")
    else:
        print(f"subsolution found with amplitude {alpha.norm():.3e}")

    try:
        report = monotone_iterate(problem, beta, Direction.FROM_ABOVE,
                                  tol=cfg.tol, max_iter=cfg.max_iter)
    except MonotonicityViolation as err:
        _write_checks(out_dir, checks)
        print(f"iteration aborted: {err}")
        return EXIT_HYPOTHESIS
    print(report.to_text())

    if alpha is not None:
        try:
            low = monotone_iterate(problem, alpha, Direction.FROM_BELOW,
                                   tol=cfg.tol, max_iter=cfg.max_iter)
        except (MonotonicityViolation, NoConvergence) as err:
            print(f"warning: lower iteration did not complete: {err}")
        else:
            if not low.solution.le(report.solution, 1e-9):
                print("warning: smallest fixed point exceeds greatest "
                      "(numerical bracket inversion)")
            else:
                print(f"bracket: smallest fixed point norm "
                      f"{low.solution.norm():.6g} <= greatest "
                      f"{report.solution.norm():.6g}")
            if want_csv:
                _write_solution_csv(
                    os.path.join(out_dir, "solution_lower.csv"),
                    low.solution)

    cert = certify(problem, report.solution, tol=cfg.tol)
    print(cert.to_text())

    _write_checks(out_dir, checks)
    _write_solution_csv(os.path.join(out_dir, "solution.csv"),
                        report.solution)
    with open(os.path.join(out_dir, "certificate.txt"), "w",
              encoding="utf-8") as fh:
        fh.write(cert.to_text() + "\n")
    with open(os.path.join(out_dir, "iteration_report.txt"), "w",
              encoding="utf-8") as fh:
        fh.write(report.to_text() + "\n")
    _write_csv(os.path.join(out_dir, "iterations.csv"),
               ["iteration", "norm"],
               [[k, float(v)] for k, v in enumerate(report.history)])

    if report.converged_to_zero or (cert.residual <= cfg.tol
                                    and not cert.nonzero):
        print("no nonzero solution found in bracket (the iteration from "
              "above converged to zero)")
        return EXIT_TRIVIAL
    if not cert.certified:
        print("run completed without a certified nonzero solution")
        return EXIT_SOFTWARE
    return EXIT_OK


def _write_checks(out_dir, checks):
    _write_csv(os.path.join(out_dir, "checks.csv"),
               ["condition", "result", "witness"],
               [rep.csv_row() for rep in checks])


def cmd_lambda_range(cfg: Config, out_dir: str, want_csv: bool) -> int:
    os.makedirs(out_dir, exist_ok=True)
    pipe = build_pipeline(cfg)
    print(f"|K(1)| = {pipe.k1_norm:.6g}, mu1 = {pipe.spectrum.mu1:.6g}")
    delta, rho0, growth_rep = _growth_parameters(pipe)
    if delta is None:
        print(growth_rep.to_text())
        print("warning: no validated growth constant; using delta = 1 "
              "without certification")
        delta = 1.0
    else:
        print(f"growth parameters: delta = {delta:g}, rho0 = {rho0:g} "
              "(validated by sampling)")
    ranges = _compute_ranges(pipe, delta)
    for rng in ranges:
        print(rng.describe())
    if want_csv:
        _write_csv(os.path.join(out_dir, "ranges.csv"),
                   ["component", "lower", "upper", "empty", "m_value",
                    "k1_norm", "mu1", "delta"],
                   [[rng.component + 1, float(rng.lower), float(rng.upper),
                     int(rng.empty), float(rng.provenance.m_value),
                     float(rng.provenance.k1_norm),
                     "" if rng.provenance.mu1 is None
                     else float(rng.provenance.mu1),
                     "" if rng.provenance.delta is None
                     else float(rng.provenance.delta)]
                    for rng in ranges])
        if cfg.n == 1:
            s, ratios = ratio_curve(pipe.nl, cfg.rho[0], pipe.k1_norm,
                                    cfg.grid_points, pipe.grid)
            _write_csv(os.path.join(out_dir, "ratio_curve.csv"),
                       ["s", "ratio"],
                       [[float(a), float(b)] for a, b in zip(s, ratios)])
    if any(rng.empty for rng in ranges):
        print("at least one admissible interval is empty")
        return EXIT_EMPTY_RANGE
    return EXIT_OK


def cmd_spectrum(cfg: Config, out_dir: str, want_csv: bool) -> int:
    os.makedirs(out_dir, exist_ok=True)
    grid = build_grid(cfg.domain, cfg.h)
    op = assemble(grid, cfg.coefficients, cfg.bc)
    est = spectral_radius(op, tol=SPECTRAL_TOL, max_iter=cfg.max_iter)
    print(f"r(K)       = {_fmt(est.r)}")
    print(f"mu1        = {_fmt(est.mu1)}")
    print(f"iterations = {est.iterations}")
    print(f"residual   = {est.residual:.3e}")
    if want_csv:
        phi = est.eigenfunction
        _write_csv(os.path.join(out_dir, "eigenfunction.csv"),
                   ["x1", "x2", "phi"],
                   [[float(grid.xs[k]), float(grid.ys[k]),
                     float(phi.values[k])]
                    for k in range(grid.interior_count)])
    return EXIT_OK


def cmd_verify(args) -> int:
    from . import verify as verification
    if args.list:
        for crit in verification.CRITERIA:
            print(f"{crit.cid:>2}  {crit.title}")
        return EXIT_OK
    results = verification.run_all(h_override=args.h)
    failed = False
    for res in results:
        print(res.line())
        failed = failed or res.status == "FAIL"
    return EXIT_HYPOTHESIS if failed else EXIT_OK


def _cap_threads() -> int | None:
    raw = os.environ.get("CONESOLVE_THREADS")
    if raw is None:
        return None
    try:
        cap = int(raw)
        if cap < 1:
            raise ValueError
    except ValueError:
        print(f"error: CONESOLVE_THREADS must be a positive integer, "
              f"got {raw!r}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)
    for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS",
                "MKL_NUM_THREADS"):
        os.environ.setdefault(var, str(cap))
    return cap


def main(argv=None) -> int:
    _cap_threads()
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if exc.code is not None else EXIT_OK

    try:
        if args.command == "verify":
            return cmd_verify(args)
        try:
            cfg = load_config(args.config)
        except FileNotFoundError:
            print(f"error: config file not found: {args.config}",
                  file=sys.stderr)
            return EXIT_NOINPUT
        except OSError as err:
            print(f"error: cannot read config: {err}", file=sys.stderr)
            return EXIT_NOINPUT
        cfg = _apply_overrides(cfg, args)
        if args.command == "solve":
            return cmd_solve(cfg, args.out, args.csv)
        if args.command == "lambda-range":
            return cmd_lambda_range(cfg, args.out, args.csv)
        if args.command == "spectrum":
            return cmd_spectrum(cfg, args.out, args.csv)
        raise AssertionError(f"unhandled command {args.command}")
    except (ConfigError, ExprError) as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_USAGE
    except (NoConvergence, SolverFailure) as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_SOFTWARE
    except ConesolveError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
