"""Command-line interface.

Exit codes: 0 success, 1 validation or usage error, 2 numerical failure,
3 acceptance failure.
"""

from __future__ import annotations

import argparse
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from ._validation import ConvergenceError, ValidationError, check_game_size, check_int, parse_chip_list
from .absorption import absorption_row, face_hit_probability
from .analysis import fit_power_law, fit_table_rows, ratio_report, successive_exponents
from .io import cached_perron_frobenius, phi0_rows, read_csv, write_csv, write_json
from .kernel import build_killed_kernel
from .montecarlo import DEFAULT_CHUNK_SIZE, simulate
from .profile import ProfileConstants, phi0_formula_k3, phi0_formula_tau, read_constants, write_constants
from .simplex import ChipConfig, enumerate_interior
from .spectral import DEFAULT_MAX_ITER, DEFAULT_TOL, center_value
from .sphereig import TRIANGLES, derive_alpha, dirichlet_lambda, write_eigenfunction_csv, write_mesh

EXIT_OK, EXIT_VALIDATION, EXIT_NUMERICAL, EXIT_ACCEPTANCE = 0, 1, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise ValidationError(message)


def _default_cache_dir() -> Path:
    return Path(os.environ.get("RUINLAB_CACHE_DIR", Path.home() / ".cache" / "ruinlab"))


def _threads(value: int | None) -> int:
    if value is None:
        env = os.environ.get("RUINLAB_THREADS")
        value = int(env) if env else (os.cpu_count() or 1)
    return check_int(value, "threads", minimum=1)


def _constants(args) -> ProfileConstants:
    if args.constants:
        return read_constants(args.constants)
    return ProfileConstants.default(4)


def _out(args, name: str) -> Path | None:
    if args.out_dir is None:
        return None
    d = Path(args.out_dir)
    d.mkdir(parents=True, exist_ok=True)
    return d / name


def _manifest(args, results: dict) -> None:
    config = {k: v for k, v in vars(args).items() if k != "func"}
    payload = {
        "command": args.command,
        "version": __version__,
        "config": config,
        "constants": _constants(args).as_dict(),
        "results": results,
    }
    path = _out(args, "manifest.json")
    if path is not None:
        write_json(path, payload)


def _game(args, need_n: bool = True) -> tuple[int, int]:
    if args.k is None or (need_n and args.n is None):
        raise ValidationError("--k and --n are required")
    return check_game_size(args.k, args.n)


def _start(args) -> ChipConfig:
    if not args.start:
        raise ValidationError("--start is required")
    s = ChipConfig(parse_chip_list(args.start))
    if args.k is not None and args.k != s.k:
        raise ValidationError(f"--start has {s.k} players but --k is {args.k}")
    if args.n is not None and args.n != s.N:
        raise ValidationError(f"--start sums to {s.N} but --n is {args.n}")
    if not s.is_interior:
        raise ValidationError(f"start not interior: {','.join(map(str, s.chips))}")
    return s


def cmd_enumerate(args) -> int:
    k, N = _game(args)
    index = enumerate_interior(k, N)
    cols = ["index"] + [f"x{i}" for i in range(1, k + 1)]
    write_csv(_out(args, "interior.csv"), "interior", cols, ((i, *map(int, x)) for i, x in enumerate(index.interior)))
    write_csv(_out(args, "boundary.csv"), "boundary", cols, ((i, *map(int, x)) for i, x in enumerate(index.boundary)))
    print(f"k={k} N={N} interior={index.interior_count} boundary={index.boundary_count}")
    _manifest(args, {"interior_count": index.interior_count, "boundary_count": index.boundary_count})
    return EXIT_OK


def cmd_eigen(args) -> int:
    k, N = _game(args)
    index = enumerate_interior(k, N)
    op = build_killed_kernel(index)
    cache_dir = None if args.no_cache else Path(args.cache_dir or _default_cache_dir())
    pair = cached_perron_frobenius(op, tol=args.tol, max_iter=args.max_iter, cache_dir=cache_dir)
    results = {
        "beta0": pair.beta0,
        "gap": pair.gap,
        "residual": pair.residual,
        "iterations": pair.iterations,
        "cache_hit": pair.cache_hit,
        "center_value": center_value(pair, index),
    }
    phi = {tuple(int(c) for c in s): float(v) for s, v in zip(index.interior, pair.phi0)}
    if k == 3 and N >= 3 and pair.beta0 > 0:
        results["formula_ratio"] = ratio_report(phi, phi0_formula_k3).as_dict()
    elif k == 4 and pair.beta0 > 0:
        const = _constants(args)
        results["formula_ratio"] = ratio_report(
            phi, lambda s: phi0_formula_tau(s, const), lambda s: s[3] >= N / 4, label="x4 >= N/4"
        ).as_dict()
    cols = ["index"] + [f"x{i}" for i in range(1, k + 1)] + ["phi0"]
    write_csv(_out(args, "phi0.csv"), "phi0", cols, phi0_rows(pair, index))
    print(f"beta0={pair.beta0!r} gap={pair.gap!r} iterations={pair.iterations} cache_hit={pair.cache_hit}")
    _manifest(args, results)
    return EXIT_OK


def cmd_absorb(args) -> int:
    s = _start(args)
    index = enumerate_interior(s.k, s.N)
    row = absorption_row(build_killed_kernel(index), s, tol=args.tol, method=args.method)
    faces = [face_hit_probability(row, i) for i in range(1, s.k + 1)]
    cols = [f"z{i}" for i in range(1, s.k + 1)] + ["probability"]
    write_csv(_out(args, "absorption.csv"), "absorption", cols,
              ((*map(int, z), float(p)) for z, p in zip(index.boundary, row.probabilities)))
    write_csv(_out(args, "faces.csv"), "faces", ["player", "probability"], enumerate(faces, start=1))
    for z, p in zip(index.boundary, row.probabilities):
        print(f"P({','.join(map(str, z))}) = {p:.12g}")
    for i, p in enumerate(faces, start=1):
        print(f"face {i}: {p:.12g}")
    _manifest(args, {"faces": faces, "total": row.total, "solver_residual": row.solver_residual,
                     "flushed": row.flushed})
    return EXIT_OK


def cmd_simulate(args) -> int:
    s = _start(args)
    runs = check_int(args.runs, "runs", minimum=1)
    threads = _threads(args.threads)
    t0 = time.perf_counter()
    stats = simulate(s, runs, seed=args.seed, chunk_size=args.chunk_size, n_jobs=threads)
    wall = time.perf_counter() - t0
    print(f"simulated {runs} games in {wall:.2f}s", file=sys.stderr)

    exact = None
    if args.compare:
        exact = absorption_row(build_killed_kernel(enumerate_interior(s.k, s.N)), s).as_dict()
    cols = [f"z{i}" for i in range(1, s.k + 1)] + ["count", "frequency"]
    rows = []
    worst = 0.0
    for z in sorted(set(stats.boundary_counts) | set(exact or {})):
        c = stats.boundary_counts.get(z, 0)
        rows.append((*z, c, c / runs))
        if exact is not None and exact[z] > 0:
            p = exact[z]
            worst = max(worst, abs(c / runs - p) / np.sqrt(p * (1 - p) / runs))
    write_csv(_out(args, "frequencies.csv"), "mc-frequencies", cols, rows)
    for row in rows:
        print(f"{','.join(map(str, row[:s.k]))}: {row[-2]} ({row[-1]:.6g})")
    results = {"seed": stats.seed, "runs": runs, "face_counts": stats.face_counts.tolist(),
               "mean_tau": stats.mean_tau, "wall_time_s": wall, "threads": threads}
    if exact is not None:
        results["max_sigma_vs_exact"] = float(worst)
        print(f"max deviation from exact law: {worst:.3f} sigma")
    _manifest(args, results)
    return EXIT_OK


def cmd_sphere_eig(args) -> int:
    if args.triangle not in TRIANGLES:
        raise ValidationError(f"unknown triangle {args.triangle!r}")
    sol = dirichlet_lambda(TRIANGLES[args.triangle](), levels=args.levels,
                           surface_correction=not args.no_surface_correction, tol=args.tol)
    for level, lam in sol.level_lambdas.items():
        print(f"level {level}: lambda = {lam!r}")
    print(f"extrapolated lambda = {sol.extrapolated_lambda!r}")
    if sol.convergence_order is not None:
        print(f"observed order = {sol.convergence_order:.3f}")
    results = {
        "level_lambdas": {str(k): v for k, v in sol.level_lambdas.items()},
        "extrapolated_lambda": sol.extrapolated_lambda,
        "convergence_order": sol.convergence_order,
    }
    if args.triangle == "tetra":
        alpha = derive_alpha(sol, 4)
        results["alpha_4"] = alpha
        print(f"alpha_4 = {alpha!r}")
        path = _out(args, "constants.txt")
        if path is not None:
            write_constants(path, ProfileConstants.from_lambda(4, sol.extrapolated_lambda, "computed-by-sphereig"))
    mesh_path = _out(args, "mesh.txt")
    if mesh_path is not None:
        write_mesh(mesh_path, sol.mesh)
        write_eigenfunction_csv(_out(args, "eigenfunction.csv"), sol)
    _manifest(args, results)
    return EXIT_OK


def _parse_range(text: str) -> list[int]:
    try:
        if ":" in text:
            lo, hi, *step = (int(v) for v in text.split(":"))
            return list(range(lo, hi + 1, step[0] if step else 1))
        return [int(v) for v in text.split(",")]
    except ValueError as exc:
        raise ValidationError(f"bad N range {text!r}; use lo:hi:step or a comma list") from exc


def cmd_fit(args) -> int:
    if args.input:
        cols, rows = read_csv(args.input)
        if "N" not in cols or args.column not in cols:
            raise ValidationError(f"{args.input}: needs columns 'N' and {args.column!r}")
        iN, iy = cols.index("N"), cols.index(args.column)
        points = [(float(r[iN]), float(r[iy])) for r in rows]
        quantity = args.column
    else:
        if args.k is None or not args.n_range:
            raise ValidationError("fit needs --input, or --quantity with --k and --n-range")
        quantity = args.quantity
        points = []
        for N in _parse_range(args.n_range):
            k, N = check_game_size(args.k, N)
            index = enumerate_interior(k, N)
            op = build_killed_kernel(index)
            if quantity == "dominant":
                s = (1,) * (k - 1) + (N - k + 1,)
                points.append((N, face_hit_probability(absorption_row(op, s), k)))
            else:
                pair = cached_perron_frobenius(op, tol=args.tol, cache_dir=args.cache_dir)
                points.append((N, pair.gap if quantity == "gap" else center_value(pair, index)))
    fit = fit_power_law(points)
    local = successive_exponents(sorted(points))
    print(f"slope = {fit.slope!r} (stderr {fit.stderr_slope:.3g}, r^2 {fit.r_squared:.6f})")
    for n_mid, slope in local:
        print(f"local slope near N={n_mid:.2f}: {slope!r}")
    write_csv(_out(args, "fit.csv"), "fit", ["N", "quantity", "value", "fitted"],
              fit_table_rows(points, fit, quantity))
    _manifest(args, {"fit": fit.as_dict(), "local_slopes": local, "points": points})
    return EXIT_OK


def cmd_verify(args) -> int:
    from .verify import run_all

    only = [check_int(int(v), "criterion", minimum=1) for v in args.only.split(",")] if args.only else None
    if only and max(only) > 9:
        raise ValidationError("criteria are numbered 1 to 9")
    checks = run_all(quick=args.quick, only=only)
    for c in checks:
        print(c.line())
    failed = [c.name for c in checks if not c.passed]
    report = {"passed": not failed, "failed": failed, "checks": [c.as_dict() for c in checks]}
    if args.report:
        write_json(args.report, report)
    _manifest(args, {"passed": not failed, "failed": failed})
    return EXIT_ACCEPTANCE if failed else EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--out-dir", help="directory for CSV/JSON outputs and the manifest")
    common.add_argument("--constants", help="constants file overriding the default lambda_4/alpha_4")

    game = _Parser(add_help=False)
    game.add_argument("--k", type=int, help="number of players")
    game.add_argument("--n", type=int, help="total chips N")

    parser = _Parser(prog="ruinlab", description="Multi-player gambler's ruin on the lattice simplex.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("enumerate", parents=[common, game], help="list interior and boundary states")
    p.set_defaults(func=cmd_enumerate)

    p = sub.add_parser("eigen", parents=[common, game], help="Perron-Frobenius pair of the killed kernel")
    p.add_argument("--tol", type=float, default=DEFAULT_TOL)
    p.add_argument("--max-iter", type=int, default=DEFAULT_MAX_ITER)
    p.add_argument("--cache-dir", help="eigenvector cache directory (default $RUINLAB_CACHE_DIR or ~/.cache/ruinlab)")
    p.add_argument("--no-cache", action="store_true")
    p.set_defaults(func=cmd_eigen)

    p = sub.add_parser("absorb", parents=[common, game], help="exact exit law from a start state")
    p.add_argument("--start", help="comma-separated chip counts, e.g. 1,1,2")
    p.add_argument("--tol", type=float, default=1e-12)
    p.add_argument("--method", choices=["cg", "direct"], default="cg")
    p.set_defaults(func=cmd_absorb)

    p = sub.add_parser("simulate", parents=[common, game], help="seeded Monte Carlo of the game")
    p.add_argument("--start")
    p.add_argument("--runs", type=int, default=100_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--chunk-size", type=int, default=DEFAULT_CHUNK_SIZE)
    p.add_argument("--threads", type=int, help="worker threads (default $RUINLAB_THREADS or CPU count)")
    p.add_argument("--compare", action="store_true", help="report deviation from the exact law in sigmas")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("sphere-eig", parents=[common], help="Dirichlet eigenvalue of a spherical triangle")
    p.add_argument("--triangle", choices=sorted(TRIANGLES), default="tetra")
    p.add_argument("--levels", type=int, default=6)
    p.add_argument("--tol", type=float, default=1e-10)
    p.add_argument("--no-surface-correction", action="store_true")
    p.set_defaults(func=cmd_sphere_eig)

    p = sub.add_parser("fit", parents=[common, game], help="power-law fit of a sweep")
    p.add_argument("--input", help="schema-tagged CSV with an N column")
    p.add_argument("--column", default="value")
    p.add_argument("--quantity", choices=["gap", "center", "dominant"], default="gap")
    p.add_argument("--n-range", help="lo:hi:step or comma list")
    p.add_argument("--tol", type=float, default=DEFAULT_TOL)
    p.add_argument("--cache-dir")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("verify", parents=[common], help="run the acceptance checks")
    p.add_argument("--quick", action="store_true")
    p.add_argument("--only", help="comma-separated criterion numbers")
    p.add_argument("--report", help="write the JSON report here")
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv: list[str] | None = None) -> int:
    try:
        args = build_parser().parse_args(argv)
        return args.func(args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (ConvergenceError, np.linalg.LinAlgError, FloatingPointError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
