"""Command-line front end.

Subcommands::

    analyze      two-sided bounds for one two-grid setup
    mg-certify   level bound certification for a multigrid hierarchy
    sweep-omega  bounds along B_c = omega I for a grid of omega
    sweep-alpha  bounds on the block example along a grid of alpha
    verify       seeded invariant suite

Exit codes: 0 success, 1 failed check, 2 bad configuration, 3 input
outside the theory's range, 4 internal cross-check failure, 5 nontrivial
multigrid case violated.

Options can also come from ``--config FILE`` holding ``key = value`` lines
(keys are long option names without the leading dashes); explicit flags
win over the file.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from functools import partial
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .errors import BadParameter, ConfigError, MgBoundsError
from .hierarchy import (
    alpha_parameterized_example,
    bilinear_interpolation_2d,
    build_hierarchy,
    ideal_interpolation,
    laplacian_1d,
    laplacian_2d,
    linear_interpolation_1d,
    poisson_1d_hierarchy,
    poisson_2d_hierarchy,
    smoother_factory,
)
from .instances import DEFAULT_SEED
from .matrix_io import format_float, read_matrix
from .multigrid import coarsest_scale, coarsest_shift, theorem42_certify
from .smoothers import make_block_jacobi
from .twogrid import TwoGridSetup, theorem33_bounds
from .verify import DEFAULT_TRIALS, run_suite

EXIT_OK = 0
EXIT_FAILED = 1
EXAMPLE_TOL = 1e-8
DEFAULT_OMEGAS = tuple(10.0 ** k for k in range(1, 9))
DEFAULT_ALPHAS = tuple(round(0.1 * k, 1) for k in range(10))

SWEEP_OMEGA_COLUMNS = ("omega", "d1", "d2", "lower", "upper", "actual", "notay")
SWEEP_ALPHA_COLUMNS = ("alpha", "actual", "lower", "upper", "notay", "relative_gap")


# -- problem construction -----------------------------------------------------

def _alpha_example(args, alpha: Optional[float] = None):
    alpha = args.alpha if alpha is None else alpha
    A, part = alpha_parameterized_example(alpha, args.nf, args.nc, seed=args.seed)
    return A, part


def _smoother(args, A, part=None):
    kind = args.smoother or ("block" if args.problem == "alpha-example" else "jacobi")
    if kind == "block":
        if part is None:
            raise BadParameter("the block smoother needs --problem alpha-example")
        return make_block_jacobi(A, [part.fine, part.coarse])
    return smoother_factory(kind, args.omega)(A)


def _fine_problem(args):
    """``(A, P, part)`` of the two-grid problem named by ``--problem``."""
    if args.problem == "lap1d":
        return laplacian_1d(args.n), linear_interpolation_1d(args.n), None
    if args.problem == "lap2d":
        return laplacian_2d(args.nx, args.ny), bilinear_interpolation_2d(args.nx, args.ny), None
    if args.problem == "files":
        if not args.matrix or not args.prolongation:
            raise ConfigError("--problem files needs --matrix and --prolongation")
        if len(args.prolongation) != 1:
            raise ConfigError("two-grid commands take exactly one --prolongation")
        return read_matrix(args.matrix), read_matrix(args.prolongation[0]), None
    if args.problem == "alpha-example":
        A, part = _alpha_example(args)
        return A, ideal_interpolation(A, part), part
    raise ConfigError(f"unknown problem {args.problem!r}")


def _coarse_solver(spec: Sequence[str], A, P, part):
    kind = spec[0]
    if kind == "exact":
        return P.T @ A @ P
    if kind == "scaled-identity":
        if len(spec) != 2:
            raise ConfigError("--bc scaled-identity takes one value")
        omega = _positive(spec[1], "--bc scaled-identity")
        return omega * np.eye(P.shape[1])
    if kind == "file":
        if len(spec) != 2:
            raise ConfigError("--bc file takes one path")
        return read_matrix(spec[1])
    if kind == "coarse-block":
        if part is None:
            raise ConfigError("--bc coarse-block needs --problem alpha-example")
        P0 = part.coarse_embedding()
        return P0.T @ A @ P0
    raise ConfigError(f"unknown --bc kind {kind!r}")


def _positive(text, what) -> float:
    try:
        v = float(text)
    except ValueError as exc:
        raise ConfigError(f"{what}: not a number: {text!r}") from exc
    if not (np.isfinite(v) and v > 0):
        raise BadParameter(f"{what} must be positive and finite, got {v}")
    return v


def build_setup(args) -> TwoGridSetup:
    A, P, part = _fine_problem(args)
    bc = args.bc or (["coarse-block"] if args.problem == "alpha-example" else ["exact"])
    return TwoGridSetup(A, _smoother(args, A, part), P, _coarse_solver(bc, A, P, part))


def build_mg_hierarchy(args):
    if args.smoother == "block":
        raise ConfigError("mg-certify supports jacobi and gauss-seidel smoothers")
    factory = smoother_factory(args.smoother or "jacobi", args.omega)
    if args.problem == "lap1d":
        h = poisson_1d_hierarchy(args.n, args.levels, factory)
    elif args.problem == "lap2d":
        h = poisson_2d_hierarchy(args.nx, args.ny, args.levels, factory)
    elif args.problem == "files":
        if not args.matrix or not args.prolongation:
            raise ConfigError("--problem files needs --matrix and --prolongation (fine to coarse)")
        Ps = [read_matrix(p) for p in args.prolongation]
        h = build_hierarchy(read_matrix(args.matrix), Ps, factory)
    else:
        raise ConfigError(f"mg-certify does not support --problem {args.problem}")
    return h


def _apply_coarsest(args, h):
    if args.coarsest == "exact":
        return h
    if args.coarsest == "shift":
        if (args.theta is None) == (args.theta_fraction is None):
            raise ConfigError("--coarsest shift needs exactly one of --theta, --theta-fraction")
        if args.theta is not None:
            return coarsest_shift(h, args.theta)
        # the threshold shrinks as gamma grows; use the strictest one requested
        threshold = min(theorem42_certify(h, g).threshold for g in args.gamma)
        return coarsest_shift(h, args.theta_fraction * threshold)
    if args.coarsest == "scale":
        if args.scale is None:
            raise ConfigError("--coarsest scale needs --scale")
        return coarsest_scale(h, args.scale)
    raise ConfigError(f"unknown --coarsest {args.coarsest!r}")


# -- output -------------------------------------------------------------------

def _csv_cell(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return format_float(v)
    return str(v)


def render_csv(columns: Sequence[str], rows: Sequence[dict]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([_csv_cell(row[c]) for c in columns])
    return buf.getvalue()


def render_json(obj) -> str:
    return json.dumps(obj, indent=2) + "\n"


def _emit(args, text: str) -> None:
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)


def _render(args, record_or_rows, columns=None) -> str:
    if args.format == "csv":
        rows = record_or_rows if isinstance(record_or_rows, list) else [record_or_rows]
        return render_csv(columns or list(rows[0]), rows)
    return render_json(record_or_rows)


def _map(args, fn, points):
    """Apply ``fn`` over ``points`` in input order, optionally in worker processes."""
    if args.parallel and args.parallel > 1 and len(points) > 1:
        with ProcessPoolExecutor(max_workers=args.parallel) as pool:
            return list(pool.map(fn, points))
    return [fn(p) for p in points]


# -- commands -----------------------------------------------------------------

def cmd_analyze(args) -> int:
    report = theorem33_bounds(build_setup(args))
    _emit(args, _render(args, report.to_record()))
    return EXIT_OK if report.sandwich_ok else EXIT_FAILED


def _omega_row(omega, args) -> dict:
    base = build_setup(args)
    Bc = base.Ac if omega is None else omega * np.eye(base.n_c)
    r = theorem33_bounds(TwoGridSetup(base.A, base.smoother, base.P, Bc))
    q = r.quantities
    return {"omega": "Ac" if omega is None else float(omega), "d1": q.d1, "d2": q.d2,
            "lower": r.lower, "upper": r.upper, "actual": r.actual,
            "notay": r.notay_upper, "sandwich_ok": r.sandwich_ok}


def cmd_sweep_omega(args) -> int:
    omegas = [_positive(w, "--bc-omegas") for w in args.bc_omegas]
    if args.bc:
        raise ConfigError("sweep-omega sets B_c itself; drop --bc")
    rows = _map(args, partial(_omega_row, args=args), [None] + omegas)
    ok = all(r.pop("sandwich_ok") for r in rows)
    _emit(args, _render(args, rows, SWEEP_OMEGA_COLUMNS))
    return EXIT_OK if ok else EXIT_FAILED


def _alpha_row(alpha, args) -> dict:
    A, part = _alpha_example(args, alpha)
    P0 = part.coarse_embedding()
    setup = TwoGridSetup(A, make_block_jacobi(A, [part.fine, part.coarse]),
                         ideal_interpolation(A, part), P0.T @ A @ P0)
    r = theorem33_bounds(setup)
    gap = (r.notay_upper - r.actual) / r.actual if r.actual > 0 else 1.0 - alpha ** 2
    return {"alpha": float(alpha), "actual": r.actual, "lower": r.lower, "upper": r.upper,
            "notay": r.notay_upper, "relative_gap": gap}


def _alpha_row_ok(row) -> bool:
    a2 = row["alpha"] ** 2
    want = {"actual": a2, "lower": a2, "upper": a2,
            "notay": a2 * (2.0 - a2), "relative_gap": 1.0 - a2}
    return all(abs(row[k] - v) <= EXAMPLE_TOL for k, v in want.items())


def cmd_sweep_alpha(args) -> int:
    alphas = []
    for a in args.alphas:
        try:
            alphas.append(float(a))
        except ValueError as exc:
            raise ConfigError(f"--alphas: not a number: {a!r}") from exc
    if any(not 0.0 <= a < 1.0 for a in alphas):
        raise BadParameter("every alpha must lie in [0, 1)")
    rows = _map(args, partial(_alpha_row, args=args), alphas)
    _emit(args, _render(args, rows, SWEEP_ALPHA_COLUMNS))
    return EXIT_OK if all(_alpha_row_ok(r) for r in rows) else EXIT_FAILED


MG_COLUMNS = ("gamma", "k", "n_k", "sigma_TG", "sigma_IMG", "x_gamma", "threshold",
              "condition24", "remark44", "verified")


def cmd_mg_certify(args) -> int:
    h = _apply_coarsest(args, build_mg_hierarchy(args))
    certs = [theorem42_certify(h, g) for g in args.gamma]
    records = []
    for c in certs:
        rec = c.to_record()
        rec["threshold"] = c.threshold
        records.append(rec)
    if args.format == "csv":
        rows = [dict(rec, **lvl) for rec in records for lvl in rec["levels"]]
        text = render_csv(MG_COLUMNS, rows)
    else:
        text = render_json(records[0] if len(records) == 1 else records)
    _emit(args, text)
    return EXIT_OK if all(c.verified for c in certs) else EXIT_FAILED


VERIFY_COLUMNS = ("module", "name", "passed", "worst_slack", "trials", "error")


def cmd_verify(args) -> int:
    if args.trials < 1:
        raise BadParameter("--trials must be positive")
    results = run_suite(seed=args.seed, trials=args.trials)
    # wall-clock time is left out so equal seeds give byte-identical files
    rows = [{c: getattr(r, c) for c in VERIFY_COLUMNS} for r in results]
    if args.format == "csv":
        text = render_csv(VERIFY_COLUMNS, rows)
    else:
        text = render_json({"seed": args.seed, "trials": args.trials,
                            "all_passed": all(r.passed for r in results),
                            "invariants": rows})
    _emit(args, text)
    return EXIT_OK if all(r.passed for r in results) else EXIT_FAILED


COMMANDS = {
    "analyze": cmd_analyze,
    "mg-certify": cmd_mg_certify,
    "sweep-omega": cmd_sweep_omega,
    "sweep-alpha": cmd_sweep_alpha,
    "verify": cmd_verify,
}


# -- argument parsing -----------------------------------------------------------

def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="file of key = value defaults")
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.add_argument("--out", help="output file (default: stdout)")
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.add_argument("--parallel", type=int, default=0, metavar="N",
                   help="worker processes for sweep points (output order is unchanged)")


def _problem(p: argparse.ArgumentParser, choices, default) -> None:
    p.add_argument("--problem", choices=choices, default=default)
    p.add_argument("--n", type=int, default=15, help="1D grid size (odd)")
    p.add_argument("--nx", type=int, default=7)
    p.add_argument("--ny", type=int, default=7)
    p.add_argument("--matrix", help="fine matrix file for --problem files")
    p.add_argument("--prolongation", nargs="+",
                   help="prolongation file(s); several are listed fine to coarse")
    p.add_argument("--smoother", choices=("jacobi", "gauss-seidel", "block"))
    p.add_argument("--omega", type=float, default=2.0 / 3.0, help="Jacobi weight")


def _alpha_opts(p: argparse.ArgumentParser) -> None:
    p.add_argument("--alpha", type=float, default=0.5)
    p.add_argument("--nf", type=int, default=4)
    p.add_argument("--nc", type=int, default=3)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mgbounds",
        description="Convergence bounds for two-grid and multigrid cycles with inexact coarse solves.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analyze", help="bounds for one two-grid setup")
    _common(p)
    _problem(p, ("lap1d", "lap2d", "files", "alpha-example"), "lap1d")
    _alpha_opts(p)
    p.add_argument("--bc", nargs="+", metavar="KIND",
                   help="exact | scaled-identity W | file PATH | coarse-block")

    p = sub.add_parser("mg-certify", help="certify the multigrid level bound")
    _common(p)
    _problem(p, ("lap1d", "lap2d", "files"), "lap1d")
    p.add_argument("--levels", type=int, default=3, help="number of coarsenings L")
    p.add_argument("--gamma", type=int, nargs="+", default=[1], help="cycle index (several allowed)")
    p.add_argument("--coarsest", choices=("exact", "shift", "scale"), default="exact")
    p.add_argument("--theta", type=float, help="absolute shift of the coarsest matrix")
    p.add_argument("--theta-fraction", type=float,
                   help="shift as a fraction of the coarsest-solve threshold")
    p.add_argument("--scale", type=float, help="coarsest matrix becomes A0 / scale")

    p = sub.add_parser("sweep-omega", help="bounds along B_c = omega I")
    _common(p)
    _problem(p, ("lap1d", "lap2d", "files", "alpha-example"), "lap1d")
    _alpha_opts(p)
    p.add_argument("--bc-omegas", nargs="+", default=[repr(w) for w in DEFAULT_OMEGAS])
    p.set_defaults(bc=None)

    p = sub.add_parser("sweep-alpha", help="block example along a grid of alpha")
    _common(p)
    p.add_argument("--nf", type=int, default=4)
    p.add_argument("--nc", type=int, default=3)
    p.add_argument("--alphas", nargs="+", default=[repr(a) for a in DEFAULT_ALPHAS])

    p = sub.add_parser("verify", help="run the seeded invariant suite")
    _common(p)
    p.add_argument("--trials", type=int, default=DEFAULT_TRIALS)
    return parser


def read_config(path) -> dict:
    """``key = value`` lines; ``#`` starts a comment."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    out = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        out[key.lstrip("-").replace("-", "_")] = value
    return out


def _config_args(sub: argparse.ArgumentParser, cfg: dict) -> list[str]:
    """Turn config entries into argv tokens placed before the explicit flags."""
    known = {a.dest: a for a in sub._actions if a.option_strings}
    argv = []
    for key, value in cfg.items():
        action = known.get(key)
        if action is None or key == "config":
            raise ConfigError(f"unknown config key {key!r}")
        argv.append(action.option_strings[-1])
        argv.extend(value.replace(",", " ").split() if action.nargs == "+" else [value])
    return argv


def parse_args(argv: Optional[Sequence[str]] = None):
    parser = build_parser()
    argv = list(sys.argv[1:] if argv is None else argv)
    args = parser.parse_args(argv)
    if args.config:
        sub = parser._subparsers._group_actions[0].choices[args.command]
        extra = _config_args(sub, read_config(args.config))
        # later occurrences win in argparse, so explicit flags go last
        args = parser.parse_args([argv[0]] + extra + argv[1:])
    return args


def main(argv: Optional[Sequence[str]] = None) -> int:
    try:
        args = parse_args(argv)
        return COMMANDS[args.command](args)
    except MgBoundsError as exc:
        print(f"mgbounds: {type(exc).__name__}: {exc}", file=sys.stderr)
        return exc.exit_code
    except (ValueError, np.linalg.LinAlgError) as exc:
        print(f"mgbounds: error: {exc}", file=sys.stderr)
        return EXIT_FAILED


if __name__ == "__main__":
    sys.exit(main())
