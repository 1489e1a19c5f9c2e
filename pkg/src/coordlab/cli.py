"""
Command-line front end.

Every command is a pure function of its flags, config file and input files.
CSV goes out with six decimals, JSON pretty-printed with sorted keys.  Output
lands in ``--out`` when given, otherwise on stdout.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import warnings
from pathlib import Path
from typing import List, Optional

from .dsbs import DEFAULT_RANGE, GapInputs, figure4_csv, figure4_grid, rcs_gap_lower_bound
from .feasibility import SolverFailure, find_compatible_channel
from .prob import load_table
from .regions import SolverOptions, boundary_csv, region_boundary
from .scheme import BudgetExceeded, SchemeSpec, budget_cells, converse_audit, soft_covering_curve

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_INFEASIBLE = 2

PATH_KEYS = {"qxz", "qxy", "spec", "out", "summary"}


class CliError(Exception):
    pass


def _dump_json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _emit(text: str, path: Optional[str]) -> None:
    if path:
        Path(path).write_text(text)
    else:
        sys.stdout.write(text)


def _float_list(raw, flag: str) -> List[float]:
    if isinstance(raw, (list, tuple)):
        items = list(raw)
    else:
        items = [s for s in str(raw).split(",") if s.strip()]
    try:
        return [float(v) for v in items]
    except ValueError:
        raise CliError(f"{flag}: expected comma-separated numbers, got {raw!r}") from None


def _int_list(raw, flag: str) -> List[int]:
    vals = _float_list(raw, flag)
    if any(v != int(v) for v in vals):
        raise CliError(f"{flag}: expected integers, got {raw!r}")
    return [int(v) for v in vals]


def _table(path: Optional[str], flag: str):
    if not path:
        raise CliError(f"{flag} is required")
    try:
        return load_table(path)
    except FileNotFoundError:
        raise CliError(f"{flag}: no such file {path}") from None
    except (ValueError, TypeError) as exc:
        raise CliError(f"{flag}: {exc}") from None


def _spec(path: Optional[str]) -> SchemeSpec:
    if not path:
        raise CliError("--spec is required")
    try:
        with open(path) as fh:
            return SchemeSpec.from_json(json.load(fh))
    except FileNotFoundError:
        raise CliError(f"--spec: no such file {path}") from None
    except (ValueError, TypeError) as exc:
        raise CliError(f"--spec: {exc}") from None


def _solver_options(args) -> SolverOptions:
    try:
        return SolverOptions(
            starts=int(args.starts),
            seed=int(args.seed),
            marginal_tol=float(args.marginal_tol),
            max_outer=int(args.max_outer),
            threads=int(args.threads),
        )
    except ValueError as exc:
        raise CliError(str(exc)) from None


# ----------------------------------------------------------------------------
# commands
# ----------------------------------------------------------------------------


def cmd_feasible(args) -> int:
    q_xz = _table(args.qxz, "--qxz")
    q_xy = _table(args.qxy, "--qxy")
    res = find_compatible_channel(q_xz, q_xy)
    if res.warning:
        print(f"warning: {res.warning}", file=sys.stderr)
    out = res.to_json()
    out.pop("status")
    _emit(_dump_json(out), args.out)
    return EXIT_OK if res.feasible else EXIT_INFEASIBLE


def cmd_region(args) -> int:
    q_xz = _table(args.qxz, "--qxz")
    q_xy = _table(args.qxy, "--qxy")
    grid = _float_list(args.rc_grid, "--rc-grid")
    rows = region_boundary(q_xz, q_xy, grid, _solver_options(args))
    _emit(boundary_csv(rows), args.out)
    return EXIT_OK


def cmd_gap(args) -> int:
    if args.theta is None or args.tau is None:
        raise CliError("--theta and --tau are required")
    g = GapInputs(float(args.theta), float(args.tau))
    _emit(figure4_csv([(g.theta, g.tau, rcs_gap_lower_bound(g))]), args.out)
    return EXIT_OK


def cmd_figure4(args) -> int:
    rows = figure4_grid(
        (float(args.theta_min), float(args.theta_max)), (float(args.tau_min), float(args.tau_max)), int(args.steps)
    )
    _emit(figure4_csv(rows), args.out)
    return EXIT_OK


def _audit_n(spec: SchemeSpec, n_list: List[int]) -> Optional[int]:
    """Largest n whose full code joint fits the budget."""
    nx, nz, _, ny = spec.sizes
    best = None
    for n in n_list:
        s = spec.__class__(spec.p, spec.r, spec.rc, spec.eps, n)
        if s.j_size * s.m_size * (nx * nz * ny) ** n <= budget_cells():
            best = n if best is None else max(best, n)
    return best


def cmd_simulate(args) -> int:
    spec = _spec(args.spec)
    n_list = _int_list(args.n_list, "--n-list")
    if not n_list or any(n < 1 for n in n_list):
        raise CliError("--n-list: blocklengths must be positive")
    curve = soft_covering_curve(spec, n_list, int(args.trials), int(args.seed), threads=int(args.threads))
    if curve.truncated:
        print(f"warning: {curve.reason}", file=sys.stderr)
    _emit(curve.to_csv(), args.out)
    if args.summary:
        n_audit = _audit_n(spec, n_list)
        audit = None
        if n_audit is not None:
            s = spec.__class__(spec.p, spec.r, spec.rc, spec.eps, n_audit)
            audit = converse_audit(None, s, int(args.seed)).to_json()
        summary = {
            "audit": audit,
            "audit_n": n_audit,
            "encoder_fallbacks": sum(r.fallbacks for r in curve.rows),
            "inside_region": spec.__class__(spec.p, spec.r, spec.rc, spec.eps, max(n_list)).inside_region(),
            "rows": len(curve.rows),
            "truncated": curve.truncated,
            "truncated_at": curve.truncated_at,
        }
        Path(args.summary).write_text(_dump_json(summary))
    return EXIT_OK


def cmd_audit(args) -> int:
    spec = _spec(args.spec)
    n = int(args.n)
    if n < 1:
        raise CliError("--n must be positive")
    s = spec.__class__(spec.p, spec.r, spec.rc, spec.eps, n)
    _emit(_dump_json(converse_audit(None, s, int(args.seed)).to_json()), args.out)
    return EXIT_OK


COMMANDS = {
    "feasible": cmd_feasible,
    "region": cmd_region,
    "gap": cmd_gap,
    "figure4": cmd_figure4,
    "simulate": cmd_simulate,
    "audit": cmd_audit,
}


# ----------------------------------------------------------------------------
# parser
# ----------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="coordlab", description="Remote and direct channel synthesis toolkit.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="JSON config file; its values override flags")
        p.add_argument("--out", help="output path (default: stdout)")

    def solver(p):
        d = SolverOptions()
        p.add_argument("--starts", type=int, default=d.starts)
        p.add_argument("--seed", type=int, default=d.seed)
        p.add_argument("--marginal-tol", type=float, default=d.marginal_tol)
        p.add_argument("--max-outer", type=int, default=d.max_outer)
        p.add_argument("--threads", type=int, default=1)

    p = sub.add_parser("feasible", help="check that a channel Y|Z reproduces q_XY")
    common(p)
    p.add_argument("--qxz")
    p.add_argument("--qxy")

    p = sub.add_parser("region", help="sweep both rate boundaries over an rc grid")
    common(p)
    solver(p)
    p.add_argument("--qxz")
    p.add_argument("--qxy")
    p.add_argument("--rc-grid", default="0")

    p = sub.add_parser("gap", help="closed-form gap lower bound")
    common(p)
    p.add_argument("--theta", type=float)
    p.add_argument("--tau", type=float)

    p = sub.add_parser("figure4", help="gap lower bound on a theta x tau grid")
    common(p)
    p.add_argument("--steps", type=int, default=25)
    p.add_argument("--theta-min", type=float, default=DEFAULT_RANGE[0])
    p.add_argument("--theta-max", type=float, default=DEFAULT_RANGE[1])
    p.add_argument("--tau-min", type=float, default=DEFAULT_RANGE[0])
    p.add_argument("--tau-max", type=float, default=DEFAULT_RANGE[1])

    p = sub.add_parser("simulate", help="soft-covering sweep of the random-codebook scheme")
    common(p)
    p.add_argument("--spec")
    p.add_argument("--n-list", default="2,4,6")
    p.add_argument("--trials", type=int, default=20)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--summary", help="path for the JSON summary (audit included when n permits)")

    p = sub.add_parser("audit", help="single-letter converse audit of one sampled code")
    common(p)
    p.add_argument("--spec")
    p.add_argument("--n", type=int, default=3)
    p.add_argument("--seed", type=int, default=0)
    return parser


def _apply_config(args, parser: argparse.ArgumentParser) -> None:
    path = Path(args.config)
    try:
        cfg = json.loads(path.read_text())
    except FileNotFoundError:
        raise CliError(f"--config: no such file {path}") from None
    except json.JSONDecodeError as exc:
        raise CliError(f"--config: invalid JSON ({exc})") from None
    if not isinstance(cfg, dict):
        raise CliError("--config: top level must be an object")
    for raw_key, value in cfg.items():
        key = raw_key.replace("-", "_")
        if key in ("command", "config") or not hasattr(args, key):
            raise CliError(f"--config: unknown field '{raw_key}' for command {args.command}")
        if key in PATH_KEYS and isinstance(value, str) and not os.path.isabs(value):
            value = str(path.parent / value)
        setattr(args, key, value)


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_ERROR if exc.code else EXIT_OK
    try:
        if args.config:
            _apply_config(args, parser)
        with warnings.catch_warnings():
            warnings.simplefilter("default")
            return COMMANDS[args.command](args)
    except (CliError, ValueError, BudgetExceeded, SolverFailure, RuntimeError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


def entry() -> None:  # pragma: no cover - console script
    sys.exit(main())
