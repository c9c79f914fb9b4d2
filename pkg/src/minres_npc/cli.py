"""Command line: ``minres-npc {fig1,newton,solve,verify}``."""

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from .checks import verify_all
from .errors import DimensionError, ParseError, ValidationError, ZeroRHSError
from .experiments import RunRecord, fig1_csv, fig1_solver_config, run_fig1, run_newton_experiment
from .io import read_matrix, read_vector, write_vector
from .minres import MinresConfig, minres_solve

log = logging.getLogger("minres_npc")


def _add_solver_flags(p, rtol, stop_default, reorth_default):
    p.add_argument("--rtol", type=float, default=rtol, help=f"relative residual tolerance (default {rtol})")
    p.add_argument("--maxit", type=int, default=None, help="iteration cap (default: dimension)")
    group = p.add_mutually_exclusive_group()
    group.add_argument("--stop-on-npc", dest="stop_on_npc", action="store_true", help="return at the first NPC detection")
    group.add_argument("--continue", dest="stop_on_npc", action="store_false", help="record NPC detections and keep iterating")
    p.set_defaults(stop_on_npc=stop_default)
    p.add_argument("--reorth", action=argparse.BooleanOptionalAction, default=reorth_default, help="full Lanczos reorthogonalization")


def build_parser():
    parser = argparse.ArgumentParser(prog="minres-npc", description="MINRES with nonpositive-curvature detection")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fig1", help="trace the three 20x20 curvature test matrices")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", type=Path, default=Path("fig1_out"), help="output directory")
    _add_solver_flags(p, rtol=0.0, stop_default=False, reorth_default=True)

    p = sub.add_parser("newton", help="compare the two Newton-MR variants")
    p.add_argument("--config", type=Path, default=None, help="JSON file overriding experiment settings")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", type=Path, default=Path("newton_out"), help="output directory")
    p.add_argument("--rtol", type=float, default=None, help="inner relative residual tolerance")
    p.add_argument("--maxit", type=int, default=None, help="outer iteration cap")

    p = sub.add_parser("solve", help="solve a symmetric system from files")
    p.add_argument("matrix", type=Path, help="Matrix Market or dense text matrix")
    p.add_argument("rhs", type=Path, nargs="?", default=None, help="vector file (default: all ones)")
    p.add_argument("--out", type=Path, default=None, help="directory for x, NPC direction and trace")
    p.add_argument("--seed", type=int, default=None, help="unused; accepted for uniformity")
    _add_solver_flags(p, rtol=1e-10, stop_default=True, reorth_default=False)

    p = sub.add_parser("verify", help="run the invariant suites; nonzero exit on any violation")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--trials", type=int, default=50)
    p.add_argument("--out", type=Path, default=None, help="also write the JSON report here")
    return parser


def _write_record(outdir, stem, record):
    outdir.mkdir(parents=True, exist_ok=True)
    (outdir / f"{stem}.csv").write_text(record.csv)
    (outdir / f"{stem}.json").write_text(json.dumps(record.to_dict(), indent=2, sort_keys=True) + "\n")
    log.debug("wrote %s.{csv,json} in %s", stem, outdir)


def _npc_summary(out):
    summary = {
        "outcome": out.kind.value,
        "iterations": out.iterations,
        "relative_residual": out.relative_residual,
        "first_npc_iteration": out.npc_iteration,
        "matvecs": out.matvecs,
    }
    if out.npc_iteration is not None:
        summary["npc_curvature_estimate"] = out.trace[out.npc_iteration - 1].curvature_est
    return summary


def cmd_fig1(args):
    solver = fig1_solver_config(args.rtol, args.maxit, args.stop_on_npc, args.reorth)
    results = run_fig1(args.seed, solver=solver)
    config = {"seed": args.seed, "rtol": args.rtol, "maxit": args.maxit, "stop_on_npc": args.stop_on_npc, "reorth": args.reorth, "rhs": "ones"}
    for name, out in results.items():
        record = RunRecord(f"fig1-{name}", {**config, "matrix": name}, fig1_csv(out), _npc_summary(out))
        _write_record(args.out, f"fig1_{name}", record)
        s = record.summary
        print(f"{name}: {s['outcome']} after {s['iterations']} iterations, first NPC at {s['first_npc_iteration']}")
    return 0


def cmd_newton(args):
    overrides = {}
    if args.config is not None:
        try:
            overrides = json.loads(args.config.read_text())
        except json.JSONDecodeError as exc:
            raise ValidationError(f"{args.config}: invalid JSON ({exc})") from None
        if not isinstance(overrides, dict):
            raise ValidationError(f"{args.config}: expected a JSON object")
    for flag, key in (("seed", "seed"), ("rtol", "inner_rtol"), ("maxit", "maxouter")):
        if getattr(args, flag) is not None:
            overrides[key] = getattr(args, flag)
    for record, _ in run_newton_experiment(overrides):
        _write_record(args.out, record.experiment.replace("-", "_"), record)
        s = record.summary
        print(
            f"{record.experiment}: {s['status']}, {s['iterations']} iterations, "
            f"|grad f| = {s['final_grad_norm']:.3e}, {s['npc_steps']} NPC steps, {s['oracle_calls']} oracle calls"
        )
    return 0


def cmd_solve(args):
    A = read_matrix(args.matrix)
    b = np.ones(A.dim) if args.rhs is None else read_vector(args.rhs)
    if b.shape[0] != A.dim:
        raise DimensionError(f"{args.rhs}: right-hand side has length {b.shape[0]}, matrix is {A.dim}x{A.dim}")
    config = MinresConfig(rtol=args.rtol, maxit=args.maxit, stop_on_npc=args.stop_on_npc, reorth=args.reorth)
    out = minres_solve(A, b, config)
    print(f"outcome: {out.kind.value}")
    print(f"iterations: {out.iterations}")
    print(f"relative residual: {out.relative_residual:.6e}")
    if out.npc_direction is not None:
        print(f"NPC detected at iteration {out.npc_iteration}")
    if args.out is not None:
        args.out.mkdir(parents=True, exist_ok=True)
        write_vector(args.out / "x.txt", out.x)
        if out.npc_direction is not None:
            write_vector(args.out / "npc_direction.txt", out.npc_direction)
            print(f"NPC direction written to {args.out / 'npc_direction.txt'}")
        config_echo = {"matrix": str(args.matrix), "rhs": None if args.rhs is None else str(args.rhs), **config.__dict__}
        record = RunRecord("solve", config_echo, out.trace.to_csv(), _npc_summary(out))
        _write_record(args.out, "solve", record)
    return 0


def cmd_verify(args):
    if args.trials < 0:
        raise ValidationError(f"--trials must be nonnegative, got {args.trials}")
    report = verify_all(args.seed, args.trials)
    text = json.dumps(report, indent=2, sort_keys=True)
    print(text)
    if args.out is not None:
        args.out.write_text(text + "\n")
    if not report["passed"]:
        first = report["first_violation"] or {}
        print(f"violated: {first.get('check')} on {first.get('run')}", file=sys.stderr)
        return 1
    return 0


COMMANDS = {"fig1": cmd_fig1, "newton": cmd_newton, "solve": cmd_solve, "verify": cmd_verify}


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except (ParseError, DimensionError, ValidationError, ZeroRHSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc.filename or ''}: {exc.strerror or exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
