"""Command line entry point: ``ocopt solve|sweep|schedule|repro|list``."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .harness.experiments import ExperimentSpec, r_sweep, run_experiment, sweep_table
from .harness.figures import FIGURES, get_figure, repro, write_schedule
from .harness.schedule import PhaseSchedule, run_schedule
from .objective import NAMES, REGISTRY
from .ocsolver import SolverConfig

EXIT_OK, EXIT_USAGE, EXIT_MAX_ITERS, EXIT_FAILED = 0, 1, 2, 3
_EXIT = {"converged": EXIT_OK, "max_iters": EXIT_MAX_ITERS}


def exit_code(termination: str) -> int:
    return _EXIT.get(termination, EXIT_FAILED)


class _UsageError(Exception):
    pass


def _json(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise _UsageError(f"not valid JSON: {text!r} ({exc})") from None


def _load(path: str) -> dict:
    try:
        return json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise _UsageError(f"cannot read config {path}: {exc}") from None


def _solver_fields(args) -> dict:
    out = {}
    for name in ("N", "epsilon", "max_outer", "seed"):
        v = getattr(args, name, None)
        if v is not None:
            out[name] = v
    if getattr(args, "alpha", None) is not None:
        out["alpha"] = args.alpha if args.alpha == "auto" else float(args.alpha)
    if getattr(args, "init", None) is not None:
        out["init_control"] = args.init if args.init in ("zeros", "random") else float(args.init)
    if getattr(args, "backtracking", False):
        out["backtracking"] = True
    return out


def _cmd_solve(args) -> int:
    d = _load(args.config) if args.config else {}
    if args.case:
        d["case"] = args.case
    if "case" not in d:
        raise _UsageError("a case is required (positional or in --config)")
    if args.method:
        d["method"] = args.method
    method = d.get("method", "oc")
    cfg = dict(d.get("config") or {})
    if method == "oc":
        cfg.update(_solver_fields(args))
        if args.R is not None:
            cfg["R"] = _json(args.R)
    else:
        for name in ("eta", "max_iters", "grad_tol"):
            v = getattr(args, name)
            if v is not None:
                cfg[name] = v
    d["config"] = cfg
    for name in ("output", "target", "seed"):
        v = getattr(args, name)
        if v is not None:
            d[name] = v
    if args.x0 is not None:
        d["x0"] = _json(args.x0)
    try:
        spec = ExperimentSpec.from_dict(d)
        result = run_experiment(spec)
    except (TypeError, ValueError, KeyError) as exc:
        raise _UsageError(str(exc)) from None
    print(json.dumps(result.manifest["outcome"], indent=2))
    return exit_code(result.termination)


def _cmd_sweep(args) -> int:
    R_list = _json(args.R)
    if not isinstance(R_list, list) or not R_list:
        raise _UsageError("--R must be a non-empty JSON list")
    base = SolverConfig.from_dict(_load(args.config)) if args.config else SolverConfig()
    base = SolverConfig.from_dict({**base.to_dict(), **_solver_fields(args)})
    x0 = None if args.x0 is None else _json(args.x0)
    try:
        rows = r_sweep(args.case, R_list, base, x0=x0, outdir=args.outdir)
    except (TypeError, ValueError, KeyError) as exc:
        raise _UsageError(str(exc)) from None
    print(json.dumps(sweep_table(rows), indent=2))
    return max(exit_code(r.termination) for r in rows)


def _cmd_schedule(args) -> int:
    try:
        sched = PhaseSchedule.from_dict(_load(args.phases))
        x0 = None if args.x0 is None else _json(args.x0)
        result = run_schedule(args.case, sched, x0=x0)
    except (TypeError, ValueError, KeyError) as exc:
        raise _UsageError(str(exc)) from None
    if args.output:
        write_schedule(args.case, sched, result, args.target, args.output)
    print(json.dumps(dict(final_point=result.final_point.tolist(), aborted=result.aborted,
                          message=result.message,
                          phases=[dict(termination=p.termination, stopped=p.stopped,
                                       end=p.end.tolist()) for p in result.phases]), indent=2))
    if not result.aborted:
        return EXIT_OK
    return exit_code(result.phases[-1].termination if result.phases else "numerical_error")


def _cmd_repro(args) -> int:
    try:
        get_figure(args.figure)
    except KeyError as exc:
        raise _UsageError(exc.args[0]) from None
    res = repro(args.figure, args.outdir)
    codes = [EXIT_OK]
    for label, run in res.runs.items():
        print(f"{label}: {run.termination} at {run.final_state.tolist()}")
        if run.spec.method == "oc":
            codes.append(exit_code(run.termination))
    for label, sched in res.schedules.items():
        print(f"{label}: {'aborted' if sched.aborted else 'completed'} at {sched.final_point.tolist()}")
        if sched.aborted:
            codes.append(exit_code(sched.phases[-1].termination))
    if args.outdir:
        print(f"wrote {len(res.files)} files under {Path(args.outdir) / args.figure}")
    return max(codes)


def _cmd_list(args) -> int:
    for name in NAMES:
        if name in REGISTRY:
            case = REGISTRY[name]
            mins = "; ".join(f"{m.point.tolist()} ({m.label})" for m in case.minima)
            print(f"{name}  dim={case.objective.dim}  x0={case.x0.tolist()}  minima: {mins}")
        else:
            print(f"{name}  synthetic convex quadratic, any dimension")
    print("figures: " + ", ".join(FIGURES))
    return EXIT_OK


def _add_solver_flags(p):
    p.add_argument("--N", type=int)
    p.add_argument("--alpha", help="'auto' or a fixed outer step")
    p.add_argument("--epsilon", type=float)
    p.add_argument("--max-outer", dest="max_outer", type=int)
    p.add_argument("--init", help="'zeros', 'random' or a constant")
    p.add_argument("--seed", type=int)
    p.add_argument("--backtracking", action="store_true")
    p.add_argument("--x0", help="JSON scalar or list")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ocopt", description="Minimization posed as a discrete optimal control problem.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="run one experiment")
    p.add_argument("case", nargs="?")
    p.add_argument("--config", help="JSON experiment file")
    p.add_argument("--method", choices=("oc", "gd", "newton"))
    p.add_argument("--R", help="JSON scalar, diagonal list or matrix")
    p.add_argument("--eta", type=float)
    p.add_argument("--max-iters", dest="max_iters", type=int)
    p.add_argument("--grad-tol", dest="grad_tol", type=float)
    p.add_argument("--target", type=int)
    p.add_argument("--output", help="CSV path; a JSON manifest is written beside it")
    _add_solver_flags(p)
    p.set_defaults(func=_cmd_solve)

    p = sub.add_parser("sweep", help="solve once per weight R")
    p.add_argument("case")
    p.add_argument("--R", required=True, help="JSON list of weights")
    p.add_argument("--config", help="JSON solver config file")
    p.add_argument("--outdir")
    _add_solver_flags(p)
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser("schedule", help="run a phase schedule")
    p.add_argument("case")
    p.add_argument("phases", help="JSON phase file")
    p.add_argument("--x0")
    p.add_argument("--target", type=int)
    p.add_argument("--output")
    p.set_defaults(func=_cmd_schedule)

    p = sub.add_parser("repro", help="rerun a bundled figure")
    p.add_argument("figure")
    p.add_argument("--outdir")
    p.set_defaults(func=_cmd_repro)

    p = sub.add_parser("list", help="show registered objectives and figures")
    p.set_defaults(func=_cmd_list)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    try:
        return args.func(args)
    except _UsageError as exc:
        print(f"ocopt: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
