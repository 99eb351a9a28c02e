"""Command-line entry point ``mmt``.

Exit codes: 0 success, 2 invalid input, 3 numerical failure.
"""
import argparse
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from .scenarios import (EXIT_INPUT, EXIT_NUMERICAL, EXIT_OK, Scenario, ScenarioError,
                        builtin, list_examples, run_scenario, safe_dirname)

LOG_LEVELS = {"quiet": logging.ERROR, "info": logging.INFO, "debug": logging.DEBUG}

log = logging.getLogger("mmt")


def _setup_logging():
    level = os.environ.get("MMT_LOG", "info").lower()
    if level not in LOG_LEVELS:
        print(f"mmt: ignoring unknown MMT_LOG={level!r}", file=sys.stderr)
        level = "info"
    logging.basicConfig(level=LOG_LEVELS[level], format="%(levelname)s %(name)s: %(message)s",
                        stream=sys.stderr, force=True)


def _report_input_error(exc):
    for path, msg in exc.problems:
        print(f"error: {path or '<root>'}: {msg}", file=sys.stderr)
    return EXIT_INPUT


def _summary(rec):
    out = rec.outputs
    keys = ("cost", "value", "lower", "upper", "expected_mass", "status")
    parts = [f"{k}={out[k]!r}" for k in keys if k in out]
    return f"{out.get('name', '')} [{out.get('task')}] {rec.status} " + " ".join(parts)


def _run(scenario, out_dir):
    log.debug("scenario %s (task %s, sha256 %s)", scenario.name, scenario.task, scenario.digest())
    rec = run_scenario(scenario, out_dir)
    log.info("wrote %s", out_dir)
    print(_summary(rec))
    if rec.exit_code == EXIT_NUMERICAL:
        print(f"numerical failure: {rec.outputs.get('error')}", file=sys.stderr)
    return rec.exit_code


def cmd_run(args):
    sc = Scenario.load(args.scenario)
    out = args.output or Path("mmt-out") / safe_dirname(sc.name)
    return _run(sc, out)


def cmd_example(args):
    sc = builtin(args.name, seed=args.seed)
    out = args.output or Path("mmt-out") / safe_dirname(args.name)
    return _run(sc, out)


def cmd_list(args):
    for name, desc in list_examples():
        print(f"{name:30s} {desc}")
    return EXIT_OK


def _load_matrix(path):
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as exc:
        raise ScenarioError([("--matrix", f"cannot read {path}: {exc.strerror}")]) from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError:
        try:
            data = np.loadtxt(p, ndmin=2, delimiter="," if "," in text else None).tolist()
        except ValueError as exc:
            raise ScenarioError([("--matrix", f"not a JSON or text matrix: {exc}")]) from exc
    return data


def _load_norm(spec):
    p = Path(spec)
    if p.suffix == ".json" or p.is_file():
        try:
            return json.loads(p.read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ScenarioError([("--norm", f"cannot load {spec}: {exc}")]) from exc
    return spec


def cmd_h_eval(args):
    data = {"name": "h-eval", "task": "h-eval", "norm": _load_norm(args.norm),
            "matrix": _load_matrix(args.matrix)}
    if args.gap_tol is not None:
        data["gap_tol"] = args.gap_tol
    sc = Scenario.from_dict(data)
    rec = run_scenario(sc, args.output)
    print(json.dumps(rec.result()["outputs"], indent=1, sort_keys=True))
    return rec.exit_code


def _parse_grid(spec):
    p = Path(spec)
    if p.is_file():
        try:
            return json.loads(p.read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ScenarioError([("--grid", f"cannot load {spec}: {exc}")]) from exc
    try:
        vals = [float(v) for v in spec.split(",")]
    except ValueError as exc:
        raise ScenarioError([("--grid", "expected DELTA or X0,Y0,X1,Y1,DELTA")]) from exc
    if len(vals) == 1:
        return {"delta": vals[0]}
    if len(vals) == 5:
        return {"lo": vals[:2], "hi": vals[2:4], "delta": vals[4]}
    raise ScenarioError([("--grid", "expected DELTA or X0,Y0,X1,Y1,DELTA")])


def cmd_flatnorm(args):
    try:
        chain = json.loads(Path(args.chain).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ScenarioError([("chain", f"cannot load {args.chain}: {exc}")]) from exc
    data = {"name": "flatnorm", "task": "flatnorm", "norm": _load_norm(args.norm), "chain": chain}
    if args.grid:
        data["grid"] = _parse_grid(args.grid)
    sc = Scenario.from_dict(data)
    rec = run_scenario(sc, args.output)
    out = rec.result()["outputs"]
    print(json.dumps({k: out[k] for k in out if k not in ("remainder", "filling")},
                     indent=1, sort_keys=True))
    return rec.exit_code


def build_parser():
    ap = argparse.ArgumentParser(prog="mmt", description="Multi-material transport networks.")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run a scenario file")
    p.add_argument("scenario")
    p.add_argument("-o", "--output", type=Path)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("example", help="run a built-in example")
    p.add_argument("name")
    p.add_argument("-o", "--output", type=Path)
    p.add_argument("--seed", type=int, default=0, help="seed of randomized examples (default 0)")
    p.set_defaults(func=cmd_example)

    p = sub.add_parser("list", help="list built-in examples")
    p.set_defaults(func=cmd_list)

    p = sub.add_parser("h-eval", help="bracket the generated matrix norm")
    p.add_argument("--norm", required=True, help="norm name or JSON file")
    p.add_argument("--matrix", required=True, help="JSON or whitespace/comma text matrix")
    p.add_argument("--gap-tol", type=float)
    p.add_argument("-o", "--output", type=Path)
    p.set_defaults(func=cmd_h_eval)

    p = sub.add_parser("flatnorm", help="flat norm of a chain on a grid")
    p.add_argument("chain", help="grid chain or segment chain JSON")
    p.add_argument("--grid", help="DELTA, X0,Y0,X1,Y1,DELTA or a JSON file")
    p.add_argument("--norm", default="linf-hex")
    p.add_argument("-o", "--output", type=Path)
    p.set_defaults(func=cmd_flatnorm)
    return ap


def main(argv=None):
    _setup_logging()
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ScenarioError as exc:
        return _report_input_error(exc)


if __name__ == "__main__":
    sys.exit(main())
