"""Command-line entry points: classify, solve, diverge, setops.

Exit codes: 0 decided or certified, 2 undetermined or uncertified, 1 error.
"""

from __future__ import annotations

import argparse
import ast
import json
import logging
import sys
import time

import numpy as np

from .classifier import Verdict, classify
from .cones import ConeError, PolyCone
from .io import RunRecord, SchemaError, read_json, validate, write_json
from .registry import RegistryError, gradient_check, load_spec
from .sandwich import SandwichAbort, divergence_demo, sandwich_solve
from .scalar import GradientCheckError, SolverError
from .uppersets import UpperSet, UpperSetError, intersect, is_self_bounded_set, odot, oplus

EXIT_OK, EXIT_ERROR, EXIT_UNDECIDED = 0, 1, 2

log = logging.getLogger("selfbound")


class CliError(RuntimeError):
    pass


def _emit(args, payload, csv_text=None):
    if args.out:
        write_json(args.out, payload)
    else:
        from .io import dumps
        print(dumps(payload))
    if csv_text is not None and args.csv:
        with open(args.csv, "w") as fh:
            fh.write(csv_text)


def _record(args, spec, command, config, started):
    if not args.record:
        return
    rec = RunRecord(spec.hash if spec else "", command, config,
                    {"out": args.out, "csv": args.csv}, time.perf_counter() - started)
    write_json(args.record, rec)


def _load(args):
    spec = load_spec(args.problem)
    prob = spec.build()
    gradient_check(prob, seed=args.seed)
    return spec, prob


def _vector(text):
    try:
        values = json.loads(text) if text.strip().startswith("[") else \
            [float(v) for v in text.split(",")]
    except ValueError as exc:
        raise CliError(f"cannot parse vector {text!r}") from exc
    return np.asarray(values, float)


def _cone_arg(text):
    """A cone given as a JSON file path or an inline JSON list of generators."""
    text = text.strip()
    if text.startswith("["):
        return PolyCone.from_generators(json.loads(text))
    data = read_json(text)
    validate(data, "polycone")
    return PolyCone.from_dict(data)


def cmd_classify(args):
    started = time.perf_counter()
    spec, prob = _load(args)
    report = classify(prob, args.resolution)
    _emit(args, report.to_dict(), report.grid_csv())
    _record(args, spec, "classify", {"resolution": args.resolution, "seed": args.seed}, started)
    log.info("%s", report.label)
    return EXIT_UNDECIDED if report.verdict is Verdict.UNDETERMINED else EXIT_OK


def cmd_solve(args):
    started = time.perf_counter()
    spec, prob = _load(args)
    report = classify(prob, args.resolution)
    if report.verdict is Verdict.NOT_SELF_BOUNDED:
        raise CliError(
            "problem is not self-bounded: for every finite set Y of images, "
            "h(conv Y + K, P) = inf, so no finite eps-solution exists; "
            "see the 'diverge' command for a distance trace")
    if report.verdict is Verdict.UNDETERMINED:
        log.error("classification undetermined: %s", report.note)
        _emit(args, {"classification": report.to_dict()})
        return EXIT_UNDECIDED
    K = prob.C if report.verdict is Verdict.BOUNDED else report.recc_estimate
    result = sandwich_solve(prob, K, args.eps, args.budget)
    payload = {"verdict": report.label, "result": result.to_dict()}
    _emit(args, payload, result.frontier_csv())
    _record(args, spec, "solve", {"eps": args.eps, "budget": args.budget,
                                  "resolution": args.resolution, "seed": args.seed}, started)
    return EXIT_OK if result.certified else EXIT_UNDECIDED


def cmd_diverge(args):
    started = time.perf_counter()
    spec, prob = _load(args)
    K = _cone_arg(args.cone)
    trace = divergence_demo(prob, K, _vector(args.y_bar), _vector(args.k_bar), args.n_max,
                            seed=args.seed)
    csv_text = "n,distance\n" + "".join(f"{n},{d!r}\n" for n, d in trace.distances)
    _emit(args, trace.to_dict(), csv_text)
    _record(args, spec, "diverge", {"n_max": args.n_max, "seed": args.seed}, started)
    return EXIT_UNDECIDED if trace.contradiction else EXIT_OK


# ------------------------------------------------------------------ setops

_SYMBOLS = {"⊕": "+", "⊙": "*", "∩": "&"}


def evaluate_setops(text, sets, C=None):
    """Evaluate an expression such as ``"0 ⊙ A"`` or ``"(A ⊕ B) ∩ C"``.

    ``⊕``/``+`` is the closed Minkowski sum, ``⊙``/``*`` scales a set by a
    non-negative number and ``∩``/``&`` intersects.  ``self_bounded(X)``
    returns the self-boundedness flag and anchor of ``X``.
    """
    for sym, op in _SYMBOLS.items():
        text = text.replace(sym, op)
    try:
        tree = ast.parse(text, mode="eval").body
    except SyntaxError as exc:
        raise CliError(f"cannot parse expression: {exc.msg}") from None

    def ev(node):
        if isinstance(node, ast.Name):
            if node.id not in sets:
                raise CliError(f"unknown set {node.id!r}")
            return sets[node.id]
        if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
            return float(node.value)
        if isinstance(node, ast.BinOp):
            left, right = ev(node.left), ev(node.right)
            if isinstance(node.op, ast.Add):
                return oplus(left, right)
            if isinstance(node.op, ast.BitAnd):
                return intersect(left, right)
            if isinstance(node.op, ast.Mult):
                if isinstance(left, float) and isinstance(right, UpperSet):
                    return odot(left, right, C)
                if isinstance(right, float) and isinstance(left, UpperSet):
                    return odot(right, left, C)
        if isinstance(node, ast.Call) and isinstance(node.func, ast.Name) \
                and node.func.id == "self_bounded" and len(node.args) == 1:
            flag, anchor = is_self_bounded_set(ev(node.args[0]))
            return {"self_bounded": flag,
                    "anchor": None if anchor is None else np.asarray(anchor).tolist()}
        raise CliError(f"unsupported expression: {ast.unparse(node)}")

    return ev(tree)


def cmd_setops(args):
    started = time.perf_counter()
    data = read_json(args.expr)
    validate(data, "setops")
    sets = {name: UpperSet.from_dict(d) for name, d in data["sets"].items()}
    C = PolyCone.from_dict(data["C"]) if data.get("C") else None
    value = evaluate_setops(data["expr"], sets, C)
    _emit(args, value.to_dict() if isinstance(value, UpperSet) else value)
    _record(args, None, "setops", {"expr": data["expr"]}, started)
    return EXIT_OK


# -------------------------------------------------------------------- main


def build_parser():
    parser = argparse.ArgumentParser(prog="selfbound", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, problem=True):
        if problem:
            p.add_argument("problem", help="problem JSON file")
        p.add_argument("--out", help="write the JSON result here (default: stdout)")
        p.add_argument("--csv", help="also write a CSV table here")
        p.add_argument("--seed", type=int, default=0, help="seed for sampled checks")
        p.add_argument("--record", help="write a run record JSON here")

    p = sub.add_parser("classify", help="bounded / self-bounded / not self-bounded")
    common(p)
    p.add_argument("--resolution", type=float, default=1.0, help="angular grid (degrees)")
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("solve", help="certified inner/outer approximation")
    common(p)
    p.add_argument("--eps", type=float, default=1e-2)
    p.add_argument("--budget", type=int, default=512, help="maximum number of weights")
    p.add_argument("--resolution", type=float, default=1.0)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("diverge", help="distance trace along y_bar + n k_bar")
    common(p)
    p.add_argument("--cone", required=True, help="K as a JSON file or inline generator list")
    p.add_argument("--y-bar", required=True)
    p.add_argument("--k-bar", required=True,
                   help="direction, e.g. --k-bar=-0.37,1 (use = when it starts with -)")
    p.add_argument("--n-max", type=int, default=100)
    p.set_defaults(func=cmd_diverge)

    p = sub.add_parser("setops", help="evaluate an upper-set expression file")
    p.add_argument("expr", help="JSON file with 'sets' and 'expr'")
    common(p, problem=False)
    p.set_defaults(func=cmd_setops)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (CliError, SchemaError, RegistryError, GradientCheckError, SandwichAbort,
            SolverError, ConeError, UpperSetError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
