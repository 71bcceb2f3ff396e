"""Batch front door: parse a run configuration, dispatch one named command,
emit a deterministic JSON (or, for schedule-indexed series, CSV) report.

Exit codes: 0 when every verdict passes, 2 when any check fails, 1 on
configuration or model errors.  Fixed seed and inputs give byte-identical
output; the worker count affects timing only.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass, field
from pathlib import Path

from . import asymptotics, diagnostics, fractional, fsup, kyfan
from .errors import ConfigError, KyfanLabError, SeriesFormatError
from .models import model_from_dict, model_id, model_to_dict, validate
from .reports import Tolerance, to_jsonable
from .sums import GramEngine

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_CHECK_FAILED = 2

#: commands whose report carries a series usable as CSV (index, value[, bound])
SERIES_COMMANDS = {
    "asymp.fekete",
    "asymp.cesaro",
    "frac.decay",
    "frac.series",
    "diag.chain",
    "fsup.table",
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse would exit(2); config errors are exit 1
        raise ConfigError(message)


@dataclass
class RunConfig:
    command: str
    model: dict | None
    params: dict
    tol: Tolerance
    fmt: str = "json"
    out: str | None = None
    seed: int = 0
    workers: int = 1
    results: list = field(default_factory=list)


def _add_common(p: _Parser, model_required: bool = True) -> None:
    p.add_argument("--model", required=model_required,
                   help="model spec: path to a JSON file or inline JSON")
    p.add_argument("--tol-abs", type=float, default=1e-12)
    p.add_argument("--tol-rel", type=float, default=1e-9)
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.add_argument("--out", default=None, help="output path (default: stdout)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=1)


def build_parser() -> _Parser:
    parser = _Parser(prog="kyfan-lab", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def cmd(name, **kwargs):
        p = sub.add_parser(name, **kwargs)
        _add_common(p)
        return p

    p = cmd("validate", help="measure every model invariant with slack")
    p.add_argument("--psd-window", type=int, default=64)

    p = cmd("check", help="run one named check at a single (n, m)")
    p.add_argument("name", choices=kyfan.CHECK_NAMES)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--delta", type=float, default=None)

    p = cmd("scan", help="run one named check over a grid of (n, m)")
    p.add_argument("name", choices=kyfan.CHECK_NAMES)
    p.add_argument("--n-max", type=int, required=True)
    p.add_argument("--m-max", type=int, required=True)
    p.add_argument("--sampling", choices=("exhaustive", "random"), default="exhaustive")
    p.add_argument("--count", type=int, default=None)
    p.add_argument("--delta", type=float, default=None)

    p = cmd("asymp.fekete", help="running infimum of ||S_n||^2 / n^2")
    p.add_argument("--N", type=int, required=True)

    p = cmd("asymp.cesaro", help="||S_N/N|| against inf ||S_n/n|| with trend")
    p.add_argument("--N", type=int, required=True)

    p = cmd("asymp.project", help="fixed-space projection of a unitary orbit")
    p.add_argument("--N", type=int, required=True)

    p = cmd("asymp.dlim", help="density-convergence test of the per-step ratios "
                               "along an arithmetic progression")
    p.add_argument("--a", type=int, required=True)
    p.add_argument("--N", type=int, required=True)
    p.add_argument("--epsilon", type=float, default=0.05)

    p = cmd("diag.ratio", help="one ratio R at indices n < m")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--m", type=int, required=True)

    p = cmd("diag.sum", help="ratio sums along an index sequence")
    p.add_argument("--seq", required=True,
                   help='"arithmetic:a", "geometric:b", "squares", or "n1,n2,..."')
    p.add_argument("--N", type=int, required=True)
    p.add_argument("--normalization", choices=("by_count", "by_nN"), default="by_count")
    p.add_argument("--recenter", action="store_true")

    p = cmd("diag.arith", help="closed-form ratio average along n_k = a k")
    p.add_argument("--a", type=int, required=True)
    p.add_argument("--N", type=int, required=True)

    p = cmd("diag.chain", help="telescoping series over a divisibility chain")
    p.add_argument("--base", type=int, required=True)
    p.add_argument("--depth", type=int, required=True)

    p = cmd("frac.apply", help="fractional difference transform of the model")
    p.add_argument("--alpha", type=float, required=True)

    p = cmd("frac.decay", help="decay trace ||S_n||/n^(1-alpha) of the transform")
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--N", type=int, required=True)
    p.add_argument("--epsilon", type=float, default=fractional.DECAY_EPS)

    p = cmd("frac.series", help="membership series sum ||S_n||^2/n^2")
    p.add_argument("--N", type=int, required=True)

    p = cmd("fsup.table", help="running-sup table f^2(1..N)")
    p.add_argument("--N", type=int, required=True)

    p = cmd("fsup.subadd", help="exhaustive subadditivity of f^2")
    p.add_argument("--n-max", type=int, required=True)

    p = cmd("fsup.iratio", help="three-point ratio bound at (x, y)")
    p.add_argument("--x", type=int, required=True)
    p.add_argument("--y", type=int, required=True)

    return parser


def _load_model(spec: str):
    text = spec.strip()
    if not text.startswith("{"):
        path = Path(spec)
        if not path.exists():
            raise ConfigError(f"model file not found: {spec}")
        text = path.read_text()
    try:
        payload = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"model spec is not valid JSON: {exc}") from exc
    return model_from_dict(payload)


def _dispatch(args, model, tol: Tolerance) -> tuple[list, dict, int]:
    """Returns (results, params, failures)."""
    cmdname = args.command
    if cmdname == "validate":
        rep = validate(model, psd_window=args.psd_window)
        return (
            [rep.to_dict()],
            {"psd_window": args.psd_window},
            0 if rep.passed else 1,
        )

    engine = GramEngine.for_model(model)

    if cmdname == "check":
        fn = {
            "kyfan.identity": lambda: kyfan.kyfan_identity(engine, args.n, args.m, tol),
            "kyfan.inequality": lambda: kyfan.kyfan_inequality(engine, args.n, args.m, tol),
            "kyfan.lemma1": lambda: kyfan.norming_inequality(
                engine,
                kyfan.NormingSequence.power(1.0 if args.delta is None else args.delta),
                args.n, args.m, tol,
            ),
            "kyfan.superadd": lambda: kyfan.superadditivity_check(engine, args.n, args.m, tol),
        }[args.name]
        rep = fn()
        params = {"name": args.name, "n": args.n, "m": args.m, "delta": args.delta}
        return [rep.to_dict()], params, 0 if rep.passed else 1

    if cmdname == "scan":
        rep = kyfan.scan(
            model, args.name, args.n_max, args.m_max,
            sampling=args.sampling, count=args.count, seed=args.seed,
            workers=args.workers, delta=args.delta, tol=tol,
        )
        failures = len(rep.failures) + len(rep.errors)
        return [rep.to_dict()], dict(rep.params, name=args.name), failures

    if cmdname == "asymp.fekete":
        trace = asymptotics.fekete_limit(
            lambda n: engine.sum_norm_sq(n) / n, args.N, spot_pairs=8, seed=args.seed
        )
        return [trace.to_dict()], {"N": args.N}, len(trace.spot_failures)

    if cmdname == "asymp.cesaro":
        rep = asymptotics.cesaro_limit(engine, args.N, tol)
        return [rep.to_dict()], {"N": args.N}, 0

    if cmdname == "asymp.project":
        rep = asymptotics.fixed_space_projection(model, args.N)
        return [rep.to_dict()], {"N": args.N}, 0

    if cmdname == "asymp.dlim":
        a = args.a

        def step_ratio(k: int) -> float:
            return diagnostics.ratio_statistic(engine, a * k, a * (k + 1)) / a

        rep = asymptotics.density_limit(step_ratio, args.N, args.epsilon)
        params = {"a": a, "N": args.N, "epsilon": args.epsilon}
        return [rep.to_dict()], params, 0 if rep.verdict == "consistent-with-zero" else 1

    if cmdname == "diag.ratio":
        value = diagnostics.ratio_statistic(engine, args.n, args.m)
        return (
            [{"n_k": args.n, "n_k1": args.m, "ratio": value}],
            {"n": args.n, "m": args.m},
            0,
        )

    if cmdname == "diag.sum":
        seq = diagnostics.IndexSequence.parse(args.seq)
        rep = diagnostics.ratio_sum(engine, seq, args.N, recenter_model=args.recenter)
        d = rep.to_dict()
        d["normalization"] = args.normalization
        d["value"] = rep.by_count if args.normalization == "by_count" else rep.by_nN
        params = {"seq": args.seq, "N": args.N, "normalization": args.normalization,
                  "recenter": args.recenter}
        return [d], params, 0

    if cmdname == "diag.arith":
        rep = diagnostics.arithmetic_identity(engine, args.a, args.N, tol)
        return [rep.to_dict()], {"a": args.a, "N": args.N}, 0 if rep.passed else 1

    if cmdname == "diag.chain":
        chain = diagnostics.ChainSpec.uniform(args.base, args.depth)
        rep = diagnostics.chain_series(engine, chain, args.depth)
        failures = sum(
            1 for res, part in zip(rep.residuals, rep.partial_sums)
            if res > tol.allowance(part)
        )
        return [rep.to_dict()], {"base": args.base, "depth": args.depth}, failures

    if cmdname == "frac.apply":
        transform = fractional.apply_fractional(model, args.alpha)
        return [transform.to_dict()], {"alpha": args.alpha}, 0

    if cmdname == "frac.decay":
        transform = fractional.apply_fractional(model, args.alpha)
        rep = fractional.decay_trace(transform, args.N, epsilon=args.epsilon)
        params = {"alpha": args.alpha, "N": args.N, "epsilon": args.epsilon}
        return [rep.to_dict()], params, 0

    if cmdname == "frac.series":
        rep = fractional.membership_series(model, args.N)
        return [rep.to_dict()], {"N": args.N}, 0

    if cmdname == "fsup.table":
        table = fsup.FSupTable.build(engine, args.N)
        return [table.to_dict()], {"N": args.N}, 0

    if cmdname == "fsup.subadd":
        rep = fsup.subadditivity_scan(engine, args.n_max, tol)
        return [rep.to_dict()], {"n_max": args.n_max}, rep.failures

    if cmdname == "fsup.iratio":
        rep = fsup.prop_iratio(engine, args.x, args.y, tol)
        return [rep.to_dict()], {"x": args.x, "y": args.y}, 0 if rep.passed else 1

    raise ConfigError(f"unknown command {cmdname!r}")


def _worst_residual(results: list) -> float:
    """Largest residual found anywhere in the results.

    Inequality residuals are signed (negative = slack), so the floor at
    zero makes 0.0 read as "no violation anywhere".
    """
    worst = 0.0

    def visit(obj):
        nonlocal worst
        if isinstance(obj, dict):
            for key in ("residual", "worst_residual", "decomposition_residual"):
                if key in obj and isinstance(obj[key], (int, float)):
                    worst = max(worst, float(obj[key]))
            for v in obj.values():
                visit(v)
        elif isinstance(obj, list):
            for v in obj:
                visit(v)

    visit(results)
    return worst


def _series_rows(command: str, results: list) -> tuple[list[str], list[tuple]]:
    body = results[0]
    if command == "asymp.fekete":
        rows = [(p["n"], p["value"], p["running_inf"]) for p in body["trace"]]
        return ["index", "value", "bound"], rows
    if command == "asymp.cesaro":
        rows = [(p["n"], p["norm"], p["running_inf"]) for p in body["checkpoints"]]
        return ["index", "value", "bound"], rows
    if command == "frac.decay":
        rows = [(p["n"], p["value"]) for p in body["trace"]]
        return ["index", "value"], rows
    if command == "frac.series":
        rows = [(p["N"], p["partial_sum"]) for p in body["schedule"]]
        return ["index", "value"], rows
    if command == "diag.chain":
        rows = [
            (j + 1, part, tele)
            for j, (part, tele) in enumerate(
                zip(body["partial_sums"], body["telescoped"])
            )
        ]
        return ["index", "value", "bound"], rows
    if command == "fsup.table":
        rows = [(n + 1, v) for n, v in enumerate(body["values"])]
        return ["index", "value"], rows
    raise SeriesFormatError(f"command {command!r} does not produce a series")


def emit_series(payload: dict, stream) -> None:
    """Write the schedule-indexed series of a report as CSV.

    Numbers are printed with 17 significant digits so the table
    round-trips exactly.
    """
    command = payload.get("command")
    if command not in SERIES_COMMANDS:
        raise SeriesFormatError(f"command {command!r} does not produce a series")
    header, rows = _series_rows(command, payload["results"])
    stream.write(",".join(header) + "\n")
    for row in rows:
        cells = []
        for v in row:
            if isinstance(v, float):
                cells.append(f"{v:.17g}")
            else:
                cells.append(str(v))
        stream.write(",".join(cells) + "\n")


def run(argv=None, stdout=None) -> int:
    """Execute one command; returns the process exit code."""
    out_stream = stdout if stdout is not None else sys.stdout
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        tol = Tolerance(atol=args.tol_abs, rtol=args.tol_rel)
        model = _load_model(args.model)
        results, params, failures = _dispatch(args, model, tol)
        payload = {
            "command": args.command if args.command not in ("check", "scan")
            else f"{args.command} {args.name}",
            "model": {"id": model_id(model), "spec": model_to_dict(model)},
            "params": to_jsonable(dict(params, seed=args.seed, workers=args.workers,
                                       tol_abs=args.tol_abs, tol_rel=args.tol_rel)),
            "results": to_jsonable(results),
            "summary": {
                "worst_residual": _worst_residual(to_jsonable(results)),
                "failures": failures,
            },
        }
        if args.format == "csv":
            # commands addressed as "check name"/"scan name" never emit series
            payload_for_series = dict(payload, command=args.command)
            text_target = out_stream
            if args.out:
                with open(args.out, "w") as fh:
                    emit_series(payload_for_series, fh)
            else:
                emit_series(payload_for_series, text_target)
        else:
            text = json.dumps(payload, indent=2, sort_keys=True) + "\n"
            if args.out:
                Path(args.out).write_text(text)
            else:
                out_stream.write(text)
        return EXIT_CHECK_FAILED if failures else EXIT_OK
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except KyfanLabError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
