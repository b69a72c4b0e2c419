"""``rplink`` command-line interface.

Every subcommand reads the same run configuration: a JSON file (``--config``), patched by
``--set key=value`` overrides and the dedicated flags. Recognized keys::

    instance        instance bundle (directory or manifest path)
    assignment      assignment CSV; otherwise ``rp_count`` periods are clustered with ``seed``
    rp_count, seed  clustering settings (no assignment and no rp_count: one RP per period)
    methods         list drawn from no-enforcement, fixed, cyclic, markov
    fixed_values    optional CSV (role,rp,entity,value) for the fixed method
    jobs            concurrent method solves
    out             output directory
    solver.*        time_limit, mip_gap, threads, engine, command, seed

Exit codes: 0 success, 2 usage or input error, 3 a model failed to solve.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path
from typing import Any

from . import __version__
from .aggregation import (
    Assignment,
    AssignmentError,
    baseline_cluster,
    build_transition_matrix,
    read_assignment_csv,
    reconstruct_truth,
    rp_weights,
    write_assignment_csv,
    write_matrix_csv,
    write_weights_csv,
)
from .bench import emit_report, run_comparison, schedule_export
from .formulation import (
    METHOD_NAMES,
    Cyclic,
    FixedValues,
    FormulationError,
    FullChronological,
    Markov,
    NoEnforcement,
    build_milp,
    write_lp,
)
from .solver import SolveOptions
from .system import InstanceError, load_instance, validate_instance

EXIT_OK, EXIT_INPUT, EXIT_SOLVE = 0, 2, 3

DEFAULTS: dict[str, Any] = {
    "instance": None,
    "assignment": None,
    "rp_count": None,
    "seed": 0,
    "methods": list(METHOD_NAMES),
    "fixed_values": None,
    "jobs": 1,
    "out": "rplink-out",
    "solver": {},
}


class InputError(Exception):
    pass


def _parse_value(text: str) -> Any:
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def _apply_set(cfg: dict, item: str) -> None:
    if "=" not in item:
        raise InputError(f"--set expects key=value, got {item!r}")
    key, raw = item.split("=", 1)
    node = cfg
    parts = key.strip().split(".")
    for p in parts[:-1]:
        node = node.setdefault(p, {})
        if not isinstance(node, dict):
            raise InputError(f"--set {key}: {p!r} is not a section")
    node[parts[-1]] = _parse_value(raw)


def load_config(args: argparse.Namespace) -> dict:
    cfg = json.loads(json.dumps(DEFAULTS))
    if args.config:
        try:
            user = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise InputError(f"cannot read config {args.config}: {exc}") from exc
        if not isinstance(user, dict):
            raise InputError(f"config {args.config} must hold a JSON object")
        base = Path(args.config).parent
        for key in ("instance", "assignment", "fixed_values"):
            if isinstance(user.get(key), str):
                user[key] = str(base / user[key])
        cfg.update({k: v for k, v in user.items() if k != "solver"})
        cfg["solver"].update(user.get("solver", {}))
    for item in args.set or []:
        _apply_set(cfg, item)
    for key in ("instance", "assignment", "rp_count", "seed", "jobs", "out"):
        v = getattr(args, key, None)
        if v is not None:
            cfg[key] = v
    if getattr(args, "engine", None):
        cfg["solver"]["engine"] = args.engine
    if getattr(args, "method", None):
        cfg["methods"] = [m.strip() for chunk in args.method for m in chunk.split(",") if m.strip()]
    if not cfg["instance"]:
        raise InputError("no instance given (positional argument, --instance, or config key 'instance')")
    return cfg


def _solve_options(cfg: dict) -> SolveOptions:
    try:
        return SolveOptions(**cfg["solver"])
    except (TypeError, ValueError) as exc:
        raise InputError(f"bad solver options: {exc}") from exc


def _assignment(cfg: dict, inst) -> Assignment:
    if cfg["assignment"]:
        assign = read_assignment_csv(cfg["assignment"])
        if assign.period_count != inst.period_count:
            raise InputError(f"assignment covers {assign.period_count} periods, instance has {inst.period_count}")
        return assign
    R = cfg["rp_count"]
    if R is None or int(R) == inst.period_count:
        return Assignment.identity(inst.period_count)
    if not 1 <= int(R) <= inst.period_count:
        raise InputError(f"rp_count must lie in [1, {inst.period_count}], got {R}")
    return baseline_cluster(inst, int(R), seed=int(cfg["seed"]))


def read_fixed_values(path: str) -> FixedValues:
    values = {}
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or set(reader.fieldnames) < {"role", "rp", "entity", "value"}:
            raise InputError(f"{path}: header must contain role,rp,entity,value")
        for line, row in enumerate(reader, start=2):
            try:
                values[(row["role"], int(row["rp"]), row["entity"])] = float(row["value"])
            except (TypeError, ValueError) as exc:
                raise InputError(f"{path}:{line}: {exc}") from exc
    return FixedValues(values)


def _methods(cfg: dict, assign: Assignment, parser: argparse.ArgumentParser) -> list:
    names = cfg["methods"]
    if isinstance(names, str):
        names = [n for n in names.split(",") if n]
    out = []
    for name in names:
        if name == "no-enforcement":
            out.append(NoEnforcement())
        elif name == "fixed":
            out.append(read_fixed_values(cfg["fixed_values"]) if cfg["fixed_values"] else FixedValues())
        elif name == "cyclic":
            out.append(Cyclic())
        elif name == "markov":
            out.append(Markov(build_transition_matrix(assign)))
        else:
            parser.error(f"unknown method {name!r}; choose from {', '.join(METHOD_NAMES)}")
    return out


def _out_dir(cfg: dict) -> Path:
    out = Path(cfg["out"])
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise InputError(f"cannot create output directory {out}: {exc}") from exc
    return out


# -- subcommands ----------------------------------------------------------------


def cmd_validate(cfg: dict, parser) -> int:
    inst = load_instance(cfg["instance"])
    assign = _assignment(cfg, inst) if cfg["assignment"] else None
    print(f"{inst.name or cfg['instance']}: {len(inst.generators)} generators, {len(inst.storages)} storages, "
          f"{inst.period_count} periods of {inst.period_length} steps")
    if assign is not None:
        print(f"assignment: {assign.rp_count} RPs over {assign.period_count} periods")
    print("ok")
    return EXIT_OK


def cmd_aggregate(cfg: dict, parser) -> int:
    inst = load_instance(cfg["instance"])
    assign = _assignment(cfg, inst)
    out = _out_dir(cfg)
    matrix = build_transition_matrix(assign)
    write_assignment_csv(assign, out / "assignment.csv")
    write_matrix_csv(matrix, out / "matrix.csv")
    write_weights_csv(rp_weights(assign), out / "weights.csv")
    sums = matrix.pred_prob.sum(axis=0)
    print(f"rp_count {assign.rp_count}")
    print("column sums " + " ".join(f"{s:.6f}" for s in sums))
    return EXIT_OK


def cmd_truth(cfg: dict, parser) -> int:
    inst = load_instance(cfg["instance"])
    assign = _assignment(cfg, inst)
    opts = _solve_options(cfg)
    out = _out_dir(cfg)
    report = run_comparison(inst, assign, [], opts)[0]
    (out / "truth.csv").write_text(emit_report([report], "csv"))
    if report.schedule is None:
        print(f"truth: {report.status}: {report.message}", file=sys.stderr)
        return EXIT_SOLVE
    schedule_export(report, out / "schedule_truth.csv")
    (out / "objective.txt").write_text(f"{report.objective!r}\n")
    print(f"truth objective {report.objective!r} ({report.status})")
    return EXIT_OK


def cmd_compare(cfg: dict, parser) -> int:
    inst = load_instance(cfg["instance"])
    assign = _assignment(cfg, inst)
    methods = _methods(cfg, assign, parser)
    opts = _solve_options(cfg)
    out = _out_dir(cfg)
    reports = run_comparison(inst, assign, methods, opts, jobs=max(1, int(cfg["jobs"])))
    (out / "report.csv").write_text(emit_report(reports, "csv"))
    (out / "report.md").write_text(emit_report(reports, "markdown"))
    failed = False
    for r in reports:
        if r.schedule is None:
            failed = True
            print(f"{r.method}: {r.status}: {r.message}", file=sys.stderr)
        else:
            schedule_export(r, out / f"schedule_{r.method}.csv")
    sys.stdout.write(emit_report(reports, "markdown"))
    return EXIT_SOLVE if failed else EXIT_OK


def cmd_build(cfg: dict, parser) -> int:
    inst = load_instance(cfg["instance"])
    assign = _assignment(cfg, inst)
    methods = _methods(cfg, assign, parser)
    out = _out_dir(cfg)
    truth = build_milp(reconstruct_truth(inst, assign), None, FullChronological())
    (out / "model_truth.lp").write_text(write_lp(truth))
    for m in methods:
        if isinstance(m, FixedValues) and not m.values:
            print("fixed: skipped (needs fixed_values; `compare` derives them from the truth run)", file=sys.stderr)
            continue
        (out / f"model_{m.label}.lp").write_text(write_lp(build_milp(inst, assign, m)))
    print(f"wrote LP files to {out}")
    return EXIT_OK


COMMANDS = {
    "validate": (cmd_validate, "load and check an instance (and assignment)"),
    "aggregate": (cmd_aggregate, "write assignment, predecessor matrix and RP weights"),
    "truth": (cmd_truth, "solve the full-horizon truth model only"),
    "compare": (cmd_compare, "solve truth and each linking method, write reports and schedules"),
    "build": (cmd_build, "write LP files without solving"),
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("instance", nargs="?", help="instance bundle directory or manifest")
    common.add_argument("--config", help="JSON run configuration")
    common.add_argument("--set", action="append", metavar="KEY=VALUE", help="override a config key (dotted for solver.*)")
    common.add_argument("--assignment", help="assignment CSV (period,rp[,source])")
    common.add_argument("--rp-count", dest="rp_count", type=int, help="cluster into this many RPs")
    common.add_argument("--seed", type=int, help="clustering seed")
    common.add_argument("--method", action="append", help="linking method(s), comma separated; repeatable")
    common.add_argument("--jobs", type=int, help="concurrent method solves")
    common.add_argument("--engine", help="solver backend: highs, highspy or cbc")
    common.add_argument("--out", help="output directory")

    parser = argparse.ArgumentParser(prog="rplink", description="Representative-period UC with edge-linking methods.")
    parser.add_argument("--version", action="version", version=f"rplink {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, (_, help_text) in COMMANDS.items():
        sub.add_parser(name, parents=[common], help=help_text, description=help_text)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    func = COMMANDS[args.command][0]
    try:
        cfg = load_config(args)
        return func(cfg, parser)
    except InstanceError as exc:
        for line in str(exc).splitlines() or [type(exc).__name__]:
            print(f"error: {line}", file=sys.stderr)
        return EXIT_INPUT
    except (InputError, AssignmentError, FormulationError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
