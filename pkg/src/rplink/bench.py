"""Run the linking methods against the truth model and tabulate the differences."""

from __future__ import annotations

import csv
import io
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Sequence

from .aggregation import Assignment, reconstruct_truth
from .formulation import (
    FixedValues,
    FullChronological,
    LinkingMethod,
    build_milp,
    relaxation_set,
)
from .formulation.milp import VarKey
from .schedule import Schedule
from .solver import ENGINE_ERROR, EngineNotFoundError, SolveOptions, solve, verify_solution
from .system import SystemInstance

REPORT_COLUMNS = (
    "method",
    "objective",
    "obj_delta_pct",
    "solve_time",
    "startups",
    "shutdowns",
    "su_delta_pct",
    "sd_delta_pct",
    "pns",
    "eps",
    "status",
)


@dataclass(frozen=True)
class RunReport:
    method: str
    status: str
    objective: float | None = None
    objective_delta_pct: float | None = None
    startups: float | None = None
    shutdowns: float | None = None
    su_delta_pct: float | None = None
    sd_delta_pct: float | None = None
    pns_total: float | None = None
    eps_total: float | None = None
    solve_time: float = 0.0
    schedule: Schedule | None = None
    message: str = ""
    violations: tuple = ()

    @property
    def ok(self) -> bool:
        return self.schedule is not None


def _delta(x: float | None, ref: float | None) -> float | None:
    if x is None or ref is None or ref == 0:
        return None
    return (x - ref) / abs(ref) * 100.0


def _solve_one(inst: SystemInstance, assign: Assignment | None, method: LinkingMethod, opts: SolveOptions) -> RunReport:
    try:
        milp = build_milp(inst, assign, method)
    except ValueError as exc:
        return RunReport(method.label, ENGINE_ERROR, message=f"model build failed: {exc}")
    try:
        sol = solve(milp, opts)
    except EngineNotFoundError as exc:
        return RunReport(method.label, ENGINE_ERROR, message=str(exc))
    if not sol.ok:
        return RunReport(method.label, sol.status, solve_time=sol.solve_time, message=sol.message)
    rps = tuple(range(1, len(milp.rp_weights) + 1))
    K = inst.period_length
    demand = {}
    for c in milp.rows("bal"):
        # balance rhs is the step's demand; boundary terms never enter it
        demand[(c.rp, c.k)] = c.rhs
    sched = Schedule(
        period_length=K,
        rps=rps,
        weights=milp.rp_weights,
        generator_ids=tuple(g.id for g in inst.generators),
        storage_ids=tuple(s.id for s in inst.storages),
        demand=demand,
        values=dict(sol.values),
    )
    bad = verify_solution(milp, sol, relaxed=relaxation_set(inst, method))
    return RunReport(
        method=method.label,
        status=sol.status,
        objective=sol.objective,
        startups=sched.total("su"),
        shutdowns=sched.total("sd"),
        pns_total=sched.total("pns"),
        eps_total=sched.total("eps"),
        solve_time=sol.solve_time,
        schedule=sched,
        message=sol.message,
        violations=tuple(bad),
    )


def fixed_values_from_truth(truth: Schedule, assign: Assignment) -> FixedValues:
    """Boundary values for each RP taken from the truth run's last step before the RP's source period."""
    K, N = truth.period_length, assign.period_count
    values = {}
    for rp, src in enumerate(assign.rp_source_period, start=1):
        prev = src - 1 if src > 1 else N
        for g in truth.generator_ids:
            for role in ("p", "u"):
                values[(role, rp, g)] = truth.values[VarKey(role, prev, K, g)]
        for s in truth.storage_ids:
            values[("l", rp, s)] = truth.values[VarKey("l", prev, K, s)]
    return FixedValues(values)


def run_comparison(
    inst: SystemInstance,
    assign: Assignment,
    methods: Sequence[LinkingMethod],
    opts: SolveOptions | None = None,
    jobs: int = 1,
) -> list[RunReport]:
    """Solve the truth model and each method's RP model; the truth report comes first.

    A :class:`FixedValues` method with no values gets them from the truth run. Method solves run
    on up to ``jobs`` threads; the returned order follows ``methods``.
    """
    opts = opts or SolveOptions()
    truth_inst = reconstruct_truth(inst, assign)
    truth = _solve_one(truth_inst, None, FullChronological(), opts)

    resolved: list[LinkingMethod | RunReport] = []
    for m in methods:
        if isinstance(m, FixedValues) and not m.values:
            if truth.schedule is None:
                resolved.append(RunReport(m.label, ENGINE_ERROR, message="fixed values need a solved truth run"))
                continue
            m = FixedValues(fixed_values_from_truth(truth.schedule, assign).values, label=m.label)
        resolved.append(m)

    def work(m):
        return m if isinstance(m, RunReport) else _solve_one(inst, assign, m, opts)

    if jobs > 1 and len(resolved) > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            raw = list(pool.map(work, resolved))
    else:
        raw = [work(m) for m in resolved]

    reports = [truth]
    ref = truth if truth.ok else None
    for r in raw:
        if ref is not None and r.ok:
            r = replace(
                r,
                objective_delta_pct=_delta(r.objective, ref.objective),
                su_delta_pct=_delta(r.startups, ref.startups),
                sd_delta_pct=_delta(r.shutdowns, ref.shutdowns),
            )
        reports.append(r)
    return reports


# -- tables -------------------------------------------------------------------


def _num(x: float | None) -> str:
    if x is None:
        return ""
    s = f"{x:.6g}"
    return "0" if s == "-0" else s


def _pct(x: float | None) -> str:
    if x is None:
        return ""
    s = f"{x:.2f}"
    return "0.00" if s == "-0.00" else s


def report_rows(reports: Sequence[RunReport]) -> list[list[str]]:
    rows = []
    for r in reports:
        rows.append(
            [
                r.method,
                _num(r.objective),
                _pct(r.objective_delta_pct),
                f"{r.solve_time:.3f}",
                _num(r.startups),
                _num(r.shutdowns),
                _pct(r.su_delta_pct),
                _pct(r.sd_delta_pct),
                _num(r.pns_total),
                _num(r.eps_total),
                r.status,
            ]
        )
    return rows


def emit_report(reports: Sequence[RunReport], fmt: str = "csv") -> str:
    """Render reports as CSV or a markdown table with identical cell text."""
    if not reports:
        raise ValueError("no reports to emit")
    rows = report_rows(reports)
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(REPORT_COLUMNS)
        w.writerows(rows)
        return buf.getvalue()
    if fmt == "markdown":
        lines = ["| " + " | ".join(REPORT_COLUMNS) + " |", "|" + "---|" * len(REPORT_COLUMNS)]
        lines += ["| " + " | ".join(row) + " |" for row in rows]
        return "\n".join(lines) + "\n"
    raise ValueError(f"unknown report format {fmt!r}")


def parse_markdown_report(text: str) -> list[list[str]]:
    """Header and data rows of a table written by :func:`emit_report` in markdown form."""
    out = []
    for i, line in enumerate(text.strip().splitlines()):
        if i == 1:
            continue
        out.append([cell.strip() for cell in line.strip().strip("|").split("|")])
    return out


def schedule_export(report: RunReport, path: str | Path) -> None:
    """Write one row per (rp, k) with demand and every variable column of the schedule."""
    sched = report.schedule
    if sched is None:
        raise ValueError(f"report {report.method!r} carries no schedule")
    cols = sched.columns()
    header = ["rp", "k", "demand"] + [f"{role}[{ent}]" if ent else role for role, ent in cols]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for rp in sched.rps:
            for k in range(1, sched.period_length + 1):
                row = [rp, k, repr(float(sched.demand[(rp, k)]))]
                row += [repr(float(sched.values[VarKey(role, rp, k, ent)])) for role, ent in cols]
                w.writerow(row)
