"""Pluggable MILP backend: LP file in, engine solution file out, values mapped to the catalog."""

from __future__ import annotations

import math
import tempfile
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import NamedTuple

from ..formulation.lpformat import write_lp
from ..formulation.milp import BINARY, MilpInstance, VarKey
from .backends import (
    BACKENDS,
    ENGINE_ERROR,
    ENV_VAR,
    FEASIBLE_GAP,
    INFEASIBLE,
    OPTIMAL,
    STATUSES,
    TIMEOUT,
    UNBOUNDED,
    EngineNotFoundError,
)

__all__ = [
    "ENGINE_ERROR",
    "ENV_VAR",
    "FEASIBLE_GAP",
    "INFEASIBLE",
    "OPTIMAL",
    "STATUSES",
    "TIMEOUT",
    "UNBOUNDED",
    "EngineNotFoundError",
    "MissingValueError",
    "Solution",
    "SolveOptions",
    "Violation",
    "solve",
    "verify_solution",
]

VERIFY_TOL = 1e-6


class MissingValueError(KeyError):
    pass


@dataclass(frozen=True)
class SolveOptions:
    time_limit: float = 600.0
    mip_gap: float = 1e-6
    threads: int = 1
    engine: str = "highs"
    command: str | None = None  # engine executable and flags; RPLINK_SOLVER when unset
    seed: int = 0
    keep_dir: str | None = None  # write model.lp / model.sol here instead of a temp dir

    def __post_init__(self):
        if not self.time_limit > 0:
            raise ValueError("time_limit must be > 0")
        if not 0 <= self.mip_gap < 1:
            raise ValueError("mip_gap must lie in [0, 1)")
        if int(self.threads) < 1:
            raise ValueError("threads must be >= 1")
        if self.engine not in BACKENDS:
            raise ValueError(f"unknown engine {self.engine!r}; choose from {sorted(BACKENDS)}")


@dataclass(frozen=True)
class Solution:
    status: str
    objective: float | None
    values: dict[VarKey, float] = field(default_factory=dict)
    solve_time: float = 0.0
    message: str = ""

    @property
    def ok(self) -> bool:
        return self.status in (OPTIMAL, FEASIBLE_GAP)


class Violation(NamedTuple):
    row: str
    residual: float


def solve(milp: MilpInstance, opts: SolveOptions | None = None) -> Solution:
    """Serialize ``milp``, run the configured engine, and map its answer back onto the catalog.

    Raises :class:`EngineNotFoundError` when the engine cannot be located; every other engine
    failure comes back as a Solution with status ``engine-error``.
    """
    opts = opts or SolveOptions()
    backend = BACKENDS[opts.engine]
    lp_text = write_lp(milp)
    if opts.keep_dir:
        workdir = Path(opts.keep_dir)
        workdir.mkdir(parents=True, exist_ok=True)
        return _solve_in(milp, lp_text, workdir, backend, opts)
    with tempfile.TemporaryDirectory(prefix="rplink-") as tmp:
        return _solve_in(milp, lp_text, Path(tmp), backend, opts)


def _solve_in(milp, lp_text, workdir, backend, opts) -> Solution:
    lp_path = workdir / "model.lp"
    lp_path.write_text(lp_text)
    t0 = time.perf_counter()
    raw = backend(lp_path, workdir, opts)
    elapsed = time.perf_counter() - t0

    values: dict[VarKey, float] = {}
    status, message = raw.status, raw.message
    if status in (OPTIMAL, FEASIBLE_GAP):
        # engines may omit zero-valued columns (CBC) or columns absent from every row
        for var in milp.variables:
            values[var.key] = float(raw.values.get(var.name, 0.0))
        unknown = set(raw.values) - {v.name for v in milp.variables}
        if unknown:
            status, message = ENGINE_ERROR, f"engine returned unknown column {sorted(unknown)[0]!r}"
            values = {}
    objective = raw.objective if status in (OPTIMAL, FEASIBLE_GAP) else None
    return Solution(status, objective, values, elapsed, message)


def verify_solution(milp: MilpInstance, sol: Solution, tol: float = VERIFY_TOL, relaxed=()) -> list[Violation]:
    """Re-evaluate every row, bound and integrality requirement at ``sol``.

    Returns the violations larger than ``tol`` (absolute). Variables in ``relaxed`` are exempt
    from the integrality check.
    """
    for var in milp.variables:
        if var.key not in sol.values:
            raise MissingValueError(f"no value for {var.name}")
    out: list[Violation] = []
    for c in milp.constraints:
        r = c.residual(sol.values)
        if r > tol:
            out.append(Violation(c.name, r))
    for var in milp.variables:
        x = sol.values[var.key]
        r = max(var.lb - x, x - var.ub, 0.0)
        if r > tol:
            out.append(Violation(f"bound:{var.name}", r))
        if var.kind == BINARY and var.key not in relaxed:
            r = min(abs(x), abs(x - 1.0))
            if r > tol:
                out.append(Violation(f"integrality:{var.name}", r))
    if sol.objective is not None and sol.values:
        recomputed = milp.objective_value(sol.values)
        r = abs(recomputed - sol.objective)
        if r > tol * max(1.0, abs(recomputed)):
            out.append(Violation("objective", r))
    if any(math.isnan(v) for v in sol.values.values()):
        out.append(Violation("nan", math.nan))
    return out
