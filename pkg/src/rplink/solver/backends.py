"""Engine adapters. Each takes an LP file and returns (status, objective, values by name, message)."""

from __future__ import annotations

import os
import shlex
import shutil
import subprocess
import sys
from importlib import util as importlib_util
from pathlib import Path

ENV_VAR = "RPLINK_SOLVER"
# extra wall time granted to a subprocess beyond the engine's own time limit
GRACE_SECONDS = 30.0
FEAS_TOL = 1e-9

OPTIMAL = "optimal"
FEASIBLE_GAP = "feasible-gap"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"
TIMEOUT = "timeout"
ENGINE_ERROR = "engine-error"
STATUSES = (OPTIMAL, FEASIBLE_GAP, INFEASIBLE, UNBOUNDED, TIMEOUT, ENGINE_ERROR)


class EngineNotFoundError(RuntimeError):
    pass


class RawResult:
    __slots__ = ("status", "objective", "values", "message")

    def __init__(self, status: str, objective: float | None = None, values=None, message: str = ""):
        self.status = status
        self.objective = objective
        self.values = values or {}
        self.message = message


# -- HiGHS -------------------------------------------------------------------

_HIGHS_LIMITS = {
    "Time limit reached",
    "Iteration limit reached",
    "Solution limit reached",
    "Memory limit reached",
    "Bound on objective reached",
    "Target for objective reached",
    "Interrupted by user",
    "Interrupted by HiGHS",
}


def map_highs_status(model_status: str, has_primal: bool) -> str:
    s = model_status.strip()
    if s in ("Optimal", "Empty"):
        return OPTIMAL
    if s == "Infeasible":
        return INFEASIBLE
    if s == "Unbounded":
        return UNBOUNDED
    if s == "Primal infeasible or unbounded":
        return INFEASIBLE
    if s in _HIGHS_LIMITS:
        return FEASIBLE_GAP if has_primal else TIMEOUT
    if s == "Unknown" and has_primal:
        return FEASIBLE_GAP
    return ENGINE_ERROR


def parse_highs_solution(text: str) -> RawResult:
    """Parse HiGHS' raw solution file (``write_solution_style = 0``)."""
    lines = text.splitlines()
    try:
        model_status = lines[lines.index("Model status") + 1]
    except (ValueError, IndexError):
        return RawResult(ENGINE_ERROR, message="solution file has no model status")
    values: dict[str, float] = {}
    objective = None
    has_primal = False
    if "# Primal solution values" in lines:
        i = lines.index("# Primal solution values") + 1
        has_primal = i < len(lines) and lines[i].strip() == "Feasible"
        if has_primal or (i < len(lines) and lines[i].strip() == "Infeasible"):
            i += 1
            if lines[i].startswith("Objective"):
                objective = float(lines[i].split()[1])
                i += 1
            if lines[i].startswith("# Columns"):
                n = int(lines[i].split()[2])
                for line in lines[i + 1 : i + 1 + n]:
                    name, val = line.rsplit(None, 1)
                    values[name] = float(val)
    status = map_highs_status(model_status, has_primal)
    if model_status.strip() == "Empty":
        objective = 0.0
    return RawResult(status, objective, values, message=model_status.strip())


def highs_options_text(opts) -> str:
    lines = [
        f"time_limit = {float(opts.time_limit)!r}",
        f"mip_rel_gap = {float(opts.mip_gap)!r}",
        f"threads = {int(opts.threads)}",
        f"random_seed = {int(opts.seed)}",
        # the engine's default 1e-6 slack lets it shave cost off rows that verification checks at 1e-6
        f"primal_feasibility_tolerance = {FEAS_TOL!r}",
        f"mip_feasibility_tolerance = {FEAS_TOL!r}",
        "write_solution_style = 0",
    ]
    return "\n".join(lines) + "\n"


def _command(opts, default: list[str] | None, engine: str) -> list[str]:
    raw = opts.command or os.environ.get(ENV_VAR)
    if raw:
        cmd = shlex.split(raw)
    elif default is not None:
        cmd = default
    else:
        raise EngineNotFoundError(f"no {engine} executable configured (set {ENV_VAR})")
    exe = cmd[0]
    if not (shutil.which(exe) or (os.path.isfile(exe) and os.access(exe, os.X_OK))):
        raise EngineNotFoundError(f"{engine} engine not found: {exe!r}")
    return cmd


def _run(cmd: list[str], opts) -> tuple[subprocess.CompletedProcess | None, str]:
    try:
        proc = subprocess.run(
            cmd,
            capture_output=True,
            text=True,
            timeout=float(opts.time_limit) + GRACE_SECONDS,
        )
    except subprocess.TimeoutExpired:
        return None, "engine exceeded its time limit and was killed"
    except OSError as exc:
        return None, f"engine failed to start: {exc}"
    return proc, ""


def solve_highs_subprocess(lp_path: Path, workdir: Path, opts) -> RawResult:
    cmd = _command(opts, [sys.executable, "-m", "rplink.solver.highs_runner"], "highs")
    sol, optfile = workdir / "model.sol", workdir / "highs.opt"
    optfile.write_text(highs_options_text(opts))
    proc, err = _run(cmd + ["--model_file", str(lp_path), "--options_file", str(optfile), "--solution_file", str(sol)], opts)
    if proc is None:
        return RawResult(TIMEOUT if "time limit" in err else ENGINE_ERROR, message=err)
    if proc.returncode != 0 or not sol.exists():
        tail = (proc.stderr or proc.stdout or "").strip().splitlines()[-5:]
        return RawResult(ENGINE_ERROR, message=f"exit code {proc.returncode}: " + " | ".join(tail))
    return parse_highs_solution(sol.read_text())


def solve_highs_inprocess(lp_path: Path, workdir: Path, opts) -> RawResult:
    if importlib_util.find_spec("highspy") is None:
        raise EngineNotFoundError("highspy is not installed")
    from .highs_runner import run

    sol, optfile = workdir / "model.sol", workdir / "highs.opt"
    optfile.write_text(highs_options_text(opts))
    try:
        code = run(str(lp_path), str(sol), str(optfile))
    except Exception as exc:  # engine crash is data, not an exception
        return RawResult(ENGINE_ERROR, message=f"{type(exc).__name__}: {exc}")
    if code != 0 or not sol.exists():
        return RawResult(ENGINE_ERROR, message=f"highspy returned {code}")
    return parse_highs_solution(sol.read_text())


# -- CBC ---------------------------------------------------------------------


def _default_cbc() -> list[str] | None:
    found = shutil.which("cbc")
    if found:
        return [found]
    spec = importlib_util.find_spec("pulp")
    if spec and spec.origin:
        bundled = Path(spec.origin).parent / "solverdir" / "cbc" / "linux" / "i64" / "cbc"
        if bundled.is_file():
            if not os.access(bundled, os.X_OK):
                bundled.chmod(0o755)
            return [str(bundled)]
    return None


def parse_cbc_solution(text: str) -> RawResult:
    """Parse a CBC ``solu`` file. Only nonzero columns are listed."""
    lines = text.splitlines()
    if not lines:
        return RawResult(ENGINE_ERROR, message="empty CBC solution file")
    head = lines[0].strip()
    objective = None
    if "objective value" in head:
        try:
            objective = float(head.rsplit(None, 1)[1])
        except ValueError:
            pass
    values: dict[str, float] = {}
    for line in lines[1:]:
        parts = line.replace("**", " ").split()
        if len(parts) >= 3:
            values[parts[1]] = float(parts[2])
    low = head.lower()
    if low.startswith("optimal"):
        status = OPTIMAL
    elif "infeasible" in low:
        status = INFEASIBLE
    elif "unbounded" in low:
        status = UNBOUNDED
    elif low.startswith("stopped"):
        status = FEASIBLE_GAP if values and "no integer solution" not in low else TIMEOUT
    else:
        status = ENGINE_ERROR
    if status in (INFEASIBLE, UNBOUNDED, TIMEOUT):
        values, objective = {}, None
    return RawResult(status, objective, values, message=head)


def solve_cbc(lp_path: Path, workdir: Path, opts) -> RawResult:
    cmd = _command(opts, _default_cbc(), "cbc")
    sol = workdir / "model.sol"
    args = [str(lp_path), "sec", str(float(opts.time_limit)), "ratio", str(float(opts.mip_gap))]
    args += ["threads", str(int(opts.threads)), "solve", "solu", str(sol)]
    proc, err = _run(cmd + args, opts)
    if proc is None:
        return RawResult(TIMEOUT if "time limit" in err else ENGINE_ERROR, message=err)
    if proc.returncode != 0 or not sol.exists():
        tail = (proc.stderr or proc.stdout or "").strip().splitlines()[-5:]
        return RawResult(ENGINE_ERROR, message=f"exit code {proc.returncode}: " + " | ".join(tail))
    return parse_cbc_solution(sol.read_text())


BACKENDS = {
    "highs": solve_highs_subprocess,
    "highspy": solve_highs_inprocess,
    "cbc": solve_cbc,
}
