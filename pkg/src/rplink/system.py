"""Physical system description: thermal units, storages, demand, and the bundle format.

An instance bundle is a JSON manifest plus a one-column CSV demand file::

    {
      "period_length": 24,
      "demand": {"file": "demand.csv", "pns_penalty": 10.0, "eps_penalty": 2.0},
      "generators": [{"id": "g1", "capacity": 1.0, ...}],
      "storages": []
    }
"""

from __future__ import annotations

import csv
import json
import math
import re
from dataclasses import MISSING, asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Any, Sequence

ID_PATTERN = re.compile(r"^[A-Za-z0-9_.]+$")
DEMAND_COLUMN = "demand_mw"
MANIFEST_NAME = "instance.json"


class InstanceError(Exception):
    """Base class for ingestion failures."""


class InstanceParseError(InstanceError):
    def __init__(self, message: str, location: str):
        super().__init__(f"{location}: {message}")
        self.location = location


class InstanceValidationError(InstanceError):
    def __init__(self, violations: Sequence[str]):
        super().__init__("invalid instance:\n  " + "\n  ".join(violations))
        self.violations = list(violations)


class LengthMismatchError(InstanceError):
    pass


@dataclass(frozen=True)
class ThermalGenerator:
    id: str
    capacity: float
    ramp_up: float
    ramp_down: float
    min_up: int
    min_down: int
    var_cost: float = 0.0
    commit_cost: float = 0.0
    startup_cost: float = 0.0
    shutdown_cost: float = 0.0
    min_output: float = 0.0
    relaxed_uc: bool = False


@dataclass(frozen=True)
class StorageUnit:
    id: str
    energy_capacity: float
    max_charge: float
    max_discharge: float
    charge_efficiency: float = 1.0
    discharge_efficiency: float = 1.0
    initial_level_fraction: float = 0.0


@dataclass(frozen=True)
class DemandSeries:
    values: tuple[float, ...]
    pns_penalty: float
    eps_penalty: float


@dataclass(frozen=True)
class SystemInstance:
    generators: tuple[ThermalGenerator, ...]
    storages: tuple[StorageUnit, ...]
    demand: DemandSeries
    period_length: int
    name: str = field(default="instance", compare=False)

    @property
    def horizon(self) -> int:
        return len(self.demand.values)

    @property
    def period_count(self) -> int:
        return self.horizon // self.period_length

    def period_demand(self, period: int) -> tuple[float, ...]:
        """Demand profile of original period ``period`` (1-based)."""
        K = self.period_length
        return self.demand.values[(period - 1) * K : period * K]

    def with_demand(self, values: Sequence[float]) -> SystemInstance:
        return replace(self, demand=replace(self.demand, values=tuple(float(v) for v in values)))


def _is_number(x: Any) -> bool:
    return isinstance(x, (int, float)) and not isinstance(x, bool) and math.isfinite(x)


def _check_id(kind: str, entity_id: Any, out: list[str]) -> None:
    if not isinstance(entity_id, str) or not ID_PATTERN.match(entity_id):
        out.append(f"{kind} {entity_id!r}: id must match {ID_PATTERN.pattern}")


def validate_instance(inst: SystemInstance) -> list[str]:
    """Return one description per violated invariant; empty when the instance is valid."""
    out: list[str] = []
    K = inst.period_length
    if not isinstance(K, int) or isinstance(K, bool) or K < 1:
        out.append(f"instance: period_length must be a positive integer, got {K!r}")
        K = None

    if not inst.generators and not inst.storages:
        out.append("instance: needs at least one generator or storage")

    seen: set[str] = set()
    for unit in (*inst.generators, *inst.storages):
        if unit.id in seen:
            out.append(f"{unit.id}: duplicate id")
        seen.add(unit.id)

    for g in inst.generators:
        _check_id("generator", g.id, out)
        where = f"generator {g.id}"
        if not (_is_number(g.capacity) and g.capacity > 0):
            out.append(f"{where}: capacity must be > 0")
        if not (_is_number(g.min_output) and 0 <= g.min_output <= (g.capacity if _is_number(g.capacity) else 0)):
            out.append(f"{where}: min_output must lie in [0, capacity]")
        for name in ("ramp_up", "ramp_down"):
            v = getattr(g, name)
            if not (_is_number(v) and v > 0):
                out.append(f"{where}: {name} must be > 0")
        for name in ("min_up", "min_down"):
            v = getattr(g, name)
            if not isinstance(v, int) or isinstance(v, bool) or v < 1 or (K is not None and v > K):
                out.append(f"{where}: {name} must be an integer in [1, period_length={K}]")
        for name in ("var_cost", "commit_cost", "startup_cost", "shutdown_cost"):
            v = getattr(g, name)
            if not (_is_number(v) and v >= 0):
                out.append(f"{where}: {name} must be >= 0")
        if not isinstance(g.relaxed_uc, bool):
            out.append(f"{where}: relaxed_uc must be a boolean")

    for s in inst.storages:
        _check_id("storage", s.id, out)
        where = f"storage {s.id}"
        for name in ("energy_capacity", "max_charge", "max_discharge"):
            v = getattr(s, name)
            if not (_is_number(v) and v > 0):
                out.append(f"{where}: {name} must be > 0")
        for name in ("charge_efficiency", "discharge_efficiency"):
            v = getattr(s, name)
            if not (_is_number(v) and 0 < v <= 1):
                out.append(f"{where}: {name} must lie in (0, 1]")
        v = s.initial_level_fraction
        if not (_is_number(v) and 0 <= v <= 1):
            out.append(f"{where}: initial_level_fraction must lie in [0, 1]")

    d = inst.demand
    if not d.values:
        out.append("demand: values must not be empty")
    elif K is not None and len(d.values) % K:
        out.append(f"demand: length {len(d.values)} is not divisible by period_length {K}")
    bad = [i + 1 for i, v in enumerate(d.values) if not (_is_number(v) and v >= 0)]
    if bad:
        out.append(f"demand: values must be finite and >= 0 (first bad step {bad[0]})")
    for name in ("pns_penalty", "eps_penalty"):
        v = getattr(d, name)
        if not (_is_number(v) and v >= 0):
            out.append(f"demand: {name} must be >= 0")
    if _is_number(d.pns_penalty):
        for g in inst.generators:
            if _is_number(g.var_cost) and not d.pns_penalty > g.var_cost:
                out.append(f"demand: pns_penalty must exceed var_cost of generator {g.id}")
    return out


# -- bundle I/O ---------------------------------------------------------------

_GEN_FIELDS = {f.name for f in fields(ThermalGenerator)}
_STO_FIELDS = {f.name for f in fields(StorageUnit)}
_GEN_INT = {"min_up", "min_down"}


def _unit_from_json(cls, raw: Any, allowed: set[str], location: str):
    if not isinstance(raw, dict):
        raise InstanceParseError("expected an object", location)
    unknown = sorted(set(raw) - allowed)
    if unknown:
        raise InstanceParseError(f"unknown field {unknown[0]!r}", f"{location}.{unknown[0]}")
    kwargs = {}
    for f in fields(cls):
        if f.name not in raw:
            if f.default is not MISSING:
                continue
            raise InstanceParseError("missing required field", f"{location}.{f.name}")
        v = raw[f.name]
        if f.name == "id":
            if not isinstance(v, str):
                raise InstanceParseError("expected a string", f"{location}.id")
        elif f.name == "relaxed_uc":
            if not isinstance(v, bool):
                raise InstanceParseError("expected true/false", f"{location}.{f.name}")
        elif f.name in _GEN_INT:
            if isinstance(v, bool) or not isinstance(v, (int, float)) or int(v) != v:
                raise InstanceParseError("expected an integer", f"{location}.{f.name}")
            v = int(v)
        else:
            if isinstance(v, bool) or not isinstance(v, (int, float)):
                raise InstanceParseError("expected a number", f"{location}.{f.name}")
            v = float(v)
        kwargs[f.name] = v
    return cls(**kwargs)


def read_demand_csv(path: Path) -> tuple[float, ...]:
    values: list[float] = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise InstanceParseError("empty demand file", f"{path}:1") from None
        if [h.strip() for h in header] != [DEMAND_COLUMN]:
            raise InstanceParseError(f"header must be {DEMAND_COLUMN!r}", f"{path}:1")
        for row in reader:
            line = reader.line_num
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            if len(row) != 1:
                raise InstanceParseError(f"expected 1 column, got {len(row)}", f"{path}:{line}")
            try:
                values.append(float(row[0]))
            except ValueError:
                raise InstanceParseError(f"not a number: {row[0]!r}", f"{path}:{line}") from None
    return tuple(values)


def load_instance(path: str | Path) -> SystemInstance:
    """Load and validate an instance bundle (manifest path or directory holding ``instance.json``)."""
    path = Path(path)
    if path.is_dir():
        path = path / MANIFEST_NAME
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise InstanceParseError(str(exc), str(path)) from None
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InstanceParseError(exc.msg, f"{path}:{exc.lineno}:{exc.colno}") from None
    if not isinstance(raw, dict):
        raise InstanceParseError("manifest must be a JSON object", str(path))

    for key in ("period_length", "demand"):
        if key not in raw:
            raise InstanceParseError("missing required field", f"{path}:{key}")
    K = raw["period_length"]
    if isinstance(K, bool) or not isinstance(K, int):
        raise InstanceParseError("expected an integer", f"{path}:period_length")

    dem = raw["demand"]
    if not isinstance(dem, dict) or "file" not in dem:
        raise InstanceParseError("expected an object with 'file'", f"{path}:demand")
    penalties = {}
    for key in ("pns_penalty", "eps_penalty"):
        v = dem.get(key)
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            raise InstanceParseError("expected a number", f"{path}:demand.{key}")
        penalties[key] = float(v)
    values = read_demand_csv(path.parent / dem["file"])

    gens = tuple(
        _unit_from_json(ThermalGenerator, g, _GEN_FIELDS, f"{path}:generators[{i}]")
        for i, g in enumerate(raw.get("generators", []))
    )
    stos = tuple(
        _unit_from_json(StorageUnit, s, _STO_FIELDS, f"{path}:storages[{i}]")
        for i, s in enumerate(raw.get("storages", []))
    )
    inst = SystemInstance(gens, stos, DemandSeries(values, **penalties), K, name=raw.get("name", path.parent.name))

    if K >= 1 and len(values) % K:
        raise LengthMismatchError(f"demand length {len(values)} is not divisible by period_length {K}")
    violations = validate_instance(inst)
    if violations:
        raise InstanceValidationError(violations)
    return inst


def save_instance(inst: SystemInstance, directory: str | Path, demand_file: str = "demand.csv") -> Path:
    """Write ``inst`` as a bundle into ``directory``; returns the manifest path."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    manifest = {
        "name": inst.name,
        "period_length": inst.period_length,
        "demand": {
            "file": demand_file,
            "pns_penalty": inst.demand.pns_penalty,
            "eps_penalty": inst.demand.eps_penalty,
        },
        "generators": [asdict(g) for g in inst.generators],
        "storages": [asdict(s) for s in inst.storages],
    }
    out = directory / MANIFEST_NAME
    out.write_text(json.dumps(manifest, indent=2) + "\n", encoding="utf-8")
    with open(directory / demand_file, "w", newline="", encoding="utf-8") as fh:
        fh.write(DEMAND_COLUMN + "\n")
        for v in inst.demand.values:
            fh.write(repr(float(v)) + "\n")
    return out
