"""Solver-agnostic MILP container."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, NamedTuple

ROLES = ("p", "u", "su", "sd", "l", "c", "gdis", "pns", "eps")
ROLE_ORDER = {r: i for i, r in enumerate(ROLES)}
SYSTEM = ""  # entity id used by the system-wide slacks

CONTINUOUS = "continuous"
BINARY = "binary"
RELAXED_BINARY = "relaxed-binary"


class VarKey(NamedTuple):
    role: str
    rp: int
    k: int
    entity: str

    def sort_key(self):
        return (ROLE_ORDER[self.role], self.rp, self.k, self.entity)

    @property
    def name(self) -> str:
        # the entity is matched [A-Za-z0-9_.]+ and rp/k are digits, so names are unique
        ent = f"_{self.entity}" if self.entity else ""
        return f"{self.role}{ent}_r{self.rp}_k{self.k}"


@dataclass(frozen=True)
class Variable:
    key: VarKey
    kind: str
    lb: float
    ub: float

    @property
    def name(self) -> str:
        return self.key.name


@dataclass(frozen=True)
class Constraint:
    name: str
    family: str
    rp: int
    k: int
    entity: str
    terms: tuple[tuple[VarKey, float], ...]
    sense: str  # "<=", "=", ">="
    rhs: float
    # weights of each expanded boundary reference, one tuple per reference
    boundary_weights: tuple[tuple[float, ...], ...] = ()

    def activity(self, values) -> float:
        return sum(coef * values[key] for key, coef in self.terms)

    def residual(self, values) -> float:
        """Amount by which the row is violated at ``values`` (0 when satisfied)."""
        lhs = self.activity(values)
        if self.sense == "<=":
            return max(0.0, lhs - self.rhs)
        if self.sense == ">=":
            return max(0.0, self.rhs - lhs)
        return abs(lhs - self.rhs)


@dataclass(frozen=True)
class MilpInstance:
    variables: tuple[Variable, ...]
    constraints: tuple[Constraint, ...]
    objective: tuple[tuple[VarKey, float], ...]
    label: str = "model"
    rp_weights: tuple[int, ...] = ()
    period_length: int = 0
    _catalog: dict = field(default=None, init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "_catalog", {v.key: v for v in self.variables})

    @property
    def catalog(self) -> dict[VarKey, Variable]:
        return self._catalog

    def __contains__(self, key: VarKey) -> bool:
        return key in self._catalog

    def rows(self, family: str | None = None, rp: int | None = None) -> Iterator[Constraint]:
        for c in self.constraints:
            if (family is None or c.family == family) and (rp is None or c.rp == rp):
                yield c

    def undeclared_references(self) -> list[tuple[str, VarKey]]:
        out = [(c.name, key) for c in self.constraints for key, _ in c.terms if key not in self._catalog]
        out += [("objective", key) for key, _ in self.objective if key not in self._catalog]
        return out

    def objective_value(self, values) -> float:
        return sum(coef * values[key] for key, coef in self.objective)
