"""Solved operating schedule, keyed the same way as the MILP variable catalog."""

from __future__ import annotations

from dataclasses import dataclass

from .formulation.milp import ROLES, SYSTEM, VarKey


@dataclass(frozen=True)
class Schedule:
    period_length: int
    rps: tuple[int, ...]
    weights: tuple[int, ...]
    generator_ids: tuple[str, ...]
    storage_ids: tuple[str, ...]
    demand: dict[tuple[int, int], float]
    values: dict[VarKey, float]

    def total(self, role: str, weighted: bool = True) -> float:
        """Sum of ``role`` over all steps and entities, scaled by RP weight when ``weighted``."""
        out = 0.0
        for key, v in self.values.items():
            if key.role == role:
                out += v * (self.weights[key.rp - 1] if weighted else 1)
        return out

    def columns(self) -> list[tuple[str, str]]:
        """(role, entity) pairs present, in catalog order."""
        cols = []
        for role in ROLES:
            if role in ("p", "u", "su", "sd"):
                cols += [(role, g) for g in self.generator_ids]
            elif role in ("l", "c", "gdis"):
                cols += [(role, s) for s in self.storage_ids]
            else:
                cols.append((role, SYSTEM))
        return cols
