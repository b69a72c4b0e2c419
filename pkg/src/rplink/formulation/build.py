"""MILP construction for the RP model under each edge-linking method, and for the truth model."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import TYPE_CHECKING, Iterable, Iterator, Optional

from ..aggregation import Assignment, rp_weights
from ..system import SystemInstance
from .methods import Cyclic, FixedValues, FullChronological, LinkingMethod, Markov, NoEnforcement
from .milp import (
    BINARY,
    CONTINUOUS,
    RELAXED_BINARY,
    SYSTEM,
    Constraint,
    MilpInstance,
    Variable,
    VarKey,
)

if TYPE_CHECKING:
    from ..schedule import Schedule

FAMILIES = ("bal", "capmax", "capmin", "logic", "minup", "mindown", "rampup", "rampdn", "stor")
FAMILY_ORDER = {f: i for i, f in enumerate(FAMILIES)}
UC_ROLES = ("u", "su", "sd")


class FormulationError(ValueError):
    pass


@dataclass(frozen=True)
class RelaxationSet:
    keys: frozenset[VarKey] = frozenset()

    def __contains__(self, key) -> bool:
        return key in self.keys

    def __len__(self) -> int:
        return len(self.keys)

    def __iter__(self) -> Iterator[VarKey]:
        return iter(sorted(self.keys, key=VarKey.sort_key))


def relaxation_set(inst: SystemInstance, method: LinkingMethod) -> RelaxationSet:
    """Commitment variables whose integrality is dropped because an expected value reaches them.

    Only a non-identity Markov matrix yields fractional expected values; for each binary unit the
    first ``max(min_up, min_down)`` steps of every RP are relaxed.
    """
    if not isinstance(method, Markov) or method.matrix.is_identity():
        return RelaxationSet()
    K = inst.period_length
    keys = set()
    for g in inst.generators:
        if g.relaxed_uc:
            continue
        span = min(max(g.min_up, g.min_down), K)
        for rp in range(1, method.matrix.rp_count + 1):
            for k in range(1, span + 1):
                keys.update(VarKey(role, rp, k, g.id) for role in UC_ROLES)
    return RelaxationSet(frozenset(keys))


# -- boundary references -----------------------------------------------------

# A resolved reference is None (no information: drop the term / skip the row) or
# (terms, constant) with terms as (key, weight) pairs.
Resolved = Optional[tuple[list[tuple[VarKey, float]], float]]


class _Boundary:
    def __init__(self, inst: SystemInstance, method: LinkingMethod, period_count: int):
        self.inst = inst
        self.method = method
        self.K = inst.period_length
        self.N = period_count
        self.init_level = {s.id: s.initial_level_fraction * s.energy_capacity for s in inst.storages}

    def resolve(self, role: str, rp: int, kk: int, entity: str) -> Resolved:
        """Stand-in for ``role`` at in-period step ``kk <= 0`` of ``rp``."""
        m, K = self.method, self.K
        if isinstance(m, FullChronological):
            prev = rp - 1 if rp > 1 else self.N
            return [(VarKey(role, prev, kk + K, entity), 1.0)], 0.0
        if isinstance(m, Cyclic):
            return [(VarKey(role, rp, kk + K, entity), 1.0)], 0.0
        if isinstance(m, Markov):
            return [(VarKey(role, src, kk + K, entity), w) for src, w in m.matrix.predecessors(rp)], 0.0
        if isinstance(m, FixedValues):
            if role in ("su", "sd"):
                # commitment history before the period is held at its fixed value: no switching
                return [], 0.0
            return [], float(m.values[(role, rp, entity)])
        if isinstance(m, NoEnforcement):
            if role == "l":
                return [], self.init_level[entity]
            return None
        raise FormulationError(f"unsupported linking method {m!r}")


class _Row:
    def __init__(self, boundary: _Boundary, rp: int):
        self.boundary = boundary
        self.rp = rp
        self.terms: dict[VarKey, float] = {}
        self.constant = 0.0
        self.weights: list[tuple[float, ...]] = []

    def _put(self, key: VarKey, coef: float) -> None:
        self.terms[key] = self.terms.get(key, 0.0) + coef

    def add(self, role: str, k: int, entity: str, coef: float) -> bool:
        """Add ``coef * role[rp, k]``; returns False when a boundary reference has no stand-in."""
        if k >= 1:
            self._put(VarKey(role, self.rp, k, entity), coef)
            return True
        resolved = self.boundary.resolve(role, self.rp, k, entity)
        if resolved is None:
            return False
        terms, const = resolved
        for key, w in terms:
            self._put(key, coef * w)
        self.constant += coef * const
        if terms:
            self.weights.append(tuple(w for _, w in terms))
        return True

    def finish(self, family: str, k: int, entity: str, sense: str, rhs: float) -> Constraint:
        terms = tuple((key, c) for key, c in self.terms.items() if c != 0.0)
        return Constraint(
            name="",
            family=family,
            rp=self.rp,
            k=k,
            entity=entity,
            terms=terms,
            sense=sense,
            rhs=rhs - self.constant,
            boundary_weights=tuple(self.weights),
        )


def _check_inputs(inst: SystemInstance, assign: Assignment | None, method: LinkingMethod) -> None:
    if isinstance(method, FullChronological):
        if assign is not None and assign.period_count != inst.period_count:
            raise FormulationError(
                f"assignment covers {assign.period_count} periods, instance has {inst.period_count}"
            )
        return
    if assign is None:
        raise FormulationError(f"{method.label} needs an assignment")
    if assign.period_count != inst.period_count:
        raise FormulationError(f"assignment covers {assign.period_count} periods, instance has {inst.period_count}")
    if isinstance(method, Markov) and method.matrix.pred_prob.shape != (assign.rp_count, assign.rp_count):
        raise FormulationError(
            f"Markov matrix shape {method.matrix.pred_prob.shape} does not match {assign.rp_count} RPs"
        )
    if isinstance(method, FixedValues):
        for key in _required_fixed_keys(inst, assign.rp_count):
            v = method.values.get(key)
            if v is None:
                raise FormulationError(f"fixed boundary value missing for {key}")
            if not math.isfinite(v):
                raise FormulationError(f"fixed boundary value for {key} is not finite")


def _required_fixed_keys(inst: SystemInstance, rp_count: int) -> Iterable[tuple[str, int, str]]:
    for rp in range(1, rp_count + 1):
        for g in inst.generators:
            yield ("p", rp, g.id)
            yield ("u", rp, g.id)
        for s in inst.storages:
            yield ("l", rp, s.id)


def build_milp(inst: SystemInstance, assign: Assignment | None, method: LinkingMethod) -> MilpInstance:
    """Emit the MILP for ``inst`` aggregated by ``assign`` and linked at period edges by ``method``.

    In truth mode (:class:`FullChronological`) every original period is kept, linked to its
    chronological predecessor, with the first period following the last.
    """
    _check_inputs(inst, assign, method)
    K = inst.period_length
    if isinstance(method, FullChronological):
        N = inst.period_count
        weights = (1,) * N
        demand = {(n, k): inst.period_demand(n)[k - 1] for n in range(1, N + 1) for k in range(1, K + 1)}
    else:
        N = assign.rp_count
        weights = rp_weights(assign).weight
        demand = {}
        for rp in range(1, N + 1):
            prof = inst.period_demand(assign.rp_source_period[rp - 1])
            demand.update({(rp, k): prof[k - 1] for k in range(1, K + 1)})
    rps = range(1, N + 1)
    relaxed = relaxation_set(inst, method)
    boundary = _Boundary(inst, method, N)

    variables: list[Variable] = []
    for rp in rps:
        for k in range(1, K + 1):
            for g in inst.generators:
                u = VarKey("u", rp, k, g.id)
                kind = RELAXED_BINARY if g.relaxed_uc or u in relaxed else BINARY
                variables += [
                    Variable(VarKey("p", rp, k, g.id), CONTINUOUS, 0.0, g.capacity),
                    Variable(u, kind, 0.0, 1.0),
                    Variable(VarKey("su", rp, k, g.id), CONTINUOUS, 0.0, 1.0),
                    Variable(VarKey("sd", rp, k, g.id), CONTINUOUS, 0.0, 1.0),
                ]
            for s in inst.storages:
                variables += [
                    Variable(VarKey("l", rp, k, s.id), CONTINUOUS, 0.0, s.energy_capacity),
                    Variable(VarKey("c", rp, k, s.id), CONTINUOUS, 0.0, s.max_charge),
                    Variable(VarKey("gdis", rp, k, s.id), CONTINUOUS, 0.0, s.max_discharge),
                ]
            variables += [
                Variable(VarKey("pns", rp, k, SYSTEM), CONTINUOUS, 0.0, math.inf),
                Variable(VarKey("eps", rp, k, SYSTEM), CONTINUOUS, 0.0, math.inf),
            ]
    variables.sort(key=lambda v: v.key.sort_key())

    rows: list[Constraint] = []
    for rp in rps:
        for k in range(1, K + 1):
            row = _Row(boundary, rp)
            for g in inst.generators:
                row.add("p", k, g.id, 1.0)
            for s in inst.storages:
                row.add("gdis", k, s.id, 1.0)
                row.add("c", k, s.id, -1.0)
            row.add("pns", k, SYSTEM, 1.0)
            row.add("eps", k, SYSTEM, -1.0)
            rows.append(row.finish("bal", k, SYSTEM, "=", demand[rp, k]))

            for g in inst.generators:
                row = _Row(boundary, rp)
                row.add("p", k, g.id, 1.0)
                row.add("u", k, g.id, -g.capacity)
                rows.append(row.finish("capmax", k, g.id, "<=", 0.0))

                if g.min_output > 0:
                    row = _Row(boundary, rp)
                    row.add("p", k, g.id, 1.0)
                    row.add("u", k, g.id, -g.min_output)
                    rows.append(row.finish("capmin", k, g.id, ">=", 0.0))

                row = _Row(boundary, rp)
                row.add("u", k, g.id, 1.0)
                row.add("su", k, g.id, -1.0)
                row.add("sd", k, g.id, 1.0)
                if row.add("u", k - 1, g.id, -1.0):
                    rows.append(row.finish("logic", k, g.id, "=", 0.0))

                # out-of-period window terms without a stand-in are simply dropped
                row = _Row(boundary, rp)
                for kk in range(k - g.min_up + 1, k + 1):
                    row.add("su", kk, g.id, 1.0)
                row.add("u", k, g.id, -1.0)
                rows.append(row.finish("minup", k, g.id, "<=", 0.0))

                row = _Row(boundary, rp)
                for kk in range(k - g.min_down + 1, k + 1):
                    row.add("sd", kk, g.id, 1.0)
                row.add("u", k, g.id, 1.0)
                rows.append(row.finish("mindown", k, g.id, "<=", 1.0))

                row = _Row(boundary, rp)
                row.add("p", k, g.id, 1.0)
                if row.add("p", k - 1, g.id, -1.0):
                    rows.append(row.finish("rampup", k, g.id, "<=", g.ramp_up))

                row = _Row(boundary, rp)
                row.add("p", k, g.id, -1.0)
                if row.add("p", k - 1, g.id, 1.0):
                    rows.append(row.finish("rampdn", k, g.id, "<=", g.ramp_down))

            for s in inst.storages:
                row = _Row(boundary, rp)
                row.add("l", k, s.id, 1.0)
                row.add("c", k, s.id, -s.charge_efficiency)
                row.add("gdis", k, s.id, 1.0 / s.discharge_efficiency)
                row.add("l", k - 1, s.id, -1.0)
                rows.append(row.finish("stor", k, s.id, "=", 0.0))

    rows.sort(key=lambda c: (FAMILY_ORDER[c.family], c.rp, c.k, c.entity))
    rows = [_named(c, i) for i, c in enumerate(rows, start=1)]

    objective: list[tuple[VarKey, float]] = []
    pen = inst.demand
    for rp in rps:
        w = weights[rp - 1]
        for k in range(1, K + 1):
            for g in inst.generators:
                for role, cost in (
                    ("p", g.var_cost),
                    ("u", g.commit_cost),
                    ("su", g.startup_cost),
                    ("sd", g.shutdown_cost),
                ):
                    if cost:
                        objective.append((VarKey(role, rp, k, g.id), w * cost))
            if pen.pns_penalty:
                objective.append((VarKey("pns", rp, k, SYSTEM), w * pen.pns_penalty))
            if pen.eps_penalty:
                objective.append((VarKey("eps", rp, k, SYSTEM), w * pen.eps_penalty))
    objective.sort(key=lambda t: t[0].sort_key())

    return MilpInstance(
        variables=tuple(variables),
        constraints=tuple(rows),
        objective=tuple(objective),
        label=method.label,
        rp_weights=tuple(weights),
        period_length=K,
    )


def _named(c: Constraint, idx: int) -> Constraint:
    return Constraint(
        name=f"c{idx}_{c.family}",
        family=c.family,
        rp=c.rp,
        k=c.k,
        entity=c.entity,
        terms=c.terms,
        sense=c.sense,
        rhs=c.rhs,
        boundary_weights=c.boundary_weights,
    )


def fixed_values_from_solution(report) -> FixedValues:
    """Last-step ``p``, ``u`` and ``l`` of every period in ``report.schedule`` as fixed boundary values."""
    sched: Schedule | None = getattr(report, "schedule", None)
    if sched is None:
        raise FormulationError("report carries no schedule")
    K = sched.period_length
    values = {}
    for rp in sched.rps:
        wanted = [("p", g) for g in sched.generator_ids] + [("u", g) for g in sched.generator_ids]
        wanted += [("l", s) for s in sched.storage_ids]
        for role, ent in wanted:
            key = VarKey(role, rp, K, ent)
            if key not in sched.values:
                raise FormulationError(f"schedule is missing {key.name}")
            values[(role, rp, ent)] = sched.values[key]
    return FixedValues(values)
