"""CPLEX-style LP text serialization of a :class:`MilpInstance`."""

from __future__ import annotations

import math

from .milp import BINARY, MilpInstance

_MAX_LINE = 200


def _num(x: float) -> str:
    if x == 0:
        return "0"
    if math.isinf(x):
        return "+inf" if x > 0 else "-inf"
    return repr(float(x))


def _expr(terms) -> list[str]:
    """Linear expression as wrapped text lines (continuations start with whitespace)."""
    lines, cur = [], ""
    for name, coef in terms:
        sign = "-" if coef < 0 else "+"
        piece = f" {sign} {_num(abs(coef))} {name}"
        if cur and len(cur) + len(piece) > _MAX_LINE:
            lines.append(cur)
            cur = " "
        cur += piece
    lines.append(cur)
    return lines


def write_lp(milp: MilpInstance) -> str:
    """Deterministic LP text: variables by (role, rp, k, entity), rows in build order."""
    out = [f"\\ {milp.label}", "Minimize"]
    obj = [(key.name, coef) for key, coef in milp.objective if coef != 0]
    if obj:
        body = _expr(obj)
        out.append(" obj:" + body[0])
        out.extend(body[1:])
    else:
        out.append(" obj:")

    out.append("Subject To")
    sense = {"<=": "<=", ">=": ">=", "=": "="}
    for c in milp.constraints:
        body = _expr([(key.name, coef) for key, coef in c.terms])
        body[-1] += f" {sense[c.sense]} {_num(c.rhs)}"
        out.append(f" {c.name}:" + body[0])
        out.extend(body[1:])

    out.append("Bounds")
    for v in milp.variables:
        if v.lb == v.ub:
            out.append(f" {v.name} = {_num(v.lb)}")
        elif math.isinf(v.ub) and math.isinf(v.lb):
            out.append(f" {v.name} free")
        elif math.isinf(v.ub):
            out.append(f" {v.name} >= {_num(v.lb)}")
        else:
            out.append(f" {_num(v.lb)} <= {v.name} <= {_num(v.ub)}")

    binaries = [v.name for v in milp.variables if v.kind == BINARY]
    if binaries:
        out.append("Binaries")
        for i in range(0, len(binaries), 8):
            out.append(" " + " ".join(binaries[i : i + 8]))
    out.append("End")
    return "\n".join(out) + "\n"
