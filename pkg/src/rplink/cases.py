"""Built-in instances.

``illustrative_case`` is a six-day, single-unit system whose chronology contains two evening
ramp-downs into an empty day and two morning ramp-ups. Each ramp day ends in a different state
from the one it starts in, so a cyclic self-link cannot reproduce its shut-down or start-up.
The long-tail days have a zero-demand stretch long enough that shutting down pays off even
within the day alone; the short-tail days do not.
"""

from __future__ import annotations

import numpy as np

from .aggregation import Assignment
from .system import DemandSeries, SystemInstance, ThermalGenerator

# chronology: ramp-down (long tail), empty day, ramp-up (long), ramp-down (short), empty, ramp-up (short)
ILLUSTRATIVE_ORDER = ("down_long", "empty", "up_long", "down_short", "empty", "up_short")


def _ramp_day(K: int, zero_head: int, zero_tail: int, falling: bool, lo: float, hi: float) -> list[float]:
    active = K - zero_head - zero_tail
    ramp = np.linspace(hi, lo, active) if falling else np.linspace(lo, hi, active)
    return [0.0] * zero_head + [round(float(v), 6) for v in ramp] + [0.0] * zero_tail


def illustrative_case(K: int = 24) -> tuple[SystemInstance, Assignment]:
    """Return the instance and its assignment (RPs: down_long, empty, up_long, down_short, up_short).

    ``K`` must be 24 or 6; the 6-step version scales every duration by 1/4 (rounded up) and is
    small enough for exhaustive commitment enumeration.
    """
    if K == 24:
        long_gap, short_gap, min_down, min_up = 6, 2, 8, 4
        cost_scale = 1.0
    elif K == 6:
        long_gap, short_gap, min_down, min_up = 2, 1, 3, 2
        cost_scale = 0.5
    else:
        raise ValueError("illustrative_case supports K=24 or K=6")
    lo, hi = 0.3, 1.0
    days = {
        "down_long": _ramp_day(K, 0, long_gap, True, lo, hi),
        "empty": [0.0] * K,
        "up_long": _ramp_day(K, long_gap, 0, False, lo, hi),
        "down_short": _ramp_day(K, 0, short_gap, True, lo, hi),
        "up_short": _ramp_day(K, short_gap, 0, False, lo, hi),
    }
    demand: list[float] = []
    for name in ILLUSTRATIVE_ORDER:
        demand += days[name]
    gen = ThermalGenerator(
        id="g1",
        capacity=1.0,
        min_output=0.2,
        ramp_up=0.5,
        ramp_down=0.5,
        min_up=min_up,
        min_down=min_down,
        var_cost=1.0,
        commit_cost=0.1,
        startup_cost=2.0 * cost_scale,
        shutdown_cost=2.0 * cost_scale,
    )
    inst = SystemInstance(
        generators=(gen,),
        storages=(),
        demand=DemandSeries(tuple(demand), pns_penalty=10.0, eps_penalty=2.0),
        period_length=K,
        name=f"illustrative-k{K}",
    )
    rp_index = {"down_long": 1, "empty": 2, "up_long": 3, "down_short": 4, "up_short": 5}
    assign = Assignment.from_sequence([rp_index[n] for n in ILLUSTRATIVE_ORDER])
    return inst, assign
