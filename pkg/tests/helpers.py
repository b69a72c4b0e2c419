"""Random instance factories shared by the test modules."""

from __future__ import annotations

import numpy as np

from rplink.system import DemandSeries, StorageUnit, SystemInstance, ThermalGenerator


def random_generator(rng: np.random.Generator, idx: int, K: int, relaxed: bool = False) -> ThermalGenerator:
    cap = float(np.round(rng.uniform(0.5, 2.0), 3))
    return ThermalGenerator(
        id=f"g{idx}",
        capacity=cap,
        min_output=float(np.round(cap * rng.uniform(0.0, 0.4), 3)),
        ramp_up=float(np.round(cap * rng.uniform(0.2, 1.0), 3)),
        ramp_down=float(np.round(cap * rng.uniform(0.2, 1.0), 3)),
        min_up=int(rng.integers(1, K + 1)),
        min_down=int(rng.integers(1, K + 1)),
        var_cost=float(np.round(rng.uniform(0.5, 3.0), 3)),
        commit_cost=float(np.round(rng.uniform(0.0, 0.5), 3)),
        startup_cost=float(np.round(rng.uniform(0.0, 3.0), 3)),
        shutdown_cost=float(np.round(rng.uniform(0.0, 1.0), 3)),
        relaxed_uc=relaxed,
    )


def random_storage(rng: np.random.Generator, idx: int) -> StorageUnit:
    return StorageUnit(
        id=f"s{idx}",
        energy_capacity=float(np.round(rng.uniform(0.5, 3.0), 3)),
        max_charge=float(np.round(rng.uniform(0.2, 1.0), 3)),
        max_discharge=float(np.round(rng.uniform(0.2, 1.0), 3)),
        charge_efficiency=float(np.round(rng.uniform(0.8, 1.0), 3)),
        discharge_efficiency=float(np.round(rng.uniform(0.8, 1.0), 3)),
        initial_level_fraction=float(np.round(rng.uniform(0.0, 1.0), 3)),
    )


def random_instance(
    rng: np.random.Generator,
    n_gen: int,
    n_sto: int,
    N: int,
    K: int,
    name: str = "random",
) -> SystemInstance:
    gens = tuple(random_generator(rng, i + 1, K) for i in range(n_gen))
    stos = tuple(random_storage(rng, i + 1) for i in range(n_sto))
    total = sum(g.capacity for g in gens) or 1.0
    demand = tuple(float(v) for v in np.round(rng.uniform(0.0, 1.05 * total, N * K), 4))
    pns = max((g.var_cost for g in gens), default=1.0) * 5.0
    return SystemInstance(gens, stos, DemandSeries(demand, pns_penalty=pns, eps_penalty=1.0), K, name=name)


def random_sequence(rng: np.random.Generator, N: int, R: int) -> list[int]:
    """RP sequence of length N using every index 1..R at least once."""
    seq = list(rng.permutation(np.arange(1, R + 1))) + list(rng.integers(1, R + 1, N - R))
    rng.shuffle(seq)
    return [int(r) for r in seq]
