"""Period-to-RP assignment, RP weights, the predecessor (Markov) matrix, and truth reconstruction.

RP and period indices are 1-based everywhere in this module, matching the CSV files.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .system import SystemInstance


class AssignmentError(ValueError):
    pass


@dataclass(frozen=True)
class Assignment:
    rp_of_period: tuple[int, ...]
    rp_source_period: tuple[int, ...]

    def __post_init__(self):
        problems = check_assignment(self.rp_of_period, self.rp_source_period)
        if problems:
            raise AssignmentError("; ".join(problems))

    @property
    def rp_count(self) -> int:
        return len(self.rp_source_period)

    @property
    def period_count(self) -> int:
        return len(self.rp_of_period)

    @classmethod
    def from_sequence(cls, rp_of_period: Sequence[int], sources: Sequence[int] | None = None) -> Assignment:
        """Build from an RP sequence; each RP's source defaults to its first occurrence."""
        seq = tuple(int(r) for r in rp_of_period)
        if sources is None:
            R = max(seq) if seq else 0
            first = {}
            for n, r in enumerate(seq, start=1):
                first.setdefault(r, n)
            sources = tuple(first.get(r, 0) for r in range(1, R + 1))
        return cls(seq, tuple(int(s) for s in sources))

    @classmethod
    def identity(cls, n: int) -> Assignment:
        idx = tuple(range(1, n + 1))
        return cls(idx, idx)


def check_assignment(rp_of_period: Sequence[int], rp_source_period: Sequence[int]) -> list[str]:
    out = []
    R, N = len(rp_source_period), len(rp_of_period)
    if N == 0:
        out.append("assignment is empty")
    for n, r in enumerate(rp_of_period, start=1):
        if not 1 <= r <= R:
            out.append(f"period {n}: rp {r} outside [1, {R}]")
    missing = set(range(1, R + 1)) - set(rp_of_period)
    if missing:
        out.append(f"rp {min(missing)} never used")
    for r, src in enumerate(rp_source_period, start=1):
        if not 1 <= src <= N:
            out.append(f"rp {r}: source period {src} outside [1, {N}]")
        elif rp_of_period[src - 1] != r:
            out.append(f"rp {r}: source period {src} is assigned to rp {rp_of_period[src - 1]}")
    return out


@dataclass(frozen=True)
class MarkovMatrix:
    """``pred_prob[a-1, b-1]``: probability that an occurrence of RP ``b`` is preceded by RP ``a``."""

    pred_prob: np.ndarray

    @property
    def rp_count(self) -> int:
        return self.pred_prob.shape[0]

    def prob(self, source: int, dest: int) -> float:
        return float(self.pred_prob[source - 1, dest - 1])

    def predecessors(self, dest: int) -> list[tuple[int, float]]:
        col = self.pred_prob[:, dest - 1]
        return [(int(i) + 1, float(col[i])) for i in np.flatnonzero(col)]

    def is_identity(self) -> bool:
        return bool(np.array_equal(self.pred_prob, np.eye(self.rp_count)))

    @classmethod
    def identity(cls, rp_count: int) -> MarkovMatrix:
        return cls(np.eye(rp_count))


@dataclass(frozen=True)
class RpWeights:
    weight: tuple[int, ...]

    def __getitem__(self, rp: int) -> int:
        return self.weight[rp - 1]


def transition_counts(assign: Assignment) -> np.ndarray:
    """Forward pair counts over the cyclically closed chronology, ``[source-1, dest-1]``."""
    R = assign.rp_count
    seq = np.asarray(assign.rp_of_period) - 1
    counts = np.zeros((R, R), dtype=np.int64)
    np.add.at(counts, (np.roll(seq, 1), seq), 1)
    return counts


def build_transition_matrix(assign: Assignment) -> MarkovMatrix:
    counts = transition_counts(assign)
    # every RP occurs at least once, so every destination column has a positive total
    return MarkovMatrix(counts / counts.sum(axis=0, keepdims=True))


def rp_weights(assign: Assignment) -> RpWeights:
    counts = np.bincount(assign.rp_of_period, minlength=assign.rp_count + 1)[1:]
    return RpWeights(tuple(int(c) for c in counts))


def reconstruct_truth(inst: SystemInstance, assign: Assignment) -> SystemInstance:
    """Full-horizon instance where every period carries a copy of its representative's demand."""
    if assign.period_count != inst.period_count:
        raise AssignmentError(f"assignment covers {assign.period_count} periods, instance has {inst.period_count}")
    values: list[float] = []
    for r in assign.rp_of_period:
        values.extend(inst.period_demand(assign.rp_source_period[r - 1]))
    return inst.with_demand(values)


# -- baseline clustering ------------------------------------------------------


def _profiles(inst: SystemInstance) -> np.ndarray:
    X = np.asarray(inst.demand.values, dtype=float).reshape(inst.period_count, inst.period_length)
    lo, hi = X.min(), X.max()
    return (X - lo) / (hi - lo) if hi > lo else np.zeros_like(X)


def _assign_to_medoids(D: np.ndarray, medoids: Sequence[int]) -> np.ndarray:
    sub = D[:, medoids]
    # argmin returns the first minimum; medoids are kept sorted so ties go to the lowest index
    labels = np.argmin(sub, axis=1)
    for j, m in enumerate(medoids):
        labels[m] = j
    return labels


def medoid_cost(D: np.ndarray, medoids: Sequence[int]) -> float:
    return float(D[:, list(medoids)].min(axis=1).sum())


def _pam(D: np.ndarray, medoids: list[int]) -> list[int]:
    N = D.shape[0]
    best = medoid_cost(D, medoids)
    improved = True
    while improved:
        improved = False
        for i in range(len(medoids)):
            for h in range(N):
                if h in medoids:
                    continue
                trial = sorted(medoids[:i] + [h] + medoids[i + 1 :])
                c = medoid_cost(D, trial)
                if c < best - 1e-12:
                    best, medoids, improved = c, trial, True
                    break
            if improved:
                break
    return medoids


def baseline_cluster(inst: SystemInstance, rp_count: int, seed: int = 0, restarts: int = 4) -> Assignment:
    """k-medoids (PAM swap) over globally min-max scaled per-period demand profiles.

    Runs a greedy BUILD start plus ``restarts`` seeded random starts and keeps the cheapest.
    RPs are numbered by ascending medoid period, and the medoids become the source periods.
    """
    N = inst.period_count
    if not 1 <= rp_count <= N:
        raise AssignmentError(f"rp_count must lie in [1, {N}], got {rp_count}")
    X = _profiles(inst)
    D = np.sqrt(((X[:, None, :] - X[None, :, :]) ** 2).sum(axis=2))

    starts: list[list[int]] = []
    build: list[int] = []
    for _ in range(rp_count):
        cands = [h for h in range(N) if h not in build]
        build.append(min(cands, key=lambda h: (medoid_cost(D, build + [h]), h)))
    starts.append(sorted(build))
    rng = np.random.default_rng(seed)
    for _ in range(restarts):
        starts.append(sorted(int(i) for i in rng.choice(N, size=rp_count, replace=False)))

    best: list[int] | None = None
    best_cost = np.inf
    for s in starts:
        m = _pam(D, s)
        c = medoid_cost(D, m)
        if c < best_cost - 1e-12 or (abs(c - best_cost) <= 1e-12 and best is not None and m < best):
            best, best_cost = m, c
    labels = _assign_to_medoids(D, best)
    return Assignment(tuple(int(j) + 1 for j in labels), tuple(m + 1 for m in best))


# -- files --------------------------------------------------------------------


def write_assignment_csv(assign: Assignment, path: str | Path) -> None:
    sources = set(assign.rp_source_period)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write("period,rp,source\n")
        for n, r in enumerate(assign.rp_of_period, start=1):
            fh.write(f"{n},{r},{int(n in sources)}\n")


def read_assignment_csv(path: str | Path) -> Assignment:
    """Read ``period,rp`` rows; an optional ``source`` column (0/1) marks each RP's source period."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        cols = [c.strip() for c in reader.fieldnames or []]
        if cols[:2] != ["period", "rp"]:
            raise AssignmentError(f"{path}: header must start with 'period,rp'")
        rows = []
        for row in reader:
            line = reader.line_num
            try:
                n, r = int(row["period"]), int(row["rp"])
                src = int(row.get("source") or 0)
            except (TypeError, ValueError):
                raise AssignmentError(f"{path}:{line}: expected integers") from None
            rows.append((line, n, r, src))
    if [n for _, n, _, _ in rows] != list(range(1, len(rows) + 1)):
        raise AssignmentError(f"{path}: periods must be listed as 1..N in order")
    R = max((r for _, _, r, _ in rows), default=0)
    for line, n, r, _ in rows:
        if r < 1:
            raise AssignmentError(f"{path}:{line}: rp {r} must be >= 1 (period {n})")
    seq = [r for _, _, r, _ in rows]
    for r in range(1, R + 1):
        if r not in seq:
            line, n, bad, _ = next(row for row in rows if row[2] > r)
            raise AssignmentError(
                f"{path}:{line}: unknown rp {bad} for period {n} (rp {r} is never used; indices must run 1..R)"
            )
    sources = None
    if any(src for *_, src in rows):
        chosen: dict[int, int] = {}
        for line, n, r, src in rows:
            if src:
                if r in chosen:
                    raise AssignmentError(f"{path}:{line}: second source period for rp {r}")
                chosen[r] = n
        sources = [chosen.get(r) or seq.index(r) + 1 for r in range(1, R + 1)]
    return Assignment.from_sequence(seq, sources)


def write_matrix_csv(matrix: MarkovMatrix, path: str | Path) -> None:
    """RP x RP grid, row = source RP, column = destination RP, 15 significant digits."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        for row in matrix.pred_prob:
            fh.write(",".join(f"{v:.15g}" for v in row) + "\n")


def read_matrix_csv(path: str | Path) -> MarkovMatrix:
    return MarkovMatrix(np.loadtxt(path, delimiter=",", ndmin=2))


def write_weights_csv(weights: RpWeights, path: str | Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write("rp,weight\n")
        for r, w in enumerate(weights.weight, start=1):
            fh.write(f"{r},{w}\n")
