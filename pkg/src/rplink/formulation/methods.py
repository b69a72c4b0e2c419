"""Edge-linking methods for representative periods."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Union

from ..aggregation import MarkovMatrix

FixedKey = tuple[str, int, str]  # (role, rp, entity); roles p, u, l


@dataclass(frozen=True)
class NoEnforcement:
    label: str = "no-enforcement"


@dataclass(frozen=True)
class FixedValues:
    """Boundary values ``values[(role, rp, entity)]`` for roles ``p``, ``u`` and ``l``."""

    values: Mapping[FixedKey, float] = field(default_factory=dict)
    label: str = "fixed"


@dataclass(frozen=True)
class Cyclic:
    label: str = "cyclic"


@dataclass(frozen=True)
class Markov:
    matrix: MarkovMatrix
    label: str = "markov"


@dataclass(frozen=True)
class FullChronological:
    """Truth mode: the whole horizon, period after period, closed cyclically."""

    label: str = "truth"


LinkingMethod = Union[NoEnforcement, FixedValues, Cyclic, Markov, FullChronological]

METHOD_NAMES = ("no-enforcement", "fixed", "cyclic", "markov")
