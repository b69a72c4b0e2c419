from .build import (
    FAMILIES,
    FormulationError,
    RelaxationSet,
    build_milp,
    fixed_values_from_solution,
    relaxation_set,
)
from .lpformat import write_lp
from .methods import (
    METHOD_NAMES,
    Cyclic,
    FixedValues,
    FullChronological,
    LinkingMethod,
    Markov,
    NoEnforcement,
)
from .milp import BINARY, CONTINUOUS, RELAXED_BINARY, ROLES, SYSTEM, Constraint, MilpInstance, Variable, VarKey

__all__ = [
    "FAMILIES",
    "FormulationError",
    "RelaxationSet",
    "build_milp",
    "fixed_values_from_solution",
    "relaxation_set",
    "write_lp",
    "METHOD_NAMES",
    "Cyclic",
    "FixedValues",
    "FullChronological",
    "LinkingMethod",
    "Markov",
    "NoEnforcement",
    "BINARY",
    "CONTINUOUS",
    "RELAXED_BINARY",
    "ROLES",
    "SYSTEM",
    "Constraint",
    "MilpInstance",
    "Variable",
    "VarKey",
]
