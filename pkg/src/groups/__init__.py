"""
Concrete hyperbolic group models
"""

from src.exceptions import (
    BolicError,
    BudgetExceeded,
    CacheMismatchError,
    ConfigurationError,
    DomainError,
    FitFailure,
    FormatError,
    InvariantViolation,
    NonDecreasingRecursion,
    OutOfLoadedBall,
)
from src.groups.elements import ElementTable, GeneratorSet, GroupElement, Word
from src.groups.base_model import AlgebraicGroupModel, GroupModel
from src.groups.free_group import FreeGroup
from src.groups.free_product import FreeProductFiniteCyclic
from src.groups.table_model import TableModel, export_ball, load_table_model

__all__ = [
    "BolicError",
    "BudgetExceeded",
    "CacheMismatchError",
    "ConfigurationError",
    "DomainError",
    "FitFailure",
    "FormatError",
    "InvariantViolation",
    "NonDecreasingRecursion",
    "OutOfLoadedBall",
    "ElementTable",
    "GeneratorSet",
    "GroupElement",
    "Word",
    "AlgebraicGroupModel",
    "GroupModel",
    "FreeGroup",
    "FreeProductFiniteCyclic",
    "TableModel",
    "export_ball",
    "load_table_model",
]
