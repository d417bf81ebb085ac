"""
Sparse rational 0-chains
"""

from src.chains.arithmetic import EXACT, Arithmetic, Number, get_arithmetic
from src.chains.chain import Chain0, ChainMeasure, combine, jordan_decompose, measure, star

__all__ = [
    "EXACT",
    "Arithmetic",
    "Number",
    "get_arithmetic",
    "Chain0",
    "ChainMeasure",
    "combine",
    "jordan_decompose",
    "measure",
    "star",
]
