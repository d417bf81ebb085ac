"""
Bolic metrics on hyperbolic groups: homological bicombings, the recursive
function r, the metric d̂ and its constants
"""

__version__ = "1.0.0"
