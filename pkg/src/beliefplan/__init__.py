"""Belief-space planning with planning-graph heuristics."""
from .formula import Formula, FormulaStore, Literal

__version__ = "0.1.0"

__all__ = ["Formula", "FormulaStore", "Literal"]
