"""Graded refinement types: parsing, checking, discharge and runtime validation."""

__version__ = "0.1.0"
