"""Movement primitives trained from demonstrations under temporal-logic losses."""

__version__ = "0.1.0"
