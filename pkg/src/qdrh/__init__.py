"""Exact-arithmetic workbench for q-deformed de Rham complexes."""

__version__ = "0.1.0"
