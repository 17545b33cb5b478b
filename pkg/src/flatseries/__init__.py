"""Exact power-series constructions around the flat germ exp(-1/t^2) and the
checks that go with them."""

from .exactexpr import LogScaled, PhiExpr, Tower
from .expansion import CoeffTable, ExponentProfile, QTaylor, build_coeff_table

__all__ = ["LogScaled", "PhiExpr", "Tower", "CoeffTable", "ExponentProfile", "QTaylor", "build_coeff_table"]
__version__ = "0.1.0"
