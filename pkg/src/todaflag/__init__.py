"""Toda flows on the totally nonnegative flag variety.

Cells of the tnn flag variety (``tnncell``) give initial data for the full
Kostant-Toda hierarchy (``fktflow``) and the full symmetric Toda hierarchy
(``symtoda``); ``momentpoly`` computes the moment-map images and the Bruhat
interval polytopes that bound them.
"""

from .fktflow import KostantTodaFlow
from .momentpoly import MomentMap, Polytope
from .symgroup import Permutation, ReducedWord
from .symtoda import SymmetricTodaFlow
from .tnncell import CellPoint, Spectrum, build_g, default_spectrum

__all__ = [
    "CellPoint",
    "KostantTodaFlow",
    "MomentMap",
    "Permutation",
    "Polytope",
    "ReducedWord",
    "Spectrum",
    "SymmetricTodaFlow",
    "build_g",
    "default_spectrum",
]

__version__ = "0.1.0"
