"""Positive logic on finite structures: homomorphisms, positively closed
models, type spaces and the cores built from them."""

__version__ = "0.1.0"

from .structure import FinStructure, Signature, SortedTuple, StructureError, load_structure
from .formula import FormulaError, FormulaPool, parse, parse_hu, parse_positive, pp_normal_form
from .evaluation import holds, holds_tuple, solutions
from .hom import Hom, automorphisms, core_of_structure, find_hom, is_core, is_immersion
from .theory import HuTheory, Verdict, enumerate_models, find_universal, is_model, load_theory, pc_check
from .typespace import build_typespace, pattern_structure
from .corecalc import core_of_theory, aut_compare, repeated_core_check
from .splus import build_splus, one_point_extensions, splus_core
from .morley import morleyize, tp_expand, elementary_check

__all__ = [
    "FinStructure", "Signature", "SortedTuple", "StructureError", "load_structure",
    "FormulaError", "FormulaPool", "parse", "parse_hu", "parse_positive", "pp_normal_form",
    "holds", "holds_tuple", "solutions",
    "Hom", "automorphisms", "core_of_structure", "find_hom", "is_core", "is_immersion",
    "HuTheory", "Verdict", "enumerate_models", "find_universal", "is_model", "load_theory", "pc_check",
    "build_typespace", "pattern_structure",
    "core_of_theory", "aut_compare", "repeated_core_check",
    "build_splus", "splus_core", "one_point_extensions",
    "morleyize", "tp_expand", "elementary_check",
]
