"""Diffraction, windows and catalog of Fibonacci-type inflation tilings."""

from .golden import GoldenNumber, GoldenVec, FourierIndex
from .inflation import InflationRule, builtin_rule, dpv_rule, parse_rule, generate_patch
from .cocycle import CocycleEvaluator

__all__ = [
    "GoldenNumber",
    "GoldenVec",
    "FourierIndex",
    "InflationRule",
    "builtin_rule",
    "dpv_rule",
    "parse_rule",
    "generate_patch",
    "CocycleEvaluator",
]
