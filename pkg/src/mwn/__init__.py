"""Multiway systems over exact number domains."""

from .values import GaussRat, canonical_key, decode_key, value_coordinate
from .rules import Rule, RuleError, apply_rule, compose_branch_word, invert_affine_rule
from .dsl import DSLSyntaxError, parse_rule, render_rule

__version__ = "0.1.0"

__all__ = [
    "GaussRat",
    "canonical_key",
    "decode_key",
    "value_coordinate",
    "Rule",
    "RuleError",
    "apply_rule",
    "compose_branch_word",
    "invert_affine_rule",
    "DSLSyntaxError",
    "parse_rule",
    "render_rule",
]
