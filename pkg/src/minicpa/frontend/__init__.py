"""Mini-C frontend: lexing, parsing, type checking."""

from minicpa.frontend.parser import parse_expression, parse_program
from minicpa.frontend.typecheck import typecheck
from minicpa.frontend import syntax

__all__ = ["parse_program", "parse_expression", "typecheck", "syntax"]
