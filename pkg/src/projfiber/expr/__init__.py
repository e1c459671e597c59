"""Scalar expression DSL: parse, print, evaluate, differentiate, zero-test."""

from .calculus import differentiate, gradient
from .evaluate import CompiledExprs, DomainError, UnboundSymbolError, compile_exprs, evaluate
from .nodes import (
    FUNCTIONS,
    Add,
    Const,
    Div,
    Expr,
    Func,
    Mul,
    Neg,
    Pow,
    Sub,
    Sym,
    as_expr,
    const,
    constant_value,
    depth,
    func,
    substitute,
    symbols_of,
)
from .parser import ParseError, UndeclaredSymbolError, parse
from .printer import to_string
from .simplify import is_constant, is_symbolic_zero, simplify
from .zerotest import DEFAULT_TOL, ZeroKind, ZeroVerdict, is_zero

__all__ = [
    "FUNCTIONS", "Add", "CompiledExprs", "Const", "DEFAULT_TOL", "Div", "DomainError", "Expr",
    "Func", "Mul", "Neg", "ParseError", "Pow", "Sub", "Sym", "UnboundSymbolError",
    "UndeclaredSymbolError", "ZeroKind", "ZeroVerdict", "as_expr", "compile_exprs", "const",
    "constant_value", "depth", "differentiate", "evaluate", "func", "gradient", "is_constant",
    "is_symbolic_zero", "is_zero", "parse", "simplify", "substitute", "symbols_of", "to_string",
]
