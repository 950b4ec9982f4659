"""Closed expression language for operator entries in problem files.

Grammar: numeric literals, the variable t, the constant pi, the functions
sin/cos/exp, arithmetic (+ - * / **) and unary minus. Matrix literals are
nested lists whose entries are expressions. Anything else is rejected at
parse time, so config files cannot run arbitrary code.
"""

from __future__ import annotations

import ast
import math

import numpy as np

from .errors import InvalidInput

__all__ = ["compile_expression", "compile_matrix", "evaluate"]

_FUNCTIONS = {"sin": math.sin, "cos": math.cos, "exp": math.exp}
_NAMES = {"pi": math.pi}
_BINOPS = (ast.Add, ast.Sub, ast.Mult, ast.Div, ast.Pow)
_UNARYOPS = (ast.USub, ast.UAdd)


def _validate(node) -> None:
    if isinstance(node, ast.Expression):
        _validate(node.body)
    elif isinstance(node, ast.Constant):
        if not isinstance(node.value, (int, float)):
            raise InvalidInput(f"literal {node.value!r} is not numeric")
    elif isinstance(node, ast.Name):
        if node.id != "t" and node.id not in _NAMES:
            raise InvalidInput(f"unknown name {node.id!r}")
    elif isinstance(node, ast.BinOp):
        if not isinstance(node.op, _BINOPS):
            raise InvalidInput(
                f"operator {type(node.op).__name__} not allowed")
        _validate(node.left)
        _validate(node.right)
    elif isinstance(node, ast.UnaryOp):
        if not isinstance(node.op, _UNARYOPS):
            raise InvalidInput(
                f"operator {type(node.op).__name__} not allowed")
        _validate(node.operand)
    elif isinstance(node, ast.Call):
        if (not isinstance(node.func, ast.Name)
                or node.func.id not in _FUNCTIONS):
            raise InvalidInput("only sin, cos and exp calls are allowed")
        if len(node.args) != 1 or node.keywords:
            raise InvalidInput(
                f"{node.func.id} takes exactly one positional argument")
        _validate(node.args[0])
    else:
        raise InvalidInput(f"syntax {type(node).__name__} not allowed")


def compile_expression(text):
    """Compile a scalar expression of t into a float-valued callable."""
    if isinstance(text, (int, float)) and not isinstance(text, bool):
        value = float(text)
        return lambda t: value
    if not isinstance(text, str):
        raise InvalidInput(f"expression must be a string, got {type(text).__name__}")
    try:
        tree = ast.parse(text, mode="eval")
    except SyntaxError as exc:
        raise InvalidInput(f"bad expression {text!r}: {exc.msg}") from None
    _validate(tree)
    code = compile(tree, "<expression>", "eval")
    env = {"__builtins__": {}, **_FUNCTIONS, **_NAMES}

    def fn(t):
        return float(eval(code, env, {"t": float(t)}))

    return fn


def evaluate(text, t: float) -> float:
    return compile_expression(text)(t)


def compile_matrix(entries):
    """Compile a matrix/vector literal of expressions into a callable of t.

    A flat list gives a vector, a list of equal-length rows a matrix, and
    a bare scalar/expression a 1-vector.
    """
    if isinstance(entries, (str, int, float)):
        fn = compile_expression(entries)
        return lambda t: np.array([fn(t)])
    if not isinstance(entries, (list, tuple)) or not entries:
        raise InvalidInput("matrix literal must be a non-empty list")
    if all(isinstance(row, (list, tuple)) for row in entries):
        width = len(entries[0])
        if width == 0 or any(len(row) != width for row in entries):
            raise InvalidInput("matrix rows must be non-empty and equal length")
        fns = [[compile_expression(entry) for entry in row] for row in entries]
        return lambda t: np.array([[fn(t) for fn in row] for row in fns])
    if any(isinstance(row, (list, tuple)) for row in entries):
        raise InvalidInput("cannot mix scalar and row entries")
    fns = [compile_expression(entry) for entry in entries]
    return lambda t: np.array([fn(t) for fn in fns])
