"""Expression trees for custom defining functions.

A tree is JSON data: numbers are constants, strings name a real coordinate
(``x1``, ``y1``, ``x2``, ...), and lists are ``[op, arg, ...]``.  Example, the
unit ball of C^2::

    ["sub", ["add", ["pow", "x1", 2], ["pow", "y1", 2],
                    ["pow", "x2", 2], ["pow", "y2", 2]], 1]
"""

from __future__ import annotations

import re
from functools import reduce
from typing import Any

import numpy as np


class ExpressionError(ValueError):
    pass


_VAR = re.compile(r"^([xy])([1-4])$")

_NARY = {
    "add": lambda args: reduce(np.add, args),
    "mul": lambda args: reduce(np.multiply, args),
    "max": lambda args: reduce(np.maximum, args),
    "min": lambda args: reduce(np.minimum, args),
}
_UNARY = {
    "neg": np.negative,
    "abs": np.abs,
    "sqrt": np.sqrt,
    "exp": np.exp,
}


def validate(tree: Any, n: int) -> None:
    """Check the tree is well formed and only uses coordinates of C^n."""
    if isinstance(tree, bool):
        raise ExpressionError("booleans are not expressions")
    if isinstance(tree, (int, float)):
        return
    if isinstance(tree, str):
        m = _VAR.match(tree)
        if not m:
            raise ExpressionError(f"unknown variable {tree!r}")
        if int(m.group(2)) > n:
            raise ExpressionError(f"variable {tree!r} outside C^{n}")
        return
    if not isinstance(tree, list) or not tree or not isinstance(tree[0], str):
        raise ExpressionError(f"malformed node {tree!r}")
    op, args = tree[0], tree[1:]
    if op in _NARY:
        if len(args) < 1:
            raise ExpressionError(f"{op} needs at least one argument")
    elif op in _UNARY:
        if len(args) != 1:
            raise ExpressionError(f"{op} takes one argument")
    elif op in ("sub", "div"):
        if len(args) != 2:
            raise ExpressionError(f"{op} takes two arguments")
    elif op == "pow":
        if len(args) != 2 or not isinstance(args[1], (int, float)) or isinstance(args[1], bool):
            raise ExpressionError("pow takes a base and a numeric exponent")
    else:
        raise ExpressionError(f"unknown operator {op!r}")
    for a in args:
        validate(a, n)


def evaluate(tree: Any, reals: np.ndarray) -> np.ndarray:
    """Evaluate on interleaved real coordinates of shape ``(..., 2n)``."""
    if isinstance(tree, (int, float)):
        return np.full(reals.shape[:-1], float(tree))
    if isinstance(tree, str):
        m = _VAR.match(tree)
        k = 2 * (int(m.group(2)) - 1) + (0 if m.group(1) == "x" else 1)
        return reals[..., k]
    op, args = tree[0], tree[1:]
    if op == "pow":
        return np.power(evaluate(args[0], reals), args[1])
    vals = [evaluate(a, reals) for a in args]
    if op in _NARY:
        return _NARY[op](vals)
    if op in _UNARY:
        return _UNARY[op](vals[0])
    if op == "sub":
        return vals[0] - vals[1]
    return vals[0] / vals[1]
