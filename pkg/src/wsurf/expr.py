"""Small closed-form expression language for Weingarten functions and PDE terms.

Text such as ``"nu + 1"``, ``"exp(nu)"`` or ``"2*p*(p+1)/(p-1)**2*nu"`` is
parsed into a sympy expression. Only a fixed vocabulary of names is accepted;
everything else is rejected with ``ValueError``. Parsed expressions are
compiled to vectorised numpy callables with :func:`compile_expr`.
"""

from __future__ import annotations

import re

import numpy as np
import sympy as sp
from sympy.parsing.sympy_parser import (
    convert_xor,
    parse_expr,
    standard_transformations,
)

__all__ = [
    "NU",
    "LAM",
    "P",
    "Q",
    "U",
    "V",
    "parse",
    "compile_expr",
    "to_text",
    "normalize",
    "same_expr",
]

NU = sp.Symbol("nu", real=True)
LAM = sp.Symbol("lambda", real=True)
P = sp.Symbol("p", real=True)
Q = sp.Symbol("q", real=True)
U = sp.Symbol("u", real=True)
V = sp.Symbol("v", real=True)

_SYMBOLS = {"nu": NU, "lam": LAM, "p": P, "q": Q, "u": U, "v": V}

_FUNCTIONS = {
    "exp": sp.exp,
    "ln": sp.log,
    "log": sp.log,
    "arctan": sp.atan,
    "atan": sp.atan,
    "sqrt": sp.sqrt,
    "sin": sp.sin,
    "cos": sp.cos,
    "tan": sp.tan,
    "sinh": sp.sinh,
    "cosh": sp.cosh,
    "tanh": sp.tanh,
    "sech": sp.sech,
    "abs": sp.Abs,
    "pi": sp.pi,
    "e": sp.E,
    "E": sp.E,
}

_TRANSFORMS = standard_transformations + (convert_xor,)

_GREEK = {"ν": "nu", "λ": "lam", "π": "pi"}


def parse(text: str | sp.Expr | float | int, variables=("nu",)) -> sp.Expr:
    """Parse ``text`` into a sympy expression over the given variable names.

    ``variables`` lists which of ``nu, lambda, p, q, u, v`` may appear free.
    Numbers pass through unchanged (as exact rationals when given as ints).
    """
    if isinstance(text, sp.Basic):
        expr = text
    elif isinstance(text, (int, float, np.integer, np.floating)):
        expr = sp.nsimplify(text) if isinstance(text, (int, np.integer)) else sp.Float(text)
    else:
        src = str(text)
        for greek, name in _GREEK.items():
            src = src.replace(greek, name)
        # 'lambda' is a Python keyword and cannot reach parse_expr as-is.
        src = re.sub(r"\blambda\b", "lam", src)
        local = dict(_FUNCTIONS)
        local.update(_SYMBOLS)
        try:
            expr = parse_expr(
                src,
                local_dict=local,
                global_dict={"Integer": sp.Integer, "Float": sp.Float,
                             "Rational": sp.Rational, "Symbol": sp.Symbol},
                transformations=_TRANSFORMS,
                evaluate=True,
            )
        except Exception as exc:  # sympy raises a zoo of types here
            raise ValueError(f"cannot parse expression {text!r}: {exc}") from None
    allowed = {_SYMBOLS["lam" if v in ("lambda", "lam") else v] for v in variables}
    stray = expr.free_symbols - allowed
    if stray:
        names = ", ".join(sorted(str(s) for s in stray))
        raise ValueError(f"expression {text!r} uses unknown names: {names}")
    return expr


def compile_expr(expr: sp.Expr, var: sp.Symbol = NU):
    """Return a numpy callable ``x -> expr(x)`` that broadcasts constants."""
    fn = sp.lambdify(var, expr, modules="numpy")
    if var not in expr.free_symbols:
        const = complex(expr.evalf())
        if const.imag != 0:
            raise ValueError(f"constant expression {expr} is not real")
        value = const.real

        def constant(x):
            return np.full(np.shape(x), value, dtype=float) if np.ndim(x) else value

        return constant

    def wrapped(x):
        with np.errstate(all="ignore"):
            return fn(np.asarray(x, dtype=float))

    return wrapped


def to_text(expr: sp.Expr) -> str:
    """Plain-text form used in JSON descriptors."""
    return sp.sstr(expr)


def normalize(expr) -> str:
    """Canonical string of an expression, used for golden-file comparison."""
    e = parse(expr, variables=("nu", "lambda", "p", "q")) if isinstance(expr, str) else expr
    e = sp.nsimplify(e, rational=False) if e.has(sp.Float) else e
    # cancel() is a canonical form for rational functions in the remaining generators
    return sp.sstr(sp.cancel(sp.expand(sp.powsimp(e))))


def same_expr(a, b) -> bool:
    """Structural-or-symbolic equality of two expressions (text or sympy)."""
    vars_ = ("nu", "lambda", "p", "q")
    ea = parse(a, vars_) if isinstance(a, str) else a
    eb = parse(b, vars_) if isinstance(b, str) else b
    if normalize(ea) == normalize(eb):
        return True
    return sp.simplify(ea - eb) == 0
