"""Expression mini-language for guards, contracts and assignments.

Terms range over integers and booleans: literals, variables, +, -, *,
the comparisons =, !=, <, <=, >, >=, and the connectives and/or/not.
Stores map variable names to values; evaluation of a well-typed term in
a store binding all its free variables always yields a value.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

from .errors import KmeliaError

Value = Union[int, bool]


class UnboundVariable(KmeliaError):
    def __init__(self, name: str):
        super().__init__(f"unbound variable: {name}")
        self.name = name


class TypeMismatch(KmeliaError):
    def __init__(self, location: str, detail: str):
        super().__init__(f"type mismatch at {location}: {detail}")
        self.location = location
        self.detail = detail


class _Unknown:
    """Absent/abstract value used by may-analysis; any operation on it is unknown."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "UNKNOWN"


UNKNOWN = _Unknown()


@dataclass(frozen=True)
class IntLit:
    value: int


@dataclass(frozen=True)
class BoolLit:
    value: bool


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class BinOp:
    op: str  # one of + - * = != < <= > >= and or
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Not:
    operand: "Expr"


Expr = Union[IntLit, BoolLit, Var, BinOp, Not]

TRUE = BoolLit(True)
FALSE = BoolLit(False)

ARITH_OPS = ("+", "-", "*")
ORDER_OPS = ("<", "<=", ">", ">=")
EQ_OPS = ("=", "!=")
BOOL_OPS = ("and", "or")


def _is_int(v) -> bool:
    return type(v) is int


def _is_bool(v) -> bool:
    return type(v) is bool


def eval_expr(e: Expr, store: dict) -> Value:
    """Evaluate ``e`` in ``store``; raises on unbound variables and ill-typed terms."""
    v = eval_partial(e, store)
    if v is UNKNOWN:
        for name in sorted(free_vars(e)):
            if name not in store or store[name] is UNKNOWN:
                raise UnboundVariable(name)
        raise UnboundVariable("<unknown>")  # unreachable on well-formed input
    return v


def eval_partial(e: Expr, store: dict):
    """Evaluate ``e``, yielding UNKNOWN whenever an unbound/unknown variable is involved.

    Type errors are raised even on the unknown path when decidable from the
    known operand.
    """
    if isinstance(e, IntLit):
        return e.value
    if isinstance(e, BoolLit):
        return e.value
    if isinstance(e, Var):
        if e.name not in store:
            return UNKNOWN
        return store[e.name]
    if isinstance(e, Not):
        v = eval_partial(e.operand, store)
        if v is UNKNOWN:
            return UNKNOWN
        if not _is_bool(v):
            raise TypeMismatch(render_expr(e), "'not' needs a boolean operand")
        return not v
    if isinstance(e, BinOp):
        lv = eval_partial(e.left, store)
        rv = eval_partial(e.right, store)
        return _apply_binop(e, lv, rv)
    raise TypeError(f"not an expression node: {e!r}")


def _apply_binop(e: BinOp, lv, rv):
    op = e.op
    loc = render_expr(e)
    if op in ARITH_OPS or op in ORDER_OPS:
        for v in (lv, rv):
            if v is not UNKNOWN and not _is_int(v):
                raise TypeMismatch(loc, f"'{op}' needs integer operands")
        if lv is UNKNOWN or rv is UNKNOWN:
            return UNKNOWN
        if op == "+":
            return lv + rv
        if op == "-":
            return lv - rv
        if op == "*":
            return lv * rv
        if op == "<":
            return lv < rv
        if op == "<=":
            return lv <= rv
        if op == ">":
            return lv > rv
        return lv >= rv
    if op in EQ_OPS:
        if lv is not UNKNOWN and rv is not UNKNOWN:
            if _is_bool(lv) != _is_bool(rv):
                raise TypeMismatch(loc, f"'{op}' compares values of different types")
            return (lv == rv) if op == "=" else (lv != rv)
        return UNKNOWN
    if op in BOOL_OPS:
        for v in (lv, rv):
            if v is not UNKNOWN and not _is_bool(v):
                raise TypeMismatch(loc, f"'{op}' needs boolean operands")
        if lv is UNKNOWN or rv is UNKNOWN:
            return UNKNOWN
        return (lv and rv) if op == "and" else (lv or rv)
    raise TypeMismatch(loc, f"unknown operator '{op}'")


def free_vars(e: Expr) -> frozenset:
    if isinstance(e, Var):
        return frozenset((e.name,))
    if isinstance(e, BinOp):
        return free_vars(e.left) | free_vars(e.right)
    if isinstance(e, Not):
        return free_vars(e.operand)
    return frozenset()


# Rendering; precedence levels grow from 'or' outward to atoms.
_LEVEL = {"or": 1, "and": 2, "=": 4, "!=": 4, "<": 4, "<=": 4, ">": 4, ">=": 4,
          "+": 5, "-": 5, "*": 6}


def render_expr(e: Expr, parent_level: int = 0) -> str:
    if isinstance(e, IntLit):
        text = str(e.value)
        return f"({text})" if e.value < 0 and parent_level > 0 else text
    if isinstance(e, BoolLit):
        return "true" if e.value else "false"
    if isinstance(e, Var):
        return e.name
    if isinstance(e, Not):
        return f"not {render_expr(e.operand, 3)}"
    if isinstance(e, BinOp):
        level = _LEVEL[e.op]
        # comparisons do not chain; +,-, * are rendered left-associatively
        left = render_expr(e.left, level if e.op not in EQ_OPS + ORDER_OPS else level + 1)
        right = render_expr(e.right, level + 1)
        text = f"{left} {e.op} {right}"
        return f"({text})" if level < parent_level else text
    raise TypeError(f"not an expression node: {e!r}")


def infer_types(e: Expr, env: dict | None = None, want: str | None = None) -> dict:
    """Infer variable types ('int'/'bool') from usage; ambiguous variables default to int.

    ``env`` seeds (and receives) the bindings; a conflicting use raises
    TypeMismatch. Pass ``want='bool'`` when ``e`` is known to be a predicate.
    """
    env = {} if env is None else env

    def bind(name, t):
        old = env.get(name)
        if old is None:
            env[name] = t
        elif old != t:
            raise TypeMismatch(name, f"used both as {old} and {t}")

    def walk(node, want):
        if isinstance(node, IntLit):
            if want == "bool":
                raise TypeMismatch(render_expr(node), "integer used as boolean")
            return "int"
        if isinstance(node, BoolLit):
            if want == "int":
                raise TypeMismatch(render_expr(node), "boolean used as integer")
            return "bool"
        if isinstance(node, Var):
            if want is not None:
                bind(node.name, want)
            return env.get(node.name)
        if isinstance(node, Not):
            walk(node.operand, "bool")
            return "bool"
        if isinstance(node, BinOp):
            if node.op in ARITH_OPS:
                walk(node.left, "int")
                walk(node.right, "int")
                return "int"
            if node.op in ORDER_OPS:
                walk(node.left, "int")
                walk(node.right, "int")
                return "bool"
            if node.op in BOOL_OPS:
                walk(node.left, "bool")
                walk(node.right, "bool")
                return "bool"
            # = / != : operands share a type
            lt = walk(node.left, None)
            rt = walk(node.right, None)
            t = lt or rt
            if t is not None:
                walk(node.left, t)
                walk(node.right, t)
            return "bool"
        raise TypeError(f"not an expression node: {node!r}")

    walk(e, want)
    for name in sorted(free_vars(e)):
        env.setdefault(name, "int")
    return env


def default_value(vtype: str) -> Value:
    return False if vtype == "bool" else 0
