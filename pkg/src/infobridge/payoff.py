"""Cash-flow payoff functions over market factors.

A payoff maps factor values to a nonnegative cash amount.  Payoffs built
from the scenario expression grammar (constants, + - * /const, integer
powers, min/max) also try to carry a sum-of-monomials normal form
``sum_m c_m prod_a X_a^{k_ma}``; since factors are independent, such
payoffs price through per-factor conditional moments alone, with no tensor
grid and no dimensionality limit.  min/max break the normal form and fall
back to the generic route.
"""

from __future__ import annotations

import ast
from dataclasses import dataclass
from typing import Callable, Mapping

import numpy as np


class PayoffError(ValueError):
    pass


@dataclass(frozen=True)
class Monomial:
    coefficient: float
    powers: tuple[tuple[str, int], ...]  # sorted (factor id, exponent>0)

    def degree_of(self, factor_id: str) -> int:
        return dict(self.powers).get(factor_id, 0)


@dataclass(frozen=True)
class Payoff:
    """Evaluable payoff with optional monomial normal form."""

    fn: Callable[[Mapping[str, np.ndarray]], np.ndarray]
    depends_on: tuple[str, ...]
    monomials: tuple[Monomial, ...] | None = None
    source: str | None = None

    def __call__(self, values: Mapping[str, np.ndarray]) -> np.ndarray:
        return self.fn(values)

    @property
    def max_power(self) -> int:
        if self.monomials is None:
            return 0
        return max((k for m in self.monomials for _, k in m.powers), default=0)

    @classmethod
    def identity(cls, factor_id: str) -> "Payoff":
        return cls(
            fn=lambda v, _f=factor_id: np.asarray(v[_f], dtype=float),
            depends_on=(factor_id,),
            monomials=(Monomial(1.0, ((factor_id, 1),)),),
            source=factor_id,
        )

    @classmethod
    def from_function(cls, fn, depends_on) -> "Payoff":
        return cls(fn=fn, depends_on=tuple(depends_on))

    @classmethod
    def single_factor(cls, factor_id: str, fn) -> "Payoff":
        """Arbitrary function of one factor (still factorizable downstream)."""
        return cls(
            fn=lambda v, _f=factor_id, _g=fn: np.asarray(_g(v[_f]), dtype=float),
            depends_on=(factor_id,),
        )

    @classmethod
    def growth_product(cls, base: float, factor_ids) -> "Payoff":
        """base * prod of the factors, the dividend-growth building block."""
        ids = tuple(factor_ids)
        powers = tuple(sorted((f, 1) for f in ids))
        return cls(
            fn=lambda v, _ids=ids, _b=base: _b * np.prod([np.asarray(v[f], dtype=float) for f in _ids], axis=0),
            depends_on=ids,
            monomials=(Monomial(base, powers),),
            source=None,
        )

    @classmethod
    def parse(cls, expression: str, known_factors) -> "Payoff":
        """Compile an arithmetic expression over factor ids."""
        return _compile(expression, tuple(known_factors))


_ALLOWED_CALLS = ("min", "max")


def _factor_name_nodes(tree: ast.AST) -> list[ast.Name]:
    """Name nodes that refer to factors (excluding min/max call heads)."""
    call_heads = {
        id(sub.func)
        for sub in ast.walk(tree)
        if isinstance(sub, ast.Call) and isinstance(sub.func, ast.Name)
    }
    return [
        sub
        for sub in ast.walk(tree)
        if isinstance(sub, ast.Name) and id(sub) not in call_heads
    ]


def _validate(node: ast.AST, known: tuple[str, ...], expr: str) -> None:
    call_heads = {
        id(sub.func)
        for sub in ast.walk(node)
        if isinstance(sub, ast.Call) and isinstance(sub.func, ast.Name)
    }
    for sub in ast.walk(node):
        if isinstance(sub, (ast.Expression, ast.Constant, ast.Load)):
            if isinstance(sub, ast.Constant) and not isinstance(sub.value, (int, float)):
                raise PayoffError(f"non-numeric constant in payoff: {expr!r}")
        elif isinstance(sub, ast.Name):
            if id(sub) in call_heads:
                continue
            if sub.id not in known:
                raise PayoffError(f"unknown factor id {sub.id!r} in payoff: {expr!r}")
        elif isinstance(sub, ast.BinOp):
            if not isinstance(sub.op, (ast.Add, ast.Sub, ast.Mult, ast.Div, ast.Pow)):
                raise PayoffError(f"operator not in the payoff grammar: {expr!r}")
        elif isinstance(sub, ast.UnaryOp):
            if not isinstance(sub.op, (ast.USub, ast.UAdd)):
                raise PayoffError(f"operator not in the payoff grammar: {expr!r}")
        elif isinstance(sub, ast.Call):
            if not (isinstance(sub.func, ast.Name) and sub.func.id in _ALLOWED_CALLS):
                raise PayoffError(f"only min/max calls are allowed: {expr!r}")
            if sub.keywords:
                raise PayoffError(f"min/max take positional arguments only: {expr!r}")
        elif isinstance(sub, (ast.Add, ast.Sub, ast.Mult, ast.Div, ast.Pow, ast.USub, ast.UAdd)):
            pass
        else:
            raise PayoffError(f"construct not in the payoff grammar: {expr!r}")


def _evaluator(node: ast.AST):
    if isinstance(node, ast.Expression):
        return _evaluator(node.body)
    if isinstance(node, ast.Constant):
        return lambda v, _c=float(node.value): _c
    if isinstance(node, ast.Name):
        return lambda v, _n=node.id: np.asarray(v[_n], dtype=float)
    if isinstance(node, ast.UnaryOp):
        inner = _evaluator(node.operand)
        sign = -1.0 if isinstance(node.op, ast.USub) else 1.0
        return lambda v, _i=inner, _s=sign: _s * _i(v)
    if isinstance(node, ast.BinOp):
        left, right = _evaluator(node.left), _evaluator(node.right)
        op = {
            ast.Add: np.add,
            ast.Sub: np.subtract,
            ast.Mult: np.multiply,
            ast.Div: np.divide,
            ast.Pow: np.power,
        }[type(node.op)]
        return lambda v, _l=left, _r=right, _o=op: _o(_l(v), _r(v))
    if isinstance(node, ast.Call):
        args = [_evaluator(a) for a in node.args]
        op = np.minimum if node.func.id == "min" else np.maximum
        def call(v, _a=args, _o=op):
            acc = _a[0](v)
            for g in _a[1:]:
                acc = _o(acc, g(v))
            return acc
        return call
    raise AssertionError("unreachable after validation")


_POLY_TERM_LIMIT = 512


def _poly(node: ast.AST) -> list[tuple[float, dict[str, int]]] | None:
    """Sum-of-monomials form, or None when the expression is not polynomial."""
    if isinstance(node, ast.Expression):
        return _poly(node.body)
    if isinstance(node, ast.Constant):
        return [(float(node.value), {})]
    if isinstance(node, ast.Name):
        return [(1.0, {node.id: 1})]
    if isinstance(node, ast.UnaryOp):
        inner = _poly(node.operand)
        if inner is None:
            return None
        sign = -1.0 if isinstance(node.op, ast.USub) else 1.0
        return [(sign * c, p) for c, p in inner]
    if isinstance(node, ast.BinOp):
        if isinstance(node.op, (ast.Add, ast.Sub)):
            left, right = _poly(node.left), _poly(node.right)
            if left is None or right is None:
                return None
            sign = 1.0 if isinstance(node.op, ast.Add) else -1.0
            return left + [(sign * c, p) for c, p in right]
        if isinstance(node.op, ast.Mult):
            left, right = _poly(node.left), _poly(node.right)
            if left is None or right is None:
                return None
            if len(left) * len(right) > _POLY_TERM_LIMIT:
                return None
            out = []
            for cl, pl in left:
                for cr, pr in right:
                    p = dict(pl)
                    for k, e in pr.items():
                        p[k] = p.get(k, 0) + e
                    out.append((cl * cr, p))
            return out
        if isinstance(node.op, ast.Div):
            left = _poly(node.left)
            right = _poly(node.right)
            if left is None or right is None or len(right) != 1 or right[0][1]:
                return None  # division only by a constant
            c = right[0][0]
            if c == 0.0:
                raise PayoffError("division by zero in payoff")
            return [(cl / c, pl) for cl, pl in left]
        if isinstance(node.op, ast.Pow):
            if not (isinstance(node.right, ast.Constant) and float(node.right.value).is_integer()):
                return None
            k = int(node.right.value)
            if k < 0 or k > 8:
                return None
            base = _poly(node.left)
            if base is None:
                return None
            acc = [(1.0, {})]
            for _ in range(k):
                nxt = []
                for cl, pl in acc:
                    for cr, pr in base:
                        p = dict(pl)
                        for kk, e in pr.items():
                            p[kk] = p.get(kk, 0) + e
                        nxt.append((cl * cr, p))
                if len(nxt) > _POLY_TERM_LIMIT:
                    return None
                acc = nxt
            return acc
    return None  # min/max and anything else


def _collect(terms: list[tuple[float, dict[str, int]]]) -> tuple[Monomial, ...]:
    merged: dict[tuple[tuple[str, int], ...], float] = {}
    for c, p in terms:
        key = tuple(sorted((k, e) for k, e in p.items() if e != 0))
        merged[key] = merged.get(key, 0.0) + c
    return tuple(Monomial(c, key) for key, c in merged.items() if c != 0.0)


def _compile(expression: str, known: tuple[str, ...]) -> Payoff:
    try:
        tree = ast.parse(expression, mode="eval")
    except SyntaxError as exc:
        raise PayoffError(f"cannot parse payoff expression {expression!r}: {exc.msg}") from exc
    _validate(tree, known, expression)
    fn = _evaluator(tree)
    deps = tuple(sorted({n.id for n in _factor_name_nodes(tree)}))
    poly = _poly(tree)
    monomials = _collect(poly) if poly is not None else None
    return Payoff(
        fn=lambda v, _f=fn: np.asarray(_f(v), dtype=float),
        depends_on=deps,
        monomials=monomials,
        source=expression,
    )
