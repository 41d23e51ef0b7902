"""Symbolic probability expressions.

Values are opaque string tokens (``x``, ``x'``). A :class:`Sum` binds pairs
``(variable, token)``: inside its body every binding of that variable carrying
that token refers to the summation index, everything else is free.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Iterable, Mapping, Union

from .graph import Admg, GraphError

__all__ = [
    "Binding", "Prob", "Product", "Quotient", "Sum", "Const", "Estimand",
    "ONE", "ZERO", "default_token", "prime", "prob", "substitute", "substitute_tokens",
    "rename_variable", "free_bindings", "render_text", "render_json", "to_json", "from_json",
    "parse_json", "q_factor_expression", "is_observational", "walk",
]


def default_token(var: str) -> str:
    """Token used for a variable's generic value (lower-cased name)."""
    return var.lower()


def prime(token: str) -> str:
    return token + "'"


@dataclass(frozen=True, order=True)
class Binding:
    var: str
    value: str

    def __str__(self):
        return self.value


@dataclass(frozen=True)
class Prob:
    """``P_{do}(event | given)``. Binding order is kept as constructed."""

    event: tuple[Binding, ...]
    given: tuple[Binding, ...] = ()
    do: tuple[Binding, ...] = ()

    def key(self):
        return (tuple(sorted(set(self.event))), tuple(sorted(set(self.given))),
                tuple(sorted(set(self.do))))

    def bindings(self):
        return self.event + self.given + self.do


@dataclass(frozen=True)
class Product:
    factors: tuple["Estimand", ...]


@dataclass(frozen=True)
class Quotient:
    numerator: "Estimand"
    denominator: "Estimand"


@dataclass(frozen=True)
class Sum:
    over: tuple[Binding, ...]
    body: "Estimand"


@dataclass(frozen=True)
class Const:
    value: int


Estimand = Union[Prob, Product, Quotient, Sum, Const]
ONE = Const(1)
ZERO = Const(0)


def _b(items) -> tuple[Binding, ...]:
    out = []
    for it in items:
        if isinstance(it, Binding):
            out.append(it)
        elif isinstance(it, str):
            out.append(Binding(it, default_token(it)))
        else:
            out.append(Binding(*it))
    return tuple(out)


def prob(event, given=(), do=()) -> Prob:
    """Convenience constructor; plain variable names get their default token."""
    return Prob(_b(event), _b(given), _b(do))


def walk(e: Estimand):
    yield e
    if isinstance(e, Product):
        for f in e.factors:
            yield from walk(f)
    elif isinstance(e, Quotient):
        yield from walk(e.numerator)
        yield from walk(e.denominator)
    elif isinstance(e, Sum):
        yield from walk(e.body)


def is_observational(e: Estimand) -> bool:
    return not any(isinstance(n, Prob) and n.do for n in walk(e))


def free_bindings(e: Estimand, bound: frozenset = frozenset()) -> set[Binding]:
    if isinstance(e, Prob):
        return {b for b in e.bindings() if b not in bound}
    if isinstance(e, Product):
        return set().union(*(free_bindings(f, bound) for f in e.factors)) if e.factors else set()
    if isinstance(e, Quotient):
        return free_bindings(e.numerator, bound) | free_bindings(e.denominator, bound)
    if isinstance(e, Sum):
        return free_bindings(e.body, bound | set(e.over))
    return set()


# substitution -------------------------------------------------------------

def _fresh(b: Binding, avoid: set) -> Binding:
    tok = b.value
    while Binding(b.var, tok) in avoid:
        tok += "~"
    return Binding(b.var, tok)


def _subst(e: Estimand, fn, bound: frozenset) -> Estimand:
    """Apply ``fn`` (Binding -> Binding) to free bindings, renaming sum indices
    that would capture a substituted value."""
    if isinstance(e, Prob):
        m = lambda bs: tuple(b if b in bound else fn(b) for b in bs)  # noqa: E731
        return Prob(m(e.event), m(e.given), m(e.do))
    if isinstance(e, Product):
        return Product(tuple(_subst(f, fn, bound) for f in e.factors))
    if isinstance(e, Quotient):
        return Quotient(_subst(e.numerator, fn, bound), _subst(e.denominator, fn, bound))
    if isinstance(e, Sum):
        images = {fn(b) for b in free_bindings(e.body, bound | set(e.over))}
        over = []
        body = e.body
        for b in e.over:
            if b in images:
                nb = _fresh(b, images | set(e.over) | set(over))
                body = _subst(body, lambda c, b=b, nb=nb: nb if c == b else c,
                              frozenset(x for x in bound if x != b) | (set(e.over) - {b}))
                over.append(nb)
            else:
                over.append(b)
        return Sum(tuple(over), _subst(body, fn, bound | set(over)))
    return e


def substitute_tokens(e: Estimand, mapping: Mapping[tuple[str, str], str]) -> Estimand:
    """Simultaneously rewrite free bindings ``(var, token) -> (var, mapping[...])``."""
    def fn(b):
        new = mapping.get((b.var, b.value))
        return b if new is None else Binding(b.var, new)
    return _subst(e, fn, frozenset())


def substitute(e: Estimand, from_token: str, to_token: str, scope: Iterable[str]) -> Estimand:
    if from_token == to_token:
        return e
    return substitute_tokens(e, {(v, from_token): to_token for v in scope})


def rename_variable(e: Estimand, old: str, new: str, token_map: Mapping[str, str] | None = None) -> Estimand:
    """Turn free bindings of ``old`` into bindings of ``new`` (tokens optionally mapped)."""
    token_map = token_map or {}

    def fn(b):
        if b.var != old:
            return b
        return Binding(new, token_map.get(b.value, b.value))
    return _subst(e, fn, frozenset())


# rendering ----------------------------------------------------------------

def _join(bs):
    # concrete indices are ambiguous on their own, so they carry the variable name
    return ",".join(f"{b.var}={b.value}" if b.value.isdigit() else b.value for b in bs)


def _needs_parens(e: Estimand) -> bool:
    return isinstance(e, (Sum, Quotient)) or (isinstance(e, Product) and len(e.factors) > 1)


def render_text(e: Estimand) -> str:
    if isinstance(e, Const):
        return str(e.value)
    if isinstance(e, Prob):
        sub = f"_{{{_join(e.do)}}}" if e.do else ""
        cond = f"|{_join(e.given)}" if e.given else ""
        return f"P{sub}({_join(e.event)}{cond})"
    if isinstance(e, Product):
        if not e.factors:
            return "1"
        return " ".join(f"({render_text(f)})" if isinstance(f, (Sum, Quotient)) else render_text(f)
                        for f in e.factors)
    if isinstance(e, Quotient):
        num, den = render_text(e.numerator), render_text(e.denominator)
        if _needs_parens(e.numerator):
            num = f"[{num}]"
        if _needs_parens(e.denominator):
            den = f"[{den}]"
        return f"{num} / {den}"
    if isinstance(e, Sum):
        body = render_text(e.body)
        if isinstance(e.body, Quotient):
            body = f"[{body}]"
        return f"Σ_{{{_join(e.over)}}} {body}"
    raise TypeError(type(e))


def _bj(bs):
    return [{"var": b.var, "value": b.value} for b in bs]


def to_json(e: Estimand) -> dict:
    if isinstance(e, Prob):
        return {"kind": "prob", "event": _bj(e.event), "given": _bj(e.given), "do": _bj(e.do)}
    if isinstance(e, Product):
        return {"kind": "product", "factors": [to_json(f) for f in e.factors]}
    if isinstance(e, Quotient):
        return {"kind": "quotient", "numerator": to_json(e.numerator),
                "denominator": to_json(e.denominator)}
    if isinstance(e, Sum):
        return {"kind": "sum", "over": _bj(e.over), "body": to_json(e.body)}
    if isinstance(e, Const):
        return {"kind": "const", "value": e.value}
    raise TypeError(type(e))


def render_json(e: Estimand) -> str:
    return json.dumps(to_json(e), ensure_ascii=False)


def from_json(d: dict) -> Estimand:
    bs = lambda items: tuple(Binding(i["var"], i["value"]) for i in items)  # noqa: E731
    kind = d["kind"]
    if kind == "prob":
        return Prob(bs(d["event"]), bs(d.get("given", ())), bs(d.get("do", ())))
    if kind == "product":
        return Product(tuple(from_json(f) for f in d["factors"]))
    if kind == "quotient":
        return Quotient(from_json(d["numerator"]), from_json(d["denominator"]))
    if kind == "sum":
        return Sum(bs(d["over"]), from_json(d["body"]))
    if kind == "const":
        return Const(int(d["value"]))
    raise ValueError(f"unknown estimand node kind {kind!r}")


def parse_json(s: str) -> Estimand:
    return from_json(json.loads(s))


# Q-factors ----------------------------------------------------------------

def q_factor_expression(g: Admg, component, order=None) -> Product:
    """Observational form of ``Q[component]``: one conditional per member given
    all of its predecessors in ``order``, latest predecessor first."""
    component = frozenset(component)
    if component not in set(g.c_components()):
        raise GraphError(f"{sorted(component)} is not a C-component of the graph")
    order = list(order) if order is not None else g.topological_order()
    if set(order) != set(g.vertices):
        raise GraphError("order must list every vertex of the graph")
    pos = {v: i for i, v in enumerate(order)}
    for a, b in g.directed:
        if pos[a] > pos[b]:
            raise GraphError(f"order is not topological ({a} -> {b})")
    factors = []
    for i, v in enumerate(order):
        if v in component:
            factors.append(prob([v], reversed(order[:i])))
    return Product(tuple(factors))
