"""ID and IDC for causal effects in ADMGs.

The top level of every result is kept as a list of ``(C-component, factor)``
pairs (:class:`Factored`) so that callers can rewrite values inside individual
Q-factors before assembling the final expression. Purely observational
conditionals are returned in the same C-component quotient form instead of
being passed through untouched.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Union

from .estimand import (ONE, Binding, Estimand, Product, Quotient, Sum, default_token,
                       free_bindings, prob, to_json)
from .graph import Admg, GraphError, _as_set

__all__ = [
    "QueryError", "NotIdentifiableError", "Hedge", "BidirectedPath", "Thm3Component",
    "Identified", "NotIdentifiable", "IdResult", "Factored", "identify_effect",
    "identify_conditional_effect", "idc_factored", "witness_to_json", "result_to_json",
]


class QueryError(ValueError):
    """Ill-formed query (overlapping or unknown variable sets)."""


# witnesses ----------------------------------------------------------------

@dataclass(frozen=True)
class Hedge:
    """Two C-forests ``f`` ⊃ ``f_prime`` sharing the root set ``roots``."""

    f: frozenset
    f_prime: frozenset
    roots: frozenset

    kind = "hedge"

    def to_json(self):
        return {"kind": self.kind, "f": sorted(self.f), "f_prime": sorted(self.f_prime),
                "roots": sorted(self.roots)}


@dataclass(frozen=True)
class BidirectedPath:
    path: tuple[str, ...]

    kind = "bidirected-path"

    def to_json(self):
        return {"kind": self.kind, "path": list(self.path)}


@dataclass(frozen=True)
class Thm3Component:
    """A C-component ancestral to the outcomes and backdoor treatments which
    either clause of the P_* obstruction applies to."""

    component: frozenset
    clause: int
    member: str
    paths: tuple[tuple[str, ...], ...]
    graph: Admg | None = field(default=None, compare=False)

    kind = "thm3-component"

    def to_json(self):
        return {"kind": self.kind, "component": sorted(self.component), "clause": self.clause,
                "member": self.member, "paths": [list(p) for p in self.paths]}


Witness = Union[Hedge, BidirectedPath, Thm3Component]


def witness_to_json(w) -> dict | None:
    return None if w is None else w.to_json()


class NotIdentifiableError(Exception):
    def __init__(self, witness: Witness):
        super().__init__(f"not identifiable: {witness}")
        self.witness = witness


@dataclass(frozen=True)
class Identified:
    estimand: Estimand
    source: str = "observational"
    route: str = ""

    identified = True


@dataclass(frozen=True)
class NotIdentifiable:
    witness: Witness
    route: str = ""

    identified = False


IdResult = Union[Identified, NotIdentifiable]


def result_to_json(r: IdResult) -> dict:
    if r.identified:
        return {"verdict": "identified", "source": r.source, "route": r.route,
                "estimand": to_json(r.estimand), "witness": None}
    return {"verdict": "not-identifiable", "route": r.route, "estimand": None,
            "witness": witness_to_json(r.witness)}


# distributions carried through the recursion -------------------------------

def _bind(vs) -> tuple[Binding, ...]:
    return tuple(Binding(v, default_token(v)) for v in sorted(vs))


class _ObsDist:
    """The observational joint (or a marginal of it)."""

    def conditional(self, v: str, given: list[str]) -> Estimand:
        return prob([v], given)

    def joint(self, keep) -> Estimand:
        keep = sorted(keep)
        return prob(keep) if keep else ONE

    def restrict(self, keep) -> "_ObsDist":
        return self


class _ProductDist:
    """``Π_v P(v | predecessors)`` over a C-component, other variables held fixed."""

    def __init__(self, order: list[str], factors: dict[str, Estimand], base=None, keep=None):
        self.order = order
        self.factors = factors
        self.keep = frozenset(order if keep is None else keep)

    def restrict(self, keep) -> "_ProductDist":
        return _ProductDist(self.order, self.factors, keep=frozenset(keep))

    def _preds(self, v):
        i = self.order.index(v)
        return frozenset(self.order[:i])

    def conditional(self, v: str, given: list[str]) -> Estimand:
        if frozenset(given) == self._preds(v):
            return self.factors[v]
        return Quotient(self.joint(list(given) + [v]), self.joint(given))

    def joint(self, keep) -> Estimand:
        keep = frozenset(keep)
        drop = set(self.order) - keep
        active = [v for v in self.order]
        changed = True
        while changed:
            changed = False
            for u in reversed(active):
                if u not in drop:
                    continue
                others = [self.factors[w] for w in active if w != u]
                mentioned = any(b.var == u for f in others for n in _probs(f) for b in n.bindings())
                if not mentioned:
                    active.remove(u)
                    drop.discard(u)
                    changed = True
        body = Product(tuple(self.factors[v] for v in active)) if active else ONE
        return Sum(_bind(drop), body) if drop else body


def _probs(e):
    from .estimand import walk, Prob
    return [n for n in walk(e) if isinstance(n, Prob)]


@dataclass(frozen=True)
class Factored:
    """``Σ_{over} Π_i factor_i`` with each factor tagged by its C-component."""

    over: tuple[Binding, ...]
    factors: tuple[tuple[frozenset, Estimand], ...]

    def to_estimand(self) -> Estimand:
        fs = tuple(f for _, f in self.factors)
        body = fs[0] if len(fs) == 1 else Product(fs)
        return Sum(self.over, body) if self.over else body

    def map_factors(self, fn) -> "Factored":
        return Factored(self.over, tuple((s, fn(s, f)) for s, f in self.factors))


# ID -----------------------------------------------------------------------

def _preds(order: list[str], g: Admg, v: str) -> list[str]:
    """Predecessors of ``v`` among the vertices of ``g``, latest first."""
    vs = set(g.vertices)
    i = order.index(v)
    return [u for u in reversed(order[:i]) if u in vs]


def _q_product(dist, order, g, s) -> Estimand:
    fs = tuple(dist.conditional(v, _preds(order, g, v)) for v in order if v in s)
    return fs[0] if len(fs) == 1 else Product(fs)


def _roots(g: Admg, s: frozenset) -> frozenset:
    sub = g.induced_subgraph(s)
    return frozenset(v for v in s if not sub.children([v]))


def _id(y: frozenset, x: frozenset, dist, g: Admg, order: list[str], top: bool) -> Factored:
    v = frozenset(g.vertices)
    if not x:
        if top:
            factors = tuple((c, _q_product(dist, order, g, c)) for c in g.c_components())
            return Factored(_bind(v - y), factors)
        return Factored((), ((v, dist.joint(y)),))
    an = g.ancestors_inclusive(y)
    if an != v:
        return _id(y, x & an, dist.restrict(an), g.induced_subgraph(an), order, top)
    w = (v - x) - g.cut_incoming(x).ancestors_inclusive(y)
    if w:
        return _id(y, x | w, dist, g, order, top)
    comps = g.induced_subgraph(v - x).c_components()
    if len(comps) > 1:
        factors = tuple((s, _id(s, v - s, dist, g, order, False).to_estimand()) for s in comps)
        return Factored(_bind(v - (y | x)), factors)
    s = comps[0]
    gcomps = g.c_components()
    if len(gcomps) == 1:
        raise NotIdentifiableError(Hedge(v, s, _roots(g, s)))
    if s in gcomps:
        return Factored(_bind(s - y), ((s, _q_product(dist, order, g, s)),))
    sp = next(c for c in gcomps if s < c)
    sub_order = [u for u in order if u in sp]
    factors = {u: dist.conditional(u, _preds(order, g, u)) for u in sub_order}
    inner = _id(y, x & sp, _ProductDist(sub_order, factors), g.induced_subgraph(sp), order, False)
    return Factored((), ((s, inner.to_estimand()),))


def _close(f: Factored, allowed) -> Factored:
    """Average out variables that the recursion intervened on at an arbitrary
    value (the expression does not depend on them)."""
    extra = {b.var for b in free_bindings(f.to_estimand())} - set(allowed)
    if not extra:
        return f
    return Factored(f.over + _bind(extra), f.factors + ((frozenset(), prob(sorted(extra))),))


def _check_sets(g: Admg, **sets) -> dict:
    out = {}
    for name, s in sets.items():
        s = _as_set(s)
        unknown = s - set(g.vertices)
        if unknown:
            raise QueryError(f"unknown variables in {name}: {sorted(unknown)}")
        out[name] = s
    names = list(out)
    for i, a in enumerate(names):
        for b in names[i + 1:]:
            if out[a] & out[b]:
                raise QueryError(f"{a} and {b} overlap: {sorted(out[a] & out[b])}")
    return out


def identify_effect(g: Admg, y, x) -> IdResult:
    """P(y | do(x)) from P(v), or a hedge."""
    s = _check_sets(g, y=y, x=x)
    if not s["y"]:
        raise QueryError("empty outcome set")
    try:
        f = _id(s["y"], s["x"], _ObsDist(), g, g.topological_order(), True)
        f = _close(f, s["y"] | s["x"])
    except NotIdentifiableError as exc:
        return NotIdentifiable(exc.witness, route="id")
    return Identified(f.to_estimand(), route="id")


def _rule2_applies(g: Admg, y, z_var, z, x) -> bool:
    mut = g.cut_incoming(x).cut_outgoing([z_var])
    return mut.d_separated(y, {z_var}, (z - {z_var}) | x)


def idc_factored(g: Admg, y, z, x) -> tuple[Factored, frozenset, frozenset]:
    """Run IDC; return the factored joint P'(y, z | do(x')) plus the final
    conditioning and intervention sets. Raises :class:`NotIdentifiableError`."""
    s = _check_sets(g, y=y, z=z, x=x)
    y, z, x = s["y"], s["z"], s["x"]
    if not y:
        raise QueryError("empty outcome set")
    moved = True
    while moved:
        moved = False
        for zv in sorted(z):
            if _rule2_applies(g, y, zv, z, x):
                z, x = z - {zv}, x | {zv}
                moved = True
                break
    f = _id(y | z, x, _ObsDist(), g, g.topological_order(), True)
    return _close(f, y | z | x), z, x


def condition(joint: Estimand, y) -> Estimand:
    """``joint / Σ_y joint``."""
    return Quotient(joint, Sum(_bind(y), joint))


def identify_conditional_effect(g: Admg, y, z, x) -> IdResult:
    """P(y | z, do(x)) from P(v)."""
    try:
        f, z2, _ = idc_factored(g, y, z, x)
    except NotIdentifiableError as exc:
        return NotIdentifiable(exc.witness, route="idc")
    joint = f.to_estimand()
    est = condition(joint, _as_set(y)) if z2 else joint
    return Identified(est, route="idc")
