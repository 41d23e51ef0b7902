"""Single-treatment ETT: augmented-graph reduction, bidirected-path criterion,
backdoor adjustment, shift interventions and the binary experimental identity."""

from __future__ import annotations

import itertools
from dataclasses import dataclass

from .estimand import (Binding, Estimand, Product, Prob, Quotient, Sum, default_token, prob,
                       q_factor_expression, render_text, rename_variable, substitute, to_json)
from .graph import Admg
from .identify import (BidirectedPath, Identified, IdResult, NotIdentifiable, NotIdentifiableError,
                       QueryError, condition, idc_factored)
from .query import EttQuery, to_user_tokens
from .simplify import simplify_consistency

__all__ = [
    "augment_with_witness", "ett_single_via_thm1", "ett_single_via_thm2", "check_backdoor_criterion",
    "ett_backdoor", "find_backdoor_sets", "BackdoorError", "MixtureEstimand", "additive_intervention",
    "ett_binary_from_experiment", "InconsistentInputError",
]


def _single(q: EttQuery):
    if len(q.treatments) != 1 or q.evidence:
        raise QueryError("this route takes exactly one treatment; use the multi-treatment routes")
    return q.treatments[0]


def _bind(vs):
    return tuple(Binding(v, default_token(v)) for v in sorted(vs))


def augment_with_witness(g: Admg, x: str, share_noise: bool = True) -> tuple[Admg, str]:
    """Add a childless copy ``W`` of ``x``'s mechanism.

    ``W`` gets the parents and bidirected neighbours of ``x``. With
    ``share_noise`` it is also linked to ``x`` itself, since both read the
    same private noise term.
    """
    name = f"W_{x}"
    while name in g.vertices:
        name += "_"
    sib = set(g.siblings(x)) | ({x} if share_noise else set())
    return g.add_vertex(name, sorted(g.parents([x])), sorted(sib)), name


def ett_single_via_thm1(g: Admg, q: EttQuery, share_noise: bool = True) -> IdResult:
    """Identify by reduction to ``P(y | w, do(x))`` in the augmented graph."""
    q.check_graph(g)
    _single(q)
    iq, back = q.internal()
    x, _, x_obs = iq.treatments[0]
    gp, w = augment_with_witness(g, x, share_noise)
    try:
        f, z2, _ = idc_factored(gp, iq.y, {w}, {x})
    except NotIdentifiableError as exc:
        return NotIdentifiable(exc.witness, route="thm1")
    joint = f.to_estimand()
    est = condition(joint, iq.y) if z2 else joint
    est = rename_variable(est, w, x, {default_token(w): x_obs})
    est = simplify_consistency(to_user_tokens(simplify_consistency(est), back))
    return Identified(est, route="thm1")


def _observational_ett(q: EttQuery, back, route) -> Identified:
    """``P(y | x')``: the answer when the treatment cannot affect the outcome."""
    given = [(v, o) for v, _, o in q.treatments] + list(q.evidence)
    est = Prob(tuple(Binding(v, t) for v, t in q.outcomes), tuple(Binding(v, t) for v, t in given))
    return Identified(simplify_consistency(to_user_tokens(est, back)), route=route)


def ett_single_via_thm2(g: Admg, q: EttQuery) -> IdResult:
    """Bidirected-path criterion on the outcome-ancestral subgraph."""
    q.check_graph(g)
    _single(q)
    iq, back = q.internal()
    x, x_do, x_obs = iq.treatments[0]
    y = iq.y
    if x not in g.ancestors(y):
        return _observational_ett(iq, back, "thm2")
    h = g.induced_subgraph(g.ancestors_inclusive(y))
    path = h.bidirected_path(x, h.children([x]))
    if path is not None:
        return NotIdentifiable(BidirectedPath(tuple(path)), route="thm2")
    order = h.topological_order()
    comps = h.c_components()
    cx = next(c for c in comps if x in c)
    qx = q_factor_expression(h, cx, order)
    qx_obs = substitute(qx, x_do, x_obs, {x})
    joint = [f for c in comps for f in q_factor_expression(h, c, order).factors]
    num = Product(tuple(qx_obs.factors) + tuple(joint))
    den = Product(tuple(qx.factors) + (prob([(x, x_obs)]),))
    over = set(h.vertices) - y - {x}
    est = Quotient(num, den)
    if over:
        est = Sum(_bind(over), est)
    est = simplify_consistency(to_user_tokens(simplify_consistency(est), back))
    return Identified(est, route="thm2")


# backdoor -----------------------------------------------------------------

class BackdoorError(ValueError):
    """The proposed adjustment set violates the backdoor criterion."""

    def __init__(self, msg, path=None):
        super().__init__(msg)
        self.path = path


def _backdoor_violation(g: Admg, x: str, y, z) -> str | None:
    z = frozenset(z)
    y = frozenset([y]) if isinstance(y, str) else frozenset(y)
    if z & (y | {x}) or x in y:
        raise QueryError("adjustment set overlaps treatment or outcome")
    bad = z & g.descendants([x])
    if bad:
        return f"{', '.join(sorted(bad))} descends from {x}"
    gx = g.cut_outgoing([x])
    if not gx.d_separated({x}, y, z):
        path = gx.open_path({x}, y, z)
        return "open backdoor path " + " ".join(path) if path else "open backdoor path"
    return None


def check_backdoor_criterion(g: Admg, x: str, y, z) -> bool:
    return _backdoor_violation(g, x, y, z) is None


def ett_backdoor(g: Admg, q: EttQuery, z) -> IdResult:
    """``Σ_z P(y | z, x) P(z | x')`` for a valid adjustment set ``z``."""
    q.check_graph(g)
    _single(q)
    iq, back = q.internal()
    x, x_do, x_obs = iq.treatments[0]
    why = _backdoor_violation(g, x, iq.y, z)
    if why:
        raise BackdoorError(f"{sorted(z)} is not a backdoor set for ({x}, {sorted(iq.y)}): {why}")
    zs = sorted(z)
    py = prob([(v, t) for v, t in iq.outcomes], zs + [(x, x_do)])
    if not zs:
        est: Estimand = py
    else:
        est = Sum(_bind(zs), Product((py, prob(zs, [(x, x_obs)]))))
    return Identified(simplify_consistency(to_user_tokens(est, back)), route="backdoor")


def find_backdoor_sets(g: Admg, x: str, y) -> list[frozenset]:
    """All valid adjustment sets, smallest first."""
    y = frozenset([y]) if isinstance(y, str) else frozenset(y)
    cand = sorted(set(g.vertices) - y - {x} - g.descendants([x]))
    out = []
    for k in range(len(cand) + 1):
        for zs in itertools.combinations(cand, k):
            if check_backdoor_criterion(g, x, y, zs):
                out.append(frozenset(zs))
    return out


# shift interventions ------------------------------------------------------

@dataclass(frozen=True)
class MixtureEstimand:
    """``Σ_k E_k · P(X = k)`` over the treatment's domain, ``E_k`` the ETT with
    ``x = g(k)`` and ``x' = k`` written with concrete domain indices."""

    treatment: str
    shift: tuple[int, ...]
    terms: tuple[Estimand, ...]

    def render_text(self) -> str:
        return " + ".join(f"[{render_text(t)}] P({self.treatment}={k})" for k, t in enumerate(self.terms))

    def to_json(self) -> dict:
        return {"kind": "mixture", "treatment": self.treatment, "shift": list(self.shift),
                "terms": [to_json(t) for t in self.terms]}

    def evaluate(self, source, resolution=None):
        from .evaluate import evaluate
        total = 0.0
        for k, t in enumerate(self.terms):
            weight = evaluate(prob([(self.treatment, str(k))]), source, resolution)
            total = total + evaluate(t, source, resolution) * weight
        return total


def additive_intervention(g: Admg, x: str, y, shift, domain: int | None = None) -> IdResult:
    """Effect of setting each unit's treatment to ``shift[its natural value]``.

    ``shift`` is a sequence (or mapping) over the treatment's value indices.
    """
    if isinstance(shift, dict):
        n = domain if domain is not None else len(shift)
        shift = [shift.get(k, k) for k in range(n)]
    shift = tuple(int(s) for s in shift)
    n = domain if domain is not None else len(shift)
    if len(shift) != n or any(not 0 <= s < n for s in shift):
        raise QueryError(f"shift {shift} does not map the domain of {x} into itself")
    ys = [y] if isinstance(y, str) else sorted(y)
    base = EttQuery(tuple((v, default_token(v)) for v in ys), ((x, "x_do", "x_obs"),))
    # units left at their own value only need consistency, not the ETT
    r = ett_single_via_thm2(g, base) if any(s != k for k, s in enumerate(shift)) else None
    if r is not None and not r.identified:
        return r
    terms = []
    for k, s in enumerate(shift):
        if s == k:
            t = prob(base.outcomes, [(x, str(k))])
        else:
            t = substitute(substitute(r.estimand, "x_do", str(s), {x}), "x_obs", str(k), {x})
        terms.append(simplify_consistency(t))
    return Identified(MixtureEstimand(x, shift, tuple(terms)), route="thm2")


# binary experimental identity ---------------------------------------------

class InconsistentInputError(ValueError):
    """The inputs cannot come from one distribution."""


def ett_binary_from_experiment(p_yx: float, p_y_given_x: float, p_x: float) -> float:
    """ETT for a binary treatment from ``P(Y_x = y)``, ``P(y | x)`` and ``P(x)``."""
    if not 0.0 < p_x < 1.0:
        raise ZeroDivisionError("P(x) must lie strictly between 0 and 1")
    out = (p_yx - p_y_given_x * p_x) / (1.0 - p_x)
    if out < -1e-12 or out > 1 + 1e-12:
        raise InconsistentInputError(f"implied ETT {out} is outside [0, 1]")
    return min(max(out, 0.0), 1.0)
