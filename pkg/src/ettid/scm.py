"""Discrete structural causal models evaluated exactly by enumerating exogenous
configurations. This is the ground truth every identified estimand is checked
against."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .graph import Admg, GraphError

__all__ = [
    "DiscreteScm", "Exogenous", "JointTable", "ResourceError", "DegenerateError",
    "random_scm", "observational", "interventional", "ett_ground_truth", "effect_ground_truth",
    "shift_ground_truth", "ModelSource", "BatchSource", "TableSource", "DEFAULT_CAP",
    "scm_to_json", "scm_from_json", "conditional_mutual_information",
]

DEFAULT_CAP = 10 ** 8


class ResourceError(RuntimeError):
    """Exogenous state space exceeds the enumeration cap."""


class DegenerateError(ZeroDivisionError):
    """Conditioning on an event of probability zero."""


@dataclass(frozen=True)
class JointTable:
    """Dense probability table. ``probs`` may carry leading batch axes (one per
    stacked model) before the variable axes."""

    variables: tuple[str, ...]
    probs: np.ndarray

    @property
    def batch_shape(self) -> tuple[int, ...]:
        return self.probs.shape[: self.probs.ndim - len(self.variables)]

    def marginal(self, keep: Sequence[str]) -> "JointTable":
        keep = [v for v in self.variables if v in set(keep)]
        nb = len(self.batch_shape)
        drop = tuple(nb + i for i, v in enumerate(self.variables) if v not in set(keep))
        return JointTable(tuple(keep), self.probs.sum(axis=drop) if drop else self.probs)

    def prob(self, assignment: Mapping[str, int]):
        m = self.marginal(assignment.keys())
        idx = tuple(assignment[v] for v in m.variables)
        return m.probs[(Ellipsis,) + idx]

    def total(self):
        nb = len(self.batch_shape)
        return self.probs.sum(axis=tuple(range(nb, self.probs.ndim)))


@dataclass(frozen=True)
class Exogenous:
    name: str
    probs: np.ndarray
    children: tuple[str, ...]


@dataclass
class DiscreteScm:
    """Exogenous distributions plus total lookup tables for each observable.

    ``tables[v]`` is indexed by the values of ``parents[v]`` followed by the
    values of ``exo_inputs[v]``.
    """

    graph: Admg
    domains: dict[str, int]
    exogenous: list[Exogenous]
    parents: dict[str, tuple[str, ...]]
    exo_inputs: dict[str, tuple[str, ...]]
    tables: dict[str, np.ndarray]
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        for u in self.exogenous:
            if np.any(u.probs < 0) or abs(u.probs.sum() - 1.0) > 1e-12:
                raise ValueError(f"exogenous {u.name} is not a probability vector")
        names = {u.name for u in self.exogenous}
        for v in self.graph.vertices:
            if not set(self.parents[v]) <= self.graph.parents([v]):
                raise ValueError(f"{v} reads a non-parent")
            if not set(self.exo_inputs[v]) <= names:
                raise ValueError(f"{v} reads an unknown exogenous variable")

    @property
    def n_states(self) -> int:
        return math.prod(len(u.probs) for u in self.exogenous)

    def enumerate_states(self, cap: int = DEFAULT_CAP):
        """Exogenous configurations as (index arrays per exogenous name, weights)."""
        if "states" in self._cache:
            return self._cache["states"]
        n = self.n_states
        if n > cap:
            raise ResourceError(f"{n} exogenous states exceed the cap of {cap}")
        sizes = [len(u.probs) for u in self.exogenous]
        if sizes:
            grids = np.indices(sizes).reshape(len(sizes), -1)
        else:
            grids = np.zeros((0, 1), dtype=np.intp)
        weight = np.ones(grids.shape[1])
        vals = {}
        for u, g in zip(self.exogenous, grids):
            vals[u.name] = g
            weight = weight * u.probs[g]
        self._cache["states"] = (vals, weight)
        return vals, weight

    def solve(self, do: Mapping[str, int] | None = None, cap: int = DEFAULT_CAP) -> dict[str, np.ndarray]:
        """Values of every observable in every exogenous state under ``do``."""
        do = dict(do or {})
        key = ("solve", tuple(sorted(do.items())))
        if key in self._cache:
            return self._cache[key]
        exo, weight = self.enumerate_states(cap)
        n = len(weight)
        out: dict[str, np.ndarray] = {}
        for v in self.graph.topological_order():
            if v in do:
                out[v] = np.full(n, do[v], dtype=np.intp)
                continue
            idx = tuple(out[p] for p in self.parents[v]) + tuple(exo[u] for u in self.exo_inputs[v])
            t = self.tables[v]
            out[v] = np.broadcast_to(t[idx], (n,)) if idx else np.full(n, t, dtype=np.intp)
        self._cache[key] = out
        return out


def _table_from_values(variables, values, weight, domains) -> JointTable:
    dims = tuple(domains[v] for v in variables)
    if not variables:
        return JointTable((), np.array(weight.sum()))
    flat = np.ravel_multi_index(tuple(values[v] for v in variables), dims)
    probs = np.bincount(flat, weights=weight, minlength=int(np.prod(dims))).reshape(dims)
    return JointTable(tuple(variables), probs)


def observational(m: DiscreteScm, cap: int = DEFAULT_CAP) -> JointTable:
    return interventional(m, {}, cap)


def interventional(m: DiscreteScm, do_assignments: Mapping[str, int], cap: int = DEFAULT_CAP) -> JointTable:
    """Joint table of the non-intervened observables under ``do``."""
    for v, x in do_assignments.items():
        if v not in m.domains:
            raise GraphError(f"unknown vertex {v}")
        if not 0 <= x < m.domains[v]:
            raise ValueError(f"value {x} outside the domain of {v}")
    key = ("table", tuple(sorted(do_assignments.items())))
    if key not in m._cache:
        vals = m.solve(do_assignments, cap)
        _, weight = m.enumerate_states(cap)
        keep = [v for v in m.graph.vertices if v not in do_assignments]
        m._cache[key] = _table_from_values(keep, vals, weight, m.domains)
    return m._cache[key]


def _event_mask(values: Mapping[str, np.ndarray], event: Mapping[str, int], n: int) -> np.ndarray:
    mask = np.ones(n, dtype=bool)
    for v, x in event.items():
        mask &= values[v] == x
    return mask


def ett_ground_truth(m: DiscreteScm, outcomes: Mapping[str, int], do: Mapping[str, int],
                     observed: Mapping[str, int], cap: int = DEFAULT_CAP) -> float:
    """``P(Y_x = y | X = x')`` from one shared exogenous draw per unit."""
    _, weight = m.enumerate_states(cap)
    n = len(weight)
    natural = m.solve({}, cap)
    treated = m.solve(do, cap)
    cond = _event_mask(natural, observed, n)
    den = weight[cond].sum()
    if den <= 0:
        raise DegenerateError("P(X = x') is zero in this model")
    num = weight[cond & _event_mask(treated, outcomes, n)].sum()
    return float(num / den)


def effect_ground_truth(m: DiscreteScm, outcomes: Mapping[str, int], do: Mapping[str, int],
                        given: Mapping[str, int] | None = None, cap: int = DEFAULT_CAP) -> float:
    """``P(y | given, do(x))`` by enumeration."""
    _, weight = m.enumerate_states(cap)
    n = len(weight)
    vals = m.solve(do, cap)
    cond = _event_mask(vals, given or {}, n)
    den = weight[cond].sum()
    if den <= 0:
        raise DegenerateError("conditioning event has probability zero")
    return float(weight[cond & _event_mask(vals, outcomes, n)].sum() / den)


def shift_ground_truth(m: DiscreteScm, outcomes: Mapping[str, int], treatment: str,
                       shift: Sequence[int], cap: int = DEFAULT_CAP) -> float:
    """``P(Y_{g(X)} = y)``: each unit is set to ``g`` of its own natural treatment value."""
    _, weight = m.enumerate_states(cap)
    n = len(weight)
    natural = m.solve({}, cap)
    hit = np.zeros(n, dtype=bool)
    for x in range(m.domains[treatment]):
        sel = natural[treatment] == x
        treated = m.solve({treatment: int(shift[x])}, cap)
        hit |= sel & _event_mask(treated, outcomes, n)
    return float(weight[hit].sum())


# random models ------------------------------------------------------------

def _clamped_simplex(rng: np.random.Generator, k: int) -> np.ndarray:
    p = rng.dirichlet(np.ones(k))
    p = np.clip(p, 0.05, 0.95)
    return p / p.sum()


def random_scm(g: Admg, domains: Mapping[str, int] | int = 2, seed: int = 0, *,
               noise_extra: int = 1, latent: str = "edge", latent_size: int | None = None) -> DiscreteScm:
    """Random strictly positive model compatible with ``g``.

    Every observable gets a private noise variable with ``domain + noise_extra``
    states, and for each parent/shared-latent configuration its table maps the
    noise values onto the whole domain, so every conditional is positive.
    ``latent="edge"`` puts one shared variable on every bidirected edge,
    ``latent="component"`` one per C-component of size > 1.
    """
    if isinstance(domains, int):
        domains = {v: domains for v in g.vertices}
    domains = {v: int(domains[v]) for v in g.vertices}
    for v, k in domains.items():
        if k < 2:
            raise ValueError(f"domain of {v} must have at least 2 values")
    rng = np.random.default_rng(seed)
    exogenous: list[Exogenous] = []
    exo_inputs: dict[str, list[str]] = {v: [] for v in g.vertices}
    if latent == "edge":
        groups = [tuple(sorted(e)) for e in sorted(g.bidirected, key=sorted)]
    elif latent == "component":
        groups = [tuple(sorted(c)) for c in g.c_components() if len(c) > 1]
    else:
        raise ValueError(f"unknown latent layout {latent!r}")
    for grp in groups:
        size = latent_size or max(domains[v] for v in grp)
        name = "U_" + "_".join(grp)
        exogenous.append(Exogenous(name, _clamped_simplex(rng, size), grp))
        for v in grp:
            exo_inputs[v].append(name)
    for v in g.vertices:
        name = "E_" + v
        exogenous.append(Exogenous(name, _clamped_simplex(rng, domains[v] + noise_extra), (v,)))
        exo_inputs[v].append(name)
    sizes = {u.name: len(u.probs) for u in exogenous}
    parents = {v: tuple(sorted(g.parents([v]))) for v in g.vertices}
    tables = {}
    for v in g.vertices:
        k = domains[v]
        shape = tuple(domains[p] for p in parents[v]) + tuple(sizes[u] for u in exo_inputs[v])
        noise = sizes[exo_inputs[v][-1]]
        outer = math.prod(shape[:-1])
        # each row covers the whole domain, then is shuffled
        rows = np.concatenate([np.tile(np.arange(k), (outer, 1)),
                               rng.integers(0, k, (outer, noise - k))], axis=1)
        tables[v] = rng.permuted(rows, axis=1).astype(np.intp).reshape(shape)
    return DiscreteScm(g, domains, exogenous, parents,
                       {v: tuple(s) for v, s in exo_inputs.items()}, tables)


# table sources for estimand evaluation ------------------------------------

class TableSource:
    """Fixed tables keyed by regime (sorted ``(var, value)`` tuples)."""

    def __init__(self, tables: Mapping[tuple, JointTable], domains: Mapping[str, int]):
        self.tables = dict(tables)
        self.domains = dict(domains)

    def table(self, regime: tuple) -> JointTable:
        try:
            return self.tables[tuple(sorted(regime))]
        except KeyError:
            raise KeyError(f"no table for regime {dict(regime)}") from None


class ModelSource:
    """Tables computed on demand from one model."""

    def __init__(self, m: DiscreteScm, cap: int = DEFAULT_CAP):
        self.model = m
        self.cap = cap
        self.domains = dict(m.domains)

    def table(self, regime: tuple) -> JointTable:
        return interventional(self.model, dict(regime), self.cap)


class BatchSource:
    """Several models over the same graph and domains, stacked on a batch axis."""

    def __init__(self, models: Sequence[DiscreteScm], cap: int = DEFAULT_CAP):
        self.models = list(models)
        self.cap = cap
        self.domains = dict(self.models[0].domains)
        self._cache: dict = {}

    def table(self, regime: tuple) -> JointTable:
        key = tuple(sorted(regime))
        if key not in self._cache:
            ts = [interventional(m, dict(key), self.cap) for m in self.models]
            self._cache[key] = JointTable(ts[0].variables, np.stack([t.probs for t in ts]))
        return self._cache[key]


# serialization ------------------------------------------------------------

def scm_to_json(m: DiscreteScm) -> str:
    doc = {
        "vertices": list(m.graph.vertices),
        "directed": [list(e) for e in sorted(m.graph.directed)],
        "bidirected": [sorted(e) for e in sorted(m.graph.bidirected, key=sorted)],
        "domains": {v: m.domains[v] for v in m.graph.vertices},
        "exogenous": [{"name": u.name, "probs": u.probs.tolist(), "children": list(u.children)}
                      for u in m.exogenous],
        "functions": {v: {"parents": list(m.parents[v]), "exogenous": list(m.exo_inputs[v]),
                          "table": m.tables[v].tolist()} for v in m.graph.vertices},
    }
    return json.dumps(doc, sort_keys=True)


def scm_from_json(s: str) -> DiscreteScm:
    d = json.loads(s)
    g = Admg(tuple(d["vertices"]), frozenset(tuple(e) for e in d["directed"]),
             frozenset(frozenset(e) for e in d["bidirected"]))
    exo = [Exogenous(u["name"], np.asarray(u["probs"], dtype=float), tuple(u["children"]))
           for u in d["exogenous"]]
    f = d["functions"]
    return DiscreteScm(g, dict(d["domains"]), exo,
                       {v: tuple(f[v]["parents"]) for v in g.vertices},
                       {v: tuple(f[v]["exogenous"]) for v in g.vertices},
                       {v: np.asarray(f[v]["table"], dtype=np.intp) for v in g.vertices})


def conditional_mutual_information(t: JointTable, x, y, z=()) -> float:
    """``I(X; Y | Z)`` in nats for an unbatched table."""
    x, y, z = list(x), list(y), list(z)
    xyz = t.marginal(x + y + z)
    order = list(xyz.variables)
    p = xyz.probs

    def marg(keep):
        axes = tuple(i for i, v in enumerate(order) if v not in keep)
        return p.sum(axis=axes, keepdims=True) if axes else p

    pxz, pyz, pz = marg(set(x + z)), marg(set(y + z)), marg(set(z))
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = p * (np.log(p) + np.log(pz) - np.log(pxz) - np.log(pyz))
    return float(np.nansum(np.where(p > 0, terms, 0.0)))
