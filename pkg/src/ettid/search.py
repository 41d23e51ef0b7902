"""Randomized search for pairs of models that agree on the available
distributions but disagree on a query.

The structural tables of both models are shared; the second model's
exogenous distributions are fitted by nonlinear least squares so that its
observable distributions match the first model's exactly while the query
moves by a prescribed gap. A found pair proves non-identifiability; failure
proves nothing.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import least_squares

from .graph import Admg
from .query import EttQuery
from .scm import DiscreteScm, Exogenous, ett_ground_truth, effect_ground_truth, interventional, random_scm

__all__ = ["EffectQuery", "SearchConfig", "SearchResult", "counterexample_search", "check_pair"]


@dataclass(frozen=True)
class EffectQuery:
    """``P(y | given, do(x))`` with concrete value indices."""

    outcomes: dict
    do: dict
    given: dict = field(default_factory=dict)


@dataclass
class SearchConfig:
    agree: str = "pv"  # "pv": observational table; "pstar": every interventional table
    latent: str = "component"
    latent_sizes: tuple = (16, 8, 32)  # cycled over restarts
    noise_extra: int = 4
    max_nfev: int = 300  # per least-squares run
    gaps: tuple = (0.05, 0.01, 0.002)
    tol: float = 1e-9
    min_gap: float = 1e-3
    values: tuple = (1, 1, 0)  # outcome, do-value, observed treatment value for ETT queries
    domains: object = 2  # int or per-variable mapping


@dataclass
class SearchResult:
    pair: tuple | None
    evaluations: int
    restarts: int
    agreement: float | None = None
    gap: float | None = None

    @property
    def found(self) -> bool:
        return self.pair is not None


class _OutOfBudget(Exception):
    pass


def _regimes(g: Admg, domains: dict, agree: str) -> list[dict]:
    if agree == "pv":
        return [{}]
    out = []
    vs = sorted(g.vertices)
    for k in range(len(vs)):
        for s in itertools.combinations(vs, k):
            for vals in itertools.product(*(range(domains[v]) for v in s)):
                out.append(dict(zip(s, vals)))
    return out


class _Problem:
    """Observable tables and query value as functions of the exogenous logits."""

    def __init__(self, m: DiscreteScm, q, cfg: SearchConfig):
        self.m = m
        self.sizes = [len(u.probs) for u in m.exogenous]
        self.grids, _ = m.enumerate_states()
        g, doms = m.graph, m.domains
        self.cells = []
        for regime in _regimes(g, doms, cfg.agree):
            vals = m.solve(regime)
            keep = [v for v in sorted(g.vertices) if v not in regime]
            idx = np.zeros(len(vals[g.vertices[0]]) if g.vertices else 1, dtype=np.intp)
            size = 1
            for v in keep:
                idx = idx * doms[v] + vals[v]
                size *= doms[v]
            self.cells.append((idx, size))
        if isinstance(q, EttQuery):
            y_val, x_val, x_obs = cfg.values
            treated = m.solve({v: x_val for v in q.x})
            natural = m.solve({})
            den = np.ones_like(self.cells[0][0], dtype=bool)
            for v in q.x:
                den &= natural[v] == x_obs
            num = den.copy()
            for v in q.y:
                num &= treated[v] == y_val
        else:
            vals = m.solve(q.do)
            den = np.ones_like(self.cells[0][0], dtype=bool)
            for v, k in q.given.items():
                den &= vals[v] == k
            num = den.copy()
            for v, k in q.outcomes.items():
                num &= vals[v] == k
        self.num, self.den = num, den

    def weight(self, theta: np.ndarray) -> np.ndarray:
        w = np.ones(len(self.num))
        pos = 0
        for (name, g), k in zip(self.grids.items(), self.sizes):
            z = theta[pos:pos + k]
            p = np.exp(z - z.max())
            w = w * (p / p.sum())[g]
            pos += k
        return w

    def tables(self, w: np.ndarray) -> np.ndarray:
        return np.concatenate([np.bincount(idx, w, minlength=size) for idx, size in self.cells])

    def query(self, w: np.ndarray) -> float:
        return float(w[self.num].sum() / w[self.den].sum())


def _with_probs(m: DiscreteScm, theta: np.ndarray) -> DiscreteScm:
    exo = []
    pos = 0
    for u in m.exogenous:
        k = len(u.probs)
        z = theta[pos:pos + k]
        p = np.exp(z - z.max())
        p = p / p.sum()
        exo.append(Exogenous(u.name, p, u.children))
        pos += k
    return DiscreteScm(m.graph, dict(m.domains), exo, m.parents, m.exo_inputs, m.tables)


def _logits(m: DiscreteScm) -> np.ndarray:
    return np.concatenate([np.log(u.probs) for u in m.exogenous]) if m.exogenous else np.zeros(0)


def _query_value(m: DiscreteScm, q, cfg: SearchConfig) -> float:
    if isinstance(q, EttQuery):
        y_val, x_val, x_obs = cfg.values
        return ett_ground_truth(m, {v: y_val for v in q.y}, {v: x_val for v in q.x},
                                {v: x_obs for v in q.x})
    return effect_ground_truth(m, q.outcomes, q.do, q.given)


def check_pair(m1: DiscreteScm, m2: DiscreteScm, q, cfg: SearchConfig = SearchConfig()) -> tuple[float, float]:
    """(max table disagreement, query gap), recomputed by plain enumeration."""
    dis = 0.0
    for regime in _regimes(m1.graph, m1.domains, cfg.agree):
        a, b = interventional(m1, regime), interventional(m2, regime)
        dis = max(dis, float(np.max(np.abs(a.probs - b.probs))) if a.probs.size else 0.0)
    return dis, abs(_query_value(m1, q, cfg) - _query_value(m2, q, cfg))


def counterexample_search(g: Admg, q, budget: int = 100_000, seed: int = 0,
                          cfg: SearchConfig | None = None) -> SearchResult:
    """Look for two models compatible with ``g`` that agree on the observational
    (or every interventional) table but differ on ``q`` by at least ``min_gap``.

    ``budget`` bounds the number of model evaluations, including those spent on
    finite-difference Jacobians."""
    cfg = cfg or SearchConfig()
    rng = np.random.default_rng(seed)
    used = 0
    restarts = 0
    while used < budget:
        restarts += 1
        size = cfg.latent_sizes[(restarts - 1) % len(cfg.latent_sizes)]
        m1 = random_scm(g, cfg.domains, int(rng.integers(2**31)), latent=cfg.latent,
                        latent_size=size, noise_extra=cfg.noise_extra)
        prob = _Problem(m1, q, cfg)
        theta1 = _logits(m1)
        target = prob.tables(prob.weight(theta1))
        q1 = prob.query(prob.weight(theta1))
        for gap in cfg.gaps:
            if used >= budget:
                break
            sign = 1.0 if rng.random() < 0.5 else -1.0
            if not 0.0 <= q1 + sign * gap <= 1.0:
                sign = -sign
            start = theta1 + rng.normal(0.0, 1.0, theta1.shape)
            calls = [0]

            remaining = budget - used

            def resid(theta, gap=gap, sign=sign):
                if calls[0] >= remaining:
                    raise _OutOfBudget
                calls[0] += 1
                w = prob.weight(theta)
                return np.append(prob.tables(w) - target, prob.query(w) - q1 - sign * gap)

            max_nfev = max(1, min(cfg.max_nfev, remaining // (len(theta1) + 1)))
            try:
                sol = least_squares(resid, start, method="trf", xtol=1e-15, ftol=1e-15, gtol=1e-15,
                                    max_nfev=max_nfev)
            except _OutOfBudget:
                used += calls[0]
                break
            except (ValueError, FloatingPointError):
                used += calls[0]
                continue
            used += calls[0]
            w = prob.weight(sol.x)
            agreement = float(np.max(np.abs(prob.tables(w) - target)))
            diff = abs(prob.query(w) - q1)
            if agreement < cfg.tol and diff >= cfg.min_gap:
                m2 = _with_probs(m1, sol.x)
                dis, real_gap = check_pair(m1, m2, q, cfg)
                if dis < cfg.tol and real_gap >= cfg.min_gap:
                    return SearchResult((m1, m2), used, restarts, dis, real_gap)
    return SearchResult(None, used, restarts)
