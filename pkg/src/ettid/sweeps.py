"""Exhaustive property sweeps over small graphs, checked against the oracle."""

from __future__ import annotations

import itertools
from dataclasses import asdict, dataclass, field

import numpy as np

from .estimand import default_token, prime
from .evaluate import evaluate_with_flags
from .enumerate import small_family
from .graph import Admg, format_graph
from .multi import (ett_multi_from_pstar, ett_multi_from_pv, ett_multi_via_factors,
                    partition_treatments, rule3_minimize, thm3_nonid_check)
from .query import EttQuery
from .scm import BatchSource, ett_ground_truth, random_scm
from .single import ett_single_via_thm1, ett_single_via_thm2

__all__ = ["SweepConfig", "SingleCase", "single_treatment_sweep", "MultiCase", "multi_treatment_sweep",
           "query_for", "resolution_for", "oracle_values"]


@dataclass
class SweepConfig:
    max_n: int = 4
    min_n: int = 1
    seeds: int = 20
    seed_offset: int = 0
    outcome_sets: str = "all"  # "all" nonempty subsets or "single" vertices
    share_noise: bool = True


def query_for(y, xs) -> EttQuery:
    return EttQuery(tuple((v, default_token(v)) for v in sorted(y)),
                    tuple((x, default_token(x), prime(default_token(x))) for x in sorted(xs)))


def resolution_for(q: EttQuery, y_val=1, x_val=1, x_obs=0) -> dict:
    res = {(v, t): y_val for v, t in q.outcomes}
    for v, d, o in q.treatments:
        res[(v, d)] = x_val
        res[(v, o)] = x_obs
    return res


def oracle_values(models, q: EttQuery, y_val=1, x_val=1, x_obs=0) -> np.ndarray:
    outs = {v: y_val for v in q.y}
    do = {v: x_val for v in q.x}
    obs = {v: x_obs for v in q.x}
    return np.array([ett_ground_truth(m, outs, do, obs) for m in models])


def _outcome_sets(g: Admg, x: str, mode: str):
    rest = [v for v in sorted(g.vertices) if v != x]
    if mode == "single":
        return [(v,) for v in rest]
    return [c for k in range(1, len(rest) + 1) for c in itertools.combinations(rest, k)]


@dataclass
class SingleCase:
    graph: str
    x: str
    y: tuple
    thm1: bool
    thm2: bool
    dev_routes: float | None = None
    dev_oracle_thm1: float | None = None
    dev_oracle_thm2: float | None = None
    degenerate: int = 0

    def to_json(self):
        return asdict(self)


def _dev(a, b) -> float:
    return float(np.max(np.abs(np.asarray(a) - np.asarray(b))))


def single_treatment_sweep(cfg: SweepConfig = SweepConfig(), graphs=None) -> list[SingleCase]:
    """Both single-treatment routes on every query of every graph in the family."""
    out = []
    for g in graphs if graphs is not None else small_family(cfg.max_n, cfg.min_n):
        if len(g.vertices) < 2:
            continue
        models = [random_scm(g, 2, cfg.seed_offset + s) for s in range(cfg.seeds)]
        src = BatchSource(models)
        text = format_graph(g)
        for x in sorted(g.vertices):
            for y in _outcome_sets(g, x, cfg.outcome_sets):
                q = query_for(y, [x])
                r1 = ett_single_via_thm1(g, q, share_noise=cfg.share_noise)
                r2 = ett_single_via_thm2(g, q)
                case = SingleCase(text, x, y, r1.identified, r2.identified)
                if r1.identified or r2.identified:
                    res = resolution_for(q)
                    truth = oracle_values(models, q)
                    vals = {}
                    for name, r in (("thm1", r1), ("thm2", r2)):
                        if r.identified:
                            ev = evaluate_with_flags(r.estimand, src, res)
                            vals[name] = ev.value
                            case.degenerate += ev.degenerate
                    if "thm1" in vals:
                        case.dev_oracle_thm1 = _dev(vals["thm1"], truth)
                    if "thm2" in vals:
                        case.dev_oracle_thm2 = _dev(vals["thm2"], truth)
                    if len(vals) == 2:
                        case.dev_routes = _dev(vals["thm1"], vals["thm2"])
                out.append(case)
    return out


@dataclass
class MultiCase:
    graph: str
    xs: tuple
    y: tuple
    thm3_clear: bool
    pstar: bool
    pv: bool
    factors: bool = False
    dropped: tuple = ()
    dev_pstar: float | None = None
    dev_pv: float | None = None
    dev_factors: float | None = None
    degenerate: int = 0

    def to_json(self):
        return asdict(self)


def multi_treatment_sweep(cfg: SweepConfig = SweepConfig(max_n=4, min_n=3), graphs=None,
                          n_treatments: int = 2) -> list[MultiCase]:
    """P_* and P(v) routes on every multi-treatment query, checked against the oracle."""
    out = []
    for g in graphs if graphs is not None else small_family(cfg.max_n, cfg.min_n):
        vs = sorted(g.vertices)
        if len(vs) < n_treatments + 1:
            continue
        models = None
        text = format_graph(g)
        for xs in itertools.combinations(vs, n_treatments):
            rest = [v for v in vs if v not in xs]
            ys = [(v,) for v in rest] if cfg.outcome_sets == "single" else \
                [c for k in range(1, len(rest) + 1) for c in itertools.combinations(rest, k)]
            for y in ys:
                q = query_for(y, xs)
                qm, dropped = rule3_minimize(g, q, warn=False)
                clear = True
                if qm.treatments:
                    clear = thm3_nonid_check(g, qm, partition_treatments(g, qm)) is None
                rs = ett_multi_from_pstar(g, q)
                rv = ett_multi_from_pv(g, q)
                rf = ett_multi_via_factors(g, q)
                case = MultiCase(text, xs, y, clear, rs.identified, rv.identified, rf.identified,
                                 tuple(dropped))
                if rs.identified or rv.identified or rf.identified:
                    if models is None:
                        models = [random_scm(g, 2, cfg.seed_offset + s) for s in range(cfg.seeds)]
                        src = BatchSource(models)
                    res = resolution_for(q)
                    truth = oracle_values(models, q)
                    if rs.identified:
                        ev = evaluate_with_flags(rs.estimand, src, res)
                        case.dev_pstar = _dev(ev.value, truth)
                        case.degenerate += ev.degenerate
                    for attr, r in (("dev_pv", rv), ("dev_factors", rf)):
                        if r.identified:
                            ev = evaluate_with_flags(r.estimand, src, res)
                            setattr(case, attr, _dev(ev.value, truth))
                            case.degenerate += ev.degenerate
                out.append(case)
    return out
