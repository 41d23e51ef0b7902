"""Batch front end: ``ettid --graph G --query Q [--mode identify|verify|counterexample]``."""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import dataclass, field

import numpy as np

from .engine import EttReport, identify_ett
from .estimand import from_json, render_text
from .evaluate import evaluate
from .graph import Admg, GraphError, parse_graph
from .identify import QueryError
from .query import EttQuery, parse_query
from .scm import DEFAULT_CAP, BatchSource, DegenerateError, ResourceError, ett_ground_truth, random_scm
from .search import SearchConfig, counterexample_search

__all__ = ["RunConfig", "run", "emit_report", "main", "token_indices", "EXIT"]

EXIT = {"ok": 0, "not-identifiable": 1, "deviation": 2, "input": 3, "resource": 4}
MODES = ("identify", "verify", "counterexample")


class InputError(ValueError):
    pass


@dataclass
class RunConfig:
    graph_path: str
    query: str
    mode: str = "identify"
    output: str = "text"
    seeds: int = 20
    tolerance: float = 1e-9
    domains: dict = field(default_factory=dict)
    cap: int = DEFAULT_CAP
    budget: int = 100_000
    agree: str = "pv"
    seed: int = 0

    def __post_init__(self):
        if self.mode not in MODES:
            raise InputError(f"unknown mode {self.mode!r}")
        if self.output not in ("text", "json"):
            raise InputError(f"unknown output format {self.output!r}")
        if not self.tolerance > 0:
            raise InputError("tolerance must be positive")
        if self.mode == "verify" and self.seeds < 1:
            raise InputError("verify mode needs at least one seed")
        if self.agree not in ("pv", "pstar"):
            raise InputError("--agree must be pv or pstar")


def parse_domains(s: str | None) -> dict:
    out = {}
    if not s:
        return out
    for part in s.split(","):
        name, _, k = part.partition("=")
        try:
            out[name.strip()] = int(k)
        except ValueError:
            raise InputError(f"bad domain item {part!r} (expected VAR=K)") from None
        if out[name.strip()] < 2:
            raise InputError(f"domain of {name.strip()} must have at least 2 values")
    return out


def token_indices(q: EttQuery) -> dict:
    """Each variable's distinct tokens, sorted, mapped to 0, 1, ..."""
    per: dict = {}
    for v, t in q.outcomes:
        per.setdefault(v, set()).add(t)
    for v, d, o in q.treatments:
        per.setdefault(v, set()).update((d, o))
    return {(v, t): i for v, ts in per.items() for i, t in enumerate(sorted(ts))}


def _domains(g: Admg, cfg: RunConfig, idx: dict) -> dict:
    unknown = set(cfg.domains) - set(g.vertices)
    if unknown:
        raise InputError(f"--domains names unknown variables {sorted(unknown)}")
    doms = {v: cfg.domains.get(v, 2) for v in g.vertices}
    for (v, _), i in idx.items():
        if i >= doms[v]:
            raise InputError(f"{v} has more distinct tokens than its domain size {doms[v]}")
    return doms


def _verify(g: Admg, q: EttQuery, rep: EttReport, cfg: RunConfig) -> dict:
    idx = token_indices(q)
    doms = _domains(g, cfg, idx)
    models = [random_scm(g, doms, s) for s in range(cfg.seed, cfg.seed + cfg.seeds)]
    outs = {v: idx[(v, t)] for v, t in q.outcomes}
    do = {v: idx[(v, d)] for v, d, _ in q.treatments}
    obs = {v: idx[(v, o)] for v, _, o in q.treatments}
    truth = np.array([ett_ground_truth(m, outs, do, obs, cfg.cap) for m in models])
    src = BatchSource(models, cfg.cap)

    def dev(e):
        return float(np.max(np.abs(np.asarray(evaluate(e, src, idx)) - truth)))

    return {"seeds": cfg.seeds, "tolerance": cfg.tolerance, "max_deviation": dev(rep.estimand),
            "alternates": [{"route": a.route, "source": a.source, "max_deviation": dev(a.estimand)}
                           for a in rep.alternates]}


def _counterexample(g: Admg, q: EttQuery, cfg: RunConfig) -> dict:
    idx = token_indices(q)
    doms = _domains(g, cfg, idx)
    pattern = {(idx[(v, t)],) for v, t in q.outcomes}
    tr = {(idx[(v, d)], idx[(v, o)]) for v, d, o in q.treatments}
    if len(pattern) != 1 or len(tr) != 1:
        raise InputError("counterexample mode needs the same value pattern for every outcome and treatment")
    (y,), (x, xo) = pattern.pop(), tr.pop()
    if x == xo:
        raise InputError("counterexample mode needs distinct do and observed values")
    scfg = SearchConfig(agree=cfg.agree, values=(y, x, xo), domains=doms)
    r = counterexample_search(g, q, budget=cfg.budget, seed=cfg.seed, cfg=scfg)
    return {"agree": cfg.agree, "budget": cfg.budget, "found": r.found, "evaluations": r.evaluations,
            "restarts": r.restarts, "agreement": r.agreement, "gap": r.gap}


def run(cfg: RunConfig) -> tuple[int, dict]:
    """Exit status and the report document."""
    try:
        with open(cfg.graph_path) as fh:
            g = parse_graph(fh.read())
        text = cfg.query
        if os.path.isfile(text):
            with open(text) as fh:
                text = fh.read().strip()
        q = parse_query(text, g)
    except (OSError, GraphError, QueryError) as exc:
        return EXIT["input"], {"error": f"{type(exc).__name__}: {exc}"}
    try:
        rep = identify_ett(g, q)
        doc = rep.to_json()
        doc["verification"] = None
        status = EXIT["ok"] if rep.identified else EXIT["not-identifiable"]
        if cfg.mode == "verify" and rep.identified:
            doc["verification"] = _verify(g, q, rep, cfg)
            if doc["verification"]["max_deviation"] > cfg.tolerance:
                status = EXIT["deviation"]
        elif cfg.mode == "counterexample":
            doc["counterexample"] = _counterexample(g, q, cfg)
            status = EXIT["not-identifiable"] if doc["counterexample"]["found"] else EXIT["ok"]
    except (InputError, QueryError) as exc:
        return EXIT["input"], {"error": f"{type(exc).__name__}: {exc}"}
    except (ResourceError, DegenerateError, MemoryError) as exc:
        return EXIT["resource"], {"error": f"{type(exc).__name__}: {exc}"}
    return status, doc


def _text(doc: dict) -> str:
    if "error" in doc:
        return f"error: {doc['error']}"
    lines = [f"query:    {doc['query']}", f"verdict:  {doc['verdict']}"]
    route = doc["route"] + (f" ({doc['source']})" if doc["source"] else "")
    lines.append(f"route:    {route}")
    if doc["estimand_text"] is not None:
        lines.append(f"estimand: {doc['estimand_text']}")
    for a in doc["alternates"]:
        lines.append(f"alternate {a['route']} ({a['source']}): {render_text(from_json(a['estimand']))}")
    if doc["witness"] is not None:
        lines.append("witness:  " + json.dumps(doc["witness"], sort_keys=True))
    for n in doc["notes"]:
        lines.append(f"note:     {n}")
    v = doc.get("verification")
    if v:
        lines.append(f"verification: seeds={v['seeds']} max_deviation={v['max_deviation']:.3g} "
                     f"tolerance={v['tolerance']:g}")
        for a in v["alternates"]:
            lines.append(f"  alternate {a['route']}: max_deviation={a['max_deviation']:.3g}")
    c = doc.get("counterexample")
    if c:
        if c["found"]:
            lines.append(f"counterexample: found after {c['evaluations']} evaluations "
                         f"(agreement {c['agreement']:.2g}, gap {c['gap']:.3g}, agree={c['agree']})")
        else:
            lines.append(f"counterexample: none within {c['budget']} evaluations (inconclusive)")
    return "\n".join(lines)


def emit_report(doc: dict, output: str = "text", stream=None) -> None:
    stream = stream or sys.stdout
    if output == "json":
        stream.write(json.dumps(doc, indent=2, sort_keys=True) + "\n")
    else:
        stream.write(_text(doc) + "\n")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ettid", description="Identify effects of treatment on the treated.")
    p.add_argument("--graph", required=True, help="graph file (one edge per line: A -> B, A <-> B)")
    p.add_argument("--query", required=True, help="query string, e.g. \"ETT[ Y=y | do(X=x) ; X=x' ]\", or a file holding one")
    p.add_argument("--mode", choices=MODES, default="identify")
    p.add_argument("--output", choices=("text", "json"), default="text")
    p.add_argument("--seeds", type=int, default=20)
    p.add_argument("--seed", type=int, default=0, help="first seed")
    p.add_argument("--tolerance", type=float, default=1e-9)
    p.add_argument("--domains", default=None, help="VAR=K,... (default: all binary)")
    p.add_argument("--budget", type=int, default=100_000)
    p.add_argument("--agree", choices=("pv", "pstar"), default="pv",
                   help="counterexample mode: distributions the two models must share")
    p.add_argument("--cap", type=int, default=DEFAULT_CAP, help="exogenous enumeration cap")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = RunConfig(args.graph, args.query, args.mode, args.output, args.seeds, args.tolerance,
                        parse_domains(args.domains), args.cap, args.budget, args.agree, args.seed)
    except InputError as exc:
        emit_report({"error": f"InputError: {exc}"}, args.output)
        return EXIT["input"]
    status, doc = run(cfg)
    emit_report(doc, cfg.output)
    return status


if __name__ == "__main__":
    sys.exit(main())
