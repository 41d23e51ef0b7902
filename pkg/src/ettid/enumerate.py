"""Exhaustive families of small ADMGs, up to relabeling."""

from __future__ import annotations

import itertools
from functools import lru_cache

from .graph import Admg

__all__ = ["all_admgs", "canonical_key", "small_family", "NAMES"]

NAMES = ("A", "B", "C", "D", "E")


def all_admgs(n: int, names=NAMES):
    """Every ADMG on ``n`` labelled vertices whose directed edges follow the
    vertex order. Every DAG is isomorphic to one of these."""
    vs = tuple(names[:n])
    pairs = list(itertools.combinations(range(n), 2))
    for dmask in range(1 << len(pairs)):
        directed = frozenset((vs[i], vs[j]) for k, (i, j) in enumerate(pairs) if dmask >> k & 1)
        for bmask in range(1 << len(pairs)):
            bidirected = frozenset(frozenset((vs[i], vs[j])) for k, (i, j) in enumerate(pairs)
                                   if bmask >> k & 1)
            yield Admg(vs, directed, bidirected)


@lru_cache(maxsize=None)
def _perms(n: int):
    return list(itertools.permutations(range(n)))


def canonical_key(g: Admg, marks: tuple = ()) -> tuple:
    """Smallest relabeled edge list over all vertex permutations.

    ``marks`` is a tuple of vertex sets (e.g. treatment, outcomes) carried along."""
    vs = sorted(g.vertices)
    idx = {v: i for i, v in enumerate(vs)}
    d = [(idx[a], idx[b]) for a, b in g.directed]
    b = [tuple(sorted(idx[v] for v in e)) for e in g.bidirected]
    ms = [[idx[v] for v in m] for m in marks]
    best = None
    for p in _perms(len(vs)):
        key = (tuple(sorted((p[x], p[y]) for x, y in d)),
               tuple(sorted(tuple(sorted((p[x], p[y]))) for x, y in b)),
               tuple(tuple(sorted(p[i] for i in m)) for m in ms))
        if best is None or key < best:
            best = key
    return (len(vs),) + best


def small_family(max_n: int = 4, min_n: int = 1) -> list[Admg]:
    """One representative per isomorphism class of ADMGs with ``min_n..max_n`` vertices."""
    out = []
    for n in range(min_n, max_n + 1):
        seen = set()
        for g in all_admgs(n):
            k = canonical_key(g)
            if k not in seen:
                seen.add(k)
                out.append(g)
    return out
