"""Acyclic directed mixed graphs (latent projections) and the graph primitives
used by the identification routines."""

from __future__ import annotations

import heapq
import re
from collections import deque
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Iterator

__all__ = [
    "Admg",
    "GraphError",
    "parse_graph",
    "format_graph",
]

_IDENT = re.compile(r"[A-Za-z_][A-Za-z0-9_]*\Z")


class GraphError(ValueError):
    """Malformed graph or an operation referring to unknown vertices."""


def _as_set(s) -> frozenset:
    if isinstance(s, str):
        return frozenset([s])
    return frozenset(s)


@dataclass(frozen=True)
class Admg:
    """Immutable ADMG.

    ``directed`` holds ``(tail, head)`` pairs, ``bidirected`` holds two-element
    frozensets. Vertices are kept sorted by name.
    """

    vertices: tuple[str, ...]
    directed: frozenset[tuple[str, str]] = frozenset()
    bidirected: frozenset[frozenset[str]] = frozenset()

    def __post_init__(self):
        vs = tuple(sorted(set(self.vertices)))
        if len(vs) != len(self.vertices):
            raise GraphError("duplicate vertex")
        object.__setattr__(self, "vertices", vs)
        object.__setattr__(self, "directed", frozenset(self.directed))
        object.__setattr__(self, "bidirected", frozenset(frozenset(e) for e in self.bidirected))
        vset = set(vs)
        for v in vs:
            if not _IDENT.match(v):
                raise GraphError(f"invalid vertex name {v!r}")
        for a, b in self.directed:
            if a == b:
                raise GraphError(f"self-loop on {a}")
            if a not in vset or b not in vset:
                raise GraphError(f"edge {a} -> {b} mentions an undeclared vertex")
        for e in self.bidirected:
            if len(e) != 2:
                raise GraphError(f"bidirected self-loop on {set(e)}")
            if not e <= vset:
                raise GraphError(f"edge {' <-> '.join(sorted(e))} mentions an undeclared vertex")
        if len(self.topological_order()) != len(vs):
            raise GraphError("directed part has a cycle")

    @classmethod
    def from_edges(cls, directed=(), bidirected=(), vertices=()) -> "Admg":
        vs = set(vertices)
        for a, b in directed:
            vs.update((a, b))
        for a, b in bidirected:
            vs.update((a, b))
        return cls(tuple(sorted(vs)), frozenset(tuple(e) for e in directed),
                   frozenset(frozenset(e) for e in bidirected))

    # adjacency ---------------------------------------------------------

    @cached_property
    def _pa(self) -> dict[str, frozenset]:
        pa = {v: set() for v in self.vertices}
        for a, b in self.directed:
            pa[b].add(a)
        return {v: frozenset(s) for v, s in pa.items()}

    @cached_property
    def _ch(self) -> dict[str, frozenset]:
        ch = {v: set() for v in self.vertices}
        for a, b in self.directed:
            ch[a].add(b)
        return {v: frozenset(s) for v, s in ch.items()}

    @cached_property
    def _sib(self) -> dict[str, frozenset]:
        sib = {v: set() for v in self.vertices}
        for e in self.bidirected:
            a, b = tuple(e)
            sib[a].add(b)
            sib[b].add(a)
        return {v: frozenset(s) for v, s in sib.items()}

    def _check(self, s: Iterable[str]) -> frozenset:
        s = _as_set(s)
        unknown = s - set(self.vertices)
        if unknown:
            raise GraphError(f"unknown vertices {sorted(unknown)}")
        return s

    def siblings(self, v: str) -> frozenset:
        """Bidirected neighbours of ``v``."""
        self._check([v])
        return self._sib[v]

    def _reach(self, s, step) -> frozenset:
        seen = set()
        todo = list(s)
        while todo:
            v = todo.pop()
            for w in step[v]:
                if w not in seen:
                    seen.add(w)
                    todo.append(w)
        return frozenset(seen)

    def ancestors(self, s) -> frozenset:
        """Vertices with a directed path into ``s``, excluding ``s``."""
        s = self._check(s)
        return self._reach(s, self._pa) - s

    def ancestors_inclusive(self, s) -> frozenset:
        s = self._check(s)
        return self._reach(s, self._pa) | s

    def descendants(self, s) -> frozenset:
        s = self._check(s)
        return self._reach(s, self._ch) - s

    def descendants_inclusive(self, s) -> frozenset:
        s = self._check(s)
        return self._reach(s, self._ch) | s

    def parents(self, s) -> frozenset:
        s = self._check(s)
        return frozenset().union(*(self._pa[v] for v in s)) - s

    def parents_inclusive(self, s) -> frozenset:
        return self.parents(s) | _as_set(s)

    def children(self, s) -> frozenset:
        s = self._check(s)
        return frozenset().union(*(self._ch[v] for v in s)) - s

    def children_inclusive(self, s) -> frozenset:
        return self.children(s) | _as_set(s)

    # mutilations -------------------------------------------------------

    def cut_incoming(self, s) -> "Admg":
        """Intervene on ``s``: drop directed edges into ``s`` and every bidirected
        edge touching ``s``."""
        s = self._check(s)
        if not s:
            return self
        return Admg(self.vertices,
                    frozenset(e for e in self.directed if e[1] not in s),
                    frozenset(e for e in self.bidirected if not (e & s)))

    def cut_outgoing(self, s) -> "Admg":
        s = self._check(s)
        if not s:
            return self
        return Admg(self.vertices,
                    frozenset(e for e in self.directed if e[0] not in s),
                    self.bidirected)

    def cut_incoming_directed(self, s) -> "Admg":
        """Drop only the directed edges into ``s``; bidirected edges stay."""
        s = self._check(s)
        return Admg(self.vertices,
                    frozenset(e for e in self.directed if e[1] not in s),
                    self.bidirected)

    def induced_subgraph(self, s) -> "Admg":
        s = self._check(s)
        return Admg(tuple(sorted(s)),
                    frozenset(e for e in self.directed if e[0] in s and e[1] in s),
                    frozenset(e for e in self.bidirected if e <= s))

    def add_vertex(self, v: str, parents=(), siblings=()) -> "Admg":
        if v in self.vertices:
            raise GraphError(f"vertex {v} already present")
        return Admg(self.vertices + (v,),
                    self.directed | {(p, v) for p in parents},
                    self.bidirected | {frozenset((v, b)) for b in siblings})

    def relabel(self, mapping: dict[str, str]) -> "Admg":
        m = lambda v: mapping.get(v, v)  # noqa: E731
        return Admg(tuple(m(v) for v in self.vertices),
                    frozenset((m(a), m(b)) for a, b in self.directed),
                    frozenset(frozenset(m(v) for v in e) for e in self.bidirected))

    # structure ---------------------------------------------------------

    def c_components(self) -> list[frozenset]:
        """Partition into maximal bidirected-connected sets, sorted by smallest member."""
        seen: set = set()
        out = []
        for v in self.vertices:
            if v in seen:
                continue
            comp = self._reach([v], self._sib) | {v}
            seen |= comp
            out.append(frozenset(comp))
        return sorted(out, key=min)

    def c_component_of(self, v: str) -> frozenset:
        self._check([v])
        return self._reach([v], self._sib) | {v}

    def bidirected_path(self, a: str, b) -> list[str] | None:
        """Shortest bidirected-only path from ``a`` to a member of ``b`` (or None)."""
        self._check([a])
        targets = _as_set(b)
        prev = {a: None}
        q = deque([a])
        while q:
            v = q.popleft()
            for w in sorted(self._sib[v]):
                if w in prev:
                    continue
                prev[w] = v
                if w in targets:
                    path = [w]
                    while prev[path[-1]] is not None:
                        path.append(prev[path[-1]])
                    return path[::-1]
                q.append(w)
        return None

    def directed_path(self, a: str, b) -> list[str] | None:
        """Shortest directed path from ``a`` to a member of ``b``; ``[a]`` if ``a`` is in ``b``."""
        self._check([a])
        targets = _as_set(b)
        prev = {a: None}
        q = deque([a])
        while q:
            v = q.popleft()
            if v in targets:
                path = [v]
                while prev[path[-1]] is not None:
                    path.append(prev[path[-1]])
                return path[::-1]
            for w in sorted(self._ch[v]):
                if w not in prev:
                    prev[w] = v
                    q.append(w)
        return None

    def open_path(self, x, y, z=()) -> list[str] | None:
        """Some d-connecting path from ``x`` to ``y`` given ``z``, found by brute force.

        Exponential in the worst case; meant for small graphs and error messages."""
        x, y, z = self._check(x), self._check(y), self._check(z)
        an_z = self.ancestors_inclusive(z) if z else frozenset()

        def edges(v):
            # (neighbour, arrowhead at v, arrowhead at neighbour)
            for w in sorted(self._pa[v]):
                yield w, True, False
            for w in sorted(self._ch[v]):
                yield w, False, True
            for w in sorted(self._sib[v]):
                yield w, True, True

        def dfs(path, into_last):
            v = path[-1]
            for w, head_v, head_w in edges(v):
                if w in path:
                    continue
                if len(path) > 1:
                    collider = into_last and head_v
                    if collider and v not in an_z:
                        continue
                    if not collider and v in z:
                        continue
                if w in y:
                    return path + [w]
                found = dfs(path + [w], head_w)
                if found:
                    return found
            return None

        for a in sorted(x):
            found = dfs([a], False)
            if found:
                return found
        return None

    def has_bidirected_path_within(self, a: str, b) -> bool:
        return self.bidirected_path(a, b) is not None

    def topological_order(self) -> list[str]:
        """Lexicographically smallest topological order."""
        pa = {v: set() for v in self.vertices}
        ch = {v: [] for v in self.vertices}
        for x, y in self.directed:
            pa[y].add(x)
            ch[x].append(y)
        indeg = {v: len(pa[v]) for v in self.vertices}
        heap = [v for v in self.vertices if indeg[v] == 0]
        heapq.heapify(heap)
        order = []
        while heap:
            v = heapq.heappop(heap)
            order.append(v)
            for w in ch[v]:
                indeg[w] -= 1
                if indeg[w] == 0:
                    heapq.heappush(heap, w)
        return order

    # separation --------------------------------------------------------

    def _edges_at(self, v: str) -> Iterator[tuple[str, bool, bool]]:
        """Yield ``(neighbour, head_at_v, head_at_neighbour)`` for each edge at ``v``."""
        for w in self._ch[v]:
            yield w, False, True
        for w in self._pa[v]:
            yield w, True, False
        for w in self._sib[v]:
            yield w, True, True

    def _connected_from(self, x: frozenset, z: frozenset, first_into: bool = False) -> frozenset:
        """Vertices reachable from ``x`` by a path that is open given ``z``.

        With ``first_into`` only paths whose first edge has an arrowhead at the
        start vertex are followed.
        """
        an_z = self._reach(z, self._pa) | z
        # state: (vertex, arrived_with_head)
        seen = set()
        todo = []
        reached = set()
        for v in x:
            for w, head_v, head_w in self._edges_at(v):
                if first_into and not head_v:
                    continue
                st = (w, head_w)
                if st not in seen:
                    seen.add(st)
                    todo.append(st)
        while todo:
            v, head_in = todo.pop()
            reached.add(v)
            for w, head_v, head_w in self._edges_at(v):
                collider = head_in and head_v
                if collider:
                    if v not in an_z:
                        continue
                elif v in z:
                    continue
                st = (w, head_w)
                if st not in seen:
                    seen.add(st)
                    todo.append(st)
        return frozenset(reached)

    def d_separated(self, x, y, z=()) -> bool:
        x, y, z = self._check(x), self._check(y), self._check(z)
        if (x & y) or (x & z) or (y & z):
            raise GraphError("d_separated needs pairwise disjoint sets")
        return not (self._connected_from(x, z) & y)

    def has_backdoor_path(self, x: str, y) -> bool:
        """Is there an open (given nothing) path from ``x`` into ``y`` starting with an
        edge into ``x``?"""
        y = self._check(y)
        self._check([x])
        if x in y:
            raise GraphError("treatment listed among outcomes")
        return bool(self._connected_from(frozenset([x]), frozenset(), first_into=True) & y)

    def has_directed_path(self, a: str, b) -> bool:
        return bool(self.descendants([a]) & _as_set(b))

    def __str__(self) -> str:
        return format_graph(self)


def parse_graph(text: str) -> Admg:
    """Parse the line-oriented graph format (``A -> B``, ``A <-> B``, ``node A``)."""
    vertices: list[str] = []
    directed: set = set()
    bidirected: set = set()

    def ident(tok, lineno):
        if not _IDENT.match(tok):
            raise GraphError(f"line {lineno}: invalid identifier {tok!r}")
        if tok not in vertices:
            vertices.append(tok)
        return tok

    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) == 2 and parts[0] == "node":
            ident(parts[1], lineno)
            continue
        m = re.fullmatch(r"([^\s<>-]+)\s*(<->|->)\s*([^\s<>-]+)", line)
        if not m:
            raise GraphError(f"line {lineno}: cannot parse {raw.strip()!r}")
        a, arrow, b = ident(m.group(1), lineno), m.group(2), ident(m.group(3), lineno)
        if a == b:
            raise GraphError(f"line {lineno}: self-loop on {a}")
        if arrow == "->":
            if (a, b) in directed:
                raise GraphError(f"line {lineno}: duplicate edge {a} -> {b}")
            directed.add((a, b))
        else:
            e = frozenset((a, b))
            if e in bidirected:
                raise GraphError(f"line {lineno}: duplicate edge {a} <-> {b}")
            bidirected.add(e)
    return Admg(tuple(vertices), frozenset(directed), frozenset(bidirected))


def format_graph(g: Admg) -> str:
    lines = [f"{a} -> {b}" for a, b in sorted(g.directed)]
    lines += [" <-> ".join(sorted(e)) for e in sorted(g.bidirected, key=sorted)]
    touched = {v for e in g.directed for v in e} | {v for e in g.bidirected for v in e}
    lines += [f"node {v}" for v in g.vertices if v not in touched]
    return "\n".join(lines) + "\n"
