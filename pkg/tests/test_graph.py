import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import admgs
from ettid.graph import Admg, GraphError, format_graph, parse_graph
from ettid.scm import conditional_mutual_information, observational, random_scm

FIG1A = parse_graph("X -> Z\nZ -> Y\nX <-> Y")
CHAIN = parse_graph("A -> B\nB -> C")


def test_ancestors():
    assert CHAIN.ancestors({"C"}) == {"A", "B"}
    assert FIG1A.ancestors({"Y"}) == {"X", "Z"}
    assert parse_graph("A -> B\nnode D").ancestors({"D"}) == frozenset()
    assert CHAIN.ancestors_inclusive({"C"}) == {"A", "B", "C"}


def test_family_relations():
    assert CHAIN.descendants({"A"}) == {"B", "C"}
    assert FIG1A.children({"X"}) == {"Z"}
    assert parse_graph("A <-> B").parents({"B"}) == frozenset()


def test_unknown_vertex_rejected():
    with pytest.raises(GraphError):
        CHAIN.ancestors({"Q"})


def test_cut_incoming_drops_bidirected_stubs():
    g = FIG1A.cut_incoming({"X"})
    assert g.directed == {("X", "Z"), ("Z", "Y")}
    assert not g.bidirected
    assert FIG1A.cut_incoming(set()) == FIG1A
    h = CHAIN.cut_incoming({"B"})
    assert h.directed == {("B", "C")} and "A" in h.vertices


def test_cut_outgoing():
    g = FIG1A.cut_outgoing({"X"})
    assert g.directed == {("Z", "Y")} and g.bidirected == {frozenset("XY")}
    bi = parse_graph("A <-> B")
    assert bi.cut_outgoing({"A"}) == bi


def test_induced_subgraph():
    h = FIG1A.induced_subgraph({"X", "Y"})
    assert set(h.vertices) == {"X", "Y"} and not h.directed and h.bidirected == {frozenset("XY")}
    assert FIG1A.induced_subgraph(FIG1A.vertices) == FIG1A
    assert FIG1A.induced_subgraph(set()).vertices == ()


def test_c_components():
    assert FIG1A.c_components() == [frozenset("XY"), frozenset("Z")]
    assert CHAIN.c_components() == [frozenset("A"), frozenset("B"), frozenset("C")]
    assert parse_graph("A <-> B\nB <-> C").c_components() == [frozenset("ABC")]


def test_d_separation_examples():
    assert CHAIN.d_separated({"A"}, {"C"}, {"B"})
    coll = parse_graph("A -> B\nC -> B")
    assert coll.d_separated({"A"}, {"C"}, set())
    assert not coll.d_separated({"A"}, {"C"}, {"B"})
    assert not FIG1A.d_separated({"X"}, {"Y"}, {"Z"})
    with pytest.raises(GraphError):
        CHAIN.d_separated({"A"}, {"A"}, set())


def test_backdoor_paths():
    assert FIG1A.has_backdoor_path("X", {"Y"})
    assert not parse_graph("X -> Z\nZ -> Y").has_backdoor_path("X", {"Y"})
    assert parse_graph("Z -> X\nZ -> Y").has_backdoor_path("X", {"Y"})


def test_bidirected_path_within(figs):
    g = figs["fig4a"]
    assert g.has_bidirected_path_within("X", g.children({"X"}))
    assert not CHAIN.has_bidirected_path_within("A", {"B"})
    assert parse_graph("X -> C\nX <-> M\nM <-> C").has_bidirected_path_within("X", {"C"})


def test_topological_order():
    assert CHAIN.topological_order() == ["A", "B", "C"]
    assert FIG1A.topological_order() == ["X", "Z", "Y"]
    assert parse_graph("node B\nnode A").topological_order() == ["A", "B"]


def test_parse_errors_and_comments():
    g = parse_graph("# comment\nA -> B  # trailing\nnode C\nA<->B\n")
    assert set(g.vertices) == {"A", "B", "C"} and g.bidirected == {frozenset("AB")}
    for bad in ("A -> B\nA -> B", "A -> B\nB -> A", "A -> A", "A => B", "1A -> B"):
        with pytest.raises(GraphError):
            parse_graph(bad)


def test_parse_error_reports_line():
    with pytest.raises(GraphError, match="line 2"):
        parse_graph("A -> B\nA ~ B")


# properties ---------------------------------------------------------------

def _brute_dsep(g: Admg, x, y, z) -> bool:
    """Enumerate every simple path and apply the triple rules."""
    an_z = g.ancestors_inclusive(z) if z else frozenset()
    adj = {}
    for a, b in g.directed:
        adj.setdefault(a, []).append((b, False, True))  # (nbr, head at a, head at nbr)
        adj.setdefault(b, []).append((a, True, False))
    for e in g.bidirected:
        a, b = sorted(e)
        adj.setdefault(a, []).append((b, True, True))
        adj.setdefault(b, []).append((a, True, True))

    def open_from(path, into_last):
        v = path[-1]
        if v in y:
            return True
        for nbr, head_v, head_n in adj.get(v, []):
            if nbr in path:
                continue
            if len(path) > 1:
                collider = into_last and head_v
                if collider and v not in an_z:
                    continue
                if not collider and v in z:
                    continue
            if open_from(path + [nbr], head_n):
                return True
        return False

    return not any(open_from([s], False) for s in x)


@st.composite
def dsep_case(draw):
    g = draw(admgs(min_n=2, max_n=5))
    vs = list(g.vertices)
    roles = draw(st.lists(st.sampled_from("xyzn"), min_size=len(vs), max_size=len(vs)))
    x = {v for v, r in zip(vs, roles) if r == "x"} or {vs[0]}
    y = {v for v, r in zip(vs, roles) if r == "y"} - x or {vs[-1]} - x
    z = {v for v, r in zip(vs, roles) if r == "z"} - x - y
    return g, x, y, z


@settings(max_examples=300, deadline=None)
@given(dsep_case())
def test_d_separation_matches_path_enumeration(case):
    g, x, y, z = case
    if not y:
        return
    assert g.d_separated(x, y, z) == _brute_dsep(g, x, y, z)
    assert g.d_separated(x, y, z) == g.d_separated(y, x, z)


@settings(max_examples=40, deadline=None)
@given(dsep_case(), st.integers(0, 10_000))
def test_d_separation_sound_against_models(case, seed):
    g, x, y, z = case
    if not y or not g.d_separated(x, y, z):
        return
    t = observational(random_scm(g, 2, seed))
    assert conditional_mutual_information(t, sorted(x), sorted(y), sorted(z)) < 1e-9


@settings(max_examples=200, deadline=None)
@given(admgs(), st.data())
def test_c_components_partition(g, data):
    comps = g.c_components()
    flat = [v for c in comps for v in c]
    assert sorted(flat) == sorted(g.vertices)
    for c in comps:
        for a, b in itertools.combinations(sorted(c), 2):
            assert g.has_bidirected_path_within(a, {b})
    for c1, c2 in itertools.combinations(comps, 2):
        assert not g.has_bidirected_path_within(min(c1), c2)
    assert comps == sorted(comps, key=min)


@settings(max_examples=200, deadline=None)
@given(admgs(), st.data())
def test_mutilations_idempotent_and_commute(g, data):
    s = frozenset(data.draw(st.sets(st.sampled_from(g.vertices))))
    assert g.cut_incoming(s).cut_incoming(s) == g.cut_incoming(s)
    assert g.cut_outgoing(s).cut_outgoing(s) == g.cut_outgoing(s)
    rest = [v for v in g.vertices if v not in s]
    keep = frozenset(data.draw(st.sets(st.sampled_from(rest)))) if rest else frozenset()
    keep = keep | s
    assert g.cut_incoming(s).induced_subgraph(keep) == g.induced_subgraph(keep).cut_incoming(s)
    assert g.cut_outgoing(s).induced_subgraph(keep) == g.induced_subgraph(keep).cut_outgoing(s)


@settings(max_examples=200, deadline=None)
@given(admgs())
def test_topological_order_respects_edges(g):
    order = g.topological_order()
    pos = {v: i for i, v in enumerate(order)}
    assert all(pos[a] < pos[b] for a, b in g.directed)
    assert order == g.topological_order()


@settings(max_examples=100, deadline=None)
@given(admgs())
def test_format_parse_roundtrip(g):
    assert parse_graph(format_graph(g)) == g
