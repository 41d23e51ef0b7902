import numpy as np

from ettid.graph import parse_graph
from ettid.query import EttQuery
from ettid.scm import random_scm
from ettid.search import EffectQuery, SearchConfig, check_pair, counterexample_search

Q = EttQuery.single("Y", "X")


def test_bow_pair_found_and_checked(figs):
    r = counterexample_search(figs["bow"], Q, budget=20_000, seed=0)
    assert r.found and r.evaluations <= 20_000
    dis, gap = check_pair(*r.pair, Q)
    assert dis < 1e-9 and gap >= 1e-3


def test_identifiable_query_gives_nothing(figs):
    r = counterexample_search(figs["fig1a"], Q, budget=3_000, seed=0)
    assert not r.found and r.evaluations >= 3_000


def test_budget_respected(figs):
    r = counterexample_search(figs["fig3a"], Q, budget=500, seed=1)
    assert r.evaluations <= 500


def test_check_pair_same_model():
    g = parse_graph("X -> Y\nX <-> Y")
    m = random_scm(g, 2, 0)
    assert check_pair(m, m, Q) == (0.0, 0.0)


def test_effect_query_bow():
    # P(y | do(x)) on the bow is the textbook non-identifiable effect
    g = parse_graph("X -> Y\nX <-> Y")
    r = counterexample_search(g, EffectQuery({"Y": 1}, {"X": 1}), budget=20_000, seed=0)
    assert r.found


def test_pstar_agreement_on_fig4b(figs):
    q = EttQuery((("Y", "y"),), (("X1", "x1", "x1'"), ("X2", "x2", "x2'")))
    r = counterexample_search(figs["fig4b"], q, budget=100_000, seed=0, cfg=SearchConfig(agree="pstar"))
    assert r.found
    dis, gap = check_pair(*r.pair, q, SearchConfig(agree="pstar"))
    assert dis < 1e-9 and gap >= 1e-3 and np.isfinite(gap)
