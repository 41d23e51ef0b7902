import numpy as np
import pytest

from ettid.estimand import Binding, Product, Quotient, Sum, is_observational, prob, render_text
from ettid.evaluate import evaluate
from ettid.graph import parse_graph
from ettid.identify import (Hedge, QueryError, identify_conditional_effect, identify_effect,
                            result_to_json)
from ettid.scm import BatchSource, effect_ground_truth, random_scm
from ettid.single import augment_with_witness

SEEDS = 30


def _models(g, n=SEEDS, **kw):
    return [random_scm(g, 2, s, **kw) for s in range(n)]


def _check_effect(g, est, y, x, given=None, **values):
    models = _models(g)
    res = {(v, v.lower()): k for v, k in values.items()}
    got = evaluate(est, BatchSource(models), res)
    outs = {v: values[v] for v in y}
    do = {v: values[v] for v in x}
    cond = {v: values[v] for v in (given or ())}
    truth = np.array([effect_ground_truth(m, outs, do, cond) for m in models])
    return float(np.max(np.abs(got - truth)))


def test_bow_effect_has_hedge(figs):
    r = identify_effect(figs["bow"], {"Y"}, {"X"})
    assert not r.identified
    assert r.witness == Hedge(frozenset("XY"), frozenset("Y"), frozenset("Y"))
    assert result_to_json(r)["witness"]["kind"] == "hedge"


def test_no_confounding_gives_conditional():
    r = identify_effect(parse_graph("X -> Y"), {"Y"}, {"X"})
    assert render_text(r.estimand) == "P(y|x)"


def test_fig2_effect_identified_conditional_effect_not(figs):
    g = figs["fig2"]
    r = identify_effect(g, {"Y"}, {"X"})
    assert r.identified and is_observational(r.estimand)
    for x in (0, 1):
        assert _check_effect(g, r.estimand, {"Y"}, {"X"}, Y=1, X=x) < 1e-12
    assert not identify_conditional_effect(g, {"Y"}, {"W"}, {"X"}).identified


def test_fig3a_effect_matches_ratio_form(figs):
    g = figs["fig3a"]
    r = identify_effect(g, {"Y"}, {"X"})
    assert r.identified
    s = (Binding("S", "s"),)
    for z in (0, 1):
        ratio = Quotient(Sum(s, Product((prob(["Y", "X"], ["Z", "S"]), prob(["S"])))),
                           Sum(s, Product((prob(["X"], ["Z", "S"]), prob(["S"])))))
        src = BatchSource(_models(g))
        res = {("Y", "y"): 1, ("X", "x"): 0, ("Z", "z"): z}
        assert np.max(np.abs(evaluate(ratio, src, res) - evaluate(r.estimand, src, res))) < 1e-12
    assert _check_effect(g, r.estimand, {"Y"}, {"X"}, Y=1, X=0) < 1e-12


def test_fig1b_conditional_effect(figs):
    gp, w = augment_with_witness(figs["fig1a"], "X")
    r = identify_conditional_effect(gp, {"Y"}, {w}, {"X"})
    assert r.identified
    expected = Sum((Binding("Z", "z"),), Product((
        prob(["Z"], ["X"]),
        Sum((Binding("X", "x~"),), Quotient(Product((prob(["Y"], ["Z", w, ("X", "x~")]), prob([w, ("X", "x~")]))),
                                            prob([w]))))))
    src = BatchSource(_models(gp))
    for wv in (0, 1):
        res = {("Y", "y"): 1, ("X", "x"): 1, (w, w.lower()): wv}
        assert np.max(np.abs(evaluate(expected, src, res) - evaluate(r.estimand, src, res))) < 1e-12
    assert _check_effect(gp, r.estimand, {"Y"}, {"X"}, given={w}, Y=1, X=1, **{w: 0}) < 1e-12


def test_degenerate_observational_conditional():
    g = parse_graph("A -> B")
    r = identify_conditional_effect(g, {"B"}, {"A"}, set())
    assert r.identified
    assert _check_effect(g, r.estimand, {"B"}, set(), given={"A"}, A=0, B=1) < 1e-12


def test_input_errors(figs):
    with pytest.raises(QueryError):
        identify_effect(figs["fig1a"], {"X"}, {"X"})
    with pytest.raises(QueryError):
        identify_effect(figs["fig1a"], {"Q"}, {"X"})
    with pytest.raises(QueryError):
        identify_conditional_effect(figs["fig1a"], set(), {"Z"}, {"X"})


def test_augmented_graph(figs):
    gp, w = augment_with_witness(figs["fig1a"], "X", share_noise=False)
    assert w == "W_X" and gp.children({w}) == frozenset()
    assert gp.siblings(w) == {"Y"} and gp.parents({w}) == frozenset()
    g3, w3 = augment_with_witness(figs["fig3a"], "X", share_noise=False)
    assert g3.parents({w3}) == {"Z"} and g3.siblings(w3) == {"S"}
    iso, wi = augment_with_witness(parse_graph("node X\nnode W_X"), "X", share_noise=False)
    assert wi == "W_X_" and not iso.directed and not iso.bidirected
    shared, _ = augment_with_witness(figs["fig1a"], "X")
    assert shared.siblings("W_X") == {"X", "Y"}
