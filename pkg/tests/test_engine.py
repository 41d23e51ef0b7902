from ettid.engine import identify_ett
from ettid.estimand import render_text
from ettid.graph import parse_graph
from ettid.query import EttQuery, parse_query

Q5 = parse_query("ETT[ Y=y | do(X1=x1), do(X2=x2) ; X1=x1', X2=x2' ]")


def test_consistency_shortcut(figs):
    rep = identify_ett(figs["bow"], EttQuery.single("Y", "X", x_tok="x", x_obs="x"))
    assert rep.identified and rep.route == "consistency"
    assert render_text(rep.estimand) == "P(y|x)"


def test_single_alternates(figs):
    rep = identify_ett(figs["fig1a"], EttQuery.single("Y", "X"))
    assert rep.route == "thm2" and [a.route for a in rep.alternates] == ["thm1"]
    rep = identify_ett(parse_graph("Z -> X\nZ -> Y\nX -> Y"), EttQuery.single("Y", "X"))
    assert [a.route for a in rep.alternates] == ["thm1", "backdoor"]


def test_non_ancestor_treatment_dropped():
    rep = identify_ett(parse_graph("Y -> X"), EttQuery.single("Y", "X"))
    assert rep.identified and rep.dropped == ("X",)


def test_multi_dispatch(figs):
    rep = identify_ett(figs["fig5a"], Q5)
    assert rep.route == "thm6" and rep.source == "observational"
    rep = identify_ett(figs["fig5a_bi"], Q5)
    assert rep.identified and rep.route == "thm5" and rep.source == "observational"
    assert rep.notes[0].startswith("thm6 refuses")
    assert [a.source for a in rep.alternates] == ["experimental"]
    rep = identify_ett(figs["fig4b"], Q5)
    assert not rep.identified and rep.route == "thm3"


def test_rule3_note():
    g = parse_graph("A -> Y\nB -> C")
    q = parse_query("ETT[ Y=y | do(A=a), do(B=b) ; A=a', B=b' ]")
    rep = identify_ett(g, q)
    assert rep.identified and rep.dropped == ("B",)
    assert any("rule 3" in n for n in rep.notes)
    assert rep.to_json()["dropped"] == ["B"]
