import pytest
from hypothesis import given

from conftest import instances
from streliability.graph import preprocess
from streliability.io import (
    ParseError,
    parse_bipartite,
    parse_instance,
    parse_nfa,
    parse_report,
    parse_vertex_failure,
    render_bipartite,
    render_instance,
    render_nfa,
    render_raw,
    render_report,
    render_vertex_failure,
)
from streliability.reductions import (
    BipartiteGraph,
    accepted_strings,
    bis_to_unreliability,
    dag_to_nfa,
)

DIAMOND = """\
# the diamond
dag 4 4
source s
sink t
s a 0.5
s b 0.5
a t 0.5
b t 0.5
"""


def test_parse_diamond():
    raw = parse_instance(DIAMOND)
    assert raw.s == "s" and raw.t == "t"
    assert raw.edges[0] == ("s", "a", 0.5) and len(raw.edges) == 4
    assert render_raw(raw) == DIAMOND.split("\n", 1)[1]


@pytest.mark.parametrize(
    "text, fragment",
    [
        ("source s\nsink t\n", "missing 'dag"),
        ("dag 2 1\nsource s\ns t 0.5\n", "missing source or sink"),
        ("dag 2 1\nsource s\nsink t\ns t 1.5\n", "outside [0, 1]"),
        ("dag 2 1\nsource s\nsink t\ns t x\n", "expected a probability"),
        ("dag 2 2\nsource s\nsink t\ns t 0.5\n", "declares 2 edges"),
        ("dag 3 1\nsource s\nsink t\ns t 0.5\n", "declares 3 vertices"),
        ("dag 2 1\nsource s\nsink t\ns s 0.5\n", "self-loop"),
        ("s t 0.5\ndag 2 1\n", "before the 'dag' header"),
        ("dag 2 1\nsource s\nsource x\n", "duplicate source"),
        ("dag -1 1\n", "negative count"),
        ("dag 2 1\nsource s\nsink s\n", "must differ"),
        ("dag 2 1\nsource s\nsink t\ns t\n", "expected '<tail> <head> <q>'"),
    ],
)
def test_parse_errors(text, fragment):
    with pytest.raises(ParseError) as info:
        parse_instance(text)
    assert fragment in str(info.value)


def test_parse_error_line_number():
    with pytest.raises(ParseError) as info:
        parse_instance("dag 2 1\nsource s\nsink t\n\ns t nope\n")
    assert info.value.line == 5 and str(info.value).startswith("line 5:")


@given(instances(max_m=8))
def test_instance_round_trip(inst):
    raw = parse_instance(render_instance(inst, comment="round\ntrip"))
    assert preprocess(raw.edges, raw.s, raw.t) == inst


def test_vertex_failure_round_trip():
    vf = bis_to_unreliability(BipartiteGraph(("x", "y"), ("z",), (("x", "z"), ("z", "y"))))
    text = render_vertex_failure(vf, comment="from a bipartite graph")
    back = parse_vertex_failure(text)
    assert back == vf and back.fail == vf.fail
    with pytest.raises(ParseError):
        parse_vertex_failure(text.replace("vertex x 0.5", "vertex x 2"))


def test_bipartite_round_trip():
    g = BipartiteGraph(("a", "b"), ("c", "d"), (("a", "c"), ("b", "c"), ("b", "d")))
    assert parse_bipartite(render_bipartite(g)) == g
    with pytest.raises(ParseError):
        parse_bipartite("bipartite 1 1 1\nleft a\nright b\na c\n")


def test_nfa_round_trip(diamond):
    nfa = dag_to_nfa(diamond)
    back = parse_nfa(render_nfa(nfa, comment="diamond"))
    assert back.state_count == nfa.state_count and back.length == nfa.length
    assert accepted_strings(back) == accepted_strings(nfa)
    with pytest.raises(ParseError):
        parse_nfa("nfa 2 ab 3\nstart x\naccept y\nfailure y\n")
    with pytest.raises(ParseError):
        parse_nfa("start x\n")


def test_report_round_trip():
    text = render_report(
        {"estimate": 0.4375, "crashed": False, "crash_kind": None, "seeds": [1, 2]},
        {"metadata": {"wall_time": 0.5}},
    )
    assert text.splitlines() == [
        "estimate = 0.4375", "crashed = false", "crash_kind = none", "seeds = 1,2",
        "[metadata]", "wall_time = 0.5",
    ]
    assert parse_report(text) == {
        "estimate": "0.4375", "crashed": "false", "crash_kind": "none", "seeds": "1,2",
        "metadata.wall_time": "0.5",
    }
    with pytest.raises(ParseError):
        parse_report("no separator here\n")
