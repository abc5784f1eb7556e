from __future__ import annotations

import pytest
from hypothesis import HealthCheck, assume, settings
from hypothesis import strategies as st

from streliability.graph import Instance, preprocess

settings.register_profile(
    "default", max_examples=60, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")


def build(edges, s="s", t="t", **kw):
    inst = preprocess(edges, s, t, **kw)
    assert isinstance(inst, Instance)
    return inst


@pytest.fixture
def diamond():
    return build([("s", "a", 0.5), ("s", "b", 0.5), ("a", "t", 0.5), ("b", "t", 0.5)])


@pytest.fixture
def series():
    return build([("s", "a", 0.5), ("a", "t", 0.5)])


@pytest.fixture
def single_edge():
    return build([("s", "t", 0.3)])


def vid(inst, label):
    return inst.labels.index(label)


def eid(inst, tail, head):
    return inst.edges.index((vid(inst, tail), vid(inst, head)))


@st.composite
def raw_dags(draw, max_n=6, max_m=8, q=None):
    """Raw edge lists over ``s, v1.., t`` oriented along the vertex order."""
    n = draw(st.integers(2, max_n))
    names = ["s"] + [f"v{i}" for i in range(1, n - 1)] + ["t"]
    pairs = [(i, j) for i in range(n) for j in range(i + 1, n)]
    chosen = draw(st.lists(st.sampled_from(pairs), unique=True, min_size=1, max_size=min(max_m, len(pairs))))
    qs = st.sampled_from([0.0, 0.1, 0.25, 0.5, 0.75, 0.9]) if q is None else st.just(q)
    return [(names[i], names[j], draw(qs)) for i, j in sorted(chosen)]


@st.composite
def instances(draw, max_n=6, max_m=8, q=None):
    edges = draw(raw_dags(max_n, max_m, q))
    inst = preprocess(edges, "s", "t")
    assume(isinstance(inst, Instance))
    return inst


# one line per acceptance criterion, printed after the test run
ACCEPTANCE_LINES: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for k in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[k])
