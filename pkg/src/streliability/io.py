"""Plain-text formats: instances, vertex-failure DAGs, bipartite graphs, NFAs
and flat key-value reports.

All formats are line based.  Blank lines and lines starting with ``#`` are
ignored; tokens are separated by whitespace, so ids may not contain spaces.
"""

from __future__ import annotations

import math
from typing import Mapping

from .generators import RawGraph
from .graph import Instance
from .reductions import BipartiteGraph, Nfa, VertexFailureInstance


class ParseError(ValueError):
    def __init__(self, message: str, line: int | None = None):
        super().__init__(message if line is None else f"line {line}: {message}")
        self.line = line


def _lines(text: str):
    for no, raw in enumerate(text.splitlines(), 1):
        s = raw.strip()
        if s and not s.startswith("#"):
            yield no, s.split()


def _count(tok: str, no: int) -> int:
    try:
        value = int(tok)
    except ValueError:
        raise ParseError(f"expected a count, got {tok!r}", no) from None
    if value < 0:
        raise ParseError(f"negative count {value}", no)
    return value


def _prob(tok: str, no: int) -> float:
    try:
        value = float(tok)
    except ValueError:
        raise ParseError(f"expected a probability, got {tok!r}", no) from None
    if math.isnan(value) or not (0.0 <= value <= 1.0):
        raise ParseError(f"probability {tok} outside [0, 1]", no)
    return value


def _fmt(q: float) -> str:
    return repr(float(q))


# ---------------------------------------------------------------- instances


def parse_instance(text: str) -> RawGraph:
    """Parse ``dag <n> <m>`` / ``source`` / ``sink`` / edge lines."""
    header = s = t = None
    edges: list[tuple[str, str, float]] = []
    for no, tok in _lines(text):
        key = tok[0]
        if key == "dag":
            if header is not None or len(tok) != 3:
                raise ParseError("expected a single 'dag <n> <m>' header", no)
            header = (_count(tok[1], no), _count(tok[2], no))
        elif key in ("source", "sink"):
            if len(tok) != 2:
                raise ParseError(f"expected '{key} <id>'", no)
            if (s if key == "source" else t) is not None:
                raise ParseError(f"duplicate {key} line", no)
            if key == "source":
                s = tok[1]
            else:
                t = tok[1]
        else:
            if header is None:
                raise ParseError("edge before the 'dag' header", no)
            if len(tok) != 3:
                raise ParseError("expected '<tail> <head> <q>'", no)
            if tok[0] == tok[1]:
                raise ParseError(f"self-loop at {tok[0]}", no)
            edges.append((tok[0], tok[1], _prob(tok[2], no)))
    if header is None:
        raise ParseError("missing 'dag <n> <m>' header")
    if s is None or t is None:
        raise ParseError("missing source or sink line")
    if s == t:
        raise ParseError("source and sink must differ")
    n, m = header
    ids = {s, t} | {a for a, _, _ in edges} | {b for _, b, _ in edges}
    if len(edges) != m:
        raise ParseError(f"header declares {m} edges, found {len(edges)}")
    if len(ids) != n:
        raise ParseError(f"header declares {n} vertices, found {len(ids)}")
    return RawGraph(edges, s, t)


def render_raw(graph: RawGraph, comment: str | None = None) -> str:
    ids = {graph.s, graph.t} | {a for a, _, _ in graph.edges} | {b for _, b, _ in graph.edges}
    out = [f"# {line}" for line in (comment or "").splitlines()]
    out += [f"dag {len(ids)} {len(graph.edges)}", f"source {graph.s}", f"sink {graph.t}"]
    out += [f"{a} {b} {_fmt(q)}" for a, b, q in graph.edges]
    return "\n".join(out) + "\n"


def instance_to_raw(inst: Instance) -> RawGraph:
    return RawGraph(inst.labeled_edges(), inst.labels[inst.s], inst.labels[inst.t])


def render_instance(inst: Instance, comment: str | None = None) -> str:
    return render_raw(instance_to_raw(inst), comment)


# ---------------------------------------------------------------- vertex failures


def parse_vertex_failure(text: str) -> VertexFailureInstance:
    """``vdag <n> <m>`` / ``source`` / ``sink`` / ``vertex <id> <p>`` / ``<tail> <head>``."""
    header = s = t = None
    fail: dict[str, float] = {}
    edges: list[tuple[str, str]] = []
    for no, tok in _lines(text):
        key = tok[0]
        if key == "vdag" and len(tok) == 3 and header is None:
            header = (_count(tok[1], no), _count(tok[2], no))
        elif key == "source" and len(tok) == 2:
            s = tok[1]
        elif key == "sink" and len(tok) == 2:
            t = tok[1]
        elif key == "vertex" and len(tok) == 3:
            if tok[1] in fail:
                raise ParseError(f"vertex {tok[1]} listed twice", no)
            fail[tok[1]] = _prob(tok[2], no)
        elif len(tok) == 2 and header is not None:
            edges.append((tok[0], tok[1]))
        else:
            raise ParseError(f"unexpected line {' '.join(tok)!r}", no)
    if header is None or s is None or t is None:
        raise ParseError("missing 'vdag' header, source or sink")
    if header != (len(fail) + 2, len(edges)):
        raise ParseError("header counts do not match the file")
    try:
        return VertexFailureInstance(tuple(fail), tuple(edges), fail, s, t)
    except ValueError as exc:
        raise ParseError(str(exc)) from None


def render_vertex_failure(vf: VertexFailureInstance, comment: str | None = None) -> str:
    out = [f"# {line}" for line in (comment or "").splitlines()]
    out += [f"vdag {len(vf.vertices) + 2} {len(vf.edges)}", f"source {vf.s}", f"sink {vf.t}"]
    out += [f"vertex {v} {_fmt(vf.fail[v])}" for v in vf.vertices]
    out += [f"{a} {b}" for a, b in vf.edges]
    return "\n".join(out) + "\n"


# ---------------------------------------------------------------- bipartite graphs


def parse_bipartite(text: str) -> BipartiteGraph:
    """``bipartite <|L|> <|R|> <m>`` / ``left <ids...>`` / ``right <ids...>`` / ``<u> <v>``."""
    header = None
    left: list[str] = []
    right: list[str] = []
    edges: list[tuple[str, str]] = []
    for no, tok in _lines(text):
        key = tok[0]
        if key == "bipartite" and len(tok) == 4 and header is None:
            header = tuple(_count(x, no) for x in tok[1:])
        elif key == "left":
            left += tok[1:]
        elif key == "right":
            right += tok[1:]
        elif len(tok) == 2 and header is not None:
            edges.append((tok[0], tok[1]))
        else:
            raise ParseError(f"unexpected line {' '.join(tok)!r}", no)
    if header is None:
        raise ParseError("missing 'bipartite' header")
    if header != (len(left), len(right), len(edges)):
        raise ParseError("header counts do not match the file")
    try:
        return BipartiteGraph(tuple(left), tuple(right), tuple(edges))
    except ValueError as exc:
        raise ParseError(str(exc)) from None


def render_bipartite(graph: BipartiteGraph) -> str:
    out = [
        f"bipartite {len(graph.left)} {len(graph.right)} {len(graph.edges)}",
        " ".join(["left", *graph.left]),
        " ".join(["right", *graph.right]),
    ]
    out += [f"{a} {b}" for a, b in graph.edges]
    return "\n".join(out) + "\n"


# ---------------------------------------------------------------- NFAs


def render_nfa(nfa: Nfa, comment: str | None = None) -> str:
    names = nfa.names
    out = [f"# {line}" for line in (comment or "").splitlines()]
    out += [
        f"nfa {nfa.state_count} 01 {nfa.length}",
        f"start {names[nfa.start]}",
        f"accept {names[nfa.accept]}",
        f"failure {names[nfa.failure]}",
    ]
    out += [f"{names[a]} {sym} {names[b]}" for a, sym, b in nfa.transitions()]
    return "\n".join(out) + "\n"


def parse_nfa(text: str) -> Nfa:
    header = None
    special: dict[str, str] = {}
    arcs: list[tuple[str, int, str]] = []
    order: dict[str, int] = {}

    def state(name):
        return order.setdefault(name, len(order))

    for no, tok in _lines(text):
        key = tok[0]
        if key == "nfa" and len(tok) == 4 and header is None:
            if tok[2] != "01":
                raise ParseError("only the alphabet 01 is supported", no)
            header = (_count(tok[1], no), _count(tok[3], no))
        elif key in ("start", "accept", "failure") and len(tok) == 2:
            special[key] = tok[1]
            state(tok[1])
        elif len(tok) == 3 and tok[1] in ("0", "1"):
            state(tok[0])
            state(tok[2])
            arcs.append((tok[0], int(tok[1]), tok[2]))
        else:
            raise ParseError(f"unexpected line {' '.join(tok)!r}", no)
    if header is None or set(special) != {"start", "accept", "failure"}:
        raise ParseError("missing 'nfa' header or start/accept/failure line")
    if header[0] != len(order):
        raise ParseError(f"header declares {header[0]} states, found {len(order)}")
    delta = ([0] * len(order), [0] * len(order))
    for a, sym, b in arcs:
        delta[sym][order[a]] |= 1 << order[b]
    return Nfa(
        names=tuple(order),
        start=order[special["start"]],
        accept=order[special["accept"]],
        failure=order[special["failure"]],
        delta=(tuple(delta[0]), tuple(delta[1])),
        length=header[1],
    )


# ---------------------------------------------------------------- reports


def _value(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if v is None:
        return "none"
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, (list, tuple)):
        return ",".join(_value(x) for x in v)
    return str(v)


def render_report(
    items: Mapping[str, object], sections: Mapping[str, Mapping[str, object]] | None = None
) -> str:
    """Flat ``key = value`` lines, followed by optional ``[section]`` blocks."""
    out = [f"{k} = {_value(v)}" for k, v in items.items()]
    for name, block in (sections or {}).items():
        out.append(f"[{name}]")
        out += [f"{k} = {_value(v)}" for k, v in block.items()]
    return "\n".join(out) + "\n"


def parse_report(text: str) -> dict[str, str]:
    """Inverse of :func:`render_report`; section keys come back as ``section.key``."""
    out: dict[str, str] = {}
    prefix = ""
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if line.startswith("[") and line.endswith("]"):
            prefix = line[1:-1] + "."
            continue
        key, sep, value = line.partition(" = ")
        if not sep:
            raise ParseError(f"not a key-value line: {line!r}")
        out[prefix + key] = value
    return out
