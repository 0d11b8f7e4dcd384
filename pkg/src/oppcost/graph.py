"""
Undirected weighted graphs, the edge-list text format, and exhaustive
simple-path enumeration.

Edge-list format (UTF-8, whitespace separated, `#` starts a comment):

    c e 8        # edge c-e with utility 8
    a d 5
    z            # isolated vertex z
"""
import math
import os
from dataclasses import dataclass
from functools import cached_property
from typing import Dict, FrozenSet, Iterable, List, Optional, Sequence, Tuple

import networkx as nx

from src.oppcost.utils import (
    GraphParseError,
    InputError,
    InstanceTooLargeError,
    format_number,
    get_logger,
)

DEFAULT_VERTEX_CAP = 15

# Reconstructed example graph: the descending edge ordering used for Kruskal,
# consistent with the three a-to-h path utilities (8, 13, 8).
EXAMPLE_EDGE_LIST = """\
# Example graph, vertices a..h
c e 8
a d 5
f h 4
a c 3
a b 2
b f 2
d g 2
e h 2
g h 1
"""


@dataclass(frozen=True, order=True)
class Edge:
    """Undirected edge stored with its endpoints in label order (u < v)."""
    u: str
    v: str
    weight: float

    @property
    def key(self) -> Tuple[str, str]:
        return (self.u, self.v)

    @property
    def label(self) -> str:
        return f"{self.u}-{self.v}"

    def to_dict(self) -> Dict:
        return {"u": self.u, "v": self.v, "weight": self.weight}

    def __str__(self) -> str:
        return f"{self.label}:{format_number(self.weight)}"


def edge_key(u: str, v: str) -> Tuple[str, str]:
    return (u, v) if u <= v else (v, u)


def make_edge(u: str, v: str, weight: float) -> Edge:
    a, b = edge_key(u, v)
    return Edge(a, b, float(weight))


@dataclass(frozen=True)
class Graph:
    vertices: FrozenSet[str]
    edges: Tuple[Edge, ...]

    @cached_property
    def _by_key(self) -> Dict[Tuple[str, str], Edge]:
        return {e.key: e for e in self.edges}

    @cached_property
    def nx_graph(self) -> nx.Graph:
        G = nx.Graph()
        G.add_nodes_from(self.vertices)
        G.add_weighted_edges_from((e.u, e.v, e.weight) for e in self.edges)
        return G

    @property
    def vertex_count(self) -> int:
        return len(self.vertices)

    @property
    def edge_count(self) -> int:
        return len(self.edges)

    def sorted_vertices(self) -> List[str]:
        return sorted(self.vertices)

    def has_edge(self, u: str, v: str) -> bool:
        return edge_key(u, v) in self._by_key

    def edge(self, u: str, v: str) -> Edge:
        try:
            return self._by_key[edge_key(u, v)]
        except KeyError:
            raise InputError(f"no edge between {u} and {v}") from None

    def weight(self, u: str, v: str) -> float:
        return self.edge(u, v).weight

    def neighbors(self, v: str) -> Tuple[Tuple[str, float], ...]:
        """(neighbor, weight) pairs sorted by neighbor label."""
        if v not in self.vertices:
            raise InputError(f"vertex {v} is not in the graph")
        return tuple(sorted((nbr, data["weight"]) for nbr, data in self.nx_graph[v].items()))

    def components(self) -> List[List[str]]:
        return sorted(sorted(c) for c in nx.connected_components(self.nx_graph))

    def is_connected(self) -> bool:
        return len(self.components()) <= 1


def build_graph(edges: Iterable[Tuple[str, str, float]], vertices: Iterable[str] = ()) -> Graph:
    """
    Build a Graph from (u, v, weight) triples, enforcing the graph invariants.

    Raises:
        InputError: self-loop, parallel edge, or a negative / non-finite weight.
    """
    vertex_set = set(vertices)
    by_key: Dict[Tuple[str, str], Edge] = {}
    for u, v, weight in edges:
        _check_edge(u, v, weight)
        e = make_edge(u, v, weight)
        if e.key in by_key:
            raise InputError(f"duplicate edge {e.label}")
        by_key[e.key] = e
        vertex_set.update(e.key)
    return Graph(frozenset(vertex_set), tuple(sorted(by_key.values(), key=lambda e: e.key)))


def _check_edge(u: str, v: str, weight) -> None:
    if u == v:
        raise InputError(f"self-loop on vertex {u}")
    try:
        weight = float(weight)
    except (TypeError, ValueError):
        raise InputError(f"weight {weight!r} of edge {u}-{v} is not a number") from None
    if not math.isfinite(weight):
        raise InputError(f"weight of edge {u}-{v} must be finite, got {weight}")
    if weight < 0:
        raise InputError(f"weight of edge {u}-{v} must be non-negative, got {weight}")


def parse_edge_list(text: str, logger=None) -> Graph:
    """
    Parse the edge-list format into a Graph.

    Raises:
        GraphParseError: naming the offending line for malformed lines,
            self-loops, duplicate edges and invalid weights.
    """
    logger = get_logger(logger)
    vertices = set()
    by_key: Dict[Tuple[str, str], Tuple[Edge, int]] = {}

    for line_number, raw_line in enumerate(text.splitlines(), start=1):
        line = raw_line.split("#", 1)[0].strip()
        if not line:
            continue
        tokens = line.split()

        if len(tokens) == 1:
            vertices.add(tokens[0])
            continue
        if len(tokens) != 3:
            raise GraphParseError(
                f"expected '<label> <label> <weight>' or '<label>', got {raw_line.strip()!r}",
                line_number,
            )

        u, v, weight_token = tokens
        try:
            _check_edge(u, v, weight_token)
        except InputError as e:
            raise GraphParseError(str(e), line_number) from None

        e = make_edge(u, v, float(weight_token))
        if e.key in by_key:
            first_line = by_key[e.key][1]
            raise GraphParseError(f"duplicate edge {e.label} (first declared on line {first_line})", line_number)
        by_key[e.key] = (e, line_number)
        vertices.update(e.key)

    edges = tuple(sorted((e for e, _ in by_key.values()), key=lambda e: e.key))
    graph = Graph(frozenset(vertices), edges)
    logger.debug(f"Parsed graph with {graph.vertex_count} vertices and {graph.edge_count} edges")
    return graph


def serialize_edge_list(g: Graph) -> str:
    """Inverse of parse_edge_list: edges in label order, then isolated vertices."""
    lines = [f"{e.u} {e.v} {format_number(e.weight, digits=17)}" for e in g.edges]
    touched = {x for e in g.edges for x in e.key}
    lines.extend(v for v in g.sorted_vertices() if v not in touched)
    return "\n".join(lines) + "\n"


def load_graph(path: str, logger=None) -> Graph:
    logger = get_logger(logger)
    if not os.path.exists(path):
        raise FileNotFoundError(f"Graph file does not exist: {path}")
    logger.info(f"Loading graph: {path}")
    with open(path, "rb") as f:
        data = f.read()
    try:
        text = data.decode("utf-8")
    except UnicodeDecodeError as e:
        raise GraphParseError(f"not valid UTF-8 text (byte {e.start})", data[:e.start].count(b"\n") + 1) from None
    return parse_edge_list(text, logger=logger)


def example_graph() -> Graph:
    return parse_edge_list(EXAMPLE_EDGE_LIST)


@dataclass(frozen=True)
class PathRecord:
    vertices: Tuple[str, ...]
    utility: float

    @property
    def label(self) -> str:
        return "-".join(self.vertices)

    @property
    def first_edge(self) -> Optional[Tuple[str, str]]:
        return (self.vertices[0], self.vertices[1]) if len(self.vertices) > 1 else None

    def to_dict(self) -> Dict:
        return {"vertices": list(self.vertices), "utility": self.utility}


def check_endpoints(g: Graph, s: str, t: str) -> None:
    for name, v in (("source", s), ("target", t)):
        if v not in g.vertices:
            raise InputError(f"{name} vertex {v} is not in the graph")


def check_vertex_cap(g: Graph, vertex_cap: int = DEFAULT_VERTEX_CAP) -> None:
    if vertex_cap < 1:
        raise InputError(f"vertex_cap must be a positive integer, got {vertex_cap}")
    if g.vertex_count > vertex_cap:
        raise InstanceTooLargeError(
            f"instance too large for exhaustive enumeration: {g.vertex_count} vertices "
            f"exceeds the cap of {vertex_cap}"
        )


def extend_simple_paths(g: Graph, prefix: Sequence[str], prefix_utility: float, t: str) -> List[PathRecord]:
    """All simple paths to t that start with the given simple prefix, in lexicographic order."""
    prefix = tuple(prefix)
    current = prefix[-1]
    if current == t:
        return [PathRecord(prefix, prefix_utility)]

    # completions may not revisit the prefix
    remaining = g.nx_graph.subgraph(v for v in g.vertices if v not in prefix[:-1])
    if t not in remaining:
        return []

    paths = []
    for completion in nx.all_simple_paths(remaining, source=current, target=t):
        utility = prefix_utility
        for u, v in zip(completion, completion[1:]):
            utility += remaining[u][v]["weight"]
        paths.append(PathRecord(prefix + tuple(completion[1:]), utility))
    return sorted(paths, key=lambda p: p.vertices)


def enumerate_simple_paths(g: Graph, s: str, t: str, vertex_cap: int = DEFAULT_VERTEX_CAP) -> List[PathRecord]:
    """
    Every simple s-t path with its exact utility, sorted lexicographically
    by vertex sequence. s == t yields the single zero-length path.

    Raises:
        InputError: s or t not in g.
        InstanceTooLargeError: more than vertex_cap vertices.
    """
    check_endpoints(g, s, t)
    check_vertex_cap(g, vertex_cap)
    return extend_simple_paths(g, (s,), 0.0, t)


def path_utility(g: Graph, vertices: Sequence[str]) -> float:
    if len(vertices) == 0:
        raise InputError("a path needs at least one vertex")
    seen = set()
    for v in vertices:
        if v not in g.vertices:
            raise InputError(f"vertex {v} is not in the graph")
        if v in seen:
            raise InputError(f"vertex {v} repeats: not a simple path")
        seen.add(v)

    utility = 0.0
    for u, v in zip(vertices, vertices[1:]):
        if not g.has_edge(u, v):
            raise InputError(f"no edge between consecutive vertices {u} and {v}")
        utility += g.weight(u, v)
    return utility
