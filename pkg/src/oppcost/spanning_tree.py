"""
Maximum spanning trees: Kruskal with a per-step opportunity-cost trace,
a brute-force oracle, and the check that the greedy edge is always the
cheapest choice in opportunity-cost terms.
"""
import math
from dataclasses import dataclass
from itertools import combinations
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import networkx as nx

from src.oppcost.graph import Edge, Graph
from src.oppcost.utils import DisconnectedGraphError, InputError, InstanceTooLargeError, format_number, get_logger

DEFAULT_EDGE_CAP = 20

GREEDY_RATIONALE = "the choice of an edge does not restrict future choices"
STEP_ZERO_NOTE = (
    "step-0 opportunity costs treat each edge as a hypothetical first pick: "
    "choosing it forgoes the heaviest remaining edge"
)


class UnionFind:
    """Disjoint sets over vertex labels; union by rank with path compression."""

    def __init__(self, items: Iterable[str]):
        self.parents = {x: x for x in items}
        self.rank = {x: 0 for x in self.parents}

    def find(self, x: str) -> str:
        root = x
        while self.parents[root] != root:
            root = self.parents[root]
        while self.parents[x] != root:
            self.parents[x], x = root, self.parents[x]
        return root

    def connected(self, x: str, y: str) -> bool:
        return self.find(x) == self.find(y)

    def union(self, x: str, y: str) -> bool:
        x, y = self.find(x), self.find(y)
        if x == y:
            return False
        if self.rank[x] < self.rank[y]:
            x, y = y, x
        # x has the larger rank and becomes the shared root
        self.parents[y] = x
        if self.rank[x] == self.rank[y]:
            self.rank[x] += 1
        return True


@dataclass(frozen=True)
class SpanningTree:
    vertices: Tuple[str, ...]
    edges: Tuple[Edge, ...]
    total_weight: float

    @property
    def edge_keys(self) -> frozenset:
        return frozenset(e.key for e in self.edges)

    def to_dict(self) -> Dict:
        return {
            "edges": [e.to_dict() for e in self.edges],
            "total_weight": self.total_weight,
        }


def make_spanning_tree(vertices: Iterable[str], edges: Iterable[Edge]) -> SpanningTree:
    edges = tuple(sorted(edges, key=lambda e: e.key))
    return SpanningTree(tuple(sorted(vertices)), edges, math.fsum(e.weight for e in edges))


@dataclass(frozen=True)
class KruskalStep:
    index: int
    edge: Edge
    accepted: bool
    feasible_alternatives: Tuple[Edge, ...]
    opportunity_cost: Optional[float]

    @property
    def status(self) -> str:
        return "accepted" if self.accepted else "rejected-cycle"

    def to_dict(self) -> Dict:
        return {
            "step": self.index,
            "edge": self.edge.label,
            "weight": self.edge.weight,
            "status": self.status,
            "feasible_alternatives": [e.label for e in self.feasible_alternatives],
            "opportunity_cost": self.opportunity_cost,
        }


@dataclass(frozen=True)
class KruskalTrace:
    ordered_edges: Tuple[Edge, ...]
    steps: Tuple[KruskalStep, ...]

    @property
    def accepted_edges(self) -> List[Edge]:
        return [step.edge for step in self.steps if step.accepted]

    def to_dict(self) -> Dict:
        return {
            "ordered_edges": [e.to_dict() for e in self.ordered_edges],
            "steps": [step.to_dict() for step in self.steps],
        }


def kruskal_order(edges: Iterable[Edge]) -> List[Edge]:
    """Descending weight; ties by (smaller label, larger label)."""
    return sorted(edges, key=lambda e: (-e.weight, e.u, e.v))


def _max_weight(edges: Sequence[Edge]) -> Optional[float]:
    return max((e.weight for e in edges), default=None)


def _require_connected(g: Graph) -> None:
    if g.vertex_count == 0:
        raise InputError("graph has no vertices")
    components = g.components()
    if len(components) > 1:
        raise DisconnectedGraphError(components[0][0], components[1][0])


def kruskal_max_spanning_tree(g: Graph, logger=None) -> Tuple[SpanningTree, KruskalTrace]:
    """
    Kruskal's algorithm on descending weights, recording at every step the
    edges that are still feasible and the opportunity cost of the step.

    Raises:
        DisconnectedGraphError: naming two vertices with no path between them.
    """
    logger = get_logger(logger)
    _require_connected(g)

    ordered = kruskal_order(g.edges)
    forest = UnionFind(g.vertices)
    target = g.vertex_count - 1
    accepted: List[Edge] = []
    steps: List[KruskalStep] = []

    for index, e in enumerate(ordered):
        if len(accepted) == target:
            break
        alternatives = tuple(
            other for other in ordered[index + 1:] if not forest.connected(other.u, other.v)
        )
        is_accepted = forest.union(e.u, e.v)
        if is_accepted:
            accepted.append(e)
        step = KruskalStep(index, e, is_accepted, alternatives, _max_weight(alternatives))
        logger.debug(f"Kruskal step {index}: {e} {step.status}, "
                     f"OPPCOST {format_number(step.opportunity_cost)}")
        steps.append(step)

    tree = make_spanning_tree(g.vertices, accepted)
    logger.info(f"Maximum spanning tree weight: {format_number(tree.total_weight)}")
    return tree, KruskalTrace(tuple(ordered), tuple(steps))


def first_choice_opportunity_costs(g: Graph) -> List[Tuple[Edge, Optional[float]]]:
    """
    Cost of picking each edge first: every other edge is still feasible at
    step 0, so the cost is the heaviest of them. Listed in Kruskal order.
    """
    ordered = kruskal_order(g.edges)
    if len(ordered) < 2:
        return [(e, None) for e in ordered]
    return [(e, _max_weight(ordered[:i] + ordered[i + 1:])) for i, e in enumerate(ordered)]


def brute_force_max_spanning_tree(g: Graph, edge_cap: int = DEFAULT_EDGE_CAP) -> SpanningTree:
    """
    Exhaustive oracle: try every (n-1)-edge subset. Ties go to the
    lexicographically smallest edge set.
    """
    _require_connected(g)
    if g.edge_count > edge_cap:
        raise InstanceTooLargeError(
            f"too many edges for subset enumeration: {g.edge_count} exceeds the cap of {edge_cap}"
        )

    edges = sorted(g.edges, key=lambda e: e.key)
    best: Optional[Tuple[float, Tuple[Edge, ...]]] = None
    for subset in combinations(edges, g.vertex_count - 1):
        forest = UnionFind(g.vertices)
        if not all(forest.union(e.u, e.v) for e in subset):
            continue
        total = math.fsum(e.weight for e in subset)
        if best is None or total > best[0]:
            best = (total, subset)

    return make_spanning_tree(g.vertices, best[1])


def tree_path(tree: SpanningTree, u: str, v: str) -> List[str]:
    """The unique path between u and v inside the tree."""
    G = nx.Graph()
    G.add_nodes_from(tree.vertices)
    G.add_edges_from(e.key for e in tree.edges)
    try:
        return nx.shortest_path(G, u, v)
    except (nx.NetworkXNoPath, nx.NodeNotFound):
        raise InputError(f"{u} and {v} are not connected in the tree") from None


def check_exchange_property(g: Graph, tree: SpanningTree) -> List[Tuple[Edge, Edge]]:
    """
    (non-tree edge, lighter tree edge) pairs that break the exchange
    property. An empty list certifies the tree is maximum.
    """
    in_tree = tree.edge_keys
    weights = {e.key: e for e in tree.edges}
    violations = []
    for e in g.edges:
        if e.key in in_tree:
            continue
        cycle = tree_path(tree, e.u, e.v)
        for a, b in zip(cycle, cycle[1:]):
            tree_edge = weights[(a, b) if a <= b else (b, a)]
            if tree_edge.weight < e.weight:
                violations.append((e, tree_edge))
    return violations


@dataclass(frozen=True)
class StepCheck:
    index: int
    edge: Edge
    chosen_opportunity_cost: Optional[float]
    min_alternative_opportunity_cost: Optional[float]
    passed: bool

    def to_dict(self) -> Dict:
        return {
            "step": self.index,
            "edge": self.edge.label,
            "chosen_opportunity_cost": self.chosen_opportunity_cost,
            "min_alternative_opportunity_cost": self.min_alternative_opportunity_cost,
            "passed": self.passed,
        }


@dataclass(frozen=True)
class GreedyVerification:
    checks: Tuple[StepCheck, ...]
    passed: bool
    rationale: str = GREEDY_RATIONALE
    note: str = STEP_ZERO_NOTE

    def to_dict(self) -> Dict:
        return {
            "passed": self.passed,
            "checks": [c.to_dict() for c in self.checks],
            "rationale": self.rationale,
            "note": self.note,
        }


def verify_greedy_min_oppcost(trace: KruskalTrace) -> GreedyVerification:
    """
    At every accepted step, the chosen edge's opportunity cost must not
    exceed the cost any feasible alternative would have had at that step.
    """
    checks = []
    for step in trace.steps:
        if not step.accepted:
            continue
        feasible = (step.edge,) + step.feasible_alternatives
        if not step.feasible_alternatives:
            checks.append(StepCheck(step.index, step.edge, None, None, True))
            continue

        def cost_of(position: int) -> Optional[float]:
            return _max_weight(feasible[:position] + feasible[position + 1:])

        chosen = cost_of(0)
        cheapest_alternative = min(cost_of(i) for i in range(1, len(feasible)))
        checks.append(StepCheck(step.index, step.edge, chosen, cheapest_alternative,
                                chosen <= cheapest_alternative))

    return GreedyVerification(tuple(checks), all(c.passed for c in checks))
