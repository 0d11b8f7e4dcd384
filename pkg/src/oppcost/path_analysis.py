"""
Maximum-benefit path between two vertices: the myopic greedy walk, the
exhaustive optimum, and the opportunity cost of every choice at a decision
point. The opportunity cost of choosing an edge is the utility of the best
s-t path that the choice forgoes.
"""
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

from src.oppcost.graph import (
    DEFAULT_VERTEX_CAP,
    Graph,
    PathRecord,
    check_endpoints,
    check_vertex_cap,
    extend_simple_paths,
    enumerate_simple_paths,
    path_utility,
)
from src.oppcost.utils import GreedyStuckError, InputError, NoPathError, format_number, get_logger

GREEDY_AMENABLE = "greedy-amenable-on-instance"
REQUIRES_DP = "requires-dp-on-instance"


@dataclass(frozen=True)
class DecisionAnalysis:
    """One choice at one decision point."""
    choice: Tuple[str, str]
    immediate_utility: float
    best_completion_utility: float
    opportunity_cost: Optional[float]
    is_greedy_choice: bool
    forgone_alternatives: Tuple[Tuple[Tuple[str, str], float], ...]
    best_completion: PathRecord
    best_forgone_path: Optional[PathRecord] = None
    extension: bool = False

    @property
    def label(self) -> str:
        return f"{self.choice[0]}-{self.choice[1]}"

    def to_dict(self) -> Dict:
        return {
            "choice": self.label,
            "immediate_utility": self.immediate_utility,
            "best_completion_utility": self.best_completion_utility,
            "best_completion": self.best_completion.label,
            "opportunity_cost": self.opportunity_cost,
            "best_forgone_path": self.best_forgone_path.label if self.best_forgone_path else None,
            "is_greedy_choice": self.is_greedy_choice,
            "forgone_alternatives": [
                {"choice": f"{a}-{b}", "best_completion_utility": u}
                for (a, b), u in self.forgone_alternatives
            ],
            "extension": self.extension,
        }


@dataclass(frozen=True)
class ClassificationReport:
    verdict: str
    greedy_solution_utility: float
    optimal_solution_utility: float
    utility_gap: float
    decisions: Tuple[DecisionAnalysis, ...]
    narrative: str
    optimal_path: PathRecord
    greedy_path: Optional[PathRecord] = None
    greedy_stuck_at: Optional[Tuple[str, ...]] = None
    later_decisions: Tuple[Tuple[Tuple[str, ...], Tuple[DecisionAnalysis, ...]], ...] = field(default=())

    def to_dict(self) -> Dict:
        return {
            "verdict": self.verdict,
            "greedy_path": self.greedy_path.to_dict() if self.greedy_path else None,
            "greedy_stuck_at": list(self.greedy_stuck_at) if self.greedy_stuck_at else None,
            "optimal_path": self.optimal_path.to_dict(),
            "greedy_solution_utility": self.greedy_solution_utility,
            "optimal_solution_utility": self.optimal_solution_utility,
            "utility_gap": self.utility_gap,
            "decisions": [d.to_dict() for d in self.decisions],
            "later_decisions": [
                {"prefix": "-".join(prefix), "analyses": [d.to_dict() for d in analyses]}
                for prefix, analyses in self.later_decisions
            ],
            "narrative": self.narrative,
        }


def _greedy_pick(candidates: Sequence[Tuple[str, float]]) -> Tuple[str, float]:
    # max weight, ties to the smallest label
    return min(candidates, key=lambda nw: (-nw[1], nw[0]))


def greedy_path(g: Graph, s: str, t: str, logger=None) -> PathRecord:
    """
    Myopic walk from s: always take the heaviest edge to an unvisited
    neighbor. No lookahead and no backtracking.

    Raises:
        GreedyStuckError: dead end before reaching t (carries the partial path).
    """
    logger = get_logger(logger)
    check_endpoints(g, s, t)

    path = [s]
    visited = {s}
    utility = 0.0
    current = s
    while current != t:
        candidates = [(v, w) for v, w in g.neighbors(current) if v not in visited]
        if not candidates:
            logger.debug(f"Greedy stuck at {current} after {'-'.join(path)}")
            raise GreedyStuckError(path, t)
        nxt, weight = _greedy_pick(candidates)
        logger.debug(f"Greedy at {current}: takes {current}-{nxt} ({format_number(weight)})")
        path.append(nxt)
        visited.add(nxt)
        utility += weight
        current = nxt

    return PathRecord(tuple(path), utility)


def _best(paths: Sequence[PathRecord]) -> PathRecord:
    # paths are sorted lexicographically; max() keeps the first maximum
    return max(paths, key=lambda p: p.utility)


def optimal_path(g: Graph, s: str, t: str, vertex_cap: int = DEFAULT_VERTEX_CAP) -> PathRecord:
    """
    Maximum-utility simple s-t path by exhaustive enumeration; ties go to
    the lexicographically smallest vertex sequence.
    """
    paths = enumerate_simple_paths(g, s, t, vertex_cap=vertex_cap)
    if not paths:
        raise NoPathError(f"no path from {s} to {t}")
    return _best(paths)


def decision_analyses_at(
    g: Graph,
    prefix: Sequence[str],
    t: str,
    vertex_cap: int = DEFAULT_VERTEX_CAP,
    extension: bool = True,
) -> List[DecisionAnalysis]:
    """
    Opportunity costs of the choices available after walking `prefix`.

    Each candidate is an edge from the last prefix vertex to an unvisited
    neighbor that still admits a completion to t. Utilities are whole-path
    totals (prefix included), so the numbers are comparable with the optimum.
    """
    prefix = tuple(prefix)
    if not prefix:
        raise InputError("decision prefix must contain at least the source vertex")
    check_endpoints(g, prefix[0], t)
    check_vertex_cap(g, vertex_cap)
    prefix_utility = path_utility(g, prefix)

    current = prefix[-1]
    if current == t:
        return []

    visited = set(prefix)
    candidates = [(v, w) for v, w in g.neighbors(current) if v not in visited]
    if not candidates:
        return []
    greedy_vertex, _ = _greedy_pick(candidates)

    completions: List[Tuple[str, float, PathRecord]] = []
    for v, w in candidates:
        paths = extend_simple_paths(g, prefix + (v,), prefix_utility + w, t)
        if paths:
            completions.append((v, w, _best(paths)))

    analyses = []
    for v, w, best in completions:
        forgone = [(alt_v, alt_best) for alt_v, _, alt_best in completions if alt_v != v]
        if forgone:
            best_forgone = _best([p for _, p in forgone])
            opportunity_cost = best_forgone.utility
        else:
            best_forgone = None
            opportunity_cost = None
        analyses.append(DecisionAnalysis(
            choice=(current, v),
            immediate_utility=w,
            best_completion_utility=best.utility,
            opportunity_cost=opportunity_cost,
            is_greedy_choice=(v == greedy_vertex),
            forgone_alternatives=tuple(((current, alt_v), p.utility) for alt_v, p in forgone),
            best_completion=best,
            best_forgone_path=best_forgone,
            extension=extension,
        ))
    return analyses


def first_decision_analyses(
    g: Graph, s: str, t: str, vertex_cap: int = DEFAULT_VERTEX_CAP
) -> List[DecisionAnalysis]:
    """
    One DecisionAnalysis per first edge out of s that can still reach t.

    Raises:
        NoPathError: no s-t path exists.
    """
    if not enumerate_simple_paths(g, s, t, vertex_cap=vertex_cap):
        raise NoPathError(f"no path from {s} to {t}")
    return decision_analyses_at(g, (s,), t, vertex_cap=vertex_cap, extension=False)


def greedy_trajectory_analyses(
    g: Graph, s: str, t: str, vertex_cap: int = DEFAULT_VERTEX_CAP, logger=None
) -> List[Tuple[Tuple[str, ...], List[DecisionAnalysis]]]:
    """Decision analyses at every later decision point along the greedy walk."""
    try:
        walked = greedy_path(g, s, t, logger=logger).vertices
    except GreedyStuckError as e:
        walked = tuple(e.partial_path)

    trajectory = []
    for end in range(2, len(walked) + 1):
        prefix = walked[:end]
        if prefix[-1] == t:
            break
        trajectory.append((prefix, decision_analyses_at(g, prefix, t, vertex_cap=vertex_cap)))
    return trajectory


def _narrative(
    s: str,
    t: str,
    greedy: Optional[PathRecord],
    stuck_at: Optional[Tuple[str, ...]],
    optimum: PathRecord,
    gap: float,
    decisions: Sequence[DecisionAnalysis],
    verdict: str,
) -> str:
    fmt = format_number
    lines = []
    if greedy is not None:
        lines.append(f"Greedy path {greedy.label} earns {fmt(greedy.utility)}; "
                     f"optimal path {optimum.label} earns {fmt(optimum.utility)}; gap {fmt(gap)}.")
    else:
        lines.append(f"Greedy walk {'-'.join(stuck_at)} gets stuck before reaching {t}; "
                     f"optimal path {optimum.label} earns {fmt(optimum.utility)}.")

    priced = [d for d in decisions if d.opportunity_cost is not None]
    greedy_choice = next((d for d in decisions if d.is_greedy_choice), None)
    if priced:
        cheapest = min(priced, key=lambda d: (d.opportunity_cost, d.choice[1]))
        if greedy_choice is not None and greedy_choice.opportunity_cost is not None:
            lines.append(
                f"At {s} the greedy choice {greedy_choice.label} gains {fmt(greedy_choice.immediate_utility)} now "
                f"and has opportunity cost {fmt(greedy_choice.opportunity_cost)} "
                f"(best forgone path {greedy_choice.best_forgone_path.label})."
            )
        if greedy_choice is None or cheapest.choice != greedy_choice.choice:
            lines.append(
                f"The lowest opportunity cost belongs to {cheapest.label} "
                f"({fmt(cheapest.opportunity_cost)}), whose best completion {cheapest.best_completion.label} "
                f"earns {fmt(cheapest.best_completion_utility)}."
            )
            if greedy_choice is not None and greedy is not None:
                now = greedy_choice.immediate_utility - cheapest.immediate_utility
                lines.append(
                    f"Taking the greedy edge yields {fmt(now)} more immediately "
                    f"but misses out on {fmt(gap)} units of utility overall."
                )
        else:
            lines.append("The greedy choice also has the lowest opportunity cost at this decision.")
    elif decisions:
        lines.append(f"Only one first choice from {s} can reach {t}; it forgoes nothing.")

    if verdict == GREEDY_AMENABLE:
        lines.append("Verdict (this instance only): greedy reaches the optimum; "
                     "one instance cannot prove the problem class greedy-amenable.")
    else:
        lines.append("Verdict (this instance only): the greedy local choice is worse overall; "
                     "dynamic programming (or exhaustive search) is required.")
    return "\n".join(lines)


def analyze_path_problem(
    g: Graph, s: str, t: str, vertex_cap: int = DEFAULT_VERTEX_CAP, logger=None
) -> ClassificationReport:
    """Greedy vs optimum on one instance, explained through opportunity costs."""
    logger = get_logger(logger)
    logger.info(f"=== Maximum-benefit path {s} -> {t} ===")

    optimum = optimal_path(g, s, t, vertex_cap=vertex_cap)
    logger.info(f"Optimal path: {optimum.label} ({format_number(optimum.utility)})")

    greedy, stuck_at = None, None
    try:
        greedy = greedy_path(g, s, t, logger=logger)
        greedy_utility = greedy.utility
        logger.info(f"Greedy path: {greedy.label} ({format_number(greedy_utility)})")
    except GreedyStuckError as e:
        stuck_at = tuple(e.partial_path)
        greedy_utility = -math.inf
        logger.warning(str(e))

    gap = optimum.utility - greedy_utility
    verdict = GREEDY_AMENABLE if greedy_utility == optimum.utility else REQUIRES_DP

    decisions = first_decision_analyses(g, s, t, vertex_cap=vertex_cap)
    later = greedy_trajectory_analyses(g, s, t, vertex_cap=vertex_cap, logger=logger)
    for d in decisions:
        logger.debug(f"OPPCOST({d.label}) = {format_number(d.opportunity_cost)}")

    return ClassificationReport(
        verdict=verdict,
        greedy_solution_utility=greedy_utility,
        optimal_solution_utility=optimum.utility,
        utility_gap=gap,
        decisions=tuple(decisions),
        narrative=_narrative(s, t, greedy, stuck_at, optimum, gap, decisions, verdict),
        optimal_path=optimum,
        greedy_path=greedy,
        greedy_stuck_at=stuck_at,
        later_decisions=tuple((prefix, tuple(analyses)) for prefix, analyses in later),
    )
