"""The feedback round machinery: no-superior graph, candidate-subset
selection, constraint generation, candidate filtering and termination.

The graph keeps two complementary structures over the current candidates:
an undirected edge marks a pair whose relative preference order is still
unknown, while ``known_order`` holds every ordered fact (dominance facts
seeded at build time plus feedback facts), maintained transitively closed.
For every candidate pair exactly one of the two holds.
"""

from __future__ import annotations

import enum
import random
from dataclasses import dataclass

from .model import Constraint, GeoObject, Query, ScorePair, ValidationError
from .scoring import DominanceOutcome, dominance, feature_map


class InconsistentFeedbackError(ValueError):
    """Feedback facts formed a preference cycle (the user changed their mind)."""


@dataclass
class InteractionConfig:
    max_rounds: int = 10


class TerminationReason(enum.Enum):
    CANDIDATES_EXHAUSTED = "candidates_exhausted"
    FULLY_ORDERED = "fully_ordered"
    MAX_ROUNDS = "max_rounds"
    USER_STOP = "user_stop"


@dataclass(frozen=True)
class TerminationDecision:
    stop: bool
    reasons: tuple[TerminationReason, ...]


@dataclass
class RoundState:
    round_no: int
    shown: tuple[int, ...]
    chosen: int | None = None


class NoSuperiorGraph:
    """Candidates with unknown-order edges and a closed order relation."""

    def __init__(self) -> None:
        self.vertices: set[int] = set()
        self.adj: dict[int, set[int]] = {}
        # superiors[v] / inferiors[v] are transitively closed and keep facts
        # about removed candidates too: an order fact never expires.
        self.superiors: dict[int, set[int]] = {}
        self.inferiors: dict[int, set[int]] = {}

    # -- structure ---------------------------------------------------------

    def add_vertex(self, v: int) -> None:
        self.vertices.add(v)
        self.adj.setdefault(v, set())
        self.superiors.setdefault(v, set())
        self.inferiors.setdefault(v, set())

    def add_edge(self, a: int, b: int) -> None:
        if a == b:
            raise ValidationError("no self edges")
        self.adj[a].add(b)
        self.adj[b].add(a)

    def has_edge(self, a: int, b: int) -> bool:
        return b in self.adj.get(a, ())

    def edge_count(self) -> int:
        return sum(len(n) for n in self.adj.values()) // 2

    def edges(self) -> set[tuple[int, int]]:
        return {
            (a, b) for a, nbrs in self.adj.items() for b in nbrs if a < b
        }

    def degree(self, v: int) -> int:
        return len(self.adj[v])

    def remove_vertex(self, v: int) -> None:
        for u in self.adj.pop(v, set()):
            self.adj[u].discard(v)
        self.vertices.discard(v)

    # -- order facts ---------------------------------------------------------

    def order_known(self, a: int, b: int) -> bool:
        return b in self.inferiors.get(a, ()) or a in self.inferiors.get(b, ())

    def is_superior(self, a: int, b: int) -> bool:
        return b in self.inferiors.get(a, ())

    def add_order_fact(self, a: int, b: int) -> list[tuple[int, int]]:
        """Record ``a is preferred over b``; returns the newly closed pairs.

        Raises InconsistentFeedbackError when the fact would close a cycle.
        Edges whose order becomes known are removed here.
        """
        if a == b:
            raise InconsistentFeedbackError(f"object {a} cannot be preferred over itself")
        if self.is_superior(b, a):
            raise InconsistentFeedbackError(
                f"feedback says {a} over {b} but the reverse is already known"
            )
        for v in (a, b):
            self.superiors.setdefault(v, set())
            self.inferiors.setdefault(v, set())
        if self.is_superior(a, b):
            return []
        new_pairs: list[tuple[int, int]] = []
        ups = self.superiors[a] | {a}
        downs = self.inferiors[b] | {b}
        for u in ups:
            for d in downs:
                if u == d:
                    raise InconsistentFeedbackError(
                        f"ordering {a} over {b} closes a preference cycle through {u}"
                    )
                if d not in self.inferiors[u]:
                    self.inferiors[u].add(d)
                    self.superiors[d].add(u)
                    new_pairs.append((u, d))
                    if self.has_edge(u, d):
                        self.adj[u].discard(d)
                        self.adj[d].discard(u)
        return new_pairs

    def superior_count(self, v: int, within: set[int] | None = None) -> int:
        sup = self.superiors.get(v, set())
        return len(sup & (within if within is not None else self.vertices))

    def inferior_count(self, v: int, within: set[int] | None = None) -> int:
        inf = self.inferiors.get(v, set())
        return len(inf & (within if within is not None else self.vertices))

    def check_duality(self) -> None:
        """Every vertex pair has exactly one of: edge, known order."""
        verts = sorted(self.vertices)
        for i, a in enumerate(verts):
            for b in verts[i + 1 :]:
                edge = self.has_edge(a, b)
                ordered = self.order_known(a, b)
                if edge == ordered:
                    raise AssertionError(
                        f"pair ({a}, {b}): edge={edge}, ordered={ordered}"
                    )


def build_graph(candidates: list[tuple[GeoObject, ScorePair]]) -> NoSuperiorGraph:
    """Seed the graph from pairwise dominance over the candidate set.

    Dominance facts go straight into the order relation (they already form
    a transitively closed strict order); incomparable or equal pairs get an
    unknown-order edge.
    """
    g = NoSuperiorGraph()
    for obj, _ in candidates:
        g.add_vertex(obj.id)
    for i in range(len(candidates)):
        oi, pi = candidates[i]
        for j in range(i + 1, len(candidates)):
            oj, pj = candidates[j]
            outcome = dominance(pi, pj)
            if outcome is DominanceOutcome.FIRST_DOMINATES:
                g.superiors[oj.id].add(oi.id)
                g.inferiors[oi.id].add(oj.id)
            elif outcome is DominanceOutcome.SECOND_DOMINATES:
                g.superiors[oi.id].add(oj.id)
                g.inferiors[oj.id].add(oi.id)
            else:
                g.add_edge(oi.id, oj.id)
    return g


def select_random(
    graph: NoSuperiorGraph, theta: int, rng: random.Random | int
) -> list[int]:
    """Uniform sample of min(theta, |V|) candidates, deterministic per seed."""
    if not graph.vertices:
        raise ValidationError("cannot select from an empty graph")
    if isinstance(rng, int):
        rng = random.Random(rng)
    verts = sorted(graph.vertices)
    if len(verts) <= theta:
        return verts
    return sorted(rng.sample(verts, theta))


def undominated_shown(graph: NoSuperiorGraph, shown: list[int]) -> list[int]:
    """Members of ``shown`` not known-inferior to any other shown member."""
    shown_set = set(shown)
    return [
        v
        for v in shown
        if not (graph.superiors.get(v, set()) & (shown_set - {v}))
    ]


def expected_constraints(graph: NoSuperiorGraph, shown: list[int]) -> float:
    """Expected number of new constraints from one pick over ``shown``.

    The pick is equally likely among the shown members nobody shown is
    known to beat; each pick yields one constraint per unknown-order edge
    to another shown member.
    """
    if not set(shown) <= graph.vertices:
        raise ValidationError("shown set must be current candidates")
    undom = undominated_shown(graph, shown)
    if not undom:
        return 0.0
    shown_set = set(shown)
    prob = 1.0 / len(undom)
    total = 0.0
    for v in undom:
        f_num = len(graph.adj[v] & shown_set)
        total += prob * f_num
    return total


def _most_dominating(graph: NoSuperiorGraph, members: list[int]) -> int:
    """The member known-superior to the most other members, ties by id."""
    member_set = set(members)
    return min(members, key=lambda v: (-graph.inferior_count(v, member_set), v))


def select_densest(
    graph: NoSuperiorGraph, theta: int, rng: random.Random | int = 0
) -> list[int]:
    """Greedy-peeling densest subgraph, then adjust its size toward theta.

    Peeling repeatedly deletes the minimum-degree vertex and remembers the
    densest intermediate subgraph. The adjustment loop then removes the
    most-dominating members while oversized, and tries single removals or
    additions around theta, keeping a change only when the expected number
    of constraints strictly rises.
    """
    if len(graph.vertices) < 2 or graph.edge_count() == 0:
        return select_random(graph, theta, rng)

    chosen = set(_densest_by_peeling(graph))
    visited: set[int] = set()
    # hard bound keeps the adjustment loop linear in the shown-set size
    max_steps = len(chosen) + theta
    for _ in range(max_steps):
        members = sorted(chosen)
        if len(members) > theta:
            victim = _most_dominating(graph, members)
            chosen.discard(victim)
            visited.add(victim)
            if len(chosen) == theta:
                break
            continue
        if len(members) == theta:
            victim = _most_dominating(graph, members)
            before = expected_constraints(graph, members)
            trial = [v for v in members if v != victim]
            if trial and expected_constraints(graph, trial) > before:
                chosen.discard(victim)
                visited.add(victim)
                continue
            break
        # fewer than theta: try the best unvisited outsider
        outside = [
            v for v in graph.vertices - chosen if v not in visited
        ]
        if not outside:
            break
        best = min(outside, key=lambda v: (-len(graph.adj[v] & chosen), v))
        visited.add(best)
        before = expected_constraints(graph, sorted(chosen))
        trial = sorted(chosen | {best})
        if expected_constraints(graph, trial) > before:
            chosen.add(best)
            continue
        break
    return sorted(chosen)


def _densest_by_peeling(graph: NoSuperiorGraph) -> list[int]:
    """Charikar-style peeling; at least half the optimum density."""
    degrees = {v: graph.degree(v) for v in graph.vertices}
    neighbours = {v: set(graph.adj[v]) for v in graph.vertices}
    remaining = set(graph.vertices)
    n_edges = graph.edge_count()

    best_density = -1.0
    best: list[int] = []
    while len(remaining) >= 2:
        density = graph_density_local(len(remaining), n_edges)
        if density > best_density:
            best_density = density
            best = sorted(remaining)
        victim = min(remaining, key=lambda v: (degrees[v], v))
        remaining.discard(victim)
        for u in neighbours[victim]:
            if u in remaining:
                degrees[u] -= 1
                n_edges -= 1
        degrees.pop(victim, None)
    return best


def graph_density_local(n_vertices: int, n_edges: int) -> float:
    return 2.0 * n_edges / (n_vertices * (n_vertices - 1))


def generate_constraints(
    graph: NoSuperiorGraph,
    shown: list[int],
    chosen: int,
    q: Query,
    objects: dict[int, GeoObject],
    d_max: float,
    lon_scale: float,
    round_no: int,
) -> list[Constraint]:
    """One constraint per shown rival whose order vs the pick is still open."""
    if chosen not in shown:
        raise ValidationError(f"chosen object {chosen} was not shown this round")
    phi_chosen = feature_map(q, objects[chosen], d_max, lon_scale)
    out: list[Constraint] = []
    for other in shown:
        if other == chosen or graph.order_known(chosen, other):
            continue
        phi_other = feature_map(q, objects[other], d_max, lon_scale)
        delta = tuple(a - b for a, b in zip(phi_chosen, phi_other))
        out.append(Constraint(chosen=chosen, rejected=other, round=round_no, delta=delta))
    return out


def filter_candidates(
    graph: NoSuperiorGraph, new_constraints: list[Constraint], k: int
) -> None:
    """Fold feedback into the order, then drop beaten-k-times candidates.

    Every newly ordered pair loses its unknown-order edge; every candidate
    with at least k known superiors among the current candidates is removed
    together with its incident edges.
    """
    for c in new_constraints:
        graph.add_order_fact(c.chosen, c.rejected)
    current = set(graph.vertices)
    doomed = [v for v in current if len(graph.superiors[v] & current) >= k]
    for v in doomed:
        graph.remove_vertex(v)


def should_terminate(
    graph: NoSuperiorGraph,
    k: int,
    round_no: int,
    config: InteractionConfig | None = None,
    user_stop: bool = False,
) -> TerminationDecision:
    cfg = config or InteractionConfig()
    reasons: list[TerminationReason] = []
    if len(graph.vertices) <= k:
        reasons.append(TerminationReason.CANDIDATES_EXHAUSTED)
    if graph.edge_count() == 0:
        reasons.append(TerminationReason.FULLY_ORDERED)
    if round_no >= cfg.max_rounds:
        reasons.append(TerminationReason.MAX_ROUNDS)
    if user_stop:
        reasons.append(TerminationReason.USER_STOP)
    return TerminationDecision(stop=bool(reasons), reasons=tuple(reasons))
