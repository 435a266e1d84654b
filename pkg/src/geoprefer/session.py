"""Per-query orchestration of the three stages: candidate search, feedback
rounds, and termination with preference estimation, plus the simulated user
used by the evaluation harness.
"""

from __future__ import annotations

import enum
import math
import random
import time
import uuid
from dataclasses import dataclass, field

from .estimation import EstimateResult, EstimatorConfig, estimate_preference, final_topk
from .girtree import GirTree, gi_super_search
from .interaction import (
    InteractionConfig,
    NoSuperiorGraph,
    RoundState,
    TerminationReason,
    build_graph,
    filter_candidates,
    generate_constraints,
    select_densest,
    select_random,
    should_terminate,
    undominated_shown,
)
from .model import Constraint, GeoObject, PreferenceVector, Query, ScorePair, ValidationError
from .oracle import brute_topk_prefer
from .scoring import f_prefer


class Strategy(enum.Enum):
    RANDOM = "random"
    DENSEST = "densest"

    @classmethod
    def parse(cls, name: str) -> "Strategy":
        try:
            return cls(name.lower())
        except ValueError:
            raise ValidationError(f"unknown strategy {name!r}") from None


class Phase(enum.Enum):
    CANDIDATE_SEARCH = "candidate_search"
    INTERACTION = "interaction"
    TERMINATED = "terminated"


@dataclass
class Session:
    id: str
    query: Query
    strategy: Strategy
    phase: Phase
    graph: NoSuperiorGraph
    candidates: dict[int, tuple[GeoObject, ScorePair]]
    rounds: list[RoundState] = field(default_factory=list)
    constraints: list[Constraint] = field(default_factory=list)
    # picks also beat rivals whose order was already known; those pairs add
    # no graph constraint but are still true facts worth estimating from
    implied_facts: list[Constraint] = field(default_factory=list)
    results: list[tuple[GeoObject, float]] | None = None
    estimate: EstimateResult | None = None
    termination_reasons: tuple[TerminationReason, ...] = ()
    round_ms: list[float] = field(default_factory=list)
    d_max: float = 0.0
    lon_scale: float = 1.0
    rng: random.Random = field(default_factory=random.Random)
    interaction_cfg: InteractionConfig = field(default_factory=InteractionConfig)
    estimator_cfg: EstimatorConfig = field(default_factory=EstimatorConfig)
    pick_outside_undominated: int = 0  # diagnostic, see SimulatedUser

    @property
    def current_shown(self) -> tuple[int, ...]:
        if not self.rounds:
            return ()
        return self.rounds[-1].shown

    def shown_objects(self) -> list[tuple[GeoObject, ScorePair]]:
        return [self.candidates[i] for i in self.current_shown]


@dataclass(frozen=True)
class SimulatedUser:
    """Always picks the true-preference favourite, ties by ascending id."""

    p_star: PreferenceVector

    def pick(
        self, session: Session, shown: tuple[int, ...]
    ) -> int:
        best = min(
            shown,
            key=lambda i: (
                -f_prefer(
                    session.query,
                    session.candidates[i][0],
                    self.p_star,
                    session.d_max,
                    session.lon_scale,
                ),
                i,
            ),
        )
        return best


@dataclass(frozen=True)
class SessionReport:
    session_id: str
    strategy: Strategy
    rounds_used: int
    precision: float
    recall: float
    f1: float
    round_ms: tuple[float, ...]
    result_ids: tuple[int, ...]
    truth_ids: tuple[int, ...]
    p_hat: PreferenceVector
    max_order_violation: float
    picks_outside_undominated: int

    @property
    def mean_ms_per_round(self) -> float:
        return sum(self.round_ms) / len(self.round_ms) if self.round_ms else 0.0


def _select(session: Session) -> list[int]:
    if session.strategy is Strategy.DENSEST:
        return select_densest(session.graph, session.query.theta, session.rng)
    return select_random(session.graph, session.query.theta, session.rng)


def _normalized_for_estimation(constraints: list[Constraint]) -> list[Constraint]:
    """Rescale feature deltas to unit length before estimation.

    Score ordering is invariant to per-constraint scale, but the margin is
    not: near-tie picks carry deltas at the feature resolution (1/|union|)
    and would otherwise dominate the min-norm solution. Unit rows give every
    recorded pick the same angular margin demand.
    """
    out = []
    for c in constraints:
        norm = math.sqrt(sum(d * d for d in c.delta))
        if norm == 0.0:
            continue
        out.append(
            Constraint(
                chosen=c.chosen,
                rejected=c.rejected,
                round=c.round,
                delta=tuple(d / norm for d in c.delta),
            )
        )
    return out


def _terminate(session: Session, reasons: tuple[TerminationReason, ...]) -> None:
    dim = len(session.query.words) + 1
    session.estimate = estimate_preference(
        _normalized_for_estimation(session.constraints + session.implied_facts),
        dim,
        session.estimator_cfg,
    )
    survivors = [session.candidates[i][0] for i in sorted(session.graph.vertices)]
    session.results = final_topk(
        survivors,
        session.query,
        session.estimate.preference,
        session.query.k,
        session.d_max,
        session.lon_scale,
        known_superiors=session.graph.superiors,
    )
    session.termination_reasons = reasons
    session.phase = Phase.TERMINATED


def start_session(
    tree: GirTree,
    q: Query,
    strategy: Strategy = Strategy.DENSEST,
    seed: int = 0,
    interaction_cfg: InteractionConfig | None = None,
    estimator_cfg: EstimatorConfig | None = None,
) -> Session:
    """Run the candidate search and open the first round (or finish at once)."""
    t0 = time.monotonic()
    candidates = gi_super_search(tree, q)
    if not candidates:
        raise ValidationError("candidate search returned no objects")
    graph = build_graph(candidates)
    session = Session(
        id=uuid.uuid4().hex,
        query=q,
        strategy=strategy,
        phase=Phase.INTERACTION,
        graph=graph,
        candidates={obj.id: (obj, sp) for obj, sp in candidates},
        d_max=tree.d_max,
        lon_scale=tree.lon_scale,
        rng=random.Random(seed),
        interaction_cfg=interaction_cfg or InteractionConfig(),
        estimator_cfg=estimator_cfg or EstimatorConfig(),
    )
    decision = should_terminate(graph, q.k, round_no=0, config=session.interaction_cfg)
    if decision.stop:
        _terminate(session, decision.reasons)
    else:
        shown = _select(session)
        session.rounds.append(RoundState(round_no=1, shown=tuple(shown)))
    session.round_ms.append((time.monotonic() - t0) * 1000.0)
    return session


def _implied_pick_facts(
    session: Session,
    this_round: RoundState,
    new_constraints: list[Constraint],
    objects_by_id: dict[int, GeoObject],
) -> list[Constraint]:
    """Pick facts for rivals that produced no constraint this round.

    Constraint generation skips pairs whose order is already known, on the
    premise that dominance implies preference for any weights; that premise
    fails for this score family (a dominated object can hold an exclusive
    high-weight query word), while the pick genuinely beats every shown
    rival. The skipped pairs are recorded for estimation only; graph and
    filtering semantics are untouched.
    """
    from .scoring import feature_map

    chosen = this_round.chosen
    assert chosen is not None
    covered = {(c.chosen, c.rejected) for c in session.constraints} | {
        (c.chosen, c.rejected) for c in session.implied_facts
    }
    covered |= {(c.chosen, c.rejected) for c in new_constraints}
    phi_chosen = feature_map(
        session.query, objects_by_id[chosen], session.d_max, session.lon_scale
    )
    out: list[Constraint] = []
    for other in this_round.shown:
        if other == chosen or (chosen, other) in covered:
            continue
        phi_other = feature_map(
            session.query, objects_by_id[other], session.d_max, session.lon_scale
        )
        delta = tuple(a - b for a, b in zip(phi_chosen, phi_other))
        out.append(
            Constraint(
                chosen=chosen, rejected=other, round=this_round.round_no, delta=delta
            )
        )
    return out


def submit_feedback(session: Session, chosen_id: int, user_stop: bool = False) -> Session:
    """Fold one pick into the session; advances to the next round or finishes."""
    if session.phase is not Phase.INTERACTION:
        raise ValidationError(f"session is {session.phase.value}, not accepting feedback")
    if chosen_id not in session.current_shown:
        raise ValidationError(f"object {chosen_id} was not shown this round")
    t0 = time.monotonic()
    this_round = session.rounds[-1]
    this_round.chosen = chosen_id

    objects_by_id = {i: obj for i, (obj, _) in session.candidates.items()}
    new_constraints = generate_constraints(
        session.graph,
        list(this_round.shown),
        chosen_id,
        session.query,
        objects_by_id,
        session.d_max,
        session.lon_scale,
        this_round.round_no,
    )
    session.constraints.extend(new_constraints)
    session.implied_facts.extend(
        _implied_pick_facts(session, this_round, new_constraints, objects_by_id)
    )
    filter_candidates(session.graph, new_constraints, session.query.k)

    decision = should_terminate(
        session.graph,
        session.query.k,
        round_no=this_round.round_no,
        config=session.interaction_cfg,
        user_stop=user_stop,
    )
    if decision.stop:
        _terminate(session, decision.reasons)
    else:
        shown = _select(session)
        session.rounds.append(RoundState(round_no=this_round.round_no + 1, shown=tuple(shown)))
    session.round_ms.append((time.monotonic() - t0) * 1000.0)
    return session


def stop_session(session: Session) -> Session:
    """Force termination: estimate from what has been learned so far."""
    if session.phase is Phase.TERMINATED:
        return session
    _terminate(session, (TerminationReason.USER_STOP,))
    return session


def simulate(
    tree: GirTree,
    q: Query,
    p_star: PreferenceVector,
    strategy: Strategy = Strategy.DENSEST,
    seed: int = 0,
    interaction_cfg: InteractionConfig | None = None,
    estimator_cfg: EstimatorConfig | None = None,
) -> SessionReport:
    """Drive a full session with the simulated user and score the outcome.

    Ground truth is the full-database preference ranking under the hidden
    vector; precision, recall and F1 compare the returned ids against it.
    """
    user = SimulatedUser(p_star)
    session = start_session(tree, q, strategy, seed, interaction_cfg, estimator_cfg)
    while session.phase is Phase.INTERACTION:
        shown = session.current_shown
        pick = user.pick(session, shown)
        if pick not in undominated_shown(session.graph, list(shown)):
            # dominance does not always track the hidden preference, so the
            # favourite can be a dominated object; record it, don't assert
            session.pick_outside_undominated += 1
        submit_feedback(session, pick)

    all_objects = tree.objects()
    truth = brute_topk_prefer(
        all_objects, q, p_star, q.k, d_max=tree.d_max, lon_scale=tree.lon_scale
    )
    truth_ids = tuple(o.id for o in truth)
    result_ids = tuple(o.id for o, _ in (session.results or []))
    overlap = len(set(result_ids) & set(truth_ids))
    beta = len(result_ids)
    gamma = len(truth_ids)
    precision = overlap / beta if beta else 0.0
    recall = overlap / gamma if gamma else 0.0
    f1 = (
        2.0 * precision * recall / (precision + recall)
        if (precision + recall) > 0
        else 0.0
    )
    assert session.estimate is not None
    return SessionReport(
        session_id=session.id,
        strategy=strategy,
        rounds_used=len([r for r in session.rounds if r.chosen is not None]),
        precision=precision,
        recall=recall,
        f1=f1,
        round_ms=tuple(session.round_ms),
        result_ids=result_ids,
        truth_ids=truth_ids,
        p_hat=session.estimate.preference,
        max_order_violation=session.estimate.max_order_violation,
        picks_outside_undominated=session.pick_outside_undominated,
    )
