"""Similarity, score and preference functions plus the superiority relation.

Superiority ("dominance") is the skyline relation on the normalized
(proximity, similarity) pair: closer AND more similar wins, with at
least one strict improvement. Ties produce no domination in either
direction so duplicate objects cannot eliminate each other.
"""

from __future__ import annotations

import enum
from collections.abc import Collection, Sequence

from .model import GeoObject, PreferenceVector, Query, ScorePair, planar_distance


class DominanceOutcome(enum.Enum):
    FIRST_DOMINATES = "first"
    SECOND_DOMINATES = "second"
    INCOMPARABLE = "incomparable"
    EQUAL = "equal"


def geo_proximity(
    q_lon: float,
    q_lat: float,
    o_lon: float,
    o_lat: float,
    d_max: float,
    lon_scale: float = 1.0,
) -> float:
    """Normalized proximity 1 - dist/d_max, clamped to [0, 1].

    A degenerate dataset (d_max = 0) makes every location equally close:
    returns 1.0.
    """
    if d_max <= 0.0:
        return 1.0
    dist = planar_distance(q_lon, q_lat, o_lon, o_lat, lon_scale)
    prox = 1.0 - dist / d_max
    return min(1.0, max(0.0, prox))


def set_similarity(a: Collection[int], b: Collection[int]) -> float:
    """Jaccard similarity of two word sets; two empty sets give 0.0."""
    a = a if isinstance(a, (set, frozenset)) else frozenset(a)
    b = b if isinstance(b, (set, frozenset)) else frozenset(b)
    union = len(a | b)
    if union == 0:
        return 0.0
    return len(a & b) / union


def weighted_similarity(
    q_words: Sequence[int], o_words: Collection[int], pw: Sequence[float]
) -> float:
    """Weight-set similarity linear in the per-word weights.

    Sums the weights of the matched query words and divides by the size of
    the union of the two word sets (the denominator's value under uniform
    unit weights, which keeps the unit-weight case equal to set_similarity).
    """
    o_set = o_words if isinstance(o_words, (set, frozenset)) else frozenset(o_words)
    union = len(o_set | set(q_words))
    if union == 0:
        return 0.0
    matched = sum(w for q_w, w in zip(q_words, pw) if q_w in o_set)
    return matched / union


def f_score(q: Query, o: GeoObject, d_max: float, lon_scale: float = 1.0) -> float:
    """lambda-blend of proximity and unweighted similarity."""
    prox = geo_proximity(q.lon, q.lat, o.lon, o.lat, d_max, lon_scale)
    sim = set_similarity(q.word_set, o.word_set)
    return q.lam * prox + (1.0 - q.lam) * sim


def f_prefer(
    q: Query,
    o: GeoObject,
    p: PreferenceVector,
    d_max: float,
    lon_scale: float = 1.0,
) -> float:
    """Preference score p0 * proximity + weighted similarity.

    Equals the dot product of ``p`` with ``feature_map(q, o, ...)``.
    """
    prox = geo_proximity(q.lon, q.lat, o.lon, o.lat, d_max, lon_scale)
    return p.p0 * prox + weighted_similarity(q.words, o.word_set, p.pw)


def feature_map(
    q: Query, o: GeoObject, d_max: float, lon_scale: float = 1.0
) -> tuple[float, ...]:
    """Linear feature vector phi(o) of length t+1.

    phi[0] is the proximity; phi[i] is 1/|q union o| when query word i is
    present in the object and 0 otherwise, so f_prefer(q, o, p) == phi . p.
    """
    prox = geo_proximity(q.lon, q.lat, o.lon, o.lat, d_max, lon_scale)
    o_set = o.word_set
    union = len(o_set | q.word_set)
    if union == 0:
        return (prox,) + (0.0,) * len(q.words)
    inv = 1.0 / union
    return (prox,) + tuple(inv if w in o_set else 0.0 for w in q.words)


def dominance(a: ScorePair, b: ScorePair) -> DominanceOutcome:
    """Skyline comparison of two score pairs."""
    if a.proximity == b.proximity and a.similarity == b.similarity:
        return DominanceOutcome.EQUAL
    if a.proximity >= b.proximity and a.similarity >= b.similarity:
        return DominanceOutcome.FIRST_DOMINATES
    if b.proximity >= a.proximity and b.similarity >= a.similarity:
        return DominanceOutcome.SECOND_DOMINATES
    return DominanceOutcome.INCOMPARABLE


def dominates(a: ScorePair, b: ScorePair) -> bool:
    return (
        a.proximity >= b.proximity
        and a.similarity >= b.similarity
        and (a.proximity > b.proximity or a.similarity > b.similarity)
    )


def score_pair(q: Query, o: GeoObject, d_max: float, lon_scale: float = 1.0) -> ScorePair:
    """Cache both dominance dimensions of one object under one query."""
    return ScorePair(
        proximity=geo_proximity(q.lon, q.lat, o.lon, o.lat, d_max, lon_scale),
        similarity=set_similarity(q.word_set, o.word_set),
    )
