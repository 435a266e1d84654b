"""Brute-force reference implementations used only by tests and acceptance.

These share nothing with the engine beyond the model and scoring
primitives, so they stay valid checks of the index search, the selection
heuristics and the estimator.
"""

from __future__ import annotations

from itertools import combinations
from typing import Collection, Iterable

import numpy as np

from .model import GeoObject, PreferenceVector, Query, ValidationError, validate_dataset
from .scoring import f_prefer, geo_proximity, set_similarity

DEFAULT_CAP = 5000


def _geometry(
    objects: list[GeoObject], d_max: float | None, lon_scale: float | None
) -> tuple[float, float]:
    if d_max is None or lon_scale is None:
        summary = validate_dataset(objects)
        d_max = summary.d_max if d_max is None else d_max
        lon_scale = summary.lon_scale if lon_scale is None else lon_scale
    return d_max, lon_scale


def brute_k_superiors(
    objects: list[GeoObject],
    q: Query,
    d_max: float | None = None,
    lon_scale: float | None = None,
    cap: int = DEFAULT_CAP,
) -> set[int]:
    """Ids of all objects with fewer than k dominators, by full pairwise scan."""
    if len(objects) > cap:
        raise ValidationError(f"brute force capped at {cap} objects, got {len(objects)}")
    d_max, lon_scale = _geometry(objects, d_max, lon_scale)
    q_set = q.word_set

    prox = np.array(
        [geo_proximity(q.lon, q.lat, o.lon, o.lat, d_max, lon_scale) for o in objects]
    )
    sim = np.array([set_similarity(q_set, o.word_set) for o in objects])

    ge_p = prox[:, None] >= prox[None, :]
    ge_s = sim[:, None] >= sim[None, :]
    strict = (prox[:, None] > prox[None, :]) | (sim[:, None] > sim[None, :])
    dominated_by = ge_p & ge_s & strict  # [i, j]: i dominates j
    counts = dominated_by.sum(axis=0)
    return {o.id for o, c in zip(objects, counts) if c < q.k}


def brute_topk_prefer(
    objects: list[GeoObject],
    q: Query,
    p: PreferenceVector,
    k: int,
    d_max: float | None = None,
    lon_scale: float | None = None,
) -> list[GeoObject]:
    """Full ranking by preference score, ties broken by ascending id."""
    d_max, lon_scale = _geometry(objects, d_max, lon_scale)
    ranked = sorted(
        objects, key=lambda o: (-f_prefer(q, o, p, d_max, lon_scale), o.id)
    )
    return ranked[:k]


def graph_density(n_vertices: int, n_edges: int) -> float:
    """Edges over the maximum possible; defined for 2+ vertices."""
    if n_vertices < 2:
        raise ValidationError("density needs at least 2 vertices")
    return 2.0 * n_edges / (n_vertices * (n_vertices - 1))


def brute_densest_subgraph(
    vertices: Collection[int],
    edges: Iterable[tuple[int, int]],
    max_vertices: int = 16,
) -> frozenset[int]:
    """Exhaustive densest subgraph over all subsets of size >= 2.

    Ties go to the lexicographically smallest sorted vertex tuple, so a
    complete graph yields its two smallest ids.
    """
    verts = sorted(vertices)
    if len(verts) > max_vertices:
        raise ValidationError(
            f"exhaustive search capped at {max_vertices} vertices, got {len(verts)}"
        )
    edge_set = {frozenset(e) for e in edges}
    best_density = -1.0
    best: tuple[int, ...] | None = None
    for size in range(2, len(verts) + 1):
        for subset in combinations(verts, size):
            inside = sum(
                1 for a, b in combinations(subset, 2) if frozenset((a, b)) in edge_set
            )
            density = graph_density(size, inside)
            if density > best_density or (density == best_density and subset < best):
                best_density = density
                best = subset
    if best is None:
        raise ValidationError("graph needs at least 2 vertices")
    return frozenset(best)
