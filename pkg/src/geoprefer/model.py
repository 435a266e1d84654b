"""Core domain types shared by every other module.

Locations are (lon, lat) in degrees. All distances are planar Euclidean
with the longitude axis scaled by the cosine of the dataset's mid
latitude; the scale and the normalising diameter ``d_max`` are frozen at
index-build time so proximity values stay stable across queries.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

LON_MIN, LON_MAX = -180.0, 180.0
LAT_MIN, LAT_MAX = -90.0, 90.0


class ValidationError(ValueError):
    """A dataset, query or record violates a structural invariant."""


def _check_words(words: tuple[int, ...], owner: str) -> None:
    for i in range(1, len(words)):
        if words[i] <= words[i - 1]:
            raise ValidationError(
                f"{owner}: words must be strictly ascending, got {words[i - 1]} "
                f"followed by {words[i]}"
            )


@dataclass(frozen=True)
class GeoObject:
    """One database record: id, 2-D location, visual-word set, display metadata."""

    id: int
    lon: float
    lat: float
    words: tuple[int, ...]
    image_url: str | None = None
    tags: tuple[str, ...] | None = None

    def __post_init__(self) -> None:
        _check_words(self.words, f"object {self.id}")

    @property
    def word_set(self) -> frozenset[int]:
        return frozenset(self.words)


@dataclass(frozen=True)
class Query:
    """A top-k query: location, query words, k, per-round budget theta, lambda."""

    lon: float
    lat: float
    words: tuple[int, ...]
    k: int = 20
    theta: int = 8
    lam: float = 0.5

    def __post_init__(self) -> None:
        if not self.words:
            raise ValidationError("query words must be non-empty")
        _check_words(self.words, "query")
        if self.k < 1:
            raise ValidationError(f"k must be >= 1, got {self.k}")
        if self.theta < 2:
            raise ValidationError(f"theta must be >= 2, got {self.theta}")
        if not 0.0 <= self.lam <= 1.0:
            raise ValidationError(f"lambda must be in [0, 1], got {self.lam}")

    @property
    def word_set(self) -> frozenset[int]:
        return frozenset(self.words)


@dataclass(frozen=True)
class PreferenceVector:
    """Geographic weight p0 plus one nonnegative weight per query word."""

    p0: float
    pw: tuple[float, ...]

    def __post_init__(self) -> None:
        if not math.isfinite(self.p0) or self.p0 < 0.0:
            raise ValidationError(f"p0 must be finite and >= 0, got {self.p0}")
        for i, w in enumerate(self.pw):
            if not math.isfinite(w) or w < 0.0:
                raise ValidationError(f"pw[{i}] must be finite and >= 0, got {w}")

    @classmethod
    def uniform(cls, dim: int) -> "PreferenceVector":
        return cls(1.0, (1.0,) * (dim - 1))

    def as_tuple(self) -> tuple[float, ...]:
        return (self.p0, *self.pw)


@dataclass(frozen=True)
class Constraint:
    """One feedback fact ``chosen is preferred over rejected`` from a round.

    ``delta`` is the precomputed feature difference phi(chosen) - phi(rejected),
    so the fact reads ``delta . p >= 0`` for the user's true preference p.
    """

    chosen: int
    rejected: int
    round: int
    delta: tuple[float, ...]

    def __post_init__(self) -> None:
        if self.chosen == self.rejected:
            raise ValidationError("constraint must relate two distinct objects")
        if self.round < 1:
            raise ValidationError(f"round must be >= 1, got {self.round}")
        for i, d in enumerate(self.delta):
            if not math.isfinite(d):
                raise ValidationError(f"delta[{i}] is not finite")


@dataclass(frozen=True)
class ScorePair:
    """The two dominance dimensions of one object under one query."""

    proximity: float
    similarity: float

    def __post_init__(self) -> None:
        for name, v in (("proximity", self.proximity), ("similarity", self.similarity)):
            if not (math.isfinite(v) and 0.0 <= v <= 1.0):
                raise ValidationError(f"{name} must be within [0, 1], got {v}")


@dataclass(frozen=True)
class DatasetSummary:
    """Geometry facts about a dataset, frozen at index-build time."""

    count: int
    bbox: tuple[float, float, float, float]  # min_lon, min_lat, max_lon, max_lat
    d_max: float
    lon_scale: float
    degenerate: bool = field(default=False)


def planar_distance(
    a_lon: float, a_lat: float, b_lon: float, b_lat: float, lon_scale: float = 1.0
) -> float:
    """Planar Euclidean distance in degrees, longitude scaled by ``lon_scale``."""
    return math.hypot((a_lon - b_lon) * lon_scale, a_lat - b_lat)


def validate_dataset(objects: list[GeoObject]) -> DatasetSummary:
    """Validate a dataset and compute its bounding box and diameter bound.

    ``d_max`` is the diagonal of the bounding box under the planar metric,
    hence an upper bound on any pairwise distance in the dataset.
    """
    if not objects:
        raise ValidationError("empty dataset")
    seen: set[int] = set()
    for o in objects:
        if o.id in seen:
            raise ValidationError(f"duplicate id {o.id}")
        seen.add(o.id)
        if not (LON_MIN <= o.lon <= LON_MAX):
            raise ValidationError(f"object {o.id}: longitude {o.lon} out of range")
        if not (LAT_MIN <= o.lat <= LAT_MAX):
            raise ValidationError(f"object {o.id}: latitude {o.lat} out of range")

    min_lon = min(o.lon for o in objects)
    max_lon = max(o.lon for o in objects)
    min_lat = min(o.lat for o in objects)
    max_lat = max(o.lat for o in objects)
    lon_scale = math.cos(math.radians((min_lat + max_lat) / 2.0))
    d_max = planar_distance(min_lon, min_lat, max_lon, max_lat, lon_scale)
    return DatasetSummary(
        count=len(objects),
        bbox=(min_lon, min_lat, max_lon, max_lat),
        d_max=d_max,
        lon_scale=lon_scale,
        degenerate=(d_max == 0.0),
    )
