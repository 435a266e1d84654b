"""Dataset loading, saving and synthetic data generation.

The on-disk format is JSONL, UTF-8, one object per line:

    {"id": 7, "lat": 39.9, "lon": 116.4, "words": [3, 17, 42],
     "image_url": "http://...", "tags": ["street"]}

``image_url`` and ``tags`` are optional. The loader validates every record
against the model invariants and never silently repairs.
"""

from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np

from .model import GeoObject, ValidationError, validate_dataset

DEFAULT_BBOX = (-1.0, -1.0, 1.0, 1.0)  # min_lon, min_lat, max_lon, max_lat


def load_jsonl(path: str | Path) -> list[GeoObject]:
    """Read a dataset; raises ValidationError naming the offending line."""
    objects: list[GeoObject] = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                rec = json.loads(line)
                obj = GeoObject(
                    id=int(rec["id"]),
                    lon=float(rec["lon"]),
                    lat=float(rec["lat"]),
                    words=tuple(int(w) for w in rec["words"]),
                    image_url=rec.get("image_url"),
                    tags=tuple(rec["tags"]) if rec.get("tags") is not None else None,
                )
            except ValidationError as exc:
                raise ValidationError(f"line {lineno}: {exc}") from exc
            except (KeyError, TypeError, ValueError, json.JSONDecodeError) as exc:
                raise ValidationError(f"line {lineno}: malformed record: {exc}") from exc
            objects.append(obj)
    if not objects:
        raise ValidationError("empty dataset")
    validate_dataset(objects)
    return objects


def write_jsonl(objects: list[GeoObject], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for o in objects:
            rec: dict = {"id": o.id, "lat": o.lat, "lon": o.lon, "words": list(o.words)}
            if o.image_url is not None:
                rec["image_url"] = o.image_url
            if o.tags is not None:
                rec["tags"] = list(o.tags)
            fh.write(json.dumps(rec, separators=(",", ":")) + "\n")


def generate_synthetic(
    n: int,
    vocab_size: int = 1000,
    words_per_object_mean: float = 100.0,
    bbox: tuple[float, float, float, float] = DEFAULT_BBOX,
    seed: int = 0,
) -> list[GeoObject]:
    """Uniform locations, Zipf word frequencies, Poisson word-set sizes.

    Word ids are drawn without replacement with probability proportional to
    1/rank (Gumbel top-k), so frequent words co-occur the way heavy-tailed
    visual vocabularies do. Deterministic per seed.
    """
    if n < 1:
        raise ValidationError(f"n must be >= 1, got {n}")
    min_lon, min_lat, max_lon, max_lat = bbox
    rng = np.random.default_rng(seed)
    lons = rng.uniform(min_lon, max_lon, size=n)
    lats = rng.uniform(min_lat, max_lat, size=n)
    sizes = np.maximum(1, rng.poisson(words_per_object_mean, size=n))
    sizes = np.minimum(sizes, vocab_size)
    log_p = -np.log(np.arange(1, vocab_size + 1, dtype=np.float64))

    objects: list[GeoObject] = []
    for i in range(n):
        keys = log_p + rng.gumbel(size=vocab_size)
        s = int(sizes[i])
        chosen = np.argpartition(keys, vocab_size - s)[vocab_size - s :]
        words = tuple(sorted(int(w) for w in chosen))
        objects.append(GeoObject(id=i, lon=float(lons[i]), lat=float(lats[i]), words=words))
    return objects


def zipf_word_probabilities(vocab_size: int) -> np.ndarray:
    """The generator's word-frequency law, exposed for query sampling."""
    p = 1.0 / np.arange(1, vocab_size + 1, dtype=np.float64)
    return p / p.sum()


def sample_query_words(
    objects: list[GeoObject], t: int, rng: np.random.Generator
) -> tuple[int, ...]:
    """Draw t query words anchored on a random object so overlap is realistic.

    Takes up to t words from one object, topping up from other random
    objects when the anchor is too small.
    """
    if t < 1:
        raise ValidationError(f"t must be >= 1, got {t}")
    words: set[int] = set()
    order = rng.permutation(len(objects))
    for idx in order:
        pool = list(objects[int(idx)].words)
        rng.shuffle(pool)
        for w in pool:
            words.add(int(w))
            if len(words) == t:
                return tuple(sorted(words))
    # tiny corpora may not carry t distinct words; invent the remainder
    extra = int(max(w for o in objects for w in o.words)) + 1
    while len(words) < t:
        words.add(extra)
        extra += 1
    return tuple(sorted(words))


def poisson_mean_stat(objects: list[GeoObject]) -> float:
    return float(np.mean([len(o.words) for o in objects])) if objects else math.nan
