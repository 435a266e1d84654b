import random

import numpy as np
import pytest

from geoprefer import girtree, ingest
from geoprefer.model import GeoObject, PreferenceVector, Query


def make_objects(n, seed, vocab=200, mean_words=25, bbox=(-1.0, -1.0, 1.0, 1.0)):
    return ingest.generate_synthetic(
        n, vocab_size=vocab, words_per_object_mean=mean_words, bbox=bbox, seed=seed
    )


def make_query(objects, seed, t=6, k=5, theta=4, lam=0.5):
    rng = np.random.default_rng(seed)
    words = ingest.sample_query_words(objects, t, rng)
    min_lon = min(o.lon for o in objects)
    max_lon = max(o.lon for o in objects)
    min_lat = min(o.lat for o in objects)
    max_lat = max(o.lat for o in objects)
    return Query(
        lon=float(rng.uniform(min_lon, max_lon)),
        lat=float(rng.uniform(min_lat, max_lat)),
        words=words,
        k=k,
        theta=theta,
        lam=lam,
    )


def random_preference(t, seed, low=0.0):
    rng = random.Random(seed)
    return PreferenceVector(
        low + (1.0 - low) * rng.random(),
        tuple(low + (1.0 - low) * rng.random() for _ in range(t)),
    )


@pytest.fixture(scope="session")
def small_world():
    objects = make_objects(300, seed=11)
    tree = girtree.build(objects, fanout=8)
    return objects, tree


@pytest.fixture
def grid_objects():
    # deterministic 4x4 grid with nested word sets; handy for exact cases
    objs = []
    oid = 0
    for i in range(4):
        for j in range(4):
            words = tuple(range(1, 2 + i + j))
            objs.append(GeoObject(id=oid, lon=float(i), lat=float(j), words=words))
            oid += 1
    return objs
