import json

import numpy as np
import pytest

from geoprefer import ingest
from geoprefer.model import GeoObject, ValidationError


class TestJsonl:
    def test_round_trip_preserves_every_field(self, tmp_path):
        objs = [
            GeoObject(id=1, lon=0.5, lat=-0.25, words=(1, 5, 9), image_url="http://x/1.jpg"),
            GeoObject(id=2, lon=-0.5, lat=0.75, words=(2,), tags=("street", "bag")),
            GeoObject(id=3, lon=0.0, lat=0.0, words=(0, 7)),
        ]
        path = tmp_path / "d.jsonl"
        ingest.write_jsonl(objs, path)
        assert ingest.load_jsonl(path) == objs

    def test_empty_file(self, tmp_path):
        path = tmp_path / "e.jsonl"
        path.write_text("")
        with pytest.raises(ValidationError, match="empty dataset"):
            ingest.load_jsonl(path)

    def test_malformed_line_reports_line_number(self, tmp_path):
        path = tmp_path / "bad.jsonl"
        path.write_text('{"id": 1, "lat": 0, "lon": 0, "words": [1]}\nnot json\n')
        with pytest.raises(ValidationError, match="line 2"):
            ingest.load_jsonl(path)

    def test_invalid_words_reports_line_number(self, tmp_path):
        path = tmp_path / "bad.jsonl"
        path.write_text('{"id": 1, "lat": 0, "lon": 0, "words": [3, 1]}\n')
        with pytest.raises(ValidationError, match="line 1"):
            ingest.load_jsonl(path)

    def test_hundred_line_fixture(self, tmp_path):
        objs = ingest.generate_synthetic(100, vocab_size=50, words_per_object_mean=8, seed=5)
        path = tmp_path / "hundred.jsonl"
        ingest.write_jsonl(objs, path)
        assert len(ingest.load_jsonl(path)) == 100

    def test_loader_rejects_duplicate_ids(self, tmp_path):
        path = tmp_path / "dup.jsonl"
        rec = json.dumps({"id": 9, "lat": 0, "lon": 0, "words": [1]})
        path.write_text(rec + "\n" + rec + "\n")
        with pytest.raises(ValidationError, match="duplicate id 9"):
            ingest.load_jsonl(path)


class TestGenerator:
    def test_seed_determinism(self):
        a = ingest.generate_synthetic(50, vocab_size=80, words_per_object_mean=10, seed=3)
        b = ingest.generate_synthetic(50, vocab_size=80, words_per_object_mean=10, seed=3)
        assert a == b

    def test_coordinates_inside_bbox(self):
        bbox = (10.0, 20.0, 11.0, 21.0)
        objs = ingest.generate_synthetic(200, vocab_size=40, words_per_object_mean=6, bbox=bbox, seed=1)
        for o in objs:
            assert bbox[0] <= o.lon <= bbox[2]
            assert bbox[1] <= o.lat <= bbox[3]

    def test_word_sets_valid(self):
        objs = ingest.generate_synthetic(100, vocab_size=60, words_per_object_mean=12, seed=2)
        for o in objs:
            assert list(o.words) == sorted(set(o.words))
            assert len(o.words) >= 1

    def test_mean_word_count_near_target(self):
        objs = ingest.generate_synthetic(
            10_000, vocab_size=2000, words_per_object_mean=100.0, seed=7
        )
        mean = np.mean([len(o.words) for o in objs])
        assert abs(mean - 100.0) / 100.0 < 0.05

    def test_heavy_tailed_word_frequencies(self):
        objs = ingest.generate_synthetic(500, vocab_size=100, words_per_object_mean=10, seed=4)
        counts = np.zeros(100)
        for o in objs:
            for w in o.words:
                counts[w] += 1
        # zipf head should dwarf the tail
        assert counts[:10].sum() > counts[50:].sum()
