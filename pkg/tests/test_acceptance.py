"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Criteria 3 and 6 exercise the containment claim that dominance on the
(proximity, set-similarity) pair implies preference order for every
nonnegative weight vector. That claim is false for weighted similarity:
with query {1,2,3}, words {2} dominate words {1,99} on both dimensions at
equal proximity, yet weights concentrated on word 1 rank the dominated
object higher. The two tests are implemented as stated and report the
measured violation rate rather than being weakened to pass.
"""

import math
import subprocess
import sys
import time
from pathlib import Path

import numpy as np
import pytest

from geoprefer import girtree, ingest, oracle
from geoprefer.estimation import EstimatorConfig, estimate_preference
from geoprefer.girtree import build, f_sort, gi_super_search
from geoprefer.interaction import _densest_by_peeling, NoSuperiorGraph
from geoprefer.model import GeoObject, PreferenceVector, Query, validate_dataset
from geoprefer.oracle import brute_densest_subgraph, brute_k_superiors, brute_topk_prefer
from geoprefer.scoring import (
    dominates,
    f_prefer,
    feature_map,
    geo_proximity,
    score_pair,
    set_similarity,
)
from geoprefer.session import (
    Phase,
    SimulatedUser,
    Strategy,
    simulate,
    start_session,
    submit_feedback,
)
from geoprefer.signature import SignatureConfig, similarity_upper_bound
from tests.conftest import make_query
from tests.test_estimation import con, grid_search_soft_minimum, random_feasible_system

DATA = Path(__file__).parent / "data"


def _report(num: int, ok: bool, detail: str) -> None:
    print(f"\n[{'PASS' if ok else 'FAIL'}] criterion {num}: {detail}")


def clustered_dataset(n, n_sites, vocab, topic_words, words_per_object, seed):
    """Landmark-style corpus: objects cluster at sites and share each site's
    topic vocabulary, mirroring the photo-collection structure the original
    evaluation corpus has and independent draws do not."""
    rng = np.random.default_rng(seed)
    site_lon = rng.uniform(-1, 1, size=n_sites)
    site_lat = rng.uniform(-1, 1, size=n_sites)
    log_p = -np.log(np.arange(1, vocab + 1))
    site_topics = []
    for s in range(n_sites):
        keys = log_p + rng.gumbel(size=vocab)
        site_topics.append(np.argpartition(keys, vocab - topic_words)[vocab - topic_words:])
    objects = []
    for i in range(n):
        s = int(rng.integers(n_sites))
        topic = site_topics[s]
        size = max(1, min(int(rng.poisson(words_per_object)), len(topic)))
        words = tuple(sorted(int(w) for w in rng.choice(topic, size=size, replace=False)))
        objects.append(
            GeoObject(
                id=i,
                lon=float(np.clip(site_lon[s] + rng.normal(0, 0.01), -1, 1)),
                lat=float(np.clip(site_lat[s] + rng.normal(0, 0.01), -1, 1)),
                words=words,
            )
        )
    return objects


# --------------------------------------------------------------------------
# criterion 1
# --------------------------------------------------------------------------


def test_criterion_1_gi_super_exactness():
    ks = (1, 5, 20)
    sizes = [100] * 100 + [500] * 60 + [2000] * 40
    t0 = time.monotonic()
    mismatches = 0
    for i, n in enumerate(sizes):
        objs = ingest.generate_synthetic(
            n, vocab_size=1000, words_per_object_mean=30, seed=10_000 + i
        )
        tree = build(objs, fanout=16)
        q = make_query(objs, seed=20_000 + i, t=6, k=ks[i % 3])
        engine = {o.id for o, _ in gi_super_search(tree, q)}
        brute = brute_k_superiors(objs, q, d_max=tree.d_max, lon_scale=tree.lon_scale)
        if engine != brute:
            mismatches += 1
    elapsed = time.monotonic() - t0
    ok = mismatches == 0 and elapsed < 60.0
    _report(
        1,
        ok,
        f"gi_super vs brute oracle on {len(sizes)} datasets: {mismatches} mismatches, "
        f"{elapsed:.1f}s (budget 60s)",
    )
    assert mismatches == 0
    assert elapsed < 60.0


# --------------------------------------------------------------------------
# criterion 2
# --------------------------------------------------------------------------


def test_criterion_2_pruning_safety_audit():
    violations = 0
    nodes_checked = 0
    for i in range(50):
        objs = ingest.generate_synthetic(
            150, vocab_size=120, words_per_object_mean=12, seed=30_000 + i
        )
        cfg = SignatureConfig(length_bits=128, bits_per_word=2, seed=i)
        tree = build(objs, fanout=4, sig_cfg=cfg)
        q = make_query(objs, seed=40_000 + i, t=5, k=4)
        for node in tree.root.iter_nodes():
            nodes_checked += 1
            bound = f_sort(q, node, tree.d_max, cfg, tree.lon_scale)
            sim_bound = similarity_upper_bound(q.words, node.sig, cfg)
            for oid in node.covered_ids():
                o = tree.object_store[oid]
                prox = geo_proximity(q.lon, q.lat, o.lon, o.lat, tree.d_max, tree.lon_scale)
                sim = set_similarity(q.word_set, o.word_set)
                if bound < prox + sim - 1e-12 or sim_bound < sim - 1e-12:
                    violations += 1
    ok = violations == 0
    _report(2, ok, f"bound admissibility over 50 trees ({nodes_checked} nodes): {violations} violations")
    assert violations == 0


# --------------------------------------------------------------------------
# criterion 3 — known-false containment claim, implemented as stated
# --------------------------------------------------------------------------


def test_criterion_3_dominance_implies_preference_order():
    rng = np.random.default_rng(99)
    samples = 0
    dominating = 0
    violations = 0
    while samples < 100_000:
        objs = ingest.generate_synthetic(
            400,
            vocab_size=150,
            words_per_object_mean=15,
            seed=int(rng.integers(2**31)),
        )
        t = int(rng.integers(4, 10))
        q = make_query(objs, seed=int(rng.integers(2**31)), t=t, k=3)
        summary = validate_dataset(objs)
        pairs = [score_pair(q, o, summary.d_max, summary.lon_scale) for o in objs]
        phis = [feature_map(q, o, summary.d_max, summary.lon_scale) for o in objs]
        for _ in range(5000):
            samples += 1
            i, j = rng.integers(len(objs)), rng.integers(len(objs))
            if i == j:
                continue
            a, b = int(i), int(j)
            if not dominates(pairs[a], pairs[b]):
                continue
            dominating += 1
            p = rng.uniform(0.0, 1.0, size=t + 1)
            fa = float(np.dot(phis[a], p))
            fb = float(np.dot(phis[b], p))
            if fa < fb - 1e-12:
                violations += 1
            if samples >= 100_000:
                break
    ok = violations == 0
    _report(
        3,
        ok,
        f"{samples} random (pair, p) samples, {dominating} dominating pairs, "
        f"{violations} preference-order violations (the containment claim is "
        f"false for weighted similarity; see the module docstring)",
    )
    assert violations == 0, (
        f"{violations} violations: dominance does not imply preference order "
        "for arbitrary nonnegative weights (known defect, see module docstring)"
    )


# --------------------------------------------------------------------------
# criterion 4
# --------------------------------------------------------------------------


def test_criterion_4_densest_subgraph_quality():
    import itertools

    rng = np.random.default_rng(4)
    failures = 0
    checked = 0
    for _ in range(200):
        n = int(rng.integers(4, 13))
        p_edge = float(rng.uniform(0.15, 0.7))
        g = NoSuperiorGraph()
        for v in range(n):
            g.add_vertex(v)
        for a, b in itertools.combinations(range(n), 2):
            if rng.random() < p_edge:
                g.add_edge(a, b)
        if g.edge_count() == 0:
            continue
        checked += 1
        peeled = _densest_by_peeling(g)
        edge_set = g.edges()
        inside = sum(
            1 for e in itertools.combinations(sorted(peeled), 2) if tuple(sorted(e)) in edge_set
        )
        peel_density = 2.0 * inside / (len(peeled) * (len(peeled) - 1))
        best = brute_densest_subgraph(g.vertices, edge_set)
        best_inside = sum(
            1 for e in itertools.combinations(sorted(best), 2) if tuple(sorted(e)) in edge_set
        )
        best_density = 2.0 * best_inside / (len(best) * (len(best) - 1))
        if peel_density < 0.5 * best_density - 1e-12:
            failures += 1
    ok = failures == 0
    _report(4, ok, f"greedy peeling vs exhaustive optimum on {checked} graphs: {failures} below half-optimal")
    assert failures == 0


# --------------------------------------------------------------------------
# criterion 5 (solver fidelity + session reproduction)
# --------------------------------------------------------------------------


def test_criterion_5a_estimator_vs_grid_oracle():
    dims = [2] * 50 + [3] * 45 + [4] * 5
    worst_gap = 0.0
    failures = 0
    for i, dim in enumerate(dims):
        deltas, expected = random_feasible_system(50_000 + i, dim)
        cons = [con(tuple(d)) for d in deltas]
        cfg = EstimatorConfig()
        res = estimate_preference(cons, dim=dim, cfg=cfg)
        box = 2.0 if dim < 4 else 1.2
        oracle_obj = grid_search_soft_minimum(deltas, cfg, box_hi=box)
        gap = abs(res.objective - oracle_obj) / oracle_obj
        worst_gap = max(worst_gap, gap)
        if gap > 0.01:
            failures += 1
        assert res.objective == pytest.approx(expected, rel=3e-3)
    ok = failures == 0
    _report(
        5,
        ok,
        f"(a) solver within 1% of 0.01-grid oracle on {len(dims)} systems "
        f"(worst gap {worst_gap:.3%}, {failures} over)",
    )
    assert failures == 0


@pytest.fixture(scope="module")
def session_batch():
    """100 desk-scale simulated sessions shared by criteria 5b and 6."""
    out = []
    for i in range(100):
        rng = np.random.default_rng(5000 + i)
        n = int(rng.integers(300, 700))
        objects = ingest.generate_synthetic(
            n,
            vocab_size=int(rng.integers(80, 300)),
            words_per_object_mean=float(rng.uniform(10, 40)),
            seed=5000 + i,
        )
        tree = build(objects, fanout=8)
        t = int(rng.integers(4, 10))
        k = int(rng.choice([3, 5, 10]))
        q = Query(
            lon=float(rng.uniform(-1, 1)),
            lat=float(rng.uniform(-1, 1)),
            words=ingest.sample_query_words(objects, t, rng),
            k=k,
            theta=int(rng.integers(3, 7)),
        )
        vals = rng.uniform(0.0, 1.0, size=t + 1)
        p_star = PreferenceVector(float(vals[0]), tuple(float(v) for v in vals[1:]))
        strategy = Strategy.DENSEST if i % 2 == 0 else Strategy.RANDOM
        user = SimulatedUser(p_star)
        session = start_session(tree, q, strategy, seed=5000 + i)
        truth = {
            o.id
            for o in brute_topk_prefer(
                objects, q, p_star, k, d_max=tree.d_max, lon_scale=tree.lon_scale
            )
        }
        truth_in_candidates = truth & set(session.candidates)
        sizes = [(len(session.graph.vertices), session.graph.edge_count())]
        duality_ok = True
        while session.phase is Phase.INTERACTION:
            submit_feedback(session, user.pick(session, session.current_shown))
            sizes.append((len(session.graph.vertices), session.graph.edge_count()))
            try:
                session.graph.check_duality()
            except AssertionError:
                duality_ok = False
        out.append(
            {
                "session": session,
                "q": q,
                "p_star": p_star,
                "truth_in_candidates": truth_in_candidates,
                "sizes": sizes,
                "duality_ok": duality_ok,
            }
        )
    return out


def test_criterion_5b_session_pick_reproduction(session_batch):
    bad_sessions = 0
    worst = 0.0
    for rec in session_batch:
        s = rec["session"]
        p_hat = s.estimate.preference
        failed = False
        for r in s.rounds:
            if r.chosen is None:
                continue
            fc = f_prefer(s.query, s.candidates[r.chosen][0], p_hat, s.d_max, s.lon_scale)
            for o in r.shown:
                if o == r.chosen:
                    continue
                fo = f_prefer(s.query, s.candidates[o][0], p_hat, s.d_max, s.lon_scale)
                worst = max(worst, fo - fc)
                if fo - fc > 1e-8:
                    failed = True
        bad_sessions += failed
    ok = bad_sessions == 0
    _report(
        5,
        ok,
        f"(b) pick reproduction across 100 sessions: {bad_sessions} sessions with a "
        f"beaten pick (worst gap {worst:.2e}, ties allowed)",
    )
    assert bad_sessions == 0


# --------------------------------------------------------------------------
# criterion 6 — third clause inherits the criterion-3 defect
# --------------------------------------------------------------------------


def test_criterion_6_interaction_monotonicity(session_batch):
    monotone_bad = 0
    duality_bad = 0
    filtered_truth_sessions = 0
    for rec in session_batch:
        sizes = rec["sizes"]
        if any(
            nxt[0] > prev[0] or nxt[1] > prev[1]
            for nxt, prev in zip(sizes[1:], sizes[:-1])
        ):
            monotone_bad += 1
        if not rec["duality_ok"]:
            duality_bad += 1
        if rec["truth_in_candidates"] - rec["session"].graph.vertices:
            filtered_truth_sessions += 1
    ok = monotone_bad == 0 and duality_bad == 0 and filtered_truth_sessions == 0
    _report(
        6,
        ok,
        f"100 sessions: {monotone_bad} non-monotone graphs, {duality_bad} duality/order "
        f"errors, {filtered_truth_sessions} sessions where filtering dropped a true "
        f"top-k member (the drop clause inherits the criterion-3 defect)",
    )
    assert monotone_bad == 0
    assert duality_bad == 0
    assert filtered_truth_sessions == 0, (
        "filtering removed a true top-k member in "
        f"{filtered_truth_sessions} of 100 sessions (known defect, see module docstring)"
    )


# --------------------------------------------------------------------------
# criterion 7
# --------------------------------------------------------------------------


def test_criterion_7_strategy_trend():
    t0 = time.monotonic()
    objects = clustered_dataset(
        10_000, n_sites=160, vocab=2000, topic_words=150, words_per_object=100, seed=777
    )
    tree = build(objects, fanout=32)
    precisions = {Strategy.DENSEST: [], Strategy.RANDOM: []}
    for i in range(24):
        rng = np.random.default_rng(1000 + i)
        q = Query(
            lon=float(rng.uniform(-1, 1)),
            lat=float(rng.uniform(-1, 1)),
            words=ingest.sample_query_words(objects, 100, rng),
            k=20,
            theta=8,
        )
        vals = rng.uniform(0.0, 1.0, size=101)
        p_star = PreferenceVector(float(vals[0]), tuple(float(v) for v in vals[1:]))
        for strategy in precisions:
            report = simulate(tree, q, p_star, strategy, seed=1000 + i)
            precisions[strategy].append(report.precision)
    elapsed = time.monotonic() - t0
    densest = float(np.mean(precisions[Strategy.DENSEST]))
    rand = float(np.mean(precisions[Strategy.RANDOM]))
    ok = densest >= rand and densest >= 0.70 and elapsed < 600
    _report(
        7,
        ok,
        f"24 seeds at N=10^4, k=20, t=100, theta=8: densest {densest:.3f} vs "
        f"random {rand:.3f} (bar 0.70), {elapsed:.0f}s (budget 600s)",
    )
    assert densest >= rand
    assert densest >= 0.70
    assert elapsed < 600


# --------------------------------------------------------------------------
# criterion 8
# --------------------------------------------------------------------------


def _run_cli(*args):
    proc = subprocess.run(
        [sys.executable, "-m", "geoprefer", *args], capture_output=True, text=True
    )
    assert proc.returncode == 0, proc.stderr
    return proc.stdout


def test_criterion_8_determinism(tmp_path):
    idx = tmp_path / "fixture.idx"
    _run_cli(
        "index", "build", "--data", str(DATA / "fixture_200.jsonl"),
        "--out", str(idx), "--fanout", "8", "--seed", "7",
    )
    query_args = (
        "query", "--index", str(idx), "--lat", "0.15", "--lon", "-0.35",
        "--words", "0,1,2,4,7,12", "--k", "5", "--theta", "4",
        "--strategy", "densest", "--seed", "11", "--simulate-p", "uniform",
    )
    eval_args = (
        "eval", "--index", str(idx), "--sessions", "6", "--k", "5", "--theta", "4",
        "--t", "6", "--strategy", "both", "--seed", "3", "--no-timing",
    )
    query_same = _run_cli(*query_args) == _run_cli(*query_args)
    eval_same = _run_cli(*eval_args) == _run_cli(*eval_args)
    ok = query_same and eval_same
    _report(
        8,
        ok,
        f"byte-identical reruns: query {'yes' if query_same else 'NO'}, "
        f"eval {'yes' if eval_same else 'NO'} (eval timing pinned via --no-timing)",
    )
    assert query_same and eval_same
