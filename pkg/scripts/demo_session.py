#!/usr/bin/env python3
"""Walk one simulated session end to end and print what happens per round.

Useful for eyeballing the round mechanics: shown candidates, the simulated
user's pick, graph shrinkage, and the final ranking against ground truth.
"""

import argparse
import random

import numpy as np

from geoprefer import girtree, ingest, oracle
from geoprefer.model import PreferenceVector, Query
from geoprefer.session import Phase, SimulatedUser, Strategy, start_session, submit_feedback


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--n", type=int, default=2000)
    ap.add_argument("--vocab", type=int, default=300)
    ap.add_argument("--mean-words", type=float, default=40.0)
    ap.add_argument("--t", type=int, default=8)
    ap.add_argument("--k", type=int, default=5)
    ap.add_argument("--theta", type=int, default=4)
    ap.add_argument("--strategy", choices=["densest", "random"], default="densest")
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    objects = ingest.generate_synthetic(
        args.n, vocab_size=args.vocab, words_per_object_mean=args.mean_words, seed=args.seed
    )
    tree = girtree.build(objects)
    rng = np.random.default_rng(args.seed)
    q = Query(
        lon=float(rng.uniform(-1, 1)),
        lat=float(rng.uniform(-1, 1)),
        words=ingest.sample_query_words(objects, args.t, rng),
        k=args.k,
        theta=args.theta,
    )
    p_rng = random.Random(args.seed)
    p_star = PreferenceVector(p_rng.random(), tuple(p_rng.random() for _ in q.words))
    user = SimulatedUser(p_star)

    session = start_session(tree, q, Strategy.parse(args.strategy), seed=args.seed)
    print(f"candidates after search: {len(session.candidates)} "
          f"(edges {session.graph.edge_count()})")
    while session.phase is Phase.INTERACTION:
        shown = session.current_shown
        pick = user.pick(session, shown)
        print(f"round {session.rounds[-1].round_no}: shown {list(shown)} -> pick {pick}")
        submit_feedback(session, pick)
        print(f"  candidates {len(session.graph.vertices)}, edges {session.graph.edge_count()}")

    truth = [o.id for o in oracle.brute_topk_prefer(
        objects, q, p_star, q.k, d_max=tree.d_max, lon_scale=tree.lon_scale)]
    got = [o.id for o, _ in session.results]
    overlap = len(set(truth) & set(got))
    print(f"terminated ({', '.join(r.value for r in session.termination_reasons)}) "
          f"after {len([r for r in session.rounds if r.chosen is not None])} rounds")
    print(f"final ids: {got}")
    print(f"truth ids: {truth}")
    print(f"precision: {overlap / len(got):.2f}")


if __name__ == "__main__":
    main()
