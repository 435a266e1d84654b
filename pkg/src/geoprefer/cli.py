"""Operator command line: indexing, querying, serving and evaluation.

Every flag can be overridden by an environment variable named after it with
the ``GEOPREFER_`` prefix (``--sig-bits`` becomes ``GEOPREFER_SIG_BITS``).
All randomness flows from explicit seeds, so identical invocations print
byte-identical output; the one exception is wall-clock timing in ``eval``,
which ``--no-timing`` pins to zero for reproducible runs.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import ingest
from .estimation import EstimatorConfig
from .girtree import build, load_index, save_index
from .interaction import InteractionConfig
from .model import PreferenceVector, Query, ValidationError
from .session import Phase, SimulatedUser, Strategy, simulate, start_session, submit_feedback
from .signature import SignatureConfig


def _env(flag: str, default):
    return os.environ.get("GEOPREFER_" + flag.upper().replace("-", "_"), default)


def _jline(payload: dict) -> str:
    return json.dumps(payload, sort_keys=True, separators=(",", ":"))


def _parse_bbox(text: str) -> tuple[float, float, float, float]:
    parts = [float(x) for x in text.split(",")]
    if len(parts) != 4:
        raise ValidationError("bbox must be min_lon,min_lat,max_lon,max_lat")
    return (parts[0], parts[1], parts[2], parts[3])


def _parse_preference(text: str, dim: int) -> PreferenceVector:
    if text == "uniform":
        return PreferenceVector.uniform(dim)
    if text.startswith("random:"):
        rng = np.random.default_rng(int(text.split(":", 1)[1]))
        vals = rng.uniform(0.0, 1.0, size=dim)
        return PreferenceVector(float(vals[0]), tuple(float(v) for v in vals[1:]))
    data = json.loads(Path(text).read_text(encoding="utf-8"))
    pw = tuple(float(x) for x in data["pw"])
    if len(pw) != dim - 1:
        raise ValidationError(f"preference file has {len(pw)} weights, query needs {dim - 1}")
    return PreferenceVector(float(data["p0"]), pw)


def _cmd_gen(args: argparse.Namespace) -> int:
    objects = ingest.generate_synthetic(
        n=args.n,
        vocab_size=args.vocab,
        words_per_object_mean=args.mean_words,
        bbox=_parse_bbox(args.bbox),
        seed=args.seed,
    )
    ingest.write_jsonl(objects, args.out)
    print(f"wrote {len(objects)} objects to {args.out}")
    return 0


def _cmd_index_build(args: argparse.Namespace) -> int:
    objects = ingest.load_jsonl(args.data)
    cfg = SignatureConfig(
        length_bits=args.sig_bits, bits_per_word=args.bits_per_word, seed=args.seed
    )
    tree = build(objects, fanout=args.fanout, sig_cfg=cfg)
    save_index(tree, args.out)
    print(
        f"indexed {len(objects)} objects (height {tree.height()}, "
        f"d_max {tree.d_max:.6f}) into {args.out}"
    )
    return 0


def _shown_payload(session) -> list[dict]:
    out = []
    for oid in session.current_shown:
        obj, sp = session.candidates[oid]
        out.append(
            {"id": obj.id, "proximity": sp.proximity, "similarity": sp.similarity}
        )
    return out


def _result_payload(session) -> dict:
    assert session.results is not None and session.estimate is not None
    p = session.estimate.preference
    return {
        "results": [
            {"id": o.id, "score": s, "lat": o.lat, "lon": o.lon}
            for o, s in session.results
        ],
        "rounds_used": len([r for r in session.rounds if r.chosen is not None]),
        "p_hat": {"p0": p.p0, "words": list(session.query.words), "weights": list(p.pw)},
    }


def _cmd_query(args: argparse.Namespace) -> int:
    tree = load_index(args.index)
    words = tuple(sorted({int(w) for w in args.words.split(",")}))
    q = Query(
        lon=args.lon, lat=args.lat, words=words, k=args.k, theta=args.theta, lam=args.lam
    )
    strategy = Strategy.parse(args.strategy)
    user = None
    if args.simulate_p is not None:
        user = SimulatedUser(_parse_preference(args.simulate_p, len(words) + 1))

    session = start_session(tree, q, strategy, args.seed)
    while session.phase is Phase.INTERACTION:
        print(_jline({"round": session.rounds[-1].round_no, "shown": _shown_payload(session)}))
        if user is not None:
            pick = user.pick(session, session.current_shown)
        else:
            print(
                f"round {session.rounds[-1].round_no}: enter the id of your favourite "
                f"shown object:",
                file=sys.stderr,
            )
            line = sys.stdin.readline()
            if not line:
                raise ValidationError("stdin closed before the session terminated")
            pick = int(line.strip())
        print(_jline({"chosen": pick, "round": session.rounds[-1].round_no}))
        submit_feedback(session, pick)
    print(_jline(_result_payload(session)))
    return 0


def _cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    from .service import create_app

    tree = load_index(args.index)
    host, _, port = args.listen.rpartition(":")
    app = create_app(tree)
    uvicorn.run(app, host=host or "127.0.0.1", port=int(port), log_level="warning")
    return 0


def _cmd_eval(args: argparse.Namespace) -> int:
    tree = load_index(args.index)
    objects = tree.objects()
    strategies = (
        [Strategy.DENSEST, Strategy.RANDOM]
        if args.strategy == "both"
        else [Strategy.parse(args.strategy)]
    )
    min_lon, min_lat, max_lon, max_lat = tree.summary.bbox

    rows = []
    for strategy in strategies:
        precisions, recalls, f1s, round_counts, ms = [], [], [], [], []
        for i in range(args.sessions):
            rng = np.random.default_rng(args.seed + i)
            q = Query(
                lon=float(rng.uniform(min_lon, max_lon)),
                lat=float(rng.uniform(min_lat, max_lat)),
                words=ingest.sample_query_words(objects, args.t, rng),
                k=args.k,
                theta=args.theta,
                lam=args.lam,
            )
            vals = rng.uniform(0.0, 1.0, size=args.t + 1)
            p_star = PreferenceVector(float(vals[0]), tuple(float(v) for v in vals[1:]))
            report = simulate(
                tree,
                q,
                p_star,
                strategy,
                seed=args.seed + i,
                interaction_cfg=InteractionConfig(max_rounds=args.max_rounds),
                estimator_cfg=EstimatorConfig(),
            )
            precisions.append(report.precision)
            recalls.append(report.recall)
            f1s.append(report.f1)
            round_counts.append(report.rounds_used)
            ms.append(report.mean_ms_per_round)
        mean_ms = 0.0 if args.no_timing else float(np.mean(ms))
        rows.append(
            f"{strategy.value},{args.k},{args.theta},{args.t},"
            f"{np.mean(precisions):.6f},{np.mean(recalls):.6f},{np.mean(f1s):.6f},"
            f"{mean_ms:.3f},{np.mean(round_counts):.3f}"
        )

    out = "strategy,k,theta,t,precision,recall,f1,mean_ms_per_round,mean_rounds\n"
    out += "".join(r + "\n" for r in rows)
    if args.out:
        Path(args.out).write_text(out, encoding="utf-8")
    else:
        sys.stdout.write(out)
    return 0


def _index_flag(parser: argparse.ArgumentParser) -> None:
    env = _env("index", None)
    parser.add_argument("--index", default=env, required=env is None)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="geoprefer")
    sub = parser.add_subparsers(dest="command", required=True)

    p_gen = sub.add_parser("gen", help="generate a synthetic JSONL dataset")
    p_gen.add_argument("--n", type=int, required=True)
    p_gen.add_argument("--vocab", type=int, default=int(_env("vocab", 1000)))
    p_gen.add_argument("--mean-words", type=float, default=float(_env("mean-words", 100.0)))
    p_gen.add_argument("--seed", type=int, default=int(_env("seed", 0)))
    p_gen.add_argument("--bbox", default=_env("bbox", "-1,-1,1,1"))
    p_gen.add_argument("--out", required=True)
    p_gen.set_defaults(func=_cmd_gen)

    p_index = sub.add_parser("index", help="index operations")
    index_sub = p_index.add_subparsers(dest="index_command", required=True)
    p_build = index_sub.add_parser("build", help="bulk-load an index from JSONL")
    p_build.add_argument("--data", required=True)
    p_build.add_argument("--out", required=True)
    p_build.add_argument("--fanout", type=int, default=int(_env("fanout", 32)))
    p_build.add_argument("--sig-bits", type=int, default=int(_env("sig-bits", 512)))
    p_build.add_argument(
        "--bits-per-word", type=int, default=int(_env("bits-per-word", 2))
    )
    p_build.add_argument("--seed", type=int, default=int(_env("seed", 0)))
    p_build.set_defaults(func=_cmd_index_build)

    p_query = sub.add_parser("query", help="run one interactive query")
    _index_flag(p_query)
    p_query.add_argument("--lat", type=float, required=True)
    p_query.add_argument("--lon", type=float, required=True)
    p_query.add_argument("--words", required=True, help="comma-separated word ids")
    p_query.add_argument("--k", type=int, default=int(_env("k", 20)))
    p_query.add_argument("--theta", type=int, default=int(_env("theta", 8)))
    p_query.add_argument(
        "--lambda", dest="lam", type=float, default=float(_env("lambda", 0.5))
    )
    p_query.add_argument(
        "--strategy", choices=["densest", "random"], default=_env("strategy", "densest")
    )
    p_query.add_argument("--seed", type=int, default=int(_env("seed", 0)))
    p_query.add_argument(
        "--simulate-p",
        default=None,
        help="file | uniform | random:SEED; omit for interactive picks on stdin",
    )
    p_query.set_defaults(func=_cmd_query)

    p_serve = sub.add_parser("serve", help="serve the HTTP session API")
    _index_flag(p_serve)
    p_serve.add_argument("--listen", default=_env("listen", "127.0.0.1:8080"))
    p_serve.set_defaults(func=_cmd_serve)

    p_eval = sub.add_parser("eval", help="run simulated sessions, print metrics CSV")
    _index_flag(p_eval)
    p_eval.add_argument("--sessions", type=int, default=int(_env("sessions", 100)))
    p_eval.add_argument("--k", type=int, default=int(_env("k", 20)))
    p_eval.add_argument("--theta", type=int, default=int(_env("theta", 8)))
    p_eval.add_argument("--t", type=int, default=int(_env("t", 100)))
    p_eval.add_argument(
        "--lambda", dest="lam", type=float, default=float(_env("lambda", 0.5))
    )
    p_eval.add_argument(
        "--strategy", choices=["densest", "random", "both"], default=_env("strategy", "both")
    )
    p_eval.add_argument("--seed", type=int, default=int(_env("seed", 0)))
    p_eval.add_argument("--max-rounds", type=int, default=int(_env("max-rounds", 10)))
    p_eval.add_argument("--out", default=None)
    p_eval.add_argument(
        "--no-timing",
        action="store_true",
        help="report 0.0 for timing columns so output is byte-reproducible",
    )
    p_eval.set_defaults(func=_cmd_eval)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValidationError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
