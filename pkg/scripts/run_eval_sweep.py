#!/usr/bin/env python3
"""Sweep the evaluation workload over k / theta / t and print one CSV.

Builds a synthetic corpus and index in a work directory (reused across
runs), then shells out to the CLI so the numbers match exactly what an
operator would measure.
"""

import argparse
import subprocess
import sys
from pathlib import Path


def sh(*args):
    proc = subprocess.run([sys.executable, "-m", "geoprefer", *args],
                          capture_output=True, text=True)
    if proc.returncode != 0:
        sys.exit(f"command failed: {' '.join(args)}\n{proc.stderr}")
    return proc.stdout


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--workdir", default="eval_work")
    ap.add_argument("--n", type=int, default=10_000)
    ap.add_argument("--vocab", type=int, default=1000)
    ap.add_argument("--mean-words", type=float, default=100.0)
    ap.add_argument("--sessions", type=int, default=20)
    ap.add_argument("--seed", type=int, default=1)
    ap.add_argument("--k", type=int, nargs="+", default=[5, 20, 50])
    ap.add_argument("--theta", type=int, nargs="+", default=[4, 8])
    ap.add_argument("--t", type=int, nargs="+", default=[20, 100])
    args = ap.parse_args()

    work = Path(args.workdir)
    work.mkdir(parents=True, exist_ok=True)
    data = work / "data.jsonl"
    idx = work / "data.idx"
    if not data.exists():
        sh("gen", "--n", str(args.n), "--vocab", str(args.vocab),
           "--mean-words", str(args.mean_words), "--seed", str(args.seed),
           "--out", str(data))
    if not idx.exists():
        sh("index", "build", "--data", str(data), "--out", str(idx),
           "--seed", str(args.seed))

    header_done = False
    for k in args.k:
        for theta in args.theta:
            for t in args.t:
                out = sh("eval", "--index", str(idx),
                         "--sessions", str(args.sessions),
                         "--k", str(k), "--theta", str(theta), "--t", str(t),
                         "--strategy", "both", "--seed", str(args.seed))
                lines = out.splitlines()
                if not header_done:
                    print(lines[0])
                    header_done = True
                for row in lines[1:]:
                    print(row)


if __name__ == "__main__":
    main()
