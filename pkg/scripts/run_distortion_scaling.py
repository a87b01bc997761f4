#!/usr/bin/env python3
"""Distortion scaling on discrete circles: how the empirical bilipschitz
distortion of low-connectivity embeddings grows with the sample size."""

import argparse
from pathlib import Path

import embedstab as es
from embedstab.serialize import write_csv, write_json


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--ns", type=str, default="100,200,400,800")
    ap.add_argument("--k", type=int, default=3)
    ap.add_argument("--seeds-per-n", type=int, default=10)
    ap.add_argument("--iterations", type=int, default=1000)
    ap.add_argument("--out", type=Path, default=Path("distortion_out"))
    args = ap.parse_args()

    args.out.mkdir(parents=True, exist_ok=True)
    ns = [int(tok) for tok in args.ns.split(",")]
    params = es.OptimizerParams(iterations=args.iterations)
    records, summary = es.distortion_scaling_experiment(
        ns, k=args.k, seeds_per_n=args.seeds_per_n, params=params)
    write_csv(args.out / "runs.csv",
              [(r.n, r.seed, r.k, r.L, r.S, r.components, r.objective) for r in records],
              header=["n", "seed", "k", "L", "S", "components", "objective"])
    write_json(args.out / "medians.json",
               [{"n": s.n, "median_L": s.median_L, "median_S": s.median_S,
                 "median_components": s.median_components} for s in summary])
    print(f"wrote {args.out}/runs.csv and medians.json")
    for s in summary:
        print(f"  n={s.n}: median L {s.median_L:.4g}, median components {s.median_components}")


if __name__ == "__main__":
    main()
