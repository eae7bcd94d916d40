#!/usr/bin/env python3
"""Benchmark exact kNN overlap scoring at scale."""

import argparse
import time

import sensemine as sm


def run(n_lemmas: int, per_sense: int, dim: int, threads: list[int], seed: int) -> None:
    cfg = sm.SynthConfig(
        n_lemmas=n_lemmas, senses_per_lemma=2, instances_per_sense=per_sense,
        dim=dim, noise_sigma=0.2, hard_fraction=0.1, seed=seed,
    )
    t0 = time.perf_counter()
    corpus, inventory, matrix, _ = sm.generate(cfg)
    print(f"generated {len(corpus)} instances / {n_lemmas} lemmas "
          f"in {time.perf_counter() - t0:.2f}s")
    baseline = None
    for n in threads:
        t0 = time.perf_counter()
        table = sm.score_all(matrix, corpus, inventory, 4, threads=n)
        dt = time.perf_counter() - t0
        if baseline is None:
            baseline = dt
        print(f"threads={n}: {dt:6.2f}s  ({len(table.scores)} scores, "
              f"speedup {baseline / dt:.2f}x)")


if __name__ == "__main__":
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--lemmas", type=int, default=5000)
    parser.add_argument("--per-sense", type=int, default=10)
    parser.add_argument("--dim", type=int, default=16)
    parser.add_argument("--threads", type=int, nargs="+", default=[1, 2, 4])
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()
    run(args.lemmas, args.per_sense, args.dim, args.threads, args.seed)
