#!/usr/bin/env python3
"""Large randomized oracle sweeps beyond the acceptance sizes.

Checks the evaluator, neighborhood expansion, and top-k ranking against
their brute-force counterparts at configurable scale and reports timing.

Usage: python3 scripts/oracle_sweep.py [--stores 50] [--queries 20] [--seed 1]
"""
from __future__ import annotations

import argparse
import random
import sys
import time
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(ROOT / "src"))
sys.path.insert(0, str(ROOT / "tests"))

from kgdss import evaluate, expand_neighborhood
from kgdss.retrieval import HashEmbedder, build_index, top_k
from kgdss.store import TripleStore, make_triple

from conftest import random_plain_triples, random_query
from oracles import bfs_oracle, eval_oracle, topk_oracle


def store_from(tuples) -> TripleStore:
    store = TripleStore()
    for h, r, t in tuples:
        store.add_triple(make_triple(h, r, t))
    return store


def sweep_evaluator(rng: random.Random, stores: int, queries: int) -> int:
    checked = 0
    for _ in range(stores):
        n_entities = rng.randint(10, 40)
        tuples = random_plain_triples(rng, n_entities, 5, rng.randint(30, 120))
        store = store_from(tuples)
        entities = [f"e{i}" for i in range(n_entities)]
        relations = [f"r{i}" for i in range(5)]
        universe = set(store.entity_set())
        for _ in range(queries):
            q = random_query(rng, entities, relations, depth=rng.randint(1, 5))
            got = evaluate(store, q)
            want = eval_oracle(tuples, q, universe)
            if got != want:
                raise SystemExit(f"evaluator mismatch: {q}")
            checked += 1
    return checked


def sweep_neighborhoods(rng: random.Random, rounds: int) -> int:
    for _ in range(rounds):
        tuples = random_plain_triples(rng, rng.randint(8, 30), 4, rng.randint(15, 80))
        store = store_from(tuples)
        pool = sorted(store.entity_set())
        seeds = set(rng.sample(pool, k=min(len(pool), rng.randint(1, 4))))
        for k in range(6):
            got = {t.key() for t in
                   expand_neighborhood(store, seeds, set(), k).triples}
            if got != bfs_oracle(tuples, seeds, set(), k):
                raise SystemExit(f"neighborhood mismatch at k={k}")
    return rounds


def sweep_topk(rng: random.Random, n_triples: int, probes: int) -> int:
    words = [f"w{i}" for i in range(60)]
    tuples = set()
    while len(tuples) < n_triples:
        tuples.add((f"{rng.choice(words)} {rng.choice(words)}", rng.choice(words),
                    f"{rng.choice(words)} {rng.choice(words)}"))
    store = store_from(tuples)
    embedder = HashEmbedder()
    index = build_index(store, embedder)
    entries = [(tid, vec.tolist()) for tid, vec in index.entries]
    for probe in range(probes):
        qvec = embedder.embed(f"{rng.choice(words)} {rng.choice(words)} probe")
        got = top_k(index, qvec, 15)
        full = dict(topk_oracle(entries, qvec.tolist(), len(entries)))
        for tid, score in got:
            if abs(score - full[tid]) > 1e-9:
                raise SystemExit(f"top-k score mismatch on id {tid}")
    return probes


def main() -> None:
    parser = argparse.ArgumentParser()
    parser.add_argument("--stores", type=int, default=50)
    parser.add_argument("--queries", type=int, default=20)
    parser.add_argument("--neighborhood-rounds", type=int, default=100)
    parser.add_argument("--topk-triples", type=int, default=2000)
    parser.add_argument("--topk-probes", type=int, default=50)
    parser.add_argument("--seed", type=int, default=1)
    args = parser.parse_args()
    rng = random.Random(args.seed)

    for name, thunk in [
        ("evaluator", lambda: sweep_evaluator(rng, args.stores, args.queries)),
        ("neighborhood", lambda: sweep_neighborhoods(rng, args.neighborhood_rounds)),
        ("top-k", lambda: sweep_topk(rng, args.topk_triples, args.topk_probes)),
    ]:
        started = time.monotonic()
        count = thunk()
        elapsed = time.monotonic() - started
        print(f"{name}: {count} checks in {elapsed:.2f}s — all agree")


if __name__ == "__main__":
    main()
