from __future__ import annotations

import random
from pathlib import Path

import pytest

from kgdss.fol import Intersection, Literal, Negation, Projection, UnionQ
from kgdss.store import TripleStore, load, make_triple

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"

AMMONIA_TUPLES = [
    ("Ammonia", "is", "irritating gas"),
    ("Ammonia", "form", "explosive mixtures with air"),
    ("Ammonia", "cause", "toxic pulmonary edema"),
    ("Ammonia", "cause", "eye burns"),
    ("Ammonia", "cause", "skin burns"),
    ("Ammonia", "cause", "respiratory tract burns"),
    ("Handling liquid ammonia", "require", "wearing cold-resistant clothing"),
]

PPE_QUESTION = ("What protective equipment is required when sulfur dioxide and "
                 "acetylene leak in a moderate toxicity, low hazard zone?")
PPE_QUERY = ('and(p({"Acetylene"}, "requires protection"), '
              'p({"Moderate toxicity, low hazard zone"}, "Protection level"), '
              'p({"Sulfur dioxide"}, "requires protection"))')


@pytest.fixture
def ammonia_store() -> TripleStore:
    return load(FIXTURES / "ammonia.kg")


@pytest.fixture
def protection_store() -> TripleStore:
    return load(FIXTURES / "protection.kg")


def store_from(tuples, source_doc=None) -> TripleStore:
    store = TripleStore()
    for h, r, t in tuples:
        store.add_triple(make_triple(h, r, t, source_doc=source_doc))
    return store


def random_plain_triples(rng: random.Random, n_entities: int, n_relations: int,
                         n_triples: int) -> set[tuple[str, str, str]]:
    entities = [f"e{i}" for i in range(n_entities)]
    relations = [f"r{i}" for i in range(n_relations)]
    triples = set()
    for _ in range(n_triples):
        triples.add((rng.choice(entities), rng.choice(relations), rng.choice(entities)))
    return triples


def random_query(rng: random.Random, entities: list[str], relations: list[str],
                 depth: int):
    """Random AST covering all four operators up to the given depth."""
    if depth == 0 or rng.random() < 0.25:
        members = rng.sample(entities, k=rng.randint(1, min(3, len(entities))))
        return Literal(frozenset(members))
    kind = rng.choice(["projection", "intersection", "union", "negation"])
    if kind == "projection":
        return Projection(random_query(rng, entities, relations, depth - 1),
                          rng.choice(relations), inverse=rng.random() < 0.3)
    if kind == "negation":
        return Negation(random_query(rng, entities, relations, depth - 1))
    parts = tuple(random_query(rng, entities, relations, depth - 1)
                  for _ in range(rng.randint(2, 3)))
    return Intersection(parts) if kind == "intersection" else UnionQ(parts)
