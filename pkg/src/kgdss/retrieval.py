"""Vector retrieval: embed triples, rank by cosine, build the reasoning scope.

Desk scale means exact scan, no ANN structures. The scope handed to
reasoning is the top-k triples for the question plus a k-level neighborhood
expansion around their entities, with the source clauses attached — the only
knowledge an answer is allowed to use.
"""
from __future__ import annotations

import json
import threading
import zlib
from dataclasses import dataclass, field
from pathlib import Path
from typing import Protocol

import httpx
import numpy as np

from .errors import BackendError, DimensionMismatch, IndexFormatError
from .fol import expand_neighborhood
from .store import Triple, TripleStore


def triple_text(t: Triple) -> str:
    """Embedding key for a triple: labels joined by single spaces, verbatim."""
    return f"{t.head.label} {t.relation.label} {t.tail.label}"


class Embedder(Protocol):
    name: str
    dimension: int

    def embed(self, text: str) -> np.ndarray: ...


class HashEmbedder:
    """Deterministic, dependency-free test embedder.

    Hashed character-3-gram bag: each 3-gram of the text lands in a crc32
    bucket, counts accumulate, and the vector is L2-normalized. Texts shorter
    than 3 characters hash as a single gram so only the empty text maps to
    the zero vector. Adequate for exact/near-duplicate ranking; a real
    embedding service supplies semantics in production.
    """

    def __init__(self, dimension: int = 256):
        self.name = "test-hash"
        self.dimension = dimension

    def embed(self, text: str) -> np.ndarray:
        vec = np.zeros(self.dimension, dtype=np.float64)
        if not text:
            return vec
        grams = [text[i:i + 3] for i in range(len(text) - 2)] if len(text) >= 3 else [text]
        for gram in grams:
            vec[zlib.crc32(gram.encode("utf-8")) % self.dimension] += 1.0
        return vec / np.linalg.norm(vec)


class HttpEmbedder:
    """Embedding service client: POST {model, input: [text, ...]} -> {vectors}.

    Calls may run concurrently up to max_inflight.
    """

    def __init__(self, base_url: str, model: str, dimension: int,
                 api_key: str | None = None, timeout: float = 60.0,
                 max_inflight: int = 4):
        self.name = f"http:{model}"
        self.dimension = dimension
        self._url = base_url.rstrip("/")
        self._model = model
        self._headers = {"Authorization": f"Bearer {api_key}"} if api_key else {}
        self._timeout = timeout
        self._inflight = threading.BoundedSemaphore(max_inflight)

    def embed(self, text: str) -> np.ndarray:
        return self.embed_batch([text])[0]

    def embed_batch(self, texts: list[str]) -> list[np.ndarray]:
        with self._inflight:
            resp = httpx.post(self._url, json={"model": self._model, "input": texts},
                              headers=self._headers, timeout=self._timeout)
        if resp.status_code != 200:
            raise BackendError(f"embedding service returned {resp.status_code}")
        vectors = resp.json().get("vectors")
        if vectors is None or len(vectors) != len(texts):
            raise BackendError("embedding service reply lacks a vector per input")
        out = []
        for vec in vectors:
            arr = np.asarray(vec, dtype=np.float64)
            if arr.shape != (self.dimension,):
                raise DimensionMismatch(
                    f"service returned dimension {arr.shape}, expected {self.dimension}")
            norm = np.linalg.norm(arr)
            out.append(arr / norm if norm > 0 else arr)
        return out


@dataclass
class VectorIndex:
    embedder_name: str
    dimension: int
    entries: list[tuple[int, np.ndarray]] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.entries)

    def append(self, triple_id: int, vector: np.ndarray, embedder_name: str) -> None:
        if embedder_name != self.embedder_name or vector.shape != (self.dimension,):
            raise DimensionMismatch(
                f"index built with {self.embedder_name}/{self.dimension}, "
                f"got {embedder_name}/{vector.shape}")
        self.entries.append((triple_id, vector))


def build_index(store: TripleStore, embedder: Embedder) -> VectorIndex:
    """One entry per stored triple; rebuild after store mutation."""
    index = VectorIndex(embedder_name=embedder.name, dimension=embedder.dimension)
    for t in store.triples():
        index.append(t.triple_id, embedder.embed(triple_text(t)), embedder.name)
    return index


def top_k(index: VectorIndex, query_vec: np.ndarray, k: int) -> list[tuple[int, float]]:
    """min(k, |index|) hits sorted by cosine desc, ties broken by triple_id asc."""
    if k < 1:
        raise ValueError("k must be positive")
    if query_vec.shape != (index.dimension,):
        raise DimensionMismatch(
            f"query dimension {query_vec.shape}, index dimension {index.dimension}")
    scored = [(tid, float(np.dot(vec, query_vec))) for tid, vec in index.entries]
    scored.sort(key=lambda item: (-item[1], item[0]))
    return scored[:k]


@dataclass
class RetrievalScope:
    """Relevant KG portion plus original clauses, handed to reasoning."""

    triples: set[Triple]
    clauses: list[tuple[str, str]]          # (source_doc, clause), first-seen order
    scores: dict[int, float]                # triple_id -> cosine against the question
    universe: frozenset[str]                # entity set of the scope triples

    def ordered_triples(self) -> list[Triple]:
        return sorted(self.triples, key=lambda t: t.triple_id)

    def as_store(self) -> TripleStore:
        """Scope-only store for native evaluation (fresh ids, same content)."""
        sub = TripleStore()
        for t in self.ordered_triples():
            sub.add_triple(t)
        return sub

    def to_json(self) -> str:
        """Canonical serialization; byte-identical for identical scopes."""
        payload = {
            "triples": [
                {"triple_id": t.triple_id, "head": t.head.label,
                 "relation": t.relation.label, "tail": t.tail.label,
                 "source_doc": t.source_doc, "clause": t.clause,
                 "score": repr(self.scores.get(t.triple_id))}
                for t in self.ordered_triples()
            ],
            "clauses": [list(pair) for pair in self.clauses],
            "universe": sorted(self.universe),
        }
        return json.dumps(payload, ensure_ascii=False, sort_keys=True)


def build_scope(store: TripleStore, index: VectorIndex, embedder: Embedder,
                question: str, k: int, expand_depth: int,
                min_score: float = 0.0) -> RetrievalScope:
    """Top-k by similarity, then neighborhood expansion around the hits.

    min_score=0 disables thresholding (scores from the hash embedder are
    non-negative; relax or tighten against a real embedding backend).
    """
    qvec = embedder.embed(question)
    hits = top_k(index, qvec, k) if len(index) else []
    if min_score > 0.0:
        hits = [(tid, score) for tid, score in hits if score >= min_score]
    hit_triples = [t for t in (store.get(tid) for tid, _ in hits) if t is not None]

    seeds: set[str] = set()
    for t in hit_triples:
        seeds.add(t.head.label)
        seeds.add(t.tail.label)
    neighborhood = expand_neighborhood(store, seeds, set(), expand_depth)

    scope_triples = set(hit_triples) | set(neighborhood.triples)
    scores = {}
    by_id = {tid: vec for tid, vec in index.entries}
    for t in scope_triples:
        vec = by_id.get(t.triple_id)
        scores[t.triple_id] = (float(np.dot(vec, qvec)) if vec is not None
                               else float(np.dot(embedder.embed(triple_text(t)), qvec)))

    # Clauses in first-seen order: ranked hits first, then remaining by id.
    hit_set = set(hit_triples)
    ordered = hit_triples + [t for t in sorted(scope_triples, key=lambda x: x.triple_id)
                             if t not in hit_set]
    clauses: list[tuple[str, str]] = []
    seen = set()
    for t in ordered:
        if t.source_doc is not None and t.clause is not None:
            pair = (t.source_doc, t.clause)
            if pair not in seen:
                seen.add(pair)
                clauses.append(pair)

    universe = frozenset(l for t in scope_triples for l in (t.head.label, t.tail.label))
    return RetrievalScope(triples=scope_triples, clauses=clauses,
                          scores=scores, universe=universe)


# -- index persistence -----------------------------------------------------------
# Header line: embedder name \t dimension \t count. Entry lines: id \t floats.

def save_index(index: VectorIndex, path: str | Path) -> None:
    lines = [f"{index.embedder_name}\t{index.dimension}\t{len(index.entries)}"]
    for tid, vec in index.entries:
        lines.append(f"{tid}\t" + " ".join(repr(x) for x in vec.tolist()))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_index(path: str | Path) -> VectorIndex:
    text = Path(path).read_text(encoding="utf-8").splitlines()
    if not text:
        raise IndexFormatError("index file is empty")
    header = text[0].split("\t")
    if len(header) != 3:
        raise IndexFormatError("index header needs: name, dimension, count")
    name, dim_text, count_text = header
    try:
        dimension, count = int(dim_text), int(count_text)
    except ValueError as exc:
        raise IndexFormatError(f"bad index header numbers: {exc}") from exc
    index = VectorIndex(embedder_name=name, dimension=dimension)
    for line_no, line in enumerate(text[1:], start=2):
        if not line.strip():
            continue
        tid_text, _, vec_text = line.partition("\t")
        vec = np.array([float(x) for x in vec_text.split()], dtype=np.float64)
        if vec.shape != (dimension,):
            raise IndexFormatError(f"line {line_no}: vector has {vec.shape[0]} floats, "
                                   f"expected {dimension}")
        index.entries.append((int(tid_text), vec))
    if len(index.entries) != count:
        raise IndexFormatError(f"header says {count} entries, file has {len(index.entries)}")
    return index
