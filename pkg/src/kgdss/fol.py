"""Logical query language over the KG: AST, parser, evaluator, neighborhoods.

Four operations — projection, intersection, union, negation — compose into
finite query trees. Evaluation is deterministic set algebra over a store
snapshot, clamped to a universe at every node so that results never leave
the universe (the orchestrator narrows the universe to a retrieval scope).

Canonical text grammar (UTF-8):

    query   := proj | and | or | not | literal
    proj    := "p(" query "," relstr ")"      relstr := ["^"] quoted
    and     := "and(" query ("," query)+ ")"
    or      := "or(" query ("," query)+ ")"
    not     := "not(" query ")"
    literal := "{" quoted ("," quoted)* "}"
    quoted  := double-quoted text; backslash escapes for quote and backslash

"^" marks an inverse projection (tail-to-head traversal). Intersection and
union parts are kept sorted by their canonical rendering, so rendering is
deterministic and parse(render(q)) is a structural identity.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Union as TUnion

from .errors import QuerySyntaxError
from .store import Triple, TripleStore

EntitySet = frozenset[str]


# -- AST -----------------------------------------------------------------------

@dataclass(frozen=True)
class Literal:
    entities: EntitySet

    def __post_init__(self):
        object.__setattr__(self, "entities", frozenset(self.entities))
        if not self.entities:
            raise ValueError("literal needs at least one entity")


@dataclass(frozen=True)
class Projection:
    source: "LogicalQuery"
    relation: str
    inverse: bool = False

    def __post_init__(self):
        if not self.relation:
            raise ValueError("projection relation must be non-empty")


@dataclass(frozen=True)
class Intersection:
    parts: tuple["LogicalQuery", ...]

    def __post_init__(self):
        parts = tuple(self.parts)
        if len(parts) < 2:
            raise ValueError("intersection needs at least 2 parts")
        object.__setattr__(self, "parts", tuple(sorted(parts, key=render_query)))


@dataclass(frozen=True)
class UnionQ:
    parts: tuple["LogicalQuery", ...]

    def __post_init__(self):
        parts = tuple(self.parts)
        if len(parts) < 2:
            raise ValueError("union needs at least 2 parts")
        object.__setattr__(self, "parts", tuple(sorted(parts, key=render_query)))


@dataclass(frozen=True)
class Negation:
    part: "LogicalQuery"


LogicalQuery = TUnion[Literal, Projection, Intersection, UnionQ, Negation]


def literal(*entities: str) -> Literal:
    return Literal(frozenset(entities))


# -- rendering -----------------------------------------------------------------

def quote(text: str) -> str:
    return '"' + text.replace("\\", "\\\\").replace('"', '\\"') + '"'


def render_query(q: LogicalQuery) -> str:
    """Canonical text form; literal members and and/or parts come out sorted."""
    if isinstance(q, Literal):
        return "{" + ", ".join(quote(e) for e in sorted(q.entities)) + "}"
    if isinstance(q, Projection):
        marker = "^" if q.inverse else ""
        return f"p({render_query(q.source)}, {marker}{quote(q.relation)})"
    if isinstance(q, Intersection):
        return "and(" + ", ".join(render_query(p) for p in q.parts) + ")"
    if isinstance(q, UnionQ):
        return "or(" + ", ".join(render_query(p) for p in q.parts) + ")"
    if isinstance(q, Negation):
        return f"not({render_query(q.part)})"
    raise TypeError(f"not a logical query: {q!r}")


# -- parsing -------------------------------------------------------------------

class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.pos = 0

    def error(self, message: str, expected: str | None = None, at: int | None = None):
        pos = self.pos if at is None else at
        offset = len(self.text[:pos].encode("utf-8"))
        raise QuerySyntaxError(message, offset=offset, expected=expected)

    def skip_ws(self):
        while self.pos < len(self.text) and self.text[self.pos].isspace():
            self.pos += 1

    def peek(self) -> str | None:
        return self.text[self.pos] if self.pos < len(self.text) else None

    def expect(self, char: str):
        self.skip_ws()
        if self.peek() != char:
            found = repr(self.peek()) if self.peek() is not None else "end of input"
            self.error(f"found {found}", expected=repr(char))
        self.pos += 1

    def parse_quoted(self) -> str:
        self.skip_ws()
        if self.peek() != '"':
            self.error("quoted string required", expected="'\"'")
        self.pos += 1
        out = []
        while True:
            c = self.peek()
            if c is None:
                self.error("unterminated string", expected="'\"'")
            if c == '"':
                self.pos += 1
                return "".join(out)
            if c == "\\":
                nxt = self.text[self.pos + 1] if self.pos + 1 < len(self.text) else None
                if nxt not in ('"', "\\"):
                    self.error("invalid escape", expected="'\\\"' or '\\\\'", at=self.pos)
                out.append(nxt)
                self.pos += 2
            else:
                out.append(c)
                self.pos += 1

    def parse_literal(self) -> Literal:
        self.expect("{")
        members = [self.parse_quoted()]
        self.skip_ws()
        while self.peek() == ",":
            self.pos += 1
            members.append(self.parse_quoted())
            self.skip_ws()
        self.expect("}")
        return Literal(frozenset(members))

    def parse_query(self) -> LogicalQuery:
        self.skip_ws()
        c = self.peek()
        if c is None:
            self.error("empty query", expected="p(, and(, or(, not(, or {")
        if c == "{":
            return self.parse_literal()
        if not c.isalpha():
            self.error(f"found {c!r}", expected="p(, and(, or(, not(, or {")
        start = self.pos
        while self.pos < len(self.text) and self.text[self.pos].isalpha():
            self.pos += 1
        name = self.text[start:self.pos]
        if name not in ("p", "and", "or", "not"):
            self.pos = start
            self.error(f"unknown operator {name!r}", expected="p, and, or, not")
        self.expect("(")
        if name == "p":
            source = self.parse_query()
            self.expect(",")
            self.skip_ws()
            inverse = False
            if self.peek() == "^":
                inverse = True
                self.pos += 1
            relation = self.parse_quoted()
            if not relation:
                self.error("projection relation must be non-empty", expected="relation text")
            self.expect(")")
            return Projection(source, relation, inverse)
        if name == "not":
            part = self.parse_query()
            self.expect(")")
            return Negation(part)
        parts = [self.parse_query()]
        self.skip_ws()
        while self.peek() == ",":
            self.pos += 1
            parts.append(self.parse_query())
            self.skip_ws()
        self.expect(")")
        if len(parts) < 2:
            self.error(f"{name}() needs at least 2 parts", expected="','")
        return Intersection(tuple(parts)) if name == "and" else UnionQ(tuple(parts))


def parse_query(text: str) -> LogicalQuery:
    parser = _Parser(text)
    q = parser.parse_query()
    parser.skip_ws()
    if parser.pos < len(text):
        parser.error(f"trailing input {text[parser.pos:][:20]!r}", expected="end of input")
    return q


# -- evaluation ----------------------------------------------------------------

def evaluate(store: TripleStore, q: LogicalQuery,
             universe: Iterable[str] | None = None) -> EntitySet:
    """Deterministic evaluation over the store.

    The universe defaults to the store's full entity set and is intersected
    with it otherwise; every node's result is clamped to it, so negation is
    always well defined and evaluate(q, U) ⊆ U.
    """
    entities = frozenset(store.entity_set())
    u = entities if universe is None else frozenset(universe) & entities
    return _eval(store, q, u)


def _eval(store: TripleStore, q: LogicalQuery, u: EntitySet) -> EntitySet:
    if isinstance(q, Literal):
        return q.entities & u
    if isinstance(q, Projection):
        source = _eval(store, q.source, u)
        if not source:
            return frozenset()
        matches = store.lookup(relation=q.relation)
        if q.inverse:
            reached = {t.head.label for t in matches if t.tail.label in source}
        else:
            reached = {t.tail.label for t in matches if t.head.label in source}
        return frozenset(reached) & u
    if isinstance(q, Intersection):
        result = _eval(store, q.parts[0], u)
        for part in q.parts[1:]:
            result &= _eval(store, part, u)
        return result
    if isinstance(q, UnionQ):
        result = frozenset()
        for part in q.parts:
            result |= _eval(store, part, u)
        return result
    if isinstance(q, Negation):
        return u - _eval(store, q.part, u)
    raise TypeError(f"not a logical query: {q!r}")


# -- neighborhood expansion ------------------------------------------------------

@dataclass(frozen=True)
class Neighborhood:
    """k-level subgraph around a query's seed entities and relations."""

    triples: frozenset[Triple]
    entity_frontier: frozenset[str]
    relation_frontier: frozenset[str]
    depth: int


def expand_neighborhood(store: TripleStore, seed_entities: Iterable[str],
                        seed_relations: Iterable[str], k: int) -> Neighborhood:
    """Frontier BFS over incident triples.

    Level 1 collects triples incident to a seed entity (as head or tail) or
    labeled with a seed relation; each further level collects triples
    incident to the previous level's endpoints. Returns the union of levels
    1..k; k=0 yields an empty neighborhood whose frontiers are the seeds.
    """
    if k < 0:
        raise ValueError("k must be >= 0")
    seeds = frozenset(seed_entities)
    seed_rels = frozenset(seed_relations)
    collected: set[Triple] = set()
    if k >= 1:
        level = set()
        for entity in seeds:
            level |= store.lookup(head=entity)
            level |= store.lookup(tail=entity)
        for rel in seed_rels:
            level |= store.lookup(relation=rel)
        collected |= level
        frontier = _endpoints(level)
        for _ in range(k - 1):
            level = set()
            for entity in frontier:
                level |= store.lookup(head=entity)
                level |= store.lookup(tail=entity)
            if level <= collected:
                break  # fixpoint: no new frontier entities, higher k adds nothing
            collected |= level
            frontier = _endpoints(level)
    return Neighborhood(
        triples=frozenset(collected),
        entity_frontier=seeds | _endpoints(collected),
        relation_frontier=seed_rels | frozenset(t.relation.label for t in collected),
        depth=k,
    )


def _endpoints(triples: Iterable[Triple]) -> frozenset[str]:
    out = set()
    for t in triples:
        out.add(t.head.label)
        out.add(t.tail.label)
    return frozenset(out)
