"""Triple store with per-triple provenance, label indexes, and source-tracked updates.

Knowledge lives as (head, relation, tail) records. Labels are compared
exactly after a single leading/trailing trim; entity resolution beyond that
is a human curation task, so there is no casefolding or fuzzy matching here.
Duplicate (head, relation, tail) insertions are idempotent because extracted
batches contain repeats.

Concurrency: many readers or one writer. Mutations hold the store lock and
commit by swapping the internal state object, so a failed multi-triple
update leaves the store untouched. `snapshot()` returns an independent copy
safe to hand to another thread.
"""
from __future__ import annotations

import hashlib
import json
import os
import tempfile
import threading
from dataclasses import dataclass, field, replace
from pathlib import Path

from .errors import AllPatternsEmpty, EmptyLabel, KgParseError, SourceMismatch

# Keys of the KG line format. One flat JSON object per line; "#" lines ignored.
_REQUIRED_KEYS = ("head", "relation", "tail")
_OPTIONAL_KEYS = ("head_type", "tail_type", "relation_type", "source_doc", "clause")


def _trimmed(label: str, what: str) -> str:
    text = label.strip()
    if not text:
        raise EmptyLabel(f"{what} label is empty after trimming")
    return text


@dataclass(frozen=True)
class Entity:
    label: str
    entity_type: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "label", _trimmed(self.label, "entity"))


@dataclass(frozen=True)
class Relation:
    label: str
    relation_type: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "label", _trimmed(self.label, "relation"))


@dataclass(frozen=True)
class Triple:
    head: Entity
    relation: Relation
    tail: Entity
    source_doc: str | None = None
    clause: str | None = None
    triple_id: int | None = None  # assigned by the store at insertion

    def key(self) -> tuple[str, str, str]:
        return (self.head.label, self.relation.label, self.tail.label)

    def content(self) -> tuple:
        """Everything except the store-assigned id, for identity comparisons."""
        return (
            self.head.label, self.head.entity_type,
            self.relation.label, self.relation.relation_type,
            self.tail.label, self.tail.entity_type,
            self.source_doc, self.clause,
        )


def make_triple(head: str, relation: str, tail: str, *,
                source_doc: str | None = None, clause: str | None = None,
                head_type: str | None = None, tail_type: str | None = None,
                relation_type: str | None = None) -> Triple:
    """Convenience constructor from bare labels."""
    return Triple(
        head=Entity(head, head_type),
        relation=Relation(relation, relation_type),
        tail=Entity(tail, tail_type),
        source_doc=source_doc,
        clause=clause,
    )


@dataclass
class Schema:
    """Schema layer: known type tags plus the decision-demand taxonomy.

    Validation is advisory: unknown tags produce warnings, never block the
    data layer, and never mutate stored triples.
    """

    entity_types: set[str] = field(default_factory=set)
    relation_types: set[str] = field(default_factory=set)
    taxonomy: dict[str, list[str]] = field(default_factory=dict)

    def is_empty(self) -> bool:
        return not (self.entity_types or self.relation_types or self.taxonomy)

    def warnings_for(self, t: Triple) -> list[str]:
        warnings = []
        for ent in (t.head, t.tail):
            if ent.entity_type is not None and ent.entity_type not in self.entity_types:
                warnings.append(f"unknown entity type {ent.entity_type!r} on {ent.label!r}")
        rel = t.relation
        if rel.relation_type is not None and rel.relation_type not in self.relation_types:
            warnings.append(f"unknown relation type {rel.relation_type!r} on {rel.label!r}")
        return warnings

    def to_dict(self) -> dict:
        return {
            "entity_types": sorted(self.entity_types),
            "relation_types": sorted(self.relation_types),
            "taxonomy": {k: list(v) for k, v in sorted(self.taxonomy.items())},
        }

    @classmethod
    def from_dict(cls, obj: dict) -> "Schema":
        taxonomy = obj.get("taxonomy", {})
        for label, subclasses in taxonomy.items():
            if len(set(subclasses)) != len(subclasses):
                raise KgParseError(f"taxonomy class {label!r} repeats a subclass label")
        return cls(
            entity_types=set(obj.get("entity_types", [])),
            relation_types=set(obj.get("relation_types", [])),
            taxonomy={k: list(v) for k, v in taxonomy.items()},
        )


@dataclass
class _State:
    """All index structures; cloned for multi-step mutations, swapped on commit."""

    triples: dict[int, Triple] = field(default_factory=dict)
    key_index: dict[tuple[str, str, str], int] = field(default_factory=dict)
    by_head: dict[str, set[int]] = field(default_factory=dict)
    by_tail: dict[str, set[int]] = field(default_factory=dict)
    by_relation: dict[str, set[int]] = field(default_factory=dict)
    by_source: dict[str, set[int]] = field(default_factory=dict)
    next_id: int = 1

    def clone(self) -> "_State":
        return _State(
            triples=dict(self.triples),
            key_index=dict(self.key_index),
            by_head={k: set(v) for k, v in self.by_head.items()},
            by_tail={k: set(v) for k, v in self.by_tail.items()},
            by_relation={k: set(v) for k, v in self.by_relation.items()},
            by_source={k: set(v) for k, v in self.by_source.items()},
            next_id=self.next_id,
        )

    def insert(self, t: Triple) -> tuple[int, bool]:
        """Insert, deduplicating on (head, relation, tail). Returns (id, created)."""
        existing = self.key_index.get(t.key())
        if existing is not None:
            return existing, False
        tid = self.next_id
        self.next_id += 1
        stored = replace(t, triple_id=tid)
        self.triples[tid] = stored
        self.key_index[stored.key()] = tid
        self.by_head.setdefault(stored.head.label, set()).add(tid)
        self.by_tail.setdefault(stored.tail.label, set()).add(tid)
        self.by_relation.setdefault(stored.relation.label, set()).add(tid)
        if stored.source_doc is not None:
            self.by_source.setdefault(stored.source_doc, set()).add(tid)
        return tid, True

    def remove(self, tid: int) -> None:
        t = self.triples.pop(tid)
        del self.key_index[t.key()]
        for index, label in ((self.by_head, t.head.label),
                             (self.by_tail, t.tail.label),
                             (self.by_relation, t.relation.label)):
            index[label].discard(tid)
            if not index[label]:
                del index[label]
        if t.source_doc is not None:
            self.by_source[t.source_doc].discard(tid)
            if not self.by_source[t.source_doc]:
                del self.by_source[t.source_doc]


class TripleStore:
    def __init__(self, schema: Schema | None = None):
        self.schema = schema if schema is not None else Schema()
        self._st = _State()
        self._lock = threading.RLock()

    # -- queries ---------------------------------------------------------

    def __len__(self) -> int:
        return len(self._st.triples)

    def triples(self) -> list[Triple]:
        """All triples ordered by id."""
        with self._lock:
            return [self._st.triples[tid] for tid in sorted(self._st.triples)]

    def get(self, triple_id: int) -> Triple | None:
        with self._lock:
            return self._st.triples.get(triple_id)

    def entity_set(self) -> set[str]:
        with self._lock:
            return set(self._st.by_head) | set(self._st.by_tail)

    def relation_set(self) -> set[str]:
        with self._lock:
            return set(self._st.by_relation)

    def source_set(self) -> set[str]:
        with self._lock:
            return set(self._st.by_source)

    def lookup(self, head: str | None = None, relation: str | None = None,
               tail: str | None = None, source_doc: str | None = None) -> set[Triple]:
        """Triples matching every provided pattern (exact label match)."""
        if head is None and relation is None and tail is None and source_doc is None:
            raise AllPatternsEmpty("lookup needs at least one pattern")
        with self._lock:
            st = self._st
            candidate_sets = []
            for index, pattern in ((st.by_head, head), (st.by_relation, relation),
                                   (st.by_tail, tail), (st.by_source, source_doc)):
                if pattern is not None:
                    candidate_sets.append(index.get(pattern, set()))
            ids = set.intersection(*candidate_sets) if candidate_sets else set()
            return {st.triples[tid] for tid in ids}

    def snapshot(self) -> "TripleStore":
        """Independent copy sharing nothing mutable with this store."""
        with self._lock:
            dup = TripleStore(schema=Schema(
                entity_types=set(self.schema.entity_types),
                relation_types=set(self.schema.relation_types),
                taxonomy={k: list(v) for k, v in self.schema.taxonomy.items()},
            ))
            dup._st = self._st.clone()
            return dup

    def digest(self) -> str:
        """Hash of the triple set; changes iff the triples (with provenance) change."""
        with self._lock:
            payload = sorted(t.content() for t in self._st.triples.values())
        return hashlib.sha256(repr(payload).encode("utf-8")).hexdigest()[:16]

    # -- mutations --------------------------------------------------------

    def add_triple(self, t: Triple) -> int:
        """Insert one triple; duplicate (head, relation, tail) is a no-op
        returning the existing id."""
        return self.insert(t)[0]

    def insert(self, t: Triple) -> tuple[int, bool]:
        """add_triple variant reporting whether the triple was newly created."""
        with self._lock:
            return self._st.insert(t)

    def insert_all(self, triples: list[Triple]) -> list[tuple[int, bool]]:
        """Batch insert under one writer turn."""
        with self._lock:
            return [self._st.insert(t) for t in triples]

    def remove_by_source(self, source_doc: str) -> int:
        """Remove every triple from the given source. Unknown source removes 0."""
        with self._lock:
            ids = list(self._st.by_source.get(source_doc, ()))
            for tid in ids:
                self._st.remove(tid)
            return len(ids)

    def replace_source(self, source_doc: str, new_triples: list[Triple]) -> tuple[int, int]:
        """Atomically swap all triples of a source for the given payload.

        Either the full swap happens or the store is unchanged.
        """
        with self._lock:
            for t in new_triples:
                if t.source_doc != source_doc:
                    raise SourceMismatch(
                        f"payload triple {t.key()} carries source "
                        f"{t.source_doc!r}, expected {source_doc!r}")
            staged = self._st.clone()
            removed_ids = list(staged.by_source.get(source_doc, ()))
            for tid in removed_ids:
                staged.remove(tid)
            added = 0
            for t in new_triples:
                _, created = staged.insert(t)
                added += int(created)
            self._st = staged
            return len(removed_ids), added


# -- persistence ---------------------------------------------------------------

def _triple_to_record(t: Triple) -> dict:
    record = {"head": t.head.label, "relation": t.relation.label, "tail": t.tail.label}
    if t.head.entity_type is not None:
        record["head_type"] = t.head.entity_type
    if t.tail.entity_type is not None:
        record["tail_type"] = t.tail.entity_type
    if t.relation.relation_type is not None:
        record["relation_type"] = t.relation.relation_type
    if t.source_doc is not None:
        record["source_doc"] = t.source_doc
    if t.clause is not None:
        record["clause"] = t.clause
    return record


def default_schema_path(path: str | Path) -> Path:
    return Path(str(path) + ".schema.json")


def save(store: TripleStore, path: str | Path, schema_path: str | Path | None = None) -> None:
    """Write the KG line format (one JSON object per line, ordered by id).

    The schema goes to a sibling file ("#" lines are ignored by readers, so
    the line format itself cannot carry it); written only when non-empty.
    """
    path = Path(path)
    lines = [json.dumps(_triple_to_record(t), ensure_ascii=False, sort_keys=True)
             for t in store.triples()]
    _atomic_write(path, "\n".join(lines) + ("\n" if lines else ""))
    schema_path = Path(schema_path) if schema_path is not None else default_schema_path(path)
    if not store.schema.is_empty():
        _atomic_write(schema_path, json.dumps(store.schema.to_dict(),
                                              ensure_ascii=False, indent=2) + "\n")


def _atomic_write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name + ".")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def parse_record(obj: dict, line_no: int) -> Triple:
    if not isinstance(obj, dict):
        raise KgParseError(f"line {line_no}: record is not an object", line=line_no)
    missing = [k for k in _REQUIRED_KEYS if k not in obj]
    if missing:
        raise KgParseError(
            f"line {line_no}: record has {len(obj)} field(s), missing {', '.join(missing)}",
            line=line_no)
    unknown = [k for k in obj if k not in _REQUIRED_KEYS and k not in _OPTIONAL_KEYS]
    if unknown:
        raise KgParseError(f"line {line_no}: unknown key {unknown[0]!r}", line=line_no)
    try:
        return make_triple(
            obj["head"], obj["relation"], obj["tail"],
            head_type=obj.get("head_type"), tail_type=obj.get("tail_type"),
            relation_type=obj.get("relation_type"),
            source_doc=obj.get("source_doc"), clause=obj.get("clause"),
        )
    except EmptyLabel as exc:
        raise KgParseError(f"line {line_no}: {exc}", line=line_no) from exc


def load(path: str | Path, schema_path: str | Path | None = None) -> TripleStore:
    """Read a KG line file (and its sibling schema file if present)."""
    path = Path(path)
    schema_path = Path(schema_path) if schema_path is not None else default_schema_path(path)
    schema = None
    if schema_path.exists():
        schema = load_schema(schema_path)
    store = TripleStore(schema=schema)
    with open(path, encoding="utf-8") as fh:
        for line_no, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise KgParseError(f"line {line_no}: invalid JSON ({exc.msg})",
                                   line=line_no) from exc
            store.add_triple(parse_record(obj, line_no))
    return store


def load_schema(path: str | Path) -> Schema:
    with open(path, encoding="utf-8") as fh:
        try:
            obj = json.load(fh)
        except json.JSONDecodeError as exc:
            raise KgParseError(f"schema file {path}: invalid JSON ({exc.msg})") from exc
    return Schema.from_dict(obj)
