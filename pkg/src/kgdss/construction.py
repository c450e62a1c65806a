"""Building the data layer from documents: LLM extraction plus human review.

The extraction prompt asks for "(head, relation, tail) <|> ..." output;
parsing is total — every delimited chunk either yields a triple or lands in
the rejects with a reason, never a hard failure. Chunks whose field count is
wrong are left for human edit rather than heuristically re-joined, because
silent joining fabricates knowledge.

Nothing reaches the store without a review verdict; fusion of near-duplicate
entities is suggested, never auto-applied.
"""
from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from pathlib import Path

from .errors import IncompleteReview, KgParseError
from .llm import Backend, ChatRequest, Transcript, complete
from .store import Triple, TripleStore, make_triple
from .templates import PromptTemplateSet

TRIPLE_DELIMITER = "<|>"
VERDICTS = ("accept", "edit", "reject")

_SENTENCE_END = re.compile(r"(?<=[.!?;])\s+")


def parse_triples(reply: str) -> tuple[list[tuple[str, str, str]], list[tuple[str, str]]]:
    """Split the extraction reply into (head, relation, tail) tuples.

    Chunks are separated by the literal "<|>"; each must be parenthesized
    with exactly 3 comma-separated fields, every field trimmed. Violations
    go to rejects as (chunk, reason); order is preserved and parsed + rejects
    cover every chunk.
    """
    parsed: list[tuple[str, str, str]] = []
    rejects: list[tuple[str, str]] = []
    for raw in reply.split(TRIPLE_DELIMITER):
        chunk = raw.strip()
        if not chunk:
            continue
        if not (chunk.startswith("(") and chunk.endswith(")")):
            rejects.append((chunk, "not parenthesized"))
            continue
        fields = [f.strip() for f in chunk[1:-1].split(",")]
        if len(fields) != 3:
            rejects.append((chunk, f"field count {len(fields)}"))
            continue
        if any(not f for f in fields):
            rejects.append((chunk, "empty field"))
            continue
        parsed.append((fields[0], fields[1], fields[2]))
    return parsed, rejects


@dataclass
class ExtractionBatch:
    source_doc: str
    input_text: str
    raw_reply: str
    parsed: list[Triple]
    rejects: list[tuple[str, str]]


def extract(chunk: str, source_doc: str, backend: Backend,
            templates: PromptTemplateSet,
            transcript: Transcript | None = None) -> ExtractionBatch:
    """Run the KG-construction prompt on one chunk.

    Every parsed triple carries the source document id and the chunk itself
    as its clause, so provenance survives into the store.
    """
    if not chunk.strip():
        raise ValueError("chunk must be non-empty")
    prompt = templates.render("kg_construction", text=chunk)
    resp = complete(backend, ChatRequest(user=prompt, tag="kg-construction"), transcript)
    tuples, rejects = parse_triples(resp.text)
    parsed = [make_triple(h, r, t, source_doc=source_doc, clause=chunk)
              for h, r, t in tuples]
    return ExtractionBatch(source_doc=source_doc, input_text=chunk,
                           raw_reply=resp.text, parsed=parsed, rejects=rejects)


def chunk_document(text: str, size: int = 600) -> list[str]:
    """Fixed-size character windows with one-sentence overlap.

    Sentences never split unless a single sentence exceeds the window, in
    which case it is hard-cut.
    """
    if size < 1:
        raise ValueError("size must be positive")
    sentences = [s for s in _SENTENCE_END.split(text.strip()) if s]
    pieces: list[str] = []
    for s in sentences:
        while len(s) > size:
            pieces.append(s[:size])
            s = s[size:]
        if s:
            pieces.append(s)

    def joined(parts: list[str]) -> int:
        return sum(len(p) for p in parts) + max(0, len(parts) - 1)

    chunks: list[str] = []
    current: list[str] = []
    for piece in pieces:
        if current and joined(current + [piece]) > size:
            chunks.append(" ".join(current))
            # one-sentence overlap, dropped if it alone would overflow the window
            current = [current[-1]] if joined([current[-1], piece]) <= size else []
        current.append(piece)
    if current:
        chunks.append(" ".join(current))
    return [c for c in chunks if c.strip()]


# -- review workflow ----------------------------------------------------------------

@dataclass
class ReviewItem:
    """One extracted triple awaiting a verdict.

    Reviewers may also append fresh cross-text records to a sheet; the
    convention for those is source_doc "manual:<reviewer-note>".
    """

    batch_id: str
    head: str
    relation: str
    tail: str
    source_doc: str | None = None
    clause: str | None = None
    verdict: str | None = None            # accept | edit | reject
    reason: str | None = None
    edit: dict | None = None              # {"head","relation","tail"} for verdict=edit

    def to_record(self) -> dict:
        record = {"batch_id": self.batch_id, "head": self.head,
                  "relation": self.relation, "tail": self.tail,
                  "source_doc": self.source_doc, "clause": self.clause,
                  "verdict": self.verdict}
        if self.reason is not None:
            record["reason"] = self.reason
        if self.edit is not None:
            record["edit"] = self.edit
        return record


@dataclass
class ReviewFile:
    items: list[ReviewItem] = field(default_factory=list)

    @classmethod
    def from_batches(cls, batches: list[ExtractionBatch]) -> "ReviewFile":
        """Unverdicted review sheet, one line per parsed triple."""
        items = []
        for n, batch in enumerate(batches, start=1):
            for t in batch.parsed:
                items.append(ReviewItem(
                    batch_id=f"{batch.source_doc}#{n}",
                    head=t.head.label, relation=t.relation.label, tail=t.tail.label,
                    source_doc=t.source_doc, clause=t.clause))
        return cls(items)

    def save(self, path: str | Path) -> None:
        lines = [json.dumps(item.to_record(), ensure_ascii=False) for item in self.items]
        Path(path).write_text("\n".join(lines) + ("\n" if lines else ""),
                              encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "ReviewFile":
        items = []
        with open(path, encoding="utf-8") as fh:
            for line_no, raw in enumerate(fh, start=1):
                line = raw.strip()
                if not line or line.startswith("#"):
                    continue
                try:
                    obj = json.loads(line)
                except json.JSONDecodeError as exc:
                    raise KgParseError(f"review line {line_no}: invalid JSON ({exc.msg})",
                                       line=line_no) from exc
                verdict = obj.get("verdict")
                if verdict is not None and verdict not in VERDICTS:
                    raise KgParseError(
                        f"review line {line_no}: unknown verdict {verdict!r}",
                        line=line_no)
                items.append(ReviewItem(
                    batch_id=obj.get("batch_id", ""), head=obj["head"],
                    relation=obj["relation"], tail=obj["tail"],
                    source_doc=obj.get("source_doc"), clause=obj.get("clause"),
                    verdict=verdict, reason=obj.get("reason"), edit=obj.get("edit")))
        return cls(items)


def apply_review(store: TripleStore, review: ReviewFile) -> tuple[int, int, int]:
    """Insert accepted/edited triples; returns (added, edited, rejected).

    Counts tally actual insertions, so re-applying the same review adds 0.
    All verdicts must be present up front — a partial sheet changes nothing.
    """
    missing = [i + 1 for i, item in enumerate(review.items) if item.verdict is None]
    if missing:
        raise IncompleteReview(
            f"{len(missing)} triple(s) lack a verdict (lines {missing[:10]})", missing)

    staged: list[tuple[str, Triple]] = []
    rejected = 0
    for item in review.items:
        if item.verdict == "reject":
            rejected += 1
            continue
        if item.verdict == "edit":
            edit = item.edit or {}
            t = make_triple(edit.get("head", item.head),
                            edit.get("relation", item.relation),
                            edit.get("tail", item.tail),
                            source_doc=item.source_doc, clause=item.clause)
        else:
            t = make_triple(item.head, item.relation, item.tail,
                            source_doc=item.source_doc, clause=item.clause)
        staged.append((item.verdict, t))

    added = edited = 0
    outcomes = store.insert_all([t for _, t in staged])
    for (verdict, _), (_, created) in zip(staged, outcomes):
        if created and verdict == "accept":
            added += 1
        elif created:
            edited += 1
    return added, edited, rejected


# -- fusion suggestions ----------------------------------------------------------------

def suggest_fusions(store: TripleStore) -> list[dict]:
    """Candidate entity merges for human review; never auto-applied.

    Two heuristics: labels equal after casefold + whitespace collapse, and
    entity pairs sharing at least two (relation, neighbor) edges.
    """
    labels = sorted(store.entity_set())

    def normalize(label: str) -> str:
        return " ".join(label.casefold().split())

    suggestions: list[dict] = []
    by_norm: dict[str, list[str]] = {}
    for label in labels:
        by_norm.setdefault(normalize(label), []).append(label)
    for norm, group in sorted(by_norm.items()):
        if len(group) > 1:
            suggestions.append({"kind": "near-duplicate-label",
                                "entities": group, "normalized": norm})

    edges: dict[str, set[tuple[str, str, str]]] = {label: set() for label in labels}
    for t in store.triples():
        edges[t.head.label].add(("out", t.relation.label, t.tail.label))
        edges[t.tail.label].add(("in", t.relation.label, t.head.label))
    for i, a in enumerate(labels):
        for b in labels[i + 1:]:
            shared = edges[a] & edges[b]
            if len(shared) >= 2:
                suggestions.append({
                    "kind": "shared-edges", "entities": [a, b],
                    "shared": sorted(f"{d}:{r}:{n}" for d, r, n in shared)})
    return suggestions
