from __future__ import annotations

import pytest

from kgdss.construction import (ExtractionBatch, ReviewFile, ReviewItem,
                                apply_review, chunk_document, extract,
                                parse_triples, suggest_fusions)
from kgdss.errors import IncompleteReview
from kgdss.llm import ScriptedBackend
from kgdss.store import TripleStore, make_triple
from kgdss.templates import PromptTemplateSet

from conftest import AMMONIA_TUPLES, store_from

AMMONIA_INPUT = (
    "Ammonia is an irritating gas that can form explosive mixtures with air; "
    "inhalation can cause toxic pulmonary edema. It can cause eye, skin, and "
    "respiratory tract burns; if the gas leak cannot be shut off, the flame at "
    "the leak site should not be extinguished; when handling liquid ammonia, "
    "wear cold-resistant clothing."
)

AMMONIA_OUTPUT = (
    "(Ammonia, is, irritating gas) <|> (Ammonia, form, explosive mixtures with air)"
    " <|> (Ammonia, cause, toxic pulmonary edema) <|> (Ammonia, cause, eye burns)"
    " <|> (Ammonia, cause, skin burns) <|> (Ammonia, cause, respiratory tract burns)"
    " <|> (Handling liquid ammonia, require ,wearing cold-resistant clothing)"
)


def test_parse_triples_on_documented_output():
    parsed, rejects = parse_triples(AMMONIA_OUTPUT)
    assert parsed == AMMONIA_TUPLES
    assert rejects == []


def test_parse_triples_empty_reply():
    assert parse_triples("") == ([], [])
    assert parse_triples("   ") == ([], [])


def test_parse_triples_field_count_violations():
    parsed, rejects = parse_triples("(a, b) <|> (x, y, z)")
    assert parsed == [("x", "y", "z")]
    assert rejects == [("(a, b)", "field count 2")]
    _, rejects = parse_triples("(a,b,c,d)")
    assert rejects == [("(a,b,c,d)", "field count 4")]


def test_parse_triples_trims_fields():
    parsed, _ = parse_triples("  (x , y , z)  ")
    assert parsed == [("x", "y", "z")]


def test_parse_triples_requires_parentheses():
    parsed, rejects = parse_triples("a, b, c <|> (d, e, f)")
    assert parsed == [("d", "e", "f")]
    assert rejects[0][1] == "not parenthesized"


def test_parse_triples_partition_complete():
    reply = "(a,b,c) <|> junk <|> (p,q) <|> (x,y,z)"
    parsed, rejects = parse_triples(reply)
    chunk_count = len([c for c in reply.split("<|>") if c.strip()])
    assert len(parsed) + len(rejects) == chunk_count


def test_extract_attaches_provenance_to_every_triple():
    backend = ScriptedBackend([("Extract all of the knowledge triples", AMMONIA_OUTPUT)])
    batch = extract(AMMONIA_INPUT, "ammonia-quickref", backend,
                    PromptTemplateSet.defaults())
    assert len(batch.parsed) == 7
    assert batch.parsed[0].key() == ("Ammonia", "is", "irritating gas")
    assert all(t.source_doc == "ammonia-quickref" for t in batch.parsed)
    assert all(t.clause == AMMONIA_INPUT for t in batch.parsed)
    assert batch.rejects == []


def test_extract_prompt_embeds_the_chunk():
    backend = ScriptedBackend([(f'INPUT: "{AMMONIA_INPUT}"', "")])
    batch = extract(AMMONIA_INPUT, "doc", backend, PromptTemplateSet.defaults())
    assert batch.parsed == [] and batch.rejects == []


def _review_from_ammonia(verdicts: list[str | None]) -> ReviewFile:
    items = []
    for (h, r, t), verdict in zip(AMMONIA_TUPLES, verdicts):
        items.append(ReviewItem(batch_id="ammonia#1", head=h, relation=r, tail=t,
                                source_doc="ammonia-quickref", clause=AMMONIA_INPUT,
                                verdict=verdict))
    return ReviewFile(items)


def test_apply_review_all_accept():
    store = TripleStore()
    review = _review_from_ammonia(["accept"] * 7)
    assert apply_review(store, review) == (7, 0, 0)
    assert len(store) == 7


def test_apply_review_missing_verdict_changes_nothing():
    store = TripleStore()
    review = _review_from_ammonia(["accept"] * 6 + [None])
    with pytest.raises(IncompleteReview):
        apply_review(store, review)
    assert len(store) == 0


def test_apply_review_idempotent():
    store = TripleStore()
    review = _review_from_ammonia(["accept", "accept", "reject", "accept",
                                   "accept", "accept", "accept"])
    first = apply_review(store, review)
    assert first == (6, 0, 1)
    state = sorted(t.content() for t in store.triples())
    second = apply_review(store, review)
    assert second == (0, 0, 1)
    assert sorted(t.content() for t in store.triples()) == state


def test_apply_review_edit_inserts_the_edited_triple():
    store = TripleStore()
    items = [ReviewItem(batch_id="b", head="Amonia", relation="is", tail="gas",
                        verdict="edit", edit={"head": "Ammonia"})]
    assert apply_review(store, ReviewFile(items)) == (0, 1, 0)
    assert store.lookup(head="Ammonia") != set()
    assert store.lookup(head="Amonia") == set()


def test_review_file_round_trip(tmp_path):
    review = _review_from_ammonia(["accept"] * 6 + ["reject"])
    review.items[-1].reason = "redundant"
    path = tmp_path / "review.jsonl"
    review.save(path)
    loaded = ReviewFile.load(path)
    assert [i.to_record() for i in loaded.items] == \
        [i.to_record() for i in review.items]


def test_review_file_from_batches_starts_unverdicted():
    batch = ExtractionBatch(source_doc="doc", input_text="text", raw_reply="",
                            parsed=[make_triple("a", "r", "b", source_doc="doc",
                                                clause="text")],
                            rejects=[])
    review = ReviewFile.from_batches([batch])
    assert len(review.items) == 1
    assert review.items[0].verdict is None


def test_chunk_document_windows_and_overlap():
    sentences = [f"Sentence number {i} says something useful." for i in range(8)]
    text = " ".join(sentences)
    chunks = chunk_document(text, size=120)
    assert len(chunks) > 1
    assert all(len(c) <= 120 for c in chunks)
    for before, after in zip(chunks, chunks[1:]):
        # one-sentence overlap: the next window re-opens with the prior's last sentence
        assert after.split(".")[0] + "." in before


def test_chunk_document_hard_splits_oversized_sentence():
    chunks = chunk_document("x" * 500, size=100)
    assert all(len(c) <= 100 for c in chunks)
    assert "".join(chunks) == "x" * 500


def test_suggest_fusions_flags_near_duplicates_and_shared_edges():
    store = store_from([
        ("Sulfur Dioxide", "requires protection", "Level 2"),
        ("sulfur  dioxide", "requires protection", "Level 2"),
        ("Acetylene", "requires protection", "Level 2"),
        ("Acetylene", "is", "flammable gas"),
        ("Welding gas", "requires protection", "Level 2"),
        ("Welding gas", "is", "flammable gas"),
    ])
    suggestions = suggest_fusions(store)
    kinds = {s["kind"] for s in suggestions}
    assert "near-duplicate-label" in kinds
    near = next(s for s in suggestions if s["kind"] == "near-duplicate-label")
    assert set(near["entities"]) == {"Sulfur Dioxide", "sulfur  dioxide"}
    shared = [s for s in suggestions if s["kind"] == "shared-edges"]
    assert any(set(s["entities"]) == {"Acetylene", "Welding gas"} for s in shared)
    # suggestions never mutate the store
    assert len(store) == 6
