from __future__ import annotations

import json
import shutil

from fastapi.testclient import TestClient

from kgdss.api import EngineState, create_app
from kgdss.config import Config
from kgdss.fol import parse_query
from kgdss.llm import ScriptedBackend
from kgdss.templates import REFRAIN_SENTENCE

from conftest import PPE_QUERY, PPE_QUESTION, FIXTURES

TOKEN = "test-write-token"
AMMONIA_OUTPUT = (
    "(Ammonia, is, irritating gas) <|> (Ammonia, form, explosive mixtures with air)"
    " <|> (Ammonia, cause, toxic pulmonary edema) <|> (Ammonia, cause, eye burns)"
    " <|> (Ammonia, cause, skin burns) <|> (Ammonia, cause, respiratory tract burns)"
    " <|> (Handling liquid ammonia, require ,wearing cold-resistant clothing)"
)


def make_client(tmp_path, kb="protection.kg", script=None, loaded=True,
                **config_overrides) -> TestClient:
    config_kwargs = dict(write_token=TOKEN, llm_backend="scripted",
                         llm_script_path="unused", mode="native")
    config_kwargs.update(config_overrides)
    if loaded:
        kb_path = tmp_path / "kb.kg"
        shutil.copy(FIXTURES / kb, kb_path)
        schema_src = FIXTURES / f"{kb}.schema.json"
        if schema_src.exists():
            shutil.copy(schema_src, tmp_path / "kb.kg.schema.json")
        config_kwargs["kb_path"] = str(kb_path)
    config = Config(**config_kwargs)
    state = EngineState(config=config)
    state.embedder = config.make_embedder()
    state.backend = ScriptedBackend(script or [])
    state.templates = config.make_templates()
    if loaded:
        state.load_kb(config.kb_path)
    return TestClient(create_app(state))


def ppe_script():
    return [("Logical query:", PPE_QUERY),
            (REFRAIN_SENTENCE, "Equip to Level 2.")]


def test_health_reports_digest_and_size(tmp_path):
    client = make_client(tmp_path)
    body = client.get("/health").json()
    assert body["kb_loaded"] is True
    assert body["triples"] == 7
    assert body["kb_digest"]


def test_health_digest_changes_iff_triples_change(tmp_path):
    client = make_client(tmp_path)
    before = client.get("/health").json()["kb_digest"]
    record = {"head": "new", "relation": "r", "tail": "triple"}
    client.post("/v1/triples", json=record, headers={"X-Write-Token": TOKEN})
    after = client.get("/health").json()["kb_digest"]
    assert before != after
    # duplicate insert: digest stays put
    client.post("/v1/triples", json=record, headers={"X-Write-Token": TOKEN})
    assert client.get("/health").json()["kb_digest"] == after


def test_ask_fixture_question(tmp_path):
    client = make_client(tmp_path, script=ppe_script())
    resp = client.post("/v1/ask", json={"question": PPE_QUESTION})
    assert resp.status_code == 200
    body = resp.json()
    assert body["answer"] == "Equip to Level 2."
    assert body["citations"]
    parse_query(body["trace"]["logical_query"])  # must be valid grammar
    assert body["trace"]["final_entities"] == ["Level 2"]
    assert resp.headers["X-Request-Id"]


def test_ask_empty_question_is_400(tmp_path):
    client = make_client(tmp_path)
    resp = client.post("/v1/ask", json={"question": "  "})
    assert resp.status_code == 400
    resp = client.post("/v1/ask", json={})
    assert resp.status_code == 400


def test_ask_before_kb_load_is_503(tmp_path):
    client = make_client(tmp_path, loaded=False)
    resp = client.post("/v1/ask", json={"question": "anything"})
    assert resp.status_code == 503
    assert resp.json()["error"]["code"] == "kb_not_loaded"


def test_ask_unknown_option_is_400(tmp_path):
    client = make_client(tmp_path, script=ppe_script())
    resp = client.post("/v1/ask", json={"question": "q", "options": {"bogus": 1}})
    assert resp.status_code == 400
    assert "bogus" in resp.json()["error"]["message"]


def test_ask_backend_failure_is_502(tmp_path):
    client = make_client(tmp_path, script=[])  # script exhausted immediately
    resp = client.post("/v1/ask", json={"question": "q"})
    assert resp.status_code == 502


def test_ask_decomposition_failure_without_fallback_is_422(tmp_path):
    client = make_client(tmp_path, script=[(None, "junk"), (None, "junk")],
                         fallback=False)
    resp = client.post("/v1/ask", json={"question": "q"})
    assert resp.status_code == 422
    assert resp.json()["error"]["code"] == "decomposition_failed"


def test_eval_endpoint_level_2(tmp_path):
    client = make_client(tmp_path)
    q = 'p({"Moderate toxicity, low hazard zone"},"Protection level")'
    resp = client.post("/v1/eval", json={"query": q})
    assert resp.status_code == 200
    body = resp.json()
    assert body["entities"] == ["Level 2"]
    assert body["trace"]["steps"][0]["op_kind"] == "projection"


def test_eval_syntax_error_is_400_with_offset(tmp_path):
    client = make_client(tmp_path)
    resp = client.post("/v1/eval", json={"query": "p("})
    assert resp.status_code == 400
    assert "byte offset" in resp.json()["error"]["message"]


def test_eval_respects_universe(tmp_path):
    client = make_client(tmp_path)
    resp = client.post("/v1/eval", json={
        "query": 'not({"Level 2"})',
        "universe": ["Level 2", "Acetylene", "Sulfur dioxide"]})
    assert sorted(resp.json()["entities"]) == ["Acetylene", "Sulfur dioxide"]


def test_triples_get_ammonia_cause(tmp_path):
    client = make_client(tmp_path, kb="ammonia.kg")
    resp = client.get("/v1/triples", params={"head": "Ammonia", "relation": "cause"})
    assert resp.status_code == 200
    assert len(resp.json()["triples"]) == 4


def test_triples_post_requires_token(tmp_path):
    client = make_client(tmp_path)
    record = {"head": "a", "relation": "r", "tail": "b"}
    assert client.post("/v1/triples", json=record).status_code == 401
    assert client.post("/v1/triples", json=record,
                       headers={"X-Write-Token": "wrong"}).status_code == 401
    ok = client.post("/v1/triples", json=record, headers={"X-Write-Token": TOKEN})
    assert ok.status_code == 200
    assert ok.json()["created"] is True


def test_delete_source_then_lookup_empty(tmp_path):
    client = make_client(tmp_path, kb="ammonia.kg")
    resp = client.delete("/v1/sources/ammonia-quickref",
                         headers={"X-Write-Token": TOKEN})
    assert resp.json()["removed"] == 7
    assert client.get("/v1/triples",
                      params={"source": "ammonia-quickref"}).json()["triples"] == []
    # unknown source: still 200, removed 0
    resp = client.delete("/v1/sources/never-was", headers={"X-Write-Token": TOKEN})
    assert resp.status_code == 200
    assert resp.json()["removed"] == 0


def test_mutation_persists_to_kb_file(tmp_path):
    client = make_client(tmp_path)
    client.post("/v1/triples", json={"head": "a", "relation": "r", "tail": "b"},
                headers={"X-Write-Token": TOKEN})
    lines = [json.loads(line)
             for line in (tmp_path / "kb.kg").read_text().splitlines()
             if line and not line.startswith("#")]
    assert {"head": "a", "relation": "r", "tail": "b"} in lines


def test_ingest_ammonia_chunk(tmp_path):
    client = make_client(tmp_path, script=[("Extract all", AMMONIA_OUTPUT)])
    resp = client.post("/v1/ingest", json={"text": "ammonia source text",
                                           "source_doc": "ammonia-quickref"})
    assert resp.status_code == 200
    body = resp.json()
    assert len(body["parsed"]) == 7
    assert body["rejects"] == []
    assert body["parsed"][0]["head"] == "Ammonia"


def test_review_apply_and_idempotence(tmp_path):
    client = make_client(tmp_path)
    review = [{"head": "x", "relation": "r", "tail": "y", "verdict": "accept"}]
    first = client.post("/v1/review/apply", json={"review": review},
                        headers={"X-Write-Token": TOKEN})
    assert first.json() == {"added": 1, "edited": 0, "rejected": 0}
    second = client.post("/v1/review/apply", json={"review": review},
                         headers={"X-Write-Token": TOKEN})
    assert second.json() == {"added": 0, "edited": 0, "rejected": 0}


def test_review_apply_missing_verdict_is_409(tmp_path):
    client = make_client(tmp_path)
    review = [{"head": "x", "relation": "r", "tail": "y"}]
    resp = client.post("/v1/review/apply", json={"review": review},
                       headers={"X-Write-Token": TOKEN})
    assert resp.status_code == 409
    assert resp.json()["error"]["code"] == "incomplete_review"


def test_malformed_body_is_400(tmp_path):
    client = make_client(tmp_path)
    resp = client.post("/v1/ask", content=b"not json",
                       headers={"Content-Type": "application/json"})
    assert resp.status_code == 400
