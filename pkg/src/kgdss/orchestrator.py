"""Question-answering pipeline over the KG.

Stages: retrieve a scope, decompose the question into a logical query via
the LLM, execute the query as a stepwise prompt chain (or natively), then
synthesize an answer restricted to in-scope knowledge with citations.

Grounding is enforced mechanically, not by trusting the model: chain step
replies are clamped to the scope's entity set, and the synthesis context is
limited to scope triples, so every citation resolves to retrieved knowledge.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field, replace

from .errors import (DecompositionFailed, KgdssError, NoKnowledge,
                     QuerySyntaxError, StepParseFailed)
from .fol import (EntitySet, Intersection, Literal, LogicalQuery, Negation,
                  Projection, UnionQ, parse_query, render_query)
from .llm import Backend, ChatRequest, Transcript, complete
from .retrieval import Embedder, RetrievalScope, VectorIndex, build_scope
from .store import Triple, TripleStore
from .templates import PromptTemplateSet

STEP_REPLY_CONTRACT = ("Answer only with the entity labels, each wrapped in double "
                       "quotes, one per line. If no entity qualifies, answer none.")
INVERSE_NOTE = (" (traverse the relation in reverse: list the head entities "
                "connected to the given tail entities)")

_QUOTED = re.compile(r'"((?:[^"\\]|\\.)*)"')


@dataclass
class PromptStep:
    """One operator node of the chain; result filled in at execution."""

    op_kind: str                          # projection | intersection | union | negation
    rendered_prompt: str
    inputs: list                          # int = prior step index, frozenset = literal
    relation: str | None = None
    inverse: bool = False
    result: EntitySet | None = None
    reply: str | None = None
    discarded: tuple[str, ...] = ()

    def to_dict(self) -> dict:
        refs = [{"step": ref + 1} if isinstance(ref, int) else {"entities": sorted(ref)}
                for ref in self.inputs]
        return {
            "op_kind": self.op_kind,
            "prompt": self.rendered_prompt,
            "inputs": refs,
            "entities": sorted(self.result) if self.result is not None else None,
            "discarded": list(self.discarded),
            "reply": self.reply,
        }


@dataclass
class ReasoningTrace:
    question: str = ""
    logical_query: str | None = None
    mode: str = "native"                  # requested execution mode
    fallback: bool = False                # answered without a logical query
    scope_triple_count: int = 0
    scope_clause_count: int = 0
    scope_records: list[dict] = field(default_factory=list)
    steps: list[PromptStep] = field(default_factory=list)
    final_entities: EntitySet = frozenset()
    llm_calls: int = 0

    def to_dict(self) -> dict:
        return {
            "question": self.question,
            "logical_query": self.logical_query,
            "mode": self.mode,
            "fallback": self.fallback,
            "scope": {
                "triple_count": self.scope_triple_count,
                "clause_count": self.scope_clause_count,
                "triples": self.scope_records,
            },
            "steps": [s.to_dict() for s in self.steps],
            "final_entities": sorted(self.final_entities),
            "calls": self.llm_calls,
        }


@dataclass(frozen=True)
class Citation:
    triple_id: int
    source_doc: str | None
    clause: str | None

    def to_dict(self) -> dict:
        return {"triple_id": self.triple_id, "source_doc": self.source_doc,
                "clause": self.clause}


@dataclass
class GroundedAnswer:
    text: str
    citations: list[Citation]
    trace: ReasoningTrace

    def to_dict(self) -> dict:
        return {"answer": self.text,
                "citations": [c.to_dict() for c in self.citations],
                "trace": self.trace.to_dict()}


@dataclass
class AskOptions:
    k: int = 4
    expand_depth: int = 2
    mode: str = "native"                  # native | llm-chain
    max_attempts: int = 2
    min_score: float = 0.0
    decomposition: bool = True
    fallback: bool = True                 # unstructured answer when decomposition fails
    self_check: bool = False              # strip citations no longer in the store
    synthesis_temperature: float = 0.0
    history: list[tuple[str, str]] = field(default_factory=list)


# -- decomposition ---------------------------------------------------------------

def decompose(question: str, backend: Backend, templates: PromptTemplateSet,
              max_attempts: int, transcript: Transcript | None = None,
              history_summary: str = "") -> LogicalQuery:
    """LLM-guided translation of the question into the query grammar.

    Invalid replies are re-prompted with the parse error appended, up to
    max_attempts; engine-internal calls run at temperature 0.
    """
    if max_attempts < 1:
        raise ValueError("max_attempts must be >= 1")
    base = templates.render("decomposition", question=question)
    if history_summary:
        base = history_summary + "\n\n" + base
    prompt = base
    attempts: list[tuple[str, str]] = []
    for attempt in range(1, max_attempts + 1):
        resp = complete(backend, ChatRequest(user=prompt, tag=f"decompose-{attempt}"),
                        transcript)
        text = _strip_fences(resp.text)
        try:
            return parse_query(text)
        except QuerySyntaxError as exc:
            attempts.append((resp.text, str(exc)))
            prompt = (base + "\n\nYour previous reply was not a valid logical query: "
                      f"{exc}. Reply with only the logical query.")
    raise DecompositionFailed(
        f"no valid logical query after {max_attempts} attempt(s)", attempts)


def _strip_fences(text: str) -> str:
    text = text.strip()
    if text.startswith("```"):
        text = text.strip("`")
        first_newline = text.find("\n")
        if first_newline != -1 and " " not in text[:first_newline]:
            text = text[first_newline + 1:]  # drop a language tag line
    return text.strip()


# -- chain rendering --------------------------------------------------------------

def render_chain(q: LogicalQuery, templates: PromptTemplateSet) -> list[PromptStep]:
    """Post-order walk: one step per operator node, literals inlined.

    n-ary intersections/unions fold left pairwise (the templates are binary),
    contributing arity-1 steps each. Prior-step inputs appear as "<step N>"
    markers, substituted with actual entity sets at execution time.
    """
    steps: list[PromptStep] = []

    def fmt(ref) -> str:
        if isinstance(ref, int):
            return f"<step {ref + 1}>"
        return ", ".join(sorted(ref))

    def walk(node: LogicalQuery):
        if isinstance(node, Literal):
            return node.entities
        if isinstance(node, Projection):
            src = walk(node.source)
            prompt = templates.render("projection", entity=fmt(src), relation=node.relation)
            if node.inverse:
                prompt += INVERSE_NOTE
            steps.append(PromptStep("projection", prompt, [src],
                                    relation=node.relation, inverse=node.inverse))
            return len(steps) - 1
        if isinstance(node, (Intersection, UnionQ)):
            kind = "intersection" if isinstance(node, Intersection) else "union"
            refs = [walk(part) for part in node.parts]
            acc = refs[0]
            for nxt in refs[1:]:
                prompt = templates.render(kind, entities1=fmt(acc), entities2=fmt(nxt))
                steps.append(PromptStep(kind, prompt, [acc, nxt]))
                acc = len(steps) - 1
            return acc
        if isinstance(node, Negation):
            ref = walk(node.part)
            prompt = templates.render("negation", entities=fmt(ref))
            steps.append(PromptStep("negation", prompt, [ref]))
            return len(steps) - 1
        raise TypeError(f"not a logical query: {node!r}")

    walk(q)
    return steps


# -- chain execution --------------------------------------------------------------

def serialize_triples(triples: list[Triple]) -> str:
    return "\n".join(f"({t.head.label}, {t.relation.label}, {t.tail.label})"
                     for t in triples)


def parse_entity_reply(reply: str, step: int) -> list[str]:
    """Step replies are double-quoted labels (newline- or comma-separated);
    a bare `none` voices the empty set."""
    quoted = [m.group(1).replace('\\"', '"').replace("\\\\", "\\")
              for m in _QUOTED.finditer(reply)]
    if quoted:
        return quoted
    if reply.strip().rstrip(".").lower() == "none":
        return []
    raise StepParseFailed(f"step {step}: reply carries no quoted entity labels",
                          reply=reply, step=step)


def _substitute_markers(prompt: str, results: list[EntitySet]) -> str:
    for j, result in enumerate(results):
        prompt = prompt.replace(f"<step {j + 1}>", ", ".join(sorted(result)))
    return prompt


def execute_chain(scope: RetrievalScope, steps: list[PromptStep], backend: Backend,
                  templates: PromptTemplateSet,
                  transcript: Transcript | None = None) -> tuple[EntitySet, ReasoningTrace]:
    """Run each step against the LLM with the scope as context.

    Every prompt is framed by the decision-support template (serialized scope
    triples as context) plus the reply contract; parsed labels are clamped to
    the scope's entity set, with clamped-out labels recorded as discarded.
    """
    context = serialize_triples(scope.ordered_triples())
    universe = scope.universe
    executed: list[PromptStep] = []
    results: list[EntitySet] = []
    for i, step in enumerate(steps):
        question = _substitute_markers(step.rendered_prompt, results)
        full = (templates.render("decision_support", context_str=context,
                                 query_str=question)
                + "\n\n" + STEP_REPLY_CONTRACT)
        resp = complete(backend, ChatRequest(user=full, tag=f"chain-step-{i + 1}"),
                        transcript)
        parsed = parse_entity_reply(resp.text, step=i + 1)
        clamped = frozenset(parsed) & universe
        discarded = tuple(sorted(set(parsed) - universe))
        executed.append(replace(step, rendered_prompt=question, result=clamped,
                                reply=resp.text, discarded=discarded))
        results.append(clamped)
    final = results[-1] if results else frozenset()
    trace = ReasoningTrace(mode="llm-chain", steps=executed, final_entities=final)
    return final, trace


def execute_native(scope: RetrievalScope, steps: list[PromptStep]) -> tuple[EntitySet, list[PromptStep]]:
    """Evaluate the chain without LLM calls; step entity sets come from the
    query engine over the scope, so the trace shape matches llm-chain mode."""
    return execute_native_over(scope.as_store(), scope.universe, steps)


def execute_native_over(sub: TripleStore, universe: EntitySet,
                        steps: list[PromptStep]) -> tuple[EntitySet, list[PromptStep]]:
    executed: list[PromptStep] = []
    results: list[EntitySet] = []

    def resolve(ref) -> EntitySet:
        return results[ref] if isinstance(ref, int) else frozenset(ref) & universe

    for step in steps:
        inputs = [resolve(ref) for ref in step.inputs]
        if step.op_kind == "projection":
            matches = sub.lookup(relation=step.relation)
            if step.inverse:
                reached = {t.head.label for t in matches if t.tail.label in inputs[0]}
            else:
                reached = {t.tail.label for t in matches if t.head.label in inputs[0]}
            result = frozenset(reached) & universe
        elif step.op_kind == "intersection":
            result = inputs[0] & inputs[1]
        elif step.op_kind == "union":
            result = inputs[0] | inputs[1]
        else:
            result = universe - inputs[0]
        executed.append(replace(step,
                                rendered_prompt=_substitute_markers(step.rendered_prompt,
                                                                    results),
                                result=result))
        results.append(result)
    return (results[-1] if results else frozenset()), executed


def eval_trace(store: TripleStore, q: LogicalQuery, templates: PromptTemplateSet,
               universe=None) -> tuple[EntitySet, ReasoningTrace]:
    """Direct evaluator access with a chain-shaped trace; zero LLM calls.

    Agrees exactly with fol.evaluate on the same store and universe.
    """
    entities = frozenset(store.entity_set())
    u = entities if universe is None else frozenset(universe) & entities
    steps = render_chain(q, templates)
    final, executed = execute_native_over(store, u, steps)
    if not steps:
        assert isinstance(q, Literal)
        final = q.entities & u
    trace = ReasoningTrace(logical_query=render_query(q), mode="native",
                           steps=executed, final_entities=final)
    return final, trace


# -- answer synthesis --------------------------------------------------------------

def synthesize_answer(scope: RetrievalScope, question: str, result: EntitySet,
                      backend: Backend, templates: PromptTemplateSet,
                      transcript: Transcript | None = None,
                      temperature: float = 0.0) -> tuple[str, list[Citation], str]:
    """Grounded answer over scope triples incident to the result entities.

    Falls back to the whole scope when the restriction is empty; citations
    are the provenance of exactly the serialized triples. Returns (answer
    text, citations, rendered prompt).
    """
    if not scope.triples and not result:
        raise NoKnowledge("retrieval scope and result are both empty; "
                          "ingest knowledge into the KB first")
    restricted = [t for t in scope.ordered_triples()
                  if t.head.label in result or t.tail.label in result]
    if not restricted:
        restricted = scope.ordered_triples()
    prompt = templates.render("decision_support",
                              context_str=serialize_triples(restricted),
                              query_str=question)
    resp = complete(backend, ChatRequest(user=prompt, tag="synthesize",
                                         temperature=temperature), transcript)
    citations = [Citation(t.triple_id, t.source_doc, t.clause) for t in restricted]
    return resp.text, citations, prompt


# -- full pipeline ------------------------------------------------------------------

def summarize_history(history: list[tuple[str, str]], turn_bound: int = 5,
                      answer_chars: int = 200) -> str:
    if not history:
        return ""
    lines = ["Previous conversation:"]
    for question, answer in history[-turn_bound:]:
        lines.append(f"Q: {question}")
        lines.append(f"A: {answer[:answer_chars]}")
    return "\n".join(lines)


def _scope_records(scope: RetrievalScope) -> list[dict]:
    return [{"triple_id": t.triple_id, "head": t.head.label,
             "relation": t.relation.label, "tail": t.tail.label,
             "source_doc": t.source_doc}
            for t in scope.ordered_triples()]


def ask(store: TripleStore, index: VectorIndex, embedder: Embedder, backend: Backend,
        templates: PromptTemplateSet, question: str,
        options: AskOptions | None = None,
        transcript: Transcript | None = None) -> GroundedAnswer:
    """build_scope -> decompose -> (native | llm-chain) -> synthesize.

    Native mode runs zero chain LLM calls. When decomposition fails (or is
    disabled) and fallback is on, the scope is answered directly without a
    logical query, and the trace is flagged as an unstructured fallback.
    """
    opts = options or AskOptions()
    if opts.mode not in ("native", "llm-chain"):
        raise ValueError(f"unknown mode {opts.mode!r}")
    transcript = transcript if transcript is not None else Transcript()
    calls_before = len(transcript)

    scope = _stage("retrieve", lambda: build_scope(
        store, index, embedder, question, opts.k, opts.expand_depth, opts.min_score))
    trace = ReasoningTrace(question=question, mode=opts.mode,
                           scope_triple_count=len(scope.triples),
                           scope_clause_count=len(scope.clauses),
                           scope_records=_scope_records(scope))

    query: LogicalQuery | None = None
    if opts.decomposition:
        try:
            query = decompose(question, backend, templates, opts.max_attempts,
                              transcript, summarize_history(opts.history))
        except DecompositionFailed:
            if not opts.fallback:
                raise
    if query is None:
        trace.fallback = True
        text, citations, _ = _stage("synthesize", lambda: synthesize_answer(
            scope, question, frozenset(), backend, templates, transcript,
            opts.synthesis_temperature))
    else:
        trace.logical_query = render_query(query)
        steps = render_chain(query, templates)
        if opts.mode == "native":
            final, executed = execute_native(scope, steps)
        else:
            final, chain_trace = _stage("execute-chain", lambda: execute_chain(
                scope, steps, backend, templates, transcript))
            executed = chain_trace.steps
        if not steps:
            assert isinstance(query, Literal)  # only literals render to zero steps
            final = query.entities & scope.universe
        trace.steps = executed
        trace.final_entities = final
        text, citations, _ = _stage("synthesize", lambda: synthesize_answer(
            scope, question, final, backend, templates, transcript,
            opts.synthesis_temperature))

    if opts.self_check:
        citations = [c for c in citations if store.get(c.triple_id) is not None]
    trace.llm_calls = len(transcript) - calls_before
    return GroundedAnswer(text=text, citations=citations, trace=trace)


def _stage(name: str, thunk):
    try:
        return thunk()
    except KgdssError as exc:
        if exc.stage is None:
            exc.stage = name
        raise


class Session:
    """Multi-turn conversation: prior turns feed decomposition as a bounded
    summary (last `turn_bound` question/answer pairs)."""

    def __init__(self, store: TripleStore, index: VectorIndex, embedder: Embedder,
                 backend: Backend, templates: PromptTemplateSet,
                 turn_bound: int = 5, transcript: Transcript | None = None):
        self.store = store
        self.index = index
        self.embedder = embedder
        self.backend = backend
        self.templates = templates
        self.turn_bound = turn_bound
        self.transcript = transcript
        self.history: list[tuple[str, str]] = []

    def ask_turn(self, question: str, options: AskOptions | None = None) -> GroundedAnswer:
        opts = options or AskOptions()
        opts.history = self.history[-self.turn_bound:]
        answer = ask(self.store, self.index, self.embedder, self.backend,
                     self.templates, question, opts, self.transcript)
        self.history.append((question, answer.text))
        return answer
