#!/usr/bin/env python3
"""End-to-end demo on the shipped protection fixture, no model required.

Runs the same question through native evaluation and the scripted prompt
chain, shows the reasoning steps, and prints the cited source clauses.
"""
from __future__ import annotations

import sys
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(ROOT / "src"))

from kgdss import (AskOptions, ScriptedBackend, ask, build_index, build_scope,
                   execute_native, load, parse_query, render_chain)
from kgdss.retrieval import HashEmbedder
from kgdss.templates import REFRAIN_SENTENCE, PromptTemplateSet

QUESTION = ("What protective equipment is required when sulfur dioxide and "
            "acetylene leak in a moderate toxicity, low hazard zone?")
QUERY = ('and(p({"Acetylene"}, "requires protection"), '
         'p({"Moderate toxicity, low hazard zone"}, "Protection level"), '
         'p({"Sulfur dioxide"}, "requires protection"))')
ANSWER = ("Equip to protection Level 2: a positive-pressure self-contained "
          "respirator and fully sealed chemical protective clothing.")


def reply_for(entities) -> str:
    return "\n".join(f'"{e}"' for e in sorted(entities)) if entities else "none"


def main() -> None:
    store = load(ROOT / "fixtures" / "protection.kg")
    embedder = HashEmbedder()
    index = build_index(store, embedder)
    templates = PromptTemplateSet.defaults()

    print(f"KB: {len(store)} triples, {len(store.entity_set())} entities")
    print(f"question: {QUESTION}\n")

    for mode in ("native", "llm-chain"):
        script = [("Logical query:", QUERY)]
        if mode == "llm-chain":
            scope = build_scope(store, index, embedder, QUESTION, 4, 2)
            steps = render_chain(parse_query(QUERY), templates)
            _, executed = execute_native(scope, steps)
            script += [(None, reply_for(s.result)) for s in executed]
        script.append((REFRAIN_SENTENCE, ANSWER))

        answer = ask(store, index, embedder, ScriptedBackend(script), templates,
                     QUESTION, AskOptions(mode=mode))
        trace = answer.trace
        print(f"== mode: {mode} ==")
        print(f"logical query: {trace.logical_query}")
        for i, step in enumerate(trace.steps, start=1):
            result = ", ".join(sorted(step.result)) or "-"
            print(f"  step {i} [{step.op_kind}] -> {result}")
        print(f"final entities: {', '.join(sorted(trace.final_entities))}")
        print(f"LLM calls: {trace.llm_calls}")
        print(f"answer: {answer.text}")
        print("citations:")
        for c in answer.citations:
            print(f"  [{c.triple_id}] {c.source_doc}: {c.clause}")
        print()


if __name__ == "__main__":
    main()
