"""kgdss: knowledge-graph-grounded decision support.

A provenance-tracked triple store, a four-operation logical query language
(projection / intersection / union / negation) with neighborhood expansion,
vector retrieval of the relevant KG portion, and an LLM prompt-chain
pipeline that answers questions citing only retrieved knowledge.
"""

__version__ = "0.1.0"

from .fol import (EntitySet, Intersection, Literal, LogicalQuery, Negation,
                  Neighborhood, Projection, UnionQ, evaluate,
                  expand_neighborhood, parse_query, render_query)
from .llm import (ChatRequest, ChatResponse, HttpChatBackend, ScriptedBackend,
                  Transcript, complete)
from .orchestrator import (AskOptions, Citation, GroundedAnswer, PromptStep,
                           ReasoningTrace, Session, ask, decompose,
                           execute_chain, execute_native, render_chain,
                           synthesize_answer)
from .retrieval import (HashEmbedder, HttpEmbedder, RetrievalScope,
                        VectorIndex, build_index, build_scope, top_k,
                        triple_text)
from .store import (Entity, Relation, Schema, Triple, TripleStore, load,
                    make_triple, save)
from .templates import PromptTemplateSet, REFRAIN_SENTENCE

__all__ = [
    "AskOptions", "ChatRequest", "ChatResponse", "Citation", "Entity",
    "EntitySet", "GroundedAnswer", "HashEmbedder", "HttpChatBackend",
    "HttpEmbedder", "Intersection", "Literal", "LogicalQuery", "Negation",
    "Neighborhood", "Projection", "PromptStep", "PromptTemplateSet",
    "REFRAIN_SENTENCE", "ReasoningTrace", "Relation", "RetrievalScope",
    "ScriptedBackend", "Schema", "Session", "Transcript", "Triple",
    "TripleStore", "UnionQ", "VectorIndex", "ask", "build_index",
    "build_scope", "complete", "decompose", "evaluate", "execute_chain",
    "execute_native", "expand_neighborhood", "load", "make_triple",
    "parse_query", "render_chain", "render_query", "save",
    "synthesize_answer", "top_k", "triple_text",
]
