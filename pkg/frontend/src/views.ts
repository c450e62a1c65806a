/** Pure view-model builders. Everything shown on screen is derived here
 * from a single server response, which keeps the grounding invariant
 * checkable: no entity or clause can appear that the server didn't send. */

import type { AskResponse, Citation, ScopeTriple, Trace } from "./types.js";

export interface CitationChip {
  tripleId: number;
  label: string;
  hover: string; // clause text + source doc, shown on hover
}

export interface AnswerPanel {
  answerText: string;
  chips: CitationChip[];
  finalEntities: string[];
}

export function buildAnswerPanel(response: AskResponse): AnswerPanel {
  const chips = response.citations.map((c) => ({
    tripleId: c.triple_id,
    label: c.source_doc ?? `triple ${c.triple_id}`,
    hover: [c.source_doc ?? "unattributed", c.clause ?? "(no clause recorded)"]
      .join(" — "),
  }));
  return {
    answerText: response.answer,
    chips,
    finalEntities: [...response.trace.final_entities],
  };
}

export interface TraceCard {
  index: number; // 1-based, server order
  opKind: string;
  promptExcerpt: string;
  entities: string[];
  discarded: string[]; // rendered struck-through
}

export interface TraceViewModel {
  logicalQuery: string | null;
  modeBadge: string; // "native" | "llm-chain"
  fallbackNotice: boolean;
  cards: TraceCard[];
}

const PROMPT_EXCERPT_CHARS = 160;

export function buildTraceView(trace: Trace): TraceViewModel {
  const cards = trace.steps.map((step, i) => ({
    index: i + 1,
    opKind: step.op_kind,
    promptExcerpt:
      step.prompt.length > PROMPT_EXCERPT_CHARS
        ? step.prompt.slice(0, PROMPT_EXCERPT_CHARS) + "…"
        : step.prompt,
    entities: [...(step.entities ?? [])],
    discarded: [...step.discarded],
  }));
  return {
    logicalQuery: trace.logical_query,
    modeBadge: trace.mode,
    fallbackNotice: trace.fallback,
    cards,
  };
}

export interface GraphNode {
  id: string;
  cited: boolean; // touches at least one cited triple
}

export interface GraphEdge {
  tripleId: number;
  source: string;
  target: string;
  relation: string;
  cited: boolean;
}

export interface NeighborhoodViewModel {
  nodes: GraphNode[];
  edges: GraphEdge[];
  highlightCount: number; // == number of citations present in the scope
  empty: boolean;
}

export function buildNeighborhoodView(
  scope: ScopeTriple[],
  citations: Citation[],
): NeighborhoodViewModel {
  const citedIds = new Set(citations.map((c) => c.triple_id));
  const edges: GraphEdge[] = scope.map((t) => ({
    tripleId: t.triple_id,
    source: t.head,
    target: t.tail,
    relation: t.relation,
    cited: citedIds.has(t.triple_id),
  }));
  const citedNodes = new Set<string>();
  for (const e of edges) {
    if (e.cited) {
      citedNodes.add(e.source);
      citedNodes.add(e.target);
    }
  }
  const labels = new Set<string>();
  for (const e of edges) {
    labels.add(e.source);
    labels.add(e.target);
  }
  const nodes = [...labels].sort().map((id) => ({ id, cited: citedNodes.has(id) }));
  return {
    nodes,
    edges,
    highlightCount: edges.filter((e) => e.cited).length,
    empty: edges.length === 0,
  };
}

/** Node click filters the citation list to triples touching that entity. */
export function citationsForNode(
  nodeId: string,
  scope: ScopeTriple[],
  citations: Citation[],
): Citation[] {
  const touching = new Set(
    scope
      .filter((t) => t.head === nodeId || t.tail === nodeId)
      .map((t) => t.triple_id),
  );
  return citations.filter((c) => touching.has(c.triple_id));
}
