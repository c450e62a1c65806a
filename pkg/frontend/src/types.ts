/** Wire types for the decision-support service API (shapes as served). */

export interface Citation {
  triple_id: number;
  source_doc: string | null;
  clause: string | null;
}

export interface StepInput {
  step?: number;
  entities?: string[];
}

export interface TraceStep {
  op_kind: string;
  prompt: string;
  inputs: StepInput[];
  entities: string[] | null;
  discarded: string[];
  reply: string | null;
}

export interface ScopeTriple {
  triple_id: number;
  head: string;
  relation: string;
  tail: string;
  source_doc: string | null;
}

export interface Trace {
  question: string;
  logical_query: string | null;
  mode: string;
  fallback: boolean;
  scope: {
    triple_count: number;
    clause_count: number;
    triples: ScopeTriple[];
  };
  steps: TraceStep[];
  final_entities: string[];
  calls: number;
}

export interface AskResponse {
  answer: string;
  citations: Citation[];
  trace: Trace;
}

export interface HealthResponse {
  version: string;
  kb_loaded: boolean;
  kb_digest: string | null;
  triples: number;
}

export interface AskOptions {
  k?: number;
  expand_depth?: number;
  mode?: string;
  history?: [string, string][];
}
