/** Response shaped like the fixture service's protective-equipment turn. */

import type { AskResponse } from "../../src/types.js";

export const PPE_RESPONSE: AskResponse = {
  answer:
    "Equip to protection Level 2: a positive-pressure self-contained respirator " +
    "and fully sealed chemical protective clothing.",
  citations: [
    { triple_id: 1, source_doc: "zone-grading-spec",
      clause: "Areas graded as moderate toxicity with a low hazard extent are assigned protection level 2." },
    { triple_id: 2, source_doc: "so2-response-card",
      clause: "Responders handling sulfur dioxide releases shall equip to protection level 2." },
    { triple_id: 3, source_doc: "acetylene-response-card",
      clause: "Acetylene release response requires protection level 2 equipment." },
    { triple_id: 4, source_doc: "ppe-grading-spec",
      clause: "Protection level 2 requires a positive-pressure self-contained respirator." },
    { triple_id: 5, source_doc: "ppe-grading-spec",
      clause: "Protection level 2 requires fully sealed chemical protective clothing." },
  ],
  trace: {
    question:
      "What protective equipment is required when sulfur dioxide and acetylene " +
      "leak in a moderate toxicity, low hazard zone?",
    logical_query:
      'and(p({"Acetylene"}, "requires protection"), ' +
      'p({"Moderate toxicity, low hazard zone"}, "Protection level"), ' +
      'p({"Sulfur dioxide"}, "requires protection"))',
    mode: "llm-chain",
    fallback: false,
    scope: {
      triple_count: 5,
      clause_count: 5,
      triples: [
        { triple_id: 1, head: "Moderate toxicity, low hazard zone",
          relation: "Protection level", tail: "Level 2",
          source_doc: "zone-grading-spec" },
        { triple_id: 2, head: "Sulfur dioxide", relation: "requires protection",
          tail: "Level 2", source_doc: "so2-response-card" },
        { triple_id: 3, head: "Acetylene", relation: "requires protection",
          tail: "Level 2", source_doc: "acetylene-response-card" },
        { triple_id: 4, head: "Level 2", relation: "requires",
          tail: "positive-pressure respirator", source_doc: "ppe-grading-spec" },
        { triple_id: 5, head: "Level 2", relation: "requires",
          tail: "chemical protective clothing", source_doc: "ppe-grading-spec" },
      ],
    },
    steps: [
      { op_kind: "projection", prompt: 'What are the entities connected to "Acetylene" by relation "requires protection"',
        inputs: [{ entities: ["Acetylene"] }], entities: ["Level 2"],
        discarded: [], reply: '"Level 2"' },
      { op_kind: "projection", prompt: 'What are the entities connected to "Moderate toxicity, low hazard zone" by relation "Protection level"',
        inputs: [{ entities: ["Moderate toxicity, low hazard zone"] }],
        entities: ["Level 2"], discarded: [], reply: '"Level 2"' },
      { op_kind: "projection", prompt: 'What are the entities connected to "Sulfur dioxide" by relation "requires protection"',
        inputs: [{ entities: ["Sulfur dioxide"] }], entities: ["Level 2"],
        discarded: ["Fabricated entity"], reply: '"Level 2"\n"Fabricated entity"' },
      { op_kind: "intersection", prompt: 'What are the entities in the intersection of "Level 2" and "Level 2"',
        inputs: [{ step: 1 }, { step: 2 }], entities: ["Level 2"],
        discarded: [], reply: '"Level 2"' },
      { op_kind: "intersection", prompt: 'What are the entities in the intersection of "Level 2" and "Level 2"',
        inputs: [{ step: 4 }, { step: 3 }], entities: ["Level 2"],
        discarded: [], reply: '"Level 2"' },
    ],
    final_entities: ["Level 2"],
    calls: 7,
  },
};

export function jsonResponse(body: unknown, status = 200): Response {
  return new Response(JSON.stringify(body), {
    status,
    headers: { "Content-Type": "application/json" },
  });
}
