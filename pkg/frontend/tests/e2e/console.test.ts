/** End-to-end: spawn the fixture service, run one full ask turn through the
 * real HTTP API, and render every panel from the live response. */

import { type ChildProcess, spawn } from "node:child_process";
import { fileURLToPath } from "node:url";
import path from "node:path";

import { Window } from "happy-dom";
import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { ApiClient } from "../../src/api.js";
import { renderAnswerPanel, renderNeighborhood, renderTraceStepper } from "../../src/dom.js";
import { Session } from "../../src/session.js";
import {
  buildAnswerPanel,
  buildNeighborhoodView,
  buildTraceView,
  citationsForNode,
} from "../../src/views.js";

const PORT = 8231;
const BASE = `http://127.0.0.1:${PORT}`;
const REPO_ROOT = path.resolve(
  path.dirname(fileURLToPath(import.meta.url)), "..", "..", "..");
const QUESTION =
  "What protective equipment is required when sulfur dioxide and acetylene " +
  "leak in a moderate toxicity, low hazard zone?";

let service: ChildProcess;

async function waitForHealth(timeoutMs = 25000): Promise<void> {
  const deadline = Date.now() + timeoutMs;
  let lastError: unknown = null;
  while (Date.now() < deadline) {
    try {
      const resp = await fetch(`${BASE}/health`);
      if (resp.ok) return;
    } catch (err) {
      lastError = err;
    }
    await new Promise((r) => setTimeout(r, 300));
  }
  throw new Error(`fixture service never became healthy: ${String(lastError)}`);
}

beforeAll(async () => {
  service = spawn(
    "python3",
    ["scripts/run_fixture_service.py", "--port", String(PORT)],
    { cwd: REPO_ROOT, stdio: ["ignore", "pipe", "pipe"] },
  );
  service.stderr?.on("data", (chunk: Buffer) => {
    process.stderr.write(`[service] ${chunk.toString()}`);
  });
  await waitForHealth();
});

afterAll(() => {
  service?.kill();
});

describe("console against the fixture service", () => {
  it("one ask turn: answer text, citation chips, stepper, neighborhood chain", async () => {
    const client = new ApiClient(BASE);
    const session = new Session(client);
    await session.refreshDigest();
    expect(session.kbDigest).toBeTruthy();

    const turn = await session.askTurn(QUESTION);
    const response = turn.response;
    const doc = new Window().document as unknown as Document;

    // answer panel: non-empty text, at least one citation chip
    const panel = buildAnswerPanel(response);
    expect(panel.answerText.length).toBeGreaterThan(0);
    expect(panel.chips.length).toBeGreaterThanOrEqual(1);
    const answerEl = renderAnswerPanel(doc, panel);
    const chipEls = answerEl.querySelectorAll(".citation-chip");
    expect(chipEls.length).toBe(response.citations.length);
    expect(chipEls.length).toBeGreaterThanOrEqual(1);
    expect(chipEls[0]?.getAttribute("title")).toBeTruthy();
    // chips are labeled with the citation's source document
    const servedDocs = new Set(response.citations.map((c) => c.source_doc));
    expect(servedDocs.has(chipEls[0]?.textContent ?? "")).toBe(true);

    // trace stepper: card count equals the server trace's step count
    const traceVm = buildTraceView(response.trace);
    const stepperEl = renderTraceStepper(doc, traceVm);
    const cards = stepperEl.querySelectorAll(".trace-card");
    expect(cards.length).toBe(response.trace.steps.length);
    expect(cards.length).toBe(5); // 3 projections + 2 pairwise intersections
    expect(traceVm.cards.map((c) => c.opKind)).toEqual(
      ["projection", "projection", "projection", "intersection", "intersection"]);
    expect(stepperEl.querySelector(".mode-badge")?.textContent).toBe("native");

    // neighborhood: the three-node protection chain is rendered
    const scope = response.trace.scope.triples;
    const graphVm = buildNeighborhoodView(scope, response.citations);
    const ids = graphVm.nodes.map((n) => n.id);
    expect(ids).toContain("Moderate toxicity, low hazard zone");
    expect(ids).toContain("Level 2");
    expect(ids).toContain("positive-pressure respirator");
    const chainEdges = graphVm.edges.filter(
      (e) =>
        (e.source === "Moderate toxicity, low hazard zone" &&
          e.target === "Level 2") ||
        (e.source === "Level 2" && e.target === "positive-pressure respirator"),
    );
    expect(chainEdges.length).toBe(2);

    const graphEl = renderNeighborhood(doc, graphVm);
    expect(graphEl.querySelectorAll("circle").length).toBe(graphVm.nodes.length);
    expect(graphEl.querySelectorAll("line.cited").length).toBe(graphVm.highlightCount);
    expect(graphVm.highlightCount).toBe(response.citations.length);

    // grounding end-to-end: every rendered chip and node came from the response
    const servedEntities = new Set<string>();
    for (const t of scope) {
      servedEntities.add(t.head);
      servedEntities.add(t.tail);
    }
    for (const node of graphVm.nodes) {
      expect(servedEntities.has(node.id)).toBe(true);
    }

    // node click filter resolves against served citations only
    const filtered = citationsForNode("Level 2", scope, response.citations);
    expect(filtered.length).toBeGreaterThanOrEqual(1);
    for (const c of filtered) {
      expect(response.citations).toContainEqual(c);
    }
  });

  it("direct evaluator access agrees with the walkthrough", async () => {
    const client = new ApiClient(BASE);
    const result = await client.evalQuery(
      'p({"Moderate toxicity, low hazard zone"}, "Protection level")');
    expect(result.entities).toEqual(["Level 2"]);
  });
});
