/** DOM renderers over the view models. Every function takes the Document so
 * the same code runs in the browser and under happy-dom in tests. Hover
 * text rides on title attributes; discarded entities render struck-through. */

import { ApiError, NetworkError } from "./api.js";
import { layoutGraph } from "./graph.js";
import type { AnswerPanel, NeighborhoodViewModel, TraceViewModel } from "./views.js";

const SVG_NS = "http://www.w3.org/2000/svg";

export function renderAnswerPanel(doc: Document, panel: AnswerPanel): HTMLElement {
  const root = doc.createElement("section");
  root.className = "answer-panel";

  const text = doc.createElement("p");
  text.className = "answer-text";
  text.textContent = panel.answerText;
  root.appendChild(text);

  const chips = doc.createElement("div");
  chips.className = "citation-chips";
  for (const chip of panel.chips) {
    const el = doc.createElement("span");
    el.className = "citation-chip";
    el.textContent = chip.label;
    el.title = chip.hover;
    el.dataset.tripleId = String(chip.tripleId);
    chips.appendChild(el);
  }
  root.appendChild(chips);

  if (panel.finalEntities.length > 0) {
    const entities = doc.createElement("p");
    entities.className = "final-entities";
    entities.textContent = panel.finalEntities.join(", ");
    root.appendChild(entities);
  }
  return root;
}

export function renderTraceStepper(doc: Document, vm: TraceViewModel): HTMLElement {
  const root = doc.createElement("section");
  root.className = "trace-stepper";

  const badge = doc.createElement("span");
  badge.className = `mode-badge mode-${vm.modeBadge}`;
  badge.textContent = vm.modeBadge;
  root.appendChild(badge);

  if (vm.logicalQuery) {
    const query = doc.createElement("code");
    query.className = "logical-query";
    query.textContent = vm.logicalQuery;
    root.appendChild(query);
  }

  if (vm.fallbackNotice) {
    const notice = doc.createElement("div");
    notice.className = "fallback-notice trace-card";
    notice.textContent =
      "Unstructured fallback: the question was answered from the retrieved " +
      "knowledge without a logical query.";
    root.appendChild(notice);
    return root;
  }

  for (const card of vm.cards) {
    const el = doc.createElement("div");
    el.className = "trace-card";

    const head = doc.createElement("header");
    head.textContent = `step ${card.index} · ${card.opKind}`;
    el.appendChild(head);

    const prompt = doc.createElement("p");
    prompt.className = "prompt-excerpt";
    prompt.textContent = card.promptExcerpt;
    el.appendChild(prompt);

    const entities = doc.createElement("p");
    entities.className = "step-entities";
    entities.textContent = card.entities.join(", ") || "(empty set)";
    el.appendChild(entities);

    for (const label of card.discarded) {
      const struck = doc.createElement("s");
      struck.className = "discarded-entity";
      struck.textContent = label;
      el.appendChild(struck);
    }
    root.appendChild(el);
  }
  return root;
}

export function renderNeighborhood(
  doc: Document,
  vm: NeighborhoodViewModel,
  onNodeClick?: (nodeId: string) => void,
  width = 640,
  height = 420,
): HTMLElement {
  const root = doc.createElement("section");
  root.className = "neighborhood-panel";

  if (vm.empty) {
    const empty = doc.createElement("p");
    empty.className = "empty-scope";
    empty.textContent = "No knowledge retrieved for this turn.";
    root.appendChild(empty);
    return root;
  }

  const positions = layoutGraph(
    vm.nodes.map((n) => n.id),
    vm.edges.map((e) => ({ source: e.source, target: e.target })),
    width,
    height,
  );

  const svg = doc.createElementNS(SVG_NS, "svg");
  svg.setAttribute("viewBox", `0 0 ${width} ${height}`);
  svg.setAttribute("class", "scope-graph");

  for (const edge of vm.edges) {
    const a = positions.get(edge.source)!;
    const b = positions.get(edge.target)!;
    const line = doc.createElementNS(SVG_NS, "line");
    line.setAttribute("x1", a.x.toFixed(1));
    line.setAttribute("y1", a.y.toFixed(1));
    line.setAttribute("x2", b.x.toFixed(1));
    line.setAttribute("y2", b.y.toFixed(1));
    line.setAttribute("class", edge.cited ? "scope-edge cited" : "scope-edge");
    line.setAttribute("data-triple-id", String(edge.tripleId));
    const title = doc.createElementNS(SVG_NS, "title");
    title.textContent = edge.relation;
    line.appendChild(title);
    svg.appendChild(line);
  }

  for (const node of vm.nodes) {
    const p = positions.get(node.id)!;
    const group = doc.createElementNS(SVG_NS, "g");
    group.setAttribute("class", node.cited ? "scope-node cited" : "scope-node");
    group.setAttribute("data-node-id", node.id);
    if (onNodeClick) {
      group.addEventListener("click", () => onNodeClick(node.id));
    }
    const circle = doc.createElementNS(SVG_NS, "circle");
    circle.setAttribute("cx", p.x.toFixed(1));
    circle.setAttribute("cy", p.y.toFixed(1));
    circle.setAttribute("r", "7");
    group.appendChild(circle);
    const label = doc.createElementNS(SVG_NS, "text");
    label.setAttribute("x", (p.x + 10).toFixed(1));
    label.setAttribute("y", (p.y + 4).toFixed(1));
    label.textContent = node.id;
    group.appendChild(label);
    svg.appendChild(group);
  }

  root.appendChild(svg as unknown as Node);
  return root;
}

export function renderErrorBanner(doc: Document, err: unknown): HTMLElement {
  const banner = doc.createElement("div");
  if (err instanceof NetworkError) {
    banner.className = "error-banner offline";
    banner.textContent = "Service unreachable — check that the decision-support "
      + "service is running and the base URL is right.";
  } else if (err instanceof ApiError && err.status === 503) {
    banner.className = "error-banner kb-not-loaded";
    banner.textContent = "No knowledge base loaded — load a KB on the service "
      + "(kb load) before asking.";
  } else if (err instanceof ApiError) {
    banner.className = "error-banner";
    banner.textContent = err.stage
      ? `${err.code} [${err.stage}]: ${err.message}`
      : `${err.code}: ${err.message}`;
  } else {
    banner.className = "error-banner";
    banner.textContent = String(err);
  }
  return banner;
}
