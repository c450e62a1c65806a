/** Browser bootstrap: one session against the configured service.
 * Input stays disabled while a turn is pending (one in-flight ask). */

import { ApiClient } from "./api.js";
import { renderAnswerPanel, renderErrorBanner, renderNeighborhood,
         renderTraceStepper } from "./dom.js";
import { Session, ValidationError } from "./session.js";
import { buildAnswerPanel, buildNeighborhoodView, buildTraceView,
         citationsForNode } from "./views.js";

function baseUrl(): string {
  const fromQuery = new URLSearchParams(window.location.search).get("api");
  return fromQuery ?? "http://127.0.0.1:8011";
}

function bootstrap(): void {
  const doc = document;
  const client = new ApiClient(baseUrl());
  const session = new Session(client);

  const input = doc.getElementById("question") as HTMLInputElement;
  const button = doc.getElementById("ask") as HTMLButtonElement;
  const turnsEl = doc.getElementById("turns")!;
  const statusEl = doc.getElementById("status")!;

  void session.refreshDigest().then(() => {
    statusEl.textContent = session.kbDigest
      ? `KB ${session.kbDigest}`
      : "no KB loaded";
  }).catch(() => {
    statusEl.textContent = "service unreachable";
  });

  async function submit(): Promise<void> {
    const question = input.value;
    input.disabled = true;
    button.disabled = true;
    try {
      const turn = await session.askTurn(question);
      const container = doc.createElement("article");
      container.className = "turn";

      const asked = doc.createElement("h3");
      asked.textContent = turn.question;
      container.appendChild(asked);

      container.appendChild(renderAnswerPanel(doc, buildAnswerPanel(turn.response)));
      container.appendChild(renderTraceStepper(doc, buildTraceView(turn.response.trace)));

      const scope = turn.response.trace.scope.triples;
      const filtered = doc.createElement("p");
      filtered.className = "node-filter";
      container.appendChild(
        renderNeighborhood(doc, buildNeighborhoodView(scope, turn.response.citations),
          (nodeId) => {
            const matches = citationsForNode(nodeId, scope, turn.response.citations);
            filtered.textContent = `${nodeId}: ${matches.length} citation(s) — `
              + matches.map((c) => c.source_doc ?? `#${c.triple_id}`).join(", ");
          }),
      );
      container.appendChild(filtered);
      turnsEl.prepend(container);
      input.value = "";
    } catch (err) {
      if (err instanceof ValidationError) {
        statusEl.textContent = err.message;  // inline: nothing was sent
      } else {
        turnsEl.prepend(renderErrorBanner(doc, err));
      }
    } finally {
      input.disabled = false;
      button.disabled = false;
      input.focus();
    }
  }

  button.addEventListener("click", () => void submit());
  input.addEventListener("keydown", (event) => {
    if (event.key === "Enter") void submit();
  });
}

bootstrap();
