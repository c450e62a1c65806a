/** Multi-turn session state. One ask in flight at a time; the history sent
 * to the server is capped at the configured turn bound. Turns hold exactly
 * what the server returned — the console never synthesizes knowledge. */

import { ApiClient } from "./api.js";
import type { AskOptions, AskResponse } from "./types.js";

export interface Turn {
  question: string;
  response: AskResponse;
}

export class ValidationError extends Error {
  constructor(message: string) {
    super(message);
    this.name = "ValidationError";
  }
}

export class Session {
  readonly turns: Turn[] = [];
  pending = false;
  kbDigest: string | null = null;

  constructor(
    private readonly client: ApiClient,
    private readonly turnBound = 5,
  ) {}

  /** Last `turnBound` (question, answer) pairs, oldest first. */
  historyPayload(): [string, string][] {
    return this.turns
      .slice(-this.turnBound)
      .map((t) => [t.question, t.response.answer]);
  }

  async refreshDigest(): Promise<void> {
    const health = await this.client.health();
    this.kbDigest = health.kb_digest;
  }

  async askTurn(question: string, options?: AskOptions): Promise<Turn> {
    const trimmed = question.trim();
    if (!trimmed) {
      // inline validation: no request leaves the client
      throw new ValidationError("enter a question first");
    }
    if (this.pending) {
      throw new ValidationError("a turn is already in flight");
    }
    this.pending = true;
    try {
      const response = await this.client.ask(trimmed, {
        ...options,
        history: this.historyPayload(),
      });
      const turn: Turn = { question: trimmed, response };
      this.turns.push(turn);
      return turn;
    } finally {
      this.pending = false;
    }
  }
}
