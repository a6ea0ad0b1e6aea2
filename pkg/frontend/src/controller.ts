import { ApiClient, ApiError } from "./api.js";
import { AnswerResult, QueryPayload } from "./types.js";
import { buildViewModel, PayloadError, ViewModel } from "./view.js";

export type Phase = "idle" | "loading" | "ready" | "submitting" | "done" | "error";

export type ControllerState = {
  phase: Phase;
  view: ViewModel | null;
  posteriorMean: number[] | null;
  correlation: number | null;
  /** Rounds answered so far; progress reads `completed/roundsTotal`. */
  completed: number;
  roundsTotal: number;
  error: string | null;
  canRetry: boolean;
};

/**
 * Drives one live session: create, render, answer, repeat. All state flows
 * through the onChange callback, so the DOM layer stays a dumb projector.
 *
 * Error handling follows the server contract: a round conflict means our
 * pending round is stale (double submit or reconnect), so the controller
 * refetches the authoritative query instead of surfacing an error. Anything
 * else flips to the error phase and arms retry with the failed action.
 */
export class SessionController {
  private readonly api: ApiClient;
  private readonly onChange: (state: ControllerState) => void;
  private sessionId = "";
  private query: QueryPayload | null = null;
  private lastAction: (() => Promise<void>) | null = null;
  private state: ControllerState = {
    phase: "idle",
    view: null,
    posteriorMean: null,
    correlation: null,
    completed: 0,
    roundsTotal: 0,
    error: null,
    canRetry: false,
  };

  constructor(api: ApiClient, onChange: (state: ControllerState) => void) {
    this.api = api;
    this.onChange = onChange;
  }

  get id(): string {
    return this.sessionId;
  }

  get current(): ControllerState {
    return this.state;
  }

  private emit(patch: Partial<ControllerState>): void {
    this.state = { ...this.state, ...patch };
    this.onChange(this.state);
  }

  private showQuery(query: QueryPayload): void {
    this.query = query;
    const view = buildViewModel(
      this.sessionId, query, this.state.posteriorMean, this.state.correlation,
    );
    this.emit({
      phase: "ready",
      view,
      completed: query.round - 1,
      roundsTotal: query.rounds_total,
      error: null,
      canRetry: false,
    });
  }

  private fail(action: () => Promise<void>, err: unknown): void {
    this.lastAction = action;
    const message =
      err instanceof PayloadError ? `bad payload from server: ${err.message}`
      : err instanceof ApiError ? `${err.code}: ${err.message}`
      : err instanceof Error ? err.message
      : String(err);
    this.emit({ phase: "error", error: message, canRetry: true });
  }

  async start(sessionPayload: object): Promise<void> {
    const action = async () => {
      this.emit({ phase: "loading", error: null, canRetry: false });
      const created = await this.api.createSession(sessionPayload);
      this.sessionId = created.id;
      this.emit({ roundsTotal: created.rounds_total });
      this.showQuery(created.query);
    };
    try {
      await action();
    } catch (err) {
      this.fail(action, err);
    }
  }

  async submit(choice: "A" | "B"): Promise<void> {
    const pending = this.query;
    if (this.state.phase !== "ready" || pending === null) {
      return;
    }
    const action = async () => {
      this.emit({ phase: "submitting" });
      let result: AnswerResult;
      try {
        result = await this.api.postAnswer(this.sessionId, choice, pending.round);
      } catch (err) {
        if (err instanceof ApiError && err.status === 409 && err.code === "round_conflict") {
          // our idea of the pending round was stale; resync and carry on
          this.showQuery(await this.api.getQuery(this.sessionId));
          return;
        }
        throw err;
      }
      this.emit({
        posteriorMean: result.posterior_mean,
        correlation: result.correlation,
        completed: result.round,
      });
      if (result.done || result.next_query === null) {
        this.query = null;
        this.emit({ phase: "done", view: null });
      } else {
        this.showQuery(result.next_query);
      }
    };
    try {
      await action();
    } catch (err) {
      this.fail(action, err);
    }
  }

  /** Re-run whatever failed last; the banner's retry button lands here. */
  async retry(): Promise<void> {
    const action = this.lastAction;
    if (this.state.phase !== "error" || action === null) {
      return;
    }
    this.lastAction = null;
    try {
      await action();
    } catch (err) {
      this.fail(action, err);
    }
  }
}
