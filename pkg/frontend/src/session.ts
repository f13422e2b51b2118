/** Debounced live inference with stale-response discard.
 *
 * Every toggle schedules one request after the debounce window; responses of
 * superseded requests are dropped, so the rendered ranking always corresponds
 * to the latest toggle state.
 */

import type { ApiClient, InferResponse } from "./api.js";
import type { ToggleState } from "./state.js";
import { buildInferRequest } from "./state.js";

export interface SessionHooks {
  onResponse: (response: InferResponse) => void;
  onError: (error: unknown) => void;
}

export class InferenceSession {
  private sequence = 0;
  private timer: ReturnType<typeof setTimeout> | null = null;

  constructor(
    private readonly client: Pick<ApiClient, "postInfer">,
    private readonly hooks: SessionHooks,
    readonly debounceMs = 150,
  ) {}

  /** Schedule an inference for the given state, debouncing rapid updates. */
  update(state: ToggleState): void {
    if (this.timer !== null) clearTimeout(this.timer);
    this.timer = setTimeout(() => {
      this.timer = null;
      void this.fire(state);
    }, this.debounceMs);
  }

  /** Cancel any pending request and invalidate in-flight responses. */
  invalidate(): void {
    if (this.timer !== null) clearTimeout(this.timer);
    this.timer = null;
    this.sequence += 1;
  }

  private async fire(state: ToggleState): Promise<void> {
    this.sequence += 1;
    const ticket = this.sequence;
    try {
      const response = await this.client.postInfer(buildInferRequest(state));
      if (ticket === this.sequence) this.hooks.onResponse(response);
    } catch (error) {
      if (ticket === this.sequence) this.hooks.onError(error);
    }
  }
}
