/** Headless editor controller: slider events in, displayed images out.
 *
 * Slider bursts are debounced (80 ms), at most one relight request is in
 * flight, and stale responses are never displayed. The DOM layer only wires
 * events into this class and paints the blobs it emits.
 */

import { ServiceClient } from "./api.js";
import { debounce, type Debounced } from "./debounce.js";
import { LatestWins } from "./latest.js";
import {
  EditorState,
  initialState,
  relightParams,
  resetSliders,
  withSlider,
} from "./state.js";

export const DEBOUNCE_MS = 80;

export interface ControllerHooks {
  /** Receives every image that should appear in the viewport, in order. */
  display(image: Blob, state: EditorState): void;
  /** Inline error reporting (422s, connection failures). */
  error?(message: string): void;
}

export class EditorController {
  state: EditorState;
  requestsSent = 0;
  private readonly queue = new LatestWins<Blob | null>();
  private readonly scheduled: Debounced<[]>;

  constructor(
    private readonly client: ServiceClient,
    private readonly hooks: ControllerHooks,
    sceneId: string,
    sceneKelvin: number,
    debounceMs: number = DEBOUNCE_MS,
  ) {
    this.state = initialState(sceneId, sceneKelvin);
    this.scheduled = debounce(() => void this.refresh(), debounceMs);
  }

  onSlider(field: "kappa" | "alpha" | "kelvin", value: number): void {
    this.state = withSlider(this.state, field, value);
    this.scheduled();
  }

  reset(): void {
    this.state = resetSliders(this.state);
    this.scheduled();
  }

  /** Issue the relight request for the current state (debounce already
   * elapsed). Superseded responses resolve to null and are dropped. */
  async refresh(): Promise<void> {
    const snapshot = this.state;
    const image = await this.queue
      .dispatch(async (signal) => {
        this.requestsSent++;
        return await this.client.relight(relightParams(snapshot), signal);
      })
      .catch((err) => {
        this.hooks.error?.(err instanceof Error ? err.message : String(err));
        return null;
      });
    if (image !== null && image !== undefined) {
      this.hooks.display(image, snapshot);
    }
  }

  /** Force any pending debounce to fire now (used by tests and unload). */
  flush(): void {
    this.scheduled.flush();
  }

  dispose(): void {
    this.scheduled.cancel();
    this.queue.invalidate();
  }
}
