/** Latest-wins dispatcher: each dispatch gets a token; responses belonging
 * to a superseded token are dropped, and the previous in-flight request is
 * aborted so at most one is ever outstanding. */

export class LatestWins<T> {
  private token = 0;
  private controller: AbortController | null = null;

  /** Resolves with the result only if no newer dispatch happened meanwhile;
   * resolves with null for stale or aborted requests. */
  async dispatch(run: (signal: AbortSignal) => Promise<T>): Promise<T | null> {
    this.token++;
    const mine = this.token;
    this.controller?.abort();
    this.controller = new AbortController();
    try {
      const result = await run(this.controller.signal);
      return mine === this.token ? result : null;
    } catch (err) {
      if (err instanceof DOMException && err.name === "AbortError") return null;
      if (mine !== this.token) return null; // failure of a stale request
      throw err;
    }
  }

  /** True when a dispatched request has not been superseded or settled. */
  get inFlight(): boolean {
    return this.controller !== null && !this.controller.signal.aborted;
  }

  invalidate(): void {
    this.token++;
    this.controller?.abort();
    this.controller = null;
  }
}
