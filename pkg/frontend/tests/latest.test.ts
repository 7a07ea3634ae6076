import { describe, expect, it } from "vitest";

import { LatestWins } from "../src/latest";

function deferred<T>() {
  let resolve!: (v: T) => void;
  let reject!: (e: unknown) => void;
  const promise = new Promise<T>((res, rej) => {
    resolve = res;
    reject = rej;
  });
  return { promise, resolve, reject };
}

describe("LatestWins", () => {
  it("drops the response of a superseded request", async () => {
    const q = new LatestWins<string>();
    const slow = deferred<string>();
    const fast = deferred<string>();

    const first = q.dispatch(() => slow.promise);
    const second = q.dispatch(() => fast.promise);

    fast.resolve("new");
    slow.resolve("stale"); // arrives after being superseded
    expect(await second).toBe("new");
    expect(await first).toBeNull();
  });

  it("aborts the in-flight request when a new one starts", async () => {
    const q = new LatestWins<string>();
    let abortedFirst = false;
    const first = q.dispatch(
      (signal) =>
        new Promise<string>((_, reject) => {
          signal.addEventListener("abort", () => {
            abortedFirst = true;
            reject(new DOMException("aborted", "AbortError"));
          });
        }),
    );
    const second = q.dispatch(async () => "winner");
    expect(await second).toBe("winner");
    expect(await first).toBeNull();
    expect(abortedFirst).toBe(true);
  });

  it("propagates failures of the current request only", async () => {
    const q = new LatestWins<string>();
    const failing = deferred<string>();
    const current = q.dispatch(() => failing.promise);
    failing.reject(new Error("boom"));
    await expect(current).rejects.toThrow("boom");

    const stale = deferred<string>();
    const old = q.dispatch(() => stale.promise);
    const fresh = q.dispatch(async () => "ok");
    stale.reject(new Error("stale failure"));
    expect(await fresh).toBe("ok");
    expect(await old).toBeNull(); // stale failure is swallowed
  });

  it("invalidate discards everything in flight", async () => {
    const q = new LatestWins<string>();
    const d = deferred<string>();
    const p = q.dispatch(() => d.promise);
    q.invalidate();
    d.resolve("late");
    expect(await p).toBeNull();
    expect(q.inFlight).toBe(false);
  });
});
