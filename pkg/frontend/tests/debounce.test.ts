import { afterEach, beforeEach, describe, expect, it, vi } from "vitest";

import { debounce } from "../src/debounce";

describe("debounce", () => {
  beforeEach(() => vi.useFakeTimers());
  afterEach(() => vi.useRealTimers());

  it("collapses a burst of calls into one trailing invocation", () => {
    const calls: number[] = [];
    const fn = debounce((v: number) => calls.push(v), 80);
    for (let i = 0; i < 25; i++) fn(i);
    expect(calls).toHaveLength(0);
    vi.advanceTimersByTime(79);
    expect(calls).toHaveLength(0);
    vi.advanceTimersByTime(1);
    expect(calls).toEqual([24]); // last arguments win
  });

  it("fires again for a second burst", () => {
    const calls: number[] = [];
    const fn = debounce((v: number) => calls.push(v), 80);
    fn(1);
    vi.advanceTimersByTime(80);
    fn(2);
    fn(3);
    vi.advanceTimersByTime(80);
    expect(calls).toEqual([1, 3]);
  });

  it("cancel drops the pending call", () => {
    const calls: number[] = [];
    const fn = debounce((v: number) => calls.push(v), 80);
    fn(7);
    fn.cancel();
    vi.advanceTimersByTime(500);
    expect(calls).toHaveLength(0);
  });

  it("flush fires the pending call immediately", () => {
    const calls: number[] = [];
    const fn = debounce((v: number) => calls.push(v), 80);
    fn(9);
    fn.flush();
    expect(calls).toEqual([9]);
    vi.advanceTimersByTime(500);
    expect(calls).toEqual([9]); // no double fire
  });
});
