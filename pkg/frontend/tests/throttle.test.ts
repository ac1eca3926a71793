import { describe, expect, it } from "vitest";

import { makeThrottle } from "../src/throttle.js";

describe("send throttle", () => {
  it("accepts the first event immediately", () => {
    let t = 0;
    const gate = makeThrottle(120, () => t);
    expect(gate.ready()).toBe(true);
  });

  it("caps the accepted rate at the configured maximum", () => {
    let t = 0;
    const gate = makeThrottle(120, () => t);
    let accepted = 0;
    // a pointer stream at 1 kHz for one simulated second
    for (let i = 0; i < 1000; i++) {
      t = i;
      if (gate.ready()) accepted++;
    }
    expect(accepted).toBeLessThanOrEqual(120);
    expect(accepted).toBeGreaterThan(100);
  });

  it("spaces accepted events by at least the interval", () => {
    let t = 0;
    const gate = makeThrottle(120, () => t);
    const times: number[] = [];
    for (let i = 0; i < 3000; i++) {
      t = i * 0.37;
      if (gate.ready()) times.push(t);
    }
    for (let i = 1; i < times.length; i++) {
      expect(times[i] - times[i - 1]).toBeGreaterThanOrEqual(1000 / 120);
    }
  });

  it("rejects a non-positive rate", () => {
    expect(() => makeThrottle(0)).toThrow();
    expect(() => makeThrottle(-5)).toThrow();
  });
});
