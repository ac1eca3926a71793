import { describe, expect, it } from "vitest";

import {
  parseServerMessage,
  posMessage,
  startMessage,
  pauseMessage,
  nextTrialMessage,
} from "../src/protocol.js";
import { asText, frames } from "./fixtures.js";

describe("server frame validation", () => {
  it("accepts every frame type the server emits", () => {
    for (const frame of [
      frames.geometry,
      frames.state_active,
      frames.state_stale,
      frames.state_resting,
      frames.error,
    ]) {
      const res = parseServerMessage(asText(frame));
      expect(res.ok, JSON.stringify(res)).toBe(true);
      if (res.ok) {
        expect(res.msg.type).toBe(frame.type);
      }
    }
  });

  it("keeps null target and neutral on resting frames", () => {
    const res = parseServerMessage(asText(frames.state_resting));
    expect(res.ok).toBe(true);
    if (res.ok && res.msg.type === "state") {
      expect(res.msg.target).toBeNull();
      expect(res.msg.neutral).toBeNull();
      expect(res.msg.resting).toBe(true);
    }
  });

  it("rejects unknown frame types without throwing", () => {
    const res = parseServerMessage(JSON.stringify({ type: "telemetry" }));
    expect(res.ok).toBe(false);
  });

  it("rejects malformed JSON and non-objects", () => {
    expect(parseServerMessage("{not json").ok).toBe(false);
    expect(parseServerMessage("[1, 2, 3]").ok).toBe(false);
    expect(parseServerMessage("42").ok).toBe(false);
  });

  it("rejects structurally wrong frames", () => {
    const short = { ...frames.state_active, dist: [0.5, 0.5] };
    expect(parseServerMessage(asText(short)).ok).toBe(false);
    const { bounds: _dropped, ...noBounds } = frames.geometry;
    expect(parseServerMessage(asText(noBounds)).ok).toBe(false);
    const badTick = { ...frames.state_active, tick: "seven" };
    expect(parseServerMessage(asText(badTick)).ok).toBe(false);
  });
});

describe("client messages", () => {
  it("emits pos frames in the wire shape", () => {
    expect(JSON.parse(posMessage(12.5, 0.25, -0.1))).toEqual({
      type: "pos",
      t: 12.5,
      x1: 0.25,
      x2: -0.1,
    });
  });

  it("emits the three control frames", () => {
    expect(JSON.parse(startMessage)).toEqual({ type: "start" });
    expect(JSON.parse(pauseMessage)).toEqual({ type: "pause" });
    expect(JSON.parse(nextTrialMessage)).toEqual({ type: "next_trial" });
  });
});
