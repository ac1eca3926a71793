import { describe, expect, it } from "vitest";

import { buildHud, formatTrackingErr } from "../src/hud.js";
import { frames } from "./fixtures.js";

describe("hud model", () => {
  it("clamps effort and fatigue bars to [0, 1]", () => {
    const state = {
      ...frames.state_active,
      dist: [1.4, -0.2, 0.5, 0, 1, 0.25],
      fatigue: [1.0, 1.35, 3.5, 1.0, 0.9, 2.0],
    };
    const hud = buildHud(frames.geometry, state);
    expect(hud.effort).toEqual([1, 0, 0.5, 0, 1, 0.25]);
    const wantFatigue = [0, 0.35, 1, 0, 0, 1];
    expect(hud.fatigue).toHaveLength(6);
    hud.fatigue.forEach((v, i) => expect(v).toBeCloseTo(wantFatigue[i], 12));
  });

  it("labels the trial with stiffness, orientation, and period", () => {
    const hud = buildHud(frames.geometry, frames.state_active);
    expect(hud.trialLabel).toBe("trial 1: K 1 N*m/rad, theta 45 deg, T 8 s");
  });

  it("reads the tracking error as the actual-to-target distance", () => {
    const state = {
      ...frames.state_active,
      target: [0.3, 0.1] as [number, number],
      actual: [0.3, 0.14] as [number, number],
    };
    const hud = buildHud(frames.geometry, state);
    expect(hud.trackingErr).toBeCloseTo(0.04, 12);
    expect(formatTrackingErr(hud.trackingErr)).toBe(
      "tracking error: 40.0 mrad",
    );
  });

  it("has no tracking error during rest", () => {
    const hud = buildHud(frames.geometry, frames.state_resting);
    expect(hud.trackingErr).toBeNull();
    expect(hud.resting).toBe(true);
    expect(formatTrackingErr(hud.trackingErr)).toBe("tracking error: n/a");
  });

  it("carries the stale flag through", () => {
    expect(buildHud(frames.geometry, frames.state_stale).stale).toBe(true);
    expect(buildHud(frames.geometry, frames.state_active).stale).toBe(false);
  });

  it("renders an empty model before any state arrives", () => {
    const hud = buildHud(null, null);
    expect(hud.trialLabel).toBe("no trial");
    expect(hud.effort).toEqual([0, 0, 0, 0, 0, 0]);
    expect(hud.trackingErr).toBeNull();
  });
});
