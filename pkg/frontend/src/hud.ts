/** Readouts shown beside the canvas, derived from the latest frames. */

import type { GeometryMsg, StateMsg } from "./protocol.js";

export const MUSCLE_LABELS = [
  "brachialis",
  "post. deltoid",
  "ant. deltoid",
  "biceps",
  "triceps",
  "chest",
] as const;

export interface HudModel {
  effort: number[]; // six bars in [0, 1]
  fatigue: number[]; // six bars in [0, 1]; full bar at doubled amplitude
  trialLabel: string;
  trackingErr: number | null; // rad, null without a target
  stale: boolean;
  resting: boolean;
}

function clamp01(v: number): number {
  return v < 0 ? 0 : v > 1 ? 1 : v;
}

export function buildHud(
  geometry: GeometryMsg | null,
  state: StateMsg | null,
): HudModel {
  const label = geometry
    ? `trial ${geometry.trial}: K ${geometry.stiffness} N*m/rad, ` +
      `theta ${geometry.orientation_deg} deg, T ${geometry.period_s} s`
    : "no trial";
  if (!state) {
    return {
      effort: new Array<number>(6).fill(0),
      fatigue: new Array<number>(6).fill(0),
      trialLabel: label,
      trackingErr: null,
      stale: false,
      resting: false,
    };
  }
  let err: number | null = null;
  if (state.target) {
    err = Math.hypot(
      state.actual[0] - state.target[0],
      state.actual[1] - state.target[1],
    );
  }
  return {
    effort: state.dist.map(clamp01),
    fatigue: state.fatigue.map((m) => clamp01(m - 1)),
    trialLabel: label,
    trackingErr: err,
    stale: state.stale,
    resting: state.resting,
  };
}

export function formatTrackingErr(err: number | null): string {
  if (err === null) {
    return "tracking error: n/a";
  }
  return `tracking error: ${(err * 1000).toFixed(1)} mrad`;
}
