/**
 * Scene drawing as data.
 *
 * `renderFrame` emits draw commands against a small surface interface
 * instead of touching a canvas context directly, so tests can record and
 * compare whole frames and the browser adapter stays a dumb translator.
 */

import { buildHud, formatTrackingErr, MUSCLE_LABELS } from "./hud.js";
import type { ViewState } from "./store.js";
import { makeViewTransform, toCanvas, type Pt, type ViewTransform } from "./transform.js";

export interface StrokeOpts {
  stroke: string;
  lineWidth: number;
  dash: number[];
  closed: boolean;
}

/** Minimal drawing surface; the browser binds it to a 2D context. */
export interface Draw2D {
  clear(width: number, height: number, fill: string): void;
  path(points: Pt[], opts: StrokeOpts): void;
  dot(center: Pt, radius: number, fill: string, alpha: number): void;
  rect(x: number, y: number, w: number, h: number, fill: string): void;
  text(s: string, x: number, y: number, fill: string, font: string): void;
}

export const COLORS = {
  background: "#ffffff",
  ellipse: "blue",
  circle: "black",
  tolerance: "red",
  target: "black",
  actual: "red",
  barEffort: "#b03030",
  barFatigue: "#806020",
  barFrame: "#cccccc",
  label: "#222222",
} as const;

const FONT = "13px sans-serif";
const HUD_WIDTH = 190;

export function viewTransformFor(
  vs: ViewState,
  width: number,
  height: number,
): ViewTransform | null {
  if (!vs.geometry) {
    return null;
  }
  // the HUD column is reserved on the right
  return makeViewTransform(vs.geometry.bounds, width - HUD_WIDTH, height);
}

function mapAll(vt: ViewTransform, pts: Pt[]): Pt[] {
  return pts.map((p) => toCanvas(vt, p));
}

export function renderFrame(
  draw: Draw2D,
  vs: ViewState,
  width: number,
  height: number,
): void {
  draw.clear(width, height, COLORS.background);
  if (!vs.geometry) {
    draw.text("awaiting session", width / 2, height / 2, COLORS.label, FONT);
    return;
  }
  const vt = viewTransformFor(vs, width, height)!;
  const geo = vs.geometry;

  draw.path(mapAll(vt, geo.circle as Pt[]), {
    stroke: COLORS.circle,
    lineWidth: 1,
    dash: [],
    closed: true,
  });
  draw.path(mapAll(vt, geo.ellipse as Pt[]), {
    stroke: COLORS.ellipse,
    lineWidth: 2,
    dash: [],
    closed: true,
  });
  for (const side of geo.tol) {
    draw.path(mapAll(vt, side as Pt[]), {
      stroke: COLORS.tolerance,
      lineWidth: 1,
      dash: [6, 4],
      closed: true,
    });
  }

  const hud = buildHud(geo, vs.state);
  if (vs.state) {
    if (vs.state.target) {
      draw.dot(toCanvas(vt, vs.state.target), 5, COLORS.target, 1);
    }
    const alpha = hud.stale ? 0.35 : 1;
    draw.dot(toCanvas(vt, vs.state.actual), 5, COLORS.actual, alpha);
    if (hud.stale) {
      draw.text("STALE", 12, 20, COLORS.tolerance, FONT);
    }
    if (hud.resting) {
      draw.text("rest", width / 2 - HUD_WIDTH / 2, 20, COLORS.label, FONT);
    }
  }
  renderHud(draw, hud, width - HUD_WIDTH);
  if (vs.lastError) {
    draw.text(
      `server: ${vs.lastError.code}`,
      12,
      height - 10,
      COLORS.tolerance,
      FONT,
    );
  }
}

function renderHud(
  draw: Draw2D,
  hud: ReturnType<typeof buildHud>,
  x0: number,
): void {
  const barMax = HUD_WIDTH - 100;
  draw.text(hud.trialLabel, x0 + 8, 24, COLORS.label, FONT);
  draw.text(formatTrackingErr(hud.trackingErr), x0 + 8, 44, COLORS.label, FONT);
  for (let i = 0; i < 6; i++) {
    const y = 70 + i * 26;
    draw.text(MUSCLE_LABELS[i], x0 + 8, y + 10, COLORS.label, FONT);
    draw.rect(x0 + 92, y, barMax, 12, COLORS.barFrame);
    draw.rect(x0 + 92, y, barMax * hud.effort[i], 12, COLORS.barEffort);
  }
  draw.text("fatigue", x0 + 8, 70 + 6 * 26 + 10, COLORS.label, FONT);
  for (let i = 0; i < 6; i++) {
    const y = 70 + (i + 7) * 26 - 14;
    draw.rect(x0 + 92, y, barMax, 8, COLORS.barFrame);
    draw.rect(x0 + 92, y, barMax * hud.fatigue[i], 8, COLORS.barFatigue);
  }
}
