/**
 * Workspace-to-canvas mapping.
 *
 * The geometry frame's bounds fix the pixel-per-radian calibration; the
 * map uses one uniform scale for both axes (circles stay circles) and
 * flips the vertical axis, since workspace y grows up and canvas y grows
 * down.
 */

export type Pt = readonly [number, number];
export type Bounds = readonly [number, number, number, number];

export interface ViewTransform {
  readonly scale: number; // px per rad, > 0
  readonly ox: number;
  readonly oy: number;
  readonly width: number;
  readonly height: number;
  readonly bounds: Bounds;
}

export function makeViewTransform(
  bounds: Bounds,
  width: number,
  height: number,
  margin = 16,
): ViewTransform {
  const [xLo, xHi, yLo, yHi] = bounds;
  const bw = xHi - xLo;
  const bh = yHi - yLo;
  if (!(bw > 0) || !(bh > 0)) {
    throw new Error(`degenerate workspace bounds: ${bounds.join(", ")}`);
  }
  const scale = Math.min((width - 2 * margin) / bw, (height - 2 * margin) / bh);
  if (!(scale > 0) || !Number.isFinite(scale)) {
    throw new Error(`canvas ${width}x${height} too small for margin ${margin}`);
  }
  return {
    scale,
    ox: width / 2 - scale * (xLo + xHi) / 2,
    oy: height / 2 + scale * (yLo + yHi) / 2,
    width,
    height,
    bounds,
  };
}

export function toCanvas(vt: ViewTransform, p: Pt): Pt {
  return [vt.ox + vt.scale * p[0], vt.oy - vt.scale * p[1]];
}

export function toWorkspace(vt: ViewTransform, px: Pt): Pt {
  return [(px[0] - vt.ox) / vt.scale, (vt.oy - px[1]) / vt.scale];
}

function clamp(v: number, lo: number, hi: number): number {
  return v < lo ? lo : v > hi ? hi : v;
}

/** Inverse map for pointer input, clamped to the workspace bounds. */
export function pointerToWorkspace(vt: ViewTransform, px: Pt): Pt {
  const [x, y] = toWorkspace(vt, px);
  const [xLo, xHi, yLo, yHi] = vt.bounds;
  return [clamp(x, xLo, xHi), clamp(y, yLo, yHi)];
}
