import { readFileSync } from "node:fs";
import { dirname, join } from "node:path";
import { fileURLToPath } from "node:url";

import type { GeometryMsg, StateMsg, ErrorMsg } from "../src/protocol.js";

interface Frames {
  geometry: GeometryMsg;
  state_active: StateMsg;
  state_stale: StateMsg;
  state_resting: StateMsg;
  error: ErrorMsg;
}

const here = dirname(fileURLToPath(import.meta.url));

/** Frames recorded from a run of the actual session server. */
export const frames: Frames = JSON.parse(
  readFileSync(join(here, "fixtures", "frames.json"), "utf8"),
);

export function asText(frame: object): string {
  return JSON.stringify(frame);
}
