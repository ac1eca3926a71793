/**
 * Pure fold over the inbound message stream.
 *
 * The UI owns no session semantics: the rendered picture is a function
 * of this state alone, so two identical streams produce identical
 * frames.
 */

import {
  type ErrorMsg,
  type GeometryMsg,
  type StateMsg,
  parseServerMessage,
} from "./protocol.js";

export interface ViewState {
  readonly geometry: GeometryMsg | null;
  readonly state: StateMsg | null;
  readonly lastError: ErrorMsg | null;
  readonly rejected: number; // frames dropped by schema validation
}

export const initialViewState: ViewState = {
  geometry: null,
  state: null,
  lastError: null,
  rejected: 0,
};

export function applyMessage(vs: ViewState, text: string): ViewState {
  const res = parseServerMessage(text);
  if (!res.ok) {
    return { ...vs, rejected: vs.rejected + 1 };
  }
  switch (res.msg.type) {
    case "geometry":
      // a new trial invalidates the previous trial's last state frame
      return { ...vs, geometry: res.msg, state: null };
    case "state":
      return { ...vs, state: res.msg };
    case "error":
      return { ...vs, lastError: res.msg };
  }
}
