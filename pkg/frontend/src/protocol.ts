/**
 * Wire protocol for the live session WebSocket.
 *
 * The server speaks JSON text frames: one "geometry" frame per trial,
 * "state" frames at the control tick, and "error" frames for rejected
 * input.  Everything inbound goes through `parseServerMessage`, which
 * never throws; unknown or malformed frames come back as a rejection the
 * caller can count and ignore.
 */
import { z } from "zod";

const point = z.tuple([z.number(), z.number()]);
const pointList = z.array(point);
const sixVector = z.array(z.number()).length(6);

export const GeometrySchema = z.object({
  type: z.literal("geometry"),
  trial: z.number().int(),
  stiffness: z.number(),
  orientation_deg: z.number(),
  period_s: z.number().positive(),
  center: point,
  circle_radius: z.number().positive(),
  semi_major: z.number().positive(),
  semi_minor: z.number().positive(),
  tolerance_halfwidth: z.number().nonnegative(),
  tol: z.tuple([pointList, pointList]),
  ellipse: pointList,
  circle: pointList,
  // workspace extent as [x lo, x hi, y lo, y hi], radians
  bounds: z.tuple([z.number(), z.number(), z.number(), z.number()]),
});

export const StateSchema = z.object({
  type: z.literal("state"),
  tick: z.number().int(),
  t: z.number(),
  trial: z.number().int(),
  // target and neutral are null during rest periods
  target: point.nullable(),
  neutral: point.nullable(),
  actual: point,
  torque: point,
  dist: sixVector,
  fatigue: sixVector,
  stale: z.boolean(),
  resting: z.boolean(),
});

export const ErrorSchema = z.object({
  type: z.literal("error"),
  code: z.string(),
  msg: z.string(),
});

export const ServerMessageSchema = z.discriminatedUnion("type", [
  GeometrySchema,
  StateSchema,
  ErrorSchema,
]);

export type GeometryMsg = z.infer<typeof GeometrySchema>;
export type StateMsg = z.infer<typeof StateSchema>;
export type ErrorMsg = z.infer<typeof ErrorSchema>;
export type ServerMessage = z.infer<typeof ServerMessageSchema>;

export type ParseResult =
  | { ok: true; msg: ServerMessage }
  | { ok: false; reason: string };

export function parseServerMessage(text: string): ParseResult {
  let data: unknown;
  try {
    data = JSON.parse(text);
  } catch {
    return { ok: false, reason: "not valid JSON" };
  }
  const res = ServerMessageSchema.safeParse(data);
  if (!res.success) {
    const issue = res.error.issues[0];
    const where = issue && issue.path.length ? ` at ${issue.path.join(".")}` : "";
    return { ok: false, reason: `${issue?.message ?? "invalid frame"}${where}` };
  }
  return { ok: true, msg: res.data };
}

export function posMessage(t: number, x1: number, x2: number): string {
  return JSON.stringify({ type: "pos", t, x1, x2 });
}

export const startMessage = JSON.stringify({ type: "start" });
export const pauseMessage = JSON.stringify({ type: "pause" });
export const nextTrialMessage = JSON.stringify({ type: "next_trial" });
