/**
 * Browser wiring: WebSocket, canvas, pointer, and keyboard.
 *
 * Everything stateful lives in the pure `ViewState` fold; this file only
 * moves events into it and repaints on animation frames.
 */

import { nextTrialMessage, pauseMessage, posMessage, startMessage } from "./protocol.js";
import { type Draw2D, renderFrame, viewTransformFor, type StrokeOpts } from "./render.js";
import { applyMessage, initialViewState, type ViewState } from "./store.js";
import { makeThrottle } from "./throttle.js";
import { pointerToWorkspace, type Pt } from "./transform.js";

const POINTER_MAX_HZ = 120;

function canvasDraw(ctx: CanvasRenderingContext2D): Draw2D {
  return {
    clear(width: number, height: number, fill: string): void {
      ctx.globalAlpha = 1;
      ctx.fillStyle = fill;
      ctx.fillRect(0, 0, width, height);
    },
    path(points: Pt[], opts: StrokeOpts): void {
      if (points.length < 2) {
        return;
      }
      ctx.globalAlpha = 1;
      ctx.strokeStyle = opts.stroke;
      ctx.lineWidth = opts.lineWidth;
      ctx.setLineDash(opts.dash);
      ctx.beginPath();
      ctx.moveTo(points[0][0], points[0][1]);
      for (let i = 1; i < points.length; i++) {
        ctx.lineTo(points[i][0], points[i][1]);
      }
      if (opts.closed) {
        ctx.closePath();
      }
      ctx.stroke();
      ctx.setLineDash([]);
    },
    dot(center: Pt, radius: number, fill: string, alpha: number): void {
      ctx.globalAlpha = alpha;
      ctx.fillStyle = fill;
      ctx.beginPath();
      ctx.arc(center[0], center[1], radius, 0, 2 * Math.PI);
      ctx.fill();
      ctx.globalAlpha = 1;
    },
    rect(x: number, y: number, w: number, h: number, fill: string): void {
      ctx.globalAlpha = 1;
      ctx.fillStyle = fill;
      ctx.fillRect(x, y, w, h);
    },
    text(s: string, x: number, y: number, fill: string, font: string): void {
      ctx.globalAlpha = 1;
      ctx.fillStyle = fill;
      ctx.font = font;
      ctx.fillText(s, x, y);
    },
  };
}

export function startClient(url: string, canvas: HTMLCanvasElement): void {
  const ctx = canvas.getContext("2d");
  if (!ctx) {
    throw new Error("2D canvas context unavailable");
  }
  const draw = canvasDraw(ctx);
  let vs: ViewState = initialViewState;
  let sessionClock = 0;
  const throttle = makeThrottle(POINTER_MAX_HZ);
  const ws = new WebSocket(url);

  ws.onmessage = (ev) => {
    if (typeof ev.data === "string") {
      vs = applyMessage(vs, ev.data);
      if (vs.state) {
        sessionClock = vs.state.t;
      }
    }
  };

  canvas.addEventListener("pointermove", (ev) => {
    const vt = viewTransformFor(vs, canvas.width, canvas.height);
    if (!vt || ws.readyState !== WebSocket.OPEN || !throttle.ready()) {
      return;
    }
    const rect = canvas.getBoundingClientRect();
    const px: Pt = [ev.clientX - rect.left, ev.clientY - rect.top];
    const [x1, x2] = pointerToWorkspace(vt, px);
    ws.send(posMessage(sessionClock, x1, x2));
  });

  let running = false;
  window.addEventListener("keydown", (ev) => {
    if (ws.readyState !== WebSocket.OPEN) {
      return;
    }
    if (ev.code === "Space") {
      ev.preventDefault();
      running = !running;
      ws.send(running ? startMessage : pauseMessage);
    } else if (ev.code === "KeyN") {
      ws.send(nextTrialMessage);
    }
  });

  const paint = (): void => {
    renderFrame(draw, vs, canvas.width, canvas.height);
    requestAnimationFrame(paint);
  };
  requestAnimationFrame(paint);
}
