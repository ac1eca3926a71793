"""Real-time session server: a human replaces the synthetic subject.

A WebSocket client streams pointer positions sampled from its display;
the server advances the session clock on a fixed 50 Hz control tick,
treats the pointer as the subject's position, computes the torque the
subject must be exerting against the machine impedance to hold the
reported deviation, and feeds that torque through the same muscle
envelope, EMG synthesis, and EMG processing chain the offline simulator
uses.  State frames with the live effort distribution stream back to
the client every tick.

The machine-side isometric calibration cannot be performed with a
pointer, so the server synthesizes it once at startup exactly as the
offline session does, then starts the clock at the first tracking
trial.
"""

from __future__ import annotations

import argparse
import asyncio
import json
import math
from dataclasses import dataclass

import numpy as np
from fastapi import FastAPI, WebSocket
from starlette.websockets import WebSocketDisconnect

from .emgproc import (EmgProcessor, MaxActivations, N_MUSCLES,
                      calibrate_isometric, effort_distribution)
from .musclesim import EmgSynthesizer, activation_envelope, fatigue_update
from .protocol import (EMG_PER_STEP, PLANT_RATE, TrialConfig, _half_step_interp,
                       build_protocol, isometric_drive, trial_impedance,
                       trial_start, trial_trajectory)
from .sessioncfg import SessionConfig, load_config
from .trajectory import (neutral_point, sample_curve, target_point,
                         tolerance_curves)
from . import fastsim

TICK_HZ = 50.0
TICK_DT = 1.0 / TICK_HZ
EMG_RATE = EMG_PER_STEP * PLANT_RATE
EMG_PER_TICK = int(round(EMG_RATE / TICK_HZ))
RUNNING_MEAN_WINDOW_S = 5.0
CURVE_POINTS = 96


@dataclass(frozen=True)
class StateFrame:
    """One outbound tick: kinematics, torque, and live distributions."""

    tick: int
    t: float
    trial: int
    target: tuple[float, float]
    neutral: tuple[float, float]
    actual: tuple[float, float]
    torque: tuple[float, float]
    dist: tuple[float, ...]
    fatigue: tuple[float, ...]
    stale: bool
    resting: bool

    def to_message(self) -> dict:
        def pt(p: tuple[float, float]) -> list[float] | None:
            return None if not all(map(math.isfinite, p)) else list(p)

        return {
            "type": "state",
            "tick": self.tick,
            "t": self.t,
            "trial": self.trial,
            "target": pt(self.target),
            "neutral": pt(self.neutral),
            "actual": list(self.actual),
            "torque": list(self.torque),
            "dist": list(self.dist),
            "fatigue": list(self.fatigue),
            "stale": self.stale,
            "resting": self.resting,
        }


def geometry_message(trial: TrialConfig, cfg: SessionConfig) -> dict:
    """Everything a client needs to draw one trial's workspace.

    The bounds fix the pixel-to-radian calibration on the client side.
    """
    traj = trial_trajectory(trial, cfg)
    imp = trial_impedance(trial, cfg)
    inner, outer = tolerance_curves(traj)
    ellipse = sample_curve(lambda p: _ellipse_by_phase(traj, p), CURVE_POINTS)
    circle = sample_curve(lambda p: _circle_by_phase(traj, p), CURVE_POINTS)
    reach = traj.semi_major + traj.tolerance_halfwidth + 0.05
    return {
        "type": "geometry",
        "trial": trial.index,
        "stiffness": imp.stiffness,
        "orientation_deg": trial.orientation_deg,
        "period_s": trial.period_s,
        "center": [traj.center[0], traj.center[1]],
        "circle_radius": traj.circle_radius,
        "semi_major": traj.semi_major,
        "semi_minor": traj.semi_minor,
        "tolerance_halfwidth": traj.tolerance_halfwidth,
        "tol": [sample_curve(inner, CURVE_POINTS).tolist(),
                sample_curve(outer, CURVE_POINTS).tolist()],
        "ellipse": ellipse.tolist(),
        "circle": circle.tolist(),
        "bounds": [traj.center[0] - reach, traj.center[0] + reach,
                   traj.center[1] - reach, traj.center[1] + reach],
    }


def _ellipse_by_phase(traj, phi: float) -> np.ndarray:
    return target_point(traj, phi / (2.0 * math.pi) * traj.period_s)


def _circle_by_phase(traj, phi: float) -> np.ndarray:
    return neutral_point(traj, phi / (2.0 * math.pi) * traj.period_s)


class LiveEngine:
    """Deterministic live pipeline, one step per control tick.

    Pure with respect to wall time: every state transition happens in
    ``step``, so a recorded position trace replayed through a fresh
    engine reproduces the served frames bit for bit.
    """

    def __init__(self, cfg: SessionConfig | None = None, seed: int = 0,
                 protocol: tuple[TrialConfig, ...] | None = None) -> None:
        self.cfg = cfg if cfg is not None else SessionConfig()
        self.protocol = protocol if protocol is not None else build_protocol()
        iso = [tr for tr in self.protocol if tr.is_isometric]
        if not iso:
            raise ValueError("live sessions need an isometric calibration "
                             "trial in the protocol")
        self.trials = [tr for tr in self.protocol if not tr.is_isometric]
        if not self.trials:
            raise ValueError("live sessions need at least one tracking trial")
        ss = np.random.SeedSequence(seed)
        self._subject_ss, self._emg_ss = ss.spawn(2)
        self._fat = self.cfg.fatigue_state()
        self._calib = self._calibrate(iso[0])
        self.tick = 0
        self.done = False
        self._trial_pos = 0
        self._dist = np.full(N_MUSCLES, 1.0 / N_MUSCLES)
        self._enter_trial()

    def _calibrate(self, trial: TrialConfig) -> MaxActivations:
        """Machine-side isometric calibration, identical to the offline path."""
        n_steps = int(round(trial.duration_s * PLANT_RATE))
        drive = isometric_drive(n_steps, trial.duration_s,
                                self.cfg.synergy_matrix().baseline,
                                self.cfg.iso_level)
        acc = self._fat.accumulated_effort.copy()
        env, _ = fastsim.run_scripted_kernel(
            n_steps, 1.0 / PLANT_RATE, drive, self._fat.beta, acc)
        self._fat.accumulated_effort = acc
        synth = EmgSynthesizer(self._emg_ss, self.cfg.emg_noise_floor)
        env2k = _half_step_interp(env)
        raw = synth.synth_emg(env2k, len(env2k))
        return calibrate_isometric(raw)

    @property
    def trial(self) -> TrialConfig:
        return self.trials[self._trial_pos]

    @property
    def t_session(self) -> float:
        return trial_start(self.trial) + self._t_rel

    def _enter_trial(self) -> None:
        """Reset the per-trial stream state; announces new geometry."""
        self._t_rel = 0.0
        self._traj = trial_trajectory(self.trial, self.cfg)
        self._imp = trial_impedance(self.trial, self.cfg)
        self._synth = EmgSynthesizer(self._emg_ss, self.cfg.emg_noise_floor)
        self._proc = EmgProcessor(self._calib,
                                  running_window_s=RUNNING_MEAN_WINDOW_S)
        self._e_prev: np.ndarray | None = None
        self._edot_prev: np.ndarray | None = None
        self.geometry_pending = True

    def skip_to_next_trial(self) -> None:
        if self._trial_pos + 1 < len(self.trials):
            self._trial_pos += 1
            self._enter_trial()
        else:
            self.done = True

    def upcoming_neutral(self) -> np.ndarray:
        """Neutral-path point at the next tick; the default position for
        a client that has not reported yet."""
        return neutral_point(self._traj, self._t_rel + TICK_DT)

    def step(self, pos: np.ndarray, stale: bool = False) -> StateFrame:
        """Advance one control tick with the subject at ``pos``.

        Rest periods advance the clock but leave the muscle pipeline and
        fatigue untouched; the frame then carries ``resting=True`` with
        zero torque and the last known distribution.
        """
        self.tick += 1
        if self.done:
            return self._frame(pos, np.zeros(2), stale, resting=True)
        self._t_rel += TICK_DT
        trial = self.trial
        if self._t_rel > trial.duration_s + trial.rest_s + 0.5 * TICK_DT:
            self.skip_to_next_trial()
            if self.done:
                return self._frame(pos, np.zeros(2), stale, resting=True)
            trial = self.trial
            self._t_rel += TICK_DT

        resting = self._t_rel > trial.duration_s + 0.5 * TICK_DT
        if resting:
            return self._frame(pos, np.zeros(2), stale, resting=True)

        neutral = neutral_point(self._traj, self._t_rel)
        e = np.asarray(pos, dtype=float) - neutral
        if self._e_prev is None:
            edot = np.zeros(2)
            eddot = np.zeros(2)
        else:
            edot = (e - self._e_prev) / TICK_DT
            if self._edot_prev is None:
                eddot = np.zeros(2)
            else:
                eddot = (edot - self._edot_prev) / TICK_DT
        self._e_prev = e
        self._edot_prev = edot

        subject_tau = (self._imp.inertia * eddot + self._imp.damping * edot
                       + self._imp.stiffness * e)
        env = activation_envelope(self.cfg.synergy_matrix(), subject_tau,
                                  self._fat)
        fatigue_update(self._fat, env, TICK_DT)
        raw = self._synth.synth_emg(env, EMG_PER_TICK)
        for activation in self._proc.push(raw):
            self._dist = effort_distribution(activation).values
        return self._frame(pos, subject_tau, stale, resting=False)

    def _frame(self, pos: np.ndarray, torque: np.ndarray, stale: bool,
               resting: bool) -> StateFrame:
        if resting or self.done:
            target = neutral = (math.nan, math.nan)
        else:
            target = tuple(target_point(self._traj, self._t_rel))
            neutral = tuple(neutral_point(self._traj, self._t_rel))
        return StateFrame(
            tick=self.tick,
            t=self.t_session,
            trial=self.trial.index,
            target=target,
            neutral=neutral,
            actual=(float(pos[0]), float(pos[1])),
            torque=(float(torque[0]), float(torque[1])),
            dist=tuple(float(v) for v in self._dist),
            fatigue=tuple(float(v) for v in self._fat.multiplier),
            stale=stale,
            resting=resting,
        )


def replay_trace(positions: np.ndarray, cfg: SessionConfig | None = None,
                 seed: int = 0,
                 protocol: tuple[TrialConfig, ...] | None = None,
                 ) -> list[StateFrame]:
    """Offline replay of a per-tick position trace.

    Feeding the positions a server actually received (the ``actual``
    field of its frames) reproduces the served frames bit for bit, since
    the engine is deterministic and owns no wall-clock state.
    """
    engine = LiveEngine(cfg, seed, protocol)
    return [engine.step(np.asarray(p, dtype=float)) for p in positions]


class _Shared:
    """Connection state owned by the event loop, shared between the
    reader task and the tick loop."""

    def __init__(self) -> None:
        self.latest: np.ndarray | None = None
        self.fresh = False
        self.running = False
        self.closed = False

    def take_fresh(self) -> bool:
        fresh, self.fresh = self.fresh, False
        return fresh


def _error_message(code: str, msg: str) -> str:
    return json.dumps({"type": "error", "code": code, "msg": msg})


async def _reader(ws, shared: _Shared, engine: LiveEngine,
                  send_lock: asyncio.Lock) -> None:
    """Consume inbound messages; malformed ones get an error frame and
    are dropped."""
    async def reject(code: str, msg: str) -> None:
        async with send_lock:
            await ws.send_text(_error_message(code, msg))

    while True:
        try:
            text = await ws.receive_text()
        except (WebSocketDisconnect, RuntimeError):
            shared.closed = True
            return
        try:
            msg = json.loads(text)
        except json.JSONDecodeError:
            await reject("bad_json", "message is not valid JSON")
            continue
        if not isinstance(msg, dict):
            await reject("bad_message", "expected a JSON object")
            continue
        kind = msg.get("type")
        if kind == "pos":
            try:
                x1, x2 = float(msg["x1"]), float(msg["x2"])
            except (KeyError, TypeError, ValueError):
                await reject("bad_pos", "pos needs numeric x1 and x2")
                continue
            if not (math.isfinite(x1) and math.isfinite(x2)):
                await reject("bad_pos", "pos must be finite")
                continue
            shared.latest = np.array([x1, x2])
            shared.fresh = True
        elif kind == "start":
            shared.running = True
        elif kind == "pause":
            shared.running = False
        elif kind == "next_trial":
            engine.skip_to_next_trial()
        else:
            await reject("bad_type", f"unknown message type: {kind!r}")


async def _serve_client(ws, engine: LiveEngine, shared: _Shared,
                        pacing_hz: float) -> None:
    """Tick loop for one connected client.

    The engine only advances while the client is connected and has sent
    "start", so a disconnect pauses the session clock by construction.
    """
    send_lock = asyncio.Lock()
    reader = asyncio.create_task(_reader(ws, shared, engine, send_lock))
    period = 1.0 / pacing_hz
    loop = asyncio.get_running_loop()
    try:
        async with send_lock:
            await ws.send_json(geometry_message(engine.trial, engine.cfg))
        engine.geometry_pending = False
        next_tick = loop.time() + period
        while not shared.closed:
            delay = next_tick - loop.time()
            if delay > 0:
                await asyncio.sleep(delay)
                next_tick += period
            else:
                # Behind schedule: tick immediately and rebase so a stall
                # does not cause a burst of catch-up frames.
                next_tick = loop.time() + period
            if shared.closed:
                break
            if not shared.running or engine.done:
                continue
            fresh = shared.take_fresh()
            pos = (shared.latest if shared.latest is not None
                   else engine.upcoming_neutral())
            frame = engine.step(pos, stale=not fresh)
            async with send_lock:
                if engine.geometry_pending:
                    await ws.send_json(geometry_message(engine.trial,
                                                        engine.cfg))
                    engine.geometry_pending = False
                await ws.send_json(frame.to_message())
    finally:
        reader.cancel()


def create_app(cfg: SessionConfig | None = None, seed: int = 0,
               protocol: tuple[TrialConfig, ...] | None = None,
               pacing_hz: float = TICK_HZ):
    """ASGI app exposing one live session at the /session endpoint.

    One client at a time; a second connection is turned away with an
    error frame.  ``pacing_hz`` sets the wall-clock tick rate and exists
    so tests can run the 50 Hz session semantics faster than real time.
    """
    app = FastAPI()
    engine = LiveEngine(cfg, seed, protocol)
    app.state.engine = engine
    app.state.busy = False

    @app.websocket("/session")
    async def session_ws(ws: WebSocket) -> None:
        await ws.accept()
        if app.state.busy:
            await ws.send_text(_error_message(
                "busy", "session already has a client"))
            await ws.close()
            return
        app.state.busy = True
        shared = _Shared()
        try:
            await _serve_client(ws, engine, shared, pacing_hz)
        except WebSocketDisconnect:
            pass
        finally:
            app.state.busy = False

    return app


def serve(config: str | None, port: int, host: str = "127.0.0.1",
          seed: int = 0) -> None:
    """Run the live session server until interrupted."""
    import uvicorn

    app = create_app(load_config(config), seed=seed)
    uvicorn.run(app, host=host, port=port, log_level="warning")


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="ergotwin-serve",
        description="Live tracking session server (WebSocket, one client).")
    parser.add_argument("--config", default=None)
    parser.add_argument("--port", type=int, default=8765)
    parser.add_argument("--host", default="127.0.0.1")
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args(argv)
    serve(args.config, args.port, args.host, args.seed)
    return 0


if __name__ == "__main__":
    import sys

    sys.exit(main())
