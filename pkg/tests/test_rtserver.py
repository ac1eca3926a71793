import json
import time

import numpy as np
import pytest
from starlette.testclient import TestClient
from starlette.websockets import WebSocketDisconnect

from ergotwin.rtserver import (LiveEngine, TICK_DT, create_app,
                               geometry_message, replay_trace)
from ergotwin.protocol import trial_trajectory
from ergotwin.sessioncfg import SessionConfig
from ergotwin.trajectory import ellipse_point

from testutil import iso_trial, short_protocol, tracking_trial

FAST_HZ = 2000.0


def _protocol(n_trials=2, duration_s=2.0):
    specs = [("low", "low", 90.0), ("low", "low", 45.0),
             ("high", "low", 0.0)][:n_trials]
    return short_protocol(specs, duration_s=duration_s, rest_s=0.5)


def test_engine_rejects_incomplete_protocols():
    with pytest.raises(ValueError, match="isometric"):
        LiveEngine(protocol=(tracking_trial(0, "low", "low", 90.0),))
    with pytest.raises(ValueError, match="tracking"):
        LiveEngine(protocol=(iso_trial(0),))


def test_engine_neutral_echo_gives_zero_torque():
    engine = LiveEngine(protocol=_protocol(1, duration_s=8.0), seed=0)
    frames = []
    for _ in range(300):
        frames.append(engine.step(engine.upcoming_neutral()))
    assert [f.tick for f in frames] == list(range(1, 301))
    for f in frames:
        assert f.torque == (0.0, 0.0)
        assert f.actual == f.neutral
        assert not f.resting
        assert min(f.fatigue) >= 1.0
    # with no tracking demand the effort split settles near the resting
    # muscle tone shares
    cfg = SessionConfig()
    base = cfg.synergy_matrix().baseline
    np.testing.assert_allclose(frames[-1].dist, base / base.sum(), atol=0.08)
    assert abs(sum(frames[-1].dist) - 1.0) < 1e-9


def test_engine_constant_offset_reports_stiffness_torque():
    proto = (iso_trial(0), tracking_trial(1, "high", "low", 0.0,
                                          duration_s=8.0, rest_s=0.5))
    engine = LiveEngine(protocol=proto, seed=0)
    frames = []
    for _ in range(100):
        frames.append(engine.step(engine.upcoming_neutral() + [0.1, 0.0]))
    settled = frames[10:]
    for f in settled:
        assert abs(f.torque[0] - 0.7) < 1e-9  # K=7 times 0.1 rad
        assert abs(f.torque[1]) < 1e-9


def test_engine_trial_rest_and_advance_timeline():
    engine = LiveEngine(protocol=_protocol(2, duration_s=1.0), seed=0)
    frames = [engine.step(engine.upcoming_neutral()) for _ in range(160)]
    # 1 s trial at 50 Hz: ticks 1-50 active, 51-75 rest, 76 starts trial 2
    assert [f.resting for f in frames[:50]] == [False] * 50
    assert [f.resting for f in frames[50:75]] == [True] * 25
    assert not frames[75].resting
    assert [f.trial for f in frames[:75]] == [1] * 75
    assert frames[75].trial == 2
    assert engine.geometry_pending  # trial 2 geometry not yet announced
    rest = frames[50]
    assert rest.torque == (0.0, 0.0)
    assert rest.dist == frames[49].dist      # pipeline frozen during rest
    assert rest.fatigue == frames[49].fatigue
    assert np.isnan(rest.target).all() and np.isnan(rest.neutral).all()
    assert rest.to_message()["target"] is None
    assert rest.to_message()["neutral"] is None
    # session clock: the protocol-index-2 trial starts at 2 * (1.0 + 0.5)
    assert frames[75].t == pytest.approx(3.0 + TICK_DT)


def test_engine_done_after_last_trial():
    engine = LiveEngine(protocol=_protocol(1), seed=0)
    engine.skip_to_next_trial()
    assert engine.done
    f1 = engine.step(np.zeros(2))
    f2 = engine.step(np.zeros(2))
    assert (f1.tick, f2.tick) == (1, 2)
    assert f1.resting and f2.resting
    assert f1.torque == (0.0, 0.0)


def test_replay_trace_matches_fresh_engine():
    proto = _protocol(2)
    engine = LiveEngine(protocol=proto, seed=5)
    rng = np.random.default_rng(0)
    positions = rng.normal(0.0, 0.2, size=(140, 2))
    served = [engine.step(p) for p in positions]
    replayed = replay_trace(positions, seed=5, protocol=proto)
    assert served == replayed


def test_geometry_message_contents():
    cfg = SessionConfig()
    trial = tracking_trial(3, "high", "low", 45.0)
    msg = geometry_message(trial, cfg)
    assert msg["type"] == "geometry"
    assert msg["trial"] == 3
    assert msg["stiffness"] == cfg.stiffness_high
    assert msg["orientation_deg"] == 45.0
    assert msg["period_s"] == 8.0
    for key in ("ellipse", "circle"):
        pts = np.asarray(msg[key])
        assert pts.shape == (96, 2)
    inner, outer = (np.asarray(c) for c in msg["tol"])
    assert inner.shape == outer.shape == (96, 2)
    traj = trial_trajectory(trial, cfg)
    np.testing.assert_allclose(np.asarray(msg["ellipse"])[0],
                               ellipse_point(traj, 0.0), atol=1e-12)
    x_lo, x_hi, y_lo, y_hi = msg["bounds"]
    assert x_lo < msg["center"][0] < x_hi
    assert y_lo < msg["center"][1] < y_hi
    ring = np.vstack([inner, outer])
    assert (ring[:, 0] >= x_lo).all() and (ring[:, 0] <= x_hi).all()
    assert (ring[:, 1] >= y_lo).all() and (ring[:, 1] <= y_hi).all()


@pytest.fixture()
def app():
    return create_app(protocol=_protocol(2), pacing_hz=FAST_HZ)


def _recv_state(ws):
    while True:
        msg = ws.receive_json()
        if msg["type"] == "state":
            return msg


def test_ws_geometry_then_neutral_frames(app):
    with TestClient(app) as client:
        with client.websocket_connect("/session") as ws:
            geo = ws.receive_json()
            assert geo["type"] == "geometry" and geo["trial"] == 1
            ws.send_text(json.dumps({"type": "start"}))
            frames = [_recv_state(ws) for _ in range(10)]
    ticks = [f["tick"] for f in frames]
    assert ticks == list(range(ticks[0], ticks[0] + 10))
    for f in frames:
        assert f["stale"] is True   # no position was ever reported
        assert f["actual"] == f["neutral"]
        assert f["torque"] == [0.0, 0.0]
        assert abs(sum(f["dist"]) - 1.0) < 1e-9


def test_ws_position_echo_and_stale_flag(app):
    with TestClient(app) as client:
        with client.websocket_connect("/session") as ws:
            ws.receive_json()
            ws.send_text(json.dumps({"type": "start"}))
            _recv_state(ws)
            ws.send_text(json.dumps({"type": "pos", "t": 0.0,
                                     "x1": 0.31, "x2": -0.12}))
            for _ in range(200):
                f = _recv_state(ws)
                if not f["stale"]:
                    break
            else:
                pytest.fail("reported position never reflected")
            assert f["actual"] == [0.31, -0.12]
            # the reported position sticks until the next report
            nxt = _recv_state(ws)
            assert nxt["actual"] == [0.31, -0.12]
            assert nxt["stale"] is True


def test_ws_malformed_messages_get_error_frames(app):
    with TestClient(app) as client:
        with client.websocket_connect("/session") as ws:
            ws.receive_json()
            cases = [
                ("{not json", "bad_json"),
                ("[1, 2]", "bad_message"),
                (json.dumps({"type": "warp"}), "bad_type"),
                (json.dumps({"type": "pos", "x1": 0.1}), "bad_pos"),
                (json.dumps({"type": "pos", "x1": "abc", "x2": 0}),
                 "bad_pos"),
                ('{"type": "pos", "x1": Infinity, "x2": 0}', "bad_pos"),
            ]
            for text, code in cases:
                ws.send_text(text)
                reply = ws.receive_json()
                assert reply["type"] == "error"
                assert reply["code"] == code
            # the connection survives malformed input
            ws.send_text(json.dumps({"type": "start"}))
            assert _recv_state(ws)["tick"] >= 1


def test_ws_second_client_turned_away(app):
    with TestClient(app) as client:
        with client.websocket_connect("/session") as ws1:
            ws1.receive_json()
            with client.websocket_connect("/session") as ws2:
                reply = ws2.receive_json()
                assert reply == {"type": "error", "code": "busy",
                                 "msg": "session already has a client"}
                with pytest.raises(WebSocketDisconnect):
                    ws2.receive_json()
            # first client unaffected
            ws1.send_text(json.dumps({"type": "start"}))
            assert _recv_state(ws1)["type"] == "state"


def test_ws_pause_message_stops_the_clock(app):
    engine = app.state.engine
    with TestClient(app) as client:
        with client.websocket_connect("/session") as ws:
            ws.receive_json()
            ws.send_text(json.dumps({"type": "start"}))
            for _ in range(5):
                _recv_state(ws)
            ws.send_text(json.dumps({"type": "pause"}))
            time.sleep(0.15)
            t0 = engine.tick
            time.sleep(0.15)
            assert engine.tick == t0
            ws.send_text(json.dumps({"type": "start"}))
            time.sleep(0.15)
            assert engine.tick > t0


def test_ws_disconnect_pauses_session(app):
    engine = app.state.engine
    with TestClient(app) as client:
        with client.websocket_connect("/session") as ws:
            ws.receive_json()
            ws.send_text(json.dumps({"type": "start"}))
            for _ in range(20):
                _recv_state(ws)
        time.sleep(0.3)  # let the server notice the disconnect
        tick_before = engine.tick
        time.sleep(0.15)
        assert engine.tick == tick_before  # nothing runs while detached
        with client.websocket_connect("/session") as ws:
            geo = ws.receive_json()
            assert geo["type"] == "geometry"  # re-sent on reconnect
            ws.send_text(json.dumps({"type": "start"}))
            first = _recv_state(ws)
            assert first["tick"] == tick_before + 1


def test_ws_next_trial_command_sends_new_geometry(app):
    with TestClient(app) as client:
        with client.websocket_connect("/session") as ws:
            geo = ws.receive_json()
            assert geo["trial"] == 1
            ws.send_text(json.dumps({"type": "start"}))
            for _ in range(5):
                _recv_state(ws)
            ws.send_text(json.dumps({"type": "next_trial"}))
            for _ in range(200):
                msg = ws.receive_json()
                if msg["type"] == "geometry":
                    break
            else:
                pytest.fail("no geometry after next_trial")
            assert msg["trial"] == 2
            assert _recv_state(ws)["trial"] == 2


def test_ws_served_frames_replay_bit_for_bit():
    proto = _protocol(2)
    app = create_app(protocol=proto, seed=3, pacing_hz=FAST_HZ)
    states = []
    with TestClient(app) as client:
        with client.websocket_connect("/session") as ws:
            ws.receive_json()
            ws.send_text(json.dumps({"type": "start"}))
            rng = np.random.default_rng(1)
            while len(states) < 140:
                if len(states) % 10 == 5:
                    x1, x2 = rng.normal(0.0, 0.2, size=2)
                    ws.send_text(json.dumps({"type": "pos", "t": 0.0,
                                             "x1": x1, "x2": x2}))
                msg = ws.receive_json()
                if msg["type"] == "state":
                    states.append(msg)
    positions = np.array([f["actual"] for f in states])
    replayed = replay_trace(positions, seed=3, protocol=proto)
    for srv, rep in zip(states, replayed):
        msg = rep.to_message()
        for key in srv:
            if key == "stale":
                continue  # freshness depends on wall-clock arrival order
            assert srv[key] == msg[key], key
