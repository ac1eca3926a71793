"""Shared helpers for the test suite.

The oracle functions here are computed from first principles, without
calling into the package's filter or integrator code, so the tests that
use them are genuine cross-checks rather than self-comparisons.
"""

import math

import numpy as np

from ergotwin.protocol import TrialConfig


def iso_trial(index: int = 0, duration_s: float = 6.0,
              rest_s: float = 0.5) -> TrialConfig:
    return TrialConfig(index, "low", "low", 0.0, duration_s, rest_s,
                       is_isometric=True)


def tracking_trial(index: int, imp: str = "low", speed: str = "low",
                   theta: float = 0.0, duration_s: float = 2.0,
                   rest_s: float = 0.5) -> TrialConfig:
    return TrialConfig(index, imp, speed, theta, duration_s, rest_s)


def short_protocol(specs, duration_s: float = 2.0, rest_s: float = 0.5,
                   iso_duration_s: float = 6.0) -> tuple[TrialConfig, ...]:
    """Calibration trial plus one tracking trial per (imp, speed, theta)."""
    rows = [iso_trial(0, iso_duration_s, rest_s)]
    for i, (imp, speed, theta) in enumerate(specs, start=1):
        rows.append(tracking_trial(i, imp, speed, theta, duration_s, rest_s))
    return tuple(rows)


def prewarped(f: float, fs: float) -> float:
    """Analog frequency that the bilinear transform maps to digital f."""
    return 2.0 * fs * math.tan(math.pi * f / fs)


def lowpass_oracle_mag(f: float, fc: float, fs: float) -> float:
    """Magnitude of a second-order Butterworth low-pass designed via the
    bilinear transform with the cutoff prewarped: the analog prototype
    response evaluated at the prewarped frequency."""
    if f >= fs / 2.0:
        return 0.0
    ratio = prewarped(f, fs) / prewarped(fc, fs)
    return 1.0 / math.sqrt(1.0 + ratio ** 4)


def bandpass_oracle_mag(f: float, flo: float, fhi: float, fs: float) -> float:
    """Magnitude of the fourth-order band-pass built from the order-two
    Butterworth prototype through the low-pass-to-band-pass transform,
    with both edges prewarped."""
    if f <= 0.0 or f >= fs / 2.0:
        return 0.0
    w = prewarped(f, fs)
    w1, w2 = prewarped(flo, fs), prewarped(fhi, fs)
    x = (w * w - w1 * w2) / ((w2 - w1) * w)
    return 1.0 / math.sqrt(1.0 + x ** 4)


def cascade_gain_at_real_z(sos: np.ndarray, z: float) -> float:
    """Exact cascade transfer function evaluated at a real z (for the
    structural zeros at z = 1 and z = -1)."""
    h = 1.0
    for b0, b1, b2, _, a1, a2 in np.asarray(sos, dtype=float):
        h *= (b0 + b1 / z + b2 / z ** 2) / (1.0 + a1 / z + a2 / z ** 2)
    return h


def step_response(inertia: float, damping: float, stiffness: float,
                  tau0: float, t: np.ndarray) -> np.ndarray:
    """Closed-form deviation response to a constant torque from rest.

    Solves I*e'' + B*e' + K*e = tau0 with e(0) = e'(0) = 0 through the
    characteristic roots, valid for both damping regimes as long as the
    roots are distinct.
    """
    t = np.asarray(t, dtype=float)
    disc = complex(damping * damping - 4.0 * inertia * stiffness)
    root = np.sqrt(disc)
    r1 = (-damping + root) / (2.0 * inertia)
    r2 = (-damping - root) / (2.0 * inertia)
    if r1 == r2:
        raise ValueError("repeated roots not handled")
    y = 1.0 + (r2 * np.exp(r1 * t) - r1 * np.exp(r2 * t)) / (r1 - r2)
    return (tau0 / stiffness) * y.real
