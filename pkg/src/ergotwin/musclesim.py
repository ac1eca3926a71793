"""Synthetic muscle activity: synergy mapping, fatigue, raw EMG synthesis.

Six muscles share the two-axis torque through a nonnegative synergy
matrix over four signed torque channels (positive and negative parts of
each axis).  A slow fatigue state scales each muscle's activation
envelope up as effort accumulates, mimicking the amplitude growth of
surface EMG under sustained exercise.  Raw EMG is band-limited Gaussian
noise scaled by the envelope plus a small sensor noise floor.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .emgproc import N_MUSCLES, BiquadCascade, design_bandpass

EMG_RATE = 2000.0
SHAPING_BAND = (40.0, 400.0)
DEFAULT_NOISE_FLOOR = 0.015

# Rows: brachialis, posterior deltoid, anterior deltoid, biceps, triceps,
# chest.  Columns: torque channels tau1+, tau1-, tau2+, tau2-.  The first
# four muscles are phasic movers, each dominated by one torque channel
# with little resting tone.  Triceps and chest act as postural
# stabilizers: weak task coupling, high tonic baseline.  The share of
# total activity carried by the stabilizers therefore falls as task
# torque grows, which keeps overall effort level visible in the
# sum-normalized distributions.
DEFAULT_SYNERGY = np.array([
    [1.00, 0.00, 0.08, 0.00],
    [0.00, 1.00, 0.00, 0.08],
    [0.08, 0.00, 1.00, 0.00],
    [0.00, 0.08, 0.00, 1.00],
    [0.25, 0.00, 0.15, 0.00],
    [0.00, 0.15, 0.00, 0.25],
])
DEFAULT_BASELINE = np.array([0.012, 0.012, 0.012, 0.012, 0.055, 0.055])

# Per-muscle fatigue accumulation rates.  Phasic movers fatigue faster
# than the tonic stabilizers; the default 36-minute protocol ends with
# multipliers around 1.4-1.8 phasic and 1.2 tonic.
DEFAULT_FATIGUE_BETA = np.array([2.0, 1.6, 1.8, 2.2, 0.7, 0.9]) * 2.2e-3


@dataclass(frozen=True)
class SynergyMatrix:
    """Nonnegative map from signed torque channels to muscle envelopes."""

    weights: np.ndarray = field(default_factory=lambda: DEFAULT_SYNERGY.copy())
    baseline: np.ndarray = field(default_factory=lambda: DEFAULT_BASELINE.copy())

    def __post_init__(self) -> None:
        w = np.asarray(self.weights, dtype=float)
        b = np.asarray(self.baseline, dtype=float)
        if w.shape != (N_MUSCLES, 4):
            raise ValueError(f"weights must be ({N_MUSCLES}, 4), got {w.shape}")
        if b.shape != (N_MUSCLES,):
            raise ValueError(f"baseline must be ({N_MUSCLES},), got {b.shape}")
        if np.any(w < 0) or np.any(b < 0):
            raise ValueError("synergy weights and baseline must be nonnegative")
        if np.any(w.sum(axis=1) <= 0):
            raise ValueError("every muscle needs at least one driving channel")
        if np.any(w.sum(axis=0) <= 0):
            raise ValueError("every torque channel needs at least one muscle")
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "baseline", b)


@dataclass
class FatigueState:
    """Accumulated effort and the resulting per-muscle amplitude multipliers."""

    beta: np.ndarray = field(default_factory=lambda: DEFAULT_FATIGUE_BETA.copy())
    accumulated_effort: np.ndarray = field(
        default_factory=lambda: np.zeros(N_MUSCLES))

    def __post_init__(self) -> None:
        self.beta = np.asarray(self.beta, dtype=float)
        if self.beta.shape == ():
            self.beta = np.full(N_MUSCLES, float(self.beta))
        if self.beta.shape != (N_MUSCLES,):
            raise ValueError(f"beta must be scalar or ({N_MUSCLES},)")
        if np.any(self.beta < 0):
            raise ValueError("beta must be nonnegative")
        self.accumulated_effort = np.asarray(self.accumulated_effort, dtype=float)

    @property
    def multiplier(self) -> np.ndarray:
        """Amplitude multipliers, >= 1 and nondecreasing over a session."""
        return 1.0 + self.beta * self.accumulated_effort


def torque_channels(tau: np.ndarray) -> np.ndarray:
    """Split a two-axis torque into its four nonnegative signed channels."""
    t = np.asarray(tau, dtype=float)
    return np.array([max(t[0], 0.0), max(-t[0], 0.0),
                     max(t[1], 0.0), max(-t[1], 0.0)])


def activation_envelope(syn: SynergyMatrix, subject_tau: np.ndarray,
                        fat: FatigueState) -> np.ndarray:
    """Instantaneous per-muscle envelope for a subject torque.

    envelope = multiplier * (W @ channels + baseline); nonnegative by
    construction for any torque.
    """
    drive = syn.weights @ torque_channels(subject_tau) + syn.baseline
    return fat.multiplier * drive


def fatigue_update(fat: FatigueState, envelope: np.ndarray, dt: float) -> None:
    """Accumulate effort over ``dt`` seconds of the given envelope.

    Called only while a trial is active; rest periods leave the state
    untouched, which freezes the multipliers.
    """
    if dt < 0:
        raise ValueError("dt must be nonnegative")
    env = np.asarray(envelope, dtype=float)
    if np.any(env < 0):
        raise ValueError("envelope must be nonnegative")
    fat.accumulated_effort = fat.accumulated_effort + env * dt


class EmgSynthesizer:
    """Streaming raw-EMG source for one trial.

    Each channel is unit-RMS band-limited Gaussian noise (fixed shaping
    band) scaled by the channel's envelope, plus white sensor noise of
    standard deviation ``noise_floor``.  Filter state and the generator
    persist across calls so consecutive blocks form one continuous
    stream; runs are reproducible for a given seed.
    """

    def __init__(self, seed: int | np.random.SeedSequence,
                 noise_floor: float = DEFAULT_NOISE_FLOOR,
                 fs: float = EMG_RATE) -> None:
        self.fs = fs
        self.noise_floor = float(noise_floor)
        self._rng = np.random.Generator(np.random.Philox(seed))
        self._shaper = _unit_rms_shaper(fs)

    def synth_emg(self, envelope: np.ndarray, n_samples: int) -> np.ndarray:
        """Synthesize ``n_samples`` of raw EMG.

        Args:
            envelope: either a (6,) vector held constant over the block
                or an (n_samples, 6) per-sample envelope.

        Returns:
            (n_samples, 6) float array.
        """
        env = np.asarray(envelope, dtype=float)
        if env.ndim == 1:
            env = np.broadcast_to(env, (n_samples, N_MUSCLES))
        if env.shape != (n_samples, N_MUSCLES):
            raise ValueError(f"envelope shape {env.shape} does not match "
                             f"{n_samples} samples")
        if np.any(env < 0):
            raise ValueError("envelope must be nonnegative")
        shaped = self._shaper.filter(
            self._rng.standard_normal((n_samples, N_MUSCLES)))
        out = env * shaped
        if self.noise_floor > 0:
            out = out + self.noise_floor * self._rng.standard_normal(
                (n_samples, N_MUSCLES))
        return out


def _unit_rms_shaper(fs: float) -> BiquadCascade:
    """Shaping band-pass normalized to unit noise power gain.

    Scaling the first section by 1/sqrt(sum h^2) makes white unit-variance
    input come out with unit variance in steady state, so the envelope
    multiplies RMS directly.
    """
    cascade = design_bandpass(*SHAPING_BAND, fs=fs)
    probe = BiquadCascade(cascade.sos.copy())
    impulse = np.zeros(4096)
    impulse[0] = 1.0
    h = probe.filter(impulse)
    power = float(np.sum(h * h))
    sos = cascade.sos.copy()
    sos[0, :3] /= math.sqrt(power)
    return BiquadCascade(sos)


def synth_emg(envelope: np.ndarray, seed: int, n_samples: int,
              noise_floor: float = DEFAULT_NOISE_FLOOR) -> np.ndarray:
    """One-shot convenience wrapper around ``EmgSynthesizer``."""
    return EmgSynthesizer(seed, noise_floor).synth_emg(envelope, n_samples)
