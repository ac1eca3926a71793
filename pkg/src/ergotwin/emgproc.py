"""EMG conditioning chain: band-pass, rectify, envelope, effort distribution.

The chain follows the fixed order: per-channel mean removal, division by
the per-channel maximum activation from the isometric calibration trial,
30-950 Hz band-pass, full-wave rectification, 50 Hz low-pass, then block
averaging down to the frame rate and sum-normalization of each frame into
a muscle effort distribution.

Filters are second-order Butterworth designs realized through the
bilinear transform with frequency prewarping of the band edges; the
band-pass is a fourth-order digital filter (two biquads).  Cascades carry
explicit per-channel state so a signal processed in chunks is
bit-identical to the same signal processed in one call.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.signal import sosfilt

SAMPLE_RATE = 2000.0
BAND_EDGES = (30.0, 950.0)
LOWPASS_CUTOFF = 50.0
FRAME_RATE = 10.0
N_MUSCLES = 6
DEGENERATE_SUM = 1e-12

MUSCLES = (
    "brachialis",
    "posterior_deltoid",
    "anterior_deltoid",
    "biceps",
    "triceps",
    "chest",
)


class BiquadCascade:
    """Cascade of second-order sections with per-channel delay state.

    ``sos`` has one row per section: [b0, b1, b2, 1, a1, a2].  State is
    allocated on the first ``filter`` call from the input's channel count
    (two delay registers per section per channel) and carried across
    calls until ``reset``.
    """

    def __init__(self, sos: np.ndarray) -> None:
        sos = np.asarray(sos, dtype=float)
        if sos.ndim != 2 or sos.shape[1] != 6:
            raise ValueError(f"sos must be (n_sections, 6), got {sos.shape}")
        if not np.allclose(sos[:, 3], 1.0):
            raise ValueError("sections must be normalized to a0 = 1")
        self.sos = sos
        self._zi: np.ndarray | None = None

    @property
    def n_sections(self) -> int:
        return self.sos.shape[0]

    def poles(self) -> np.ndarray:
        """Digital poles of every section, concatenated."""
        return np.concatenate([np.roots(row[3:]) for row in self.sos])

    def response(self, freqs: np.ndarray, fs: float) -> np.ndarray:
        """Complex frequency response at ``freqs`` (Hz), from coefficients."""
        z = np.exp(2j * math.pi * np.asarray(freqs, dtype=float) / fs)
        zm1, zm2 = 1.0 / z, 1.0 / z ** 2
        h = np.ones_like(z)
        for b0, b1, b2, _, a1, a2 in self.sos:
            h *= (b0 + b1 * zm1 + b2 * zm2) / (1.0 + a1 * zm1 + a2 * zm2)
        return h

    def reset(self) -> None:
        self._zi = None

    def filter(self, x: np.ndarray) -> np.ndarray:
        """Filter a block of samples, carrying state across calls.

        Args:
            x: (n_samples, n_channels) or (n_samples,) block.

        Returns:
            Filtered block of the same shape.
        """
        x = np.asarray(x, dtype=float)
        squeeze = x.ndim == 1
        if squeeze:
            x = x[:, None]
        if self._zi is None:
            self._zi = np.zeros((self.n_sections, 2, x.shape[1]))
        elif self._zi.shape[2] != x.shape[1]:
            raise ValueError("channel count changed mid-stream")
        y, self._zi = sosfilt(self.sos, x, axis=0, zi=self._zi)
        return y[:, 0] if squeeze else y


_PROTOTYPE_POLES = np.array([
    np.exp(1j * 3.0 * math.pi / 4.0),
    np.exp(1j * 5.0 * math.pi / 4.0),
])  # normalized second-order Butterworth low-pass


def _prewarp(f: float, fs: float) -> float:
    return 2.0 * fs * math.tan(math.pi * f / fs)


def _bilinear_zpk(zeros: np.ndarray, poles: np.ndarray, gain: float,
                  fs: float) -> tuple[np.ndarray, np.ndarray, float]:
    c = 2.0 * fs
    z_d = (c + zeros) / (c - zeros)
    p_d = (c + poles) / (c - poles)
    gain_d = gain * float(np.real(np.prod(c - zeros) / np.prod(c - poles)))
    # zeros of the analog filter at infinity land at z = -1
    fill = -np.ones(len(poles) - len(zeros))
    return np.concatenate([z_d, fill]), p_d, gain_d


def _pair_sections(zeros: np.ndarray, poles: np.ndarray,
                   gain: float) -> np.ndarray:
    """Assemble conjugate pole pairs and real zeros into biquad rows."""
    upper = np.sort_complex(poles[poles.imag > 0])
    if 2 * len(upper) != len(poles):
        raise ValueError("expected poles in strict conjugate pairs")
    if np.max(np.abs(poles)) >= 1.0:
        raise ValueError("unstable design: pole on or outside the unit circle")
    # one zero pair per section; zeros here are real (+1/-1 from the
    # bilinear transform), so split them alternately
    zs = np.sort(zeros.real)
    n_sec = len(upper)
    g = gain ** (1.0 / n_sec)
    rows = []
    for i, p in enumerate(upper):
        sec_zeros = zs[i::n_sec]
        b = g * np.poly(sec_zeros)
        a = np.poly([p, np.conj(p)]).real
        rows.append(np.concatenate([b.real, a]))
    return np.vstack(rows)


def design_lowpass(fc: float, fs: float = SAMPLE_RATE) -> BiquadCascade:
    """Second-order Butterworth low-pass (one biquad), prewarped at ``fc``."""
    if not 0.0 < fc < fs / 2.0:
        raise ValueError(f"cutoff must lie in (0, fs/2), got {fc}")
    wc = _prewarp(fc, fs)
    poles = wc * _PROTOTYPE_POLES
    zeros = np.array([], dtype=complex)
    z_d, p_d, k_d = _bilinear_zpk(zeros, poles, wc ** 2, fs)
    return BiquadCascade(_pair_sections(z_d, p_d, k_d))


def design_bandpass(flo: float, fhi: float,
                    fs: float = SAMPLE_RATE) -> BiquadCascade:
    """Butterworth band-pass from the second-order analog prototype.

    Both edges are prewarped before the low-pass-to-band-pass transform,
    so the digital -3 dB points land exactly on ``flo`` and ``fhi``.  The
    result is a fourth-order digital filter packed as two biquads.
    """
    if not 0.0 < flo < fhi < fs / 2.0:
        raise ValueError(f"band edges must satisfy 0 < flo < fhi < fs/2, "
                         f"got ({flo}, {fhi})")
    wlo, whi = _prewarp(flo, fs), _prewarp(fhi, fs)
    w0sq = wlo * whi
    bw = whi - wlo
    poles = []
    for p in _PROTOTYPE_POLES:
        disc = np.sqrt((p * bw) ** 2 - 4.0 * w0sq)
        poles.extend([(p * bw + disc) / 2.0, (p * bw - disc) / 2.0])
    poles = np.asarray(poles)
    zeros = np.zeros(2, dtype=complex)  # s = 0, doubled
    z_d, p_d, k_d = _bilinear_zpk(zeros, poles, bw ** 2, fs)
    return BiquadCascade(_pair_sections(z_d, p_d, k_d))


@dataclass(frozen=True)
class MaxActivations:
    """Per-channel maximum activation from the isometric calibration trial."""

    values: np.ndarray

    def __post_init__(self) -> None:
        v = np.asarray(self.values, dtype=float)
        if v.shape != (N_MUSCLES,):
            raise ValueError(f"expected {N_MUSCLES} channels, got {v.shape}")
        if not np.all(v > 0):
            raise ValueError("maximum activations must be strictly positive")
        object.__setattr__(self, "values", v)


@dataclass(frozen=True)
class MuscleDistribution:
    """One frame's share of effort per muscle (sums to one unless degenerate)."""

    values: np.ndarray
    degenerate: bool = False


def effort_distribution(activation: np.ndarray) -> MuscleDistribution:
    """Normalize one activation frame to the effort simplex.

    A frame whose activations sum below ``DEGENERATE_SUM`` carries no
    direction information; it maps to the uniform distribution and is
    flagged degenerate.

    Args:
        activation: nonnegative 6-vector.
    """
    a = np.asarray(activation, dtype=float)
    if a.shape != (N_MUSCLES,):
        raise ValueError(f"expected {N_MUSCLES} activations, got {a.shape}")
    if np.any(a < 0):
        raise ValueError("activations must be nonnegative")
    s = float(a.sum())
    if s < DEGENERATE_SUM:
        return MuscleDistribution(np.full(N_MUSCLES, 1.0 / N_MUSCLES), True)
    return MuscleDistribution(a / s, False)


def effort_distributions(activations: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized ``effort_distribution`` over (n_frames, 6) activations.

    Returns:
        (distributions, degenerate) where degenerate marks frames mapped
        to the uniform fallback.
    """
    a = np.asarray(activations, dtype=float)
    if a.ndim != 2 or a.shape[1] != N_MUSCLES:
        raise ValueError(f"expected (n, {N_MUSCLES}), got {a.shape}")
    if np.any(a < 0):
        raise ValueError("activations must be nonnegative")
    sums = a.sum(axis=1)
    degenerate = sums < DEGENERATE_SUM
    out = np.empty_like(a)
    ok = ~degenerate
    out[ok] = a[ok] / sums[ok, None]
    out[degenerate] = 1.0 / N_MUSCLES
    return out, degenerate


class _RunningMean:
    """Causal per-channel mean over a sliding window, for the live path."""

    def __init__(self, window_s: float, fs: float, n_channels: int) -> None:
        self.window = max(1, int(round(window_s * fs)))
        self._tail = np.zeros((0, n_channels))
        self._seen = 0

    def consume(self, x: np.ndarray) -> np.ndarray:
        """Mean at each sample over the trailing window (shorter at stream start)."""
        ext = np.concatenate([self._tail, x], axis=0)
        csum = np.cumsum(ext, axis=0)
        n_tail = len(self._tail)
        idx = n_tail + np.arange(len(x))
        lengths = np.minimum(self._seen + np.arange(len(x)) + 1, self.window)
        start = idx - lengths  # exclusive prefix index
        hi = csum[idx]
        lo = np.where(start[:, None] >= 0, csum[np.maximum(start, 0)], 0.0)
        means = (hi - lo) / lengths[:, None]
        self._seen += len(x)
        self._tail = ext[-self.window:]
        return means


class EmgProcessor:
    """Streaming implementation of the conditioning chain.

    One instance processes one trial's stream.  Mean removal runs in one
    of two modes: ``fixed`` subtracts precomputed per-channel offsets
    (offline processing uses the whole-trial mean), ``running`` subtracts
    a trailing-window mean (the live path).  Division by the calibration
    maxima is skipped when ``calib`` is None, which is the configuration
    the calibration trial itself is processed with.

    ``divide_after_filtering`` moves the division from before the
    band-pass to after the envelope low-pass, for stage-order sensitivity
    checks.  Per-channel scaling commutes with the linear stages and with
    rectification, so the two orders agree to rounding.
    """

    def __init__(self, calib: MaxActivations | None,
                 mean_offsets: np.ndarray | None = None,
                 running_window_s: float | None = None,
                 fs: float = SAMPLE_RATE,
                 frame_rate: float = FRAME_RATE,
                 divide_after_filtering: bool = False) -> None:
        if (mean_offsets is None) == (running_window_s is None):
            raise ValueError("exactly one of mean_offsets/running_window_s "
                             "must be given")
        self.fs = fs
        self.divide_after_filtering = divide_after_filtering
        self.block = int(round(fs / frame_rate))
        if abs(self.block * frame_rate - fs) > 1e-9:
            raise ValueError(f"frame rate {frame_rate} must divide fs {fs}")
        self.calib = calib
        self._offsets = (np.asarray(mean_offsets, dtype=float)
                         if mean_offsets is not None else None)
        self._running = (_RunningMean(running_window_s, fs, N_MUSCLES)
                         if running_window_s is not None else None)
        self._bp = design_bandpass(*BAND_EDGES, fs=fs)
        self._lp = design_lowpass(LOWPASS_CUTOFF, fs=fs)
        self._carry = np.zeros((0, N_MUSCLES))

    def push(self, raw: np.ndarray) -> np.ndarray:
        """Consume raw samples, return activation frames completed by them.

        Args:
            raw: (n_samples, 6) block at the sample rate.

        Returns:
            (n_frames, 6) activation frames (possibly empty); block means
            are clamped at zero since the low-pass can undershoot after
            rectification transients.
        """
        raw = np.asarray(raw, dtype=float)
        if raw.ndim != 2 or raw.shape[1] != N_MUSCLES:
            raise ValueError(f"expected (n, {N_MUSCLES}), got {raw.shape}")
        if self._offsets is not None:
            x = raw - self._offsets
        else:
            x = raw - self._running.consume(raw)
        if self.calib is not None and not self.divide_after_filtering:
            x = x / self.calib.values
        x = self._lp.filter(np.abs(self._bp.filter(x)))
        if self.calib is not None and self.divide_after_filtering:
            x = x / self.calib.values
        buf = np.concatenate([self._carry, x], axis=0)
        n_frames = len(buf) // self.block
        used = n_frames * self.block
        self._carry = buf[used:]
        if n_frames == 0:
            return np.zeros((0, N_MUSCLES))
        frames = buf[:used].reshape(n_frames, self.block, N_MUSCLES).mean(axis=1)
        return np.maximum(frames, 0.0)


def process_activations(raw: np.ndarray, calib: MaxActivations | None,
                        fs: float = SAMPLE_RATE,
                        frame_rate: float = FRAME_RATE) -> np.ndarray:
    """One-shot conditioning of a whole trial into activation frames.

    Offline processing subtracts the whole-trial per-channel mean;
    otherwise identical to the streaming path (it is the streaming path,
    invoked with one chunk).
    """
    raw = np.asarray(raw, dtype=float)
    proc = EmgProcessor(calib, mean_offsets=raw.mean(axis=0), fs=fs,
                        frame_rate=frame_rate)
    return proc.push(raw)


def process(raw: np.ndarray, calib: MaxActivations,
            fs: float = SAMPLE_RATE,
            frame_rate: float = FRAME_RATE) -> tuple[np.ndarray, np.ndarray]:
    """Full offline chain: raw EMG to per-frame effort distributions.

    Returns:
        (distributions, degenerate) as in ``effort_distributions``.
    """
    return effort_distributions(process_activations(raw, calib, fs, frame_rate))


def calibrate_isometric(raw: np.ndarray, fs: float = SAMPLE_RATE,
                        frame_rate: float = FRAME_RATE) -> MaxActivations:
    """Per-channel maximum activation over the isometric calibration trial.

    The chain runs without the division step (the maxima are what that
    step will divide by).  Raises if any channel never rises above zero.
    """
    frames = process_activations(raw, None, fs, frame_rate)
    if len(frames) == 0:
        raise ValueError("calibration trial too short to produce a frame")
    peaks = frames.max(axis=0)
    if not np.all(peaks > 0):
        dead = [MUSCLES[i] for i in np.flatnonzero(peaks <= 0)]
        raise ValueError(f"no activation on channel(s): {', '.join(dead)}")
    return MaxActivations(peaks)
