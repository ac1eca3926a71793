"""The trial protocol and the session loop that executes it.

A session is 18 trials: an isometric calibration trial, the full 2x2x4
factorial of impedance level, speed level, and ellipse orientation, and
a final unseen-speed trial.  Trials run for 60 s followed by a 60 s rest
that advances the clock, records nothing, and freezes fatigue.

``run_session`` executes the whole chain per trial: trajectory ->
subject command -> impedance plant -> muscle envelopes -> synthetic EMG
-> conditioning -> effort distributions, and assembles the frame table.
The inner loops run through the compiled kernels in ``fastsim``; the
object-level single-step functions in ``dynamics`` define the reference
semantics and the two are held together by equivalence tests.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import fastsim
from .dynamics import ImpedanceParams
from .emgproc import (MaxActivations, N_MUSCLES, calibrate_isometric,
                      effort_distributions, process_activations)
from .estimator import LabeledSample
from .musclesim import EmgSynthesizer
from .recording import SessionRecording
from .sessioncfg import SessionConfig, SplitPolicy
from .trajectory import TrajectoryConfig, neutral_point, target_point

PLANT_RATE = 1000.0
EMG_PER_STEP = 2          # EMG samples per plant step (2 kHz over 1 kHz)

SPEED_PERIODS = {"low": 8.0, "high": 4.0, "super_high": 2.0}
ORIENTATIONS_DEG = (90.0, 45.0, 0.0, -45.0)
FACTORIAL_BLOCKS = (("low", "low"), ("high", "low"),
                    ("high", "high"), ("low", "high"))


@dataclass(frozen=True)
class TrialConfig:
    """One protocol entry.  Levels are names; numbers resolve via config."""

    index: int
    impedance_level: str
    speed_level: str
    orientation_deg: float
    duration_s: float = 60.0
    rest_s: float = 60.0
    is_isometric: bool = False

    def __post_init__(self) -> None:
        if self.impedance_level not in ("low", "high"):
            raise ValueError(f"bad impedance level {self.impedance_level!r}")
        if self.speed_level not in SPEED_PERIODS:
            raise ValueError(f"bad speed level {self.speed_level!r}")
        if self.duration_s <= 0 or self.rest_s < 0:
            raise ValueError("trial durations must be positive")

    @property
    def period_s(self) -> float:
        return SPEED_PERIODS[self.speed_level]


def trial_start(trial: TrialConfig) -> float:
    """Session time at which the trial begins."""
    return trial.index * (trial.duration_s + trial.rest_s)


def build_protocol(duration_s: float = 60.0,
                   rest_s: float = 60.0) -> tuple[TrialConfig, ...]:
    """The 18-trial session: calibration, 2x2x4 factorial, unseen speed.

    Trials 1-4 are low impedance at low speed over orientations 90, 45,
    0, -45 deg; 5-8 high impedance at low speed; 9-12 high impedance at
    high speed; 13-16 low impedance at high speed; 17 is low impedance
    at the super-high speed, 0 deg.
    """
    rows = [TrialConfig(0, "low", "low", 0.0, duration_s, rest_s,
                        is_isometric=True)]
    idx = 1
    for imp, speed in FACTORIAL_BLOCKS:
        for theta in ORIENTATIONS_DEG:
            rows.append(TrialConfig(idx, imp, speed, theta,
                                    duration_s, rest_s))
            idx += 1
    rows.append(TrialConfig(17, "low", "super_high", 0.0,
                            duration_s, rest_s))
    return tuple(rows)


def build_repetition_protocol(repetitions: int = 3,
                              duration_s: float = 60.0,
                              rest_s: float = 60.0) -> tuple[TrialConfig, ...]:
    """Calibration plus repeated stiffness-by-orientation factorials.

    All tracking trials run at low speed, and every repetition presents
    the eight (stiffness, orientation) combinations in the same order.
    With the default split fraction the contiguous thirds of the test
    set then line up with repetitions, so each third covers an identical
    task mix and differs only in how much effort has accumulated.  Used
    by the longitudinal accuracy sweep.
    """
    if repetitions < 1:
        raise ValueError("need at least one repetition")
    rows = [TrialConfig(0, "low", "low", 0.0, duration_s, rest_s,
                        is_isometric=True)]
    idx = 1
    for _ in range(repetitions):
        for imp in ("low", "high"):
            for theta in ORIENTATIONS_DEG:
                rows.append(TrialConfig(idx, imp, "low", theta,
                                        duration_s, rest_s))
                idx += 1
    return tuple(rows)


def trial_trajectory(trial: TrialConfig,
                     cfg: SessionConfig) -> TrajectoryConfig:
    return TrajectoryConfig(
        center=cfg.center,
        circle_radius=cfg.circle_radius,
        semi_major=cfg.semi_major,
        semi_minor=cfg.semi_minor,
        orientation_deg=trial.orientation_deg,
        period_s=trial.period_s,
        tolerance_halfwidth=cfg.tolerance_halfwidth,
    )


def trial_impedance(trial: TrialConfig, cfg: SessionConfig) -> ImpedanceParams:
    return cfg.impedance(trial.impedance_level)


def isometric_drive(n_steps: int, duration_s: float, baseline: np.ndarray,
                    iso_level: float) -> np.ndarray:
    """Scripted activation for the calibration trial.

    Sequential per-muscle maximal bursts, back to back from t=0, each
    5 s long (shorter if the trial cannot fit six of them), quiet
    baseline afterwards.
    """
    drive = np.tile(baseline, (n_steps, 1))
    burst_s = min(5.0, duration_s / N_MUSCLES)
    burst_steps = int(round(burst_s * n_steps / duration_s))
    if burst_steps == 0:
        raise ValueError("calibration trial too short for muscle bursts")
    for m in range(N_MUSCLES):
        lo = m * burst_steps
        hi = min((m + 1) * burst_steps, n_steps)
        drive[lo:hi, m] += iso_level
    return drive


def _half_step_interp(env: np.ndarray) -> np.ndarray:
    """Envelope at the plant rate resampled to the EMG rate.

    Even samples copy the step value, odd samples take the midpoint to
    the next step; the final half-step holds the last value.
    """
    n = len(env)
    out = np.empty((EMG_PER_STEP * n, env.shape[1]))
    out[0::2] = env
    out[1:-1:2] = 0.5 * (env[:-1] + env[1:])
    out[-1] = env[-1]
    return out


def _run_one_trial(trial: TrialConfig, cfg: SessionConfig,
                   subject_ss: np.random.SeedSequence,
                   acc: np.ndarray) -> dict[str, np.ndarray]:
    """Simulate one trial's physics and envelopes (no EMG yet).

    ``acc`` is the cross-trial fatigue accumulator, advanced in place.
    """
    n_steps = int(round(trial.duration_s * PLANT_RATE))
    dt = 1.0 / PLANT_RATE
    syn = cfg.synergy_matrix()
    if trial.is_isometric:
        drive = isometric_drive(n_steps, trial.duration_s, syn.baseline,
                                cfg.iso_level)
        env, mult = fastsim.run_scripted_kernel(n_steps, dt, drive,
                                                cfg.fatigue_beta, acc)
        return {"env": env, "mult": mult}
    traj = trial_trajectory(trial, cfg)
    imp = trial_impedance(trial, cfg)
    rng = np.random.Generator(np.random.Philox(subject_ss))
    noise = rng.normal(0.0, cfg.noise_std, (n_steps, 2))
    delay_steps = int(round(cfg.reaction_delay * PLANT_RATE))
    e, edot, tau, env, mult = fastsim.run_trial_kernel(
        n_steps, dt, traj.center[0], traj.center[1], traj.circle_radius,
        traj.semi_major, traj.semi_minor, traj.orientation_rad,
        traj.period_s, imp.inertia, imp.damping, imp.stiffness,
        cfg.kp, cfg.kd, delay_steps, noise,
        syn.weights, syn.baseline, cfg.fatigue_beta, acc)
    if not np.isfinite(e).all():
        raise FloatingPointError(
            f"trial {trial.index}: plant state diverged")
    return {"e": e, "edot": edot, "tau": tau, "env": env, "mult": mult}


def run_session(seed: int, cfg: SessionConfig | None = None,
                protocol: tuple[TrialConfig, ...] | None = None,
                ) -> SessionRecording:
    """Execute a full protocol and return the assembled recording.

    Deterministic per seed: the subject-noise and EMG-noise streams are
    derived from it and restart identically at every trial, so trials
    sharing a condition are sample-for-sample identical.  Fatigue is the
    only state carried across trials.
    """
    cfg = cfg if cfg is not None else SessionConfig()
    if protocol is None:
        protocol = build_protocol(cfg.duration_s, cfg.rest_s)
    subject_ss, emg_ss = np.random.SeedSequence(seed).spawn(2)

    steps_per_frame = int(round(PLANT_RATE / cfg.frame_rate))
    if abs(steps_per_frame * cfg.frame_rate - PLANT_RATE) > 1e-9:
        raise ValueError(f"frame rate {cfg.frame_rate} must divide "
                         f"{PLANT_RATE}")
    block = EMG_PER_STEP * steps_per_frame

    acc = np.zeros(N_MUSCLES)
    calib: MaxActivations | None = None
    emg_chunks: list[np.ndarray] = []
    emg_offset = 0
    rows: dict[str, list[np.ndarray]] = {k: [] for k in (
        "t", "trial", "neutral", "target", "actual", "deviation",
        "subject_tau", "impedance_tau", "emg_sample0", "activations",
        "distribution", "degenerate", "fatigue", "label_k", "label_theta")}

    for trial in protocol:
        if not trial.is_isometric and calib is None:
            raise ValueError(
                f"trial {trial.index}: closed-loop trial requires an "
                f"isometric calibration trial earlier in the protocol")
        out = _run_one_trial(trial, cfg, subject_ss, acc)
        env2k = _half_step_interp(out["env"])
        synth = EmgSynthesizer(emg_ss, noise_floor=cfg.emg_noise_floor)
        emg = synth.synth_emg(env2k, len(env2k)).astype(np.float32)
        emg64 = emg.astype(np.float64)
        if trial.is_isometric:
            try:
                calib = calibrate_isometric(emg64)
            except ValueError as exc:
                raise ValueError(f"trial {trial.index}: {exc}") from exc
        acts = process_activations(emg64, calib)
        dists, degenerate = effort_distributions(acts)

        n_frames = len(acts)
        start = trial_start(trial)
        t_rel = (np.arange(n_frames) + 1) / cfg.frame_rate
        idx_state = ((np.arange(n_frames) + 1) * steps_per_frame)
        idx_step = idx_state - 1

        rows["t"].append(start + t_rel)
        rows["trial"].append(np.full(n_frames, trial.index, dtype=np.int64))
        rows["emg_sample0"].append(
            emg_offset + np.arange(n_frames, dtype=np.int64) * block)
        rows["activations"].append(acts)
        rows["distribution"].append(dists)
        rows["degenerate"].append(degenerate)
        rows["fatigue"].append(out["mult"][idx_step])
        if trial.is_isometric:
            nanpt = np.full((n_frames, 2), np.nan)
            for key in ("neutral", "target", "actual", "deviation",
                        "subject_tau", "impedance_tau"):
                rows[key].append(nanpt)
            rows["label_k"].append(np.full(n_frames, np.nan))
            rows["label_theta"].append(np.full(n_frames, np.nan))
        else:
            traj = trial_trajectory(trial, cfg)
            imp = trial_impedance(trial, cfg)
            neutral = np.array([neutral_point(traj, t) for t in t_rel])
            target = np.array([target_point(traj, t) for t in t_rel])
            dev = out["e"][idx_state]
            tau = out["tau"][idx_step]
            rows["neutral"].append(neutral)
            rows["target"].append(target)
            rows["actual"].append(neutral + dev)
            rows["deviation"].append(dev)
            rows["subject_tau"].append(tau)
            rows["impedance_tau"].append(tau.copy())
            # Super-high-speed trials are demonstrations, not supervised
            # data; a blank label keeps them out of train/test splits.
            if trial.speed_level == "super_high":
                rows["label_k"].append(np.full(n_frames, np.nan))
                rows["label_theta"].append(np.full(n_frames, np.nan))
            else:
                rows["label_k"].append(np.full(n_frames, imp.stiffness))
                rows["label_theta"].append(
                    np.full(n_frames, trial.orientation_deg))
        emg_chunks.append(emg)
        emg_offset += len(emg)

    return SessionRecording(
        t=np.concatenate(rows["t"]),
        trial=np.concatenate(rows["trial"]),
        neutral=np.concatenate(rows["neutral"]),
        target=np.concatenate(rows["target"]),
        actual=np.concatenate(rows["actual"]),
        deviation=np.concatenate(rows["deviation"]),
        subject_tau=np.concatenate(rows["subject_tau"]),
        impedance_tau=np.concatenate(rows["impedance_tau"]),
        emg_sample0=np.concatenate(rows["emg_sample0"]),
        activations=np.concatenate(rows["activations"]),
        distribution=np.concatenate(rows["distribution"]),
        degenerate=np.concatenate(rows["degenerate"]),
        fatigue=np.concatenate(rows["fatigue"]),
        label_k=np.concatenate(rows["label_k"]),
        label_theta=np.concatenate(rows["label_theta"]),
        emg=np.concatenate(emg_chunks),
        emg_rate=EMG_PER_STEP * PLANT_RATE,
    )


# In the default protocol the calibration trial (0) and the unseen-speed
# demonstration (17) carry blank labels, so splits never include them.
EXCLUDED_TRIALS = (0, 17)


def _samples_from_rows(rec: SessionRecording,
                       idx: np.ndarray) -> list[LabeledSample]:
    from .emgproc import MuscleDistribution
    return [LabeledSample(
        m=MuscleDistribution(rec.distribution[i], bool(rec.degenerate[i])),
        label=(float(rec.label_k[i]), float(rec.label_theta[i])),
        t_session=float(rec.t[i]))
        for i in idx]


def _average_per_trial(rec: SessionRecording,
                       idx: np.ndarray) -> list[LabeledSample]:
    from .emgproc import MuscleDistribution
    out = []
    for tr in np.unique(rec.trial[idx]):
        sel = idx[rec.trial[idx] == tr]
        values = rec.distribution[sel].mean(axis=0)
        out.append(LabeledSample(
            m=MuscleDistribution(values, bool(rec.degenerate[sel].any())),
            label=(float(rec.label_k[sel[0]]),
                   float(rec.label_theta[sel[0]])),
            t_session=float(rec.t[sel].mean())))
    out.sort(key=lambda s: s.t_session)
    return out


def split_dataset(rec: SessionRecording, policy: SplitPolicy | None = None,
                  ) -> tuple[list[LabeledSample], list[LabeledSample]]:
    """Train/test samples from a recording, per the split policy.

    Frames without labels (the calibration trial and any super-high-speed
    demonstration, trials 0 and 17 in the default protocol) are never
    included on either side.  Within the per-trial-temporal mode the
    first fraction of each trial's frames trains, the rest tests; the
    session-temporal mode cuts the whole frame sequence once.  Both
    sides come out ordered by session time.
    """
    policy = policy if policy is not None else SplitPolicy()
    keep = np.isfinite(rec.label_k) & np.isfinite(rec.label_theta)
    idx = np.flatnonzero(keep)
    if len(idx) == 0:
        raise ValueError("recording has no usable labeled frames")
    idx = idx[np.argsort(rec.t[idx], kind="stable")]

    train_idx: list[np.ndarray] = []
    test_idx: list[np.ndarray] = []
    if policy.mode == "per-trial-temporal":
        for tr in np.unique(rec.trial[idx]):
            sel = idx[rec.trial[idx] == tr]
            k = int(len(sel) * policy.fraction)
            train_idx.append(sel[:k])
            test_idx.append(sel[k:])
    else:
        k = int(len(idx) * policy.fraction)
        train_idx.append(idx[:k])
        test_idx.append(idx[k:])
    train = np.concatenate(train_idx)
    test = np.concatenate(test_idx)
    if len(train) == 0 or len(test) == 0:
        raise ValueError(f"split fraction {policy.fraction} left an "
                         f"empty side")
    train = train[np.argsort(rec.t[train], kind="stable")]
    test = test[np.argsort(rec.t[test], kind="stable")]
    if policy.per_trial_average:
        return (_average_per_trial(rec, train), _average_per_trial(rec, test))
    return (_samples_from_rows(rec, train), _samples_from_rows(rec, test))
