"""Feedforward estimator of machine stiffness and ellipse orientation.

A six-input, six-hidden-node, two-output network maps one muscle effort
distribution to (stiffness, orientation).  Hidden nodes are logistic
sigmoids, outputs are linear, and there are no bias terms.  Training is
plain gradient descent on the batch-summed squared error against targets
affinely scaled into [0.1, 0.9].
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .emgproc import MuscleDistribution

N_INPUTS = 6
N_HIDDEN = 6
N_OUTPUTS = 2
SCALED_LO = 0.1
SCALED_HI = 0.9
WEIGHTS_FORMAT = "ergotwin-weights v1"


@dataclass(frozen=True)
class NetworkWeights:
    """Input-to-hidden and hidden-to-output weight matrices."""

    w_in: np.ndarray   # (hidden, inputs)
    w_out: np.ndarray  # (outputs, hidden)

    def __post_init__(self) -> None:
        w_in = np.asarray(self.w_in, dtype=float)
        w_out = np.asarray(self.w_out, dtype=float)
        if w_in.shape != (N_HIDDEN, N_INPUTS):
            raise ValueError(f"w_in must be {(N_HIDDEN, N_INPUTS)}, got {w_in.shape}")
        if w_out.shape != (N_OUTPUTS, N_HIDDEN):
            raise ValueError(f"w_out must be {(N_OUTPUTS, N_HIDDEN)}, "
                             f"got {w_out.shape}")
        object.__setattr__(self, "w_in", w_in)
        object.__setattr__(self, "w_out", w_out)


@dataclass(frozen=True)
class TargetScaler:
    """Per-output affine map between physical labels and [0.1, 0.9].

    Built from the admissible label ranges so every admissible target
    lands inside the sigmoid-friendly band.
    """

    y_min: np.ndarray
    y_max: np.ndarray

    def __post_init__(self) -> None:
        lo = np.asarray(self.y_min, dtype=float)
        hi = np.asarray(self.y_max, dtype=float)
        if lo.shape != (N_OUTPUTS,) or hi.shape != (N_OUTPUTS,):
            raise ValueError("scaler bounds must be per-output 2-vectors")
        if not np.all(hi > lo):
            raise ValueError("each output needs y_max > y_min")
        object.__setattr__(self, "y_min", lo)
        object.__setattr__(self, "y_max", hi)

    @classmethod
    def from_labels(cls, labels: np.ndarray) -> "TargetScaler":
        labels = np.asarray(labels, dtype=float)
        return cls(labels.min(axis=0), labels.max(axis=0))

    @property
    def gain(self) -> np.ndarray:
        return (SCALED_HI - SCALED_LO) / (self.y_max - self.y_min)

    def scale(self, y: np.ndarray) -> np.ndarray:
        return SCALED_LO + (np.asarray(y, dtype=float) - self.y_min) * self.gain

    def unscale(self, s: np.ndarray) -> np.ndarray:
        return self.y_min + (np.asarray(s, dtype=float) - SCALED_LO) / self.gain


@dataclass(frozen=True)
class LabeledSample:
    """One training/evaluation point: a distribution with its trial label."""

    m: MuscleDistribution
    label: tuple[float, float]  # (stiffness N*m/rad, orientation deg)
    t_session: float


@dataclass(frozen=True)
class ForwardTrace:
    """Intermediate values of one forward pass.

    ``y_raw`` lives in the scaled training space; ``y_hat`` is the same
    prediction mapped back to physical units.
    """

    a: np.ndarray
    z: np.ndarray
    y_raw: np.ndarray
    y_hat: np.ndarray


def sigmoid(a: np.ndarray) -> np.ndarray:
    return 1.0 / (1.0 + np.exp(-a))


def forward_raw(w: NetworkWeights, m: np.ndarray) -> np.ndarray:
    """Raw (scaled-space) network outputs for a batch of inputs.

    Args:
        m: one distribution (6,) or a batch (n, 6).

    Returns:
        (2,) or (n, 2) raw outputs; apply ``TargetScaler.unscale`` for
        physical units.
    """
    m = np.asarray(m, dtype=float)
    single = m.ndim == 1
    x = m[None, :] if single else m
    z = sigmoid(x @ w.w_in.T)
    y = z @ w.w_out.T
    return y[0] if single else y


def forward(w: NetworkWeights, s: TargetScaler,
            m: MuscleDistribution | np.ndarray) -> ForwardTrace:
    """Full forward pass for one distribution.

    a = W_in @ M, z = sigmoid(a), y_raw = W_out @ z; no bias terms
    anywhere.  ``y_hat`` unscales y_raw into physical units.
    """
    vec = m.values if isinstance(m, MuscleDistribution) else np.asarray(m, float)
    a = w.w_in @ vec
    z = sigmoid(a)
    y_raw = w.w_out @ z
    return ForwardTrace(a, z, y_raw, s.unscale(y_raw))


def samples_to_arrays(
    samples: list[LabeledSample],
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Stack labeled samples into (inputs, labels, session times) arrays."""
    if not samples:
        raise ValueError("empty sample list")
    x = np.array([s.m.values for s in samples])
    y = np.array([s.label for s in samples], dtype=float)
    t = np.array([s.t_session for s in samples])
    return x, y, t


def loss_and_gradients(
    w: NetworkWeights, x: np.ndarray, t_scaled: np.ndarray,
) -> tuple[float, np.ndarray, np.ndarray]:
    """Batch loss 0.5*sum||y_raw - t||^2 and its gradients w.r.t. both matrices."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    t = np.atleast_2d(np.asarray(t_scaled, dtype=float))
    z = sigmoid(x @ w.w_in.T)
    y = z @ w.w_out.T
    diff = y - t
    loss = 0.5 * float(np.sum(diff * diff))
    g_out = diff.T @ z
    delta_h = (diff @ w.w_out) * z * (1.0 - z)
    g_in = delta_h.T @ x
    return loss, g_in, g_out


def backprop_step(w: NetworkWeights, batch: list[LabeledSample],
                  s: TargetScaler, lr: float) -> tuple[NetworkWeights, float]:
    """One gradient-descent update over a batch of labeled samples.

    The loss is taken between raw outputs and scaled targets; the update
    subtracts lr times the batch-summed gradient.

    Returns:
        (updated weights, mean per-sample loss before the update).
    """
    if lr < 0:
        raise ValueError("lr must be nonnegative")
    x, y, _ = samples_to_arrays(batch)
    loss, g_in, g_out = loss_and_gradients(w, x, s.scale(y))
    if not np.isfinite(loss):
        raise FloatingPointError(f"non-finite training loss: {loss}")
    w_new = NetworkWeights(w.w_in - lr * g_in, w.w_out - lr * g_out)
    return w_new, loss / len(batch)


@dataclass(frozen=True)
class TrainConfig:
    lr: float = 0.05
    epochs: int = 500
    batch_size: int = 16
    seed: int = 0

    def __post_init__(self) -> None:
        if self.lr <= 0 or self.epochs < 0 or self.batch_size < 1:
            raise ValueError("lr must be positive, epochs >= 0, batch_size >= 1")


def init_weights(rng: np.random.Generator) -> NetworkWeights:
    """Uniform [-0.5, 0.5] initialization of both matrices."""
    return NetworkWeights(
        rng.uniform(-0.5, 0.5, size=(N_HIDDEN, N_INPUTS)),
        rng.uniform(-0.5, 0.5, size=(N_OUTPUTS, N_HIDDEN)),
    )


def train_arrays(x: np.ndarray, y_physical: np.ndarray, scaler: TargetScaler,
                 cfg: TrainConfig) -> tuple[NetworkWeights, list[float]]:
    """Array-form training loop behind ``train``.

    Samples are shuffled every epoch and consumed in minibatches (the
    trailing partial batch included).  Deterministic for a given config.

    Returns:
        (weights, per-epoch mean losses).
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y_physical, dtype=float)
    if len(x) != len(y) or len(x) == 0:
        raise ValueError("need equally many inputs and labels, at least one")
    t = scaler.scale(y)
    rng = np.random.default_rng(cfg.seed)
    w = init_weights(rng)
    n = len(x)
    curve: list[float] = []
    for _ in range(cfg.epochs):
        order = rng.permutation(n)
        total = 0.0
        for start in range(0, n, cfg.batch_size):
            idx = order[start:start + cfg.batch_size]
            loss, g_in, g_out = loss_and_gradients(w, x[idx], t[idx])
            if not np.isfinite(loss):
                raise FloatingPointError(f"non-finite training loss: {loss}")
            w = NetworkWeights(w.w_in - cfg.lr * g_in, w.w_out - cfg.lr * g_out)
            total += loss
        curve.append(total / n)
    return w, curve


def train(dataset: list[LabeledSample], scaler: TargetScaler,
          cfg: TrainConfig) -> tuple[NetworkWeights, list[float]]:
    """Train on labeled samples; see ``train_arrays`` for the contract."""
    x, y, _ = samples_to_arrays(dataset)
    return train_arrays(x, y, scaler, cfg)


@dataclass(frozen=True)
class RmsReport:
    """Per-output RMS error over time-ordered test sections.

    ``sections`` maps "first"/"second"/"third"/"whole" to (k_rms,
    theta_rms) in physical units; the three part sections are absent when
    the test set has fewer than three samples.  ``counts`` holds the
    number of samples behind each entry.
    """

    sections: dict[str, tuple[float, float]]
    counts: dict[str, int] = field(default_factory=dict)

    SECTION_ORDER = ("first", "second", "third", "whole")


def evaluate_rms_arrays(w: NetworkWeights, scaler: TargetScaler, x: np.ndarray,
                        y_physical: np.ndarray,
                        t_session: np.ndarray) -> RmsReport:
    """RMS per output over thirds of the test set ordered by session time.

    The sorted test set splits into three contiguous sections of equal
    size (remainder to the last) plus the whole set; errors are measured
    in physical units.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y_physical, dtype=float)
    ts = np.asarray(t_session, dtype=float)
    if not (len(x) == len(y) == len(ts)) or len(x) == 0:
        raise ValueError("inputs, labels and times must align, at least one")
    order = np.argsort(ts, kind="stable")
    pred = scaler.unscale(forward_raw(w, x[order]))
    err = pred - y[order]

    def rms(seg: np.ndarray) -> tuple[float, float]:
        r = np.sqrt(np.mean(seg * seg, axis=0))
        return float(r[0]), float(r[1])

    n = len(err)
    sections = {"whole": rms(err)}
    counts = {"whole": n}
    if n >= 3:
        size = n // 3
        bounds = [(0, size), (size, 2 * size), (2 * size, n)]
        for name, (a, b) in zip(("first", "second", "third"), bounds):
            sections[name] = rms(err[a:b])
            counts[name] = b - a
    return RmsReport(sections, counts)


def evaluate_rms(w: NetworkWeights, s: TargetScaler,
                 test: list[LabeledSample]) -> RmsReport:
    """Sectioned RMS report over labeled test samples."""
    x, y, ts = samples_to_arrays(test)
    return evaluate_rms_arrays(w, s, x, y, ts)


def save_weights(path: str, w: NetworkWeights, scaler: TargetScaler,
                 seed: int) -> None:
    """Write weights as versioned plain text, full double precision."""
    lines = [
        WEIGHTS_FORMAT,
        f"shape in {N_INPUTS} hidden {N_HIDDEN} out {N_OUTPUTS}",
        f"seed {seed}",
        "scaler " + " ".join(
            f"{v:.17g}" for v in np.concatenate([scaler.y_min, scaler.y_max])),
        "w_in",
        *(" ".join(f"{v:.17g}" for v in row) for row in w.w_in),
        "w_out",
        *(" ".join(f"{v:.17g}" for v in row) for row in w.w_out),
    ]
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def load_weights(path: str) -> tuple[NetworkWeights, TargetScaler, int]:
    """Read a weights file written by ``save_weights``.

    Raises ValueError on unknown format versions or shape mismatches.
    """
    with open(path) as fh:
        lines = [ln.rstrip("\n") for ln in fh]
    if not lines or lines[0] != WEIGHTS_FORMAT:
        head = lines[0] if lines else "<empty>"
        raise ValueError(f"unrecognized weights format: {head!r}")
    shape = lines[1].split()
    if shape != ["shape", "in", str(N_INPUTS), "hidden", str(N_HIDDEN),
                 "out", str(N_OUTPUTS)]:
        raise ValueError(f"unsupported network shape: {lines[1]!r}")
    seed = int(lines[2].split()[1])
    sc = np.array([float(v) for v in lines[3].split()[1:]])
    scaler = TargetScaler(sc[:2], sc[2:])
    if lines[4] != "w_in":
        raise ValueError("missing w_in block")
    w_in = np.array([[float(v) for v in lines[5 + i].split()]
                     for i in range(N_HIDDEN)])
    if lines[5 + N_HIDDEN] != "w_out":
        raise ValueError("missing w_out block")
    w_out = np.array([[float(v) for v in lines[6 + N_HIDDEN + i].split()]
                      for i in range(N_OUTPUTS)])
    return NetworkWeights(w_in, w_out), scaler, seed
