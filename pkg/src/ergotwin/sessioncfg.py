"""Session configuration: an INI-style document mapped onto model objects.

Sections: [trajectory], [impedance_overrides], [subject], [synergy],
[fatigue], [split], [train], plus [protocol] for trial timing.  Every key
has a default, so an empty or absent file is a valid full configuration.
Unknown sections or keys are rejected, with the offending name in the
error message.
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, field, fields

import numpy as np

from .dynamics import ImpedanceParams, SubjectModel
from .musclesim import (DEFAULT_BASELINE, DEFAULT_FATIGUE_BETA,
                        DEFAULT_NOISE_FLOOR, DEFAULT_SYNERGY, FatigueState,
                        SynergyMatrix)
from .emgproc import MUSCLES, N_MUSCLES


class ConfigError(Exception):
    """Malformed session configuration (bad file, key, or value)."""


@dataclass(frozen=True)
class SplitPolicy:
    """How a recording becomes train/test sets.

    ``per-trial-temporal`` takes the first fraction of each trial's
    frames for training; ``session-temporal`` takes the first fraction of
    the whole session's frames.  ``per_trial_average`` collapses each
    trial's side into a single averaged sample.
    """

    mode: str = "per-trial-temporal"
    fraction: float = 0.5
    per_trial_average: bool = False

    def __post_init__(self) -> None:
        if self.mode not in ("per-trial-temporal", "session-temporal"):
            raise ConfigError(f"unknown split mode: {self.mode!r}")
        if not 0.0 < self.fraction < 1.0:
            raise ConfigError(f"split fraction must be in (0,1), "
                              f"got {self.fraction}")


@dataclass(frozen=True)
class SessionConfig:
    """Everything a session run needs besides the protocol and the seed."""

    # [trajectory]
    center: tuple[float, float] = (0.0, 0.0)
    circle_radius: float = 0.25
    semi_major: float = 0.35
    semi_minor: float = 0.175
    tolerance_halfwidth: float = 0.05
    # [impedance_overrides]
    inertia: float = 0.035
    damping: float = 0.4
    stiffness_low: float = 1.0
    stiffness_high: float = 7.0
    # [subject]
    kp: float = 2.0
    kd: float = 0.05
    reaction_delay: float = 0.15
    noise_std: float = 0.01
    # [synergy]
    synergy: np.ndarray = field(default_factory=lambda: DEFAULT_SYNERGY.copy())
    baseline: np.ndarray = field(default_factory=lambda: DEFAULT_BASELINE.copy())
    iso_level: float = 1.0
    emg_noise_floor: float = DEFAULT_NOISE_FLOOR
    # [fatigue]
    fatigue_beta: np.ndarray = field(
        default_factory=lambda: DEFAULT_FATIGUE_BETA.copy())
    # [protocol]
    duration_s: float = 60.0
    rest_s: float = 60.0
    frame_rate: float = 10.0
    # [split]
    split: SplitPolicy = field(default_factory=SplitPolicy)
    # [train]
    lr: float = 0.05
    epochs: int = 500
    batch_size: int = 16

    def impedance(self, level: str) -> ImpedanceParams:
        if level == "low":
            return ImpedanceParams(self.inertia, self.damping, self.stiffness_low)
        if level == "high":
            return ImpedanceParams(self.inertia, self.damping, self.stiffness_high)
        raise ConfigError(f"unknown impedance level: {level!r}")

    def synergy_matrix(self) -> SynergyMatrix:
        return SynergyMatrix(self.synergy, self.baseline)

    def fatigue_state(self) -> FatigueState:
        return FatigueState(self.fatigue_beta)

    def subject_model(self, seed: int) -> SubjectModel:
        return SubjectModel(self.kp, self.kd, self.reaction_delay,
                            self.noise_std, rng_seed=seed)

    def without_fatigue(self) -> "SessionConfig":
        from dataclasses import replace
        return replace(self, fatigue_beta=np.zeros(N_MUSCLES))


def _floats(raw: str, n: int | None = None) -> np.ndarray:
    vals = np.array([float(v) for v in raw.replace(",", " ").split()])
    if n is not None and len(vals) == 1:
        vals = np.full(n, vals[0])
    if n is not None and len(vals) != n:
        raise ConfigError(f"expected {n} values, got {len(vals)}: {raw!r}")
    return vals


def _bool(raw: str) -> bool:
    low = raw.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"expected a boolean, got {raw!r}")


def load_config(path: str | None) -> SessionConfig:
    """Parse a session config file; None means all defaults.

    Raises ConfigError naming the missing file, unknown section/key, or
    unparsable value (parse errors keep configparser's line diagnostics).
    """
    if path is None:
        return SessionConfig()
    parser = configparser.ConfigParser()
    try:
        with open(path) as fh:
            parser.read_file(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except configparser.Error as exc:
        raise ConfigError(f"config parse error in {path}: {exc}") from None
    return config_from_parser(parser, path)


def config_from_parser(parser: configparser.ConfigParser,
                       path: str) -> SessionConfig:
    out: dict[str, object] = {}
    split_kw: dict[str, object] = {}
    known = {
        "trajectory": {"center", "circle_radius", "semi_major", "semi_minor",
                       "tolerance_halfwidth"},
        "impedance_overrides": {"inertia", "damping", "stiffness_low",
                                "stiffness_high"},
        "subject": {"kp", "kd", "reaction_delay", "noise_std"},
        "synergy": set(MUSCLES) | {"baseline", "iso_level", "emg_noise_floor"},
        "fatigue": {"beta"},
        "protocol": {"duration_s", "rest_s", "frame_rate"},
        "split": {"mode", "fraction", "per_trial_average"},
        "train": {"lr", "epochs", "batch_size"},
    }
    synergy_rows: dict[str, np.ndarray] = {}
    try:
        for section in parser.sections():
            if section not in known:
                raise ConfigError(f"{path}: unknown section [{section}]")
            for key, raw in parser.items(section):
                if key not in known[section]:
                    raise ConfigError(
                        f"{path}: unknown key {key!r} in [{section}]")
                if section == "trajectory" and key == "center":
                    out["center"] = tuple(_floats(raw, 2))
                elif section == "synergy" and key in MUSCLES:
                    synergy_rows[key] = _floats(raw, 4)
                elif section == "synergy" and key == "baseline":
                    out["baseline"] = _floats(raw, N_MUSCLES)
                elif section == "fatigue" and key == "beta":
                    out["fatigue_beta"] = _floats(raw, N_MUSCLES)
                elif section == "split" and key == "mode":
                    split_kw["mode"] = raw.strip()
                elif section == "split" and key == "fraction":
                    split_kw["fraction"] = float(raw)
                elif section == "split" and key == "per_trial_average":
                    split_kw["per_trial_average"] = _bool(raw)
                elif key in ("epochs", "batch_size"):
                    out[key] = int(raw)
                else:
                    out[key] = float(raw)
    except ValueError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    if synergy_rows:
        matrix = DEFAULT_SYNERGY.copy()
        for name, row in synergy_rows.items():
            matrix[MUSCLES.index(name)] = row
        out["synergy"] = matrix
    if split_kw:
        out["split"] = SplitPolicy(**split_kw)
    try:
        return SessionConfig(**out)
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"{path}: {exc}") from None


def config_field_names() -> set[str]:
    return {f.name for f in fields(SessionConfig)}
