"""Plant and subject dynamics for the two-axis impedance-rendering machine.

The machine renders, independently on each axis, the interaction law

    tau = I*e'' + B*e' + K*e

where e = x - x_d is the deviation of the handle from the neutral path.
The simulation integrates the deviation dynamics directly (the neutral
path's own acceleration is treated as feedforward-compensated by the
machine), driven by the torque the simulated subject applies.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .trajectory import TrajectoryConfig, neutral_point, neutral_velocity

TorqueVec = np.ndarray  # shape (2,), N*m per axis


@dataclass(frozen=True)
class ImpedanceParams:
    """Per-axis impedance rendered by the machine (identical on both axes)."""

    inertia: float = 0.035   # kg*m^2/rad
    damping: float = 0.4     # N*m*s/rad
    stiffness: float = 1.0   # N*m/rad

    def __post_init__(self) -> None:
        if self.inertia <= 0:
            raise ValueError(f"inertia must be positive, got {self.inertia}")
        if self.damping < 0 or self.stiffness < 0:
            raise ValueError("damping and stiffness must be nonnegative")


LOW_IMPEDANCE = ImpedanceParams(inertia=0.035, damping=0.4, stiffness=1.0)
HIGH_IMPEDANCE = ImpedanceParams(inertia=0.035, damping=0.4, stiffness=7.0)


@dataclass
class PlantState:
    """Handle state in absolute coordinates at a given time."""

    position: np.ndarray
    velocity: np.ndarray
    time: float = 0.0

    def copy(self) -> "PlantState":
        return PlantState(self.position.copy(), self.velocity.copy(), self.time)


def impedance_torque(p: ImpedanceParams, e: np.ndarray, edot: np.ndarray,
                     eddot: np.ndarray) -> TorqueVec:
    """Interaction torque rendered for a given deviation state, per axis."""
    return p.inertia * eddot + p.damping * edot + p.stiffness * e


def _deviation_accel(p: ImpedanceParams, e: np.ndarray, edot: np.ndarray,
                     tau: TorqueVec) -> np.ndarray:
    return (tau - p.damping * edot - p.stiffness * e) / p.inertia


def step_plant(state: PlantState, subject_tau: TorqueVec, p: ImpedanceParams,
               traj: TrajectoryConfig, dt: float) -> PlantState:
    """Advance the plant one step of classical fourth-order Runge-Kutta.

    The subject torque is held constant over the step.  Integration runs
    in deviation coordinates e = x - x_d against the neutral path, so a
    plant started on the neutral path with zero deviation velocity and
    zero subject torque stays on it exactly.

    Args:
        state: current absolute state.
        subject_tau: torque applied by the subject, held for the step.
        p: impedance rendered by the machine.
        traj: trial geometry (supplies the neutral path).
        dt: step size in seconds.

    Returns:
        The state at ``state.time + dt``.
    """
    if dt <= 0:
        raise ValueError(f"dt must be positive, got {dt}")
    t = state.time
    e = state.position - neutral_point(traj, t)
    edot = state.velocity - neutral_velocity(traj, t)

    def f(ye: np.ndarray, yedot: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        return yedot, _deviation_accel(p, ye, yedot, subject_tau)

    k1e, k1v = f(e, edot)
    k2e, k2v = f(e + 0.5 * dt * k1e, edot + 0.5 * dt * k1v)
    k3e, k3v = f(e + 0.5 * dt * k2e, edot + 0.5 * dt * k2v)
    k4e, k4v = f(e + dt * k3e, edot + dt * k3v)

    e_next = e + (dt / 6.0) * (k1e + 2.0 * k2e + 2.0 * k3e + k4e)
    edot_next = edot + (dt / 6.0) * (k1v + 2.0 * k2v + 2.0 * k3v + k4v)

    t_next = t + dt
    return PlantState(
        position=e_next + neutral_point(traj, t_next),
        velocity=edot_next + neutral_velocity(traj, t_next),
        time=t_next,
    )


@dataclass
class SubjectModel:
    """Delayed proportional-derivative tracking with motor noise.

    The simulated subject pulls toward the current target using its own
    state as perceived ``reaction_delay`` seconds ago, with zero-mean
    Gaussian torque noise on each axis.  The noise stream is drawn from a
    counter-based generator so runs are reproducible for a given seed.
    """

    # Gain defaults leave positive phase margin at the default delay for
    # both stiffness levels; raising kp much beyond 3 destabilizes K=1.
    kp: float = 2.0          # N*m/rad
    kd: float = 0.05         # N*m*s/rad
    reaction_delay: float = 0.15  # s
    noise_std: float = 0.01  # N*m
    rng_seed: int = 0
    _rng: np.random.Generator = field(init=False, repr=False)

    def __post_init__(self) -> None:
        if self.reaction_delay < 0:
            raise ValueError("reaction_delay must be nonnegative")
        self._rng = np.random.Generator(np.random.Philox(self.rng_seed))


class StateHistory:
    """Ring of past plant states for delayed-state lookups."""

    def __init__(self) -> None:
        self._states: list[PlantState] = []

    def push(self, state: PlantState) -> None:
        self._states.append(state.copy())

    def nearest(self, t: float) -> PlantState:
        """Stored state with time closest to ``t`` (earlier wins ties).

        Nearest lookup makes the delay robust to rounding of t - delay
        onto the step grid; states before the first entry resolve to it.
        """
        if not self._states:
            raise ValueError("state history is empty")
        best = self._states[0]
        best_d = abs(best.time - t)
        for s in self._states[1:]:
            d = abs(s.time - t)
            if d < best_d:
                best, best_d = s, d
        return best

    def trim(self, horizon: float) -> None:
        """Drop states older than ``horizon`` seconds before the newest."""
        if not self._states:
            return
        cutoff = self._states[-1].time - horizon
        i = 0
        while i < len(self._states) - 1 and self._states[i + 1].time <= cutoff:
            i += 1
        del self._states[:i]


def subject_command(m: SubjectModel, state: PlantState, target: np.ndarray,
                    history: StateHistory) -> TorqueVec:
    """Torque the subject applies this step.

    tau = kp*(target - x_delayed) - kd*v_delayed + noise, where the
    delayed state is the stored state nearest time - reaction_delay.
    The history must already contain the current state (push before call).
    """
    delayed = history.nearest(state.time - m.reaction_delay)
    noise = m._rng.normal(0.0, m.noise_std, size=2) if m.noise_std > 0 else np.zeros(2)
    return m.kp * (target - delayed.position) - m.kd * delayed.velocity + noise
