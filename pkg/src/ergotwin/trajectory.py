"""Workspace geometry: neutral circle, target ellipse, tolerance band.

All curves live in the machine's two-axis joint chart (units of rad on
both axes).  The machine's neutral path is a circle traversed at constant
angular rate; the subject's target is an ellipse sharing the same centre,
rotated by the trial's orientation angle and traversed phase-locked with
the neutral path.  The tolerance band the subject is asked to stay inside
is the pair of curves offset from the ellipse along its outward normal.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

Point2 = np.ndarray  # shape (2,), float64


@dataclass(frozen=True)
class TrajectoryConfig:
    """Geometry and timing of one trial's tracking task.

    Angles are degrees in configuration, radians internally.  The neutral
    circle and the target ellipse share ``center``; ``period_s`` is the
    time for one full traversal of either curve.
    """

    center: tuple[float, float] = (0.0, 0.0)
    circle_radius: float = 0.25
    semi_major: float = 0.35
    semi_minor: float = 0.175
    orientation_deg: float = 0.0
    period_s: float = 8.0
    tolerance_halfwidth: float = 0.05

    def __post_init__(self) -> None:
        if self.period_s <= 0:
            raise ValueError(f"period_s must be positive, got {self.period_s}")
        if self.circle_radius <= 0 or self.semi_minor <= 0:
            raise ValueError("circle radius and ellipse semi-axes must be positive")
        if self.semi_major < self.semi_minor:
            raise ValueError("semi_major must be at least semi_minor")
        if self.tolerance_halfwidth < 0:
            raise ValueError("tolerance_halfwidth must be nonnegative")
        if not -90.0 <= self.orientation_deg <= 90.0:
            raise ValueError(
                f"orientation must lie in [-90, 90] deg, got {self.orientation_deg}")

    @property
    def orientation_rad(self) -> float:
        return math.radians(self.orientation_deg)


def _phase(cfg: TrajectoryConfig, t: float) -> float:
    return 2.0 * math.pi * t / cfg.period_s


def _rotation(theta: float) -> np.ndarray:
    c, s = math.cos(theta), math.sin(theta)
    return np.array([[c, -s], [s, c]])


def neutral_point(cfg: TrajectoryConfig, t: float) -> Point2:
    """Point on the neutral circle at time ``t``.

    The circle is traversed counter-clockwise starting from the positive
    x1 axis at t = 0.
    """
    phi = _phase(cfg, t)
    return np.array([
        cfg.center[0] + cfg.circle_radius * math.cos(phi),
        cfg.center[1] + cfg.circle_radius * math.sin(phi),
    ])


def neutral_velocity(cfg: TrajectoryConfig, t: float) -> Point2:
    """Time derivative of the neutral path at time ``t`` (rad/s)."""
    phi = _phase(cfg, t)
    w = 2.0 * math.pi / cfg.period_s
    return np.array([
        -cfg.circle_radius * w * math.sin(phi),
        cfg.circle_radius * w * math.cos(phi),
    ])


def ellipse_point(cfg: TrajectoryConfig, phi: float) -> Point2:
    """Point on the target ellipse at curve parameter ``phi``."""
    local = np.array([cfg.semi_major * math.cos(phi), cfg.semi_minor * math.sin(phi)])
    return np.asarray(cfg.center) + _rotation(cfg.orientation_rad) @ local


def target_point(cfg: TrajectoryConfig, t: float) -> Point2:
    """Point on the target ellipse at time ``t``, phase-locked to the neutral path."""
    return ellipse_point(cfg, _phase(cfg, t))


def target_velocity(cfg: TrajectoryConfig, t: float) -> Point2:
    """Time derivative of the target path at time ``t`` (rad/s)."""
    phi = _phase(cfg, t)
    w = 2.0 * math.pi / cfg.period_s
    local = np.array([
        -cfg.semi_major * w * math.sin(phi),
        cfg.semi_minor * w * math.cos(phi),
    ])
    return _rotation(cfg.orientation_rad) @ local


def ellipse_normal(cfg: TrajectoryConfig, phi: float) -> Point2:
    """Unit outward normal of the target ellipse at parameter ``phi``."""
    # For (a cos, b sin) the outward normal direction is (b cos, a sin).
    n = np.array([cfg.semi_minor * math.cos(phi), cfg.semi_major * math.sin(phi)])
    n /= np.linalg.norm(n)
    return _rotation(cfg.orientation_rad) @ n


def tolerance_curves(
    cfg: TrajectoryConfig,
) -> tuple[Callable[[float], Point2], Callable[[float], Point2]]:
    """Inner and outer tolerance curve samplers, parameterized by ``phi``.

    Each sampler returns the ellipse point offset by the tolerance
    halfwidth along the inward (inner) or outward (outer) ellipse normal.

    Returns:
        (inner, outer) callables mapping phi -> point.
    """
    h = cfg.tolerance_halfwidth

    def inner(phi: float) -> Point2:
        return ellipse_point(cfg, phi) - h * ellipse_normal(cfg, phi)

    def outer(phi: float) -> Point2:
        return ellipse_point(cfg, phi) + h * ellipse_normal(cfg, phi)

    return inner, outer


def sample_curve(fn: Callable[[float], Point2], n: int = 128) -> np.ndarray:
    """Sample a phi-parameterized curve at ``n`` evenly spaced parameters.

    Returns an (n, 2) array; the curve is closed, so the first point is
    not repeated at the end.
    """
    phis = np.linspace(0.0, 2.0 * math.pi, n, endpoint=False)
    return np.array([fn(p) for p in phis])
