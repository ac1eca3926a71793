"""Compiled inner loops for whole-session simulation.

A 36-minute session is 2.16 million dynamics steps; the per-step loop
lives here in numba-compiled kernels.  ``run_trial_kernel`` is the
closed-loop trial (delayed-PD subject, RK4 deviation dynamics, synergy
envelopes, fatigue accumulation); ``run_scripted_kernel`` drives the
envelope directly for the isometric calibration trial.  Both mirror the
object-level operations in ``dynamics`` and ``musclesim`` step for step;
an equivalence test keeps them honest.

Set ERGOTWIN_DISABLE_JIT=1 to run the kernels as plain Python (slow,
for debugging).
"""

from __future__ import annotations

import math
import os

import numpy as np

if os.environ.get("ERGOTWIN_DISABLE_JIT"):
    def njit(*args, **kwargs):
        if args and callable(args[0]):
            return args[0]

        def wrap(f):
            return f
        return wrap
else:
    from numba import njit


@njit(cache=True)
def run_trial_kernel(n_steps, dt, cx, cy, radius, semi_major, semi_minor,
                     theta, period, inertia, damping, stiffness, kp, kd,
                     delay_steps, noise, syn_w, syn_base, beta, acc):
    """One closed-loop trial at fixed dt.

    ``acc`` (per-muscle accumulated effort) is updated in place so
    fatigue persists across trials.  Returns deviation, deviation rate,
    subject torque, envelope, and fatigue multiplier arrays; deviation
    arrays have one extra leading row for the initial state.
    """
    e = np.zeros((n_steps + 1, 2))
    edot = np.zeros((n_steps + 1, 2))
    tau = np.zeros((n_steps, 2))
    env = np.zeros((n_steps, 6))
    mult = np.zeros((n_steps, 6))
    ct = math.cos(theta)
    st = math.sin(theta)
    w = 2.0 * math.pi / period

    for i in range(n_steps):
        t = i * dt
        phi = w * t
        ex = semi_major * math.cos(phi)
        ey = semi_minor * math.sin(phi)
        gx = cx + ct * ex - st * ey
        gy = cy + st * ex + ct * ey

        j = i - delay_steps
        if j < 0:
            j = 0
        tj = j * dt
        phij = w * tj
        ndx = -radius * w * math.sin(phij)
        ndy = radius * w * math.cos(phij)
        xdx = e[j, 0] + cx + radius * math.cos(phij)
        xdy = e[j, 1] + cy + radius * math.sin(phij)
        vdx = edot[j, 0] + ndx
        vdy = edot[j, 1] + ndy

        tx = kp * (gx - xdx) - kd * vdx + noise[i, 0]
        ty = kp * (gy - xdy) - kd * vdy + noise[i, 1]
        tau[i, 0] = tx
        tau[i, 1] = ty

        c0 = tx if tx > 0.0 else 0.0
        c1 = -tx if tx < 0.0 else 0.0
        c2 = ty if ty > 0.0 else 0.0
        c3 = -ty if ty < 0.0 else 0.0
        for m in range(6):
            drive = (syn_w[m, 0] * c0 + syn_w[m, 1] * c1 +
                     syn_w[m, 2] * c2 + syn_w[m, 3] * c3 + syn_base[m])
            mlt = 1.0 + beta[m] * acc[m]
            mult[i, m] = mlt
            env[i, m] = mlt * drive
            acc[m] = acc[m] + env[i, m] * dt

        for ax in range(2):
            ee = e[i, ax]
            vv = edot[i, ax]
            tq = tau[i, ax]
            k1e = vv
            k1v = (tq - damping * vv - stiffness * ee) / inertia
            e2 = ee + 0.5 * dt * k1e
            v2 = vv + 0.5 * dt * k1v
            k2e = v2
            k2v = (tq - damping * v2 - stiffness * e2) / inertia
            e3 = ee + 0.5 * dt * k2e
            v3 = vv + 0.5 * dt * k2v
            k3e = v3
            k3v = (tq - damping * v3 - stiffness * e3) / inertia
            e4 = ee + dt * k3e
            v4 = vv + dt * k3v
            k4e = v4
            k4v = (tq - damping * v4 - stiffness * e4) / inertia
            e[i + 1, ax] = ee + (dt / 6.0) * (k1e + 2.0 * k2e + 2.0 * k3e + k4e)
            edot[i + 1, ax] = vv + (dt / 6.0) * (k1v + 2.0 * k2v + 2.0 * k3v + k4v)

    return e, edot, tau, env, mult


@njit(cache=True)
def run_scripted_kernel(n_steps, dt, drive, beta, acc):
    """Envelope-scripted trial (isometric calibration): no plant loop.

    ``drive`` is the pre-multiplier activation per step; fatigue still
    accumulates through ``acc`` in place.
    """
    env = np.zeros((n_steps, 6))
    mult = np.zeros((n_steps, 6))
    for i in range(n_steps):
        for m in range(6):
            mlt = 1.0 + beta[m] * acc[m]
            mult[i, m] = mlt
            env[i, m] = mlt * drive[i, m]
            acc[m] = acc[m] + env[i, m] * dt
    return env, mult
