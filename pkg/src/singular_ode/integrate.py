"""Monitored integration in the original time t and the rescaled time tau.

The stepping is a Dormand-Prince 5(4) embedded pair with step rejection.
Any stage that lands on or beyond the singular set (zeta <= eps_zeta) makes
the step fail and the step size shrink, so the integrator creeps up to S
instead of jumping across it.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.interpolate import PchipInterpolator

from .core import EPS_ZETA, TOL_EQ, SystemSpec, Trajectory
from .errors import InvalidInitialState, NotDiffeomorphism, SingularEvaluation, StepFailure

# Dormand-Prince 5(4)
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
_B = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_B_LOW = np.array([5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40])
_E = _B - _B_LOW
ORDER = 5


@dataclass(frozen=True)
class IntegrationOptions:
    """Settings shared by :func:`integrate_singular` and :func:`integrate_desingularized`.

    ``fixed_step`` switches off error control (used for order studies).
    ``t_eval`` restricts the recorded samples to the given times; steps are
    shortened so that each of them is hit exactly.
    """

    rtol: float = 1e-10
    atol: float = 1e-12
    h0: Optional[float] = None
    h_max: float = np.inf
    h_min_rel: float = 1e-13
    max_steps: int = 2_000_000
    eps_zeta: float = EPS_ZETA
    eps_blowup: float = 1e-8
    blowup_window: float = 1e-6
    tol_eq: float = TOL_EQ
    eq_steps: int = 5
    fixed_step: Optional[float] = None
    t_eval: Optional[Sequence[float]] = None


def _initial_step(rhs, s0, y0, f0, span, rtol, atol):
    scale = atol + rtol * np.abs(y0)
    d0 = np.sqrt(np.mean((y0 / scale) ** 2))
    d1 = np.sqrt(np.mean((f0 / scale) ** 2))
    h = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
    return min(h, abs(span))


def _rk_step(rhs, s, y, f0, h):
    k = [f0]
    for i in range(1, 7):
        yi = y + h * sum(a * kj for a, kj in zip(_A[i], k))
        k.append(rhs(s + _C[i] * h, yi))
    ynew = y + h * sum(b * kj for b, kj in zip(_B, k) if b != 0.0)
    err = h * sum(e * kj for e, kj in zip(_E, k) if e != 0.0)
    return ynew, err, k[-1]


def solve(rhs: Callable, y0, s0: float, s_end: float, opts: IntegrationOptions,
          monitor: Optional[Callable] = None, on_underflow: Optional[Callable] = None):
    """Integrate y' = rhs(s, y) from s0 to s_end.

    ``rhs`` may raise :class:`SingularEvaluation`; the step is then rejected.
    ``monitor(s, y)`` runs after every accepted step and may return a
    termination string to stop early. ``on_underflow(s, y)`` decides what a
    step-size underflow means; it returns a termination string or ``None``
    (meaning: raise :class:`StepFailure`).

    Returns ``(s_samples, y_samples, termination)``.
    """
    y = np.asarray(y0, dtype=float).copy()
    s = float(s0)
    direction = 1.0 if s_end >= s0 else -1.0
    evals = None if opts.t_eval is None else [float(x) for x in opts.t_eval if direction * (x - s0) > 0]
    ss, ys = [s], [y.copy()]
    f = rhs(s, y)
    if opts.fixed_step is not None:
        h = opts.fixed_step
    elif opts.h0 is not None:
        h = opts.h0
    else:
        h = _initial_step(rhs, s, y, f, s_end - s0, opts.rtol, opts.atol)
    h = min(h, opts.h_max)

    ie = 0
    steps = 0
    termination = "horizon_reached"
    while direction * (s_end - s) > 0:
        if steps >= opts.max_steps:
            raise StepFailure(f"maximum number of steps ({opts.max_steps}) exceeded")
        target = s_end if evals is None or ie >= len(evals) else evals[ie]
        h_try = min(h, abs(target - s))
        landing = h_try >= abs(target - s) * (1 - 1e-6)
        if landing:
            h_try = abs(target - s)
        h_min = opts.h_min_rel * max(1.0, abs(s))
        try:
            ynew, err, fnew = _rk_step(rhs, s, y, f, direction * h_try)
            if not np.all(np.isfinite(ynew)):
                raise SingularEvaluation("non-finite stage")
        except SingularEvaluation:
            if opts.fixed_step is not None:
                termination = _underflow(on_underflow, s, y, ss, ys)
                break
            h = h_try * 0.25
            if h < h_min:
                termination = _underflow(on_underflow, s, y, ss, ys)
                break
            continue

        if opts.fixed_step is None:
            scale = opts.atol + opts.rtol * np.maximum(np.abs(y), np.abs(ynew))
            enorm = np.sqrt(np.mean((err / scale) ** 2))
            if enorm > 1.0:
                h = h_try * max(0.2, 0.9 * enorm ** (-1.0 / ORDER))
                if h < h_min:
                    termination = _underflow(on_underflow, s, y, ss, ys)
                    break
                continue
            factor = 5.0 if enorm == 0 else min(5.0, 0.9 * enorm ** (-1.0 / ORDER))
            h = min(h_try * max(factor, 0.2), opts.h_max)
            if landing:
                h = max(h, h_try)
        steps += 1
        s = target if landing else s + direction * h_try
        y, f = ynew, fnew
        if evals is None or (landing and ie < len(evals) and s == evals[ie]):
            ss.append(s)
            ys.append(y.copy())
        if landing and evals is not None and ie < len(evals) and s == evals[ie]:
            ie += 1
        if monitor is not None:
            stop = monitor(s, y)
            if stop is not None:
                if ss[-1] != s:
                    ss.append(s)
                    ys.append(y.copy())
                termination = stop
                break
    return np.array(ss), np.array(ys), termination


def _underflow(on_underflow, s, y, ss, ys):
    reason = None if on_underflow is None else on_underflow(s, y)
    if reason is None:
        raise StepFailure(f"step size underflow at s={s:.17g}", trajectory=(np.array(ss), np.array(ys)))
    if ss[-1] != s:
        ss.append(s)
        ys.append(y.copy())
    return reason


def _trajectory(spec, t, tau, U, termination, eps_zeta):
    zeta = np.array([spec.zeta_at(u) for u in U])
    rhs = np.array([np.linalg.norm(spec.field(u)) / max(abs(z), eps_zeta) for u, z in zip(U, zeta)])
    return Trajectory(t=t, tau=tau, U=U, zeta=zeta, rhs_norm=rhs, termination=termination)


def integrate_singular(spec: SystemSpec, U0, horizon: float,
                       opts: Optional[IntegrationOptions] = None) -> Trajectory:
    """Integrate dU/dt = F/zeta on [0, horizon] with tau co-integrated.

    Stops early with ``singularity_reached`` when zeta falls below the
    singular floor, when |F|/zeta exceeds ``1/eps_blowup``, or when the step
    size underflows while zeta is about to vanish (the linear extrapolation
    zeta / |d zeta/dt| is below ``blowup_window``). Stops with
    ``equilibrium_reached`` once |F|/zeta stays below ``tol_eq`` for
    ``eq_steps`` accepted steps.
    """
    opts = opts or IntegrationOptions()
    U0 = np.asarray(U0, dtype=float)
    z0 = spec.zeta_at(U0)
    if not z0 > opts.eps_zeta:
        raise InvalidInitialState(f"zeta(U0) = {z0:.6g} must be positive")
    d = spec.dim

    def rhs(t, y):
        U = y[:d]
        z = spec.zeta_at(U)
        if z <= opts.eps_zeta:
            raise SingularEvaluation("stage on the singular set")
        out = np.empty(d + 1)
        out[:d] = spec.field(U) / z
        out[d] = 1.0 / z
        return out

    quiet = [0]

    def monitor(t, y):
        U = y[:d]
        z = spec.zeta_at(U)
        speed = np.linalg.norm(spec.field(U)) / max(z, opts.eps_zeta)
        if z <= opts.eps_zeta or speed >= 1.0 / opts.eps_blowup:
            return "singularity_reached"
        quiet[0] = quiet[0] + 1 if speed < opts.tol_eq else 0
        if quiet[0] >= opts.eq_steps:
            return "equilibrium_reached"
        return None

    def on_underflow(t, y):
        U = y[:d]
        z = spec.zeta_at(U)
        dz = spec.transversal_flux(U) / z
        if dz < 0 and z / -dz <= opts.blowup_window * (1.0 + abs(t)):
            return "singularity_reached"
        return None

    try:
        t, Y, term = solve(rhs, np.append(U0, 0.0), 0.0, horizon, opts, monitor, on_underflow)
    except StepFailure as exc:
        if exc.trajectory is not None:
            ts, ys = exc.trajectory
            exc.trajectory = _trajectory(spec, ts, ys[:, d], ys[:, :d], "step_failure", opts.eps_zeta)
        raise
    return _trajectory(spec, t, Y[:, d], Y[:, :d], term, opts.eps_zeta)


def integrate_desingularized(spec: SystemSpec, U0, tau_horizon: float,
                             opts: Optional[IntegrationOptions] = None,
                             t_horizon: Optional[float] = None,
                             stop_on_crossing: bool = True) -> Trajectory:
    """Integrate the regular field dU/dtau = F(U) with t co-integrated (dt/dtau = zeta).

    ``t_eval`` in ``opts`` refers to tau here. With ``stop_on_crossing`` the
    run ends with ``singularity_reached`` at the first accepted step where
    zeta changes sign relative to zeta(U0); that sample is kept, so the
    crossing is visible in the output. ``t_horizon`` stops the run once the
    original time reaches it.
    """
    opts = opts or IntegrationOptions()
    U0 = np.asarray(U0, dtype=float)
    d = spec.dim
    sign0 = np.sign(spec.zeta_at(U0)) or 1.0

    def rhs(s, y):
        out = np.empty(d + 1)
        out[:d] = spec.field(y[:d])
        out[d] = spec.zeta_at(y[:d])
        return out

    quiet = [0]

    def monitor(s, y):
        z = spec.zeta_at(y[:d])
        if stop_on_crossing and sign0 * z <= 0:
            return "singularity_reached"
        if t_horizon is not None and y[d] >= t_horizon:
            return "horizon_reached"
        quiet[0] = quiet[0] + 1 if np.linalg.norm(spec.field(y[:d])) < opts.tol_eq else 0
        if quiet[0] >= opts.eq_steps:
            return "equilibrium_reached"
        return None

    s, Y, term = solve(rhs, np.append(U0, 0.0), 0.0, tau_horizon, opts, monitor)
    return _trajectory(spec, Y[:, d], s, Y[:, :d], term, opts.eps_zeta)


@dataclass(frozen=True)
class TimeRescaling:
    """Sampled increasing bijection between t and tau."""

    t: np.ndarray
    tau: np.ndarray

    def tau_of(self, t):
        return PchipInterpolator(self.t, self.tau)(t)

    def t_of(self, tau):
        return PchipInterpolator(self.tau, self.t)(tau)

    @property
    def is_strictly_increasing(self) -> bool:
        return bool(np.all(np.diff(self.t) > 0) and np.all(np.diff(self.tau) > 0))


def time_rescale(traj: Trajectory) -> TimeRescaling:
    """The change of variables d tau/dt = 1/zeta along ``traj``, tau(t0) = 0."""
    if np.any(traj.zeta <= 0):
        i = int(np.argmax(traj.zeta <= 0))
        raise NotDiffeomorphism(f"zeta = {traj.zeta[i]:.3g} <= 0 at t = {traj.t[i]:.6g}")
    tau = traj.tau - traj.tau[0]
    m = TimeRescaling(t=traj.t.copy(), tau=tau)
    if not m.is_strictly_increasing:
        raise NotDiffeomorphism("sampled t or tau is not strictly increasing")
    return m
