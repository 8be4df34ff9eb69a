"""Time integration of the canonical peakon system.

``Q_i' = uhat_i`` and ``P_i' = (K_{i-1} - K_i) / r`` where ``K_j`` is the
constant of the interval ``(Q_j, Q_{j+1})`` (zero on the tails).  Every
evaluation of the vector field solves the profile, warm-started from the
previous one.
"""

from __future__ import annotations

import csv
import json
import logging
import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence

import numpy as np

from .core import (
    Diagnostics,
    DomainError,
    OrderingViolation,
    PeakonState,
    RCHError,
    check_exponent,
    min_gap,
)
from .profile import (
    NewtonDiverged,
    Profile,
    ProfileSolveSettings,
    energy,
    solve_profile,
)
from .quadrature import QuadratureError

logger = logging.getLogger(__name__)

REACHED_END = "reached_end"
COLLISION = "collision_detected"
SOLVER_FAILURE = "solver_failure"

_STAGE_ERRORS = (QuadratureError, NewtonDiverged, OrderingViolation,
                 DomainError, FloatingPointError, ZeroDivisionError,
                 OverflowError)


class SolverFailure(RCHError):
    """The integrator could not advance past time ``t``."""

    def __init__(self, t: float, message: str):
        super().__init__(f"solver failure at t={t:.6g}: {message}")
        self.t = t


@dataclass(frozen=True)
class IntegratorSettings:
    """Time-stepping controls.

    ``scheme`` is ``"rk4"`` (fixed step ``dt``) or ``"rk45"`` (Dormand-Prince
    with tolerances ``rtol``/``atol``).  ``output_times``, when given,
    replaces the stride-based output and forces steps to land on them.
    """

    scheme: str = "rk45"
    t_end: float = 10.0
    dt: float = 1e-2
    rtol: float = 1e-8
    atol: float = 1e-10
    min_gap_stop: float = 1e-3
    output_stride: int = 1
    dt_min: float = 1e-9
    output_times: Optional[tuple] = None
    profile: ProfileSolveSettings = ProfileSolveSettings()

    def __post_init__(self):
        if self.scheme not in ("rk4", "rk45"):
            raise ValueError(f"unknown scheme {self.scheme!r}")
        if self.scheme == "rk4" and not self.dt > 0:
            raise ValueError("dt must be positive")
        if self.scheme == "rk45" and not (self.rtol > 0 and self.atol > 0):
            raise ValueError("tolerances must be positive")
        if not self.t_end > 0:
            raise ValueError("t_end must be positive")
        if self.output_stride < 1:
            raise ValueError("output_stride must be >= 1")
        if self.output_times is not None:
            object.__setattr__(self, "output_times",
                               tuple(float(t) for t in self.output_times))


@dataclass(frozen=True)
class Termination:
    kind: str
    t: float
    t_collision: Optional[float] = None
    message: str = ""

    def to_dict(self) -> dict:
        return {"kind": self.kind, "t": self.t,
                "t_collision": self.t_collision, "message": self.message}


@dataclass
class Trajectory:
    """Integrated states with aligned diagnostics and profiles."""

    r: float
    states: List[PeakonState] = field(default_factory=list)
    diagnostics: List[Diagnostics] = field(default_factory=list)
    uhat: List[np.ndarray] = field(default_factory=list)
    profiles: List[Profile] = field(default_factory=list, repr=False)
    termination: Optional[Termination] = None
    n_steps: int = 0
    n_rejected: int = 0

    @property
    def times(self) -> np.ndarray:
        return np.array([s.t for s in self.states])

    @property
    def Q(self) -> np.ndarray:
        return np.array([s.Q for s in self.states])

    @property
    def P(self) -> np.ndarray:
        return np.array([s.P for s in self.states])

    @property
    def H(self) -> np.ndarray:
        return np.array([d.H for d in self.diagnostics])

    def _append(self, state, profile, keep_profile=True):
        self.states.append(state)
        self.uhat.append(np.array(profile.uhat))
        d = energy(profile)
        self.diagnostics.append(d)
        if keep_profile:
            self.profiles.append(profile)


def vector_field(state: PeakonState, r: float, warm: Optional[Profile] = None,
                 settings: ProfileSolveSettings = ProfileSolveSettings()):
    """Right-hand side of the canonical system at ``state``.

    Returns ``(Qdot, Pdot, profile)``.
    """
    r = check_exponent(r)
    prof = solve_profile(state, r, warm, settings)
    K = prof.K
    Qdot = np.array(prof.uhat)
    Pdot = (K[:-1] - K[1:]) / r
    return Qdot, Pdot, prof


class _RHS:
    """Vector field on the flat vector ``y = (Q, P)`` with warm starts."""

    def __init__(self, r, n, settings, sign):
        self.r = r
        self.n = n
        self.settings = settings
        self.sign = sign
        self.warm = None
        self.calls = 0

    def __call__(self, t, y):
        self.calls += 1
        state = PeakonState(t, y[:self.n], y[self.n:])
        qd, pd, prof = vector_field(state, self.r, self.warm, self.settings)
        self.warm = prof
        return self.sign * np.concatenate([qd, pd]), prof


# Dormand-Prince 5(4) tableau
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
_E = np.array([71 / 57600, 0.0, -71 / 16695, 71 / 1920, -17253 / 339200,
               22 / 525, -1 / 40])


def _rk4_step(f, t, y, h, k1):
    k2, _ = f(t + 0.5 * h, y + 0.5 * h * k1)
    k3, _ = f(t + 0.5 * h, y + 0.5 * h * k2)
    k4, _ = f(t + h, y + h * k3)
    y_new = y + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    k_new, prof = f(t + h, y_new)
    return y_new, k_new, prof


def _dp_step(f, t, y, h, k1):
    ks = [k1]
    for i in range(1, 6):
        yi = y + h * sum(a * k for a, k in zip(_A[i], ks))
        ki, _ = f(t + _C[i] * h, yi)
        ks.append(ki)
    y_new = y + h * sum(b * k for b, k in zip(_B[:6], ks))
    k7, prof = f(t + h, y_new)
    ks.append(k7)
    err = h * sum(e * k for e, k in zip(_E, ks))
    return y_new, k7, prof, err


def _gap(y, n):
    return min_gap(y[:n])


class _Recorder:
    def __init__(self, traj, settings, n):
        self.traj = traj
        self.settings = settings
        self.n = n
        self.count = 0

    def record(self, t, y, prof):
        self.traj._append(PeakonState(t, y[:self.n], y[self.n:]), prof)


def _collision_estimate(traj: Trajectory) -> float:
    """Linear extrapolation of the gap to zero from the last two outputs."""
    t1 = traj.states[-1].t
    g1 = traj.diagnostics[-1].min_gap
    if len(traj.states) < 2:
        return t1
    t0 = traj.states[-2].t
    g0 = traj.diagnostics[-2].min_gap
    if g0 <= g1 or t1 <= t0:
        return t1
    return t1 + g1 * (t1 - t0) / (g0 - g1)


def integrate(state0: PeakonState, r: float, settings: IntegratorSettings,
              reverse: bool = False, keep_profiles: bool = True) -> Trajectory:
    """Integrate from ``state0`` to ``state0.t + settings.t_end``.

    With ``reverse=True`` the vector field is negated (time still
    increases), which runs the Hamiltonian flow backwards.
    """
    r = check_exponent(r)
    n = state0.n
    f = _RHS(r, n, settings.profile, -1.0 if reverse else 1.0)
    traj = Trajectory(r)
    t = float(state0.t)
    t_final = t + settings.t_end
    y = state0.as_vector().copy()
    try:
        k, prof = f(t, y)
    except _STAGE_ERRORS as exc:
        raise SolverFailure(t, f"initial profile solve failed: {exc}") from exc
    traj._append(PeakonState(t, y[:n], y[n:]), prof, keep_profiles)

    out_times = None
    out_idx = 0
    if settings.output_times is not None:
        out_times = sorted(tt for tt in settings.output_times
                           if t < tt <= t_final + 1e-12)
        if not out_times or out_times[-1] < t_final - 1e-12:
            out_times.append(t_final)

    h = settings.dt if settings.scheme == "rk4" else min(1e-2, settings.t_end)
    steps_since_output = 0
    tiny = 1e-12 * max(1.0, abs(t_final))

    def finish(kind, message="", t_coll=None):
        traj.termination = Termination(kind, t, t_coll, message)
        return traj

    while t < t_final - tiny:
        target = t_final
        if out_times is not None:
            target = out_times[out_idx]
        h_try = min(h, target - t)
        if settings.scheme == "rk4":
            h_try = min(settings.dt, target - t)
            sub = h_try
            while True:
                try:
                    y_new, k_new, prof_new = _rk4_step(f, t, y, sub, k)
                    ok = np.all(np.diff(y_new[:n]) > 0)
                except _STAGE_ERRORS as exc:
                    logger.debug("rk4 stage failed at t=%g h=%g: %s", t, sub, exc)
                    ok = False
                if ok:
                    break
                sub *= 0.5
                traj.n_rejected += 1
                if sub < settings.dt_min:
                    return finish(SOLVER_FAILURE, "step size below dt_min")
            t_new = t + sub
            if abs(t_new - target) <= tiny:
                t_new = target
        else:
            try:
                y_new, k_new, prof_new, err = _dp_step(f, t, y, h_try, k)
                ordered = np.all(np.diff(y_new[:n]) > 0)
            except _STAGE_ERRORS as exc:
                logger.debug("rk45 stage failed at t=%g h=%g: %s", t, h_try, exc)
                ordered = False
                err = None
            if not ordered:
                h = 0.25 * h_try
                traj.n_rejected += 1
                if h < settings.dt_min:
                    return finish(SOLVER_FAILURE, "step size below dt_min")
                continue
            scale = settings.atol + settings.rtol * np.maximum(np.abs(y),
                                                               np.abs(y_new))
            enorm = float(np.sqrt(np.mean((err / scale) ** 2)))
            if not math.isfinite(enorm):
                enorm = 1e10
            if enorm > 1.0:
                h = h_try * max(0.2, 0.9 * enorm ** -0.2)
                traj.n_rejected += 1
                if h < settings.dt_min:
                    return finish(SOLVER_FAILURE, "step size below dt_min")
                continue
            fac = 5.0 if enorm == 0.0 else min(5.0, 0.9 * enorm ** -0.2)
            if h_try >= h * (1 - 1e-12) or out_times is None:
                h = h_try * max(0.2, fac)
            else:
                # a step shortened to hit an output time keeps the old h
                h = max(h, h_try * max(0.2, fac))
            t_new = t + h_try
            if abs(t_new - target) <= tiny:
                t_new = target
        t, y, k = t_new, y_new, k_new
        f.warm = prof_new
        traj.n_steps += 1
        steps_since_output += 1
        gap = _gap(y, n)
        at_output = (out_times is not None and t == out_times[out_idx])
        if at_output:
            out_idx = min(out_idx + 1, len(out_times) - 1)
        if (gap < settings.min_gap_stop or at_output or t >= t_final - tiny
                or (out_times is None
                    and steps_since_output >= settings.output_stride)):
            traj._append(PeakonState(t, y[:n], y[n:]), prof_new, keep_profiles)
            steps_since_output = 0
        if gap < settings.min_gap_stop:
            return finish(COLLISION, "minimum gap below threshold",
                          _collision_estimate(traj))
    return finish(REACHED_END)


@dataclass(frozen=True)
class ConservationReport:
    max_relative_H_drift: float
    sign_constant: tuple
    ordered: bool
    min_gap: float

    def to_dict(self) -> dict:
        return {"max_relative_H_drift": self.max_relative_H_drift,
                "sign_constant": list(self.sign_constant),
                "ordered": self.ordered, "min_gap": self.min_gap}


def conservation_report(traj: Trajectory) -> ConservationReport:
    """Energy drift, sign constancy, ordering and closest approach."""
    if not traj.states:
        raise ValueError("empty trajectory")
    H = traj.H
    H0 = H[0]
    drift = float(np.max(np.abs(H - H0)) / abs(H0)) if H0 != 0 else float(
        np.max(np.abs(H - H0)))
    P = traj.P
    signs = np.sign(P)
    sign_constant = tuple(bool(np.all(signs[:, i] == signs[0, i]))
                          for i in range(P.shape[1]))
    Q = traj.Q
    ordered = bool(np.all(np.diff(Q, axis=1) > 0)) if Q.shape[1] > 1 else True
    gaps = [d.min_gap for d in traj.diagnostics]
    return ConservationReport(drift, sign_constant, ordered, float(min(gaps)))


# ---------------------------------------------------------------------------
# output


def trajectory_header(n: int) -> list:
    return (["t"] + [f"Q{i + 1}" for i in range(n)]
            + [f"P{i + 1}" for i in range(n)]
            + [f"uhat{i + 1}" for i in range(n)] + ["H", "min_gap"])


def write_trajectory_csv(traj: Trajectory, path) -> None:
    """One row per recorded state, ``repr`` float formatting."""
    n = traj.states[0].n
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(trajectory_header(n))
        for s, d, u in zip(traj.states, traj.diagnostics, traj.uhat):
            row = [s.t, *s.Q, *s.P, *u, d.H, d.min_gap]
            w.writerow([repr(float(v)) for v in row])


def write_termination_json(traj: Trajectory, path, extra: Optional[dict] = None):
    data = {"termination": traj.termination.to_dict() if traj.termination else None,
            "r": traj.r, "n_outputs": len(traj.states), "n_steps": traj.n_steps,
            "n_rejected": traj.n_rejected,
            "conservation": conservation_report(traj).to_dict()}
    if extra:
        data.update(extra)
    with open(path, "w") as fh:
        json.dump(data, fh, indent=2, sort_keys=True)
