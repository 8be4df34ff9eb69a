"""Reconstruction of the singular-solution profile from (P, Q) and its
energies.

Between consecutive peaks the profile solves the nonlinear Helmholtz
equation, whose first integral ``|u|**r - |u_x|**r = K`` reduces each
interval to a single unknown constant.  Given peak heights the constants
follow from independent 1D solves; given momenta the heights are found
by a damped Newton iteration on the jump conditions.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

from . import _kernels as _k
from .core import (
    BranchKind,
    Diagnostics,
    DomainError,
    OrderingViolation,
    PeakonState,
    RCHError,
    Segment,
    check_exponent,
    height_from_momentum,
    min_gap,
    sign_vector,
    signed_pow,
)
from .quadrature import (
    SOLVER_QUADRATURE,
    QuadratureError,
    QuadratureSettings,
    point_values,
)

logger = logging.getLogger(__name__)

_CODE_TO_BRANCH = {
    _k.B_TAIL_LEFT: BranchKind.EXP_TAIL_LEFT,
    _k.B_TAIL_RIGHT: BranchKind.EXP_TAIL_RIGHT,
    _k.B_EXP: BranchKind.EXP_INTERIOR,
    _k.B_SINH: BranchKind.SINH_LIKE,
    _k.B_COSH: BranchKind.COSH_LIKE,
}
_BRANCH_TO_CODE = {v: k for k, v in _CODE_TO_BRANCH.items()}


class NewtonDiverged(RCHError):
    """The damped Newton iteration failed to reduce the residual."""


@dataclass(frozen=True)
class ProfileSolveSettings:
    """Controls of the (P, Q) -> profile solve.

    ``newton_tol`` is applied to the infinity norm of the momentum
    residual relative to ``max(1, |P|_inf)``.
    """

    newton_tol: float = 1e-11
    max_newton_iters: int = 50
    fd_eps: float = 1e-7
    damping: float = 0.5
    max_halvings: int = 25
    quadrature: QuadratureSettings = SOLVER_QUADRATURE

    def __post_init__(self):
        if min(self.newton_tol, self.fd_eps, self.damping) <= 0:
            raise ValueError("settings must be positive")
        if self.max_newton_iters < 1 or self.max_halvings < 1:
            raise ValueError("iteration limits must be positive")


@dataclass(frozen=True)
class Profile:
    """Full piecewise description of the wave at one instant.

    Attributes
    ----------
    r : float
        Exponent.
    Q, uhat : ndarray
        Peak positions and heights.
    segments : tuple of Segment
        ``N + 1`` segments: left tail, interior intervals, right tail.
    K : ndarray
        Segment constants, ``K[0] = K[N] = 0``.
    P : ndarray
        Momenta from the jump conditions.
    """

    r: float
    Q: np.ndarray
    uhat: np.ndarray
    segments: tuple
    K: np.ndarray
    P: np.ndarray
    newton_iterations: int = 0
    jacobian: Optional[np.ndarray] = field(default=None, repr=False,
                                           compare=False)

    @property
    def n(self) -> int:
        return self.Q.size

    @property
    def branches(self) -> list:
        return [s.branch for s in self.segments]

    def to_dict(self) -> dict:
        return profile_to_dict(self)


def classify_interval(u_a: float, u_b: float, dQ: float, r: float,
                      settings: QuadratureSettings = SOLVER_QUADRATURE
                      ) -> BranchKind:
    """Branch of the interior interval joining heights ``u_a`` and ``u_b``.

    Opposite signs force a zero, hence ``K < 0``.  Same-sign heights are
    first tested against the exponential fit; otherwise the sinh branch
    has a solution exactly when ``dQ`` is shorter than the exponential
    length ``|ln(u_b/u_a)|`` and the cosh branch exactly when it is longer.
    """
    if dQ <= 0:
        raise DomainError("dQ must be positive")
    r = check_exponent(r)
    code, _, _, _ = _k.interval_solve(float(u_a), float(u_b), float(dQ), r,
                                      0.0, *settings.args)
    return _CODE_TO_BRANCH[code]


def _kernel(Q, uhat, r, K_guess, settings: QuadratureSettings):
    out = _k.profile_kernel(Q, uhat, r, K_guess, *settings.args)
    K, branch, turning, s_left, s_right, P, status = out
    return K, branch, turning, s_left, s_right, P, status


def _build(Q, uhat, r, kern, settings: QuadratureSettings,
           newton_iterations=0, jacobian=None) -> Profile:
    K, branch, turning, s_left, s_right, P, status = kern
    n = Q.size
    segs = [Segment(-math.inf, float(Q[0]), 0.0, float(uhat[0]), 0.0,
                    BranchKind.EXP_TAIL_LEFT, 0.0, float(s_left[0]))]
    for j in range(1, n):
        ua, ub = float(uhat[j - 1]), float(uhat[j])
        kind = _CODE_TO_BRANCH[int(branch[j])]
        tx = tu = None
        sign = 0
        if kind is BranchKind.COSH_LIKE:
            tu = math.copysign(K[j] ** (1.0 / r), ua)
            if turning[j]:
                off, st = _k.turning_offset(ua, float(K[j]), r, *settings.args)
                tx = float(Q[j - 1] + off)
        elif kind is BranchKind.EXP_INTERIOR:
            sign = 1 if abs(ub) > abs(ua) else -1
        segs.append(Segment(float(Q[j - 1]), float(Q[j]), ua, ub, float(K[j]),
                            kind, float(s_right[j - 1]), float(s_left[j]),
                            tx, tu, sign))
    segs.append(Segment(float(Q[-1]), math.inf, float(uhat[-1]), 0.0, 0.0,
                        BranchKind.EXP_TAIL_RIGHT, float(s_right[-1]), 0.0))
    Qc = np.array(Q, dtype=float)
    uc = np.array(uhat, dtype=float)
    Kc = np.array(K, dtype=float)
    Pc = np.array(P, dtype=float)
    for a in (Qc, uc, Kc, Pc):
        a.setflags(write=False)
    return Profile(r, Qc, uc, tuple(segs), Kc, Pc, newton_iterations, jacobian)


def _check_inputs(Q, uhat):
    Q = np.ascontiguousarray(Q, dtype=float).reshape(-1)
    uhat = np.ascontiguousarray(uhat, dtype=float).reshape(-1)
    if Q.size == 0 or Q.shape != uhat.shape:
        raise DomainError("Q and uhat must be nonempty and of equal length")
    if np.any(np.diff(Q) <= 0):
        raise OrderingViolation(f"Q must be strictly increasing, got {Q}")
    if np.any(np.diff(Q) <= 1e-12):
        raise DomainError("peaks closer than 1e-12 are not supported")
    return Q, uhat


def _raise_kernel_status(status):
    if status == _k.OK:
        return
    if status == _k.ERR_NOBRACKET:
        raise QuadratureError("no bracket for an interval constant")
    raise QuadratureError(f"interval solve failed (status {status})")


def heights_to_profile(Q: Sequence[float], uhat: Sequence[float], r: float,
                       settings: ProfileSolveSettings = ProfileSolveSettings(),
                       K_guess: Optional[Sequence[float]] = None) -> Profile:
    """Profile with prescribed peak heights.

    Every interior interval is classified and its constant solved
    independently; tails carry ``K = 0``.
    """
    r = check_exponent(r)
    Q, uhat = _check_inputs(Q, uhat)
    guess = (np.zeros(Q.size + 1) if K_guess is None
             else np.ascontiguousarray(K_guess, dtype=float))
    kern = _kernel(Q, uhat, r, guess, settings.quadrature)
    _raise_kernel_status(kern[-1])
    return _build(Q, uhat, r, kern, settings.quadrature)


def momenta_from_profile(profile: Profile) -> np.ndarray:
    """Jump momenta ``P_i = -(1/(r-1)) [signed_pow(u_x, r-1)]`` at each peak."""
    r = profile.r
    segs = profile.segments
    P = np.empty(profile.n)
    for i in range(profile.n):
        s_l = segs[i].slope_right
        s_r = segs[i + 1].slope_left
        P[i] = -(signed_pow(s_r, r - 1.0) - signed_pow(s_l, r - 1.0)) / (r - 1.0)
    return P


def _fd_jacobian(Q, uh, r, K_guess, settings, base_scale):
    n = uh.size
    J = np.empty((n, n))
    for j in range(n):
        h = settings.fd_eps * max(1.0, abs(uh[j]))
        up = uh.copy()
        dn = uh.copy()
        up[j] += h
        dn[j] -= h
        kp = _kernel(Q, up, r, K_guess, settings.quadrature)
        km = _kernel(Q, dn, r, K_guess, settings.quadrature)
        if kp[-1] != _k.OK or km[-1] != _k.OK:
            raise QuadratureError("interval solve failed in Jacobian probe")
        J[:, j] = (kp[5] - km[5]) / (up[j] - dn[j])
    return J


def _newton_direction(J, R, rcond):
    """Step ``-J^+ R`` from the symmetrized Jacobian.

    The Jacobian is the Hessian of the convex reduced energy, so it is
    symmetric positive semidefinite.  Eigen-directions whose curvature
    falls below ``rcond`` times the largest are not resolved by the
    momenta (this happens for large r close to a collision) and are left
    untouched.
    """
    Js = 0.5 * (J + J.T)
    w, V = np.linalg.eigh(Js)
    wmax = float(np.max(np.abs(w)))
    keep = w > rcond * wmax
    if not np.any(keep):
        return None
    coef = (V.T @ R)[keep] / w[keep]
    return -(V[:, keep] @ coef)


def solve_profile(state: PeakonState, r: float,
                  warm_start: Optional[Profile] = None,
                  settings: ProfileSolveSettings = ProfileSolveSettings()
                  ) -> Profile:
    """Profile whose jump momenta equal ``state.P`` at positions ``state.Q``.

    Damped Newton on the peak heights with a central finite-difference
    Jacobian.  Each residual evaluation solves the interval constants
    for the current heights (warm-started from the previous ones), so the
    length conditions hold exactly at every iterate.

    The momenta are the gradient of the reduced energy ``E(uhat)``, which
    is convex and r-homogeneous, so ``E = P(uhat) . uhat / r``.  Steps are
    accepted when they increase the concave merit
    ``S = P_target . uhat - E`` or decrease the residual norm.  A Jacobian
    carried by ``warm_start`` is reused while it keeps contracting.
    """
    r = check_exponent(r)
    Q, P_target = _check_inputs(state.Q, state.P)
    n = Q.size
    scale = max(1.0, float(np.max(np.abs(P_target))))
    tol = settings.newton_tol * scale
    quad = settings.quadrature
    rcond = 1e-10

    if warm_start is not None and warm_start.n == n and n > 1:
        uh = np.array(warm_start.uhat, dtype=float)
        K_guess = np.array(warm_start.K, dtype=float)
        J = warm_start.jacobian
    else:
        uh = np.array(height_from_momentum(P_target, r), dtype=float).reshape(-1)
        K_guess = np.zeros(n + 1)
        J = None

    def evaluate(u):
        kern = _kernel(Q, u, r, K_guess, quad)
        if kern[-1] != _k.OK or not np.all(np.isfinite(kern[5])):
            return None, None, None
        R = kern[5] - P_target
        merit = float(P_target @ u - kern[5] @ u / r)
        return kern, R, merit

    kern, R, merit = evaluate(uh)
    if kern is None:
        uh = np.array(height_from_momentum(P_target, r), dtype=float).reshape(-1)
        K_guess = np.zeros(n + 1)
        J = None
        kern, R, merit = evaluate(uh)
        if kern is None:
            raise QuadratureError("cannot evaluate the initial profile")
    K_guess = kern[0].copy()
    norm = float(np.max(np.abs(R)))
    fresh = False
    it = 0
    while norm > tol:
        if it >= settings.max_newton_iters:
            raise NewtonDiverged(
                f"no convergence after {it} iterations (residual {norm:.3e})")
        it += 1
        if J is None:
            J = _fd_jacobian(Q, uh, r, K_guess, settings, scale)
            fresh = True
        delta = _newton_direction(J, R, rcond)
        accepted = False
        if delta is not None and np.all(np.isfinite(delta)):
            slope = float(-R @ delta)
            lam = 1.0
            for _ in range(settings.max_halvings):
                trial = uh + lam * delta
                tk, tR, tmerit = evaluate(trial)
                if tk is not None:
                    tnorm = float(np.max(np.abs(tR)))
                    if (tnorm < (1.0 - 1e-4 * lam) * norm
                            or (tmerit > merit + 1e-4 * lam * slope
                                and tmerit > merit)):
                        accepted = True
                        break
                lam *= settings.damping
        if not accepted:
            if not fresh:
                J = None
                continue
            if norm <= 1e3 * tol:
                logger.debug("profile solve stopped at noise floor %.3e", norm)
                break
            raise NewtonDiverged(
                f"damping exhausted at residual {norm:.3e} (Q={Q}, P={P_target})")
        ratio = tnorm / norm
        uh, kern, R, norm, merit = trial, tk, tR, tnorm, tmerit
        K_guess = kern[0].copy()
        if ratio > 0.25 and not fresh:
            J = None
        fresh = False
    if J is None:
        J = _fd_jacobian(Q, uh, r, K_guess, settings, scale)
    return _build(Q, uh, r, kern, quad, it, J)


def _locate(profile: Profile, x: float) -> int:
    return int(np.searchsorted(profile.Q, x, side="right"))


def evaluate(profile: Profile, xs, with_psi: bool = False,
             settings: QuadratureSettings = SOLVER_QUADRATURE):
    """Return ``(u, u_x, psi)`` arrays at the points ``xs``.

    ``psi`` is the antiderivative of ``signed_pow(u, r-1)`` vanishing at
    ``-inf`` (zeros unless ``with_psi``).  At a peak the left-segment
    slope is reported.
    """
    xs = np.atleast_1d(np.asarray(xs, dtype=float))
    r = profile.r
    u = np.empty(xs.size)
    ux = np.empty(xs.size)
    psi = np.zeros(xs.size)
    base = None
    if with_psi:
        base = _psi_at_peaks(profile, settings)
    for i, x in enumerate(xs):
        j = _locate(profile, x)
        if j > 0 and x == profile.Q[j - 1]:
            j -= 1
        seg = profile.segments[j]
        ui, uxi, pi = point_values(seg, x, r, settings, with_psi)
        u[i] = ui
        ux[i] = uxi
        if with_psi:
            psi[i] = pi + (base[j - 1] if j > 0 else 0.0)
    return u, ux, psi


def _psi_at_peaks(profile: Profile, settings) -> np.ndarray:
    """psi(Q_i) accumulated left to right segment by segment."""
    r = profile.r
    out = np.empty(profile.n)
    uh0 = float(profile.uhat[0])
    acc = float(signed_pow(uh0, r - 1.0)) / (r - 1.0)
    out[0] = acc
    for j in range(1, profile.n):
        seg = profile.segments[j]
        _, _, inc = point_values(seg, seg.x_right, r, settings, True)
        acc += inc
        out[j] = acc
    return out


def sample(profile: Profile, xs) -> np.ndarray:
    """Profile heights at the points ``xs``."""
    return evaluate(profile, xs)[0]


def segment_energies(profile: Profile,
                     settings: QuadratureSettings = SOLVER_QUADRATURE):
    """Per-segment integrals of ``|u|**r`` and ``|u_x|**r``."""
    r = profile.r
    out = []
    for seg in profile.segments:
        if seg.branch in (BranchKind.EXP_TAIL_LEFT, BranchKind.EXP_TAIL_RIGHT):
            uh = seg.u_right if seg.branch is BranchKind.EXP_TAIL_LEFT else seg.u_left
            v = abs(uh) ** r / r
            out.append((v, v))
            continue
        iu, iux, status = _k.segment_energy(
            _BRANCH_TO_CODE[seg.branch], seg.u_left, seg.u_right, seg.K,
            seg.turning_x is not None, float(r), *settings.args)
        if status != _k.OK:
            raise QuadratureError("energy quadrature failed")
        out.append((float(iu), float(iux)))
    return out


def energy(profile: Profile,
           settings: QuadratureSettings = SOLVER_QUADRATURE) -> Diagnostics:
    """Lagrangian and Hamiltonian of ``profile``.

    ``L = (1/r) * int(|u|**r + |u_x|**r / (r-1))`` and ``H = (r-1) L``.
    Tails are closed form; interior segments use height-variable
    quadrature.
    """
    r = profile.r
    total = 0.0
    for iu, iux in segment_energies(profile, settings):
        total += iu + iux / (r - 1.0)
    L = total / r
    return Diagnostics(H=(r - 1.0) * L, L=L, min_gap=min_gap(profile.Q),
                       p_signs=sign_vector(profile.P),
                       newton_iterations=profile.newton_iterations)


# ---------------------------------------------------------------------------
# serialization


def _f(x):
    return None if x is None else float(x)


def profile_to_dict(profile: Profile) -> dict:
    segs = []
    for s in profile.segments:
        segs.append({
            "branch": s.branch.value,
            "x_left": None if math.isinf(s.x_left) else s.x_left,
            "x_right": None if math.isinf(s.x_right) else s.x_right,
            "u_left": s.u_left, "u_right": s.u_right, "K": s.K,
            "slope_left": s.slope_left, "slope_right": s.slope_right,
            "turning_x": _f(s.turning_x), "turning_u": _f(s.turning_u),
            "sign": s.sign,
        })
    return {
        "r": profile.r,
        "Q": profile.Q.tolist(),
        "P": profile.P.tolist(),
        "uhat": profile.uhat.tolist(),
        "K": profile.K.tolist(),
        "branches": [s.branch.value for s in profile.segments],
        "turning_points": [_f(s.turning_x) for s in profile.segments],
        "segments": segs,
        "newton_iterations": profile.newton_iterations,
    }


def profile_to_json(profile: Profile, **kwargs) -> str:
    return json.dumps(profile_to_dict(profile), **kwargs)


def profile_from_dict(data: dict) -> Profile:
    """Rebuild a profile from its stored heights (constants are re-solved)."""
    prof = heights_to_profile(data["Q"], data["uhat"], data["r"],
                              K_guess=data.get("K"))
    return prof
