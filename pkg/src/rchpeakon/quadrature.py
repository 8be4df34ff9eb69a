"""Interval-length integrals, their inversion for the segment constant K,
and pointwise inversion of a segment.

On a segment the first integral ``|u|**r - |u_x|**r = K`` turns the
distance between two heights into ``dx = dw / (|w|**r - K)**(1/r)``.
For ``K > 0`` the integrand blows up at the turning value ``K**(1/r)``;
the substitution ``v**r = |w|**r - K`` makes it regular.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

from . import _kernels as _k
from .core import BranchKind, DomainError, RCHError, Segment, check_exponent

logger = logging.getLogger(__name__)


class QuadratureError(RCHError):
    """Adaptive quadrature or an inner root solve failed to converge."""


class NoBracket(RCHError):
    """The requested branch has no solution for the given length."""


@dataclass(frozen=True)
class QuadratureSettings:
    """Tolerances of the adaptive Gauss-Kronrod rule."""

    abs_tol: float = 1e-12
    rel_tol: float = 1e-10
    max_subdivisions: int = 60

    def __post_init__(self):
        if self.abs_tol <= 0 or self.rel_tol <= 0 or self.max_subdivisions < 1:
            raise ValueError("quadrature tolerances must be positive")

    @property
    def args(self) -> tuple:
        return (float(self.abs_tol), float(self.rel_tol),
                int(self.max_subdivisions))


#: tighter settings used inside the profile solver
SOLVER_QUADRATURE = QuadratureSettings(abs_tol=1e-15, rel_tol=1e-13,
                                       max_subdivisions=80)


def _raise_status(status: int, what: str):
    if status == _k.OK:
        return
    if status == _k.ERR_NOBRACKET:
        raise NoBracket(what)
    if status == _k.ERR_DOMAIN:
        raise DomainError(what)
    raise QuadratureError(f"{what}: no convergence (status {status})")


def length_integral_neg(u_a: float, u_b: float, K: float, r: float,
                        settings: QuadratureSettings = QuadratureSettings()
                        ) -> float:
    """Length of a ``K <= 0`` segment joining heights ``u_a`` and ``u_b``.

    Returns ``|int_{u_a}^{u_b} dw / (|w|**r - K)**(1/r)|``.  With
    ``K = 0`` and same-sign heights this is ``|ln(u_b/u_a)|``.
    """
    r = check_exponent(r)
    if K > 0:
        raise DomainError("length_integral_neg needs K <= 0")
    if u_a == u_b:
        raise DomainError("endpoint heights must differ")
    val, status = _k.len_neg(float(u_a), float(u_b), float(K), r,
                             *settings.args)
    _raise_status(status, "length_integral_neg")
    return float(val)


def length_integral_pos(u_a: float, u_b: float, K: float, r: float,
                        settings: QuadratureSettings = QuadratureSettings()
                        ) -> float:
    """Length of a ``K > 0`` segment that passes through its turning value.

    The path descends from ``|u_a|`` to ``K**(1/r)`` and climbs back to
    ``|u_b|``; each piece is integrated in the substituted variable.
    """
    r = check_exponent(r)
    if K <= 0:
        raise DomainError("length_integral_pos needs K > 0")
    if not _k.same_sign(float(u_a), float(u_b)):
        raise DomainError("heights must share a nonzero sign")
    kr = K ** (1.0 / r)
    if min(abs(u_a), abs(u_b)) < kr * (1.0 - 1e-12):
        raise DomainError("endpoint height below the turning value")
    val, status = _k.len_pos(float(u_a), float(u_b), float(K), r, True,
                             *settings.args)
    _raise_status(status, "length_integral_pos")
    return float(val)


def length_integral_raw(u_a: float, u_b: float, K: float, r: float,
                        settings: QuadratureSettings = QuadratureSettings()
                        ) -> float:
    """Direct quadrature of ``dw / (|w|**r - K)**(1/r)`` without substitution.

    Only meaningful where the integrand is regular on ``[u_a, u_b]``;
    used to cross-check the substituted forms.
    """
    lo, hi = sorted((float(u_a), float(u_b)))
    val, _, status = _k.adaptive(_k.RAW_LEN, lo, hi, float(r), float(K), False,
                                 *settings.args)
    _raise_status(status, "length_integral_raw")
    return float(val)


def length_integral_vsub(u_a: float, u_b: float, K: float, r: float,
                         settings: QuadratureSettings = QuadratureSettings()
                         ) -> float:
    """Same-sign ``K > 0`` monotone length in the variable ``v`` (no scaling)."""
    va = (abs(u_a) ** r - K) ** (1.0 / r)
    vb = (abs(u_b) ** r - K) ** (1.0 / r)
    lo, hi = sorted((va, vb))
    val, _, status = _k.integrate_v(_k.VSUB_LEN, lo, hi, float(r), float(K),
                                    *settings.args)
    _raise_status(status, "length_integral_vsub")
    return float(val)


def solve_K_sinh(u_a: float, u_b: float, dQ: float, r: float,
                 settings: QuadratureSettings = SOLVER_QUADRATURE,
                 guess: float = 0.0) -> float:
    """Negative K for which the sinh-like segment has length ``dQ``.

    Raises
    ------
    NoBracket
        When ``dQ`` reaches the ``K -> 0-`` limiting length.
    """
    r = check_exponent(r)
    if dQ <= 0:
        raise DomainError("dQ must be positive")
    K, status = _k.solve_k_sinh(float(u_a), float(u_b), float(dQ), r,
                                float(guess), *settings.args)
    _raise_status(status, f"solve_K_sinh(u_a={u_a}, u_b={u_b}, dQ={dQ})")
    return float(K)


def solve_K_cosh(u_a: float, u_b: float, dQ: float, r: float,
                 settings: QuadratureSettings = SOLVER_QUADRATURE,
                 guess: float = 0.0) -> float:
    """Positive K for which the cosh-like segment has length ``dQ``.

    Both the turning and the monotone sub-branch are covered; which one
    applies is decided by comparing ``dQ`` with the length at
    ``K = min(|u_a|, |u_b|)**r``.
    """
    K, _ = solve_K_cosh_detail(u_a, u_b, dQ, r, settings, guess)
    return K


def solve_K_cosh_detail(u_a, u_b, dQ, r, settings=SOLVER_QUADRATURE,
                        guess=0.0):
    """Like :func:`solve_K_cosh` but also report whether a turning point
    lies inside the interval."""
    r = check_exponent(r)
    if dQ <= 0:
        raise DomainError("dQ must be positive")
    K, turning, status = _k.solve_k_cosh(float(u_a), float(u_b), float(dQ),
                                         r, float(guess), *settings.args)
    _raise_status(status, f"solve_K_cosh(u_a={u_a}, u_b={u_b}, dQ={dQ})")
    return float(K), bool(turning)


def invert_point(segment: Segment, x: float, r: float,
                 settings: QuadratureSettings = SOLVER_QUADRATURE) -> float:
    """Height ``u(x)`` on ``segment``."""
    u, _, _ = point_values(segment, x, r, settings, with_psi=False)
    return u


def point_values(segment: Segment, x: float, r: float,
                 settings: QuadratureSettings = SOLVER_QUADRATURE,
                 with_psi: bool = True):
    """Return ``(u, u_x, psi_increment)`` at ``x`` on ``segment``.

    ``psi_increment`` integrates ``signed_pow(u, r-1)`` from the finite
    end of the segment (the left end for interior segments and the right
    tail, ``-inf`` for the left tail).
    """
    x = float(x)
    lo, hi = segment.x_left, segment.x_right
    if x < lo - 1e-12 * max(1.0, abs(lo)) or x > hi + 1e-12 * max(1.0, abs(hi)):
        raise DomainError(f"x={x} outside segment [{lo}, {hi}]")
    x = min(max(x, lo), hi)
    b = segment.branch
    if b is BranchKind.EXP_TAIL_LEFT:
        u = segment.u_right * math.exp(x - hi)
        psi = math.copysign(abs(u) ** (r - 1.0), u) / (r - 1.0) if u else 0.0
        return u, u, psi
    if b is BranchKind.EXP_TAIL_RIGHT:
        uh = segment.u_left
        u = uh * math.exp(lo - x)
        psi = (math.copysign(abs(uh) ** (r - 1.0), uh)
               * -math.expm1(-(r - 1.0) * (x - lo)) / (r - 1.0)) if uh else 0.0
        return u, -u, psi
    code = {BranchKind.EXP_INTERIOR: _k.B_EXP, BranchKind.SINH_LIKE: _k.B_SINH,
            BranchKind.COSH_LIKE: _k.B_COSH}[b]
    u, ux, psi, status = _k.segment_point(
        code, lo, hi, segment.u_left, segment.u_right, segment.K,
        segment.turning_x is not None, float(r), x, with_psi, *settings.args)
    _raise_status(status, "invert_point")
    return float(u), float(ux), float(psi)
