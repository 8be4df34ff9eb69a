"""Domain types and the signed-power algebra shared by every module."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np


class RCHError(Exception):
    """Base class for errors raised by this package."""


class DomainError(RCHError, ValueError):
    """An argument lies outside the domain of an operation."""


class OrderingViolation(RCHError, ValueError):
    """Peak positions are not strictly increasing."""


def signed_pow(s, beta: float):
    """Return ``|s|**beta * sign(s)``.

    Works elementwise on arrays.  ``beta = 0`` is only defined for
    nonzero ``s``.

    Examples
    --------
    >>> signed_pow(-2.0, 3)
    -8.0
    """
    if beta < 0:
        raise DomainError(f"beta must be >= 0, got {beta}")
    arr = np.asarray(s, dtype=float)
    if beta == 0 and np.any(arr == 0):
        raise DomainError("signed_pow(0, 0) is undefined")
    out = np.sign(arr) * np.abs(arr) ** beta
    if np.ndim(s) == 0:
        return float(out)
    return out


def check_exponent(r: float, minimum: float = 2.0) -> float:
    """Validate the exponent ``r`` for singular-solution work."""
    r = float(r)
    if not math.isfinite(r) or r < minimum:
        raise DomainError(f"exponent r must be >= {minimum}, got {r}")
    return r


def momentum_from_height(uhat, r: float):
    """Momentum of an isolated peakon of height ``uhat``.

    Both tails have slope magnitude ``|uhat|``, so the jump condition
    gives ``P = 2/(r-1) * signed_pow(uhat, r-1)``.
    """
    r = check_exponent(r)
    return 2.0 / (r - 1.0) * signed_pow(uhat, r - 1.0)


def height_from_momentum(P, r: float):
    """Exact inverse of :func:`momentum_from_height`."""
    r = check_exponent(r)
    return signed_pow(0.5 * (r - 1.0) * np.asarray(P, dtype=float),
                      1.0 / (r - 1.0))


@dataclass(frozen=True)
class PeakonState:
    """A point of the canonical phase space.

    Parameters
    ----------
    t : float
        Time.
    Q : array_like
        Strictly increasing peak positions.
    P : array_like
        Canonical momenta, same length as ``Q``.
    """

    t: float
    Q: np.ndarray
    P: np.ndarray

    def __post_init__(self):
        Q = np.array(self.Q, dtype=float).reshape(-1)
        P = np.array(self.P, dtype=float).reshape(-1)
        if Q.size == 0:
            raise DomainError("a state needs at least one peak")
        if Q.shape != P.shape:
            raise DomainError("Q and P must have the same length")
        if not (np.all(np.isfinite(Q)) and np.all(np.isfinite(P))):
            raise DomainError("Q and P must be finite")
        if np.any(np.diff(Q) <= 0):
            raise OrderingViolation(f"Q must be strictly increasing, got {Q}")
        Q.setflags(write=False)
        P.setflags(write=False)
        object.__setattr__(self, "Q", Q)
        object.__setattr__(self, "P", P)
        object.__setattr__(self, "t", float(self.t))

    @property
    def n(self) -> int:
        return self.Q.size

    def as_vector(self) -> np.ndarray:
        return np.concatenate([self.Q, self.P])

    @classmethod
    def from_vector(cls, t: float, y: np.ndarray) -> "PeakonState":
        n = y.size // 2
        return cls(t, y[:n], y[n:])


class BranchKind(enum.Enum):
    """Shape class of a segment, fixed by the sign of its constant K."""

    EXP_TAIL_LEFT = "exp_tail_left"
    EXP_TAIL_RIGHT = "exp_tail_right"
    EXP_INTERIOR = "exp_interior"
    SINH_LIKE = "sinh_like"
    COSH_LIKE = "cosh_like"


@dataclass(frozen=True)
class Segment:
    """One interval of a profile.

    ``slope_left`` and ``slope_right`` are the one-sided derivatives at
    ``x_left`` and ``x_right`` taken from inside the segment.  For
    :attr:`BranchKind.EXP_INTERIOR` the ``sign`` is +1 when ``|u|`` grows
    to the right and -1 otherwise.
    """

    x_left: float
    x_right: float
    u_left: float
    u_right: float
    K: float
    branch: BranchKind
    slope_left: float = 0.0
    slope_right: float = 0.0
    turning_x: Optional[float] = None
    turning_u: Optional[float] = None
    sign: int = 0

    @property
    def length(self) -> float:
        return self.x_right - self.x_left

    @property
    def has_turning_point(self) -> bool:
        return self.turning_x is not None


@dataclass(frozen=True)
class Diagnostics:
    """Energies and simple invariants of one profile."""

    H: float
    L: float
    min_gap: float
    p_signs: tuple = field(default_factory=tuple)
    newton_iterations: int = 0


def min_gap(Q: Sequence[float]) -> float:
    """Smallest spacing between consecutive peaks (inf for one peak)."""
    Q = np.asarray(Q, dtype=float)
    if Q.size < 2:
        return math.inf
    return float(np.min(np.diff(Q)))


def sign_vector(P) -> tuple:
    return tuple(int(s) for s in np.sign(np.asarray(P, dtype=float)))
