"""Independent, slower solvers used to cross-check the quadrature pipeline.

* :func:`collocation_solve` discretizes the interval equation
  ``|u|**(r-2) u = (1/(r-1)) (|u_x|**(r-2) u_x)_x`` directly as a
  boundary value problem.
* :func:`variational_hamiltonian` maximizes the discrete action
  ``S = sum_i P_i u(Q_i) - L[u]`` over continuous piecewise-linear
  profiles on unit-interval transforms.
* :func:`hamiltonian_fd_vector_field` differentiates the profile energy
  numerically.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy.linalg import solve_banded

from .core import PeakonState, check_exponent, height_from_momentum
from .profile import (
    NewtonDiverged,
    ProfileSolveSettings,
    energy,
    solve_profile,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Mesh1D:
    """Uniform partition with ``n_cells`` cells."""

    n_cells: int

    def __post_init__(self):
        if self.n_cells < 8:
            raise ValueError("a mesh needs at least 8 cells")

    def nodes(self, a: float = 0.0, b: float = 1.0) -> np.ndarray:
        return np.linspace(a, b, self.n_cells + 1)


# ---------------------------------------------------------------------------
# collocation


def _sp(x, beta):
    return np.sign(x) * np.abs(x) ** beta


def _flux_mean(a, b, alpha):
    """Mean of signed_pow(F, alpha) over a linear F from a to b, with
    partial derivatives in a and b."""
    m = 0.5 * (a + b)
    d = b - a
    close = np.abs(d) <= 1e-4 * np.abs(m)
    g = lambda f: _sp(f, alpha)
    G = lambda f: np.abs(f) ** (alpha + 1.0) / (alpha + 1.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        dsafe = np.where(close, 1.0, d)
        mean_far = (G(b) - G(a)) / dsafe
        da_far = (mean_far - g(a)) / dsafe
        db_far = (g(b) - mean_far) / dsafe
        am = np.abs(m)
        g1 = alpha * am ** (alpha - 1.0)
        g2 = alpha * (alpha - 1.0) * np.sign(m) * am ** (alpha - 2.0)
        mean_close = g(m) + g2 * d * d / 24.0
        da_close = 0.5 * g1 - g2 * d / 12.0
        db_close = 0.5 * g1 + g2 * d / 12.0
    mean = np.where(close, mean_close, mean_far)
    da = np.where(close, da_close, da_far)
    db = np.where(close, db_close, db_far)
    return mean, da, db


def collocation_solve(u_left: float, u_right: float, dQ: float, r: float,
                      mesh: Mesh1D, tol: float = 1e-13, max_iter: int = 100):
    """Nodal solution of the interval equation with Dirichlet data.

    The equation is written as the first-order system ``u_x = g(F)``,
    ``F_x = (r-1) signed_pow(u, r-1)`` with ``F = signed_pow(u_x, r-1)``
    and ``g(F) = signed_pow(F, 1/(r-1))``.  Each cell averages ``g`` over a
    linear ``F`` exactly and applies the trapezoid rule to the second
    equation, which keeps second order through turning points where
    ``u_x`` is not smooth for ``r > 2``.

    Returns
    -------
    x, u : ndarray
        Node positions in ``[0, dQ]`` and nodal values.
    """
    r = check_exponent(r)
    n = mesh.n_cells
    h = dQ / n
    x = np.linspace(0.0, dQ, n + 1)
    alpha = 1.0 / (r - 1.0)
    if u_left == 0.0 and u_right == 0.0:
        return x, np.zeros(n + 1)
    # superposition of exponentials as the initial guess
    u = u_left * np.exp(-x) + u_right * np.exp(x - dQ)
    ux = -u_left * np.exp(-x) + u_right * np.exp(x - dQ)
    u[0], u[-1] = u_left, u_right
    F = _sp(ux, r - 1.0)

    # unknown vector z = (F_0, u_1, F_1, ..., u_{n-1}, F_{n-1}, F_n)
    def pack(u, F):
        z = np.empty(2 * n)
        z[0::2] = F[:n]
        z[1:2 * n - 1:2] = u[1:n]
        z[-1] = F[n]
        return z

    def unpack(z):
        uu = np.empty(n + 1)
        uu[0], uu[-1] = u_left, u_right
        uu[1:n] = z[1:2 * n - 1:2]
        FF = np.empty(n + 1)
        FF[:n] = z[0::2]
        FF[n] = z[-1]
        return uu, FF

    def residual(u, F):
        mean, _, _ = _flux_mean(F[:-1], F[1:], alpha)
        A = u[1:] - u[:-1] - h * mean
        su = _sp(u, r - 1.0)
        B = F[1:] - F[:-1] - 0.5 * (r - 1.0) * h * (su[:-1] + su[1:])
        res = np.empty(2 * n)
        res[0::2] = A
        res[1::2] = B
        return res

    def jacobian(u, F):
        _, da, db = _flux_mean(F[:-1], F[1:], alpha)
        dsu = (r - 1.0) * np.abs(u) ** (r - 2.0)
        rows, cols, vals = [], [], []
        for k in range(n):
            ra, rb = 2 * k, 2 * k + 1
            iF0 = 2 * k
            iF1 = 2 * k + 2 if k < n - 1 else 2 * n - 1
            iu0 = 2 * k - 1 if k > 0 else None
            iu1 = 2 * k + 1 if k < n - 1 else None
            # A_k = u_{k+1} - u_k - h mean(F_k, F_{k+1})
            rows += [ra, ra]
            cols += [iF0, iF1]
            vals += [-h * da[k], -h * db[k]]
            # B_k = F_{k+1} - F_k - (r-1) h (su_k + su_{k+1}) / 2
            rows += [rb, rb]
            cols += [iF0, iF1]
            vals += [-1.0, 1.0]
            c = -0.5 * (r - 1.0) * h
            if iu0 is not None:
                rows += [ra, rb]
                cols += [iu0, iu0]
                vals += [-1.0, c * dsu[k]]
            if iu1 is not None:
                rows += [ra, rb]
                cols += [iu1, iu1]
                vals += [1.0, c * dsu[k + 1]]
        return sp.csc_matrix((vals, (rows, cols)), shape=(2 * n, 2 * n))

    z = pack(u, F)
    res = residual(u, F)
    norm = float(np.linalg.norm(res))
    scale = max(1.0, abs(u_left), abs(u_right))
    for it in range(max_iter):
        if np.max(np.abs(res)) <= tol * scale:
            break
        J = jacobian(*unpack(z))
        step = spla.spsolve(J, -res)
        lam = 1.0
        for _ in range(40):
            zt = z + lam * step
            rt = residual(*unpack(zt))
            nt = float(np.linalg.norm(rt))
            if np.isfinite(nt) and nt < (1.0 - 1e-4 * lam) * norm:
                break
            lam *= 0.5
        else:
            if np.max(np.abs(res)) <= 1e3 * tol * scale:
                break
            raise NewtonDiverged(f"collocation: damping exhausted at {norm:.3e}")
        z, res, norm = zt, rt, nt
    else:
        raise NewtonDiverged("collocation: iteration limit reached")
    u, _ = unpack(z)
    return x, u


# ---------------------------------------------------------------------------
# variational formulation


class _DiscreteAction:
    """Piecewise-linear action on per-interval unit transforms."""

    def __init__(self, Q, P, r, n, eps):
        self.Q = np.asarray(Q, dtype=float)
        self.P = np.asarray(P, dtype=float)
        self.r = r
        self.n = n
        self.eps = eps
        self.N = self.Q.size
        self.size = (self.N - 1) * n + 1
        self.peaks = np.arange(self.N) * n
        self.h = 1.0 / n
        d = np.diff(self.Q)
        # per-cell interval length
        self.delta = np.repeat(d, n) if self.N > 1 else np.zeros(0)
        w = np.zeros(self.size)
        for j in range(self.N - 1):
            w[j * n:(j + 1) * n + 1] += 0.5 * self.h * d[j] * np.r_[
                1.0, 2.0 * np.ones(n - 1), 1.0]
        self.mass = w  # trapezoid weights in x

    def energy(self, U):
        r = self.r
        E = float(np.sum(self.mass * np.abs(U) ** r)) / r
        if self.N > 1:
            D = np.diff(U) / self.h
            c = self.delta ** (1.0 - r) / (r * (r - 1.0))
            E += float(np.sum(c * self.h * np.abs(D) ** r))
        ends = U[[0, -1]]
        E += float(np.sum(np.abs(ends) ** r)) / (r * (r - 1.0))
        return E

    def action(self, U):
        return float(self.P @ U[self.peaks]) - self.energy(U)

    def gradient(self, U):
        r = self.r
        g = self.mass * _sp(U, r - 1.0)
        if self.N > 1:
            D = np.diff(U) / self.h
            c = self.delta ** (1.0 - r) / (r - 1.0)
            flux = c * _sp(D, r - 1.0)
            g[:-1] -= flux
            g[1:] += flux
        g[0] += _sp(U[0], r - 1.0) / (r - 1.0)
        g[-1] += _sp(U[-1], r - 1.0) / (r - 1.0)
        grad = -g
        grad[self.peaks] += self.P
        return grad

    def hessian_banded(self, U):
        """Banded Hessian of the energy (positive definite)."""
        r = self.r
        reg = lambda y: (y * y + self.eps) ** (0.5 * (r - 2.0))
        diag = (r - 1.0) * self.mass * reg(U)
        off = np.zeros(self.size - 1)
        if self.N > 1:
            D = np.diff(U) / self.h
            c = self.delta ** (1.0 - r) / self.h
            a = c * reg(D)
            diag[:-1] += a
            diag[1:] += a
            off = -a
        diag[0] += reg(U[0])
        diag[-1] += reg(U[-1])
        ab = np.zeros((3, self.size))
        ab[0, 1:] = off
        ab[1] = diag
        ab[2, :-1] = off
        return ab


def _maximize_action(Q, P, r, n, eps=1e-12, tol=1e-12, max_iter=200,
                     U0=None):
    act = _DiscreteAction(Q, P, r, n, eps)
    N = act.N
    if U0 is None:
        uh = np.asarray(height_from_momentum(P, r), dtype=float).reshape(-1)
        x = np.concatenate([np.linspace(Q[j], Q[j + 1], n + 1)[:-1]
                            for j in range(N - 1)] + [np.array([Q[-1]])])
        U = np.zeros(act.size)
        for q, u in zip(Q, uh):
            U += u * np.exp(-np.abs(x - q))
    else:
        U = np.array(U0, dtype=float)
    S = act.action(U)
    scale = max(1.0, float(np.max(np.abs(P))))
    for it in range(max_iter):
        g = act.gradient(U)
        gn = float(np.max(np.abs(g)))
        if gn <= tol * scale:
            break
        step = solve_banded((1, 1), act.hessian_banded(U), g)
        slope = float(g @ step)
        # Newton decrement below the roundoff of S
        if slope <= 1e-15 * max(1.0, abs(S)):
            break
        lam = 1.0
        for _ in range(60):
            Ut = U + lam * step
            St = act.action(Ut)
            if St >= S + 1e-4 * lam * slope:
                break
            lam *= 0.5
        else:
            if gn <= 1e3 * tol * scale:
                break
            raise NewtonDiverged(f"variational solve stalled at |grad|={gn:.3e}")
        if St <= S and lam < 1.0 and gn <= 1e3 * tol * scale:
            break
        U, S = Ut, St
    else:
        raise NewtonDiverged("variational solve: iteration limit reached")
    return S, U


@dataclass(frozen=True)
class VariationalResult:
    H: float
    dH_dQ: np.ndarray
    dH_dP: np.ndarray
    uhat: np.ndarray


def variational_hamiltonian(state: PeakonState, r: float, mesh: Mesh1D,
                            fd_step: float = 1e-5, gradients: bool = True,
                            eps: float = 1e-12) -> VariationalResult:
    """Hamiltonian as the maximum of the discrete action.

    ``S[U] = sum_i P_i U(Q_i) - L_h[U]`` where ``L_h`` is the Lagrangian
    of a continuous piecewise-linear ``U`` on each interval mapped to
    ``[0, 1]`` plus the closed-form exponential tails.  At the maximizer
    ``H = S``.  Gradients are central differences that re-solve the
    maximization at each probe.
    """
    r = check_exponent(r)
    Q = np.asarray(state.Q, dtype=float)
    P = np.asarray(state.P, dtype=float)
    n = mesh.n_cells
    H, U = _maximize_action(Q, P, r, n, eps)
    peaks = np.arange(Q.size) * n
    dQ = np.zeros(Q.size)
    dP = np.zeros(Q.size)
    if gradients:
        for i in range(Q.size):
            for arr, out in ((Q, dQ), (P, dP)):
                hi = arr.copy()
                lo = arr.copy()
                hi[i] += fd_step
                lo[i] -= fd_step
                if arr is Q:
                    Sp, _ = _maximize_action(hi, P, r, n, eps, U0=U)
                    Sm, _ = _maximize_action(lo, P, r, n, eps, U0=U)
                else:
                    Sp, _ = _maximize_action(Q, hi, r, n, eps, U0=U)
                    Sm, _ = _maximize_action(Q, lo, r, n, eps, U0=U)
                out[i] = (Sp - Sm) / (2.0 * fd_step)
    return VariationalResult(H, dQ, dP, U[peaks].copy())


def hamiltonian_fd_vector_field(state: PeakonState, r: float,
                                step: float = 1e-5,
                                settings: ProfileSolveSettings = ProfileSolveSettings()):
    """``(dH/dP, -dH/dQ)`` by central differences of the profile energy."""
    r = check_exponent(r)
    base = solve_profile(state, r, None, settings)

    def H(Q, P):
        prof = solve_profile(PeakonState(state.t, Q, P), r, base, settings)
        return energy(prof).H

    n = state.n
    Qdot = np.empty(n)
    Pdot = np.empty(n)
    for i in range(n):
        e = np.zeros(n)
        e[i] = step
        Qdot[i] = (H(state.Q, state.P + e) - H(state.Q, state.P - e)) / (2 * step)
        Pdot[i] = -(H(state.Q + e, state.P) - H(state.Q - e, state.P)) / (2 * step)
    return Qdot, Pdot


# ---------------------------------------------------------------------------
# randomized comparison


@dataclass(frozen=True)
class OracleConfig:
    r: float
    Q: tuple
    uhat: tuple


def random_configs(seed: int, count: int = 20) -> list:
    """Reproducible N=2 configurations with moderate gaps and heights."""
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(count):
        r = float(rng.uniform(2.0, 6.0))
        q1 = float(rng.uniform(-2.0, 2.0))
        gap = float(rng.uniform(0.5, 4.0))
        u = rng.uniform(0.3, 2.0, 2) * rng.choice([-1.0, 1.0], 2)
        out.append(OracleConfig(r, (q1, q1 + gap), (float(u[0]), float(u[1]))))
    return out


@dataclass(frozen=True)
class OracleComparison:
    config: OracleConfig
    profile_error: float
    vector_field_error: float
    energy_error: float

    def to_dict(self) -> dict:
        c = self.config
        return {"r": c.r, "Q": list(c.Q), "uhat": list(c.uhat),
                "profile_error": self.profile_error,
                "vector_field_error": self.vector_field_error,
                "energy_error": self.energy_error}


def compare_with_oracles(config: OracleConfig, n_cells: int = 4096
                         ) -> OracleComparison:
    """Sup-norm profile difference, relative vector-field and energy errors."""
    from .dynamics import vector_field
    from .profile import heights_to_profile, sample

    r = config.r
    prof = heights_to_profile(config.Q, config.uhat, r)
    dQ = config.Q[1] - config.Q[0]
    x, u = collocation_solve(config.uhat[0], config.uhat[1], dQ, r,
                             Mesh1D(n_cells))
    perr = float(np.max(np.abs(u - sample(prof, x + config.Q[0]))))

    state = PeakonState(0.0, prof.Q, prof.P)
    Qd, Pd, _ = vector_field(state, r, prof)
    Qf, Pf = hamiltonian_fd_vector_field(state, r)
    exact = np.concatenate([Qd, Pd])
    approx = np.concatenate([Qf, Pf])
    verr = float(np.max(np.abs(exact - approx)) / np.max(np.abs(exact)))

    H = energy(prof).H
    var = variational_hamiltonian(state, r, Mesh1D(n_cells), gradients=False)
    eerr = abs(var.H - H) / abs(H)
    return OracleComparison(config, perr, verr, float(eerr))
