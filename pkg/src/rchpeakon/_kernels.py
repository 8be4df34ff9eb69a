"""Compiled inner loops: adaptive Gauss-Kronrod quadrature, scaled length
integrals, bracketed K solves and point inversion.

Everything here works on plain floats and arrays and reports failures
through integer status codes; the public wrappers in :mod:`quadrature`
and :mod:`profile` turn those into exceptions.

Scaled variables
----------------
On a segment with constant ``K`` write ``k = |K|**(1/r)``.  For ``K < 0``
the height ``w = k z`` gives ``dx = dz / (1 + |z|**r)**(1/r)``, and for
``K > 0`` the substituted variable ``v = k Z`` (``v**r = |w|**r - K``)
gives ``dx = Z**(r-2) (Z**r + 1)**((1-r)/r) dZ``.  Both are free of
``k``, so every length is a difference of one universal function of a
single variable.  For large arguments the integrands behave like
``1/z`` and are integrated in ``y = ln z`` with the leading term removed.
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit

# QUADPACK qk21 abscissae and weights
_XGK = np.array([
    0.995657163025808080735527280689003,
    0.973906528517171720077964012084452,
    0.930157491355708226001207180059508,
    0.865063366688984510732096688423493,
    0.780817726586416897063717578345042,
    0.679409568299024406234327365114874,
    0.562757134668604683339000099272694,
    0.433395394129247190799265943165784,
    0.294392862701460198131126603103866,
    0.148874338981631210884826001129720,
    0.0,
])
_WGK = np.array([
    0.011694638867371874278064396062192,
    0.032558162307964727478818972459390,
    0.054755896574351996031381300244580,
    0.075039674810919952767043140916190,
    0.093125454583697605535065465083366,
    0.109387158802297641899210590325805,
    0.123491976262065851077208980929406,
    0.134709217311473325928054001771707,
    0.142775938577060080797094273138717,
    0.147739104901338491374841515972068,
    0.149445554002916905664936468389821,
])
_WG = np.array([
    0.066671344308688137593568809893332,
    0.149451349150580593145776339657697,
    0.219086362515982043995534934228163,
    0.269266719309996355091226921569469,
    0.295524224714752870173892994651338,
])

_EPS = 2.220446049250313e-16
_UFLOW = 2.2250738585072014e-308

# integrand kinds
LEN_NEG_CORE = 0
LEN_NEG_LOG = 1
LEN_POS_CORE = 2
LEN_POS_LOG = 3
RAW_LEN = 4
VSUB_LEN = 5
E_NEG_U = 6
E_NEG_UX = 7
E_POS_U = 8
E_POS_UX = 9
PSI_NEG = 10
PSI_POS = 11

# branch codes
B_TAIL_LEFT = 0
B_TAIL_RIGHT = 1
B_EXP = 2
B_SINH = 3
B_COSH = 4

# status codes
OK = 0
ERR_QUAD = 1
ERR_NOBRACKET = 2
ERR_NOCONV = 3
ERR_DOMAIN = 4

# beyond y = _YCUT_R / r the log-variable corrections are below 1e-17
_YCUT_R = 40.0


@njit(cache=True)
def use_tsub(r):
    """Power substitution t = v**(r-1) pays off only for non-integer r < 3."""
    return r < 3.0 and r != math.floor(r)


@njit(cache=True)
def _vfactor(kind, v, r, c):
    # integrand without the v**(r-2) factor
    if kind == LEN_POS_CORE:
        return (v ** r + 1.0) ** ((1.0 - r) / r)
    if kind == VSUB_LEN:
        return (v ** r + c) ** ((1.0 - r) / r)
    if kind == E_POS_U:
        return (v ** r + c) ** (1.0 / r)
    if kind == E_POS_UX:
        vr = v ** r
        return vr * (vr + c) ** ((1.0 - r) / r)
    return 1.0  # PSI_POS


@njit(cache=True)
def integrand(kind, x, r, c, tsub):
    """Evaluate integrand ``kind`` at ``x``; ``c`` is the segment parameter."""
    if kind == LEN_NEG_CORE:
        return (1.0 + x ** r) ** (-1.0 / r)
    if kind == LEN_NEG_LOG:
        return math.expm1(-math.log1p(math.exp(-r * x)) / r)
    if kind == LEN_POS_LOG:
        return math.expm1((1.0 - r) / r * math.log1p(math.exp(-r * x)))
    if kind == RAW_LEN:
        return (abs(x) ** r - c) ** (-1.0 / r)
    if kind == E_NEG_U:
        xr = x ** r
        return xr * (xr + c) ** (-1.0 / r)
    if kind == E_NEG_UX:
        return (x ** r + c) ** ((r - 1.0) / r)
    if kind == PSI_NEG:
        return x ** (r - 1.0) * (x ** r + c) ** (-1.0 / r)
    # v-substituted kinds
    if tsub:
        v = x ** (1.0 / (r - 1.0))
        return _vfactor(kind, v, r, c) / (r - 1.0)
    if r == 2.0:
        return _vfactor(kind, x, r, c)
    return x ** (r - 2.0) * _vfactor(kind, x, r, c)


@njit(cache=True)
def gk21(kind, a, b, r, c, tsub):
    """One 21-point Kronrod panel with the QUADPACK error estimate."""
    centr = 0.5 * (a + b)
    hlgth = 0.5 * (b - a)
    dhlgth = abs(hlgth)
    fc = integrand(kind, centr, r, c, tsub)
    resg = 0.0
    resk = _WGK[10] * fc
    resabs = abs(resk)
    fv1 = np.empty(10)
    fv2 = np.empty(10)
    for j in range(5):
        jtw = 2 * j + 1
        absc = hlgth * _XGK[jtw]
        f1 = integrand(kind, centr - absc, r, c, tsub)
        f2 = integrand(kind, centr + absc, r, c, tsub)
        fv1[jtw] = f1
        fv2[jtw] = f2
        resg += _WG[j] * (f1 + f2)
        resk += _WGK[jtw] * (f1 + f2)
        resabs += _WGK[jtw] * (abs(f1) + abs(f2))
    for j in range(5):
        jtwm1 = 2 * j
        absc = hlgth * _XGK[jtwm1]
        f1 = integrand(kind, centr - absc, r, c, tsub)
        f2 = integrand(kind, centr + absc, r, c, tsub)
        fv1[jtwm1] = f1
        fv2[jtwm1] = f2
        resk += _WGK[jtwm1] * (f1 + f2)
        resabs += _WGK[jtwm1] * (abs(f1) + abs(f2))
    reskh = resk * 0.5
    resasc = _WGK[10] * abs(fc - reskh)
    for j in range(10):
        resasc += _WGK[j] * (abs(fv1[j] - reskh) + abs(fv2[j] - reskh))
    result = resk * hlgth
    resabs *= dhlgth
    resasc *= dhlgth
    abserr = abs((resk - resg) * hlgth)
    if resasc != 0.0 and abserr != 0.0:
        abserr = resasc * min(1.0, (200.0 * abserr / resasc) ** 1.5)
    if resabs > _UFLOW / (50.0 * _EPS):
        abserr = max(_EPS * 50.0 * resabs, abserr)
    return result, abserr


@njit(cache=True)
def adaptive(kind, a, b, r, c, tsub, abs_tol, rel_tol, max_sub):
    """Globally adaptive bisection with 21-point Kronrod panels.

    Returns ``(value, error_estimate, status)``.
    """
    if a == b:
        return 0.0, 0.0, OK
    lo = np.empty(max_sub + 1)
    hi = np.empty(max_sub + 1)
    val = np.empty(max_sub + 1)
    err = np.empty(max_sub + 1)
    v0, e0 = gk21(kind, a, b, r, c, tsub)
    lo[0] = a
    hi[0] = b
    val[0] = v0
    err[0] = e0
    n = 1
    total = v0
    toterr = e0
    while toterr > max(abs_tol, rel_tol * abs(total)):
        if n >= max_sub:
            return total, toterr, ERR_QUAD
        imax = 0
        for i in range(1, n):
            if err[i] > err[imax]:
                imax = i
        a1 = lo[imax]
        b2 = hi[imax]
        m = 0.5 * (a1 + b2)
        if m <= a1 or m >= b2:
            # interval exhausted at machine resolution; accept roundoff
            break
        va, ea = gk21(kind, a1, m, r, c, tsub)
        vb, eb = gk21(kind, m, b2, r, c, tsub)
        total += va + vb - val[imax]
        toterr += ea + eb - err[imax]
        hi[imax] = m
        val[imax] = va
        err[imax] = ea
        lo[n] = m
        hi[n] = b2
        val[n] = vb
        err[n] = eb
        n += 1
    # recompute sums to shed accumulated cancellation
    total = 0.0
    toterr = 0.0
    for i in range(n):
        total += val[i]
        toterr += err[i]
    return total, toterr, OK


@njit(cache=True)
def integrate_v(kind, v0, v1, r, c, abs_tol, rel_tol, max_sub):
    """Integrate a v-substituted integrand over ``[v0, v1]``."""
    if use_tsub(r):
        t0 = v0 ** (r - 1.0)
        t1 = v1 ** (r - 1.0)
        return adaptive(kind, t0, t1, r, c, True, abs_tol, rel_tol, max_sub)
    return adaptive(kind, v0, v1, r, c, False, abs_tol, rel_tol, max_sub)


# ---------------------------------------------------------------------------
# scaled lengths


@njit(cache=True)
def g_minus(za, zb, r, abs_tol, rel_tol, max_sub):
    """Integral of (1 + z**r)**(-1/r) over [za, zb], 0 <= za <= zb."""
    total = 0.0
    status = OK
    if za < 1.0:
        v, e, s = adaptive(LEN_NEG_CORE, za, min(zb, 1.0), r, 0.0, False,
                           abs_tol, rel_tol, max_sub)
        total += v
        status = max(status, s)
    if zb > 1.0:
        ya = math.log(max(za, 1.0))
        yb = math.log(zb)
        total += yb - ya
        ycut = _YCUT_R / r
        if ya < ycut:
            v, e, s = adaptive(LEN_NEG_LOG, ya, min(yb, ycut), r, 0.0, False,
                               abs_tol, rel_tol, max_sub)
            total += v
            status = max(status, s)
    return total, status


@njit(cache=True)
def g_plus(za, zb, r, abs_tol, rel_tol, max_sub):
    """Integral of Z**(r-2) (Z**r + 1)**((1-r)/r) over [za, zb], 0 <= za <= zb."""
    total = 0.0
    status = OK
    if za < 1.0:
        v, e, s = integrate_v(LEN_POS_CORE, za, min(zb, 1.0), r, 1.0,
                              abs_tol, rel_tol, max_sub)
        total += v
        status = max(status, s)
    if zb > 1.0:
        ya = math.log(max(za, 1.0))
        yb = math.log(zb)
        total += yb - ya
        ycut = _YCUT_R / r
        if ya < ycut:
            v, e, s = adaptive(LEN_POS_LOG, ya, min(yb, ycut), r, 0.0, False,
                               abs_tol, rel_tol, max_sub)
            total += v
            status = max(status, s)
    return total, status


@njit(cache=True)
def same_sign(a, b):
    return (a > 0.0 and b > 0.0) or (a < 0.0 and b < 0.0)


@njit(cache=True)
def zscaled(u, k, r):
    """Scaled substituted variable Z = v/k with v**r = |u|**r - k**r."""
    rho = abs(u) / k
    if rho <= 1.0:
        return 0.0
    return rho * (-math.expm1(-r * math.log(rho))) ** (1.0 / r)


@njit(cache=True)
def height_from_z(Z, k, r):
    """Inverse of :func:`zscaled`: |u| = k (Z**r + 1)**(1/r)."""
    if Z > 1.0:
        return k * Z * (1.0 + Z ** (-r)) ** (1.0 / r)
    return k * (Z ** r + 1.0) ** (1.0 / r)


@njit(cache=True)
def len_neg(ua, ub, K, r, abs_tol, rel_tol, max_sub):
    """Length of a K <= 0 segment between heights ua and ub."""
    if K == 0.0:
        if same_sign(ua, ub):
            return abs(math.log(abs(ub) / abs(ua))), OK
        return math.inf, OK
    k = (-K) ** (1.0 / r)
    za = abs(ua) / k
    zb = abs(ub) / k
    if same_sign(ua, ub):
        return g_minus(min(za, zb), max(za, zb), r, abs_tol, rel_tol, max_sub)
    va, sa = g_minus(0.0, za, r, abs_tol, rel_tol, max_sub)
    vb, sb = g_minus(0.0, zb, r, abs_tol, rel_tol, max_sub)
    return va + vb, max(sa, sb)


@njit(cache=True)
def len_pos(ua, ub, K, r, turning, abs_tol, rel_tol, max_sub):
    """Length of a K > 0 segment; ``turning`` selects the two-piece path."""
    k = K ** (1.0 / r)
    za = zscaled(ua, k, r)
    zb = zscaled(ub, k, r)
    if turning:
        va, sa = g_plus(0.0, za, r, abs_tol, rel_tol, max_sub)
        vb, sb = g_plus(0.0, zb, r, abs_tol, rel_tol, max_sub)
        return va + vb, max(sa, sb)
    return g_plus(min(za, zb), max(za, zb), r, abs_tol, rel_tol, max_sub)


# ---------------------------------------------------------------------------
# K solves

MODE_SINH = 0
MODE_MONO = 1
MODE_TURN = 2


@njit(cache=True)
def _objective(mode, t, ua, ub, dq, r, scale, abs_tol, rel_tol, max_sub):
    if mode == MODE_SINH:
        ell, s = len_neg(ua, ub, -math.exp(t), r, abs_tol, rel_tol, max_sub)
    else:
        ell, s = len_pos(ua, ub, scale * math.exp(t), r, mode == MODE_TURN,
                         abs_tol, rel_tol, max_sub)
    return ell - dq, s


@njit(cache=True)
def _brent(mode, xa, xb, fa, fb, ua, ub, dq, r, scale, abs_tol, rel_tol,
           max_sub):
    """Brent's method on a sign-changing bracket (scipy brentq logic)."""
    xtol = 1e-14
    rtol = 4.0 * _EPS
    xpre = xa
    xcur = xb
    fpre = fa
    fcur = fb
    xblk = 0.0
    fblk = 0.0
    spre = 0.0
    scur = 0.0
    status = OK
    if fpre == 0.0:
        return xpre, OK
    if fcur == 0.0:
        return xcur, OK
    for _ in range(200):
        if fpre != 0.0 and fcur != 0.0 and ((fpre > 0.0) != (fcur > 0.0)):
            xblk = xpre
            fblk = fpre
            spre = xcur - xpre
            scur = spre
        if abs(fblk) < abs(fcur):
            xpre = xcur
            xcur = xblk
            xblk = xpre
            fpre = fcur
            fcur = fblk
            fblk = fpre
        delta = 0.5 * (xtol + rtol * abs(xcur))
        sbis = 0.5 * (xblk - xcur)
        if fcur == 0.0 or abs(sbis) < delta:
            return xcur, status
        if abs(spre) > delta and abs(fcur) < abs(fpre):
            if xpre == xblk:
                stry = -fcur * (xcur - xpre) / (fcur - fpre)
            else:
                dpre = (fpre - fcur) / (xpre - xcur)
                dblk = (fblk - fcur) / (xblk - xcur)
                stry = -fcur * (fblk * dblk - fpre * dpre) / (
                    dblk * dpre * (fblk - fpre))
            if 2.0 * abs(stry) < min(abs(spre), 3.0 * abs(sbis) - delta):
                spre = scur
                scur = stry
            else:
                spre = sbis
                scur = sbis
        else:
            spre = sbis
            scur = sbis
        xpre = xcur
        fpre = fcur
        if abs(scur) > delta:
            xcur += scur
        elif sbis > 0.0:
            xcur += delta
        else:
            xcur -= delta
        fcur, s = _objective(mode, xcur, ua, ub, dq, r, scale, abs_tol,
                             rel_tol, max_sub)
        status = max(status, s)
    return xcur, ERR_NOCONV


@njit(cache=True)
def _solve_log(mode, t0, tmax, step, ua, ub, dq, r, scale, abs_tol, rel_tol,
               max_sub):
    """Expand a bracket from ``t0`` (never above ``tmax``) and run Brent."""
    decreasing = mode != MODE_MONO
    t0 = min(t0, tmax)
    f0, status = _objective(mode, t0, ua, ub, dq, r, scale, abs_tol, rel_tol,
                            max_sub)
    if f0 == 0.0:
        return t0, status
    move_up = (f0 > 0.0) == decreasing
    for _ in range(400):
        if move_up:
            if t0 >= tmax:
                return t0, ERR_NOBRACKET
            t1 = min(t0 + step, tmax)
        else:
            t1 = t0 - step
            if t1 < -740.0:
                return t0, ERR_NOBRACKET
        f1, s = _objective(mode, t1, ua, ub, dq, r, scale, abs_tol, rel_tol,
                           max_sub)
        status = max(status, s)
        if f1 == 0.0:
            return t1, status
        if (f1 > 0.0) != (f0 > 0.0):
            t, s = _brent(mode, t0, t1, f0, f1, ua, ub, dq, r, scale,
                          abs_tol, rel_tol, max_sub)
            return t, max(status, s)
        t0 = t1
        f0 = f1
        step *= 2.0
    return t0, ERR_NOBRACKET


@njit(cache=True)
def solve_k_sinh(ua, ub, dq, r, k_guess, abs_tol, rel_tol, max_sub):
    """K < 0 matching the length ``dq``; returns ``(K, status)``."""
    if same_sign(ua, ub):
        ell0 = abs(math.log(abs(ub) / abs(ua)))
        if dq >= ell0:
            return 0.0, ERR_NOBRACKET
    du = abs(ub - ua)
    # the integrand is below 1/k, so k = du/dq gives a length <= dq;
    # the extra unit keeps the bound strict under roundoff
    tmax = r * math.log(du / dq) + 1.0
    if k_guess < 0.0:
        t0 = math.log(-k_guess)
        step = 1e-2
    else:
        t0 = tmax
        step = 1.0
    t, status = _solve_log(MODE_SINH, t0, tmax, step, ua, ub, dq, r, 1.0,
                           abs_tol, rel_tol, max_sub)
    return -math.exp(t), status


@njit(cache=True)
def cosh_split(ua, ub, r, abs_tol, rel_tol, max_sub):
    """Exponential length and the monotone-to-turning switch length.

    Returns ``(ell0, ell_star, status)``: lengths at K -> 0 and at
    K = min(|ua|, |ub|)**r for same-sign heights.
    """
    a = abs(ua)
    b = abs(ub)
    m = min(a, b)
    big = max(a, b)
    ell0 = math.log(big / m)
    zb = zscaled(big, m, r)
    ell_star, s = g_plus(0.0, zb, r, abs_tol, rel_tol, max_sub)
    return ell0, ell_star, s


@njit(cache=True)
def solve_k_cosh(ua, ub, dq, r, k_guess, abs_tol, rel_tol, max_sub):
    """K > 0 matching ``dq``; returns ``(K, turning, status)``."""
    if not same_sign(ua, ub):
        return 0.0, False, ERR_DOMAIN
    ell0, ell_star, s0 = cosh_split(ua, ub, r, abs_tol, rel_tol, max_sub)
    if dq <= ell0:
        return 0.0, False, ERR_NOBRACKET
    m = min(abs(ua), abs(ub))
    scale = m ** r
    turning = dq > ell_star
    if turning and ell_star == 0.0 and dq > 0.0:
        turning = True
    mode = MODE_TURN if turning else MODE_MONO
    if dq == ell_star:
        return scale, turning, s0
    if k_guess > 0.0 and k_guess < scale:
        t0 = math.log(k_guess / scale)
        step = 1e-2
    else:
        t0 = 0.0
        step = 1.0
    t, status = _solve_log(mode, t0, 0.0, step, ua, ub, dq, r, scale,
                           abs_tol, rel_tol, max_sub)
    return scale * math.exp(t), turning, max(status, s0)


EXP_FIT_TOL = 1e-10


@njit(cache=True)
def interval_solve(ua, ub, dq, r, k_guess, abs_tol, rel_tol, max_sub):
    """Classify one interior interval and solve for its constant.

    Returns ``(branch, K, turning, status)``.
    """
    if ua == 0.0 and ub == 0.0:
        return B_EXP, 0.0, False, OK
    if not same_sign(ua, ub):
        K, s = solve_k_sinh(ua, ub, dq, r, k_guess, abs_tol, rel_tol, max_sub)
        return B_SINH, K, False, s
    ell0 = abs(math.log(abs(ub) / abs(ua)))
    if abs(ell0 - dq) <= EXP_FIT_TOL:
        return B_EXP, 0.0, False, OK
    if dq < ell0:
        K, s = solve_k_sinh(ua, ub, dq, r, k_guess, abs_tol, rel_tol, max_sub)
        if s == ERR_NOBRACKET:
            return B_EXP, 0.0, False, OK
        return B_SINH, K, False, s
    K, turning, s = solve_k_cosh(ua, ub, dq, r, k_guess, abs_tol, rel_tol,
                                 max_sub)
    if s == ERR_NOBRACKET:
        return B_EXP, 0.0, False, OK
    return B_COSH, K, turning, s


@njit(cache=True)
def slope_magnitude(u, K, r):
    """(|u|**r - K)**(1/r) without overflow."""
    a = abs(u)
    if K == 0.0:
        return a
    if K < 0.0:
        k = (-K) ** (1.0 / r)
        m = max(a, k)
        return m * ((a / m) ** r + (k / m) ** r) ** (1.0 / r)
    k = K ** (1.0 / r)
    return k * zscaled(u, k, r)


@njit(cache=True)
def sgn(x):
    if x > 0.0:
        return 1.0
    if x < 0.0:
        return -1.0
    return 0.0


@njit(cache=True)
def interval_slopes(ua, ub, K, branch, turning, r):
    """One-sided slopes at the left and right ends of an interior interval."""
    ma = slope_magnitude(ua, K, r)
    mb = slope_magnitude(ub, K, r)
    if branch == B_COSH and turning:
        s = sgn(ua)
        return -s * ma, s * mb
    d = sgn(ub - ua)
    return d * ma, d * mb


@njit(cache=True)
def signed_pow(s, beta):
    if s == 0.0:
        return 0.0
    return sgn(s) * abs(s) ** beta


@njit(cache=True)
def profile_kernel(q, uh, r, k_guess, abs_tol, rel_tol, max_sub):
    """Interval constants, slopes and jump momenta for heights ``uh``.

    Returns ``(K, branch, turning, s_left, s_right, P, status)`` where
    ``s_left[i]``/``s_right[i]`` are the one-sided slopes at ``q[i]``.
    """
    n = q.shape[0]
    K = np.zeros(n + 1)
    branch = np.zeros(n + 1, dtype=np.int64)
    turning = np.zeros(n + 1, dtype=np.bool_)
    s_left = np.empty(n)
    s_right = np.empty(n)
    P = np.empty(n)
    branch[0] = B_TAIL_LEFT
    branch[n] = B_TAIL_RIGHT
    s_left[0] = uh[0]
    s_right[n - 1] = -uh[n - 1]
    status = OK
    for j in range(1, n):
        ua = uh[j - 1]
        ub = uh[j]
        dq = q[j] - q[j - 1]
        b, kj, tj, s = interval_solve(ua, ub, dq, r, k_guess[j], abs_tol,
                                      rel_tol, max_sub)
        status = max(status, s)
        K[j] = kj
        branch[j] = b
        turning[j] = tj
        sa, sb = interval_slopes(ua, ub, kj, b, tj, r)
        s_right[j - 1] = sa
        s_left[j] = sb
    for i in range(n):
        P[i] = -(signed_pow(s_right[i], r - 1.0)
                 - signed_pow(s_left[i], r - 1.0)) / (r - 1.0)
    return K, branch, turning, s_left, s_right, P, status


# ---------------------------------------------------------------------------
# point inversion and pointwise quantities on interior segments


@njit(cache=True)
def _shift_log_sinh(zeta):
    """log(sinh(zeta)) for zeta > 0 without overflow."""
    if zeta > 20.0:
        return zeta - math.log(2.0) + math.log1p(-math.exp(-2.0 * zeta))
    return math.log(math.sinh(zeta))


@njit(cache=True)
def _sinh_path_length(za, z, r, abs_tol, rel_tol, max_sub):
    """Scaled length from signed za to signed z on a K < 0 segment."""
    if za == z:
        return 0.0, OK
    aa = abs(za)
    az = abs(z)
    if same_sign(za, z) or za == 0.0 or z == 0.0:
        return g_minus(min(aa, az), max(aa, az), r, abs_tol, rel_tol, max_sub)
    v1, s1 = g_minus(0.0, aa, r, abs_tol, rel_tol, max_sub)
    v2, s2 = g_minus(0.0, az, r, abs_tol, rel_tol, max_sub)
    return v1 + v2, max(s1, s2)


@njit(cache=True)
def _z_of_zeta_sinh(zeta):
    return math.sinh(zeta)


@njit(cache=True)
def invert_sinh(za, zb, d, r, abs_tol, rel_tol, max_sub):
    """Signed scaled height z at scaled distance ``d`` from ``za`` toward ``zb``."""
    lo = math.asinh(za)
    hi = math.asinh(zb)
    sign = 1.0 if hi > lo else -1.0
    if d <= 0.0:
        return za, OK
    # Newton in zeta = asinh(z), safeguarded by the bracket [lo, hi]
    a = min(lo, hi)
    b = max(lo, hi)
    zeta = lo + sign * min(d, abs(hi - lo))
    zeta = min(max(zeta, a), b)
    status = OK
    for _ in range(100):
        z = math.sinh(zeta)
        ell, s = _sinh_path_length(za, z, r, abs_tol, rel_tol, max_sub)
        status = max(status, s)
        f = ell - d
        # ell increases as zeta moves from lo toward hi
        if (f > 0.0) == (sign > 0.0):
            b = zeta
        else:
            a = zeta
        dfd = math.cosh(zeta) * (1.0 + abs(z) ** r) ** (-1.0 / r)
        if abs(f) <= 1e-15 * max(1.0, d):
            return z, status
        step = sign * f / dfd
        new = zeta - step
        if not (a < new < b):
            new = 0.5 * (a + b)
        if abs(new - zeta) <= 1e-15 * max(1.0, abs(zeta)):
            return math.sinh(new), status
        zeta = new
    return math.sinh(zeta), ERR_NOCONV


@njit(cache=True)
def _z_of_zeta_cosh(zeta, r):
    # Z = sinh((r-1) zeta)**(1/(r-1))
    s = (r - 1.0) * zeta
    if s <= 0.0:
        return 0.0
    return math.exp(_shift_log_sinh(s) / (r - 1.0))


@njit(cache=True)
def invert_cosh(d, zmax, r, abs_tol, rel_tol, max_sub):
    """Scaled Z in [0, zmax] with g_plus(0, Z) = d."""
    if d <= 0.0:
        return 0.0, OK
    a = 0.0
    b = math.asinh(zmax ** (r - 1.0)) / (r - 1.0) if zmax < 1e30 else (
        (math.log(2.0) + (r - 1.0) * math.log(zmax)) / (r - 1.0))
    zeta = min(d, b)
    status = OK
    for _ in range(100):
        Z = _z_of_zeta_cosh(zeta, r)
        ell, s = g_plus(0.0, Z, r, abs_tol, rel_tol, max_sub)
        status = max(status, s)
        f = ell - d
        if f > 0.0:
            b = zeta
        else:
            a = zeta
        if abs(f) <= 1e-15 * max(1.0, d):
            return Z, status
        if Z > 1.0:
            dfd = math.cosh((r - 1.0) * zeta) * Z ** (1.0 - r) * (
                1.0 + Z ** (-r)) ** ((1.0 - r) / r)
        else:
            dfd = math.cosh((r - 1.0) * zeta) * (Z ** r + 1.0) ** ((1.0 - r) / r)
        new = zeta - f / dfd
        if not (a < new < b):
            new = 0.5 * (a + b)
        if abs(new - zeta) <= 1e-15 * max(1.0, abs(zeta)):
            return _z_of_zeta_cosh(new, r), status
        zeta = new
    return _z_of_zeta_cosh(zeta, r), ERR_NOCONV


@njit(cache=True)
def _psi_neg_piece(lo, hi, r, c, abs_tol, rel_tol, max_sub):
    return adaptive(PSI_NEG, lo, hi, r, c, False, abs_tol, rel_tol, max_sub)


@njit(cache=True)
def segment_point(branch, xl, xr, ua, ub, K, turning, r, x, with_psi,
                  abs_tol, rel_tol, max_sub):
    """Evaluate ``(u, u_x, psi_increment, status)`` at ``x`` on an interior
    segment; ``psi_increment`` is the integral of signed_pow(u, r-1) from xl."""
    d = x - xl
    status = OK
    psi = 0.0
    if branch == B_EXP:
        if ua == 0.0:
            return 0.0, 0.0, 0.0, OK
        sig = 1.0 if abs(ub) > abs(ua) else -1.0
        u = ua * math.exp(sig * d)
        if with_psi:
            psi = sgn(ua) * abs(abs(u) ** (r - 1.0) - abs(ua) ** (r - 1.0)) / (
                r - 1.0)
        return u, sig * u, psi, OK
    if branch == B_SINH:
        c = -K
        k = c ** (1.0 / r)
        z, status = invert_sinh(ua / k, ub / k, d, r, abs_tol, rel_tol,
                                max_sub)
        u = k * z
        ux = sgn(ub - ua) * slope_magnitude(u, K, r)
        if with_psi:
            if same_sign(ua, u) or ua == 0.0 or u == 0.0:
                lo = min(abs(ua), abs(u))
                hi = max(abs(ua), abs(u))
                v, e, s = _psi_neg_piece(lo, hi, r, c, abs_tol, rel_tol,
                                         max_sub)
                psi = sgn(ua + u) * v
                status = max(status, s)
            else:
                v1, e1, s1 = _psi_neg_piece(0.0, abs(ua), r, c, abs_tol,
                                            rel_tol, max_sub)
                v2, e2, s2 = _psi_neg_piece(0.0, abs(u), r, c, abs_tol,
                                            rel_tol, max_sub)
                psi = sgn(ua) * v1 + sgn(u) * v2
                status = max(status, max(s1, s2))
        return u, ux, psi, status
    # cosh-like
    k = K ** (1.0 / r)
    sa = sgn(ua)
    za = zscaled(ua, k, r)
    zb = zscaled(ub, k, r)
    ga, status = g_plus(0.0, za, r, abs_tol, rel_tol, max_sub)
    if turning:
        if d <= ga:
            dist = ga - d
            before = True
            zmax = za
        else:
            dist = d - ga
            before = False
            zmax = zb
    elif abs(ub) > abs(ua):
        dist = ga + d
        before = False
        zmax = zb
    else:
        dist = ga - d
        before = True
        zmax = za
    Z, s = invert_cosh(dist, max(zmax, 1e-300), r, abs_tol, rel_tol, max_sub)
    status = max(status, s)
    u = sa * height_from_z(Z, k, r)
    v = k * Z
    ux = -sa * v if before else sa * v
    if with_psi:
        va = k * za
        if turning and not before:
            p1, e1, s1 = integrate_v(PSI_POS, 0.0, va, r, K, abs_tol, rel_tol,
                                     max_sub)
            p2, e2, s2 = integrate_v(PSI_POS, 0.0, v, r, K, abs_tol, rel_tol,
                                     max_sub)
            psi = sa * (p1 + p2)
            status = max(status, max(s1, s2))
        else:
            p, e, s1 = integrate_v(PSI_POS, min(va, v), max(va, v), r, K,
                                   abs_tol, rel_tol, max_sub)
            psi = sa * p
            status = max(status, s1)
    return u, ux, psi, status


@njit(cache=True)
def segment_energy(branch, ua, ub, K, turning, r, abs_tol, rel_tol, max_sub):
    """Integrals of |u|**r and |u_x|**r over an interior segment."""
    if branch == B_EXP:
        val = abs(abs(ub) ** r - abs(ua) ** r) / r
        return val, val, OK
    a = abs(ua)
    b = abs(ub)
    if branch == B_SINH:
        c = -K
        if same_sign(ua, ub):
            lo = min(a, b)
            hi = max(a, b)
            iu, e, s1 = adaptive(E_NEG_U, lo, hi, r, c, False, abs_tol,
                                 rel_tol, max_sub)
            iux, e, s2 = adaptive(E_NEG_UX, lo, hi, r, c, False, abs_tol,
                                  rel_tol, max_sub)
            return iu, iux, max(s1, s2)
        iu = 0.0
        iux = 0.0
        status = OK
        for hi in (a, b):
            v1, e, s1 = adaptive(E_NEG_U, 0.0, hi, r, c, False, abs_tol,
                                 rel_tol, max_sub)
            v2, e, s2 = adaptive(E_NEG_UX, 0.0, hi, r, c, False, abs_tol,
                                 rel_tol, max_sub)
            iu += v1
            iux += v2
            status = max(status, max(s1, s2))
        return iu, iux, status
    k = K ** (1.0 / r)
    va = k * zscaled(ua, k, r)
    vb = k * zscaled(ub, k, r)
    if turning:
        iu = 0.0
        iux = 0.0
        status = OK
        for hi in (va, vb):
            v1, e, s1 = integrate_v(E_POS_U, 0.0, hi, r, K, abs_tol, rel_tol,
                                    max_sub)
            v2, e, s2 = integrate_v(E_POS_UX, 0.0, hi, r, K, abs_tol, rel_tol,
                                    max_sub)
            iu += v1
            iux += v2
            status = max(status, max(s1, s2))
        return iu, iux, status
    lo = min(va, vb)
    hi = max(va, vb)
    iu, e, s1 = integrate_v(E_POS_U, lo, hi, r, K, abs_tol, rel_tol, max_sub)
    iux, e, s2 = integrate_v(E_POS_UX, lo, hi, r, K, abs_tol, rel_tol, max_sub)
    return iu, iux, max(s1, s2)


@njit(cache=True)
def turning_offset(ua, K, r, abs_tol, rel_tol, max_sub):
    """Distance from the left end of a turning cosh segment to its minimum."""
    k = K ** (1.0 / r)
    return g_plus(0.0, zscaled(ua, k, r), r, abs_tol, rel_tol, max_sub)
