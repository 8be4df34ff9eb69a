import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from rchpeakon.core import BranchKind, DomainError, PeakonState, signed_pow
from rchpeakon.profile import (
    classify_interval,
    energy,
    evaluate,
    heights_to_profile,
    momenta_from_profile,
    profile_from_dict,
    profile_to_dict,
    profile_to_json,
    sample,
    solve_profile,
)


def test_classify_examples():
    # [PAPER] opposite signs force a root; [PAPER] exponential fit; [DERIVED] cosh
    assert classify_interval(1.0, -1.0, 1.0, 2.0) is BranchKind.SINH_LIKE
    assert classify_interval(1.0, math.e, 1.0, 3.0) is BranchKind.EXP_INTERIOR
    c = math.cosh(1.0)
    assert classify_interval(c, c, 2.0, 2.0) is BranchKind.COSH_LIKE


def test_exact_cosh_segment_constant():
    # [DERIVED] u = cosh(x - 1) on [0, 2] has K = 1 at r = 2
    c = math.cosh(1.0)
    prof = heights_to_profile([0.0, 2.0], [c, c], 2.0)
    assert prof.K[1] == pytest.approx(1.0, rel=1e-10)
    seg = prof.segments[1]
    assert seg.turning_x == pytest.approx(1.0, abs=1e-10)
    assert sample(prof, [seg.turning_x])[0] == pytest.approx(1.0, rel=1e-10)


def test_single_peakon():
    # [PAPER] isolated peakon, tails K = 0, P = [2]
    prof = heights_to_profile([0.0], [1.0], 2.0)
    assert prof.P.tolist() == pytest.approx([2.0], rel=1e-14)
    assert prof.K.tolist() == [0.0, 0.0]
    np.testing.assert_allclose(sample(prof, [-1.0, 0.0, 2.0]),
                               [math.exp(-1.0), 1.0, math.exp(-2.0)], rtol=1e-14)


def test_separated_pair_momenta():
    # [DERIVED] tails decouple: two single-peakon formulas
    prof = heights_to_profile([0.0, 40.0], [1.5, 1.0], 2.0)
    np.testing.assert_allclose(prof.P, [3.0, 2.0], atol=1e-8)


def test_wide_equal_pair_is_cosh():
    prof = heights_to_profile([0.0, 10.0], [1.0, 1.0], 2.0)
    seg = prof.segments[1]
    assert seg.branch is BranchKind.COSH_LIKE
    assert seg.slope_left == pytest.approx(-1.0, abs=1e-3)
    assert seg.slope_right == pytest.approx(1.0, abs=1e-3)


@pytest.mark.parametrize("r", [2.0, 3.0, 5.0])
def test_antisymmetric_pair_is_odd(r):
    prof = heights_to_profile([0.0, 3.0], [1.0, -1.0], r)
    assert prof.segments[1].branch is BranchKind.SINH_LIKE
    assert prof.K[1] < 0
    assert prof.P[0] == pytest.approx(-prof.P[1], rel=1e-12)
    assert prof.P[0] > 0
    x = np.linspace(-2.0, 1.4, 7)
    np.testing.assert_allclose(sample(prof, x), -sample(prof, 3.0 - x), atol=1e-11)
    assert abs(sample(prof, [1.5])[0]) < 1e-11


def test_classical_ch_momenta():
    # [DERIVED] at r = 2 the profile is sum_j p_j exp(-|x - Q_j|) and P = 2 p
    Q = np.array([0.0, 0.7, 2.5])
    uh = np.array([1.2, 0.5, -0.8])
    G = np.exp(-np.abs(Q[:, None] - Q[None, :]))
    p = np.linalg.solve(G, uh)
    prof = heights_to_profile(Q, uh, 2.0)
    np.testing.assert_allclose(prof.P, 2.0 * p, rtol=1e-10)
    x = np.linspace(-3.0, 5.0, 41)
    exact = np.exp(-np.abs(x[:, None] - Q[None, :])) @ p
    np.testing.assert_allclose(sample(prof, x), exact, atol=1e-11)


def test_solve_profile_examples():
    prof = solve_profile(PeakonState(0.0, [0.0], [2.0]), 2.0)
    assert prof.uhat[0] == pytest.approx(1.0, rel=1e-13)
    prof = solve_profile(PeakonState(0.0, [0.0, 2.0], [1.3, -1.3]), 3.0)
    assert prof.uhat[0] == pytest.approx(-prof.uhat[1], rel=1e-10)
    assert prof.K[1] < 0


def test_round_trip_overtaking():
    # [DERIVED] self-consistency of heights -> momenta -> heights
    ref = heights_to_profile([1.0, 6.0], [1.5, 1.0], 2.0)
    P = momenta_from_profile(ref)
    back = solve_profile(PeakonState(0.0, ref.Q, P), 2.0)
    np.testing.assert_allclose(back.uhat, [1.5, 1.0], atol=1e-9)


@settings(max_examples=25, deadline=None)
@given(st.integers(1, 3), st.sampled_from([2.0, 3.0, 4.5, 6.0]),
       st.lists(st.floats(0.3, 2.0), min_size=3, max_size=3),
       st.lists(st.booleans(), min_size=3, max_size=3),
       st.lists(st.floats(0.3, 3.0), min_size=2, max_size=2))
def test_round_trip_random(n, r, mags, flips, gaps):
    uh = np.array([(-m if f else m) for m, f in zip(mags, flips)])[:n]
    Q = np.concatenate([[0.0], np.cumsum(gaps)])[:n]
    ref = heights_to_profile(Q, uh, r)
    back = solve_profile(PeakonState(0.0, Q, ref.P), r)
    np.testing.assert_allclose(momenta_from_profile(back), ref.P,
                               atol=1e-9 * max(1.0, np.max(np.abs(ref.P))))


def test_single_peakon_energy():
    # [DERIVED] H = L = 1 at r = 2; H = 2|u|^r / r in general
    d = energy(heights_to_profile([0.0], [1.0], 2.0))
    assert d.H == pytest.approx(1.0, rel=1e-14)
    assert d.L == pytest.approx(1.0, rel=1e-14)
    for r in (3.0, 5.5):
        d = energy(heights_to_profile([0.0], [-1.3], r))
        assert d.H == pytest.approx(2.0 * 1.3 ** r / r, rel=1e-13)
        assert d.H == pytest.approx((r - 1.0) * d.L, rel=1e-15)


def _aligned_grid(Q, lo, hi, n):
    """Uniform-ish grid with every peak as a node."""
    knots = np.concatenate([[lo], np.asarray(Q, dtype=float), [hi]])
    pieces = []
    for a, b in zip(knots[:-1], knots[1:]):
        m = max(2, int(round(n * (b - a) / (hi - lo))))
        pieces.append(np.linspace(a, b, m + 1)[:-1])
    return np.concatenate(pieces + [[hi]])


@pytest.mark.parametrize("r", [2.0, 4.0, 6.0])
def test_energy_matches_trapezoid(r):
    # [DERIVED] trapezoid rule on a fine grid, peaks on nodes
    prof = heights_to_profile([1.0, 6.0], [1.5, 1.0], r)
    x = _aligned_grid(prof.Q, -12.0, 19.0, 2 ** 14)
    u, ux, _ = evaluate(prof, x)
    # one-sided slopes at peaks would bias the kink cells: use cell midpoints
    xm = 0.5 * (x[1:] + x[:-1])
    um, uxm, _ = evaluate(prof, xm)
    h = np.diff(x)
    dens_u = np.abs(um) ** r
    dens_ux = np.abs(uxm) ** r
    # Simpson with endpoint trapezoid values for |u|^r and midpoint for |u_x|^r
    Iu = np.sum(h * (np.abs(u[:-1]) ** r + 4 * dens_u + np.abs(u[1:]) ** r) / 6)
    Iux = np.sum(h * dens_ux)
    L = (Iu + Iux / (r - 1.0)) / r
    assert (r - 1.0) * L == pytest.approx(energy(prof).H, rel=1e-5)


@pytest.mark.parametrize("r", [2.0, 3.0, 6.0])
def test_pairing_identity(r):
    # sum P uhat = int(|u|^r + |u_x|^r/(r-1)) = r L
    prof = heights_to_profile([0.0, 0.9, 2.0], [1.0, -0.6, 0.7], r)
    d = energy(prof)
    assert float(prof.P @ prof.uhat) == pytest.approx(r * d.L, rel=1e-8)


def test_reflection_covariance():
    a = heights_to_profile([0.0, 1.5], [1.2, 0.4], 4.0)
    b = heights_to_profile([0.0, 1.5], [-1.2, -0.4], 4.0)
    np.testing.assert_allclose(b.P, -a.P, rtol=1e-13)
    assert energy(b).H == pytest.approx(energy(a).H, rel=1e-13)


def test_sharper_minimum_at_larger_r():
    # [PAPER] "much sharper minimum between the two peaks" for r = 6
    mins = {}
    for r in (2.0, 6.0):
        prof = heights_to_profile([1.0, 6.0], [1.5, 1.0], r)
        x = np.linspace(1.0, 6.0, 501)
        mins[r] = float(np.min(sample(prof, x)))
    assert mins[6.0] < mins[2.0]


def test_json_round_trip():
    prof = heights_to_profile([0.0, 2.0], [1.0, 0.5], 3.0)
    data = json.loads(profile_to_json(prof))
    for key in ("r", "Q", "P", "uhat", "K", "branches", "turning_points"):
        assert key in data
    back = profile_from_dict(data)
    np.testing.assert_allclose(back.P, prof.P, rtol=1e-12)
    assert profile_to_dict(back)["branches"] == data["branches"]


def test_input_validation():
    with pytest.raises(DomainError):
        heights_to_profile([0.0, 1.0], [1.0], 2.0)
    with pytest.raises(DomainError):
        heights_to_profile([0.0], [1.0], 1.5)
