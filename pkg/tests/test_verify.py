import math

import numpy as np
import pytest

from rchpeakon.core import PeakonState
from rchpeakon.dynamics import IntegratorSettings, integrate
from rchpeakon.profile import energy, heights_to_profile
from rchpeakon.verify import (
    BumpKind,
    SnapshotWindow,
    TestFunctionFamily,
    check_r1_closed_forms,
    check_scaling_orbit,
    check_travelling_reduction,
    check_X2_first_integral,
    integrate_steady,
    perturb_profile_K,
    trajectory_window,
    travelling_window,
    weak_residual,
)


@pytest.fixture(scope="module")
def overtaking_state():
    prof = heights_to_profile([1.0, 6.0], [1.5, 1.0], 2.0)
    return PeakonState(0.0, prof.Q, prof.P)


@pytest.fixture(scope="module")
def r1_results():
    return {c.name: c for c in check_r1_closed_forms()}


@pytest.mark.parametrize("kind", list(BumpKind))
def test_antiderivative(kind):
    fam = TestFunctionFamily(kind, [0.0, 1.5], [0.8, 1.2])
    x = np.linspace(-0.5, 2.0, 11)
    h = 1e-5
    d = (fam.antiderivatives(x + h) - fam.antiderivatives(x - h)) / (2 * h)
    np.testing.assert_allclose(d, fam.values(x), atol=1e-8)
    dd = (fam.values(x + h) - fam.values(x - h)) / (2 * h)
    np.testing.assert_allclose(dd, fam.derivatives(x), atol=1e-7)
    lo, hi = fam.support()
    assert np.all(fam.values([lo - 1e-9, hi + 1e-9]) < 1e-30)


def test_family_validation():
    with pytest.raises(ValueError):
        TestFunctionFamily(BumpKind.GAUSSIAN, [0.0, 1.0], [1.0, -1.0])
    assert TestFunctionFamily.spread(0.0, 1.0).count == 20


@pytest.mark.parametrize("r", [2.0, 4.0])
def test_weak_residual_order_on_travelling_wave(r):
    # [DERIVED] exact solution: residual is time-discretization error only
    phis = TestFunctionFamily.spread(-3.0, 4.0, 20)
    dts = [4e-2, 2e-2, 1e-2]
    errs = [np.max(np.abs(weak_residual(travelling_window(1.0, r, 1.0, d), phis)))
            for d in dts]
    slope = np.polyfit(np.log(dts), np.log(errs), 1)[0]
    assert slope >= 1.9


def test_weak_residual_compact_bumps():
    phis = TestFunctionFamily.spread(-2.0, 3.0, 6, kind=BumpKind.COMPACT,
                                     width=1.5)
    res = weak_residual(travelling_window(1.0, 3.0, 1.0, 1e-3), phis)
    assert np.max(np.abs(res)) < 1e-5


def test_weak_residual_far_test_function(overtaking_state):
    # [TRIVIAL] phi where u, u_x and psi all vanish
    w = trajectory_window(overtaking_state, 2.0, 3.0, 1e-3)
    far = TestFunctionFamily(BumpKind.GAUSSIAN, [-60.0], [1.0])
    assert abs(weak_residual(w, far)[0]) <= 1e-10


def test_weak_residual_overtaking(overtaking_state):
    # [DERIVED] 20 Gaussian bumps at t = 3; halving dt twice
    phis = TestFunctionFamily.spread(-2.0, 9.0, 20)
    res = {}
    for dt in (4e-3, 2e-3, 1e-3):
        w = trajectory_window(overtaking_state, 2.0, 3.0, dt)
        res[dt] = float(np.max(np.abs(weak_residual(w, phis))))
    H = energy(w.profiles[1]).H
    assert res[1e-3] <= 1e-4 * phis.sup_norm() * H
    assert res[1e-3] < res[4e-3]

    # negative control: 1% error in the segment constants
    bad = SnapshotWindow(tuple(perturb_profile_K(p, 1.01) for p in w.profiles), w.dt)
    assert np.max(np.abs(weak_residual(bad, phis))) >= 100.0 * res[1e-3]


def test_scaling_orbit_identity():
    # [TRIVIAL] lam = 1 repeats the run bit for bit
    prof = heights_to_profile([1.0, 6.0], [1.5, 1.0], 4.0)
    s = PeakonState(0.0, prof.Q, prof.P)
    st = IntegratorSettings(t_end=2.0, output_times=(0.5, 1.0, 1.5, 2.0))
    traj = integrate(s, 4.0, st, keep_profiles=False)
    rep = check_scaling_orbit(traj, 1.0, 4.0, st)
    assert rep.position_error == 0.0 and rep.momentum_error == 0.0


def test_scaling_orbit_single_peak():
    # [TRIVIAL] closed-form orbit
    prof = heights_to_profile([0.0], [1.0], 3.0)
    s = PeakonState(0.0, prof.Q, prof.P)
    st = IntegratorSettings(t_end=4.0, output_times=tuple(np.arange(0.5, 4.01, 0.5)))
    traj = integrate(s, 3.0, st, keep_profiles=False)
    rep = check_scaling_orbit(traj, 2.0, 3.0, st)
    assert rep.position_error <= 1e-12
    assert rep.momentum_error <= 1e-12
    assert rep.momentum_exponent == pytest.approx(2.0, abs=1e-12)


def test_scaling_orbit_overtaking_and_tolerance():
    # [DERIVED] two independent integrations; errors shrink with rtol
    prof = heights_to_profile([1.0, 6.0], [1.5, 1.0], 4.0)
    s = PeakonState(0.0, prof.Q, prof.P)
    errs = []
    for rtol in (1e-6, 1e-9):
        st = IntegratorSettings(t_end=10.0, rtol=rtol, atol=rtol * 1e-2,
                                output_times=tuple(np.arange(1.0, 10.01, 1.0)))
        traj = integrate(s, 4.0, st, keep_profiles=False)
        errs.append(check_scaling_orbit(traj, 2.0, 4.0, st))
    assert errs[1].position_error <= 1e-5
    assert errs[1].position_error < errs[0].position_error
    assert errs[1].momentum_exponent == pytest.approx(3.0, abs=1e-6)


@pytest.mark.parametrize("r", [2.0, 5.0])
def test_travelling_reduction(r):
    # [PAPER] r = 2; [DERIVED] r = 5
    grid = np.linspace(-6.0, 6.0, 1201)
    assert check_travelling_reduction(1.0, r, grid) <= 1e-10
    assert check_travelling_reduction(0.0, r, grid) == 0.0


def test_travelling_reduction_literal_powers_fail_at_r5():
    # the reduction as displayed uses bare real powers of f'; with f' < 0
    # these are undefined, so only the absolute-value reading can hold
    grid = np.linspace(-6.0, 6.0, 1201)
    assert not check_travelling_reduction(1.0, 5.0, grid, "literal") <= 1e-10


def test_first_integral_on_steady_solution():
    # [DERIVED] DOP853 solution, fourth-order differences at h = 1e-3
    x, f = integrate_steady(2.0, h=1e-3)
    assert check_X2_first_integral(x, f, 2.0) <= 1e-6
    x, f = integrate_steady(3.5, h=1e-3)
    assert check_X2_first_integral(x, f, 3.5) <= 1e-6


def test_first_integral_controls():
    x = np.linspace(0.0, 1.0, 201)
    assert check_X2_first_integral(x, np.full_like(x, 1.7), 3.0) == 0.0
    assert check_X2_first_integral(x, np.exp(-x ** 2), 2.0) > 0.1


def test_r1_X2_form(r1_results):
    assert r1_results["r1-X2-stated"].value <= 1e-8


def test_r1_X1_constant(r1_results):
    assert r1_results["r1-X1-constant"].value == 0.0


def test_r1_X3_corrected_form(r1_results):
    assert r1_results["r1-X3-corrected"].value <= 1e-6


def test_r1_X3_stated_form_is_inconsistent(r1_results):
    # the displayed X3 solution does not satisfy its reduced ODE
    assert not r1_results["r1-X3-stated"].passed
