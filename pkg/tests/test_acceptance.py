"""Acceptance criteria 1-10, each at its stated tolerance.

Every test records a one-line PASS/FAIL verdict that is printed in the
terminal summary.
"""

import numpy as np
import pytest

from conftest import record
from rchpeakon.core import PeakonState
from rchpeakon.dynamics import (
    COLLISION,
    REACHED_END,
    IntegratorSettings,
    conservation_report,
    integrate,
)
from rchpeakon.oracle import compare_with_oracles, random_configs
from rchpeakon.profile import energy, heights_to_profile
from rchpeakon.scenarios import (
    builtin_scenarios,
    collision_time_sweep,
    initial_state,
    lookup,
    phase_shift_sweep,
    run_scenario,
)
from rchpeakon.verify import (
    TestFunctionFamily,
    check_r1_closed_forms,
    check_scaling_orbit,
    check_travelling_reduction,
    check_X2_first_integral,
    integrate_steady,
    trajectory_window,
    travelling_window,
    weak_residual,
)


def _state(Q, uh, r):
    prof = heights_to_profile(Q, uh, r)
    return PeakonState(0.0, prof.Q, prof.P)


def test_criterion_01_travelling_wave():
    worst_q = worst_p = 0.0
    for r in (2.0, 4.0, 6.0):
        s = _state([0.0], [1.0], r)
        traj = integrate(s, r, IntegratorSettings(scheme="rk4", dt=1e-2, t_end=10.0),
                         keep_profiles=False)
        assert traj.termination.kind == REACHED_END
        t = traj.times
        worst_q = max(worst_q, float(np.max(np.abs(traj.Q[:, 0] - s.Q[0] - t))))
        worst_p = max(worst_p, float(np.max(np.abs(traj.P[:, 0] - s.P[0]))))
    ok = worst_q <= 1e-6 and worst_p <= 1e-10
    record(1, ok, f"max|Q-Q0-t|={worst_q:.2e} (<=1e-6), max|P-P0|={worst_p:.2e} (<=1e-10)")
    assert ok


def test_criterion_02_energy_conservation():
    s = initial_state(lookup("overtaking-r2"))
    drift = {}
    for rtol in (1e-8, 5e-9):
        traj = integrate(s, 2.0, IntegratorSettings(t_end=9.0, rtol=rtol, atol=1e-10),
                         keep_profiles=False)
        assert traj.termination.kind == REACHED_END
        drift[rtol] = conservation_report(traj).max_relative_H_drift
    ok = drift[1e-8] <= 1e-6 and drift[5e-9] < drift[1e-8]
    record(2, ok, f"drift(rtol=1e-8)={drift[1e-8]:.2e} (<=1e-6), "
                  f"drift(rtol=5e-9)={drift[5e-9]:.2e} (smaller)")
    assert ok


def _random_pairs(seed, count):
    rng = np.random.default_rng(seed)
    for _ in range(count):
        r = float(rng.uniform(2.0, 6.0))
        gap = float(rng.uniform(1.0, 6.0))
        u = rng.uniform(0.3, 2.0, 2) * rng.choice([-1.0, 1.0], 2)
        yield r, [0.0, gap], [float(u[0]), float(u[1])]


def test_criterion_03_sign_preservation():
    changes = []
    runs = 0
    for spec in builtin_scenarios():
        traj = run_scenario(spec, keep_profiles=False)
        assert traj.termination.kind in (REACHED_END, COLLISION), spec.name
        if not all(conservation_report(traj).sign_constant):
            changes.append(spec.name)
        runs += 1
    for r, Q, uh in _random_pairs(2024, 50):
        traj = integrate(_state(Q, uh, r), r, IntegratorSettings(t_end=10.0),
                         keep_profiles=False)
        assert traj.termination.kind in (REACHED_END, COLLISION), (r, Q, uh)
        if not all(conservation_report(traj).sign_constant):
            changes.append((r, Q, uh))
        runs += 1
    ok = not changes
    record(3, ok, f"{runs} runs, {len(changes)} with a sign change")
    assert ok


def test_criterion_04_ordering():
    traj = run_scenario(lookup("threepoint-r4").with_t_end(90.0), keep_profiles=False)
    Q = traj.Q
    gaps = np.diff(Q, axis=1)
    ordered = bool(np.all(gaps > 0))
    reached = traj.termination.kind == REACHED_END and traj.times[-1] == pytest.approx(90.0)
    mid_min = gaps.min(axis=0)
    final = gaps[-1]
    widen = bool(np.all(final > mid_min))
    ok = ordered and reached and widen and gaps.min() > 0
    record(4, ok, f"ordered={ordered}, min gaps={np.round(mid_min, 4).tolist()}, "
                  f"final gaps={np.round(final, 2).tolist()}")
    assert ok


def test_criterion_05_collision_trend():
    rows = collision_time_sweep([2.0, 4.0, 6.0, 8.0])
    t = [row.t_collision for row in rows]
    ok = all(b > a for a, b in zip(t, t[1:]))
    record(5, ok, "t_c(r=2,4,6,8)=" + ", ".join(f"{v:.4f}" for v in t))
    assert ok


def test_criterion_06_phase_shift_trend():
    rows = phase_shift_sweep([2.0, 4.0, 6.0])
    shifts = [row.phase_shift for row in rows]
    decreasing = all(b < a for a, b in zip(shifts, shifts[1:]))
    exchanged = all(
        abs(row.final_speeds[1] - 1.5) <= 0.05 * 1.5
        and abs(row.final_speeds[0] - 1.0) <= 0.05 * 1.0 for row in rows)
    ok = decreasing and exchanged
    speeds = "; ".join(f"{row.final_speeds[0]:.3f},{row.final_speeds[1]:.3f}"
                       for row in rows)
    record(6, ok, "shift(r=2,4,6)=" + ", ".join(f"{v:.4f}" for v in shifts)
           + f"; end speeds {speeds}")
    assert ok


def test_criterion_07_oracle_equivalence():
    worst = np.zeros(3)
    for cfg in random_configs(7, 20):
        c = compare_with_oracles(cfg, n_cells=4096)
        worst = np.maximum(worst, [c.profile_error, c.vector_field_error,
                                   c.energy_error])
    ok = worst[0] <= 1e-6 and worst[1] <= 1e-4 and worst[2] <= 1e-5
    record(7, ok, f"collocation {worst[0]:.2e} (<=1e-6), vector field "
                  f"{worst[1]:.2e} (<=1e-4), variational H {worst[2]:.2e} (<=1e-5)")
    assert ok


def test_criterion_08_weak_solution():
    s = initial_state(lookup("overtaking-r2"))
    w = trajectory_window(s, 2.0, 3.0, 1e-3)
    phis = TestFunctionFamily.spread(-2.0, 9.0, 20)
    H = energy(w.profiles[1]).H
    scaled = float(np.max(np.abs(weak_residual(w, phis)))) / (phis.sup_norm() * H)
    tw = TestFunctionFamily.spread(-3.0, 4.0, 20)
    dts = [4e-2, 2e-2, 1e-2]
    errs = [float(np.max(np.abs(weak_residual(travelling_window(1.0, 2.0, 1.0, d), tw))))
            for d in dts]
    order = float(np.polyfit(np.log(dts), np.log(errs), 1)[0])
    ok = scaled <= 1e-4 and order >= 1.9
    record(8, ok, f"scaled residual {scaled:.2e} (<=1e-4), observed order {order:.3f}")
    assert ok


def test_criterion_09_scaling_symmetry():
    spec = lookup("overtaking-r4")
    settings = IntegratorSettings(t_end=spec.t_end, rtol=1e-8, atol=1e-10,
                                  output_times=tuple(np.arange(0.5, spec.t_end + 1e-9, 0.5)))
    traj = integrate(initial_state(spec), spec.r, settings, keep_profiles=False)
    rep = check_scaling_orbit(traj, 2.0, spec.r, settings)
    ok = rep.position_error <= 1e-5 and abs(rep.momentum_exponent - (spec.r - 1.0)) <= 1e-6
    record(9, ok, f"position error {rep.position_error:.2e} (<=1e-5), "
                  f"momentum exponent {rep.momentum_exponent:.8f} (r-1=3)")
    assert ok


def test_criterion_10_closed_forms():
    r1 = {c.name: c for c in check_r1_closed_forms()}
    grid = np.linspace(-6.0, 6.0, 1201)
    tw = max(check_travelling_reduction(1.0, r, grid) for r in (2.0, 5.0))
    x, f = integrate_steady(2.0, h=1e-3)
    spread = check_X2_first_integral(x, f, 2.0)
    parts = {
        "X2": r1["r1-X2-stated"].value <= 1e-8,
        "X3": r1["r1-X3-stated"].value <= 1e-6,
        "travelling": tw <= 1e-10,
        "first-integral": spread <= 1e-6,
    }
    ok = all(parts.values())
    record(10, ok, f"X2 {r1['r1-X2-stated'].value:.1e}, X3 as displayed "
                   f"{r1['r1-X3-stated'].value:.1e} (corrected form "
                   f"{r1['r1-X3-corrected'].value:.1e}), travelling {tw:.1e}, "
                   f"first-integral spread {spread:.1e}")
    assert ok, f"failing parts: {[k for k, v in parts.items() if not v]}"
