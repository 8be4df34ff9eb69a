import json

import numpy as np
import pytest

from rchpeakon.core import DomainError, RCHError
from rchpeakon.dynamics import COLLISION, IntegratorSettings
from rchpeakon.scenarios import (
    SPEC_VERSION,
    ConfigError,
    ScenarioSpec,
    builtin_scenarios,
    collision_time_sweep,
    initial_state,
    load_spec,
    lookup,
    phase_shift_sweep,
    run_scenario,
    save_spec,
    spec_from_dict,
)


def test_builtin_catalogue():
    # [PAPER] initial data of the three experiments
    names = [s.name for s in builtin_scenarios()]
    assert names == ["overtaking-r2", "overtaking-r4", "overtaking-r6",
                     "antisym-r2", "antisym-r4", "antisym-r6", "antisym-r8",
                     "threepoint-r4"]
    s = lookup("overtaking-r2")
    assert (s.r, s.Q0, s.uhat0, s.t_end) == (2.0, (1.0, 6.0), (1.5, 1.0), 20.0)
    s = lookup("antisym-r8")
    assert (s.r, s.Q0, s.uhat0) == (8.0, (1.0, 11.0), (1.0, -1.0))
    s = lookup("threepoint-r4")
    assert (s.r, s.Q0, s.uhat0) == (4.0, (1.0, 3.0, 6.0), (3.0, 1.2, 1.0))
    with pytest.raises(ConfigError):
        lookup("missing")


def test_initial_state_uses_coupled_profile():
    # heights are the coupled-profile values, not the isolated formula
    s = initial_state(lookup("overtaking-r2"))
    assert not np.allclose(s.P, [3.0, 2.0], atol=1e-4)
    from rchpeakon.profile import solve_profile
    np.testing.assert_allclose(solve_profile(s, 2.0).uhat, [1.5, 1.0], atol=1e-9)


def test_json_round_trip(tmp_path):
    spec = lookup("threepoint-r4")
    path = tmp_path / "spec.json"
    save_spec(spec, path)
    data = json.loads(path.read_text())
    assert data["spec_version"] == SPEC_VERSION
    back = load_spec(path)
    assert back.to_dict() == spec.to_dict()


@pytest.mark.parametrize("mutate", [
    lambda d: d.pop("spec_version"),
    lambda d: d.update(spec_version=2),
    lambda d: d.update(colour="red"),
    lambda d: d.pop("Q0"),
    lambda d: d["integrator"].update(scheme="euler"),
    lambda d: d["integrator"].update(bogus=1),
    lambda d: d.update(Q0=[2.0, 1.0]),
    lambda d: d.update(r=1.0),
    lambda d: d.update(uhat0=[1.0]),
])
def test_config_validation(mutate):
    data = lookup("overtaking-r2").to_dict()
    mutate(data)
    with pytest.raises((ConfigError, DomainError)):
        spec_from_dict(data)


def test_load_missing_file(tmp_path):
    with pytest.raises(ConfigError):
        load_spec(tmp_path / "nope.json")


def test_antisymmetric_mirror_symmetry():
    traj = run_scenario(lookup("antisym-r4"), keep_profiles=False)
    assert traj.termination.kind == COLLISION
    Q, P = traj.Q, traj.P
    assert np.max(np.abs(Q.sum(axis=1) - 12.0)) < 1e-4
    assert np.max(np.abs(P.sum(axis=1))) < 1e-8 * np.max(np.abs(P))


def test_collision_sweep_small():
    # [PAPER] finite collision time, longer at larger r
    rows = collision_time_sweep([2.0, 4.0])
    assert np.isfinite(rows[0].t_collision)
    assert rows[0].t_collision < rows[1].t_collision


def test_collision_sweep_precondition():
    single = ScenarioSpec("one", 2.0, (0.0,), (1.0,), 5.0)
    with pytest.raises(DomainError):
        collision_time_sweep([2.0], template=single)


def test_phase_shift_r2_positive():
    row = phase_shift_sweep([2.0])[0]
    assert row.phase_shift > 0
    assert row.post_speed == pytest.approx(1.5, rel=0.05)


def test_phase_shift_identical_speeds():
    with pytest.raises(DomainError):
        phase_shift_sweep([2.0], uhat0=(1.0, 1.0))
