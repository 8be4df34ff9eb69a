import math

import numpy as np
import pytest

from rchpeakon.core import PeakonState
from rchpeakon.dynamics import vector_field
from rchpeakon.oracle import (
    Mesh1D,
    collocation_solve,
    compare_with_oracles,
    hamiltonian_fd_vector_field,
    random_configs,
    variational_hamiltonian,
)
from rchpeakon.profile import energy, heights_to_profile, sample


def _state(Q, uh, r):
    prof = heights_to_profile(Q, uh, r)
    return PeakonState(0.0, prof.Q, prof.P), prof


def test_collocation_exponential_exact():
    # [TRIVIAL] u = exp(-x) solves every r with K = 0
    x, u = collocation_solve(1.0, math.exp(-2.0), 2.0, 3.0, Mesh1D(512))
    assert np.max(np.abs(u - np.exp(-x))) < 5e-6


def test_collocation_order():
    # [DERIVED] second order against the cosh closed form, 2^10 .. 2^13
    c = math.cosh(1.0)
    errs = []
    ns = [2 ** 10, 2 ** 13]
    for n in ns:
        x, u = collocation_solve(c, c, 2.0, 2.0, Mesh1D(n))
        errs.append(np.max(np.abs(u - np.cosh(x - 1.0))))
    order = math.log(errs[0] / errs[1]) / math.log(ns[1] / ns[0])
    assert order >= 1.9


def test_collocation_matches_profile_r4():
    # [DERIVED] cross-solver agreement for same-sign data
    prof = heights_to_profile([0.0, 1.2], [0.9, 1.3], 4.0)
    x, u = collocation_solve(0.9, 1.3, 1.2, 4.0, Mesh1D(4096))
    assert np.max(np.abs(u - sample(prof, x))) <= 1e-6


def test_mesh_validation():
    with pytest.raises(ValueError):
        Mesh1D(4)


def test_variational_separated_pair():
    # [DERIVED] tails decouple: H = u1^2 + u2^2 at r = 2
    # the interval is long, so the cells must be short
    s, _ = _state([0.0, 40.0], [1.5, 1.0], 2.0)
    res = variational_hamiltonian(s, 2.0, Mesh1D(2 ** 15), gradients=False)
    assert res.H == pytest.approx(1.5 ** 2 + 1.0 ** 2, abs=1e-6)


def test_variational_symmetric_pair_gradients():
    # [TRIVIAL] mirror symmetry
    s, _ = _state([0.0, 1.5], [1.0, 1.0], 3.0)
    res = variational_hamiltonian(s, 3.0, Mesh1D(1024))
    assert res.dH_dQ[0] == pytest.approx(-res.dH_dQ[1], abs=1e-7)


def test_variational_overtaking_energy():
    # [DERIVED] cross-formulation agreement at 8192 cells
    s, prof = _state([1.0, 6.0], [1.5, 1.0], 2.0)
    res = variational_hamiltonian(s, 2.0, Mesh1D(8192), gradients=False)
    assert res.H == pytest.approx(energy(prof).H, rel=1e-5)


def test_variational_three_peaks():
    s, prof = _state([1.0, 3.0, 6.0], [3.0, 1.2, 1.0], 4.0)
    res = variational_hamiltonian(s, 4.0, Mesh1D(4096), gradients=False)
    assert res.H == pytest.approx(energy(prof).H, rel=1e-5)
    np.testing.assert_allclose(res.uhat, [3.0, 1.2, 1.0], rtol=1e-5)


def test_variational_gradients_match_vector_field():
    s, _ = _state([0.0, 1.3], [0.8, -0.5], 4.0)
    res = variational_hamiltonian(s, 4.0, Mesh1D(2048))
    Qd, Pd, _ = vector_field(s, 4.0)
    np.testing.assert_allclose(res.dH_dP, Qd, rtol=1e-4)
    np.testing.assert_allclose(-res.dH_dQ, Pd, rtol=1e-4)


def test_fd_vector_field_single_peak():
    # [TRIVIAL] translation invariance gives dH/dQ = 0
    s, _ = _state([0.5], [1.3], 3.0)
    Qd, Pd = hamiltonian_fd_vector_field(s, 3.0)
    assert Qd[0] == pytest.approx(1.3, rel=1e-6)
    assert abs(Pd[0]) < 1e-6


def test_fd_translation_invariance():
    for cfg in random_configs(3, 4):
        s, _ = _state(cfg.Q, cfg.uhat, cfg.r)
        _, Pd = hamiltonian_fd_vector_field(s, cfg.r)
        assert abs(Pd.sum()) <= 1e-6 * max(1.0, np.max(np.abs(Pd)))


def test_random_configs_reproducible():
    assert random_configs(7, 5) == random_configs(7, 5)
    assert random_configs(7, 5) != random_configs(8, 5)


def test_compare_with_oracles_small_sample():
    for cfg in random_configs(11, 3):
        c = compare_with_oracles(cfg)
        assert c.profile_error <= 1e-6
        assert c.vector_field_error <= 1e-4
        assert c.energy_error <= 1e-5
