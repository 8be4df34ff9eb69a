"""Named experiments and the two parameter sweeps over r."""

from __future__ import annotations

import json
import logging
import math
from dataclasses import asdict, dataclass, field, replace
from typing import Iterable, List, Optional, Sequence

import numpy as np

from .core import DomainError, PeakonState, RCHError, check_exponent
from .dynamics import COLLISION, IntegratorSettings, Trajectory, integrate
from .profile import heights_to_profile

logger = logging.getLogger(__name__)

SPEC_VERSION = 1


class ConfigError(RCHError, ValueError):
    """A scenario configuration is malformed."""


class FitNotLinear(RCHError):
    """An asymptotic trajectory window is not yet straight; run longer."""


@dataclass(frozen=True)
class ScenarioSpec:
    """A named run: exponent, initial positions and heights, integrator."""

    name: str
    r: float
    Q0: tuple
    uhat0: tuple
    t_end: float
    integrator: IntegratorSettings = IntegratorSettings()
    outputs: dict = field(default_factory=dict)

    def __post_init__(self):
        Q0 = tuple(float(q) for q in self.Q0)
        u0 = tuple(float(u) for u in self.uhat0)
        if len(Q0) != len(u0) or not Q0:
            raise ConfigError("Q0 and uhat0 must be nonempty and equally long")
        if any(b <= a for a, b in zip(Q0, Q0[1:])):
            raise ConfigError("Q0 must be strictly increasing")
        object.__setattr__(self, "Q0", Q0)
        object.__setattr__(self, "uhat0", u0)
        object.__setattr__(self, "r", check_exponent(self.r))
        if self.integrator.t_end != self.t_end:
            object.__setattr__(self, "integrator",
                               replace(self.integrator, t_end=float(self.t_end)))

    def with_t_end(self, t_end: float) -> "ScenarioSpec":
        return replace(self, t_end=float(t_end),
                       integrator=replace(self.integrator, t_end=float(t_end)))

    def to_dict(self) -> dict:
        integ = self.integrator
        return {
            "spec_version": SPEC_VERSION,
            "name": self.name,
            "r": self.r,
            "Q0": list(self.Q0),
            "uhat0": list(self.uhat0),
            "t_end": self.t_end,
            "integrator": {
                "scheme": integ.scheme, "dt": integ.dt, "rtol": integ.rtol,
                "atol": integ.atol, "min_gap_stop": integ.min_gap_stop,
                "output_stride": integ.output_stride,
            },
            "outputs": dict(self.outputs),
        }


_INTEGRATOR_KEYS = {"scheme", "dt", "rtol", "atol", "min_gap_stop",
                    "output_stride"}
_TOP_KEYS = {"spec_version", "name", "r", "Q0", "uhat0", "t_end",
             "integrator", "outputs"}


def spec_from_dict(data: dict) -> ScenarioSpec:
    """Validate and build a spec from its JSON form."""
    if not isinstance(data, dict):
        raise ConfigError("config must be a JSON object")
    unknown = set(data) - _TOP_KEYS
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    if data.get("spec_version") != SPEC_VERSION:
        raise ConfigError(f"spec_version must be {SPEC_VERSION}")
    for key in ("name", "r", "Q0", "uhat0", "t_end"):
        if key not in data:
            raise ConfigError(f"missing config key {key!r}")
    integ = data.get("integrator", {}) or {}
    bad = set(integ) - _INTEGRATOR_KEYS
    if bad:
        raise ConfigError(f"unknown integrator keys: {sorted(bad)}")
    try:
        settings = IntegratorSettings(t_end=float(data["t_end"]), **integ)
        return ScenarioSpec(str(data["name"]), float(data["r"]),
                            tuple(data["Q0"]), tuple(data["uhat0"]),
                            float(data["t_end"]), settings,
                            dict(data.get("outputs", {}) or {}))
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc


def load_spec(path) -> ScenarioSpec:
    try:
        with open(path) as fh:
            data = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return spec_from_dict(data)


def save_spec(spec: ScenarioSpec, path) -> None:
    with open(path, "w") as fh:
        json.dump(spec.to_dict(), fh, indent=2)


_DEFAULT_INTEGRATOR = IntegratorSettings(scheme="rk45", rtol=1e-8, atol=1e-10)


def _make(name, r, Q0, u0, t_end):
    return ScenarioSpec(name, r, Q0, u0, t_end,
                        replace(_DEFAULT_INTEGRATOR, t_end=t_end))


def builtin_scenarios() -> List[ScenarioSpec]:
    """The overtaking, antisymmetric and three-point experiments."""
    specs = []
    for r in (2, 4, 6):
        specs.append(_make(f"overtaking-r{r}", r, (1.0, 6.0), (1.5, 1.0), 20.0))
    for r in (2, 4, 6, 8):
        specs.append(_make(f"antisym-r{r}", r, (1.0, 11.0), (1.0, -1.0), 40.0))
    specs.append(_make("threepoint-r4", 4, (1.0, 3.0, 6.0), (3.0, 1.2, 1.0),
                       90.0))
    return specs


def lookup(name: str) -> ScenarioSpec:
    for spec in builtin_scenarios():
        if spec.name == name:
            return spec
    names = ", ".join(s.name for s in builtin_scenarios())
    raise ConfigError(f"unknown scenario {name!r}; available: {names}")


def initial_state(spec: ScenarioSpec) -> PeakonState:
    """Momenta consistent with the prescribed heights of the coupled profile."""
    prof = heights_to_profile(spec.Q0, spec.uhat0, spec.r,
                              spec.integrator.profile)
    return PeakonState(0.0, prof.Q, prof.P)


def run_scenario(spec: ScenarioSpec,
                 settings: Optional[IntegratorSettings] = None,
                 keep_profiles: bool = True) -> Trajectory:
    settings = settings or spec.integrator
    return integrate(initial_state(spec), spec.r, settings,
                     keep_profiles=keep_profiles)


# ---------------------------------------------------------------------------
# sweeps


@dataclass(frozen=True)
class CollisionRow:
    r: float
    t_collision: float


def _antisym_template(r: float) -> ScenarioSpec:
    return _make(f"antisym-r{r:g}", r, (1.0, 11.0), (1.0, -1.0), 40.0)


def collision_time_sweep(r_values: Iterable[float],
                         template: Optional[ScenarioSpec] = None
                         ) -> List[CollisionRow]:
    """Estimated collision time of the antisymmetric pair for each r."""
    rows = []
    for r in r_values:
        spec = replace(template, r=check_exponent(r)) if template else \
            _antisym_template(r)
        if len(spec.Q0) != 2 or spec.uhat0[0] != -spec.uhat0[1] \
                or spec.uhat0[0] == 0:
            raise DomainError("collision sweep requires an N=2 antisymmetric pair")
        traj = run_scenario(spec, keep_profiles=False)
        term = traj.termination
        if term.kind != COLLISION:
            raise RCHError(f"r={r}: no collision before t={spec.t_end} "
                           f"({term.kind})")
        logger.info("r=%g collision at t=%.6f", spec.r, term.t_collision)
        rows.append(CollisionRow(spec.r, float(term.t_collision)))
    return rows


@dataclass(frozen=True)
class PhaseShiftRow:
    r: float
    phase_shift: float
    t_closest: float
    min_gap: float
    pre_speed: float
    post_speed: float
    fit_residual: float
    final_speeds: tuple


def phase_shift(traj: Trajectory, fit_tol: float = 1e-3) -> PhaseShiftRow:
    """Offset of the fast peak between its pre- and post-interaction lines.

    Before the interaction the fast peak is the left one; afterwards the
    right one carries the larger speed.  The pre-interaction line is
    fitted over the first quarter of the approach (up to a quarter of the
    time of closest approach), the post-interaction line over the last
    25% of the run; both are evaluated at the time of closest approach.
    """
    t = traj.times
    Q = traj.Q
    if Q.shape[1] != 2:
        raise DomainError("phase shift needs two peaks")
    gap = Q[:, 1] - Q[:, 0]
    ic = int(np.argmin(gap))
    tc = float(t[ic])
    T = float(t[-1])
    pre = t <= max(tc / 4.0, t[min(3, len(t) - 1)])
    post = t >= t[0] + 0.75 * (T - t[0])
    if pre.sum() < 3 or post.sum() < 3:
        raise FitNotLinear("too few outputs for the linear fits")
    if tc >= t[post][0]:
        raise FitNotLinear("closest approach falls in the final window")
    a = np.polyfit(t[pre], Q[pre, 0], 1)
    b = np.polyfit(t[post], Q[post, 1], 1)
    res = float(np.max(np.abs(np.polyval(b, t[post]) - Q[post, 1])))
    if res > fit_tol:
        raise FitNotLinear(f"post-interaction fit residual {res:.2e} > {fit_tol}")
    shift = float(np.polyval(b, tc) - np.polyval(a, tc))
    return PhaseShiftRow(traj.r, shift, tc, float(gap[ic]), float(a[0]),
                         float(b[0]), res, tuple(float(u) for u in traj.uhat[-1]))


def phase_shift_sweep(r_values: Iterable[float], Q0=(1.0, 6.0),
                      uhat0=(1.5, 1.0), t_end: float = 60.0,
                      n_outputs: int = 600, rtol: float = 1e-9
                      ) -> List[PhaseShiftRow]:
    """Phase shift of the overtaking collision for each r."""
    u0 = tuple(float(u) for u in uhat0)
    if len(u0) != 2 or len(Q0) != 2:
        raise DomainError("phase shift sweep needs two peaks")
    if min(u0) <= 0 or u0[0] - u0[1] <= 1e-3 * max(u0):
        raise DomainError("no overtaking: the left peak must be strictly faster "
                          "and both heights positive")
    rows = []
    times = tuple(np.linspace(0.0, t_end, n_outputs + 1)[1:])
    for r in r_values:
        spec = _make(f"overtaking-r{r:g}", r, Q0, u0, t_end)
        settings = replace(spec.integrator, rtol=rtol, output_times=times)
        traj = run_scenario(spec, settings, keep_profiles=False)
        if traj.termination.kind != "reached_end":
            raise RCHError(f"r={r}: run ended early ({traj.termination.kind})")
        row = phase_shift(traj)
        logger.info("r=%g phase shift %.6f", r, row.phase_shift)
        rows.append(row)
    return rows
