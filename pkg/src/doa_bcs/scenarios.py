"""Benchmark scenario definitions: trajectories, signals, and estimator settings."""
from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .array_model import CouplingSpec

DEFAULT_COUPLING = CouplingSpec(reach=3, rho=(0.65, 0.25), phi=(np.pi / 7, np.pi / 10))

ESTIMATOR_NAMES = ("rvm", "mrvm", "gibbs")


@dataclass(frozen=True)
class ScenarioSpec:
    """Complete description of one Monte-Carlo experiment.

    ``initial_doa=None`` draws the start angle uniformly over the grid per trial
    (clamped so a constant-motion trajectory stays in range);
    ``signal_value=None`` draws +1/-1 per trial. ``assumed_delta`` is the
    per-snapshot DOA change the tracking estimators assume, independent of the
    true motion.
    """

    name: str
    initial_doa: float | None
    motion_kind: str  # "constant" | "up_then_down" | "random_walk"
    motion_delta: float
    signal_value: complex | None
    k_snapshots: int = 20
    q_trials: int = 100
    assumed_delta: float = 0.0
    estimators: tuple = ESTIMATOR_NAMES
    up_steps: int = 9
    m_antennas: int = 20
    delta_d: float = 0.5
    coupling: CouplingSpec = field(default=DEFAULT_COUPLING)
    sigma2_true: float = 0.4
    sigma2_init: float = 0.1
    eta: float = 0.9
    seed: int = 0
    grid_step: float = 1.0

    def __post_init__(self):
        if self.motion_kind not in ("constant", "up_then_down", "random_walk"):
            raise ValueError(f"unknown motion kind {self.motion_kind!r}")
        unknown = set(self.estimators) - set(ESTIMATOR_NAMES)
        if unknown:
            raise ValueError(f"unknown estimators {sorted(unknown)}")


def true_trajectory(spec: ScenarioSpec, rng: np.random.Generator) -> np.ndarray:
    """True DOA per snapshot, always clamped to [0, 180] degrees."""
    k = spec.k_snapshots
    if spec.initial_doa is None:
        theta0 = float(rng.integers(0, 181))
        if spec.motion_kind == "constant":
            drift = spec.motion_delta * (k - 1)
            theta0 = float(np.clip(theta0, max(0.0, -drift), min(180.0, 180.0 - drift)))
    else:
        theta0 = float(spec.initial_doa)

    thetas = np.empty(k)
    thetas[0] = theta0
    for i in range(1, k):
        if spec.motion_kind == "constant":
            step = spec.motion_delta
        elif spec.motion_kind == "up_then_down":
            step = spec.motion_delta if i <= spec.up_steps else -spec.motion_delta
        else:  # random_walk: integer change of up to +/- motion_delta per snapshot
            bound = int(spec.motion_delta)
            step = float(rng.integers(-bound, bound + 1))
        thetas[i] = np.clip(thetas[i - 1] + step, 0.0, 180.0)
    return thetas


def builtin_scenarios(k: int = 20, q: int = 100, seed: int = 0,
                      eta: float = 0.9) -> list[ScenarioSpec]:
    """The seven stock scenarios used by the benchmark CLI."""
    common = dict(k_snapshots=k, q_trials=q, eta=eta)
    return [
        ScenarioSpec("endfire", 20.0, "constant", -1.0, 1.0,
                     assumed_delta=-1.0, seed=seed + 1, **common),
        ScenarioSpec("endfire_quarter", 20.0, "constant", -1.0, 1.0,
                     assumed_delta=-1.0, m_antennas=39, delta_d=0.25,
                     coupling=CouplingSpec.uniform_spread(reach=9),
                     seed=seed + 2, **common),
        ScenarioSpec("non_endfire", 100.0, "constant", 1.0, -1.0,
                     assumed_delta=1.0, seed=seed + 3, **common),
        ScenarioSpec("random_initial", None, "constant", 1.0, None,
                     assumed_delta=1.0, seed=seed + 4, **common),
        ScenarioSpec("up_then_down", 100.0, "up_then_down", 1.0, 1.0,
                     assumed_delta=1.0, seed=seed + 5, **common),
        ScenarioSpec("mismatch", 100.0, "constant", 1.0, -1.0,
                     assumed_delta=-3.0, seed=seed + 6, **common),
        ScenarioSpec("random_walk", 100.0, "random_walk", 3.0, 1.0,
                     assumed_delta=3.0, seed=seed + 7, **common),
    ]


def scenario_by_name(name: str, **overrides) -> ScenarioSpec:
    """Look up a stock scenario and optionally override its fields."""
    for spec in builtin_scenarios():
        if spec.name == name:
            return replace(spec, **overrides) if overrides else spec
    known = ", ".join(s.name for s in builtin_scenarios())
    raise KeyError(f"unknown scenario {name!r}; known: {known}")
