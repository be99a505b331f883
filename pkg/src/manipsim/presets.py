"""Canonical experiment presets, one per simulation figure group.

Names:

- ``teaching_lm6`` / ``teaching_lm0``:  single-arm teaching with a PD operator
- ``consensus_switching``:              six arms, random 150 ms topology switching
- ``consensus_delayed``:                the same with time-varying channel delays
- ``teleop_lm10`` / ``teleop_lm1``:     two-arm bilateral teleoperation with delays
- ``pointmass``:                        the damped point-mass gain benchmark
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .controllers import GainSet
from .dynamics import ArmModel
from .manipulability import PointMass
from .network import DelayModel, fixture_triple, random_switching_schedule
from .sim import EnvironmentModel, Integrator, OperatorModel, Scenario

Q_TARGET = np.array([3.5, 3.0])

SIX_ARM_Q0 = np.array(
    [
        [-np.pi / 3, -np.pi / 2],
        [-2 * np.pi / 3, np.pi / 3],
        [5 * np.pi / 6, -np.pi / 3],
        [np.pi / 6, np.pi / 2],
        [np.pi / 2, np.pi / 6],
        [-np.pi / 6, -np.pi / 3],
    ]
)

PAPER_DELAY = dict(base=0.3, jitter_max=0.9, resample_period=0.03)


def _pd_operator(robot: int = 0) -> OperatorModel:
    return OperatorModel(kind="pd", Kd=5.0, Kp=10.0, q_h=Q_TARGET.copy(), attached_robot=robot)


def teaching(
    lambda_M: float = 6.0,
    horizon: float = 60.0,
    seed: int = 0,
    integrator: Integrator | None = None,
) -> Scenario:
    """Single-arm teaching: K=16 I2, alpha=2, Gamma=8 I3, PD operator toward (3.5, 3.0)."""
    return Scenario(
        robots=(ArmModel(),),
        controller="single_adaptive",
        gains=GainSet(K=16.0, Gamma=8.0, alpha=2.0, lambda_M=lambda_M),
        operator=_pd_operator(),
        horizon=horizon,
        integrator=integrator or Integrator(),
        seed=seed,
        label=f"teaching_lm{lambda_M:g}",
    )


def free_motion_single(
    lambda_M: float = 6.0, horizon: float = 20.0, qd0=(1.0, -1.0)
) -> Scenario:
    """Free-motion single arm released with nonzero velocity; no external action."""
    return Scenario(
        robots=(ArmModel(),),
        controller="single_adaptive",
        gains=GainSet(K=16.0, Gamma=8.0, alpha=2.0, lambda_M=lambda_M),
        qd0=np.array([qd0]),
        horizon=horizon,
        label="free_motion_single",
    )


def consensus_switching(
    lambda_M: float = 10.0,
    gamma: float = 8.0,
    delayed: bool = False,
    horizon: float = 60.0,
    seed: int = 0,
    integrator: Integrator | None = None,
) -> Scenario:
    """Six arms on randomly switching fixture graphs; operator drives robot 3."""
    schedule = random_switching_schedule(fixture_triple(), period=0.15, horizon=horizon, seed=seed)
    return Scenario(
        robots=tuple(ArmModel(label=f"arm{i+1}") for i in range(6)),
        controller="networked_delayed" if delayed else "networked",
        gains=GainSet(K=16.0, Gamma=gamma, alpha=1.6, lambda_M=lambda_M),
        schedule=schedule,
        delay_model=DelayModel(seed=seed, **PAPER_DELAY) if delayed else None,
        operator=_pd_operator(robot=2),
        q0=SIX_ARM_Q0.copy(),
        horizon=horizon,
        integrator=integrator or Integrator(),
        seed=seed,
        label="consensus_delayed" if delayed else "consensus_switching",
    )


def consensus_delayed(seed: int = 0, horizon: float = 120.0) -> Scenario:
    return consensus_switching(gamma=1.0, delayed=True, horizon=horizon, seed=seed)


def teleop(
    lambda_M: float = 10.0,
    horizon: float = 120.0,
    seed: int = 0,
    environment: EnvironmentModel | None = None,
    integrator: Integrator | None = None,
) -> Scenario:
    """Two-arm teleoperation with the time-varying delay channel; operator on the master."""
    return Scenario(
        robots=(ArmModel(label="master"), ArmModel(label="slave")),
        controller="teleop",
        gains=GainSet(K=16.0, Gamma=1.0, alpha=0.5, lambda_M=lambda_M, lam=2.0),
        delay_model=DelayModel(seed=seed, **PAPER_DELAY),
        operator=_pd_operator(robot=0),
        environment=environment or EnvironmentModel(),
        q0=SIX_ARM_Q0[:2].copy(),
        horizon=horizon,
        integrator=integrator or Integrator(),
        seed=seed,
        label=f"teleop_lm{lambda_M:g}",
    )


@dataclass(frozen=True)
class PointMassPreset:
    """Damped point mass driven by the square-integrable probe force c/(t+1)."""

    m: float = 1.0
    b: float = 1.0
    input_magnitude: float = 1.0
    horizon: float = 100.0
    step: float = 1e-3
    label: str = "pointmass"

    def mass(self) -> PointMass:
        return PointMass(m=self.m, b=self.b)


PRESETS = {
    "teaching_lm6": lambda seed=0: teaching(lambda_M=6.0, seed=seed),
    "teaching_lm0": lambda seed=0: teaching(lambda_M=0.0, seed=seed),
    "consensus_switching": lambda seed=0: consensus_switching(seed=seed),
    "consensus_delayed": lambda seed=0: consensus_delayed(seed=seed),
    "teleop_lm10": lambda seed=0: teleop(lambda_M=10.0, seed=seed),
    "teleop_lm1": lambda seed=0: teleop(lambda_M=1.0, seed=seed),
    "pointmass": lambda seed=0: PointMassPreset(),
}


def load_preset(name: str, seed: int | None = None):
    if name not in PRESETS:
        raise KeyError(f"unknown preset {name!r}; available: {', '.join(sorted(PRESETS))}")
    return PRESETS[name]() if seed is None else PRESETS[name](seed=seed)
