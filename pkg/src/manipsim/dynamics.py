"""Rigid-body dynamics of a 2-DOF revolute planar arm moving in the horizontal plane.

The arm is gravity-free, so the equations of motion reduce to

    M(q) qdd + C(q, qd) qd = tau

with a minimal dynamic parameterization theta = (theta1, theta2, theta3):

    M(q) = [[theta1 + 2*theta3*cos(q2), theta2 + theta3*cos(q2)],
            [theta2 + theta3*cos(q2),   theta2]]

C is the Christoffel choice, which makes Mdot - 2C skew-symmetric, and the
whole left-hand side is linear in theta through the regressor Y.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

DOF = 2
N_PARAMS = 3


class DegenerateInertiaError(ValueError):
    """Raised when det M(q) is numerically non-positive (corrupted parameters)."""


@dataclass(frozen=True, eq=False)
class DynParams:
    """Dynamic parameter vector theta of the planar arm.

    Positivity plus theta2*(theta1 - theta2) > theta3**2 guarantee
    det M(q) = theta1*theta2 - theta2**2 - theta3**2*cos(q2)**2 > 0 for all q.
    """

    theta: np.ndarray

    def __post_init__(self):
        theta = np.asarray(self.theta, dtype=float)
        if theta.shape != (N_PARAMS,):
            raise ValueError(f"theta must have shape ({N_PARAMS},), got {theta.shape}")
        t1, t2, t3 = theta
        if not (t1 > 0 and t2 > 0 and t3 > 0):
            raise ValueError(f"theta entries must be positive, got {theta}")
        if not t2 * (t1 - t2) > t3 ** 2:
            raise ValueError(
                "inertia positivity violated: need theta2*(theta1-theta2) > theta3**2, "
                f"got {t2 * (t1 - t2)} <= {t3 ** 2}"
            )
        object.__setattr__(self, "theta", theta)


def default_params() -> DynParams:
    """True parameters of the reference arm: unit links (m=1, l=1, lc=0.5, I=1/12)."""
    return DynParams(np.array([5.0 / 3.0, 1.0 / 3.0, 0.5]))


@dataclass
class JointState:
    """Joint positions and velocities; entries are expected to be finite."""

    q: np.ndarray
    qdot: np.ndarray


@dataclass(frozen=True, eq=False)
class ArmModel:
    """One robot: its true dynamic parameters plus a label for traces."""

    params: DynParams = field(default_factory=default_params)
    label: str = "arm"


def inertia(q: np.ndarray, params: DynParams) -> np.ndarray:
    """Symmetric positive definite inertia matrix M(q)."""
    t1, t2, t3 = params.theta
    c2 = np.cos(q[1])
    off = t2 + t3 * c2
    return np.array([[t1 + 2.0 * t3 * c2, off], [off, t2]])


def coriolis(q: np.ndarray, qdot: np.ndarray, params: DynParams) -> np.ndarray:
    """Coriolis/centrifugal matrix C(q, qd) in the Christoffel form."""
    t3 = params.theta[2]
    s2 = np.sin(q[1])
    return np.array(
        [
            [-t3 * s2 * qdot[1], -t3 * s2 * (qdot[0] + qdot[1])],
            [t3 * s2 * qdot[0], 0.0],
        ]
    )


def regressor(
    q: np.ndarray, qdot: np.ndarray, zeta: np.ndarray, zetadot: np.ndarray
) -> np.ndarray:
    """Regressor Y with Y(q, qd, zeta, zetadot) @ theta == M(q) zetadot + C(q, qd) zeta."""
    c2 = np.cos(q[1])
    s2 = np.sin(q[1])
    return np.array(
        [
            [
                zetadot[0],
                zetadot[1],
                c2 * (2.0 * zetadot[0] + zetadot[1])
                - s2 * (qdot[1] * zeta[0] + (qdot[0] + qdot[1]) * zeta[1]),
            ],
            [0.0, zetadot[0] + zetadot[1], c2 * zetadot[0] + s2 * qdot[0] * zeta[0]],
        ]
    )


def inverse_inertia_apply(q: np.ndarray, rhs: np.ndarray, params: DynParams) -> np.ndarray:
    """Solve M(q) x = rhs by the closed-form 2x2 inverse."""
    t1, t2, t3 = params.theta
    c2 = np.cos(q[1])
    m11 = t1 + 2.0 * t3 * c2
    m12 = t2 + t3 * c2
    m22 = t2
    det = m11 * m22 - m12 * m12
    if det <= 1e-12:
        raise DegenerateInertiaError(
            f"det M(q) = {det} <= 1e-12 at q = {np.asarray(q)}; parameters corrupted?"
        )
    return np.array(
        [
            (m22 * rhs[0] - m12 * rhs[1]) / det,
            (m11 * rhs[1] - m12 * rhs[0]) / det,
        ]
    )


def forward_dynamics(state: JointState, tau: np.ndarray, params: DynParams) -> np.ndarray:
    """Joint accelerations qdd = M(q)^-1 (tau - C(q, qd) qd)."""
    q, qd = state.q, state.qdot
    t3 = params.theta[2]
    s2 = np.sin(q[1])
    # C(q, qd) qd expanded to avoid building the matrix
    cqd0 = -t3 * s2 * (qd[1] * qd[0] + (qd[0] + qd[1]) * qd[1])
    cqd1 = t3 * s2 * qd[0] * qd[0]
    return inverse_inertia_apply(q, np.array([tau[0] - cqd0, tau[1] - cqd1]), params)


def kinetic_energy(state: JointState, params: DynParams) -> float:
    """Kinetic energy (1/2) qd^T M(q) qd."""
    qd = state.qdot
    return 0.5 * float(qd @ inertia(state.q, params) @ qd)
