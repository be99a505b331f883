"""Control laws: damping, dynamic-feedback adaptive, networked, and teleoperation.

All controllers share the same adaptive core built around an auxiliary
reference velocity z with dynamics

    zdot = -alpha*qd + lambda_M*(qd - z) - (coupling term),

the sliding vector s = qd - z, the certainty-equivalence torque
tau = -K s + Y(q, qd, z, zdot) theta_hat, and the gradient adaptation law
theta_hat_dot = -Gamma Y^T s. Any lambda_M > 0 makes s enter the reference
dynamics directly, which is what buys unbounded low-frequency gain from an
external torque to position; lambda_M = 0 is the purely integral variant.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .dynamics import JointState, regressor
from .network import DelayChannel, DiGraph, sample_delay


def _as_spd(mat, dim: int, name: str) -> np.ndarray:
    m = np.asarray(mat, dtype=float)
    if m.ndim == 0:
        m = float(m) * np.eye(dim)
    if m.shape != (dim, dim):
        raise ValueError(f"{name} must be {dim}x{dim} or scalar, got shape {m.shape}")
    if not np.allclose(m, m.T):
        raise ValueError(f"{name} must be symmetric")
    if np.linalg.eigvalsh(m)[0] <= 0:
        raise ValueError(f"{name} must be positive definite")
    return m


@dataclass(frozen=True, eq=False)
class GainSet:
    """Controller gains. K and Gamma may be given as scalars (interpreted as scalar*I).

    alpha = 0 is allowed: it is the velocity-output configuration, in which
    the position coupling disappears and velocity becomes the output with
    unbounded gain. lambda_M = 0 is allowed as the negative-control
    configuration.
    """

    K: np.ndarray = 16.0
    Gamma: np.ndarray = 8.0
    alpha: float = 2.0
    lambda_M: float = 6.0
    lam: float = 1.0  # teleoperation coupling weight

    def __post_init__(self):
        object.__setattr__(self, "K", _as_spd(self.K, 2, "K"))
        object.__setattr__(self, "Gamma", _as_spd(self.Gamma, 3, "Gamma"))
        if self.alpha < 0:
            raise ValueError("alpha must be nonnegative")
        if self.lambda_M < 0:
            raise ValueError("lambda_M must be nonnegative")
        if self.lam <= 0:
            raise ValueError("lambda (teleoperation weight) must be positive")

    def replace(self, **kw) -> "GainSet":
        vals = dict(K=self.K, Gamma=self.Gamma, alpha=self.alpha,
                    lambda_M=self.lambda_M, lam=self.lam)
        vals.update(kw)
        return GainSet(**vals)


@dataclass
class AdaptiveState:
    """Per-robot controller memory: auxiliary velocity z and parameter estimate."""

    z: np.ndarray = field(default_factory=lambda: np.zeros(2))
    theta_hat: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def copy(self) -> "AdaptiveState":
        return AdaptiveState(self.z.copy(), self.theta_hat.copy())


@dataclass(frozen=True, eq=False)
class ControlOutput:
    tau: np.ndarray
    zdot: np.ndarray
    theta_hat_dot: np.ndarray
    s: np.ndarray


def sliding_xi(state: JointState, alpha: float) -> np.ndarray:
    """Filtered position signal xi = qd + alpha*q exchanged between robots."""
    return state.qdot + alpha * state.q


def damping_control(state: JointState, alpha: float) -> np.ndarray:
    """Pure viscous damping tau = -alpha*qd (gravity-free arm, nothing to compensate)."""
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    return -alpha * state.qdot


def _finish_step(
    state: JointState, ctrl: AdaptiveState, gains: GainSet, zdot: np.ndarray
) -> ControlOutput:
    # zdot feeds the regressor; no algebraic loop since zdot never depends on tau
    s = state.qdot - ctrl.z
    Y = regressor(state.q, state.qdot, ctrl.z, zdot)
    tau = -gains.K @ s + Y @ ctrl.theta_hat
    theta_hat_dot = -gains.Gamma @ (Y.T @ s)
    return ControlOutput(tau=tau, zdot=zdot, theta_hat_dot=theta_hat_dot, s=s)


def single_adaptive_step(
    state: JointState, ctrl: AdaptiveState, gains: GainSet
) -> ControlOutput:
    """One evaluation of the single-robot adaptive law."""
    zdot = -gains.alpha * state.qdot + gains.lambda_M * (state.qdot - ctrl.z)
    return _finish_step(state, ctrl, gains, zdot)


def networked_zdot(
    i: int,
    states: list[JointState],
    z_i: np.ndarray,
    gains: GainSet,
    graph: DiGraph,
) -> np.ndarray:
    """Auxiliary dynamics with undelayed neighbor coupling through xi."""
    st = states[i]
    zdot = -gains.alpha * st.qdot + gains.lambda_M * (st.qdot - z_i)
    xi_i = sliding_xi(st, gains.alpha)
    row = graph.weights[i]
    for j in np.flatnonzero(row > 0.0):
        zdot = zdot - row[j] * (xi_i - sliding_xi(states[j], gains.alpha))
    return zdot


def delayed_networked_zdot(
    i: int,
    state_i: JointState,
    z_i: np.ndarray,
    gains: GainSet,
    graph: DiGraph,
    xi_reader,
    t: float,
) -> np.ndarray:
    """Same as networked_zdot but neighbor xi is read at t - T_ij(t).

    xi_reader(j, t, i) must return robot j's xi sample delayed by the edge
    (i, j) delay, e.g. a closure over DelayChannel objects and a DelayModel.
    """
    zdot = -gains.alpha * state_i.qdot + gains.lambda_M * (state_i.qdot - z_i)
    xi_i = sliding_xi(state_i, gains.alpha)
    row = graph.weights[i]
    for j in np.flatnonzero(row > 0.0):
        zdot = zdot - row[j] * (xi_i - xi_reader(j, t, i))
    return zdot


def channel_xi_reader(channels: list[DelayChannel], delay_model=None):
    """Standard xi_reader: per-source DelayChannel plus an optional DelayModel."""

    def reader(j: int, t: float, i: int) -> np.ndarray:
        delay = 0.0 if delay_model is None else sample_delay(delay_model, (i, j), t)
        return channels[j].read(t, delay)

    return reader


def teleop_zdot_pair(
    states: list[JointState],
    z: list[np.ndarray],
    gains: GainSet,
    xi_reader,
    t: float,
) -> list[np.ndarray]:
    """Two-robot special case: scalar coupling weight lambda on the 2-cycle."""
    out = []
    for i, j in ((0, 1), (1, 0)):
        st = states[i]
        zdot = -gains.alpha * st.qdot + gains.lambda_M * (st.qdot - z[i])
        zdot = zdot - gains.lam * (sliding_xi(st, gains.alpha) - xi_reader(j, t, i))
        out.append(zdot)
    return out


def lyapunov_value(
    state: JointState, ctrl: AdaptiveState, gains: GainSet, theta_true: np.ndarray,
    inertia_matrix: np.ndarray,
) -> float:
    """V = (1/2) s^T M(q) s + (1/2) dtheta^T Gamma^-1 dtheta."""
    s = state.qdot - ctrl.z
    dth = ctrl.theta_hat - theta_true
    return 0.5 * float(s @ inertia_matrix @ s) + 0.5 * float(
        dth @ np.linalg.solve(gains.Gamma, dth)
    )
