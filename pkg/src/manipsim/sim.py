"""Closed-loop scenario integration: robots, controllers, graph schedule, delays.

Loop semantics: at every control step (default 5 ms) everything a robot
receives from outside is sampled and held over the step: the neighbor
coupling term (with its delayed xi reads), the operator/environment/probe
torques, and the active graph. In the default "rk4" mode the robot-local
closed loop (plant plus controller states z and theta_hat, with the torque
law re-evaluated continuously) is then integrated over the step with RK4
substeps. Holding the torque itself over the full control period is
demonstrably unstable for the high-adaptation-gain six-robot configuration,
whose sliding/adaptation oscillation sits at the 5 ms sampling margin, so
only the communicated and external quantities are zero-order held.
"paper_euler" mode instead takes one explicit Euler step of the snapshot
derivatives. Sliding outputs xi are appended to the per-robot delay channels
at every step before any controller reads them, so a zero-delay read returns
the current sample.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from math import cos, sin

import numpy as np

from .controllers import AdaptiveState, ControlOutput, GainSet, sliding_xi
from .dynamics import ArmModel, DegenerateInertiaError, JointState, regressor
from .network import (
    DelayChannel,
    DelayModel,
    GraphSchedule,
    sample_delay,
    schedule_condition_check,
)

DIVERGENCE_LIMIT = 1e6

CONTROLLER_KINDS = ("damping", "single_adaptive", "networked", "networked_delayed", "teleop")


class SimulationDiverged(RuntimeError):
    def __init__(self, t: float, robot: int, what: str):
        super().__init__(f"state magnitude exceeded {DIVERGENCE_LIMIT:g} at t={t:.3f}s "
                         f"(robot {robot}, {what}); unstable gains or corrupted scenario")
        self.t = t
        self.robot = robot


def _as_gain_matrix(g, dim):
    m = np.asarray(g, dtype=float)
    if m.ndim == 0:
        m = float(m) * np.eye(dim)
    if m.shape != (dim, dim):
        raise ValueError(f"gain must be scalar or {dim}x{dim}")
    if (np.linalg.eigvalsh(0.5 * (m + m.T)) < -1e-12).any():
        raise ValueError("gain must be positive semidefinite")
    return m


@dataclass(frozen=True, eq=False)
class OperatorModel:
    """External agent acting on one robot at the torque level, as a PD pull toward q_h."""

    kind: str = "none"
    Kd: np.ndarray = 5.0
    Kp: np.ndarray = 10.0
    q_h: np.ndarray = field(default_factory=lambda: np.array([3.5, 3.0]))
    attached_robot: int = 0
    start: float = 0.0
    stop: float = np.inf

    def __post_init__(self):
        if self.kind not in ("none", "pd"):
            raise ValueError(f"unknown operator kind {self.kind!r}")
        object.__setattr__(self, "Kd", _as_gain_matrix(self.Kd, 2))
        object.__setattr__(self, "Kp", _as_gain_matrix(self.Kp, 2))
        object.__setattr__(self, "q_h", np.asarray(self.q_h, dtype=float))


@dataclass(frozen=True, eq=False)
class EnvironmentModel:
    """Slave-side environment; a linear spring exerting Ke (q - q_e) back on the robot."""

    kind: str = "none"
    Ke: np.ndarray = 20.0
    q_e: np.ndarray = field(default_factory=lambda: np.zeros(2))

    def __post_init__(self):
        if self.kind not in ("none", "spring"):
            raise ValueError(f"unknown environment kind {self.kind!r}")
        object.__setattr__(self, "Ke", _as_gain_matrix(self.Ke, 2))
        object.__setattr__(self, "q_e", np.asarray(self.q_e, dtype=float))


def operator_torque(model: OperatorModel, state: JointState, t: float) -> np.ndarray:
    """PD pull toward q_h while active; zero otherwise."""
    if model.kind == "none" or not (model.start <= t < model.stop):
        return np.zeros(2)
    return -model.Kd @ state.qdot - model.Kp @ (state.q - model.q_h)


@dataclass(frozen=True, eq=False)
class Integrator:
    kind: str = "rk4"
    substep: float = 1e-3

    def __post_init__(self):
        if self.kind not in ("rk4", "paper_euler"):
            raise ValueError(f"unknown integrator kind {self.kind!r}")
        if self.kind == "rk4" and self.substep <= 0:
            raise ValueError("substep must be positive")


@dataclass(frozen=True, eq=False)
class Scenario:
    """Complete declarative experiment description. Deterministic given seed."""

    robots: tuple
    controller: str
    gains: object  # GainSet or list of GainSet, one per robot
    horizon: float
    schedule: GraphSchedule | None = None
    delay_model: DelayModel | None = None
    operator: OperatorModel = field(default_factory=OperatorModel)
    environment: EnvironmentModel = field(default_factory=EnvironmentModel)
    q0: np.ndarray = None
    qd0: np.ndarray = None
    z0: np.ndarray = None
    th0: np.ndarray = None
    control_period: float = 0.005
    integrator: Integrator = field(default_factory=Integrator)
    seed: int = 0
    label: str = "scenario"

    def __post_init__(self):
        n = len(self.robots)
        if n == 0:
            raise ValueError("at least one robot required")
        if self.controller not in CONTROLLER_KINDS:
            raise ValueError(f"unknown controller {self.controller!r}")
        if self.control_period <= 0 or self.horizon <= 0:
            raise ValueError("control_period and horizon must be positive")
        if self.controller in ("damping", "single_adaptive") and n != 1:
            raise ValueError(f"{self.controller} controller drives exactly one robot")
        if self.controller == "teleop" and n != 2:
            raise ValueError("teleop requires exactly two robots")
        if self.controller in ("networked", "networked_delayed"):
            if self.schedule is None:
                raise ValueError(f"{self.controller} requires a graph schedule")
            if self.schedule.n != n:
                raise ValueError("schedule vertex count must match robot count")
        elif self.schedule is not None:
            raise ValueError(f"{self.controller} does not take a graph schedule")
        if self.controller == "networked_delayed" and self.delay_model is None:
            raise ValueError("networked_delayed requires a delay model")
        if self.controller in ("damping", "single_adaptive", "networked") and self.delay_model is not None:
            raise ValueError(f"{self.controller} does not take a delay model")

        gains = self.gains
        if isinstance(gains, GainSet):
            gains = [gains] * n
        gains = list(gains)
        if len(gains) != n:
            raise ValueError("need one GainSet per robot")
        object.__setattr__(self, "gains", gains)

        def _ic(value, width, default):
            if value is None:
                arr = np.full((n, width), float(default))
            else:
                arr = np.asarray(value, dtype=float).reshape(n, width).copy()
            return arr

        object.__setattr__(self, "q0", _ic(self.q0, 2, 0.0))
        object.__setattr__(self, "qd0", _ic(self.qd0, 2, 0.0))
        object.__setattr__(self, "z0", _ic(self.z0, 2, 0.0))
        object.__setattr__(self, "th0", _ic(self.th0, 3, 0.0))
        object.__setattr__(self, "robots", tuple(self.robots))

    @property
    def n_robots(self) -> int:
        return len(self.robots)


@dataclass(eq=False)
class Trace:
    """Uniform-grid record of all states and torques, one row per control step."""

    t: np.ndarray
    q: np.ndarray        # (n, N+1, 2)
    qd: np.ndarray
    z: np.ndarray
    zdot: np.ndarray
    s: np.ndarray
    th: np.ndarray       # (n, N+1, 3)
    tau: np.ndarray      # controller torque
    tauh: np.ndarray     # external torque applied to the plant (operator/environment/probe)
    scenario: Scenario

    @property
    def n_robots(self) -> int:
        return self.q.shape[0]

    def xi(self, i: int) -> np.ndarray:
        return self.qd[i] + self.scenario.gains[i].alpha * self.q[i]

    def xi_centroid(self) -> np.ndarray:
        return np.mean([self.xi(i) for i in range(self.n_robots)], axis=0)

    def q_centroid(self) -> np.ndarray:
        return self.q.mean(axis=0)

    def index_at(self, t: float) -> int:
        return int(round(t / self.scenario.control_period))


def l2_norm(t: np.ndarray, values: np.ndarray, horizon: float | None = None) -> float:
    """Trapezoid-rule L2 norm sqrt(int ||v||^2 dt) up to the horizon."""
    v = np.asarray(values, dtype=float)
    if v.ndim == 1:
        v = v[:, None]
    if horizon is not None:
        keep = t <= horizon + 1e-12
        t, v = t[keep], v[keep]
    sq = (v * v).sum(axis=1)
    return float(np.sqrt(np.trapz(sq, t)))


def running_l2(t: np.ndarray, values: np.ndarray) -> np.ndarray:
    v = np.asarray(values, dtype=float)
    if v.ndim == 1:
        v = v[:, None]
    sq = (v * v).sum(axis=1)
    inc = 0.5 * np.diff(t) * (sq[:-1] + sq[1:])
    return np.sqrt(np.concatenate([[0.0], np.cumsum(inc)]))


def consensus_error(trace: Trace, t: float) -> tuple[float, float]:
    """(max pairwise position gap, max velocity magnitude), both in the sup norm."""
    k = trace.index_at(t)
    qs = trace.q[:, k, :]
    n = qs.shape[0]
    pos = 0.0
    for i in range(n):
        for j in range(i + 1, n):
            pos = max(pos, float(np.abs(qs[i] - qs[j]).max()))
    vel = float(np.abs(trace.qd[:, k, :]).max())
    return pos, vel


def settling_time(t: np.ndarray, err: np.ndarray, band: float) -> float | None:
    """First time after which err stays within the band; None if it never settles."""
    outside = np.flatnonzero(err > band)
    if len(outside) == 0:
        return float(t[0])
    if outside[-1] == len(err) - 1:
        return None
    return float(t[outside[-1] + 1])


def _advance_plant(q, qd, tau, theta, h, n_sub):
    """Advance one arm under a held torque: RK4 with n_sub substeps (closed-form model)."""
    t1, t2, t3 = theta
    u1, u2 = float(tau[0]), float(tau[1])
    q1, q2 = float(q[0]), float(q[1])
    p1, p2 = float(qd[0]), float(qd[1])
    hs = h / n_sub

    def acc(q2_, p1_, p2_):
        c2 = cos(q2_)
        s2 = sin(q2_)
        r1 = u1 + t3 * s2 * (p2_ * p1_ + (p1_ + p2_) * p2_)
        r2 = u2 - t3 * s2 * p1_ * p1_
        m12 = t2 + t3 * c2
        m11 = t1 + 2.0 * t3 * c2
        det = m11 * t2 - m12 * m12
        if det <= 1e-12:
            raise DegenerateInertiaError(f"det M = {det} <= 1e-12")
        return (t2 * r1 - m12 * r2) / det, (m11 * r2 - m12 * r1) / det

    for _ in range(n_sub):
        a1, b1 = p1, p2
        c1, d1 = acc(q2, p1, p2)
        a2, b2 = p1 + 0.5 * hs * c1, p2 + 0.5 * hs * d1
        c2_, d2 = acc(q2 + 0.5 * hs * b1, a2, b2)
        a3, b3 = p1 + 0.5 * hs * c2_, p2 + 0.5 * hs * d2
        c3, d3 = acc(q2 + 0.5 * hs * b2, a3, b3)
        a4, b4 = p1 + hs * c3, p2 + hs * d3
        c4, d4 = acc(q2 + hs * b3, a4, b4)
        q1 += (hs / 6.0) * (a1 + 2 * a2 + 2 * a3 + a4)
        q2 += (hs / 6.0) * (b1 + 2 * b2 + 2 * b3 + b4)
        p1 += (hs / 6.0) * (c1 + 2 * c2_ + 2 * c3 + c4)
        p2 += (hs / 6.0) * (d1 + 2 * d2 + 2 * d3 + d4)

    return np.array([q1, q2]), np.array([p1, p2])


def _advance_coupled(q, qd, z, th, coup, tau_ext, gains, theta, h, n_sub):
    """Advance one robot's plant and controller states under held external inputs.

    coup is the held neighbor-coupling vector entering zdot; tau_ext the held
    external torque. The torque law, auxiliary dynamics, and adaptation law
    are re-evaluated at every RK4 stage. Closed-form 2-DOF model throughout.
    """
    t1m, t2m, t3m = theta
    (k11, k12), (_, k22) = gains.K
    G = gains.Gamma
    g11, g12, g13 = G[0]
    _, g22, g23 = G[1]
    g33 = G[2, 2]
    alpha = gains.alpha
    lam_M = gains.lambda_M
    cu1, cu2 = float(coup[0]), float(coup[1])
    e1, e2 = float(tau_ext[0]), float(tau_ext[1])
    hs = h / n_sub

    def deriv(st):
        q1, q2, p1, p2, z1, z2, a1, a2, a3 = st
        s1 = p1 - z1
        s2v = p2 - z2
        zd1 = -alpha * p1 + lam_M * s1 - cu1
        zd2 = -alpha * p2 + lam_M * s2v - cu2
        c2 = cos(q2)
        sn2 = sin(q2)
        y11 = zd1
        y12 = zd2
        y13 = c2 * (2.0 * zd1 + zd2) - sn2 * (p2 * z1 + (p1 + p2) * z2)
        y22 = zd1 + zd2
        y23 = c2 * zd1 + sn2 * p1 * z1
        u1 = e1 - (k11 * s1 + k12 * s2v) + y11 * a1 + y12 * a2 + y13 * a3
        u2 = e2 - (k12 * s1 + k22 * s2v) + y22 * a2 + y23 * a3
        r1 = u1 + t3m * sn2 * (p2 * p1 + (p1 + p2) * p2)
        r2 = u2 - t3m * sn2 * p1 * p1
        m12 = t2m + t3m * c2
        m11 = t1m + 2.0 * t3m * c2
        det = m11 * t2m - m12 * m12
        if det <= 1e-12:
            raise DegenerateInertiaError(f"det M = {det} <= 1e-12")
        w1 = y11 * s1
        w2 = y12 * s1 + y22 * s2v
        w3 = y13 * s1 + y23 * s2v
        return (
            p1,
            p2,
            (t2m * r1 - m12 * r2) / det,
            (m11 * r2 - m12 * r1) / det,
            zd1,
            zd2,
            -(g11 * w1 + g12 * w2 + g13 * w3),
            -(g12 * w1 + g22 * w2 + g23 * w3),
            -(g13 * w1 + g23 * w2 + g33 * w3),
        )

    st = (
        float(q[0]), float(q[1]), float(qd[0]), float(qd[1]),
        float(z[0]), float(z[1]), float(th[0]), float(th[1]), float(th[2]),
    )
    for _ in range(n_sub):
        k1 = deriv(st)
        k2 = deriv(tuple(s + 0.5 * hs * d for s, d in zip(st, k1)))
        k3 = deriv(tuple(s + 0.5 * hs * d for s, d in zip(st, k2)))
        k4 = deriv(tuple(s + hs * d for s, d in zip(st, k3)))
        st = tuple(
            s + (hs / 6.0) * (d1 + 2 * d2 + 2 * d3 + d4)
            for s, d1, d2, d3, d4 in zip(st, k1, k2, k3, k4)
        )
    return (
        np.array(st[0:2]),
        np.array(st[2:4]),
        np.array(st[4:6]),
        np.array(st[6:9]),
    )


def _euler_plant(q, qd, tau, theta, h):
    t1, t2, t3 = theta
    c2 = cos(float(q[1]))
    s2 = sin(float(q[1]))
    p1, p2 = float(qd[0]), float(qd[1])
    r1 = float(tau[0]) + t3 * s2 * (p2 * p1 + (p1 + p2) * p2)
    r2 = float(tau[1]) - t3 * s2 * p1 * p1
    m12 = t2 + t3 * c2
    m11 = t1 + 2.0 * t3 * c2
    det = m11 * t2 - m12 * m12
    if det <= 1e-12:
        raise DegenerateInertiaError(f"det M = {det} <= 1e-12")
    qdd = np.array([(t2 * r1 - m12 * r2) / det, (m11 * r2 - m12 * r1) / det])
    return q + h * qd, qd + h * qdd


def run_scenario(sc: Scenario, external_input=None) -> Trace:
    """Simulate the closed loop and record the full trace.

    external_input(t) -> 2-vector, if given, is an additional external torque
    on the operator's attached robot (used by the gain-curve probes).
    """
    n = sc.n_robots
    h = sc.control_period
    n_steps = int(round(sc.horizon / h))
    delayed = sc.controller in ("networked_delayed", "teleop")

    if sc.controller in ("networked", "networked_delayed"):
        window = sc.schedule.dwell_min * max(len(sc.schedule.graphs), 1)
        if not schedule_condition_check(sc.schedule, window, sc.horizon):
            warnings.warn(
                f"graph schedule fails the spanning-tree union condition on {window:.3g} s windows; "
                "consensus is not guaranteed",
                stacklevel=2,
            )

    channels = None
    if delayed:
        keep = 0.5 + (sc.delay_model.max_delay if sc.delay_model else 0.0)
        channels = [DelayChannel(horizon=keep) for _ in range(n)]

    q = sc.q0.copy()
    qd = sc.qd0.copy()
    z = sc.z0.copy()
    th = sc.th0.copy()
    alphas = [g.alpha for g in sc.gains]

    t_grid = np.arange(n_steps + 1) * h
    rec = {
        "q": np.empty((n, n_steps + 1, 2)),
        "qd": np.empty((n, n_steps + 1, 2)),
        "z": np.empty((n, n_steps + 1, 2)),
        "zdot": np.empty((n, n_steps + 1, 2)),
        "s": np.empty((n, n_steps + 1, 2)),
        "th": np.empty((n, n_steps + 1, 3)),
        "tau": np.empty((n, n_steps + 1, 2)),
        "tauh": np.empty((n, n_steps + 1, 2)),
    }

    n_sub = max(int(round(h / sc.integrator.substep)), 1) if sc.integrator.kind == "rk4" else 1

    def read_xi(j: int, t: float, i: int) -> np.ndarray:
        delay = 0.0 if sc.delay_model is None else sample_delay(sc.delay_model, (i, j), t)
        return channels[j].read(t, delay)

    for k in range(n_steps + 1):
        t = float(t_grid[k])

        if delayed:
            for j in range(n):
                channels[j].append(t, qd[j] + alphas[j] * q[j])

        graph = sc.schedule.active(t) if sc.schedule is not None else None

        coups = np.zeros((n, 2))  # held neighbor-coupling term entering zdot
        zdots = np.empty((n, 2))
        taus = np.empty((n, 2))
        tauhs = np.zeros((n, 2))
        thdots = np.empty((n, 3))
        ss = qd - z

        for i in range(n):
            g = sc.gains[i]
            if sc.controller == "damping":
                zdots[i] = 0.0
                thdots[i] = 0.0
                taus[i] = -g.alpha * qd[i]
                ss[i] = 0.0
                continue

            if sc.controller == "networked":
                xi_i = qd[i] + g.alpha * q[i]
                row = graph.weights[i]
                for j in np.flatnonzero(row > 0.0):
                    coups[i] += row[j] * (xi_i - (qd[j] + alphas[j] * q[j]))
            elif sc.controller == "networked_delayed":
                xi_i = qd[i] + g.alpha * q[i]
                row = graph.weights[i]
                for j in np.flatnonzero(row > 0.0):
                    coups[i] += row[j] * (xi_i - read_xi(j, t, i))
            elif sc.controller == "teleop":
                j = 1 - i
                xi_i = qd[i] + g.alpha * q[i]
                coups[i] = g.lam * (xi_i - read_xi(j, t, i))

            zd = -g.alpha * qd[i] + g.lambda_M * (qd[i] - z[i]) - coups[i]
            Y = regressor(q[i], qd[i], z[i], zd)
            zdots[i] = zd
            taus[i] = -g.K @ ss[i] + Y @ th[i]
            thdots[i] = -g.Gamma @ (Y.T @ ss[i])

        # external torques: operator PD, probe input, slave-side spring
        op = sc.operator
        if op.kind == "pd":
            i = op.attached_robot
            tauhs[i] += operator_torque(op, JointState(q[i], qd[i]), t)
        if external_input is not None:
            tauhs[op.attached_robot] += np.asarray(external_input(t), dtype=float)
        if sc.environment.kind == "spring":
            i = 1 if n > 1 else 0
            tauhs[i] -= sc.environment.Ke @ (q[i] - sc.environment.q_e)

        for name, arr in (("q", q), ("qd", qd), ("z", z), ("zdot", zdots),
                          ("s", ss), ("th", th), ("tau", taus), ("tauh", tauhs)):
            rec[name][:, k, :] = arr

        if np.abs(q).max() > DIVERGENCE_LIMIT or np.abs(qd).max() > DIVERGENCE_LIMIT \
                or np.abs(th).max() > DIVERGENCE_LIMIT:
            worst = int(np.abs(qd).max(axis=1).argmax())
            raise SimulationDiverged(t, worst, "position/velocity/estimate")

        if k == n_steps:
            break

        for i in range(n):
            theta = sc.robots[i].params.theta
            if sc.controller == "damping":
                if sc.integrator.kind == "rk4":
                    q[i], qd[i] = _advance_plant(
                        q[i], qd[i], taus[i] + tauhs[i], theta, h, n_sub
                    )
                else:
                    q[i], qd[i] = _euler_plant(q[i], qd[i], taus[i] + tauhs[i], theta, h)
            elif sc.integrator.kind == "rk4":
                q[i], qd[i], z[i], th[i] = _advance_coupled(
                    q[i], qd[i], z[i], th[i], coups[i], tauhs[i],
                    sc.gains[i], theta, h, n_sub,
                )
            else:
                q[i], qd[i] = _euler_plant(q[i], qd[i], taus[i] + tauhs[i], theta, h)
                z[i] = z[i] + h * zdots[i]
                th[i] = th[i] + h * thdots[i]

    return Trace(t=t_grid, q=rec["q"], qd=rec["qd"], z=rec["z"], zdot=rec["zdot"],
                 s=rec["s"], th=rec["th"], tau=rec["tau"], tauh=rec["tauh"], scenario=sc)


def torque_reflection_check(trace: Trace, window: float = 5.0, tol: float = 0.02) -> dict:
    """Steady-state torque reflection for a teleoperation trace.

    Over a trailing window in which all ||qd_i|| and ||zdot_i|| stay below
    1e-3, the operator torque must match (lam*alpha/lambda_M) K (q1 - q2) and
    the environment torque must mirror it. The trace records external torques
    as applied to the plant, so the slave-side environment torque is
    -tauh[1]. Tolerances are relative to the operator torque magnitude.
    """
    sc = trace.scenario
    if sc.controller != "teleop":
        raise ValueError("torque reflection is defined for teleoperation traces")
    g = sc.gains[0]
    if g.lambda_M <= 0:
        raise ValueError("torque reflection requires lambda_M > 0")
    k0 = trace.index_at(trace.t[-1] - window)
    sl = slice(k0, len(trace.t))
    moving = max(
        float(np.abs(trace.qd[:, sl, :]).max()), float(np.abs(trace.zdot[:, sl, :]).max())
    )
    if moving > 1e-3:
        return {"steady": False, "residual_motion": moving, "passed": False,
                "inconclusive": True}

    coef = (g.lam * g.alpha / g.lambda_M) * g.K
    dq = trace.q[0, sl, :] - trace.q[1, sl, :]
    predicted = dq @ coef.T
    tau1 = trace.tauh[0, sl, :]
    tau2 = -trace.tauh[1, sl, :]
    # scale floor absorbs roundoff in the all-zero free-motion case (0 == 0)
    scale = max(float(np.abs(tau1).max()), float(np.abs(predicted).max()), 1e-9)
    err_master = float(np.abs(tau1 - predicted).max()) / scale
    err_slave = float(np.abs(tau2 - predicted).max()) / scale
    err_pair = float(np.abs(tau1 - tau2).max()) / scale
    return {
        "steady": True,
        "rel_err_master": err_master,
        "rel_err_slave": err_slave,
        "rel_err_pair": err_pair,
        "tau_scale": scale,
        "passed": max(err_master, err_slave, err_pair) < tol,
        "inconclusive": False,
    }
