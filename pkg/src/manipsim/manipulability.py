"""Empirical manipulability: point-mass benchmark and L2-gain growth curves.

A system is operationally "infinitely manipulable" here when the empirical
gain R(T) = ||y||_{2,[0,T]} / ||f||_{2,[0,T]} keeps growing as the horizon
increases under a square-integrable probe force; "degree one" is reported
when the growth is consistent with exactly one integration of an L2 signal.
The tool reports the raw curve plus this heuristic label, never a
certificate: the degree definition counts integral operations inside the
mapping, which is not directly measurable from trajectories.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from math import log

import numpy as np

from . import sim as _sim
from .controllers import GainSet

PLATEAU_RATIO = 1.2
INPUT_TAIL_RATIO = 1.1

OUTPUT_SELECTORS = ("position_increment", "velocity", "xi_centroid", "q_centroid")


@dataclass(frozen=True, eq=False)
class PointMass:
    """Point mass with viscous damping: m xdd = -b xd + f.

    b may be a callable b(t) >= b_min > 0; the transfer-function probe only
    applies to constant b.
    """

    m: float = 1.0
    b: object = 1.0

    def __post_init__(self):
        if self.m <= 0:
            raise ValueError("mass must be positive")
        if not callable(self.b) and self.b <= 0:
            raise ValueError("damping must be positive")

    def damping(self, t: float) -> float:
        return self.b(t) if callable(self.b) else self.b


@dataclass(eq=False)
class PointMassTrajectory:
    t: np.ndarray
    x: np.ndarray
    xd: np.ndarray
    int_f: np.ndarray


def point_mass_response(
    pm: PointMass, f, horizon: float, step: float = 1e-3, x0: float = 0.0, xd0: float = 0.0
) -> PointMassTrajectory:
    """Integrate the driven point mass by RK4, carrying int(f) as an extra state.

    Accumulating the force integral inside the same RK4 keeps the first
    integral m*xd + b*x - int(f) exact to integrator order for any input.
    """
    n = int(round(horizon / step))
    t_grid = np.arange(n + 1) * step
    x = np.empty(n + 1)
    xd = np.empty(n + 1)
    int_f = np.empty(n + 1)
    x[0], xd[0], int_f[0] = x0, xd0, 0.0
    m = pm.m

    def deriv(t, xv, vv):
        return vv, (f(t) - pm.damping(t) * vv) / m, f(t)

    xi, vi, Fi = x0, xd0, 0.0
    for k in range(n):
        t = t_grid[k]
        a1, b1, c1 = deriv(t, xi, vi)
        a2, b2, c2 = deriv(t + 0.5 * step, xi + 0.5 * step * a1, vi + 0.5 * step * b1)
        a3, b3, c3 = deriv(t + 0.5 * step, xi + 0.5 * step * a2, vi + 0.5 * step * b2)
        a4, b4, c4 = deriv(t + step, xi + step * a3, vi + step * b3)
        xi += (step / 6.0) * (a1 + 2 * a2 + 2 * a3 + a4)
        vi += (step / 6.0) * (b1 + 2 * b2 + 2 * b3 + b4)
        Fi += (step / 6.0) * (c1 + 2 * c2 + 2 * c3 + c4)
        x[k + 1], xd[k + 1], int_f[k + 1] = xi, vi, Fi
    return PointMassTrajectory(t=t_grid, x=x, xd=xd, int_f=int_f)


def point_mass_position_gain(pm: PointMass, omega: float) -> float:
    """|G(j w)| = 1 / (|w| sqrt(m^2 w^2 + b^2)) for the position output."""
    b = pm.b
    if callable(b):
        raise ValueError("transfer-function gains require constant damping")
    if omega == 0.0:
        return np.inf
    return 1.0 / (abs(omega) * np.hypot(pm.m * omega, b))


def point_mass_velocity_gain(pm: PointMass, omega: float) -> float:
    """|j w G(j w)| = 1 / sqrt(m^2 w^2 + b^2) for the velocity output."""
    b = pm.b
    if callable(b):
        raise ValueError("transfer-function gains require constant damping")
    return 1.0 / np.hypot(pm.m * omega, b)


@dataclass(eq=False)
class HinfReport:
    omegas: np.ndarray
    position_gain: np.ndarray
    velocity_gain: np.ndarray
    position_infinite: bool
    position_sup: float
    velocity_sup: float


def hinf_point_mass(pm: PointMass, omegas: np.ndarray | None = None) -> HinfReport:
    """Frequency sweep of the position/velocity gains; flags the low-frequency blow-up."""
    if omegas is None:
        omegas = np.logspace(-6, 3, 400)
    omegas = np.asarray(sorted(o for o in omegas if o > 0), dtype=float)
    pos = np.array([point_mass_position_gain(pm, w) for w in omegas])
    vel = np.array([point_mass_velocity_gain(pm, w) for w in omegas])
    # diverges toward w -> 0: monotone growth over the lowest decades
    low = pos[: max(len(pos) // 4, 2)]
    infinite = bool((np.diff(low) < 0).all() and pos[0] > 1e3 * pos[len(pos) // 2])
    return HinfReport(
        omegas=omegas,
        position_gain=pos,
        velocity_gain=vel,
        position_infinite=infinite,
        position_sup=np.inf if infinite else float(pos.max()),
        velocity_sup=float(point_mass_velocity_gain(pm, 0.0)),
    )


def probe_input(c: float = 5.0, joint: int = 0):
    """The canonical square-integrable probe torque f(t) = c/(t+1) on one joint."""

    def f(t: float) -> np.ndarray:
        out = np.zeros(2)
        out[joint] = c / (t + 1.0)
        return out

    return f


@dataclass(frozen=True, eq=False)
class GainProbe:
    """Probe description: input signal, output selector, baseline, horizons."""

    input: object = None
    output: str = "position_increment"
    horizons: tuple = (10.0, 30.0, 100.0, 300.0, 1000.0)

    def __post_init__(self):
        if self.output not in OUTPUT_SELECTORS:
            raise ValueError(f"output must be one of {OUTPUT_SELECTORS}")
        hs = tuple(float(h) for h in self.horizons)
        if len(hs) < 3 or any(b <= a for a, b in zip(hs, hs[1:])):
            raise ValueError("horizons must be at least 3 strictly increasing values")
        object.__setattr__(self, "horizons", hs)
        object.__setattr__(self, "input", self.input or probe_input())


@dataclass(eq=False)
class GainCurve:
    horizons: np.ndarray
    R: np.ndarray
    input_l2: np.ndarray
    output_l2: np.ndarray
    classification: str
    growth_ratio: float      # R(last) / R(first)
    tail_ratio: float        # R(last) / R(mid)
    fit_const_sse: float
    fit_sqrtlog_sse: float


def _classify(horizons, R):
    mid = len(R) // 2
    tail_ratio = float(R[-1] / R[mid])
    growth_ratio = float(R[-1] / R[0])
    basis = np.column_stack([np.ones(len(R)), np.sqrt(np.log(horizons))])
    coef, *_ = np.linalg.lstsq(basis, R, rcond=None)
    sse_grow = float(((basis @ coef - R) ** 2).sum())
    sse_const = float(((R - R.mean()) ** 2).sum())
    if tail_ratio < PLATEAU_RATIO:
        label = "finite"
    elif sse_grow < sse_const:
        label = "infinite_deg1"
    else:
        label = "indeterminate"
    return label, growth_ratio, tail_ratio, sse_const, sse_grow


def _gain_curve_from_signals(t, y, f_values, horizons):
    ly = _sim.running_l2(t, y)
    lf = _sim.running_l2(t, f_values)
    idx = [min(int(round(h / (t[1] - t[0]))), len(t) - 1) for h in horizons]
    mid = idx[len(idx) // 2]
    if lf[idx[-1]] <= 0 or lf[mid] <= 0:
        raise ValueError("probe input has no energy on the horizons")
    if lf[idx[-1]] / lf[mid] > INPUT_TAIL_RATIO:
        raise ValueError(
            "probe input is not square-integrable at these horizons "
            f"(L2 tail ratio {lf[idx[-1]] / lf[mid]:.3f} > {INPUT_TAIL_RATIO})"
        )
    R = np.array([ly[i] / lf[i] for i in idx])
    label, growth, tail, sse_c, sse_g = _classify(np.array(horizons), R)
    return GainCurve(
        horizons=np.array(horizons),
        R=R,
        input_l2=lf[idx],
        output_l2=ly[idx],
        classification=label,
        growth_ratio=growth,
        tail_ratio=tail,
        fit_const_sse=sse_c,
        fit_sqrtlog_sse=sse_g,
    )


def _scenario_output(trace: _sim.Trace, probe: GainProbe) -> np.ndarray:
    sc = trace.scenario
    r = sc.operator.attached_robot
    alpha = sc.gains[r].alpha
    if probe.output == "position_increment":
        if alpha <= 0:
            raise ValueError("position_increment baseline needs alpha > 0")
        psi0 = sc.q0[r] + sc.z0[r] / alpha
        return trace.q[r] - psi0
    if probe.output == "velocity":
        return trace.qd[r]
    if probe.output == "xi_centroid":
        xc = trace.xi_centroid()
        return xc - xc[0]
    if probe.output == "q_centroid":
        if alpha <= 0:
            raise ValueError("q_centroid baseline needs alpha > 0")
        qc = trace.q_centroid()
        qdc = trace.qd.mean(axis=0)
        return qc - (qc[0] + qdc[0] / alpha)
    raise AssertionError(probe.output)


def estimate_gain_curve(runner, probe: GainProbe, step: float = 1e-2) -> GainCurve:
    """Drive the system with the probe input and build the horizon-indexed gain curve.

    runner is either a Scenario (the probe torque replaces any operator on its
    attached robot) or a PointMass (position_increment / velocity outputs,
    zero initial conditions). One simulation to the largest horizon serves
    every R(T).
    """
    t_max = probe.horizons[-1]
    if isinstance(runner, PointMass):
        f_scalar = lambda t: float(np.asarray(probe.input(t)).ravel()[0])
        traj = point_mass_response(runner, f_scalar, horizon=t_max, step=step)
        if probe.output == "position_increment":
            y = traj.x
        elif probe.output == "velocity":
            y = traj.xd
        else:
            raise ValueError(f"{probe.output} output is undefined for a point mass")
        f_vals = np.array([f_scalar(t) for t in traj.t])
        return _gain_curve_from_signals(traj.t, y, f_vals, probe.horizons)

    if isinstance(runner, _sim.Scenario):
        sc = dataclasses.replace(
            runner,
            horizon=t_max,
            operator=dataclasses.replace(runner.operator, kind="none"),
        )
        trace = _sim.run_scenario(sc, external_input=probe.input)
        y = _scenario_output(trace, probe)
        f_vals = np.array([probe.input(t) for t in trace.t])
        return _gain_curve_from_signals(trace.t, y, f_vals, probe.horizons)

    raise TypeError(f"runner must be a Scenario or PointMass, got {type(runner)!r}")


def velocity_manipulability_config(gains: GainSet) -> GainSet:
    """Zero the position-coupling gain so velocity becomes the unbounded-gain output."""
    return gains.replace(alpha=0.0)
