"""Fixed-step simulation and empirical stability probes for delayed LTV systems.

Systems have the form

    xdot(t) = sum_k A_k(t) x(t - T_k(t)) + u(t),      y(t) = C(t) x(t)

where each term's delay may be absent (instantaneous coupling) or a bounded
time-varying lag. Delayed state values are read by zero-order hold from the
stored trajectory; the zero-delay configuration therefore exercises exactly
the same code path as the delayed one.

"Bounded" and "converges" are empirical throughout: a running sup or running
Lp norm counts as bounded/convergent when its trailing-window growth falls
below a relative tolerance. The probes report curves and verdicts at desk
scale, they do not prove the asymptotic statements.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

TRAILING_FRACTION = 0.9
TRAILING_REL_TOL = 1e-3
DECAY_MARGIN = 1e-2


def _as_matrix_fn(m):
    if callable(m):
        return m
    arr = np.asarray(m, dtype=float)
    return lambda t, _a=arr: _a


def _as_delay_fn(d):
    if d is None:
        return None
    if callable(d):
        return d
    val = float(d)
    if val == 0.0:
        return None
    return lambda t, _v=val: _v


@dataclass(frozen=True, eq=False)
class LTVTerm:
    """One coupling term A(t) x(t - T(t)); delay None means instantaneous."""

    coeff: object
    delay: object = None

    def coeff_fn(self):
        return _as_matrix_fn(self.coeff)

    def delay_fn(self):
        return _as_delay_fn(self.delay)


@dataclass(frozen=True, eq=False)
class DelayedLTVSystem:
    """Delayed LTV system with declared delay bound and initial history.

    history: callable on [-max_delay, 0] or a constant vector; defaults to
    the zero vector (constant).
    output_matrix: None means y = x.
    """

    dim: int
    terms: tuple
    output_matrix: object = None
    history: object = None
    max_delay: float = 0.0

    def history_fn(self):
        h = self.history
        if h is None:
            z = np.zeros(self.dim)
            return lambda t: z
        if callable(h):
            return h
        arr = np.asarray(h, dtype=float)
        return lambda t, _a=arr: _a

    def output_fn(self):
        if self.output_matrix is None:
            eye = np.eye(self.dim)
            return lambda t: eye
        return _as_matrix_fn(self.output_matrix)

    def with_history(self, history) -> "DelayedLTVSystem":
        return DelayedLTVSystem(self.dim, self.terms, self.output_matrix, history, self.max_delay)

    def shifted(self, t0: float) -> "DelayedLTVSystem":
        """Same system observed from start time t0 (coefficients and delays shifted)."""
        if t0 == 0.0:
            return self
        terms = tuple(
            LTVTerm(
                (lambda t, f=term.coeff_fn(): f(t + t0)),
                None if term.delay_fn() is None else (lambda t, f=term.delay_fn(): f(t + t0)),
            )
            for term in self.terms
        )
        out = None if self.output_matrix is None else (lambda t, f=self.output_fn(): f(t + t0))
        return DelayedLTVSystem(self.dim, terms, out, self.history, self.max_delay)


def _zero_input(dim):
    z = np.zeros(dim)
    return lambda t: z


@dataclass(eq=False)
class SignalProbe:
    """Grid samples of the driven system plus running-norm bookkeeping."""

    t: np.ndarray
    x: np.ndarray
    xdot: np.ndarray
    y: np.ndarray
    u: np.ndarray
    int_u: np.ndarray

    @staticmethod
    def running_sup(values: np.ndarray) -> np.ndarray:
        return np.maximum.accumulate(np.linalg.norm(np.atleast_2d(values.T).T, axis=-1))

    def running_lp(self, values: np.ndarray, p: float) -> np.ndarray:
        """Running Lp norm by the trapezoid rule (p < inf); non-decreasing in the horizon."""
        mag = np.linalg.norm(np.atleast_2d(values.T).T, axis=-1)
        if np.isinf(p):
            return np.maximum.accumulate(mag)
        dt = np.diff(self.t)
        pw = mag ** p
        inc = 0.5 * dt * (pw[:-1] + pw[1:])
        return np.concatenate([[0.0], np.cumsum(inc)]) ** (1.0 / p)


def stops_growing(curve: np.ndarray, rel_tol: float = TRAILING_REL_TOL) -> bool:
    """Empirical boundedness: trailing-window growth of a non-decreasing curve is tiny."""
    k = int(TRAILING_FRACTION * (len(curve) - 1))
    final = curve[-1]
    if final == 0.0:
        return True
    return bool((final - curve[k]) / final < rel_tol)


def trailing_sup(t: np.ndarray, values: np.ndarray, fraction: float = 0.9) -> float:
    mag = np.linalg.norm(np.atleast_2d(values.T).T, axis=-1)
    k = int(fraction * (len(mag) - 1))
    return float(mag[k:].max())


def goes_to_zero(t: np.ndarray, values: np.ndarray) -> bool:
    mag = np.linalg.norm(np.atleast_2d(values.T).T, axis=-1)
    peak = mag.max()
    if peak == 0.0:
        return True
    return bool(trailing_sup(t, values) <= max(0.02 * peak, 1e-9))


def simulate_ltv(
    sys: DelayedLTVSystem, u=None, horizon: float = 30.0, step: float = 0.01
) -> SignalProbe:
    """Integrate the delay differential equation with fixed-step RK4.

    Delayed state reads are zero-order holds on the stored trajectory, so the
    precondition step <= min positive delay / 4 guarantees every stage only
    looks at already-computed grid points.
    """
    if horizon <= 0 or step <= 0:
        raise ValueError("horizon and step must be positive")
    if u is None:
        u = _zero_input(sys.dim)

    coeffs = [term.coeff_fn() for term in sys.terms]
    delays = [term.delay_fn() for term in sys.terms]
    hist = sys.history_fn()
    out = sys.output_fn()

    n = int(round(horizon / step))
    t_grid = np.arange(n + 1) * step

    # spot-check the declared delay bound and the step-size precondition
    positive = [d for d in delays if d is not None]
    if positive:
        samples = np.linspace(0.0, horizon, 257)
        vals = np.array([[d(t) for t in samples] for d in positive])
        if vals.min() < 0:
            raise ValueError("negative delay encountered")
        if vals.max() > sys.max_delay + 1e-12:
            raise ValueError(
                f"sampled delay {vals.max()} exceeds declared max_delay {sys.max_delay}"
            )
        if step > vals.min() / 4.0 + 1e-15:
            raise ValueError(
                f"step {step} too large for min delay {vals.min()} (need step <= delay/4)"
            )

    X = np.empty((n + 1, sys.dim))
    X[0] = hist(0.0)
    filled = 0

    def lookup(tq: float) -> np.ndarray:
        if tq < 0.0:
            return hist(max(tq, -sys.max_delay))
        idx = min(int(np.floor(tq / step + 1e-9)), filled)
        return X[idx]

    def rhs(t: float, x_now: np.ndarray) -> np.ndarray:
        dx = np.array(u(t), dtype=float)
        for A, d in zip(coeffs, delays):
            if d is None:
                dx = dx + A(t) @ x_now
            else:
                dx = dx + A(t) @ lookup(t - d(t))
        return dx

    xdot0 = rhs(0.0, X[0])
    xdots = np.empty((n + 1, sys.dim))
    xdots[0] = xdot0
    for k in range(n):
        t = t_grid[k]
        xk = X[k]
        k1 = xdots[k]
        k2 = rhs(t + 0.5 * step, xk + 0.5 * step * k1)
        k3 = rhs(t + 0.5 * step, xk + 0.5 * step * k2)
        k4 = rhs(t + step, xk + step * k3)
        X[k + 1] = xk + (step / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        filled = k + 1
        xdots[k + 1] = rhs(t_grid[k + 1], X[k + 1])

    U = np.array([np.atleast_1d(np.asarray(u(t), dtype=float)) for t in t_grid])
    int_u = np.vstack(
        [np.zeros(U.shape[1]), np.cumsum(0.5 * np.diff(t_grid)[:, None] * (U[:-1] + U[1:]), axis=0)]
    )
    Y = np.array([out(t) @ X[k] for k, t in enumerate(t_grid)])
    return SignalProbe(t=t_grid, x=X, xdot=xdots, y=Y, u=U, int_u=int_u)


def check_uniform_exp_decay(
    sys: DelayedLTVSystem,
    trials: int = 5,
    horizon: float = 30.0,
    step: float = 0.01,
    seed: int = 0,
    margin: float = DECAY_MARGIN,
    start_times=(0.0, 3.7, 11.2),
) -> tuple[bool, float]:
    """Fit log||y|| decay rates over randomized histories and start times.

    Returns (all fitted slopes <= -margin, worst slope). Uniformity over start
    times is sampled at finitely many shifts, not proven.
    """
    rng = np.random.default_rng(seed)
    worst = -np.inf
    ok = True
    for _ in range(trials):
        x0 = rng.normal(size=sys.dim)
        x0 = x0 / max(np.linalg.norm(x0), 1e-9)
        for t0 in start_times:
            probe = simulate_ltv(sys.shifted(t0).with_history(x0), None, horizon, step)
            mag = np.linalg.norm(probe.y, axis=-1) if probe.y.ndim > 1 else np.abs(probe.y)
            half = len(mag) // 2
            mask = mag[half:] > 1e-250
            if mask.sum() < 8:
                slope = -np.inf  # already underflowed: decayed hard
            else:
                slope = np.polyfit(probe.t[half:][mask], np.log(mag[half:][mask]), 1)[0]
            worst = max(worst, slope)
            if not slope <= -margin:
                ok = False
    return ok, worst


def verify_ibibo(sys: DelayedLTVSystem, u_family, horizon: float = 60.0, step: float = 0.01):
    """Integral-bounded-input / bounded-output probe.

    u_family: iterable of (name, u). Entries whose integral keeps growing are
    reported with precondition_ok = False instead of being asserted against.
    """
    report = []
    for name, u in u_family:
        probe = simulate_ltv(sys, u, horizon, step)
        sup_int_u = SignalProbe.running_sup(probe.int_u)
        sup_y = SignalProbe.running_sup(probe.y)
        report.append(
            {
                "name": name,
                "precondition_ok": stops_growing(sup_int_u),
                "int_u_sup": float(sup_int_u[-1]),
                "y_sup": float(sup_y[-1]),
                "y_bounded": stops_growing(sup_y),
            }
        )
    return report


def delay_rate_bound_ok(
    sys: DelayedLTVSystem, horizon: float, epsilon: float = 0.05, samples: int = 8192
) -> bool:
    """Spot-check Tdot <= 1 - epsilon by forward differences on a fine grid.

    Consecutive-sample differencing also catches jump discontinuities, whose
    one-sided rate is unbounded.
    """
    grid = np.linspace(0.0, horizon, samples)
    h = grid[1] - grid[0]
    for term in sys.terms:
        d = term.delay_fn()
        if d is None:
            continue
        vals = np.array([d(t) for t in grid])
        if (np.diff(vals) / h > 1.0 - epsilon).any():
            return False
    return True


def verify_lp_output(
    sys: DelayedLTVSystem,
    u,
    p: float = 2.0,
    horizon: float = 60.0,
    step: float = 0.01,
    c=None,
):
    """Probe the claim: delays rate-bounded and int(u) + c in Lp imply y in Lp."""
    probe = simulate_ltv(sys, u, horizon, step)
    if c is None:
        c = -probe.int_u[-1]  # natural constant: the tail the integral settles to
    shifted = probe.int_u + np.asarray(c, dtype=float)
    input_curve = probe.running_lp(shifted, p)
    y_curve = probe.running_lp(probe.y, p)
    return {
        "p": p,
        "delay_rate_ok": delay_rate_bound_ok(sys, horizon),
        "input_lp_ok": stops_growing(input_curve),
        "input_lp_final": float(input_curve[-1]),
        "y_lp_converged": stops_growing(y_curve),
        "y_lp_final": float(y_curve[-1]),
    }


def verify_dbds(sys: DelayedLTVSystem, u_family, horizon: float = 60.0, step: float = 0.01):
    """Bounded-input differential-bounded-state probe (plus the integral clause).

    Detects which hypotheses each input satisfies (bounded, Lp, to-zero,
    integral-bounded) and reports the corresponding conclusions about xdot and
    F_D(x) = xdot - u. The u = 0 run confirming marginal stability of the
    first kind (state settles to a constant) is included as marginal_ok.
    """
    free = simulate_ltv(sys, None, horizon, step)
    settled = goes_to_zero(free.t, free.xdot)
    drift = float(np.linalg.norm(free.x[-1] - free.x[int(0.9 * (len(free.t) - 1))]))
    marginal_ok = settled and drift < 1e-3 * max(1.0, float(np.linalg.norm(free.x[-1])))

    items = []
    for name, u in u_family:
        probe = simulate_ltv(sys, u, horizon, step)
        fd = probe.xdot - probe.u
        sup_u = SignalProbe.running_sup(probe.u)
        sup_intu = SignalProbe.running_sup(probe.int_u)
        sup_xdot = SignalProbe.running_sup(probe.xdot)
        sup_fd = SignalProbe.running_sup(fd)
        items.append(
            {
                "name": name,
                "u_bounded": stops_growing(sup_u),
                "u_l2": stops_growing(probe.running_lp(probe.u, 2.0)),
                "u_to_zero": goes_to_zero(probe.t, probe.u),
                "int_u_bounded": stops_growing(sup_intu),
                "xdot_bounded": stops_growing(sup_xdot),
                "xdot_l2_converged": stops_growing(probe.running_lp(probe.xdot, 2.0)),
                "xdot_to_zero": goes_to_zero(probe.t, probe.xdot),
                "fd_bounded": stops_growing(sup_fd),
                "xdot_sup": float(sup_xdot[-1]),
            }
        )
    return {"marginal_ok": marginal_ok, "items": items}
