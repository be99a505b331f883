"""Structural properties of the planar-arm dynamics."""

import numpy as np
import pytest

from manipsim import dynamics as dyn

RNG = np.random.default_rng(20240611)
P = dyn.default_params()


def test_params_invariants_enforced():
    with pytest.raises(ValueError):
        dyn.DynParams(np.array([1.0, -0.1, 0.1]))
    with pytest.raises(ValueError):
        # theta2*(theta1-theta2) = 0.25 <= theta3^2 = 0.25
        dyn.DynParams(np.array([1.0, 0.5, 0.5]))


def test_inertia_decoupled_at_right_angle():
    # cos(pi/2) kills all the coupling terms
    M = dyn.inertia(np.array([0.7, np.pi / 2]), P)
    np.testing.assert_allclose(M, [[5 / 3, 1 / 3], [1 / 3, 1 / 3]], atol=1e-15)


def test_inertia_straight_arm():
    M = dyn.inertia(np.zeros(2), P)
    np.testing.assert_allclose(M, [[8 / 3, 5 / 6], [5 / 6, 1 / 3]], atol=1e-15)


def test_inertia_symmetric_positive_definite():
    # includes the provable lower bound lambda_min >= min det / max trace;
    # checked over 1e4 random configurations
    t1, t2, t3 = P.theta
    lam_lo = (t2 * (t1 - t2) - t3 ** 2) / (t1 + t2 + 2 * t3)
    qs = RNG.uniform(-np.pi, np.pi, size=(10_000, 2))
    for q in qs:
        M = dyn.inertia(q, P)
        assert M[0, 1] == M[1, 0]
        lo = np.linalg.eigvalsh(M)[0]
        assert lo > 0.0
        assert lo >= lam_lo - 1e-12


def test_coriolis_vanishes_at_rest_and_straight():
    np.testing.assert_array_equal(
        dyn.coriolis(np.array([0.3, 1.1]), np.zeros(2), P), np.zeros((2, 2))
    )
    np.testing.assert_array_equal(
        dyn.coriolis(np.array([0.3, 0.0]), np.array([1.0, -2.0]), P), np.zeros((2, 2))
    )


def test_skew_symmetry_finite_difference():
    # x^T (Mdot - 2C) x == 0 with Mdot by central difference, step 1e-6
    h = 1e-6
    for _ in range(2000):
        q = RNG.uniform(-np.pi, np.pi, size=2)
        qd = RNG.normal(size=2)
        x = RNG.normal(size=2)
        Mdot = (dyn.inertia(q + h * qd, P) - dyn.inertia(q - h * qd, P)) / (2 * h)
        val = x @ (Mdot - 2 * dyn.coriolis(q, qd, P)) @ x
        assert abs(val) < 1e-8


def test_regressor_zero_reference():
    Y = dyn.regressor(RNG.normal(size=2), RNG.normal(size=2), np.zeros(2), np.zeros(2))
    np.testing.assert_array_equal(Y, np.zeros((2, 3)))


def test_regressor_linearity_identity():
    # Y theta == M zetadot + C zeta, to machine precision
    for _ in range(2000):
        q, qd, z, zd = (RNG.normal(size=2) for _ in range(4))
        lhs = dyn.regressor(q, qd, z, zd) @ P.theta
        rhs = dyn.inertia(q, P) @ zd + dyn.coriolis(q, qd, P) @ z
        assert np.abs(lhs - rhs).max() < 1e-10


def test_forward_dynamics_zero_residual_torque():
    q = RNG.uniform(-np.pi, np.pi, size=2)
    qd = RNG.normal(size=2)
    tau = dyn.coriolis(q, qd, P) @ qd
    qdd = dyn.forward_dynamics(dyn.JointState(q, qd), tau, P)
    np.testing.assert_allclose(qdd, np.zeros(2), atol=1e-12)


def test_forward_dynamics_regressor_round_trip():
    # qdd := forward_dynamics(s, tau), then Y(q, qd, qd, qdd) theta == tau
    for _ in range(500):
        q = RNG.uniform(-np.pi, np.pi, size=2)
        qd = RNG.normal(size=2)
        tau = RNG.normal(size=2) * 5.0
        qdd = dyn.forward_dynamics(dyn.JointState(q, qd), tau, P)
        back = dyn.regressor(q, qd, qd, qdd) @ P.theta
        assert np.abs(back - tau).max() < 1e-9


def test_free_motion_conserves_energy():
    # tau = 0 for 10 s, RK4 with h = 1e-3: kinetic energy drift below 1e-6
    h = 1e-3
    x = np.array([0.4, -0.2, 1.0, 0.5])  # q1 q2 qd1 qd2

    def f(x):
        s = dyn.JointState(x[:2], x[2:])
        return np.concatenate([x[2:], dyn.forward_dynamics(s, np.zeros(2), P)])

    e0 = dyn.kinetic_energy(dyn.JointState(x[:2], x[2:]), P)
    drift = 0.0
    for _ in range(10_000):
        k1 = f(x)
        k2 = f(x + 0.5 * h * k1)
        k3 = f(x + 0.5 * h * k2)
        k4 = f(x + h * k3)
        x = x + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        e = dyn.kinetic_energy(dyn.JointState(x[:2], x[2:]), P)
        drift = max(drift, abs(e - e0))
    assert drift < 1e-6
