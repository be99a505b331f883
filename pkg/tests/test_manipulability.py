"""Point-mass benchmark and empirical gain-curve classification."""

import dataclasses

import numpy as np
import pytest

from manipsim import manipulability as manip
from manipsim import presets, sim

PM = manip.PointMass(m=1.0, b=1.0)


def test_pointmass_validation():
    with pytest.raises(ValueError):
        manip.PointMass(m=-1.0)
    with pytest.raises(ValueError):
        manip.PointMass(b=0.0)


def test_zero_input_stays_at_rest():
    traj = manip.point_mass_response(PM, lambda t: 0.0, horizon=5.0)
    assert np.abs(traj.x).max() == 0.0


def test_log_forcing_first_integral():
    # f = 1/(t+1) from rest: m xd + b x = ln(t+1), residual stays below 1e-5
    traj = manip.point_mass_response(PM, lambda t: 1.0 / (t + 1.0), horizon=100.0)
    resid = np.abs(traj.xd + traj.x - np.log(traj.t + 1.0))
    assert resid.max() < 1e-5
    assert traj.x[-1] > 3.0  # position runs away under a square-integrable force


def test_first_integral_arbitrary_input():
    f = lambda t: np.sin(t) + 0.5 * np.cos(3.0 * t) - 0.2
    pm = manip.PointMass(m=2.0, b=0.7)
    traj = manip.point_mass_response(pm, f, horizon=30.0)
    resid = np.abs(pm.m * traj.xd + pm.b * traj.x - traj.int_f)
    assert resid.max() < 1e-9


def test_time_varying_damping_accepted():
    pm = manip.PointMass(m=1.0, b=lambda t: 1.0 + 0.5 * np.sin(t))
    traj = manip.point_mass_response(pm, lambda t: 1.0, horizon=5.0)
    assert np.isfinite(traj.x).all()
    with pytest.raises(ValueError):
        manip.hinf_point_mass(pm)


def test_hinf_values():
    rep = manip.hinf_point_mass(PM)
    assert abs(manip.point_mass_position_gain(PM, 1.0) - 1.0 / np.sqrt(2.0)) < 1e-15
    assert rep.position_infinite
    assert rep.position_sup == np.inf
    assert abs(rep.velocity_sup - 1.0) < 1e-6  # sup 1/b at w = 0


def test_probe_validation():
    with pytest.raises(ValueError):
        manip.GainProbe(output="acceleration")
    with pytest.raises(ValueError):
        manip.GainProbe(horizons=(10.0, 5.0, 20.0))
    with pytest.raises(ValueError):
        manip.GainProbe(horizons=(10.0, 20.0))


def test_constant_input_rejected():
    probe = manip.GainProbe(
        input=lambda t: np.array([1.0, 0.0]), horizons=(5.0, 10.0, 20.0)
    )
    with pytest.raises(ValueError, match="square-integrable"):
        manip.estimate_gain_curve(PM, probe, step=1e-2)


def test_pointmass_curve_matches_hinf_flag():
    probe = manip.GainProbe(input=manip.probe_input(c=1.0))
    curve = manip.estimate_gain_curve(PM, probe, step=1e-2)
    rep = manip.hinf_point_mass(PM)
    assert (curve.classification == "infinite_deg1") == rep.position_infinite
    assert curve.growth_ratio > 3.0


def test_pointmass_gain_ratio_scale_invariant():
    # linear system: R(T) must not depend on the probe magnitude
    r = {}
    for c in (1.0, 10.0):
        probe = manip.GainProbe(input=manip.probe_input(c=c), horizons=(10.0, 30.0, 100.0))
        r[c] = manip.estimate_gain_curve(PM, probe, step=1e-2).R
    np.testing.assert_allclose(r[1.0], r[10.0], rtol=1e-9)


def test_runner_type_rejected():
    with pytest.raises(TypeError):
        manip.estimate_gain_curve(object(), manip.GainProbe())


def test_velocity_config_and_pulse_holds_speed():
    g = presets.teaching().gains[0]
    g0 = manip.velocity_manipulability_config(g)
    assert g0.alpha == 0.0
    assert np.array_equal(g0.K, g.K) and g0.lambda_M == g.lambda_M

    sc = presets.teaching(lambda_M=6.0, horizon=20.0)
    sc = dataclasses.replace(
        sc, gains=g0, operator=dataclasses.replace(sc.operator, kind="none")
    )
    pulse = lambda t: np.array([2.0, 0.0]) if t < 1.0 else np.zeros(2)
    tr = sim.run_scenario(sc, external_input=pulse)
    k15 = tr.index_at(15.0)
    assert np.abs(tr.qd[0, -1]).max() > 0.05        # velocity holds with no torque
    assert np.abs(tr.qd[0, -1] - tr.qd[0, k15]).max() < 0.01  # and has settled


def test_velocity_output_probe_short_horizons():
    sc = presets.teaching(lambda_M=6.0)
    sc = dataclasses.replace(sc, gains=manip.velocity_manipulability_config(sc.gains[0]))
    probe = manip.GainProbe(output="velocity", horizons=(10.0, 30.0, 100.0))
    curve = manip.estimate_gain_curve(sc, probe)
    assert curve.classification == "infinite_deg1"
    assert curve.growth_ratio > 3.0


def test_position_probe_short_horizons_separate_classes():
    for lm, expected in ((6.0, "infinite_deg1"), (0.0, "finite")):
        sc = presets.teaching(lambda_M=lm)
        probe = manip.GainProbe(horizons=(10.0, 30.0, 100.0))
        curve = manip.estimate_gain_curve(sc, probe)
        assert curve.classification == expected, (lm, curve.R)
