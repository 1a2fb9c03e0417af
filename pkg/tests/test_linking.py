"""Asymptotic linking: closure, crossing counts, and the calibrated estimator."""

import math

import numpy as np
import pytest

from helidisk.errors import CurveProximityError
from helidisk.fields import linear_rotation, poly_twist, scale_field, zero_field
from helidisk.flow import IntegratorConfig, integrate
from helidisk.geometry import Disk, PhasePoint, TWO_PI
from helidisk.invariants import helicity
from helidisk.linking import (
    ORIENTATION_SIGN,
    asymptotic_linking,
    close_trajectory,
    linking_number,
)

DISK = Disk(1.0)
CFG = IntegratorConfig(step=TWO_PI / 256)


def orbit(H, x0, periods=1):
    return integrate(H, x0, 0.0, periods * H.period, cfg=CFG)


def test_closure_of_periodic_orbit_is_trivial():
    # an exactly closed orbit needs no closure; build it analytically since
    # the integrator leaves an O(h^2) endpoint gap
    from helidisk.flow import Trajectory

    times = np.linspace(0.0, TWO_PI, 257)
    r = math.sqrt(1.2)
    ps, qs = r * np.cos(times), r * np.sin(times)
    ps[-1], qs[-1] = ps[0], qs[0]
    tr = Trajectory(times=times, p=ps, q=qs, field_label="exact", period=TWO_PI)
    c = close_trajectory(tr, DISK)
    assert len(c.xyz) == len(tr.times) + 1
    assert c.t_degree == pytest.approx(1.0, abs=1e-12)

    # the numerical orbit's closure is only as long as the endpoint gap
    tr = orbit(linear_rotation(1.0, DISK), PhasePoint(math.sqrt(1.2), 0.0))
    c = close_trajectory(tr, DISK)
    n_traj = len(tr.times)
    closure_len = float(np.sum(np.linalg.norm(np.diff(c.xyz[n_traj - 1 :], axis=0), axis=1)))
    assert closure_len < 1e-3


def test_closure_stays_in_final_fiber():
    tr = orbit(linear_rotation(0.25, DISK), PhasePoint(1.0, 0.0))
    c = close_trajectory(tr, DISK)
    n_traj = len(tr.times)
    assert len(c.xyz) > n_traj + 1  # quarter turn needs a real closure arc
    closure_thetas = c.theta[n_traj:]
    assert np.max(np.abs(closure_thetas - c.theta[-1])) == 0.0
    assert c.t_degree == pytest.approx(1.0, abs=1e-12)
    # the closed loop really closes
    assert np.max(np.abs(c.xyz[0] - c.xyz[-1])) < 1e-12


def test_closure_requires_integer_periods():
    tr = integrate(linear_rotation(0.25, DISK), PhasePoint(1.0, 0.0), 0.0, 1.7, cfg=CFG)
    with pytest.raises(ValueError):
        close_trajectory(tr, DISK)


def test_fibers_do_not_link():
    Z = zero_field()
    a = close_trajectory(orbit(Z, PhasePoint(0.3, 0.1), 4), DISK)
    b = close_trajectory(orbit(Z, PhasePoint(-0.5, 0.4), 4), DISK)
    assert linking_number(a, b) == 0


def test_rigid_rotation_orbits_link_once():
    H = linear_rotation(1.0, DISK)
    a = close_trajectory(orbit(H, PhasePoint(math.sqrt(0.6), 0.0)), DISK)
    b = close_trajectory(orbit(H, PhasePoint(0.0, math.sqrt(1.2))), DISK)
    lk = linking_number(a, b)
    assert abs(lk) == 1
    # the frozen orientation turns the raw +1 into the negative helicity side
    assert ORIENTATION_SIGN * lk == -1


def test_linking_grows_quadratically_with_periods():
    H = linear_rotation(1.0, DISK)
    a1 = close_trajectory(orbit(H, PhasePoint(math.sqrt(0.6), 0.0), 1), DISK)
    b1 = close_trajectory(orbit(H, PhasePoint(0.0, math.sqrt(1.2)), 1), DISK)
    a2 = close_trajectory(orbit(H, PhasePoint(math.sqrt(0.6), 0.0), 2), DISK)
    b2 = close_trajectory(orbit(H, PhasePoint(0.0, math.sqrt(1.2)), 2), DISK)
    assert linking_number(a2, b2) == 4 * linking_number(a1, b1)


def test_linking_number_symmetry():
    H = poly_twist([0.9], DISK)
    rng = np.random.default_rng(21)
    for trial in range(20):
        I1, I2 = rng.uniform(0.1, 0.9, 2)
        if abs(I1 - I2) < 0.05:
            continue
        a = close_trajectory(orbit(H, PhasePoint(math.sqrt(2 * I1), 0.0), 2), DISK)
        b = close_trajectory(orbit(H, PhasePoint(0.0, math.sqrt(2 * I2)), 2), DISK)
        assert linking_number(a, b, seed=trial) == linking_number(b, a, seed=trial)


def test_proximate_curves_rejected():
    H = linear_rotation(1.0, DISK)
    a = close_trajectory(orbit(H, PhasePoint(0.7, 0.0)), DISK)
    with pytest.raises(CurveProximityError):
        linking_number(a, a)


def test_estimator_matches_twice_helicity():
    H = linear_rotation(1.0, DISK)
    est = asymptotic_linking(H, DISK, periods=16, pairs=64, seed=1)
    target = 2.0 * helicity(H, DISK).value
    assert est.calibrated == pytest.approx(target, rel=0.15)
    assert est.std_error >= 0.0
    assert est.pairs == 64 and est.periods == 16


def test_estimator_zero_field_exact():
    est = asymptotic_linking(zero_field(), DISK, periods=4, pairs=16, seed=9)
    assert est.mean_total == 0.0
    assert est.std_error == 0.0


def test_estimator_deterministic_and_worker_independent():
    H = linear_rotation(1.0, DISK)
    a = asymptotic_linking(H, DISK, periods=4, pairs=16, seed=11)
    b = asymptotic_linking(H, DISK, periods=4, pairs=16, seed=11)
    c = asymptotic_linking(H, DISK, periods=4, pairs=16, seed=11, workers=3)
    assert a.mean_total == b.mean_total == c.mean_total
    assert a.std_error == b.std_error == c.std_error


def test_estimator_scale_invariance():
    H = linear_rotation(1.0, DISK)
    a = asymptotic_linking(H, DISK, periods=8, pairs=16, seed=2)
    b = asymptotic_linking(scale_field(H, 2.0), DISK, periods=8, pairs=16, seed=2)
    assert abs(a.calibrated - b.calibrated) <= max(2 * (a.std_error + b.std_error), 1e-9)


def test_estimator_converges_with_periods():
    # irrational-ish rotation: the closure bias decays like 1/periods
    H = linear_rotation(0.7, DISK)
    target = 2.0 * helicity(H, DISK).value
    gaps = []
    for periods in (4, 8, 16):
        vals = [
            asymptotic_linking(H, DISK, periods=periods, pairs=16, seed=s).calibrated
            for s in (1, 2, 3)
        ]
        gaps.append(abs(float(np.mean(vals)) - target))
    assert gaps[0] >= gaps[1] >= gaps[2] - 1e-12


def test_estimator_preconditions():
    with pytest.raises(ValueError):
        asymptotic_linking(zero_field(), DISK, periods=3, pairs=16, seed=0)
    with pytest.raises(ValueError):
        asymptotic_linking(zero_field(), DISK, periods=4, pairs=8, seed=0)
