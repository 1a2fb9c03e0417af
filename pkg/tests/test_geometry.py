"""Action-angle chart: frozen conversions, round trips, area preservation."""

import math

import numpy as np
import pytest

from helidisk.geometry import (
    ActionAngle,
    Disk,
    PhasePoint,
    disk_area,
    from_action_angle,
    to_action_angle,
)


def test_center_convention():
    a = to_action_angle(PhasePoint(0.0, 0.0))
    assert a.I == 0.0 and a.phi == 0.0


def test_fixed_conversions():
    # chart frozen as p = sqrt(2I) cos(phi), q = sqrt(2I) sin(phi); verified
    # once against the flow module: H = w*I advances phi at rate +w
    a = to_action_angle(PhasePoint(p=0.0, q=1.0))
    assert a.I == pytest.approx(0.5, abs=1e-15)
    assert a.phi == pytest.approx(math.pi / 2, abs=1e-15)
    a = to_action_angle(PhasePoint(p=1.0, q=0.0))
    assert a.I == pytest.approx(0.5, abs=1e-15)
    assert a.phi == pytest.approx(0.0, abs=1e-15)
    x = from_action_angle(ActionAngle(I=0.5, phi=0.0))
    assert x.p == pytest.approx(1.0, abs=1e-15)
    assert x.q == pytest.approx(0.0, abs=1e-15)


def test_center_image():
    x = from_action_angle(ActionAngle(I=0.0, phi=2.3))
    assert x.p == 0.0 and x.q == 0.0


def test_negative_action_rejected():
    with pytest.raises(ValueError):
        from_action_angle(ActionAngle(I=-0.1, phi=0.0))


def test_round_trip():
    rng = np.random.default_rng(7)
    for _ in range(100):
        p, q = rng.uniform(-2, 2, 2)
        if p * p + q * q < 1e-12:
            continue
        x = PhasePoint(p, q)
        y = from_action_angle(to_action_angle(x))
        assert math.hypot(y.p - p, y.q - q) < 1e-12


def test_angle_range():
    rng = np.random.default_rng(8)
    for _ in range(50):
        p, q = rng.uniform(-2, 2, 2)
        phi = to_action_angle(PhasePoint(p, q)).phi
        assert 0.0 <= phi < 2 * math.pi


def test_chart_is_area_preserving():
    # finite-difference Jacobian of (I, phi) -> (p, q) has determinant +1
    rng = np.random.default_rng(11)
    h = 1e-6
    for _ in range(20):
        I = rng.uniform(0.1, 2.0)
        phi = rng.uniform(0.0, 2 * math.pi)

        def chart(I, phi):
            x = from_action_angle(ActionAngle(I, phi))
            return np.array([x.p, x.q])

        dI = (chart(I + h, phi) - chart(I - h, phi)) / (2 * h)
        dphi = (chart(I, phi + h) - chart(I, phi - h)) / (2 * h)
        det = dI[0] * dphi[1] - dI[1] * dphi[0]
        assert det == pytest.approx(1.0, abs=1e-6)


def test_disk_area():
    assert disk_area(Disk(1.0)) == pytest.approx(2 * math.pi, rel=1e-15)
    assert disk_area(Disk(0.5)) == pytest.approx(math.pi, rel=1e-15)
    assert disk_area(Disk(2.0)) == pytest.approx(4 * math.pi, rel=1e-15)


def test_disk_validation():
    with pytest.raises(ValueError):
        Disk(0.0)
    with pytest.raises(ValueError):
        Disk(-1.0)
