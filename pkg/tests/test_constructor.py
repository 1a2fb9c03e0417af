"""Smooth-companion construction: map preservation, lattice shift, junction order."""

import math

import pytest

from helidisk.constructor import smoothness_order, theorem2_pair
from helidisk.fields import (
    linear_rotation,
    poly_twist,
    reparam_c1,
    reparam_c3,
    reparametrize,
    theorem2_piecewise,
)
from helidisk.flow import IntegratorConfig, PoincareMap, map_distance
from helidisk.geometry import Disk, TWO_PI, disk_area
from helidisk.invariants import QuadratureGrid, helicity, quantization_check

DISK = Disk(1.0)
GRID = QuadratureGrid(32, 8, 64)
RK4 = IntegratorConfig(scheme="rk4-oracle")
BASE = linear_rotation(0.3, DISK)


def test_n_zero_keeps_helicity():
    H2 = theorem2_pair(BASE, 0, DISK, k=1)
    shift = helicity(H2, DISK, GRID).value - helicity(BASE, DISK, GRID).value
    assert abs(shift) < 1e-10
    d = map_distance(PoincareMap(BASE, DISK, config=RK4), PoincareMap(H2, DISK, config=RK4), 25)
    assert d < 1e-6


def test_quantization_reports_the_shift():
    H2 = theorem2_pair(BASE, 1, DISK, k=1)
    rep = quantization_check(BASE, H2, DISK, GRID, map_config=RK4)
    assert abs(rep.n_nearest) == 1
    assert rep.residual < 1e-5


def test_map_preserved_across_n_range():
    m1 = PoincareMap(BASE, DISK, config=RK4)
    for n in (-2, -1, 0, 1, 2):
        H2 = theorem2_pair(BASE, n, DISK, k=1)
        assert map_distance(m1, PoincareMap(H2, DISK, config=RK4), 50) < 1e-6


def test_map_preserved_for_twist_base():
    tw = poly_twist([1.0], DISK)
    m1 = PoincareMap(tw, DISK, config=RK4)
    H2 = theorem2_pair(tw, 1, DISK, k=1)
    assert map_distance(m1, PoincareMap(H2, DISK, config=RK4), 50) < 1e-6


def test_map_preserved_with_refined_midpoint():
    # the symplectic scheme needs a finer step than the default to certify
    # 1e-6 (its phase error is O(h^2) with a stiff constant on the second
    # half); one refined run cross-checks the RK4 oracle result
    H2 = theorem2_pair(BASE, 1, DISK, k=1)
    m1 = PoincareMap(BASE, DISK, config=IntegratorConfig(step=TWO_PI / 2000))
    m2 = PoincareMap(H2, DISK, config=IntegratorConfig(step=TWO_PI / 40000))
    assert map_distance(m1, m2, 16) < 1e-6


def test_shift_linear_in_n():
    h1 = helicity(BASE, DISK, GRID).value
    shift1 = helicity(theorem2_pair(BASE, 1, DISK, k=1), DISK, GRID).value - h1
    S2 = disk_area(DISK) ** 2
    assert abs(shift1) == pytest.approx(S2 / 2.0, rel=1e-9)
    for n in (2, 3):
        shift_n = helicity(theorem2_pair(BASE, n, DISK, k=1), DISK, GRID).value - h1
        assert shift_n == pytest.approx(n * shift1, rel=1e-5)


def test_smoothness_order_piecewise_jump():
    Ht = theorem2_piecewise(BASE, 1, DISK)
    assert smoothness_order(Ht, (math.pi,), max_order=3, disk=DISK) == 0


def test_smoothness_order_c1():
    H2 = reparametrize(theorem2_piecewise(BASE, 1, DISK), reparam_c1())
    assert smoothness_order(H2, (0.0, math.pi), max_order=3, disk=DISK) == 1


def test_smoothness_order_c3():
    H2 = reparametrize(theorem2_piecewise(BASE, 1, DISK), reparam_c3())
    assert smoothness_order(H2, (0.0, math.pi), max_order=4, disk=DISK) == 3


def test_smoothness_order_smooth_fields_saturate():
    for H in (linear_rotation(0.6, DISK), poly_twist([0.7, 0.2], DISK)):
        assert smoothness_order(H, (0.0, math.pi), max_order=4, disk=DISK) == 4


def test_only_k_1_and_3():
    with pytest.raises(ValueError):
        theorem2_pair(BASE, 1, DISK, k=2)
    with pytest.raises(ValueError):
        smoothness_order(BASE, (0.0,), max_order=5, disk=DISK)
