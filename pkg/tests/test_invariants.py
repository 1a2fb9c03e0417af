"""Quadrature invariants against closed-form oracles.

Expected values below are antiderivatives computed by hand:
  helicity(w*(I-I0)) over one period = -2*pi^2 * w * I0^2
  helicity((n/2)*(I-I0)) over 4*pi   = -2*pi^2 * n * I0^2
  calabi((I-I0)^2)                   = 4*pi^2 * I0^3 / 3
  capped rotation on the collar eps  = -2*pi^2*n*I0^2 + 2*pi^2*n*eps*I0
                                        + (2*pi^2/3)*n*eps^2
"""

import math
from dataclasses import replace

import numpy as np
import pytest

from helidisk.errors import BoundaryGradientError, MapMismatchError
from helidisk.fields import (
    add_time_function,
    lemma1_extension,
    linear_rotation,
    nonradial_admissible,
    poly_twist,
    rotate_coordinates,
    scale_field,
    theorem2_piecewise,
    twist_field,
    zero_field,
)
from helidisk.geometry import Disk, TWO_PI
from helidisk.invariants import (
    QuadratureGrid,
    calabi,
    form_helicity,
    generalized_calabi,
    helicity,
    quantization_check,
)

DISK = Disk(1.0)
GRID = QuadratureGrid(32, 16, 32)
PI2 = math.pi**2


def test_zero_field():
    assert helicity(zero_field(), DISK, GRID).value == 0.0
    assert form_helicity(zero_field(), DISK, GRID) == 0.0


def test_helicity_linear_rotation():
    res = helicity(linear_rotation(1.0, DISK), DISK, QuadratureGrid(64, 64, 64))
    assert res.value == pytest.approx(-2 * PI2, abs=1e-8)
    assert res.refinement_delta < 1e-10
    # scale with omega and I0^2
    res = helicity(linear_rotation(0.3, DISK), DISK, GRID)
    assert res.value == pytest.approx(-0.6 * PI2, abs=1e-10)
    d2 = Disk(2.0)
    res = helicity(linear_rotation(1.0, d2), d2, GRID)
    assert res.value == pytest.approx(-8 * PI2, abs=1e-9)


def test_helicity_lemma1_rotation_field():
    # the generating rotation (n/2)*(I-I0) integrated over time 4*pi
    for n in (1, -2):
        H = twist_field(
            lambda I, n=n: (n / 2.0) * (np.asarray(I, float) - 1.0),
            DISK,
            lambda I, n=n: np.full(np.shape(I), n / 2.0),
            label=f"halfturn:{n}",
        )
        H = replace(H, period=2 * TWO_PI)
        assert helicity(H, DISK, GRID).value == pytest.approx(-2 * PI2 * n, abs=1e-9)


def test_form_helicity_identity():
    assert form_helicity(linear_rotation(1.0, DISK), DISK, GRID) == pytest.approx(
        4 * PI2, abs=1e-9
    )
    rng = np.random.default_rng(42)
    for _ in range(5):
        c2, c3 = rng.uniform(-1, 1, 2)
        H = poly_twist([c2, c3], DISK)
        hv = helicity(H, DISK, GRID).value
        fv = form_helicity(H, DISK, GRID)
        if abs(hv) > 1e-12:
            assert fv / hv == pytest.approx(-2.0, abs=1e-6)


def test_calabi_twist_closed_form():
    H = poly_twist([1.0], DISK)
    assert calabi(H, DISK, GRID) == pytest.approx(4 * PI2 / 3, abs=1e-10)


def test_calabi_rejects_boundary_rotation():
    with pytest.raises(BoundaryGradientError):
        calabi(linear_rotation(1.0, DISK), DISK, GRID)


def test_calabi_capped_rotation_collar():
    for n in (1, 2, -3):
        for eps in (0.2, 0.05):
            H = lemma1_extension(n, 1.0, eps)
            value = calabi(H, Disk(1.0 + eps), GRID)
            exact = -2 * PI2 * n + 2 * PI2 * n * eps + (2 * PI2 / 3) * n * eps * eps
            assert value == pytest.approx(exact, abs=1e-9)


def test_quantization_same_field():
    H = linear_rotation(0.4, DISK)
    rep = quantization_check(H, H, DISK, GRID)
    assert rep.n_nearest == 0
    assert rep.residual < 1e-8


def test_quantization_full_turn_pair():
    rep = quantization_check(
        linear_rotation(0.3, DISK), linear_rotation(1.3, DISK), DISK, GRID
    )
    assert rep.lattice_unit == pytest.approx(2 * PI2, rel=1e-12)
    # delta = helicity(H1) - helicity(H2) = +2*pi^2 under this module's
    # orientation, one lattice unit
    assert rep.delta == pytest.approx(2 * PI2, abs=1e-6)
    assert abs(rep.n_nearest) == 1
    assert rep.residual < 1e-6
    assert rep.residual <= rep.lattice_unit / 2


def test_quantization_rejects_different_maps():
    with pytest.raises(MapMismatchError):
        quantization_check(
            linear_rotation(0.25, DISK), linear_rotation(0.3, DISK), DISK, GRID
        )


def test_generalized_calabi():
    unit = 2 * PI2
    # already in the fundamental window: unchanged
    v = generalized_calabi(linear_rotation(0.3, DISK), DISK, GRID)
    assert v == pytest.approx(-0.6 * PI2, abs=1e-9)
    # a full lattice unit reduces to zero
    v = generalized_calabi(linear_rotation(1.0, DISK), DISK, GRID)
    assert abs(v) < 1e-9
    # exact half-lattice ties resolve to the non-negative representative
    for w in (0.5, -0.5):
        v = generalized_calabi(linear_rotation(w, DISK), DISK, GRID)
        assert v == pytest.approx(unit / 2, abs=1e-9)


def test_quadrature_polynomial_exactness():
    # degree 2*n_I - 1 in action is exact for the Gauss rule
    coeffs = np.array([0.3, -0.8, 0.45, 0.11, -0.2, 0.07, 0.9, -0.33])  # degree 7

    def profile(I):
        return np.polyval(coeffs, np.asarray(I, float))

    def dprofile(I):
        return np.polyval(np.polyder(coeffs), np.asarray(I, float))

    H = twist_field(profile, DISK, dprofile, label="poly7")
    got = helicity(H, DISK, QuadratureGrid(4, 4, 4)).value
    anti = np.polyint(coeffs)
    exact = 2 * TWO_PI * math.pi * (np.polyval(anti, 1.0) - np.polyval(anti, 0.0) - profile(1.0))
    assert got == pytest.approx(float(exact), abs=1e-12)


def test_rotation_invariance():
    H = nonradial_admissible(DISK, 0.5)
    v0 = helicity(H, DISK, GRID).value
    assert v0 == pytest.approx(4 * PI2 / 3, abs=1e-8)  # angular term averages out
    v1 = helicity(rotate_coordinates(H, 1.1), DISK, GRID).value
    assert abs(v1 - v0) < 1e-8


def test_gauge_invariance():
    H = linear_rotation(0.7, DISK)
    v0 = helicity(H, DISK, GRID).value
    v1 = helicity(add_time_function(H, np.sin), DISK, GRID).value
    assert abs(v1 - v0) < 1e-10


def test_rescaling_invariance():
    H = poly_twist([0.8, -0.3], DISK)
    v0 = helicity(H, DISK, GRID).value
    for mu in (0.5, 2.0, 3.0):
        v1 = helicity(scale_field(H, mu), DISK, GRID).value
        assert abs(v1 - v0) < 1e-8


def test_discontinuous_two_panel_closed_form():
    base = linear_rotation(0.3, DISK)
    Ht = theorem2_piecewise(base, 1, DISK)
    got = helicity(Ht, DISK, GRID).value
    assert got == pytest.approx(-0.6 * PI2 - 2 * PI2, abs=1e-6)


def test_grid_validation():
    with pytest.raises(ValueError):
        QuadratureGrid(3, 8, 8)
    g = QuadratureGrid(64, 64, 64)
    assert str(g) == "64x64x64"
    assert g.half() == QuadratureGrid(32, 32, 32)
    assert QuadratureGrid(5, 4, 4).half() == QuadratureGrid(4, 4, 4)
