"""Quadrature of the helicity integral and the derived invariants.

All triple integrals are evaluated in action-angle coordinates, where the
disk becomes the box [0, I0] x [0, 2*pi) and dp ^ dq ^ dt = dI ^ dphi ^ dt.
Radial integration is Gauss-Legendre, split at the field's declared radial
breakpoints so piecewise-polynomial profiles integrate exactly; the angle
and time integrals use uniform periodic nodes, with time panels split at
the field's discontinuities.  Node ordering is fixed, and sums run in a
fixed order, so results are bit-stable.

Sign conventions are frozen against this chart (phi = atan2(q, p), volume
dI ^ dphi ^ dt positive) and pinned by tests: the boundary-zero rotation
omega*(I - I0) on the unit-action disk has helicity -2*pi^2*omega, and the
field-theoretic form integral equals minus twice the helicity.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Optional, Tuple

import numpy as np

from .errors import BoundaryGradientError, MapMismatchError
from .fields import HamiltonianField, normalize
from .flow import DEFAULT_CONFIG, IntegratorConfig, PoincareMap, map_distance
from .geometry import Disk, TWO_PI, disk_area


@dataclass(frozen=True)
class QuadratureGrid:
    """Node counts: Gauss-Legendre in action, uniform periodic in angle and
    in time (per smooth time panel)."""

    n_I: int = 64
    n_phi: int = 64
    n_t: int = 64

    def __post_init__(self):
        if min(self.n_I, self.n_phi, self.n_t) < 4:
            raise ValueError("all node counts must be >= 4")

    def half(self) -> "QuadratureGrid":
        return QuadratureGrid(
            n_I=max(4, self.n_I // 2),
            n_phi=max(4, self.n_phi // 2),
            n_t=max(4, self.n_t // 2),
        )

    def __str__(self):
        return f"{self.n_I}x{self.n_phi}x{self.n_t}"


@dataclass(frozen=True)
class HelicityResult:
    value: float
    grid: QuadratureGrid
    refinement_delta: float  # |value - value on the half-resolution grid|


@dataclass(frozen=True)
class QuantizationReport:
    delta: float  # helicity(H1) - helicity(H2)
    lattice_unit: float  # S(D)^2 / 2
    n_nearest: int
    residual: float


@lru_cache(maxsize=64)
def _leggauss(n: int):
    return np.polynomial.legendre.leggauss(n)


def _radial_rule(disk: Disk, breakpoints: Tuple[float, ...], n_I: int):
    """Gauss-Legendre nodes/weights on [0, I0], split at interior breakpoints."""
    edges = [0.0]
    for b in sorted(set(breakpoints)):
        if 1e-12 < b < disk.I0 - 1e-12:
            edges.append(float(b))
    edges.append(disk.I0)
    x, w = _leggauss(n_I)
    nodes, weights = [], []
    for a, b in zip(edges[:-1], edges[1:]):
        mid, half = 0.5 * (a + b), 0.5 * (b - a)
        nodes.append(mid + half * x)
        weights.append(half * w)
    return np.concatenate(nodes), np.concatenate(weights)


def _time_rule(field: HamiltonianField, n_t: int):
    """Uniform left-endpoint nodes per smooth panel over one period.

    Left endpoints evaluate the right-limit branch at a discontinuity, and
    on a panel whose integrand is periodic they coincide with the periodic
    trapezoid rule.
    """
    T = field.period
    cuts = [d for d in field.discontinuities if 0.0 <= d < T]
    base = cuts[0] if cuts else 0.0
    edges = [base + 0.0] + [c for c in cuts[1:]] + [base + T]
    nodes, weights = [], []
    for a, b in zip(edges[:-1], edges[1:]):
        h = (b - a) / n_t
        nodes.append(a + h * np.arange(n_t))
        weights.append(np.full(n_t, h))
    return np.concatenate(nodes), np.concatenate(weights)


def _triple_quad(field: HamiltonianField, disk: Disk, grid: QuadratureGrid, integrand):
    """integrand(P, Q, t) is evaluated on the (I, phi) grid for each time
    node; P, Q are 2-D arrays, t a scalar."""
    In, Iw = _radial_rule(disk, field.radial_breakpoints, grid.n_I)
    phi = TWO_PI * np.arange(grid.n_phi) / grid.n_phi
    phw = TWO_PI / grid.n_phi
    r = np.sqrt(2.0 * In)[:, None]
    P = r * np.cos(phi)[None, :]
    Q = r * np.sin(phi)[None, :]
    W = Iw[:, None] * phw
    tn, tw = _time_rule(field, grid.n_t)
    total = 0.0
    for t, wt in zip(tn, tw):
        total += wt * float(np.sum(W * np.asarray(integrand(P, Q, t), dtype=float)))
    return total


def helicity(H: HamiltonianField, disk: Disk, grid: QuadratureGrid = QuadratureGrid()) -> HelicityResult:
    """Triple integral of the boundary-normalized Hamiltonian over the solid
    torus disk x time circle, one full period in time."""
    nf = normalize(H, disk)

    def integrand(P, Q, t):
        return np.asarray(H.value(P, Q, t), dtype=float) - float(nf.offset(t))

    value = _triple_quad(H, disk, grid, integrand)
    coarse = _triple_quad(H, disk, grid.half(), integrand)
    return HelicityResult(value=value, grid=grid, refinement_delta=abs(value - coarse))


def form_helicity(H: HamiltonianField, disk: Disk, grid: QuadratureGrid = QuadratureGrid()) -> float:
    """Integral of p*H_p - H_tilde, i.e. the 3-form alpha ^ d(alpha) for
    alpha = p dq - H_tilde dt.

    Integration by parts in p (the boundary term vanishes because H_tilde
    does) shows this equals minus twice the helicity; the pair of routes is
    kept independent as a cross-check.
    """
    nf = normalize(H, disk)

    def integrand(P, Q, t):
        gp, _ = H.gradient(P, Q, t)
        v = np.asarray(H.value(P, Q, t), dtype=float) - float(nf.offset(t))
        return P * np.asarray(gp, dtype=float) - v

    return _triple_quad(H, disk, grid, integrand)


def _boundary_gradient_max(H: HamiltonianField, disk: Disk, n_phi: int = 32, n_t: int = 33) -> float:
    r = disk.radius
    phis = TWO_PI * np.arange(n_phi) / n_phi
    pb = r * np.cos(phis)
    qb = r * np.sin(phis)
    ts = list(H.period * (np.arange(n_t) + 0.17) / n_t)
    ts.extend(d + 1e-9 for d in H.discontinuities)
    worst = 0.0
    for t in ts:
        gp, gq = H.gradient(pb, qb, t)
        worst = max(worst, float(np.max(np.hypot(np.asarray(gp, float), np.asarray(gq, float)))))
    return worst


def calabi(H: HamiltonianField, disk: Disk, grid: QuadratureGrid = QuadratureGrid(),
           gradient_tol: float = 1e-6) -> float:
    """Same integral as helicity, valid as the Calabi invariant of the period
    map because the flow is required to be stationary near the boundary:
    the gradient must vanish on the boundary torus."""
    worst = _boundary_gradient_max(H, disk)
    if worst > gradient_tol:
        raise BoundaryGradientError(
            f"gradient of '{H.label}' reaches {worst:.3e} on the boundary torus; "
            "the Calabi invariant requires a flow stationary at the boundary"
        )
    return helicity(H, disk, grid).value


def quantization_check(
    H1: HamiltonianField,
    H2: HamiltonianField,
    disk: Disk,
    grid: QuadratureGrid = QuadratureGrid(),
    *,
    map_tol: float = 1e-4,
    samples: int = 50,
    map_config: Optional[IntegratorConfig] = None,
) -> QuantizationReport:
    """Check that two generators of the same disk map differ in helicity by a
    lattice element n * S(D)^2 / 2.

    The precondition that both fields generate the same period map is
    verified numerically: the sup distance between the two Poincare maps
    over a deterministic sample set must not exceed map_tol.
    """
    cfg = map_config if map_config is not None else DEFAULT_CONFIG
    m1 = PoincareMap(H1, disk, periods=1, config=cfg)
    m2 = PoincareMap(H2, disk, periods=1, config=cfg)
    dist = map_distance(m1, m2, samples)
    if dist > map_tol:
        raise MapMismatchError(
            f"Poincare maps of '{H1.label}' and '{H2.label}' differ by {dist:.3e} "
            f"(> {map_tol:g}); helicity differences are unconstrained"
        )
    h1 = helicity(H1, disk, grid).value
    h2 = helicity(H2, disk, grid).value
    delta = h1 - h2
    unit = disk_area(disk) ** 2 / 2.0
    n = int(round(delta / unit))
    return QuantizationReport(
        delta=delta, lattice_unit=unit, n_nearest=n, residual=abs(delta - n * unit)
    )


def generalized_calabi(H: HamiltonianField, disk: Disk, grid: QuadratureGrid = QuadratureGrid()) -> float:
    """The representative of helicity(H) modulo S(D)^2/2 of minimal absolute
    value; exact half-lattice ties resolve to the non-negative one."""
    v = helicity(H, disk, grid).value
    unit = disk_area(disk) ** 2 / 2.0
    k = math.ceil(v / unit - 0.5)
    r = v - k * unit
    if abs(abs(r) - unit / 2.0) <= 1e-9 * unit:
        r = unit / 2.0
    return r
