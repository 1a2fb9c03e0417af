"""Canonical polar chart on the invariant disk.

Action-angle coordinates are fixed once for the whole package:

    I   = (p^2 + q^2) / 2
    phi = atan2(q, p)            in [0, 2*pi)
    p   = sqrt(2*I) * cos(phi)
    q   = sqrt(2*I) * sin(phi)

With Hamilton's equations  pdot = -H_q, qdot = H_p  a radial Hamiltonian
H = g(I) then advances phi at rate g'(I), and the Jacobian of
(I, phi) -> (p, q) has determinant +1, so dp ^ dq = dI ^ dphi and triple
integrals may be evaluated in either chart.  The convention was verified
against the flow module once and is frozen here.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class PhasePoint:
    """A point of the (p, q) phase plane."""

    p: float
    q: float


@dataclass(frozen=True)
class ExtendedPoint:
    """A point of the extended phase space; t is read modulo the field period."""

    p: float
    q: float
    t: float


@dataclass(frozen=True)
class ActionAngle:
    """Polar action-angle coordinates; phi is meaningless at I = 0."""

    I: float
    phi: float


@dataclass(frozen=True)
class Disk:
    """The invariant disk I <= I0 with symplectic area 2*pi*I0."""

    I0: float

    def __post_init__(self):
        if not self.I0 > 0.0:
            raise ValueError(f"disk action radius must be positive, got {self.I0}")

    @property
    def radius(self) -> float:
        """Euclidean radius sqrt(2*I0) of the disk in the (p, q) plane."""
        return math.sqrt(2.0 * self.I0)


def to_action_angle(x: PhasePoint) -> ActionAngle:
    """Convert a phase point to action-angle coordinates.

    At the center (I = 0) the angle is set to 0 by convention; all built-in
    fields are functions of I and t there, so the choice never influences
    dynamics.
    """
    I = 0.5 * (x.p * x.p + x.q * x.q)
    if I == 0.0:
        return ActionAngle(I=0.0, phi=0.0)
    phi = math.atan2(x.q, x.p) % TWO_PI
    return ActionAngle(I=I, phi=phi)


def from_action_angle(a: ActionAngle) -> PhasePoint:
    """Inverse chart; rejects negative action."""
    if a.I < 0.0:
        raise ValueError(f"action must be non-negative, got {a.I}")
    r = math.sqrt(2.0 * a.I)
    return PhasePoint(p=r * math.cos(a.phi), q=r * math.sin(a.phi))


def disk_area(d: Disk) -> float:
    """Symplectic area S(D) = 2*pi*I0."""
    return TWO_PI * d.I0
