"""Hamiltonian fields on the disk and the named constructions.

A field is a time-periodic scalar H(p, q, t) together with its phase-plane
gradient (H_p, H_q).  Both callables are numpy-vectorized: they accept
floats or broadcastable arrays in (p, q) and in t.  Fields are immutable;
evaluation is effect-free, so fields are safe to share across workers.

Evaluation exactly at a time discontinuity returns the right-limit value,
which lets the quadrature and the integrator split panels deterministically.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence, Tuple

import numpy as np

from .errors import BoundaryInhomogeneityError, FieldDomainError
from .geometry import Disk, TWO_PI


@dataclass(frozen=True)
class HamiltonianField:
    """A time-periodic Hamiltonian H(p, q, t) with explicit gradient.

    radial_breakpoints lists action values where d/dI may jump; the
    quadrature splits its radial panels there.  invariant_disk, when set,
    declares that the flow leaves that disk invariant (the integrator then
    monitors escape).
    """

    value: Callable
    gradient: Callable
    period: float = TWO_PI
    discontinuities: Tuple[float, ...] = ()
    label: str = "custom"
    radial_breakpoints: Tuple[float, ...] = ()
    invariant_disk: Optional[Disk] = None

    def __post_init__(self):
        if not self.period > 0.0:
            raise ValueError("field period must be positive")
        object.__setattr__(self, "discontinuities", tuple(sorted(self.discontinuities)))


@dataclass(frozen=True)
class NormalizedField:
    """A field together with the time-dependent constant subtracted so that
    the value vanishes on the boundary circle I = I0 for every t."""

    base: HamiltonianField
    offset: Callable  # t -> subtracted boundary value

    def value(self, p, q, t):
        return self.base.value(p, q, t) - self.offset(t)


@dataclass(frozen=True)
class TimeReparametrization:
    """A monotone period-preserving time map t = map(tau) with derivative.

    order_k records how many tau-derivatives of a composed field survive at
    the junctions tau in {0, pi, 2*pi}.
    """

    order_k: int
    map: Callable
    derivative: Callable


def _action(p, q):
    return 0.5 * (np.asarray(p, dtype=float) ** 2 + np.asarray(q, dtype=float) ** 2)


def _bshape(*xs):
    return np.broadcast(*xs).shape


def zero_field() -> HamiltonianField:
    """H identically zero; every point of extended phase space is fixed."""

    def value(p, q, t):
        return np.zeros(_bshape(p, q, t))

    def gradient(p, q, t):
        z = np.zeros(_bshape(p, q, t))
        return z, z.copy()

    return HamiltonianField(value=value, gradient=gradient, label="zero")


def linear_rotation(omega: float, disk: Disk) -> HamiltonianField:
    """H = omega * (I - I0): rigid rotation of the disk at angular rate omega.

    Already zero on the boundary circle, so the normalization offset is zero.
    """
    I0 = disk.I0
    omega = float(omega)

    def value(p, q, t):
        return np.broadcast_to(omega * (_action(p, q) - I0), _bshape(p, q, t)).copy()

    def gradient(p, q, t):
        shape = _bshape(p, q, t)
        return (
            np.broadcast_to(omega * np.asarray(p, dtype=float), shape).copy(),
            np.broadcast_to(omega * np.asarray(q, dtype=float), shape).copy(),
        )

    return HamiltonianField(
        value=value,
        gradient=gradient,
        label=f"linear:{omega:g}",
        invariant_disk=disk,
    )


def twist_field(
    profile: Callable,
    disk: Disk,
    profile_deriv: Callable,
    label: str = "twist",
) -> HamiltonianField:
    """Autonomous radial field H = profile(I).

    The period map is the twist (I, phi) -> (I, phi + 2*pi*profile'(I)).
    profile and profile_deriv must be numpy-vectorized in I.  For the
    boundary value to vanish without normalization, profile(I0) must be 0.
    """

    def value(p, q, t):
        return np.broadcast_to(np.asarray(profile(_action(p, q)), dtype=float),
                               _bshape(p, q, t)).copy()

    def gradient(p, q, t):
        g = np.asarray(profile_deriv(_action(p, q)), dtype=float)
        shape = _bshape(p, q, t)
        return (
            np.broadcast_to(g * np.asarray(p, dtype=float), shape).copy(),
            np.broadcast_to(g * np.asarray(q, dtype=float), shape).copy(),
        )

    return HamiltonianField(
        value=value, gradient=gradient, label=label, invariant_disk=disk
    )


def poly_twist(coeffs: Sequence[float], disk: Disk) -> HamiltonianField:
    """Polynomial twist profile sum_j coeffs[j] * (I - I0)^(j+2).

    The lowest power is quadratic, so both the value and the gradient vanish
    at the boundary and the field is Calabi-admissible.
    """
    coeffs = [float(c) for c in coeffs]
    I0 = disk.I0

    def profile(I):
        u = np.asarray(I, dtype=float) - I0
        out = np.zeros_like(u)
        for j, c in enumerate(coeffs):
            out = out + c * u ** (j + 2)
        return out

    def profile_deriv(I):
        u = np.asarray(I, dtype=float) - I0
        out = np.zeros_like(u)
        for j, c in enumerate(coeffs):
            out = out + (j + 2) * c * u ** (j + 1)
        return out

    label = "twist:" + "|".join(f"{c:g}" for c in coeffs)
    return twist_field(profile, disk, profile_deriv, label=label)


def annulus_cap(n: int, I0: float, eps: float) -> HamiltonianField:
    """The quadratic cap H = (n / (4*eps)) * (-I + I0 + eps)^2 on the ring
    I0 <= I <= I0 + eps.

    Vanishes with zero gradient at the outer boundary I = I0 + eps; the
    value at the inner edge is n*eps/4 and |dH/dI| there equals |n|/2.
    Evaluation outside the ring is rejected.
    """
    if not eps > 0.0:
        raise ValueError("annulus width eps must be positive")
    n = int(n)
    I0 = float(I0)
    eps = float(eps)

    def _check(I):
        if np.any(I < I0 - 1e-12) or np.any(I > I0 + eps + 1e-12):
            raise FieldDomainError(
                f"annulus cap evaluated outside [{I0}, {I0 + eps}]"
            )

    def value(p, q, t):
        I = _action(p, q)
        _check(I)
        return np.broadcast_to(
            (n / (4.0 * eps)) * (-I + I0 + eps) ** 2, _bshape(p, q, t)
        ).copy()

    def gradient(p, q, t):
        I = _action(p, q)
        _check(I)
        dHdI = -(n / (2.0 * eps)) * (I0 + eps - I)
        shape = _bshape(p, q, t)
        return (
            np.broadcast_to(dHdI * np.asarray(p, dtype=float), shape).copy(),
            np.broadcast_to(dHdI * np.asarray(q, dtype=float), shape).copy(),
        )

    return HamiltonianField(
        value=value,
        gradient=gradient,
        label=f"annulus:{n},{eps:g}",
        radial_breakpoints=(I0, I0 + eps),
    )


def lemma1_extension(n: int, I0: float, eps: float) -> HamiltonianField:
    """Rigid rotation n*I/2 + c on I <= I0 capped by the annulus piece so the
    field vanishes (with zero gradient) at the extended boundary I0 + eps.

    The constant c = n*eps/4 - n*I0/2 makes the two pieces agree at I = I0.
    The radial derivative still jumps there (n/2 inside, -n/2 outside); the
    quadrature handles that through radial_breakpoints.  The period is 4*pi:
    one full period turns the disk I <= I0 by the angle 2*pi*n, so the
    period map restricted to the disk is the identity.
    """
    if not eps > 0.0:
        raise ValueError("annulus width eps must be positive")
    n = int(n)
    I0 = float(I0)
    eps = float(eps)
    c = n * eps / 4.0 - n * I0 / 2.0
    I1 = I0 + eps

    def value(p, q, t):
        I = _action(p, q)
        inner = n * I / 2.0 + c
        ring = (n / (4.0 * eps)) * np.minimum(I1 - I, eps) ** 2
        v = np.where(I <= I0, inner, np.where(I <= I1, ring, 0.0))
        return np.broadcast_to(v, _bshape(p, q, t)).copy()

    def gradient(p, q, t):
        I = _action(p, q)
        dHdI = np.where(
            I <= I0,
            n / 2.0,
            np.where(I <= I1, -(n / (2.0 * eps)) * np.maximum(I1 - I, 0.0), 0.0),
        )
        shape = _bshape(p, q, t)
        return (
            np.broadcast_to(dHdI * np.asarray(p, dtype=float), shape).copy(),
            np.broadcast_to(dHdI * np.asarray(q, dtype=float), shape).copy(),
        )

    return HamiltonianField(
        value=value,
        gradient=gradient,
        period=2.0 * TWO_PI,
        label=f"lemma1:{n},{eps:g}",
        radial_breakpoints=(I0, I1),
        invariant_disk=Disk(I1),
    )


def theorem2_piecewise(H1: HamiltonianField, n: int, disk: Disk) -> HamiltonianField:
    """The discontinuous comparison field: run H1 at double speed on
    t in [0, pi), then the integer twist 2*n*(I - I0) on [pi, 2*pi).

    The first branch is 2*H1(p, q, 2t); doubling both the rate and the
    Hamiltonian is what compresses the full time-2*pi flow of H1 into the
    first half period, so the period map is unchanged.  The second branch
    rotates the disk by 2*pi*n, i.e. acts as the identity, while shifting
    the helicity by n * S(D)^2 / 2 in magnitude.
    """
    if abs(H1.period - TWO_PI) > 1e-12:
        raise ValueError("theorem2_piecewise requires a 2*pi-periodic base field")
    n = int(n)
    I0 = disk.I0

    def value(p, q, t):
        tm = np.mod(np.asarray(t, dtype=float), TWO_PI)
        first = 2.0 * np.asarray(H1.value(p, q, 2.0 * tm), dtype=float)
        second = 2.0 * n * (_action(p, q) - I0)
        return np.where(tm < math.pi, first, second)

    def gradient(p, q, t):
        tm = np.mod(np.asarray(t, dtype=float), TWO_PI)
        g1p, g1q = H1.gradient(p, q, 2.0 * tm)
        mask = tm < math.pi
        p_arr = np.asarray(p, dtype=float)
        q_arr = np.asarray(q, dtype=float)
        gp = np.where(mask, 2.0 * np.asarray(g1p, dtype=float), 2.0 * n * p_arr)
        gq = np.where(mask, 2.0 * np.asarray(g1q, dtype=float), 2.0 * n * q_arr)
        return gp, gq

    return HamiltonianField(
        value=value,
        gradient=gradient,
        discontinuities=(0.0, math.pi),
        label=f"theorem2-piecewise({H1.label},n={n})",
        radial_breakpoints=H1.radial_breakpoints,
        invariant_disk=disk,
    )


def reparam_identity() -> TimeReparametrization:
    """map(tau) = tau; useful as the do-nothing reparametrization."""
    return TimeReparametrization(
        order_k=0,
        map=lambda tau: np.asarray(tau, dtype=float) + 0.0,
        derivative=lambda tau: np.ones(np.shape(tau)) if np.ndim(tau) else 1.0,
    )


def reparam_c1() -> TimeReparametrization:
    """t = tau - sin(2*(tau - pi))/2; the derivative 1 - cos(2*(tau - pi))
    vanishes at tau in {0, pi, 2*pi}, smoothing a jump there to C^1."""

    def tmap(tau):
        tau = np.asarray(tau, dtype=float)
        return tau - 0.5 * np.sin(2.0 * (tau - math.pi))

    def deriv(tau):
        tau = np.asarray(tau, dtype=float)
        return 1.0 - np.cos(2.0 * (tau - math.pi))

    return TimeReparametrization(order_k=1, map=tmap, derivative=deriv)


def reparam_c3() -> TimeReparametrization:
    """t = tau - sin(2u)/2 - sin^3(2u)/12 with u = tau - pi.

    Near the junctions t deviates from them only at order delta^5, so the
    composed field is C^3 there.
    """

    def tmap(tau):
        u = np.asarray(tau, dtype=float) - math.pi
        s = np.sin(2.0 * u)
        return np.asarray(tau, dtype=float) - 0.5 * s - s**3 / 12.0

    def deriv(tau):
        u = np.asarray(tau, dtype=float) - math.pi
        c = np.cos(2.0 * u)
        s = np.sin(2.0 * u)
        return 1.0 - c - 0.5 * s * s * c

    return TimeReparametrization(order_k=3, map=tmap, derivative=deriv)


def reparametrize(H: HamiltonianField, r: TimeReparametrization) -> HamiltonianField:
    """Time-substituted field H'(p, q, tau) = r.derivative(tau) * H(p, q, r.map(tau)).

    The flow of H' over tau in [0, 2*pi] coincides with the flow of H over
    t in [0, 2*pi] (chain rule), and the helicity integral is preserved by
    the change of variables t = r.map(tau).  If the discontinuities of H sit
    at images of derivative zeros, H' is C^order_k in tau and carries no
    discontinuity markers.
    """
    if abs(H.period - TWO_PI) > 1e-12:
        raise ValueError("reparametrize requires a 2*pi-periodic field")

    zeros = (0.0, math.pi, TWO_PI)
    smoothed = all(
        any(abs(d - z) < 1e-12 or abs(d - z + TWO_PI) < 1e-12 for z in zeros)
        for d in H.discontinuities
    )

    def value(p, q, tau):
        return np.asarray(r.derivative(tau), dtype=float) * np.asarray(
            H.value(p, q, r.map(tau)), dtype=float
        )

    def gradient(p, q, tau):
        w = np.asarray(r.derivative(tau), dtype=float)
        gp, gq = H.gradient(p, q, r.map(tau))
        return w * np.asarray(gp, dtype=float), w * np.asarray(gq, dtype=float)

    return HamiltonianField(
        value=value,
        gradient=gradient,
        discontinuities=() if smoothed else H.discontinuities,
        label=f"reparam(k={r.order_k},{H.label})",
        radial_breakpoints=H.radial_breakpoints,
        invariant_disk=H.invariant_disk,
    )


def boundary_spread(H: HamiltonianField, disk: Disk, n_phi: int = 32, n_t: int = 33):
    """Max over sample times of the spread of H along the boundary circle,
    plus the sample offsets; used for the disk-invariance precondition."""
    r = disk.radius
    phis = TWO_PI * np.arange(n_phi) / n_phi
    pb = r * np.cos(phis)
    qb = r * np.sin(phis)
    # include points just right of each discontinuity in the t sample
    ts = list(H.period * (np.arange(n_t) + 0.31) / n_t)
    ts.extend(d + 1e-9 for d in H.discontinuities)
    spread = 0.0
    for t in ts:
        vals = np.asarray(H.value(pb, qb, t), dtype=float)
        spread = max(spread, float(np.max(vals) - np.min(vals)))
    return spread


def normalize(H: HamiltonianField, disk: Disk, tol: float = 1e-8) -> NormalizedField:
    """Subtract the boundary value H(I0, phi=0, t) so the field vanishes on
    the boundary torus.  The dynamics are untouched (gradient unchanged).

    Raises BoundaryInhomogeneityError when H varies along the boundary
    circle beyond tol, since then the disk is not invariant and no offset
    can flatten the boundary.
    """
    pb = disk.radius  # reference point phi = 0: (p, q) = (sqrt(2 I0), 0)
    spread = boundary_spread(H, disk)
    ts = H.period * (np.arange(33) + 0.31) / 33
    scale = max(1.0, float(np.max(np.abs(np.asarray(H.value(pb, 0.0, ts), dtype=float)))))
    if spread > tol * scale:
        raise BoundaryInhomogeneityError(
            f"field '{H.label}' varies by {spread:.3e} along the boundary circle; "
            "the disk is not invariant"
        )

    def offset(t):
        return np.asarray(H.value(pb, 0.0, t), dtype=float)

    return NormalizedField(base=H, offset=offset)


def scale_field(H: HamiltonianField, mu: float) -> HamiltonianField:
    """Rescale H -> mu * H(p, q, mu * t) with period shrunk to period/mu.

    The trajectories are traversed mu times faster, so period maps and the
    average linking of trajectories are unchanged.
    """
    if not mu > 0.0:
        raise ValueError("scale factor mu must be positive")
    mu = float(mu)
    if mu == 1.0:
        return H

    def value(p, q, t):
        return mu * np.asarray(H.value(p, q, mu * np.asarray(t, dtype=float)), dtype=float)

    def gradient(p, q, t):
        gp, gq = H.gradient(p, q, mu * np.asarray(t, dtype=float))
        return mu * np.asarray(gp, dtype=float), mu * np.asarray(gq, dtype=float)

    return HamiltonianField(
        value=value,
        gradient=gradient,
        period=H.period / mu,
        discontinuities=tuple(d / mu for d in H.discontinuities),
        label=f"scale({mu:g},{H.label})",
        radial_breakpoints=H.radial_breakpoints,
        invariant_disk=H.invariant_disk,
    )


def rotate_coordinates(H: HamiltonianField, theta: float) -> HamiltonianField:
    """Pre-compose H with a rigid rotation of the (p, q) plane.

    The rotation is symplectic, so this is a change of symplectic
    coordinates; helicity must not change under it.
    """
    ct, st = math.cos(theta), math.sin(theta)

    def rot(p, q):
        p = np.asarray(p, dtype=float)
        q = np.asarray(q, dtype=float)
        return ct * p - st * q, st * p + ct * q

    def value(p, q, t):
        pr, qr = rot(p, q)
        return H.value(pr, qr, t)

    def gradient(p, q, t):
        pr, qr = rot(p, q)
        gp, gq = H.gradient(pr, qr, t)
        gp = np.asarray(gp, dtype=float)
        gq = np.asarray(gq, dtype=float)
        # chain rule: d/dp = ct * d/dpr + st * d/dqr, d/dq = -st * d/dpr + ct * d/dqr
        return ct * gp + st * gq, -st * gp + ct * gq

    return HamiltonianField(
        value=value,
        gradient=gradient,
        period=H.period,
        discontinuities=H.discontinuities,
        label=f"rot({theta:g},{H.label})",
        radial_breakpoints=H.radial_breakpoints,
        invariant_disk=H.invariant_disk,
    )


def add_time_function(H: HamiltonianField, f: Callable, label_suffix: str = "+f(t)"):
    """Add a pure function of time to H; a gauge term that changes neither
    the dynamics nor the normalized field."""

    def value(p, q, t):
        return np.asarray(H.value(p, q, t), dtype=float) + np.asarray(
            f(np.asarray(t, dtype=float)), dtype=float
        )

    return HamiltonianField(
        value=value,
        gradient=H.gradient,
        period=H.period,
        discontinuities=H.discontinuities,
        label=H.label + label_suffix,
        radial_breakpoints=H.radial_breakpoints,
        invariant_disk=H.invariant_disk,
    )


def nonradial_admissible(disk: Disk, amplitude: float = 0.5) -> HamiltonianField:
    """H = (I - I0)^2 * (1 + amplitude*cos(phi - t)): a genuinely angle- and
    time-dependent field whose value and gradient still vanish on the
    boundary torus.  Used to exercise coordinate-rotation invariance
    non-vacuously.
    """
    I0 = disk.I0
    a = float(amplitude)

    def value(p, q, t):
        p = np.asarray(p, dtype=float)
        q = np.asarray(q, dtype=float)
        t = np.asarray(t, dtype=float)
        I = _action(p, q)
        # cos(phi - t) * r^2 = (p cos t + q sin t) * r ... expand via r*cos(phi)=p, r*sin(phi)=q
        r2 = 2.0 * I
        with np.errstate(invalid="ignore", divide="ignore"):
            cosdiff = np.where(
                r2 > 0.0,
                (p * np.cos(t) + q * np.sin(t)) / np.sqrt(np.where(r2 > 0.0, r2, 1.0)),
                0.0,
            )
        return (I - I0) ** 2 * (1.0 + a * cosdiff)

    def gradient(p, q, t):
        # finite differences are fine here: this field exists for invariance
        # tests, not for flow integration
        h = 1e-6
        gp = (value(np.asarray(p) + h, q, t) - value(np.asarray(p) - h, q, t)) / (2 * h)
        gq = (value(p, np.asarray(q) + h, t) - value(p, np.asarray(q) - h, t)) / (2 * h)
        return gp, gq

    return HamiltonianField(
        value=value,
        gradient=gradient,
        label=f"nonradial:{a:g}",
        invariant_disk=disk,
    )
