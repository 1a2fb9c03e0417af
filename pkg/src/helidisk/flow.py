"""Numerical integration of the Hamiltonian system and Poincare maps.

The working scheme is the implicit midpoint rule, which is symplectic for
nonautonomous Hamiltonians; classical RK4 is kept purely as a cross-check
oracle.  Integration spans are split into panels at the field's declared
time discontinuities, and each panel uses the largest uniform step not
exceeding the configured one, so the step always divides the panel.

All steppers operate on batches: a state is an (M, 2) array of (p, q)
rows, and the field callables vectorize over it.  Integrating distinct
initial conditions this way is deterministic regardless of batch size.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field
from typing import List, Optional, Tuple

import numpy as np

from .errors import (
    BoundaryNotInvariantError,
    DiskEscapeError,
    RotationTrackingError,
    SolverConvergenceError,
)
from .fields import HamiltonianField
from .geometry import Disk, ExtendedPoint, PhasePoint, TWO_PI

SCHEMES = ("implicit-midpoint", "rk4-oracle")

_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0

# FD step for the in-step Jacobian of the vector field (Newton) only.
_JAC_FD_STEP = 1e-6

_ESCAPE_SLACK = 1e-3


@dataclass(frozen=True)
class IntegratorConfig:
    step: float = TWO_PI / 2000.0
    scheme: str = "implicit-midpoint"
    newton_tol: float = 1e-12
    newton_max_iter: int = 25

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise ValueError(f"unknown scheme {self.scheme!r}; pick one of {SCHEMES}")
        if not self.step > 0.0:
            raise ValueError("step must be positive")


DEFAULT_CONFIG = IntegratorConfig()


@dataclass
class Trajectory:
    """A single integrated orbit, stored as arrays for efficiency."""

    times: np.ndarray
    p: np.ndarray
    q: np.ndarray
    field_label: str
    period: float = TWO_PI

    @property
    def samples(self) -> List[ExtendedPoint]:
        return [
            ExtendedPoint(p=float(pi), q=float(qi), t=float(ti))
            for ti, pi, qi in zip(self.times, self.p, self.q)
        ]

    @property
    def end(self) -> PhasePoint:
        return PhasePoint(p=float(self.p[-1]), q=float(self.q[-1]))


def _rhs(field: HamiltonianField):
    def f(t, P, Q):
        gp, gq = field.gradient(P, Q, t)
        return -np.asarray(gq, dtype=float), np.asarray(gp, dtype=float)

    return f


def _panels(field: HamiltonianField, t0: float, t1: float) -> List[Tuple[float, float]]:
    """Split [t0, t1] at every time congruent to a declared discontinuity."""
    if not field.discontinuities:
        return [(t0, t1)]
    lo, hi = (t0, t1) if t1 >= t0 else (t1, t0)
    cuts = set()
    T = field.period
    for d in field.discontinuities:
        k0 = math.floor((lo - d) / T)
        k1 = math.ceil((hi - d) / T)
        for k in range(k0, k1 + 1):
            c = d + k * T
            if lo + 1e-12 < c < hi - 1e-12:
                cuts.add(c)
    pts = [lo] + sorted(cuts) + [hi]
    if t1 >= t0:
        return list(zip(pts[:-1], pts[1:]))
    pts = pts[::-1]
    return list(zip(pts[:-1], pts[1:]))


def _step_midpoint(f, t, h, P, Q, cfg: IntegratorConfig):
    """One implicit midpoint step solved by Newton with a chord FD Jacobian."""
    tm = t + 0.5 * h
    fp, fq = f(tm, P, Q)
    Yp = P + h * fp
    Yq = Q + h * fq

    # chord Jacobian of the rhs at the predictor midpoint
    Pm = 0.5 * (P + Yp)
    Qm = 0.5 * (Q + Yq)
    d = _JAC_FD_STEP
    fp_pp, fq_pp = f(tm, Pm + d, Qm)
    fp_pm, fq_pm = f(tm, Pm - d, Qm)
    fp_qp, fq_qp = f(tm, Pm, Qm + d)
    fp_qm, fq_qm = f(tm, Pm, Qm - d)
    J11 = (fp_pp - fp_pm) / (2 * d)
    J12 = (fp_qp - fp_qm) / (2 * d)
    J21 = (fq_pp - fq_pm) / (2 * d)
    J22 = (fq_qp - fq_qm) / (2 * d)
    A11 = 1.0 - 0.5 * h * J11
    A12 = -0.5 * h * J12
    A21 = -0.5 * h * J21
    A22 = 1.0 - 0.5 * h * J22
    det = A11 * A22 - A12 * A21
    if np.any(np.abs(det) < 1e-14):
        raise SolverConvergenceError("singular Newton matrix in midpoint step")

    for it in range(cfg.newton_max_iter + 1):
        fp, fq = f(tm, 0.5 * (P + Yp), 0.5 * (Q + Yq))
        Rp = Yp - P - h * fp
        Rq = Yq - Q - h * fq
        res = max(float(np.max(np.abs(Rp))), float(np.max(np.abs(Rq))))
        if res <= cfg.newton_tol:
            return Yp, Yq
        if it == cfg.newton_max_iter:
            break
        Yp = Yp - (A22 * Rp - A12 * Rq) / det
        Yq = Yq - (-A21 * Rp + A11 * Rq) / det
    raise SolverConvergenceError(
        f"midpoint Newton iteration did not reach {cfg.newton_tol} "
        f"in {cfg.newton_max_iter} iterations (residual {res:.3e})"
    )


def _step_rk4(f, t, h, P, Q):
    k1p, k1q = f(t, P, Q)
    k2p, k2q = f(t + 0.5 * h, P + 0.5 * h * k1p, Q + 0.5 * h * k1q)
    k3p, k3q = f(t + 0.5 * h, P + 0.5 * h * k2p, Q + 0.5 * h * k2q)
    k4p, k4q = f(t + h, P + h * k3p, Q + h * k3q)
    return (
        P + h / 6.0 * (k1p + 2 * k2p + 2 * k3p + k4p),
        Q + h / 6.0 * (k1q + 2 * k2q + 2 * k3q + k4q),
    )


def integrate_batch(
    field: HamiltonianField,
    P0: np.ndarray,
    Q0: np.ndarray,
    t0: float,
    t1: float,
    cfg: IntegratorConfig = DEFAULT_CONFIG,
    record_stride: Optional[int] = None,
    check_escape: bool = True,
):
    """Integrate a batch of initial conditions from t0 to t1 (t1 < t0 runs
    backwards).

    With record_stride=None only the endpoint state is returned as (P, Q).
    Otherwise returns (times, Ps, Qs) where every record_stride-th step plus
    the initial and final states are recorded; Ps has shape (K, M).
    """
    f = _rhs(field)
    P = np.array(P0, dtype=float, copy=True)
    Q = np.array(Q0, dtype=float, copy=True)
    escape_sq = None
    if check_escape and field.invariant_disk is not None:
        escape_sq = 2.0 * field.invariant_disk.I0 * (1.0 + _ESCAPE_SLACK)

    recording = record_stride is not None
    times = [t0] if recording else None
    Ps = [P.copy()] if recording else None
    Qs = [Q.copy()] if recording else None

    step_index = 0
    for a, b in _panels(field, t0, t1):
        span = b - a
        n = max(1, math.ceil(abs(span) / cfg.step))
        h = span / n
        for i in range(n):
            t = a + i * h
            if cfg.scheme == "implicit-midpoint":
                P, Q = _step_midpoint(f, t, h, P, Q, cfg)
            else:
                P, Q = _step_rk4(f, t, h, P, Q)
            step_index += 1
            if escape_sq is not None and np.any(P * P + Q * Q > escape_sq):
                raise DiskEscapeError(
                    f"trajectory of '{field.label}' escaped the invariant disk "
                    f"near t = {t + h:.6f}"
                )
            if recording and step_index % record_stride == 0:
                times.append(t + h)
                Ps.append(P.copy())
                Qs.append(Q.copy())
    if recording:
        if abs(times[-1] - t1) > 1e-12 * max(1.0, abs(t1)):
            times.append(t1)
            Ps.append(P.copy())
            Qs.append(Q.copy())
        else:
            times[-1] = t1
            Ps[-1] = P.copy()
            Qs[-1] = Q.copy()
        return np.asarray(times), np.asarray(Ps), np.asarray(Qs)
    return P, Q


def integrate(
    H: HamiltonianField,
    x0: PhasePoint,
    t0: float,
    t1: float,
    cfg: IntegratorConfig = DEFAULT_CONFIG,
) -> Trajectory:
    """Integrate a single trajectory, recording every accepted step."""
    times, Ps, Qs = integrate_batch(
        H,
        np.array([x0.p]),
        np.array([x0.q]),
        t0,
        t1,
        cfg=cfg,
        record_stride=1,
    )
    return Trajectory(
        times=times, p=Ps[:, 0], q=Qs[:, 0], field_label=H.label, period=H.period
    )


@dataclass(frozen=True)
class PoincareMap:
    """The time-(periods * period) flow map of a field, sampled numerically."""

    field: HamiltonianField
    disk: Disk
    periods: int = 1
    config: IntegratorConfig = dc_field(default_factory=IntegratorConfig)

    def __post_init__(self):
        if self.periods < 1:
            raise ValueError("periods must be >= 1")

    @property
    def span(self) -> float:
        return self.periods * self.field.period


def poincare_apply(m: PoincareMap, x: PhasePoint) -> PhasePoint:
    P, Q = integrate_batch(
        m.field, np.array([x.p]), np.array([x.q]), 0.0, m.span, cfg=m.config
    )
    return PhasePoint(p=float(P[0]), q=float(Q[0]))


def poincare_apply_batch(m: PoincareMap, P0, Q0):
    return integrate_batch(m.field, P0, Q0, 0.0, m.span, cfg=m.config)


def disk_samples(disk: Disk, n: int, margin: float = 0.02):
    """Deterministic low-discrepancy points in the open disk (Fibonacci
    lattice in action-angle).  Returns (P, Q) arrays of length n."""
    j = np.arange(n)
    I = disk.I0 * (1.0 - margin) * (j + 0.5) / n
    phi = TWO_PI * np.mod(j * _GOLDEN, 1.0)
    r = np.sqrt(2.0 * I)
    return r * np.cos(phi), r * np.sin(phi)


def map_distance(a: PoincareMap, b: PoincareMap, samples: int = 50) -> float:
    """Sup over a deterministic sample set of the distance between images."""
    if abs(a.disk.I0 - b.disk.I0) > 1e-12:
        raise ValueError("map_distance requires maps on the same disk")
    P0, Q0 = disk_samples(a.disk, samples)
    Pa, Qa = poincare_apply_batch(a, P0, Q0)
    Pb, Qb = poincare_apply_batch(b, P0, Q0)
    return float(np.max(np.hypot(Pa - Pb, Qa - Qb)))


def boundary_rotation_number(
    H: HamiltonianField,
    disk: Disk,
    total_time: float,
    cfg: IntegratorConfig = DEFAULT_CONFIG,
) -> float:
    """Continuous angle advance of a boundary trajectory divided by 2*pi.

    The trajectory starts a relative 1e-4 inside the circle: fields like the
    capped rotation have a gradient kink exactly on it, which would make the
    implicit solve wobble between branches (the Euler predictor overshoots
    the circle by about (omega*h)^2/4 in action), while the inside limit is
    the rotation the boundary actually performs.  The angle is unwrapped
    along the recorded steps; the step must be small enough that no single
    step turns by pi/2 or more, otherwise the branch continuation is
    ambiguous and an error is raised.
    """
    x0 = PhasePoint(p=disk.radius * math.sqrt(1.0 - 1e-4), q=0.0)
    traj = integrate(H, x0, 0.0, total_time, cfg=cfg)
    I = 0.5 * (traj.p**2 + traj.q**2)
    drift = float(np.max(np.abs(I - I[0])))
    if drift > 1e-6 * max(1.0, disk.I0):
        raise BoundaryNotInvariantError(
            f"boundary circle is not invariant under '{H.label}' "
            f"(action drift {drift:.3e})"
        )
    angles = np.arctan2(traj.q, traj.p)
    steps = np.diff(angles)
    steps = (steps + math.pi) % TWO_PI - math.pi
    if np.any(np.abs(steps) >= math.pi / 2):
        raise RotationTrackingError(
            "angle advanced by >= pi/2 in one step; decrease the time step"
        )
    return float(np.sum(steps) / TWO_PI)


def map_jacobian_determinant(m: PoincareMap, x: PhasePoint, fd_step: float = 1e-5) -> float:
    """Finite-difference Jacobian determinant of the Poincare map at x.

    The implicit midpoint map is symplectic, so this should be 1 up to the
    Newton tolerance and the FD truncation error.
    """
    d = fd_step
    P0 = np.array([x.p + d, x.p - d, x.p, x.p])
    Q0 = np.array([x.q, x.q, x.q + d, x.q - d])
    P1, Q1 = poincare_apply_batch(m, P0, Q0)
    dpdp = (P1[0] - P1[1]) / (2 * d)
    dqdp = (Q1[0] - Q1[1]) / (2 * d)
    dpdq = (P1[2] - P1[3]) / (2 * d)
    dqdq = (Q1[2] - Q1[3]) / (2 * d)
    return float(dpdp * dqdq - dpdq * dqdp)
