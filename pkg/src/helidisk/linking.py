"""Ergodic interpretation: asymptotic linking of trajectory pairs.

Trajectories live in the solid torus disk x time-circle, embedded in
3-space the standard untwisted way: the time circle becomes a planar
circle of major radius 3, and the disk (rescaled to unit radius) fills the
tube cross-section with a frame that does not rotate along the circle.

Linking numbers of closed polylines are computed by signed crossing
counting in a generic projection; the projection direction is derived
deterministically from a seed and rotated on degeneracy.  Pairwise linking
of closed-up trajectory segments, divided by the time span squared and
averaged with the volume-squared weight, estimates twice the helicity; the
overall sign of the crossing convention relative to the helicity
orientation was calibrated once on the rigid rotation and is frozen in
ORIENTATION_SIGN and asserted by tests.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from .errors import CurveProximityError, ProjectionDegeneracyError
from .fields import HamiltonianField
from .flow import IntegratorConfig, Trajectory, integrate_batch
from .geometry import Disk, TWO_PI, disk_area

# Global sign relating the crossing-count convention below to the helicity
# orientation (phi = atan2(q, p), dp^dq^dt positive).  Calibrated once on
# linear_rotation(1) and frozen; tests assert the contract
# ORIENTATION_SIGN * mean_total ~ 2 * helicity.
ORIENTATION_SIGN = -1

_MAJOR_RADIUS = 3.0
_MIN_CURVE_DISTANCE = 1e-6
_PROJECTION_RETRIES = 3


@dataclass(frozen=True)
class ClosedCurve:
    """A closed polyline in the embedded solid torus.

    xyz has shape (n, 3) with xyz[0] == xyz[-1]; theta carries the
    unwrapped torus angle of each vertex so the t-degree stays readable.
    """

    xyz: np.ndarray
    theta: np.ndarray

    @property
    def t_degree(self) -> float:
        return float((self.theta[-1] - self.theta[0]) / TWO_PI)


@dataclass(frozen=True)
class LinkingEstimate:
    mean_total: float  # volume^2-weighted average of pairwise linking / T^2
    std_error: float
    pairs: int
    periods: int
    orientation_sign: int

    @property
    def calibrated(self) -> float:
        """The estimator of twice the helicity."""
        return self.orientation_sign * self.mean_total + 0.0  # +0.0 flushes -0


def _embed(p, q, theta, disk: Disk) -> np.ndarray:
    """Map (p, q, theta) into 3-space; the tube cross-section is the disk
    rescaled to unit radius, so the torus never self-intersects."""
    r = disk.radius
    u = np.asarray(q, dtype=float) / r
    v = np.asarray(p, dtype=float) / r
    ct = np.cos(theta)
    st = np.sin(theta)
    return np.stack([(_MAJOR_RADIUS + u) * ct, (_MAJOR_RADIUS + u) * st, v], axis=-1)


def close_trajectory(traj: Trajectory, disk: Disk, period: Optional[float] = None) -> ClosedCurve:
    """Close an integer-period trajectory segment into a loop.

    The closure runs inside the final time fiber: an angular arc at the
    endpoint radius from the endpoint angle to the start angle, then a
    radial segment to the start point.  It adds no winding in the torus
    direction, so the t-degree of the closed curve equals the number of
    periods integrated.
    """
    T = period if period is not None else traj.period
    span = float(traj.times[-1] - traj.times[0])
    k = span / T
    if abs(k - round(k)) > 1e-9 * max(1.0, abs(k)):
        raise ValueError(
            f"trajectory spans {k:.6f} periods; an integer number is required"
        )
    p1, q1 = float(traj.p[-1]), float(traj.q[-1])
    if 0.5 * (p1 * p1 + q1 * q1) > disk.I0 * (1.0 + 1e-6):
        raise ValueError("trajectory endpoint lies outside the disk")
    theta = TWO_PI * traj.times / T

    p0, q0 = float(traj.p[0]), float(traj.q[0])
    th_end = float(theta[-1])
    cp, cq, cth = [], [], []
    gap = math.hypot(p1 - p0, q1 - q0)
    if gap > 1e-12 * max(1.0, disk.radius):
        r0 = math.hypot(p0, q0)
        r1 = math.hypot(p1, q1)
        a1 = math.atan2(q1, p1)
        a0 = math.atan2(q0, p0)
        if r0 < 1e-12 or r1 < 1e-12:
            # a point at the center has no angle; close by one straight chord
            cp, cq, cth = [p0], [q0], [th_end]
        else:
            dphi = (a0 - a1 + math.pi) % TWO_PI - math.pi
            n_arc = max(2, int(math.ceil(abs(dphi) / 0.26)))
            for i in range(1, n_arc + 1):
                a = a1 + dphi * i / n_arc
                cp.append(r1 * math.cos(a))
                cq.append(r1 * math.sin(a))
                cth.append(th_end)
            # radial leg from (r1, a0) to (r0, a0)
            cp.append(r0 * math.cos(a0))
            cq.append(r0 * math.sin(a0))
            cth.append(th_end)
    p_all = np.concatenate([traj.p, np.asarray(cp), [p0]])
    q_all = np.concatenate([traj.q, np.asarray(cq), [q0]])
    th_all = np.concatenate([theta, np.asarray(cth), [th_end]])
    return ClosedCurve(xyz=_embed(p_all, q_all, th_all, disk), theta=th_all)


def _projection_direction(seed: int, attempt: int) -> np.ndarray:
    rng = np.random.default_rng(1000003 * (seed + 7) + attempt)
    while True:
        v = rng.normal(size=3)
        n = float(np.linalg.norm(v))
        if n > 1e-3:
            return v / n


def _segments(xyz: np.ndarray):
    a, b = xyz[:-1], xyz[1:]
    keep = np.linalg.norm(b - a, axis=1) > 1e-13
    return a[keep], b[keep]


def _signed_crossings(
    A: np.ndarray, B: np.ndarray, direction: np.ndarray
) -> Tuple[float, bool]:
    """Half-sum of signed crossings between two closed polylines projected
    along `direction`.  Returns (value, degenerate)."""
    d = direction
    helper = np.array([0.0, 0.0, 1.0]) if abs(d[2]) < 0.9 else np.array([1.0, 0.0, 0.0])
    e1 = np.cross(d, helper)
    e1 /= np.linalg.norm(e1)
    e2 = np.cross(d, e1)

    A0, A1 = _segments(A)
    B0, B1 = _segments(B)
    a0 = np.stack([A0 @ e1, A0 @ e2], axis=1)
    a1 = np.stack([A1 @ e1, A1 @ e2], axis=1)
    b0 = np.stack([B0 @ e1, B0 @ e2], axis=1)
    b1 = np.stack([B1 @ e1, B1 @ e2], axis=1)
    za0, za1 = A0 @ d, A1 @ d
    zb0, zb1 = B0 @ d, B1 @ d

    da = a1 - a0
    db = b1 - b0
    scale = max(float(np.max(np.abs(a0))), float(np.max(np.abs(b0))), 1.0)
    eps_par = 1e-9
    total = 0.0
    degenerate = False

    chunk = 512
    for lo in range(0, len(a0), chunk):
        hi = min(lo + chunk, len(a0))
        A0c = a0[lo:hi, None, :]
        dac = da[lo:hi, None, :]
        r = b0[None, :, :] - A0c
        denom = dac[..., 0] * db[None, :, 1] - dac[..., 1] * db[None, :, 0]
        cross_r_db = r[..., 0] * db[None, :, 1] - r[..., 1] * db[None, :, 0]
        cross_r_da = r[..., 0] * dac[..., 1] - r[..., 1] * dac[..., 0]
        with np.errstate(divide="ignore", invalid="ignore"):
            s = cross_r_db / denom
            w = cross_r_da / denom
        finite = np.abs(denom) > eps_par * (
            np.linalg.norm(dac, axis=-1) * np.linalg.norm(db[None, :, :], axis=-1)
        )
        inside = finite & (s > 0.0) & (s < 1.0) & (w > 0.0) & (w < 1.0)
        # crossings with parameters suspiciously close to a vertex mean the
        # projection is not generic for this polyline pair
        margin = 1e-9
        near_edge = (
            finite
            & (s > -margin)
            & (s < 1.0 + margin)
            & (w > -margin)
            & (w < 1.0 + margin)
            & (
                (np.abs(s) < margin)
                | (np.abs(s - 1.0) < margin)
                | (np.abs(w) < margin)
                | (np.abs(w - 1.0) < margin)
            )
        )
        if np.any(near_edge):
            degenerate = True
        if not np.any(inside):
            continue
        ii, jj = np.nonzero(inside)
        s_in = s[ii, jj]
        w_in = w[ii, jj]
        za = za0[lo + ii] + s_in * (za1[lo + ii] - za0[lo + ii])
        zb = zb0[jj] + w_in * (zb1[jj] - zb0[jj])
        dz = za - zb
        if np.any(np.abs(dz) < 1e-9 * scale):
            raise CurveProximityError(
                "curves pass within the depth-resolution tolerance of each other"
            )
        total += float(np.sum(np.sign(denom[ii, jj]) * np.sign(dz)))
    return 0.5 * total, degenerate


def _min_vertex_distance(A: np.ndarray, B: np.ndarray) -> float:
    best = math.inf
    chunk = 1024
    for lo in range(0, len(A), chunk):
        d = np.linalg.norm(A[lo : lo + chunk, None, :] - B[None, :, :], axis=-1)
        best = min(best, float(np.min(d)))
    return best


def linking_number(a: ClosedCurve, b: ClosedCurve, seed: int = 0) -> int:
    """Linking number of two disjoint closed polylines in 3-space."""
    if _min_vertex_distance(a.xyz, b.xyz) < _MIN_CURVE_DISTANCE:
        raise CurveProximityError(
            "curves approach closer than the disjointness tolerance"
        )
    last = None
    for attempt in range(_PROJECTION_RETRIES + 1):
        direction = _projection_direction(seed, attempt)
        value, degenerate = _signed_crossings(a.xyz, b.xyz, direction)
        last = value
        if degenerate:
            continue
        nearest = int(round(value))
        if abs(value - nearest) < 0.25:
            return nearest
    raise ProjectionDegeneracyError(
        f"no generic projection after {_PROJECTION_RETRIES + 1} attempts "
        f"(last crossing sum {last})"
    )


def _trajectory_from_arrays(times, P, Q, label, period) -> Trajectory:
    return Trajectory(times=times, p=P, q=Q, field_label=label, period=period)


def asymptotic_linking(
    H: HamiltonianField,
    disk: Disk,
    periods: int,
    pairs: int,
    seed: int,
    workers: int = 1,
    cfg: Optional[IntegratorConfig] = None,
    samples_per_period: int = 48,
) -> LinkingEstimate:
    """Monte-Carlo estimate of the volume^2-weighted average of pairwise
    linking / span^2.

    Initial conditions are sampled uniformly with respect to dp^dq^dt. Each
    trajectory runs for `periods` field periods, is closed inside its final
    fiber, and pairs are linked by crossing counting.  The reduction order
    is fixed by pair index, so the result does not depend on the worker
    count.  For ergodic-friendly fields ORIENTATION_SIGN * mean_total
    estimates 2 * helicity(H).
    """
    if periods < 4:
        raise ValueError("periods must be >= 4")
    if pairs < 16:
        raise ValueError("pairs must be >= 16")
    T = H.period
    span = periods * T
    if cfg is None:
        oversample = 4
        cfg = IntegratorConfig(step=T / (oversample * samples_per_period))
    stride = max(1, int(round(T / (samples_per_period * cfg.step))))

    rng = np.random.default_rng(seed)
    u = rng.random((2 * pairs, 3))
    radii = disk.radius * np.sqrt(u[:, 0])
    angles = TWO_PI * u[:, 1]
    P0 = radii * np.cos(angles)
    Q0 = radii * np.sin(angles)
    t_offsets = T * u[:, 2]

    def integrate_with_offsets(P0v, Q0v, offs):
        shifted = HamiltonianField(
            value=lambda p, q, t: H.value(p, q, np.asarray(t) + offs),
            gradient=lambda p, q, t: H.gradient(p, q, np.asarray(t) + offs),
            period=H.period,
            label=H.label,
            invariant_disk=H.invariant_disk,
        )
        return integrate_batch(
            shifted, P0v, Q0v, 0.0, span, cfg=cfg, record_stride=stride
        )

    if H.discontinuities:
        raise ValueError(
            "asymptotic_linking targets smooth fields; reparametrize "
            "piecewise constructions first"
        )
    times, Ps, Qs = integrate_with_offsets(P0, Q0, t_offsets)

    def curve_for(idx: int, jitter: float = 0.0) -> ClosedCurve:
        if jitter != 0.0:
            tj, Pj, Qj = integrate_with_offsets(
                np.array([P0[idx] * (1.0 - jitter)]),
                np.array([Q0[idx] * (1.0 - jitter)]),
                np.array([t_offsets[idx]]),
            )
            tr = _trajectory_from_arrays(
                tj + t_offsets[idx], Pj[:, 0], Qj[:, 0], H.label, T
            )
        else:
            tr = _trajectory_from_arrays(
                times + t_offsets[idx], Ps[:, idx], Qs[:, idx], H.label, T
            )
        return close_trajectory(tr, disk, period=T)

    def link_pair(i: int) -> float:
        ca = curve_for(2 * i)
        for retry in range(3):
            cb = curve_for(2 * i + 1, jitter=0.0 if retry == 0 else 1e-4 * retry)
            try:
                return float(linking_number(ca, cb, seed=seed + 17 * i))
            except CurveProximityError:
                if retry == 2:
                    raise
        raise AssertionError("unreachable")

    lks = [0.0] * pairs
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            for i, v in zip(range(pairs), ex.map(link_pair, range(pairs))):
                lks[i] = v
    else:
        for i in range(pairs):
            lks[i] = link_pair(i)

    norm = np.asarray(lks) / span**2
    vol = disk_area(disk) * T
    mean_total = float(vol**2 * np.mean(norm))
    std_error = float(vol**2 * np.std(norm, ddof=1) / math.sqrt(pairs))
    return LinkingEstimate(
        mean_total=mean_total,
        std_error=std_error,
        pairs=pairs,
        periods=periods,
        orientation_sign=ORIENTATION_SIGN,
    )
