"""End-to-end construction of a second flow with shifted helicity.

theorem2_pair composes the discontinuous comparison field with a time
reparametrization whose derivative vanishes at the junctions, producing a
C^k Hamiltonian with the same period map as the input and helicity shifted
by n * S(D)^2 / 2 in magnitude.

smoothness_order measures, by one-sided finite differences, how many time
derivatives of a field match across given junction times.
"""

from __future__ import annotations

import math
from functools import lru_cache
from typing import Optional, Sequence

import numpy as np

from .fields import (
    HamiltonianField,
    TimeReparametrization,
    reparam_c1,
    reparam_c3,
    reparametrize,
    theorem2_piecewise,
)
from .flow import disk_samples
from .geometry import Disk

# Per-derivative-order absolute tolerances for matching one-sided
# derivatives, scaled by the local field magnitude.  The order-4 check uses
# a wider step: a one-sided 4th difference at h = 1e-3 drowns in roundoff.
_MATCH_TOL = {0: 1e-8, 1: 1e-6, 2: 5e-5, 3: 1e-4, 4: 1e-3}
_H_FD = 1e-3
_H_FD_ORDER4 = 5e-2
_STENCIL_EXTRA = 4  # accuracy order of the one-sided stencils


def theorem2_pair(H1: HamiltonianField, n: int, disk: Disk, k: int = 1) -> HamiltonianField:
    """Return H2, a C^k field with the same Poincare map as H1 and helicity
    shifted by n * S(D)^2 / 2 in magnitude (sign per the invariants-module
    orientation).

    Only k in {1, 3} is supported; these are the two explicit time maps.
    """
    if k == 1:
        r = reparam_c1()
    elif k == 3:
        r = reparam_c3()
    else:
        raise ValueError("only smoothness orders k = 1 and k = 3 are constructed")
    return reparametrize(theorem2_piecewise(H1, n, disk), r)


@lru_cache(maxsize=64)
def _one_sided_coeffs(j: int, offsets: tuple) -> np.ndarray:
    """Coefficients c with sum_i c_i f(x + o_i h) ~ h^j f^(j)(x)."""
    o = np.asarray(offsets, dtype=float)
    m = len(o)
    V = np.vander(o, m, increasing=True).T  # V[k, i] = o_i^k
    rhs = np.zeros(m)
    rhs[j] = math.factorial(j)
    return np.linalg.solve(V, rhs)


def _one_sided_derivative(f, tau0: float, j: int, h: float, side: int):
    """j-th derivative at tau0 from one side; side=+1 includes tau0 itself
    (right-limit field semantics), side=-1 stays strictly below tau0."""
    m = j + _STENCIL_EXTRA
    if side > 0:
        offsets = tuple(float(i) for i in range(m))
    else:
        offsets = tuple(-float(i) for i in range(1, m + 1))
    c = _one_sided_coeffs(j, offsets)
    vals = np.stack([np.asarray(f(tau0 + o * h), dtype=float) for o in offsets])
    return np.tensordot(c, vals, axes=1) / h**j, float(np.max(np.abs(vals)))


def smoothness_order(
    H: HamiltonianField,
    tau_points: Sequence[float],
    max_order: int = 3,
    disk: Optional[Disk] = None,
    n_space: int = 5,
) -> int:
    """Largest j <= max_order such that the one-sided time derivatives of H
    up to order j agree at every listed junction, at a small set of interior
    phase points; 0 when the value itself jumps.

    Tolerances scale with the local field magnitude.
    """
    if max_order > 4:
        raise ValueError("max_order above 4 is not resolvable in double precision")
    d = disk if disk is not None else (H.invariant_disk or Disk(1.0))
    P, Q = disk_samples(d, n_space)

    def f_at(tau):
        return np.asarray(H.value(P, Q, tau), dtype=float)

    matched = 0
    for j in range(0, max_order + 1):
        h = _H_FD_ORDER4 if j == 4 else _H_FD
        ok = True
        for tau0 in tau_points:
            right, scale_r = _one_sided_derivative(f_at, float(tau0), j, h, +1)
            left, scale_l = _one_sided_derivative(f_at, float(tau0), j, h, -1)
            scale = max(1.0, scale_r, scale_l)
            if float(np.max(np.abs(right - left))) > _MATCH_TOL[j] * scale:
                ok = False
                break
        if not ok:
            break
        matched = j
    return matched
