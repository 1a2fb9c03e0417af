"""Shared experiment runners behind the CLI and the HTTP service.

Each runner returns a list of Row records; both front ends render them the
same way (CSV with the fixed seven-column schema, or JSON).  Floats are
formatted with 17 significant digits so a CSV round-trips bit-exactly.

Field mini-language (the `field` flag / request attribute):

    zero                         identically zero Hamiltonian
    linear:<omega>               omega * (I - I0)
    twist:<c2>|<c3>|...          c2*(I-I0)^2 + c3*(I-I0)^3 + ...
    lemma1:<n>,<eps>             capped rotation on the extended disk
    theorem2:<base>,n=<n>[,k=<1|3>]
                                 smooth companion of <base> with helicity
                                 shifted by n*S^2/2 (k = junction smoothness)
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field as dc_field
from typing import Dict, List, Optional, Sequence

import numpy as np

from .constructor import smoothness_order, theorem2_pair
from .errors import FieldSpecError
from .fields import HamiltonianField, lemma1_extension, linear_rotation, poly_twist, zero_field
from .flow import (
    IntegratorConfig,
    PoincareMap,
    disk_samples,
    map_distance,
    poincare_apply_batch,
)
from .geometry import Disk, TWO_PI, disk_area
from .invariants import (
    QuadratureGrid,
    calabi,
    form_helicity,
    generalized_calabi,
    helicity,
    quantization_check,
)
from .linking import asymptotic_linking

CSV_HEADER = ("experiment", "field", "i0", "grid", "value", "err_proxy", "extra")


def fmt(x) -> str:
    return format(float(x), ".17g")


@dataclass
class Row:
    experiment: str
    field: str
    i0: float
    grid: str
    value: float
    err_proxy: Optional[float] = None
    extra: Dict[str, str] = dc_field(default_factory=dict)

    def as_csv(self) -> List[str]:
        return [
            self.experiment,
            self.field,
            fmt(self.i0),
            self.grid,
            fmt(self.value),
            "" if self.err_proxy is None else fmt(self.err_proxy),
            ";".join(f"{k}={v}" for k, v in self.extra.items()),
        ]

    def as_dict(self) -> dict:
        return {
            "experiment": self.experiment,
            "field": self.field,
            "i0": self.i0,
            "grid": self.grid,
            "value": self.value,
            "err_proxy": self.err_proxy,
            "extra": dict(self.extra),
        }


def rows_to_csv(rows: Sequence[Row]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for row in rows:
        writer.writerow(row.as_csv())
    return buf.getvalue()


def parse_grid(text: str) -> QuadratureGrid:
    try:
        parts = [int(p) for p in text.split(",")]
    except ValueError:
        raise FieldSpecError(f"grid must be three comma-separated integers, got {text!r}")
    if len(parts) != 3:
        raise FieldSpecError(f"grid must have exactly three components, got {text!r}")
    try:
        return QuadratureGrid(*parts)
    except ValueError as e:
        raise FieldSpecError(str(e))


def parse_field(spec: str, i0: float) -> HamiltonianField:
    """Build a field from its mini-language string (grammar in the module
    docstring)."""
    spec = spec.strip()
    disk = Disk(i0)
    if spec == "zero":
        return zero_field()
    if spec == "linear":
        raise FieldSpecError("linear needs a rate: linear:<omega> (or pass --omega)")
    if spec.startswith("linear:"):
        try:
            omega = float(spec.split(":", 1)[1])
        except ValueError:
            raise FieldSpecError(f"bad linear rate in {spec!r}")
        return linear_rotation(omega, disk)
    if spec.startswith("twist:"):
        body = spec.split(":", 1)[1]
        try:
            coeffs = [float(c) for c in body.split("|") if c != ""]
        except ValueError:
            raise FieldSpecError(f"bad twist coefficients in {spec!r}")
        if not coeffs:
            raise FieldSpecError("twist needs at least one coefficient")
        return poly_twist(coeffs, disk)
    if spec.startswith("lemma1:"):
        body = spec.split(":", 1)[1]
        parts = body.split(",")
        if len(parts) != 2:
            raise FieldSpecError("lemma1 grammar is lemma1:<n>,<eps>")
        try:
            n = int(parts[0])
            eps = float(parts[1])
        except ValueError:
            raise FieldSpecError(f"bad lemma1 parameters in {spec!r}")
        if eps <= 0:
            raise FieldSpecError("lemma1 eps must be positive")
        return lemma1_extension(n, i0, eps)
    if spec.startswith("theorem2:"):
        body = spec.split(":", 1)[1]
        k = 1
        if ",k=" in body:
            body, ktext = body.rsplit(",k=", 1)
            try:
                k = int(ktext)
            except ValueError:
                raise FieldSpecError(f"bad smoothness order in {spec!r}")
        if ",n=" not in body:
            raise FieldSpecError("theorem2 grammar is theorem2:<base>,n=<int>[,k=<1|3>]")
        base_spec, ntext = body.rsplit(",n=", 1)
        try:
            n = int(ntext)
        except ValueError:
            raise FieldSpecError(f"bad shift integer in {spec!r}")
        base = parse_field(base_spec, i0)
        try:
            return theorem2_pair(base, n, disk, k=k)
        except ValueError as e:
            raise FieldSpecError(str(e))
    raise FieldSpecError(
        f"unknown field spec {spec!r}; known families: zero, linear:w, "
        "twist:c2|c3, lemma1:n,eps, theorem2:base,n=k"
    )


def _integrator_config(scheme: str, step: float) -> IntegratorConfig:
    try:
        return IntegratorConfig(step=step, scheme=scheme)
    except ValueError as e:
        raise FieldSpecError(str(e))


def run_invariant(
    kind: str,
    field_spec: str,
    i0: float = 1.0,
    grid: QuadratureGrid = QuadratureGrid(),
) -> List[Row]:
    """kind is one of helicity / form-helicity / calabi / generalized-calabi.

    The integration domain is the field's own invariant disk when it
    declares one (the capped rotation lives on the extended disk i0 + eps),
    and the plain --i0 disk otherwise; the row reports the disk used.
    """
    H = parse_field(field_spec, i0)
    disk = H.invariant_disk if H.invariant_disk is not None else Disk(i0)
    i0 = disk.I0
    if kind == "helicity":
        res = helicity(H, disk, grid)
        value, err = res.value, res.refinement_delta
    elif kind == "form-helicity":
        value = form_helicity(H, disk, grid)
        err = abs(value - form_helicity(H, disk, grid.half()))
    elif kind == "calabi":
        value = calabi(H, disk, grid)
        err = abs(value - calabi(H, disk, grid.half()))
    elif kind == "generalized-calabi":
        value = generalized_calabi(H, disk, grid)
        err = abs(value - generalized_calabi(H, disk, grid.half()))
    else:
        raise FieldSpecError(f"unknown invariant kind {kind!r}")
    return [Row(experiment=kind, field=H.label, i0=i0, grid=str(grid), value=value, err_proxy=err)]


def run_quantize(
    field1: str,
    field2: str,
    i0: float = 1.0,
    grid: QuadratureGrid = QuadratureGrid(),
    map_tol: float = 1e-4,
    samples: int = 50,
    scheme: str = "rk4-oracle",
    step: float = TWO_PI / 2000.0,
) -> List[Row]:
    disk = Disk(i0)
    H1 = parse_field(field1, i0)
    H2 = parse_field(field2, i0)
    cfg = _integrator_config(scheme, step)
    report = quantization_check(
        H1, H2, disk, grid, map_tol=map_tol, samples=samples, map_config=cfg
    )
    return [
        Row(
            experiment="quantize",
            field=f"{H1.label} vs {H2.label}",
            i0=i0,
            grid=str(grid),
            value=report.delta,
            err_proxy=report.residual,
            extra={
                "lattice_unit": fmt(report.lattice_unit),
                "n_nearest": str(report.n_nearest),
                "residual": fmt(report.residual),
                "map_tol": fmt(map_tol),
            },
        )
    ]


def run_theorem2(
    base_spec: str,
    n: int,
    k: int = 1,
    i0: float = 1.0,
    grid: QuadratureGrid = QuadratureGrid(),
    samples: int = 50,
    scheme: str = "rk4-oracle",
    step: float = TWO_PI / 2000.0,
) -> List[Row]:
    disk = Disk(i0)
    H1 = parse_field(base_spec, i0)
    H2 = theorem2_pair(H1, n, disk, k=k)
    cfg = _integrator_config(scheme, step)
    dist = map_distance(
        PoincareMap(H1, disk, config=cfg), PoincareMap(H2, disk, config=cfg), samples
    )
    h1 = helicity(H1, disk, grid)
    h2 = helicity(H2, disk, grid)
    shift = h2.value - h1.value
    order = smoothness_order(H2, (0.0, math.pi), max_order=max(3, k), disk=disk)
    S = disk_area(disk)
    return [
        Row(
            experiment="theorem2",
            field=f"theorem2:{base_spec},n={n},k={k}",
            i0=i0,
            grid=str(grid),
            value=shift,
            err_proxy=h2.refinement_delta + h1.refinement_delta,
            extra={
                "target_magnitude": fmt(abs(n) * S * S / 2.0),
                "map_distance": fmt(dist),
                "smoothness_order": str(order),
                "helicity_base": fmt(h1.value),
                "helicity_smooth": fmt(h2.value),
            },
        )
    ]


def run_lemma1_limit(
    n: int,
    i0: float = 1.0,
    eps_list: Sequence[float] = (0.2, 0.1, 0.05, 0.025),
    grid: QuadratureGrid = QuadratureGrid(),
) -> List[Row]:
    """Calabi invariants of the capped rotation on shrinking collars, plus a
    fitted convergence order against the limit -n * S(D)^2 / 2."""
    limit = -2.0 * math.pi**2 * n * i0**2
    rows = []
    errors = []
    for eps in eps_list:
        H = lemma1_extension(n, i0, eps)
        value = calabi(H, Disk(i0 + eps), grid)
        errors.append(abs(value - limit))
        rows.append(
            Row(
                experiment="lemma1-limit",
                field=f"lemma1:{n},{eps:g}",
                i0=i0,
                grid=str(grid),
                value=value,
                err_proxy=abs(value - limit),
                extra={"eps": fmt(eps), "limit": fmt(limit)},
            )
        )
    if len(eps_list) >= 2:
        slope = float(
            np.polyfit(np.log(np.asarray(eps_list, dtype=float)), np.log(errors), 1)[0]
        )
        rows.append(
            Row(
                experiment="lemma1-limit-fit",
                field=f"lemma1:{n},*",
                i0=i0,
                grid=str(grid),
                value=slope,
                err_proxy=None,
                extra={"limit": fmt(limit), "points": str(len(list(eps_list)))},
            )
        )
    return rows


def run_linking(
    field_spec: str,
    i0: float = 1.0,
    periods: int = 16,
    pairs: int = 64,
    seed: int = 0,
    workers: int = 1,
) -> List[Row]:
    disk = Disk(i0)
    H = parse_field(field_spec, i0)
    est = asymptotic_linking(H, disk, periods=periods, pairs=pairs, seed=seed, workers=workers)
    ref = 2.0 * helicity(H, disk).value
    return [
        Row(
            experiment="linking",
            field=H.label,
            i0=i0,
            grid=f"periods={periods},pairs={pairs}",
            value=est.calibrated,
            err_proxy=est.std_error,
            extra={
                "mean_total": fmt(est.mean_total),
                "orientation_sign": str(est.orientation_sign),
                "seed": str(seed),
                "two_helicity": fmt(ref),
            },
        )
    ]


def run_poincare(
    field_spec: str,
    i0: float = 1.0,
    samples: int = 16,
    periods: int = 1,
    scheme: str = "implicit-midpoint",
    step: float = TWO_PI / 2000.0,
) -> List[Row]:
    """Sample the period map on the deterministic disk lattice; one row per
    sample point with the image coordinates in the extra column."""
    disk = Disk(i0)
    H = parse_field(field_spec, i0)
    cfg = _integrator_config(scheme, step)
    m = PoincareMap(H, disk, periods=periods, config=cfg)
    P0, Q0 = disk_samples(disk, samples)
    P1, Q1 = poincare_apply_batch(m, P0, Q0)
    rows = []
    for j in range(samples):
        rows.append(
            Row(
                experiment="poincare",
                field=H.label,
                i0=i0,
                grid=f"periods={periods}",
                value=float(np.hypot(P1[j] - P0[j], Q1[j] - Q0[j])),
                err_proxy=None,
                extra={
                    "p0": fmt(P0[j]),
                    "q0": fmt(Q0[j]),
                    "p1": fmt(P1[j]),
                    "q1": fmt(Q1[j]),
                },
            )
        )
    return rows
