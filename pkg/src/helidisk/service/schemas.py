"""Pydantic request/response models for the HTTP service.

Requests mirror the CLI flags one to one; the grid is the same
"n_I,n_phi,n_t" string the CLI takes.  Responses carry the same rows the
CLI renders as CSV, so a thin client can reproduce the exact file.
"""

from __future__ import annotations

from typing import Dict, List, Optional

from pydantic import BaseModel, Field

from ..geometry import TWO_PI


class RowModel(BaseModel):
    experiment: str
    field: str
    i0: float
    grid: str
    value: float
    err_proxy: Optional[float] = None
    extra: Dict[str, str] = Field(default_factory=dict)


class ExperimentResponse(BaseModel):
    rows: List[RowModel]
    csv: str


class InvariantRequest(BaseModel):
    field: str
    i0: float = 1.0
    grid: str = "64,64,64"


class QuantizeRequest(BaseModel):
    field1: str
    field2: str
    i0: float = 1.0
    grid: str = "64,64,64"
    map_tol: float = 1e-4
    samples: int = Field(default=50, ge=1, le=4096)
    scheme: str = "rk4-oracle"
    step: float = Field(default=TWO_PI / 2000.0, gt=0)


class Theorem2Request(BaseModel):
    field: str
    n: int
    k: int = 1
    i0: float = 1.0
    grid: str = "64,64,64"
    samples: int = Field(default=50, ge=1, le=4096)
    scheme: str = "rk4-oracle"
    step: float = Field(default=TWO_PI / 2000.0, gt=0)


class Lemma1Request(BaseModel):
    n: int
    i0: float = 1.0
    eps: List[float] = Field(default_factory=lambda: [0.2, 0.1, 0.05, 0.025])
    grid: str = "64,64,64"


class LinkingRequest(BaseModel):
    field: str
    i0: float = 1.0
    periods: int = Field(default=16, ge=4)
    pairs: int = Field(default=64, ge=16, le=4096)
    seed: int = 0
    workers: int = Field(default=1, ge=1, le=64)


class PoincareRequest(BaseModel):
    field: str
    i0: float = 1.0
    samples: int = Field(default=16, ge=1, le=4096)
    periods: int = Field(default=1, ge=1)


class SelftestRequest(BaseModel):
    criteria: Optional[List[int]] = None
    workers: int = Field(default=1, ge=1, le=64)


class CriterionModel(BaseModel):
    number: int
    name: str
    passed: bool
    detail: str


class SelftestResponse(BaseModel):
    all_passed: bool
    results: List[CriterionModel]
