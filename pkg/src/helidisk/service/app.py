"""FastAPI service wrapping the experiment runners.

Every endpoint is a stateless, deterministic request -> rows computation;
the response also carries the rendered CSV so remote callers reproduce the
CLI output byte for byte.  Bad requests (including field mini-language
errors) map to 422, numerical/domain failures to 400.

Run with:  uvicorn helidisk.service.app:app
"""

from __future__ import annotations

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from ..acceptance import run_all
from ..errors import FieldSpecError, HelidiskError
from ..experiments import (
    parse_grid,
    rows_to_csv,
    run_invariant,
    run_lemma1_limit,
    run_linking,
    run_poincare,
    run_quantize,
    run_theorem2,
)
from .schemas import (
    CriterionModel,
    ExperimentResponse,
    InvariantRequest,
    Lemma1Request,
    LinkingRequest,
    PoincareRequest,
    QuantizeRequest,
    RowModel,
    SelftestRequest,
    SelftestResponse,
    Theorem2Request,
)


def _response(rows) -> ExperimentResponse:
    return ExperimentResponse(
        rows=[RowModel(**row.as_dict()) for row in rows],
        csv=rows_to_csv(rows),
    )


def create_app() -> FastAPI:
    app = FastAPI(
        title="helicity invariants service",
        description="Helicity-type invariants of time-periodic Hamiltonian "
        "flows on a disk: quadrature, quantization checks, smooth companion "
        "construction, and asymptotic-linking estimates.",
        version="0.1.0",
    )

    @app.exception_handler(FieldSpecError)
    async def _bad_spec(_: Request, exc: FieldSpecError):
        return JSONResponse(status_code=422, content={"detail": str(exc)})

    @app.exception_handler(HelidiskError)
    async def _numerical(_: Request, exc: HelidiskError):
        return JSONResponse(status_code=400, content={"detail": str(exc)})

    @app.get("/healthz")
    def healthz():
        return {"status": "ok"}

    def _invariant(kind: str, req: InvariantRequest) -> ExperimentResponse:
        return _response(run_invariant(kind, req.field, req.i0, parse_grid(req.grid)))

    @app.post("/helicity", response_model=ExperimentResponse)
    def helicity_endpoint(req: InvariantRequest):
        return _invariant("helicity", req)

    @app.post("/form-helicity", response_model=ExperimentResponse)
    def form_helicity_endpoint(req: InvariantRequest):
        return _invariant("form-helicity", req)

    @app.post("/calabi", response_model=ExperimentResponse)
    def calabi_endpoint(req: InvariantRequest):
        return _invariant("calabi", req)

    @app.post("/generalized-calabi", response_model=ExperimentResponse)
    def generalized_calabi_endpoint(req: InvariantRequest):
        return _invariant("generalized-calabi", req)

    @app.post("/quantize", response_model=ExperimentResponse)
    def quantize_endpoint(req: QuantizeRequest):
        rows = run_quantize(
            req.field1,
            req.field2,
            i0=req.i0,
            grid=parse_grid(req.grid),
            map_tol=req.map_tol,
            samples=req.samples,
            scheme=req.scheme,
            step=req.step,
        )
        return _response(rows)

    @app.post("/theorem2", response_model=ExperimentResponse)
    def theorem2_endpoint(req: Theorem2Request):
        rows = run_theorem2(
            req.field,
            n=req.n,
            k=req.k,
            i0=req.i0,
            grid=parse_grid(req.grid),
            samples=req.samples,
            scheme=req.scheme,
            step=req.step,
        )
        return _response(rows)

    @app.post("/lemma1-limit", response_model=ExperimentResponse)
    def lemma1_endpoint(req: Lemma1Request):
        rows = run_lemma1_limit(req.n, i0=req.i0, eps_list=tuple(req.eps), grid=parse_grid(req.grid))
        return _response(rows)

    @app.post("/linking", response_model=ExperimentResponse)
    def linking_endpoint(req: LinkingRequest):
        rows = run_linking(
            req.field,
            i0=req.i0,
            periods=req.periods,
            pairs=req.pairs,
            seed=req.seed,
            workers=req.workers,
        )
        return _response(rows)

    @app.post("/poincare", response_model=ExperimentResponse)
    def poincare_endpoint(req: PoincareRequest):
        rows = run_poincare(req.field, i0=req.i0, samples=req.samples, periods=req.periods)
        return _response(rows)

    @app.post("/selftest", response_model=SelftestResponse)
    def selftest_endpoint(req: SelftestRequest):
        results = run_all(criteria=req.criteria, workers=req.workers, stream=None)
        return SelftestResponse(
            all_passed=all(r.passed for r in results),
            results=[
                CriterionModel(number=r.number, name=r.name, passed=r.passed, detail=r.detail)
                for r in results
            ],
        )

    return app


app = create_app()
