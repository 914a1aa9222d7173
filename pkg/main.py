"""
PackFlow server: the CLI operations over HTTP, plus the run history.
"""
from contextlib import asynccontextmanager

from fastapi import Depends, FastAPI, Request
from fastapi.responses import JSONResponse
from sqlalchemy.orm import Session

from config import HOST, PORT, setup_logging
from db import get_db, init_db, list_runs
from errors import PackFlowError
from schemas import (
    CanonicalReport,
    CurvatureReport,
    DelaunayReport,
    EquivalenceReport,
    EquivRequest,
    ErrorReport,
    FlowReport,
    ProblemFile,
    RunOut,
    SelfTestReport,
    SelfTestRequest,
    ValidationReport,
)
from solver import solver

STATUS_BY_EXIT = {1: 422, 2: 409, 3: 400}
ERROR_RESPONSES = {status: {"model": ErrorReport} for status in STATUS_BY_EXIT.values()}


@asynccontextmanager
async def lifespan(app: FastAPI):
    setup_logging()
    init_db()
    yield


app = FastAPI(title="PackFlow", version="1.0.0", lifespan=lifespan)


@app.exception_handler(PackFlowError)
async def packflow_error(request: Request, exc: PackFlowError):
    body = ErrorReport(**exc.to_dict())
    return JSONResponse(status_code=STATUS_BY_EXIT.get(exc.exit_code, 500), content=body.model_dump())


# ─── Solver API ──────────────────────────────────────────────────────

@app.post("/api/validate", response_model=ValidationReport, responses=ERROR_RESPONSES)
def validate(body: ProblemFile):
    return solver.validate(body)


@app.post("/api/curvature", response_model=CurvatureReport, responses=ERROR_RESPONSES)
def curvature(body: ProblemFile):
    return solver.curvature(body)


@app.post("/api/delaunayize", response_model=DelaunayReport, responses=ERROR_RESPONSES)
def delaunayize(body: ProblemFile, tol: float | None = None, flip_budget: int | None = None):
    return solver.delaunayize(body, tol=tol, flip_budget=flip_budget)


@app.post("/api/flow", response_model=FlowReport, responses=ERROR_RESPONSES)
def flow(body: ProblemFile, method: str | None = None, tol: float | None = None,
         max_iters: int | None = None, flip_budget: int | None = None):
    report, _ = solver.flow(body, method=method, tol=tol, max_iters=max_iters, flip_budget=flip_budget)
    return report


@app.post("/api/canonical", response_model=CanonicalReport, responses=ERROR_RESPONSES)
def canonical(body: ProblemFile):
    return solver.canonical(body)


@app.post("/api/equiv", response_model=EquivalenceReport, responses=ERROR_RESPONSES)
def equiv(body: EquivRequest):
    return solver.equiv(body.first, body.second, tol=body.tol)


@app.post("/api/selftest", response_model=SelfTestReport, responses=ERROR_RESPONSES)
def selftest(body: SelfTestRequest):
    return solver.selftest(samples=body.samples, seed=body.seed)


# ─── Runs & health ───────────────────────────────────────────────────

@app.get("/api/runs", response_model=list[RunOut])
def runs(limit: int = 50, db: Session = Depends(get_db)):
    return list_runs(limit, db)


@app.get("/api/health")
def health():
    return {"status": "ok", **solver.get_stats()}


if __name__ == "__main__":
    import uvicorn
    uvicorn.run(app, host=HOST, port=PORT)
