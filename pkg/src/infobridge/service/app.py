"""FastAPI pricing service wrapping the batch jobs."""

from __future__ import annotations

from fastapi import FastAPI, HTTPException

from .. import __version__, jobs
from ..filtering import MassCollapseError
from ..scenario import Scenario, ScenarioError, load_scenario
from .schemas import (
    HealthResponse,
    JobOverrides,
    JobResponse,
    OptionRequest,
    PriceRequest,
    SimulateRequest,
    VerifyRequest,
)


def _scenario(text: str, overrides: JobOverrides) -> Scenario:
    try:
        return load_scenario(text, overrides=overrides.model_dump())
    except ScenarioError as exc:
        raise HTTPException(status_code=422, detail=str(exc)) from exc


def _run(fn, *args, **kwargs) -> JobResponse:
    try:
        result = fn(*args, **kwargs)
    except (jobs.JobError, ScenarioError, ValueError) as exc:
        raise HTTPException(status_code=422, detail=str(exc)) from exc
    except MassCollapseError as exc:
        raise HTTPException(status_code=500, detail=str(exc)) from exc
    return JobResponse(outputs=result.outputs, summary=result.summary, passed=result.passed)


def create_app() -> FastAPI:
    app = FastAPI(
        title="infobridge",
        description="Information-driven asset pricing service",
        version=__version__,
    )

    @app.get("/healthz", response_model=HealthResponse)
    def healthz() -> HealthResponse:
        return HealthResponse(status="ok", version=__version__)

    @app.post("/price", response_model=JobResponse)
    def price(request: PriceRequest) -> JobResponse:
        scenario = _scenario(request.scenario, request.overrides)
        return _run(
            jobs.run_price,
            scenario,
            at=request.at,
            xi=request.xi,
            path_csv=request.path_csv,
        )

    @app.post("/simulate", response_model=JobResponse)
    def simulate(request: SimulateRequest) -> JobResponse:
        scenario = _scenario(request.scenario, request.overrides)
        return _run(jobs.run_simulate, scenario, n_paths=request.paths, seed=request.seed)

    @app.post("/option", response_model=JobResponse)
    def option(request: OptionRequest) -> JobResponse:
        scenario = _scenario(request.scenario, request.overrides)
        return _run(
            jobs.run_option,
            scenario,
            strike=request.strike,
            expiry=request.expiry,
            mc_paths=request.mc_paths,
            asset_id=request.asset_id,
        )

    @app.post("/verify", response_model=JobResponse)
    def verify(request: VerifyRequest) -> JobResponse:
        scenario = _scenario(request.scenario, request.overrides)
        return _run(jobs.run_verify, scenario, suites=request.suites)

    return app


app = create_app()
