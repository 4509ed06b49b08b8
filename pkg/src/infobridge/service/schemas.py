"""Pydantic request/response models for the pricing service."""

from __future__ import annotations

from pydantic import BaseModel, Field


class JobOverrides(BaseModel):
    """Optional job-parameter overrides applied on top of the scenario file."""

    nodes: int | None = Field(default=None, ge=8, description="quadrature nodes per factor")
    grid_steps: int | None = Field(default=None, ge=1, description="time-grid steps")
    eps: float | None = Field(default=None, gt=0.0, description="maturity guard fraction")
    threads: int | None = Field(default=None, ge=1, description="worker threads for MC jobs")
    paths: int | None = Field(default=None, ge=1)
    seed: int | None = None


class PriceRequest(BaseModel):
    scenario: str = Field(description="scenario YAML document")
    at: float | None = Field(default=None, description="valuation time (default 0)")
    xi: str | float | None = Field(
        default=None, description="information level: a number or factor=value pairs"
    )
    path_csv: str | None = Field(
        default=None, description="CSV path of (t, xi_<factor>) rows to price along"
    )
    overrides: JobOverrides = Field(default_factory=JobOverrides)


class SimulateRequest(BaseModel):
    scenario: str
    paths: int | None = Field(default=None, ge=1)
    seed: int | None = None
    overrides: JobOverrides = Field(default_factory=JobOverrides)


class OptionRequest(BaseModel):
    scenario: str
    strike: float = Field(ge=0.0)
    expiry: float = Field(gt=0.0)
    mc_paths: int | None = Field(default=None, ge=2)
    asset_id: str | None = None
    overrides: JobOverrides = Field(default_factory=JobOverrides)


class VerifyRequest(BaseModel):
    scenario: str
    suites: list[str] | None = Field(
        default=None, description="subset of {bridge, filter, consistency, innovation, inverse}"
    )
    overrides: JobOverrides = Field(default_factory=JobOverrides)


class JobResponse(BaseModel):
    outputs: dict[str, str] = Field(description="CSV documents keyed by file name")
    summary: dict
    passed: bool | None = Field(
        default=None, description="verify jobs: True when every check passed"
    )


class HealthResponse(BaseModel):
    status: str
    version: str
