"""Scenario files: market, factors, assets, and job parameters.

One YAML document per scenario (key/value with nested sections).  Payoffs
are arithmetic expressions over factor ids compiled by the payoff grammar.
Validation errors carry the offending field path.
"""

from __future__ import annotations

import dataclasses
import os
from dataclasses import dataclass
from typing import Any, Mapping

import yaml

from .market import DiscountCurve, FlatCurve, FlowSchedule, TabulatedCurve
from .payoff import Payoff, PayoffError
from .pricing import AssetSpec, CashFlowSpec, XFactorSpec
from .priors import (
    DiscreteAtoms,
    Exponential,
    Gamma,
    LogNormalTerminal,
    PriorDistribution,
    StandardNormal,
    Tabulated,
)

#: default order of the gamma factors backing the dividend-growth prior
GROWTH_FACTOR_ORDER = 4


class ScenarioError(ValueError):
    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field


@dataclass(frozen=True)
class JobParams:
    seed: int | None = None
    grid_steps: int = 64
    paths: int = 10_000
    nodes: int = 256
    eps: float = 1e-9
    threads: int = 1

    def require_seed(self) -> int:
        if self.seed is None:
            raise ScenarioError("job.seed", "a seed is mandatory for stochastic jobs")
        return self.seed


@dataclass(frozen=True)
class Scenario:
    curve: DiscountCurve
    factors: Mapping[str, XFactorSpec]
    assets: tuple[AssetSpec, ...]
    job: JobParams

    @property
    def horizon(self) -> float:
        return max(flow.pay_date for asset in self.assets for flow in asset.cash_flows)

    def with_overrides(self, **kwargs) -> "Scenario":
        """New scenario with job parameters replaced (CLI flag overrides).

        The maturity guard cannot be overridden here: it is baked into every
        schedule when the document is parsed, so pass it to ``load_scenario``
        instead.
        """
        if kwargs.get("eps") is not None:
            raise ValueError("override eps at load time (it shapes the parsed schedules)")
        clean = {k: v for k, v in kwargs.items() if v is not None}
        return dataclasses.replace(self, job=dataclasses.replace(self.job, **clean))


def _need(mapping: Mapping[str, Any], key: str, field: str) -> Any:
    if not isinstance(mapping, Mapping):
        raise ScenarioError(field, "expected a mapping")
    if key not in mapping:
        raise ScenarioError(f"{field}.{key}", "missing required key")
    return mapping[key]


def _number(value: Any, field: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ScenarioError(field, f"expected a number, got {value!r}")
    return float(value)


def _parse_curve(node: Any, field: str, base_dir: str) -> DiscountCurve:
    kind = _need(node, "kind", field)
    if kind == "flat":
        return FlatCurve(rate=_number(node.get("rate", 0.0), f"{field}.rate"))
    if kind == "tabulated":
        if "file" in node:
            return TabulatedCurve.from_csv(os.path.join(base_dir, node["file"]))
        points = _need(node, "points", field)
        try:
            times = tuple(_number(p[0], f"{field}.points") for p in points)
            discounts = tuple(_number(p[1], f"{field}.points") for p in points)
            return TabulatedCurve(times, discounts)
        except (TypeError, IndexError) as exc:
            raise ScenarioError(f"{field}.points", "expected rows of [t, P]") from exc
    raise ScenarioError(f"{field}.kind", f"unknown curve kind {kind!r}")


def _parse_prior(node: Any, field: str, maturity: float, base_dir: str) -> PriorDistribution:
    kind = _need(node, "kind", field)
    try:
        if kind == "exponential":
            return Exponential(scale=_number(_need(node, "scale", field), f"{field}.scale"))
        if kind == "gamma":
            return Gamma(
                order=int(_need(node, "order", field)),
                rate=_number(_need(node, "rate", field), f"{field}.rate"),
            )
        if kind == "lognormal":
            return LogNormalTerminal(
                s0=_number(_need(node, "s0", field), f"{field}.s0"),
                rate=_number(node.get("rate", 0.0), f"{field}.rate"),
                vol=_number(_need(node, "vol", field), f"{field}.vol"),
                horizon=_number(node.get("horizon", maturity), f"{field}.horizon"),
            )
        if kind == "standard_normal":
            return StandardNormal()
        if kind == "discrete":
            atoms = _need(node, "atoms", field)
            return DiscreteAtoms(tuple((float(x), float(p)) for x, p in atoms))
        if kind == "tabulated":
            if "file" in node:
                return Tabulated.from_csv(os.path.join(base_dir, node["file"]))
            return Tabulated(
                tuple(float(v) for v in _need(node, "xs", field)),
                tuple(float(v) for v in _need(node, "densities", field)),
            )
        if kind == "growth":
            # dividend-growth factor: gamma scaled to mean 1 + g
            g = _number(_need(node, "g", field), f"{field}.g")
            order = int(node.get("order", GROWTH_FACTOR_ORDER))
            if g <= -1.0:
                raise ScenarioError(f"{field}.g", "growth must exceed -1")
            return Gamma(order=order, rate=order / (1.0 + g))
    except ScenarioError:
        raise
    except (ValueError, TypeError) as exc:
        raise ScenarioError(field, str(exc)) from exc
    raise ScenarioError(f"{field}.kind", f"unknown prior kind {kind!r}")


def _parse_schedule(node: Any, field: str, maturity: float, eps: float, base_dir: str) -> FlowSchedule:
    kind = _need(node, "kind", field)
    try:
        if kind == "constant":
            sched = FlowSchedule.constant(
                _number(_need(node, "sigma", field), f"{field}.sigma"), maturity
            )
        elif kind == "piecewise":
            segments = _need(node, "segments", field)
            from .market import Segment

            segs = []
            for row in segments:
                t0, t1, s0 = float(row[0]), float(row[1]), float(row[2])
                s1 = float(row[3]) if len(row) > 3 else s0
                segs.append(Segment(t0, t1, s0, s1))
            sched = FlowSchedule(tuple(segs), maturity)
        elif kind == "linear":
            sched = FlowSchedule.piecewise_linear(
                [float(v) for v in _need(node, "times", field)],
                [float(v) for v in _need(node, "values", field)],
                maturity,
            )
        elif kind == "file":
            sched = FlowSchedule.from_csv(
                os.path.join(base_dir, _need(node, "file", field)), maturity
            )
        else:
            raise ScenarioError(f"{field}.kind", f"unknown schedule kind {kind!r}")
    except ScenarioError:
        raise
    except (ValueError, TypeError, IndexError) as exc:
        raise ScenarioError(field, str(exc)) from exc
    return dataclasses.replace(sched, maturity_guard=eps)


def _structured_payoff(node: Mapping, field: str, factors: Mapping) -> Payoff:
    """Payoff kinds beyond the arithmetic grammar.

    ``lognormal_growth`` pays s0 * exp(rate*T + vol*sqrt(T)*X - vol^2*T/2)
    of a (typically standard-normal) factor; with the 1/sqrt(T) flow rate
    this is the scenario that reproduces lognormal price dynamics exactly.
    """
    import numpy as np

    kind = _need(node, "kind", field)
    if kind == "lognormal_growth":
        fid = str(_need(node, "factor", field))
        if fid not in factors:
            raise ScenarioError(f"{field}.factor", f"unknown factor {fid!r}")
        horizon = factors[fid].maturity
        s0 = _number(_need(node, "s0", field), f"{field}.s0")
        rate = _number(node.get("rate", 0.0), f"{field}.rate")
        vol = _number(_need(node, "vol", field), f"{field}.vol")

        def pay(x, _s0=s0, _r=rate, _v=vol, _T=horizon):
            return _s0 * np.exp(_r * _T + _v * np.sqrt(_T) * x - 0.5 * _v * _v * _T)

        return Payoff.single_factor(fid, pay)
    raise ScenarioError(f"{field}.kind", f"unknown payoff kind {kind!r}")


def load_scenario(text: str, *, base_dir: str = ".", overrides: Mapping | None = None) -> Scenario:
    """Parse and validate a scenario document.

    ``overrides`` replace job parameters before anything else is built;
    the maturity guard in particular is baked into every schedule at
    construction time, so it must be known up front.
    """
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f"line {mark.line + 1}" if mark is not None else "document"
        raise ScenarioError(where, f"not valid YAML: {exc}") from exc
    if not isinstance(doc, Mapping):
        raise ScenarioError("document", "scenario must be a mapping")

    raw_job = doc.get("job", {}) or {}
    if not isinstance(raw_job, Mapping):
        raise ScenarioError("job", "expected a mapping")
    job_node = dict(raw_job)
    if overrides:
        job_node.update({k: v for k, v in overrides.items() if v is not None})
    known = {f.name for f in dataclasses.fields(JobParams)}
    unknown = set(job_node) - known
    if unknown:
        raise ScenarioError(f"job.{sorted(unknown)[0]}", "unknown job parameter")
    try:
        job = JobParams(**{k: job_node[k] for k in job_node})
    except TypeError as exc:
        raise ScenarioError("job", str(exc)) from exc

    curve = _parse_curve(doc.get("curve", {"kind": "flat", "rate": 0.0}), "curve", base_dir)

    factors: dict[str, XFactorSpec] = {}
    factor_nodes = doc.get("factors")
    if not factor_nodes:
        raise ScenarioError("factors", "at least one factor is required")
    for i, node in enumerate(factor_nodes):
        field = f"factors[{i}]"
        fid = str(_need(node, "id", field))
        if fid in factors:
            raise ScenarioError(f"{field}.id", f"duplicate factor id {fid!r}")
        maturity = _number(_need(node, "maturity", field), f"{field}.maturity")
        prior = _parse_prior(_need(node, "prior", field), f"{field}.prior", maturity, base_dir)
        schedule = _parse_schedule(
            _need(node, "schedule", field), f"{field}.schedule", maturity, job.eps, base_dir
        )
        factors[fid] = XFactorSpec(id=fid, maturity=maturity, prior=prior, schedule=schedule)

    assets: list[AssetSpec] = []
    asset_nodes = doc.get("assets")
    if not asset_nodes:
        raise ScenarioError("assets", "at least one asset is required")
    for i, node in enumerate(asset_nodes):
        field = f"assets[{i}]"
        aid = str(node.get("id", f"asset{i}"))
        flows = []
        for j, fnode in enumerate(_need(node, "flows", field)):
            ffield = f"{field}.flows[{j}]"
            pay_date = _number(_need(fnode, "pay_date", ffield), f"{ffield}.pay_date")
            raw = _need(fnode, "payoff", ffield)
            try:
                if isinstance(raw, Mapping):
                    payoff = _structured_payoff(raw, f"{ffield}.payoff", factors)
                else:
                    payoff = Payoff.parse(str(raw), factors.keys())
            except PayoffError as exc:
                raise ScenarioError(f"{ffield}.payoff", str(exc)) from exc
            for fid in payoff.depends_on:
                if factors[fid].maturity > pay_date + 1e-12:
                    raise ScenarioError(
                        f"{ffield}.payoff",
                        f"factor {fid!r} is revealed at {factors[fid].maturity}, "
                        f"after the pay date {pay_date}",
                    )
            flows.append(CashFlowSpec(pay_date=pay_date, payoff=payoff))
        try:
            assets.append(AssetSpec(id=aid, cash_flows=tuple(flows)))
        except ValueError as exc:
            raise ScenarioError(field, str(exc)) from exc

    return Scenario(curve=curve, factors=factors, assets=tuple(assets), job=job)


def load_scenario_file(path: str) -> Scenario:
    with open(path) as fh:
        return load_scenario(fh.read(), base_dir=os.path.dirname(os.path.abspath(path)))
